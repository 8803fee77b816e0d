#include "detect/supply.hpp"

#include <cmath>
#include <string>

namespace detect {

namespace {

double gbm_increment(const GbmSpec& spec, double value, double dt, Rng& rng) {
    const double drift_term = (spec.drift - 0.5 * spec.volatility * spec.volatility) * dt;
    return value * std::exp(drift_term + spec.volatility * std::sqrt(dt) * rng.normal());
}

}  // namespace

double supply_initial(const SupplyModel& model) {
    return std::visit([](const auto& m) { return m.m_initial; }, model);
}

bool supply_is_stochastic(const SupplyModel& model) {
    return std::holds_alternative<StochasticIncrement>(model);
}

double supply_at(const SupplyModel& model, double time) {
    if (const auto* c = std::get_if<ConstantSupply>(&model)) return c->m_initial;
    if (const auto* s = std::get_if<SimpleIncrement>(&model))
        return (1.0 + s->rate * time) * s->m_initial;
    if (const auto* c = std::get_if<CompoundIncrement>(&model))
        return std::pow(1.0 + c->rate, time) * c->m_initial;
    if (const auto* g = std::get_if<GeneralSupply>(&model)) {
        // tables are step-indexed and must be read through a realization
        return g->path.at_time(time);
    }
    throw Error(ErrorCode::ValidationError,
                "stochastic supply must be read through a realization");
}

void validate_supply(const SupplyModel& model, std::int64_t horizon, double dt) {
    const double m0 = supply_initial(model);
    if (!(m0 > 0.0))
        throw Error(ErrorCode::NonPositiveSupply, "initial maximum supply must be > 0",
                    "supply.m_initial");

    if (const auto* s = std::get_if<SimpleIncrement>(&model)) {
        const double t_max = double(horizon) * dt;
        if (t_max > 0.0 && s->rate <= -1.0 / t_max)
            throw Error(ErrorCode::RateOutOfRange,
                        "simple incrementation rate must exceed -1/t_max", "supply.rate");
    } else if (const auto* c = std::get_if<CompoundIncrement>(&model)) {
        if (c->rate <= -1.0 || c->rate >= 1.0)
            throw Error(ErrorCode::RateOutOfRange,
                        "compound incrementation rate must lie in (-1, 1)", "supply.rate");
    } else if (const auto* st = std::get_if<StochasticIncrement>(&model)) {
        if (!(st->process.initial > 0.0) || st->process.volatility < 0.0)
            throw Error(ErrorCode::RateOutOfRange,
                        "stochastic supply process must start positive with "
                        "nonnegative volatility",
                        "supply.process");
    } else if (const auto* g = std::get_if<GeneralSupply>(&model)) {
        if (g->path.is_table() && std::int64_t(g->path.table_length()) < horizon + 1)
            throw Error(ErrorCode::ValidationError,
                        "general supply table shorter than horizon + 1 steps",
                        "supply.path");
    }

    // positivity over the whole grid (stochastic positivity holds by construction)
    if (!supply_is_stochastic(model)) {
        SupplyRealization probe(model, dt, 0);
        for (std::int64_t k = 0; k <= horizon; ++k) {
            if (!(probe.at_step(k) > 0.0))
                throw Error(ErrorCode::NonPositiveSupply,
                            "maximum supply nonpositive at step " + std::to_string(k),
                            "supply");
        }
        const auto* g = std::get_if<GeneralSupply>(&model);
        if (g && std::abs(probe.at_step(0) - m0) > 1e-9 * m0)
            throw Error(ErrorCode::ValidationError,
                        "general supply path must start at m_initial", "supply.path");
    }
}

MintBurnAllocation control_mechanism_allocation(const TokenomicTaxonomy& taxonomy) {
    MintBurnAllocation alloc;
    alloc.weights.assign(taxonomy.size(), 0.0);
    alloc.weights[taxonomy.control_mechanism_index()] = 1.0;
    return alloc;
}

void validate_allocation(const MintBurnAllocation& alloc, std::size_t n) {
    if (alloc.weights.size() != n)
        throw Error(ErrorCode::ValidationError,
                    "mint/burn weights must cover every category", "mint_burn_weights");
    double sum = 0.0;
    for (double w : alloc.weights) {
        if (w < 0.0)
            throw Error(ErrorCode::ValidationError, "mint/burn weights must be >= 0",
                        "mint_burn_weights");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw Error(ErrorCode::ValidationError, "mint/burn weights must sum to 1",
                    "mint_burn_weights");
}

SupplyRealization::SupplyRealization(const SupplyModel& model, double dt,
                                     std::uint64_t run_seed)
    : model_(model), dt_(dt), rng_(stream_seed(run_seed, "supply")) {
    if (const auto* st = std::get_if<StochasticIncrement>(&model_))
        path_.push_back(st->process.initial * st->m_initial);
}

double SupplyRealization::at_step(std::int64_t step) {
    if (step < 0)
        throw Error(ErrorCode::ValidationError, "supply step must be nonnegative");
    if (const auto* c = std::get_if<ConstantSupply>(&model_)) return c->m_initial;
    if (const auto* s = std::get_if<SimpleIncrement>(&model_))
        return (1.0 + s->rate * double(step) * dt_) * s->m_initial;
    if (const auto* c = std::get_if<CompoundIncrement>(&model_))
        return std::pow(1.0 + c->rate, double(step) * dt_) * c->m_initial;
    if (const auto* g = std::get_if<GeneralSupply>(&model_)) return g->path.at(step, dt_);
    const auto& st = std::get<StochasticIncrement>(model_);
    while (std::int64_t(path_.size()) <= step) {
        const double next = gbm_increment(st.process, path_.back(), dt_, rng_);
        if (!(next > 0.0))
            throw Error(ErrorCode::NonPositiveSupply,
                        "stochastic supply path left the positive range");
        path_.push_back(next);
    }
    return path_[std::size_t(step)];
}

double SupplyRealization::discount_factor(std::int64_t step) {
    return m_initial() / at_step(step);
}

SupplyDelta SupplyRealization::delta(std::int64_t step, const MintBurnAllocation& alloc) {
    if (step < 1)
        throw Error(ErrorCode::ValidationError,
                    "supply delta is defined from the first step onwards");
    const double change = at_step(step) - at_step(step - 1);
    SupplyDelta delta;
    delta.values.assign(alloc.weights.size(), 0.0);
    std::size_t last_nonzero = alloc.weights.size();
    double assigned = 0.0;
    for (std::size_t i = 0; i < alloc.weights.size(); ++i) {
        if (alloc.weights[i] > 0.0) {
            delta.values[i] = alloc.weights[i] * change;
            assigned += delta.values[i];
            last_nonzero = i;
        }
    }
    // the last allocated category absorbs the rounding residue so the sum
    // equals the supply difference to machine precision
    if (last_nonzero < alloc.weights.size())
        delta.values[last_nonzero] += change - assigned;
    return delta;
}

double discount_factor(const SupplyModel& model, double time) {
    return supply_initial(model) / supply_at(model, time);
}

SupplyDelta supply_delta(SupplyRealization& realization, std::int64_t step,
                         const MintBurnAllocation& alloc) {
    return realization.delta(step, alloc);
}

SymmetryReport check_time_translation(const std::vector<WealthVector>& trajectory,
                                      SupplyRealization& realization, double tol) {
    if (trajectory.empty())
        throw Error(ErrorCode::LengthMismatch, "empty trajectory");
    const auto* general = std::get_if<GeneralSupply>(&realization.model());
    if (general && general->path.is_table() &&
        general->path.table_length() < trajectory.size())
        throw Error(ErrorCode::LengthMismatch,
                    "supply table shorter than the trajectory");

    SymmetryReport report;
    report.tolerance = tol;
    const double m0 = realization.m_initial();
    for (std::size_t k = 0; k < trajectory.size(); ++k) {
        const auto& state = trajectory[k];
        double total = 0.0;
        for (double v : state.values) total += v;
        const double m = realization.at_step(state.step);
        const double drift = std::abs(total - m) / m;
        if (drift > report.max_relative_drift) {
            report.max_relative_drift = drift;
            report.worst_step = state.step;
        }
        const double discounted = realization.discount_factor(state.step) * total;
        report.max_discount_drift =
            std::max(report.max_discount_drift, std::abs(discounted - m0) / m0);
    }
    report.passed = report.max_relative_drift <= tol;
    return report;
}

}  // namespace detect

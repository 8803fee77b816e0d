#include "detect/rates.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace detect {

namespace {

bool is_integral(double x) { return std::isfinite(x) && std::floor(x) == x; }

std::string interaction_label(const char* kind, const InteractionType& it) {
    return std::string(kind) + "/" + it.id;
}

double gbm_step(const GbmSpec& spec, double value, double dt, Rng& rng) {
    const double drift_term = (spec.drift - 0.5 * spec.volatility * spec.volatility) * dt;
    return value * std::exp(drift_term + spec.volatility * std::sqrt(dt) * rng.normal());
}

}  // namespace

bool demand_is_probabilistic(const DemandModel& model) {
    return !std::holds_alternative<DemandConstant>(model) &&
           !std::holds_alternative<DemandPath>(model);
}

bool demand_is_process(const DemandModel& model) {
    return std::holds_alternative<GbmSpec>(model);
}

bool demand_is_integer_valued(const DemandModel& model) {
    if (const auto* c = std::get_if<DemandConstant>(&model)) return is_integral(c->value);
    if (const auto* p = std::get_if<DemandPath>(&model)) {
        // only a tabulated or constant path can be certified integer-valued
        if (p->path.is_table()) {
            const auto& vals = std::get<TablePath>(p->path.spec()).values;
            return std::all_of(vals.begin(), vals.end(), is_integral);
        }
        if (const auto* cp = std::get_if<ConstantPath>(&p->path.spec()))
            return is_integral(cp->value);
        return false;
    }
    if (const auto* b = std::get_if<DemandBernoulli>(&model)) return is_integral(b->quantity);
    return std::holds_alternative<DemandBinomial>(model) ||
           std::holds_alternative<DemandPoisson>(model) ||
           std::holds_alternative<DemandUniformInt>(model);
}

double demand_expected_value(const DemandModel& model, std::int64_t step, double dt) {
    if (const auto* c = std::get_if<DemandConstant>(&model)) return c->value;
    if (const auto* p = std::get_if<DemandPath>(&model)) return p->path.at(step, dt);
    if (const auto* b = std::get_if<DemandBernoulli>(&model)) return b->p * b->quantity;
    if (const auto* bn = std::get_if<DemandBinomial>(&model))
        return double(bn->trials) * bn->p;
    if (const auto* po = std::get_if<DemandPoisson>(&model)) return po->mean;
    if (const auto* ui = std::get_if<DemandUniformInt>(&model))
        return 0.5 * (double(ui->lo) + double(ui->hi));
    if (const auto* ur = std::get_if<DemandUniformReal>(&model))
        return 0.5 * (ur->lo + ur->hi);
    if (const auto* ln = std::get_if<DemandLogNormal>(&model))
        return std::exp(ln->mu + 0.5 * ln->sigma * ln->sigma);
    if (const auto* pa = std::get_if<DemandPareto>(&model)) {
        if (pa->alpha <= 1.0)
            throw Error(ErrorCode::UnboundedExpectation,
                        "pareto demand with alpha <= 1 has no finite mean");
        return pa->alpha * pa->xmin / (pa->alpha - 1.0);
    }
    const auto& gbm = std::get<GbmSpec>(model);
    return gbm.initial * std::exp(gbm.drift * double(step) * dt);
}

double demand_standard_deviation(const DemandModel& model, std::int64_t step, double dt) {
    if (std::holds_alternative<DemandConstant>(model) ||
        std::holds_alternative<DemandPath>(model))
        return 0.0;
    if (const auto* b = std::get_if<DemandBernoulli>(&model))
        return b->quantity * std::sqrt(b->p * (1.0 - b->p));
    if (const auto* bn = std::get_if<DemandBinomial>(&model))
        return std::sqrt(double(bn->trials) * bn->p * (1.0 - bn->p));
    if (const auto* po = std::get_if<DemandPoisson>(&model)) return std::sqrt(po->mean);
    if (const auto* ui = std::get_if<DemandUniformInt>(&model)) {
        const double span = double(ui->hi - ui->lo + 1);
        return std::sqrt((span * span - 1.0) / 12.0);
    }
    if (const auto* ur = std::get_if<DemandUniformReal>(&model))
        return (ur->hi - ur->lo) / std::sqrt(12.0);
    if (const auto* ln = std::get_if<DemandLogNormal>(&model)) {
        const double s2 = ln->sigma * ln->sigma;
        return std::sqrt(std::expm1(s2)) * std::exp(ln->mu + 0.5 * s2);
    }
    if (const auto* pa = std::get_if<DemandPareto>(&model)) {
        if (pa->alpha <= 2.0)
            throw Error(ErrorCode::UnboundedExpectation,
                        "pareto demand with alpha <= 2 has no finite variance");
        return pa->xmin * std::sqrt(pa->alpha) /
               ((pa->alpha - 1.0) * std::sqrt(pa->alpha - 2.0));
    }
    const auto& gbm = std::get<GbmSpec>(model);
    const double t = double(step) * dt;
    return gbm.initial * std::exp(gbm.drift * t) *
           std::sqrt(std::expm1(gbm.volatility * gbm.volatility * t));
}

double sample_demand(const DemandModel& model, std::int64_t step, double dt, Rng& rng) {
    if (const auto* c = std::get_if<DemandConstant>(&model)) return c->value;
    if (const auto* p = std::get_if<DemandPath>(&model)) return p->path.at(step, dt);
    if (const auto* b = std::get_if<DemandBernoulli>(&model))
        return rng.bernoulli(b->p) ? b->quantity : 0.0;
    if (const auto* bn = std::get_if<DemandBinomial>(&model))
        return double(rng.binomial(bn->trials, bn->p));
    if (const auto* po = std::get_if<DemandPoisson>(&model))
        return double(rng.poisson(po->mean));
    if (const auto* ui = std::get_if<DemandUniformInt>(&model))
        return double(ui->lo + long(rng.below(std::uint64_t(ui->hi - ui->lo + 1))));
    if (const auto* ur = std::get_if<DemandUniformReal>(&model))
        return rng.uniform(ur->lo, ur->hi);
    if (const auto* ln = std::get_if<DemandLogNormal>(&model))
        return rng.lognormal(ln->mu, ln->sigma);
    if (const auto* pa = std::get_if<DemandPareto>(&model))
        return rng.pareto(pa->alpha, pa->xmin);
    throw Error(ErrorCode::ValidationError,
                "process demand must be sampled through a schedule run");
}

// ---------------------------------------------------------------------------
// Matrix construction
// ---------------------------------------------------------------------------

Matrix beta_from_pair_flows(std::size_t n, const std::vector<PairFlow>& flows,
                            const std::vector<double>& wealth, double max_supply,
                            double dt) {
    if (!(max_supply > 0.0) || !(dt > 0.0))
        throw Error(ErrorCode::ValidationError,
                    "interaction rates need positive supply and step width");
    Matrix beta(n);
    for (const auto& flow : flows) {
        const double f_lo = wealth[flow.lo];
        const double f_hi = wealth[flow.hi];
        if (f_lo <= 0.0 || f_hi <= 0.0)
            throw Error(ErrorCode::ZeroWealthEndpoint,
                        "interaction endpoint with zero wealth at pair (" +
                            std::to_string(flow.lo) + "," + std::to_string(flow.hi) + ")");
        const double rate = (max_supply / dt) * flow.value / (f_lo * f_hi);
        beta(flow.lo, flow.hi) += rate;
        beta(flow.hi, flow.lo) -= rate;
    }
    return beta;
}

Matrix rotation_matrix(std::size_t n, const std::vector<ChannelRate>& channels) {
    Matrix gamma(n);
    for (const auto& ch : channels) {
        if (ch.rate < 0.0)
            throw Error(ErrorCode::NegativeRotationRate,
                        "rotation rate must be nonnegative");
        gamma(ch.to, ch.from) += ch.rate;
    }
    // diagonal of column m is minus the gross outflow rate of category m
    for (std::size_t m = 0; m < n; ++m) {
        double outflow = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != m) outflow += gamma(j, m);
        gamma(m, m) = -outflow;
    }
    return gamma;
}

Matrix beta_static_deterministic(const std::vector<PairFlow>& flows,
                                 const WealthVector& wealth, double max_supply,
                                 double dt) {
    return beta_from_pair_flows(wealth.values.size(), flows, wealth.values, max_supply,
                                dt);
}

Matrix beta_static_probabilistic(const std::vector<DemandModel>& demand,
                                 const std::vector<PriceModel>& price,
                                 const TokenomicTaxonomy& taxonomy,
                                 const WealthVector& wealth, double max_supply,
                                 double dt) {
    std::vector<PairFlow> flows;
    const auto& interactions = taxonomy.interactions();
    for (std::size_t i = 0; i < interactions.size(); ++i) {
        const auto* constant = std::get_if<PriceConstant>(&price[i]);
        if (!constant)
            throw Error(ErrorCode::ValidationError,
                        "static parametrization requires constant prices",
                        "rates.price." + interactions[i].id);
        const double expected = demand_expected_value(demand[i], 0, dt);
        const std::size_t rec = taxonomy.index_of(interactions[i].recipient);
        const std::size_t pay = taxonomy.index_of(interactions[i].payer);
        const double toward_lo =
            (rec < pay ? 1.0 : -1.0) * expected * constant->value;
        flows.push_back({std::min(rec, pay), std::max(rec, pay), toward_lo});
    }
    return beta_from_pair_flows(taxonomy.size(), flows, wealth.values, max_supply, dt);
}

Matrix gamma_static(std::size_t n, const std::vector<ChannelRate>& gross_rates) {
    return rotation_matrix(n, gross_rates);
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

void validate_schedule(const RateSchedule& schedule, const TokenomicTaxonomy& taxonomy,
                       std::int64_t horizon) {
    const auto& interactions = taxonomy.interactions();
    if (schedule.demand.size() != interactions.size() ||
        schedule.price.size() != interactions.size())
        throw Error(ErrorCode::ValidationError,
                    "one demand and one price model required per interaction type",
                    "rates");
    if (schedule.rotation.size() != taxonomy.rotations().size())
        throw Error(ErrorCode::ValidationError,
                    "one rotation model required per rotation channel", "rates.rotation");

    const bool is_static = schedule.mode == RateMode::StaticDeterministic ||
                           schedule.mode == RateMode::StaticProbabilistic;

    if (is_static && schedule.dynamic_kind == DynamicKind::Reactive)
        throw Error(ErrorCode::ValidationError,
                    "static modes cannot be reactive", "rates.dynamic_kind");
    if (schedule.dynamic_kind == DynamicKind::Reactive &&
        std::holds_alternative<std::monostate>(schedule.reactive))
        throw Error(ErrorCode::ValidationError,
                    "reactive schedule requires a reactive rule", "rates.reactive");
    if (schedule.dynamic_kind == DynamicKind::Proactive &&
        !std::holds_alternative<std::monostate>(schedule.reactive))
        throw Error(ErrorCode::ValidationError,
                    "reactive rule given but dynamic_kind is proactive",
                    "rates.reactive");
    if (!is_static && !schedule.direct_beta.empty())
        throw Error(ErrorCode::ValidationError,
                    "direct interaction-rate entries are only valid in static modes",
                    "rates.beta");
    for (const auto& entry : schedule.direct_beta) {
        if (entry.row >= taxonomy.size() || entry.col >= taxonomy.size() ||
            entry.row == entry.col)
            throw Error(ErrorCode::ValidationError, "invalid direct beta entry",
                        "rates.beta");
    }

    auto table_too_short = [&](const TimePath& path, std::int64_t needed) {
        return path.is_table() && std::int64_t(path.table_length()) < needed;
    };

    for (std::size_t i = 0; i < interactions.size(); ++i) {
        const auto& it = interactions[i];
        const auto& dm = schedule.demand[i];
        const std::string field = "rates.demand." + it.id;

        if (schedule.mode == RateMode::StaticDeterministic && demand_is_probabilistic(dm))
            throw Error(ErrorCode::ValidationError,
                        "static deterministic mode requires deterministic demand", field);
        if (is_static && demand_is_process(dm))
            throw Error(ErrorCode::ValidationError,
                        "static modes cannot use stochastic-process demand", field);
        if (schedule.mode == RateMode::DynamicDeterministic && demand_is_probabilistic(dm))
            throw Error(ErrorCode::ValidationError,
                        "dynamic deterministic mode requires deterministic demand",
                        field);
        if (schedule.mode == RateMode::StaticProbabilistic)
            demand_expected_value(dm, 0, 1.0);  // throws UnboundedExpectation

        if (it.granularity == DemandGranularity::Integer && !demand_is_integer_valued(dm))
            throw Error(ErrorCode::ValidationError,
                        "integer-granularity interaction requires an integer-valued "
                        "demand model",
                        field);

        if (const auto* pd = std::get_if<DemandPath>(&dm))
            if (table_too_short(pd->path, horizon))
                throw Error(ErrorCode::ValidationError,
                            "demand table shorter than scenario horizon", field);

        const auto& pm = schedule.price[i];
        const std::string pfield = "rates.price." + it.id;
        if (is_static && !std::holds_alternative<PriceConstant>(pm))
            throw Error(ErrorCode::ValidationError,
                        "static modes require constant prices", pfield);
        if (schedule.mode == RateMode::DynamicDeterministic &&
            std::holds_alternative<GbmSpec>(pm))
            throw Error(ErrorCode::ValidationError,
                        "dynamic deterministic mode requires deterministic prices",
                        pfield);
        if (const auto* pc = std::get_if<PriceConstant>(&pm)) {
            if (pc->value < 0.0)
                throw Error(ErrorCode::ValidationError, "price must be nonnegative",
                            pfield);
        }
        if (const auto* pp = std::get_if<PricePath>(&pm))
            if (table_too_short(pp->path, horizon))
                throw Error(ErrorCode::ValidationError,
                            "price table shorter than scenario horizon", pfield);
    }

    for (std::size_t c = 0; c < schedule.rotation.size(); ++c) {
        const auto& rm = schedule.rotation[c];
        const auto& ch = taxonomy.rotations()[c];
        const std::string field = "rates.rotation." + ch.from + "->" + ch.to;
        if (is_static && !std::holds_alternative<RotationConstant>(rm))
            throw Error(ErrorCode::ValidationError,
                        "static modes require constant rotation rates", field);
        if (schedule.mode == RateMode::DynamicDeterministic &&
            std::holds_alternative<GbmSpec>(rm))
            throw Error(ErrorCode::ValidationError,
                        "dynamic deterministic mode requires deterministic rotation "
                        "rates",
                        field);
        if (const auto* rc = std::get_if<RotationConstant>(&rm)) {
            if (rc->rate < 0.0)
                throw Error(ErrorCode::NegativeRotationRate,
                            "rotation rate must be nonnegative", field);
        }
        if (const auto* rp = std::get_if<RotationPath>(&rm))
            if (table_too_short(rp->path, horizon))
                throw Error(ErrorCode::ValidationError,
                            "rotation table shorter than scenario horizon", field);
    }
}

// ---------------------------------------------------------------------------
// ScheduleRun
// ---------------------------------------------------------------------------

ScheduleRun::ScheduleRun(const RateSchedule& schedule, const TokenomicTaxonomy& taxonomy,
                         const WealthVector& initial_wealth, double initial_supply,
                         double dt, std::uint64_t run_seed)
    : schedule_(schedule), taxonomy_(taxonomy), dt_(dt) {
    const auto& interactions = taxonomy.interactions();
    demand_state_.reserve(interactions.size());
    price_state_.reserve(interactions.size());
    for (const auto& it : interactions) {
        demand_state_.push_back(
            {Rng(stream_seed(run_seed, interaction_label("demand", it))), -1, 0.0});
        price_state_.push_back(
            {Rng(stream_seed(run_seed, interaction_label("price", it))), -1, 0.0});
    }
    for (const auto& ch : taxonomy.rotations()) {
        rotation_state_.push_back(
            {Rng(stream_seed(run_seed, "rotation/" + ch.from + "->" + ch.to)), -1, 0.0});
    }
    // processes start at their declared initial value
    for (std::size_t i = 0; i < interactions.size(); ++i) {
        if (const auto* gbm = std::get_if<GbmSpec>(&schedule_.demand[i])) {
            demand_state_[i].step = 0;
            demand_state_[i].value = gbm->initial;
        }
        if (const auto* gbm = std::get_if<GbmSpec>(&schedule_.price[i])) {
            price_state_[i].step = 0;
            price_state_[i].value = gbm->initial;
        }
    }
    for (std::size_t c = 0; c < schedule_.rotation.size(); ++c) {
        if (const auto* gbm = std::get_if<GbmSpec>(&schedule_.rotation[c])) {
            rotation_state_[c].step = 0;
            rotation_state_[c].value = gbm->initial;
        }
    }

    const bool is_static = schedule_.mode == RateMode::StaticDeterministic ||
                           schedule_.mode == RateMode::StaticProbabilistic;
    if (is_static) {
        std::vector<PairFlow> flows;
        for (std::size_t i = 0; i < interactions.size(); ++i) {
            const auto& it = interactions[i];
            // deterministic demand: value at t0; probabilistic: expected value
            const double d = demand_expected_value(schedule_.demand[i], 0, dt_);
            const auto* pc = std::get_if<PriceConstant>(&schedule_.price[i]);
            if (!pc)
                throw Error(ErrorCode::ValidationError,
                            "static parametrization requires constant prices",
                            "rates.price." + it.id);
            const std::size_t rec = taxonomy.index_of(it.recipient);
            const std::size_t pay = taxonomy.index_of(it.payer);
            const double toward_lo = (rec < pay ? 1.0 : -1.0) * d * pc->value;
            flows.push_back({std::min(rec, pay), std::max(rec, pay), toward_lo});
        }
        Matrix beta = beta_from_pair_flows(taxonomy.size(), flows, initial_wealth.values,
                                           initial_supply, dt_);
        for (const auto& entry : schedule_.direct_beta) {
            beta(entry.row, entry.col) += entry.value;
            beta(entry.col, entry.row) -= entry.value;
        }
        std::vector<ChannelRate> channels;
        for (std::size_t c = 0; c < schedule_.rotation.size(); ++c) {
            const auto* rc = std::get_if<RotationConstant>(&schedule_.rotation[c]);
            if (!rc)
                throw Error(ErrorCode::ValidationError,
                            "static modes require constant rotation rates");
            const auto& ch = taxonomy.rotations()[c];
            channels.push_back(
                {taxonomy.index_of(ch.from), taxonomy.index_of(ch.to), rc->rate});
        }
        static_pair_ = {std::move(beta), rotation_matrix(taxonomy.size(), channels)};
    }
}

double ScheduleRun::demand_at(std::size_t index, std::int64_t step) {
    const auto& model = schedule_.demand[index];
    auto& state = demand_state_[index];
    if (const auto* gbm = std::get_if<GbmSpec>(&model)) {
        if (step < state.step)
            throw Error(ErrorCode::ProcessExhausted,
                        "stochastic demand process cannot step backwards");
        while (state.step < step) {
            state.value = gbm_step(*gbm, state.value, dt_, state.rng);
            ++state.step;
        }
        return state.value;
    }
    if (!demand_is_probabilistic(model))
        return demand_expected_value(model, step, dt_);
    if (state.step != step) {
        state.value = sample_demand(model, step, dt_, state.rng);
        state.step = step;
    }
    return state.value;
}

double ScheduleRun::price_at(std::size_t index, std::int64_t step) {
    const auto& model = schedule_.price[index];
    auto& state = price_state_[index];
    if (const auto* pc = std::get_if<PriceConstant>(&model)) return pc->value;
    if (const auto* pp = std::get_if<PricePath>(&model)) return pp->path.at(step, dt_);
    const auto& gbm = std::get<GbmSpec>(model);
    if (step < state.step)
        throw Error(ErrorCode::ProcessExhausted,
                    "stochastic price process cannot step backwards");
    while (state.step < step) {
        state.value = gbm_step(gbm, state.value, dt_, state.rng);
        ++state.step;
    }
    return state.value;
}

double ScheduleRun::rotation_at(std::size_t index, std::int64_t step) {
    const auto& model = schedule_.rotation[index];
    auto& state = rotation_state_[index];
    if (const auto* rc = std::get_if<RotationConstant>(&model)) return rc->rate;
    if (const auto* rp = std::get_if<RotationPath>(&model)) return rp->path.at(step, dt_);
    const auto& gbm = std::get<GbmSpec>(model);
    if (step < state.step)
        throw Error(ErrorCode::ProcessExhausted,
                    "stochastic rotation process cannot step backwards");
    while (state.step < step) {
        state.value = gbm_step(gbm, state.value, dt_, state.rng);
        ++state.step;
    }
    return state.value;
}

double ScheduleRun::reactive_scale(const std::vector<double>& wealth,
                                   double max_supply) const {
    if (schedule_.dynamic_kind != DynamicKind::Reactive) return 1.0;
    const double circulating =
        max_supply - wealth[taxonomy_.control_mechanism_index()];
    const double share = max_supply > 0.0 ? circulating / max_supply : 0.0;
    if (const auto* affine = std::get_if<ReactiveAffine>(&schedule_.reactive))
        return std::max(0.0, affine->offset + affine->slope * share);
    if (const auto* table = std::get_if<ReactiveTable>(&schedule_.reactive)) {
        const auto& pts = table->points;
        if (pts.empty()) return 1.0;
        if (share <= pts.front().first) return std::max(0.0, pts.front().second);
        if (share >= pts.back().first) return std::max(0.0, pts.back().second);
        for (std::size_t k = 1; k < pts.size(); ++k) {
            if (share <= pts[k].first) {
                const double w =
                    (share - pts[k - 1].first) / (pts[k].first - pts[k - 1].first);
                return std::max(0.0,
                                pts[k - 1].second + w * (pts[k].second - pts[k - 1].second));
            }
        }
    }
    return 1.0;
}

std::pair<Matrix, Matrix> ScheduleRun::materialize(std::int64_t step,
                                                   const std::vector<double>& wealth,
                                                   double max_supply) {
    if (static_pair_) return *static_pair_;
    if (cached_step_ == step && cached_pair_) return *cached_pair_;

    const double scale = reactive_scale(wealth, max_supply);
    const auto& interactions = taxonomy_.interactions();
    std::vector<PairFlow> flows;
    flows.reserve(interactions.size());
    for (std::size_t i = 0; i < interactions.size(); ++i) {
        const auto& it = interactions[i];
        const std::size_t rec = taxonomy_.index_of(it.recipient);
        const std::size_t pay = taxonomy_.index_of(it.payer);
        if (wealth[rec] <= 0.0 || wealth[pay] <= 0.0)
            throw Error(ErrorCode::ZeroWealthEndpoint,
                        "interaction " + it.id + " has an endpoint with zero wealth");

        const double demand = demand_at(i, step);
        const double price = price_at(i, step);
        if (demand < 0.0 || price < 0.0)
            throw Error(ErrorCode::InfeasibleSample,
                        "negative demand or price for interaction " + it.id);
        if (it.granularity == DemandGranularity::Integer && !is_integral(demand))
            throw Error(ErrorCode::InfeasibleSample,
                        "non-integer demand sampled for integer interaction " + it.id);

        const double flow = demand * price * scale;
        if (std::abs(flow) > wealth[rec] + wealth[pay])
            throw Error(ErrorCode::InfeasibleSample,
                        "flow exceeds combined endpoint wealth for interaction " + it.id);
        const double toward_lo = (rec < pay ? 1.0 : -1.0) * flow;
        flows.push_back({std::min(rec, pay), std::max(rec, pay), toward_lo});
    }
    Matrix beta =
        beta_from_pair_flows(taxonomy_.size(), flows, wealth, max_supply, dt_);

    std::vector<ChannelRate> channels;
    channels.reserve(schedule_.rotation.size());
    for (std::size_t c = 0; c < schedule_.rotation.size(); ++c) {
        const auto& ch = taxonomy_.rotations()[c];
        const double rate = rotation_at(c, step) * scale;
        if (rate < 0.0)
            throw Error(ErrorCode::NegativeRotationRate,
                        "negative rotation rate for channel " + ch.from + "->" + ch.to);
        channels.push_back({taxonomy_.index_of(ch.from), taxonomy_.index_of(ch.to), rate});
    }
    Matrix gamma = rotation_matrix(taxonomy_.size(), channels);

    cached_step_ = step;
    cached_pair_ = {std::move(beta), std::move(gamma)};
    return *cached_pair_;
}

}  // namespace detect

#include "detect/kinetic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace detect {

void validate_kinetic_model(const KineticModel& model, std::size_t agent_count) {
    if (const auto* gs = std::get_if<GlobalSaving>(&model)) {
        if (!(gs->lambda > 0.0) || !(gs->lambda < 1.0))
            throw Error(ErrorCode::LambdaOutOfRange,
                        "global saving propensity must lie in (0, 1)");
    } else if (const auto* is = std::get_if<IndividualSaving>(&model)) {
        if (!is->lambdas.empty() && is->lambdas.size() != agent_count)
            throw Error(ErrorCode::ValidationError,
                        "individual saving propensities must cover every agent");
        for (double lambda : is->lambdas)
            if (!(lambda > 0.0) || !(lambda < 1.0))
                throw Error(ErrorCode::LambdaOutOfRange,
                            "individual saving propensities must lie in (0, 1)");
    }
}

PairResult pair_step(const KineticModel& model, double x_j, double x_k, double lambda_j,
                     double lambda_k, double eps) {
    const double total = x_j + x_k;
    double next_j = 0.0;

    if (std::holds_alternative<NoSaving>(model)) {
        next_j = eps * total;
    } else if (std::holds_alternative<MinInvestment>(model)) {
        const double stake = std::min(x_j, x_k);
        next_j = x_j + (2.0 * eps - 1.0) * stake;
    } else if (const auto* gs = std::get_if<GlobalSaving>(&model)) {
        next_j = gs->lambda * x_j + eps * (1.0 - gs->lambda) * total;
    } else {
        const double pool = (1.0 - lambda_j) * x_j + (1.0 - lambda_k) * x_k;
        next_j = lambda_j * x_j + eps * pool;
    }

    // complement against the pair total so the sum is preserved exactly;
    // the final rounding can leave a -ulp which is shifted to the partner
    double next_k = total - next_j;
    next_j = total - next_k;
    if (next_k < 0.0) {
        next_k = 0.0;
        next_j = total;
    }
    if (next_j < 0.0) {
        next_j = 0.0;
        next_k = total;
    }
    return {next_j, next_k};
}

KineticResult run_kinetic(const KineticModel& model, const KineticConfig& config,
                          const EpsilonSource& eps_override) {
    if (config.agents < 2)
        throw Error(ErrorCode::ValidationError, "kinetic run needs at least two agents",
                    "kinetic.agents");
    if (!(config.total_wealth > 0.0))
        throw Error(ErrorCode::ValidationError, "total wealth must be positive",
                    "kinetic.total_wealth");
    if (config.steps < 1)
        throw Error(ErrorCode::ValidationError, "kinetic run needs at least one step",
                    "kinetic.steps");
    validate_kinetic_model(model, config.agents);

    std::vector<double> wealth;
    if (config.initial_wealth.empty()) {
        wealth.assign(config.agents, config.total_wealth / double(config.agents));
    } else {
        if (config.initial_wealth.size() != config.agents)
            throw Error(ErrorCode::ValidationError,
                        "initial wealth list must cover every agent",
                        "kinetic.initial_wealth");
        wealth = config.initial_wealth;
        for (double w : wealth)
            if (w < 0.0)
                throw Error(ErrorCode::ValidationError,
                            "agent wealth must be nonnegative",
                            "kinetic.initial_wealth");
    }

    KineticResult result;

    Rng pair_rng(stream_seed(config.seed, "kinetic/pairs"));
    Rng eps_rng(stream_seed(config.seed, "kinetic/eps"));

    // individual saving propensities: declared, or U(0,1) i.i.d. per run
    std::vector<double> lambdas;
    const bool individual = std::holds_alternative<IndividualSaving>(model);
    const auto* gs = std::get_if<GlobalSaving>(&model);
    if (individual) {
        const auto& is = std::get<IndividualSaving>(model);
        if (is.lambdas.empty()) {
            Rng lambda_rng(stream_seed(config.seed, "kinetic/lambdas"));
            lambdas.resize(config.agents);
            for (auto& lambda : lambdas) {
                do {
                    lambda = lambda_rng.uniform();
                } while (lambda == 0.0);
            }
        } else {
            lambdas = is.lambdas;
        }
        result.lambdas = lambdas;
    } else if (gs) {
        result.lambdas.assign(config.agents, gs->lambda);
    }

    auto snapshot = [&](std::int64_t at_step) {
        result.snapshots.push_back({at_step, wealth});
    };

    const std::size_t n = config.agents;
    for (std::int64_t s = 0; s < config.steps; ++s) {
        const std::size_t j = std::size_t(pair_rng.below(n));
        std::size_t k = std::size_t(pair_rng.below(n - 1));
        if (k >= j) ++k;

        const double eps = eps_override ? eps_override(s) : eps_rng.uniform();
        const double lj = individual ? lambdas[j] : (gs ? gs->lambda : 0.0);
        const double lk = individual ? lambdas[k] : (gs ? gs->lambda : 0.0);
        const PairResult out = pair_step(model, wealth[j], wealth[k], lj, lk, eps);
        wealth[j] = out.first;
        wealth[k] = out.second;

        if (config.snapshot_every > 0 && (s + 1) % config.snapshot_every == 0 &&
            s + 1 != config.steps)
            snapshot(s + 1);
    }
    snapshot(config.steps);
    return result;
}

Matrix kinetic_to_macro(const std::vector<double>& wealth,
                        const std::vector<PairDelta>& deltas, double max_supply,
                        double dt) {
    const std::size_t n = wealth.size();
    Matrix beta(n);
    for (const auto& delta : deltas) {
        if (delta.change_j == 0.0) continue;
        const double f_j = wealth[delta.j];
        const double f_k = wealth[delta.k];
        if (f_j <= 0.0 || f_k <= 0.0)
            throw Error(ErrorCode::ZeroWealthEndpoint,
                        "transacting agent with zero wealth cannot be expressed as a "
                        "rate");
        const double rate = (max_supply / dt) * delta.change_j / (f_j * f_k);
        beta(delta.j, delta.k) += rate;
        beta(delta.k, delta.j) -= rate;
    }
    return beta;
}

}  // namespace detect

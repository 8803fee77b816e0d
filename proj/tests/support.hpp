#pragma once

// Shared fixtures for the unit and acceptance suites: random rate systems,
// forward equilibration, and round-trip inverse problems.

#include <cmath>
#include <vector>

#include "detect/inverse.hpp"
#include "detect/macro.hpp"
#include "detect/rng.hpp"

namespace detect::testing {

struct RateSystem {
    std::vector<BetaParam> beta;    // every unordered pair, with values
    std::vector<GammaParam> gamma;  // every directed channel, with values
    Matrix interaction;
    Matrix rotation;
};

// Rotation-dominated random system: complete rotation graph with moderate
// rates plus a weak antisymmetric interaction layer, so the equilibrium is
// interior and attracting.
inline RateSystem random_rate_system(std::size_t n, Rng& rng, double beta_scale = 0.02,
                                     double gamma_lo = 0.05, double gamma_hi = 0.25) {
    RateSystem system;
    system.interaction = Matrix(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double value = beta_scale * (2.0 * rng.uniform() - 1.0);
            system.beta.push_back({i, j, false, value});
            system.interaction(i, j) = value;
            system.interaction(j, i) = -value;
        }
    }
    std::vector<ChannelRate> channels;
    for (std::size_t from = 0; from < n; ++from) {
        for (std::size_t to = 0; to < n; ++to) {
            if (from == to) continue;
            const double rate = rng.uniform(gamma_lo, gamma_hi);
            system.gamma.push_back({from, to, false, rate});
            channels.push_back({from, to, rate});
        }
    }
    system.rotation = rotation_matrix(n, channels);
    return system;
}

// Forward-simulates to the attractor; returns the final wealth vector.
inline std::vector<double> equilibrate(const Matrix& interaction, const Matrix& rotation,
                                       double max_supply, std::vector<double> start,
                                       std::int64_t steps = 4000) {
    MacroRunConfig config;
    config.horizon = steps;
    config.dt = 1.0;
    MintBurnAllocation alloc;
    alloc.weights.assign(start.size(), 0.0);
    alloc.weights[0] = 1.0;
    const Trajectory trajectory = simulate_constant_rates(
        interaction, rotation, ConstantSupply{max_supply}, alloc, {start, 0}, config);
    return trajectory.states.back().wealth.values;
}

// Round-trip fixture: equilibrium of a known system, with a random subset of
// entries left free for the solver to recover. The fixed remainder keeps its
// known values, so the defect the free entries must cancel is nonzero.
inline InverseProblem roundtrip_problem(const RateSystem& system,
                                        const std::vector<double>& target,
                                        double max_supply, Rng& rng,
                                        double free_probability = 0.4) {
    InverseProblem problem;
    problem.n = target.size();
    problem.target = target;
    problem.max_supply = max_supply;
    problem.regularization = 0.0;  // pure minimum-norm tie-break
    problem.beta = system.beta;
    problem.gamma = system.gamma;

    bool any_free = false;
    for (auto& b : problem.beta) {
        if (rng.uniform() < free_probability) {
            b.free = true;
            any_free = true;
        }
    }
    for (auto& g : problem.gamma) {
        if (rng.uniform() < free_probability) {
            g.free = true;
            any_free = true;
        }
    }
    if (!any_free) problem.gamma.front().free = true;
    return problem;
}

}  // namespace detect::testing

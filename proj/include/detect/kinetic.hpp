#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "detect/matrix.hpp"
#include "detect/rng.hpp"
#include "detect/taxonomy.hpp"

namespace detect {

// Pairwise wealth-exchange models. Every rule conserves the pair total
// exactly and keeps both wealths nonnegative.
struct NoSaving {};
struct MinInvestment {};
struct GlobalSaving {
    double lambda = 0.5;  // in (0, 1)
};
struct IndividualSaving {
    // empty: lambda_j ~ U(0,1) drawn per run; otherwise one value per agent
    std::vector<double> lambdas;
};

using KineticModel = std::variant<NoSaving, MinInvestment, GlobalSaving, IndividualSaving>;

void validate_kinetic_model(const KineticModel& model, std::size_t agent_count);

struct PairResult {
    double first = 0.0;
    double second = 0.0;
};

// One transaction between wealths (x_j, x_k) with uniform draw eps.
// lambda_j / lambda_k are read only by the saving-propensity rules.
PairResult pair_step(const KineticModel& model, double x_j, double x_k, double lambda_j,
                     double lambda_k, double eps);

struct KineticConfig {
    std::size_t agents = 0;
    double total_wealth = 0.0;
    std::int64_t steps = 0;
    std::int64_t snapshot_every = 0;   // 0: only the final snapshot
    std::uint64_t seed = 0;
    std::vector<double> initial_wealth;  // empty: equal split total/agents
};

struct KineticSnapshot {
    std::int64_t step = 0;
    std::vector<double> wealth;
};

struct KineticResult {
    std::vector<KineticSnapshot> snapshots;  // always includes the final state
    std::vector<double> lambdas;             // filled for saving-propensity models
};

// Test seam: when set, overrides the uniform eps draw (pair selection still
// comes from the run's stream).
using EpsilonSource = std::function<double(std::int64_t step)>;

// Monte Carlo run: one uniformly random distinct pair transacts per step.
KineticResult run_kinetic(const KineticModel& model, const KineticConfig& config,
                          const EpsilonSource& eps_override = {});

// A single transaction expressed as macro inputs: net pair flows -> B(t) for
// the singleton-category taxonomy, so the macro recurrence reproduces the
// kinetic update.
struct PairDelta {
    std::size_t j = 0;
    std::size_t k = 0;
    double change_j = 0.0;  // wealth change of agent j; agent k gets the negative
};

Matrix kinetic_to_macro(const std::vector<double>& wealth,
                        const std::vector<PairDelta>& deltas, double max_supply,
                        double dt);

}  // namespace detect

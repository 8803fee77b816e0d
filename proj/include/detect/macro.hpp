#pragma once

#include <cstdint>
#include <vector>

#include "detect/matrix.hpp"
#include "detect/rates.hpp"
#include "detect/supply.hpp"
#include "detect/taxonomy.hpp"

namespace detect {

struct MacroState {
    WealthVector wealth;
    double max_supply = 0.0;  // M at wealth.step
};

struct Trajectory {
    std::vector<MacroState> states;
    double dt = 1.0;
};

// One forward finite-difference step of the compartmental system:
//   F' = F + dt * [ (1/M(t)) F (.) (B F) + Gamma F ] + G(t+dt).
// Requires B antisymmetric and Gamma zero-column-sum. Negative entries are a
// hard error; clamping would silently break conservation.
MacroState step(const MacroState& state, const Matrix& interaction,
                const Matrix& rotation, SupplyRealization& supply,
                const MintBurnAllocation& alloc, double dt);

// Singleton-category reduction: the transaction-rule form of the same
// recurrence, used as the macro<->kinetic bridge. Expects Gamma = 0 and
// constant supply.
WealthVector transaction_rule_reduce(const WealthVector& wealth,
                                     const Matrix& interaction, double max_supply,
                                     double dt);

struct MacroRunConfig {
    std::int64_t horizon = 0;
    double dt = 1.0;
    std::uint64_t run_seed = 0;
    double conservation_tolerance = 1e-9;  // relative, re-checked every step
};

// Full trajectory under a rate schedule and supply model. Deterministic
// given (inputs, seed).
Trajectory simulate(const TokenomicTaxonomy& taxonomy, const RateSchedule& schedule,
                    const SupplyModel& supply_model, const MintBurnAllocation& alloc,
                    const WealthVector& initial_wealth, const MacroRunConfig& config);

// Same, against caller-provided constant matrices (no schedule machinery).
Trajectory simulate_constant_rates(const Matrix& interaction, const Matrix& rotation,
                                   const SupplyModel& supply_model,
                                   const MintBurnAllocation& alloc,
                                   const WealthVector& initial_wealth,
                                   const MacroRunConfig& config);

}  // namespace detect

#include "detect/macro.hpp"

#include <cmath>
#include <string>

namespace detect {

namespace {

// F (.) (B F), the wealth-weighted interaction flow.
std::vector<double> interaction_term(const std::vector<double>& wealth,
                                     const Matrix& interaction) {
    std::vector<double> bf = interaction.apply(wealth);
    for (std::size_t i = 0; i < wealth.size(); ++i) bf[i] *= wealth[i];
    return bf;
}

void check_nonnegative(const std::vector<double>& values, std::int64_t step,
                       ErrorCode code, const char* what) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] < 0.0)
            throw Error(code, std::string(what) + " drove category " +
                                  std::to_string(i) + " negative at step " +
                                  std::to_string(step));
    }
}

}  // namespace

MacroState step(const MacroState& state, const Matrix& interaction,
                const Matrix& rotation, SupplyRealization& supply,
                const MintBurnAllocation& alloc, double dt) {
    const auto& wealth = state.wealth.values;
    const std::size_t n = wealth.size();
    const std::int64_t next_step = state.wealth.step + 1;

    const std::vector<double> flow = interaction_term(wealth, interaction);
    const std::vector<double> rotated = rotation.apply(wealth);

    MacroState next;
    next.wealth.step = next_step;
    next.wealth.values.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        next.wealth.values[i] =
            wealth[i] + dt * (flow[i] / state.max_supply + rotated[i]);
    check_nonnegative(next.wealth.values, next_step, ErrorCode::NegativeWealth,
                      "interaction/rotation step");

    const SupplyDelta delta = supply.delta(next_step, alloc);
    for (std::size_t i = 0; i < n; ++i) next.wealth.values[i] += delta.values[i];
    check_nonnegative(next.wealth.values, next_step,
                      ErrorCode::InsufficientWealthForBurn, "supply decrement");

    next.max_supply = supply.at_step(next_step);
    return next;
}

WealthVector transaction_rule_reduce(const WealthVector& wealth,
                                     const Matrix& interaction, double max_supply,
                                     double dt) {
    const std::size_t n = wealth.values.size();
    WealthVector next;
    next.step = wealth.step + 1;
    next.values.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        double exchanged = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (k == j) continue;
            exchanged += interaction(j, k) * wealth.values[k];
        }
        next.values[j] =
            wealth.values[j] + (dt / max_supply) * wealth.values[j] * exchanged;
    }
    check_nonnegative(next.values, next.step, ErrorCode::NegativeWealth,
                      "transaction rule");
    return next;
}

namespace {

Trajectory run_simulation(const TokenomicTaxonomy* taxonomy,
                          const RateSchedule* schedule, const Matrix* fixed_interaction,
                          const Matrix* fixed_rotation, const SupplyModel& supply_model,
                          const MintBurnAllocation& alloc,
                          const WealthVector& initial_wealth,
                          const MacroRunConfig& config) {
    SupplyRealization supply(supply_model, config.dt, config.run_seed);

    MacroState state;
    state.wealth = initial_wealth;
    state.wealth.step = 0;
    state.max_supply = supply.at_step(0);

    double total0 = 0.0;
    for (double v : state.wealth.values) total0 += v;
    if (std::abs(total0 - state.max_supply) > 1e-9 * state.max_supply)
        throw Error(ErrorCode::ValidationError,
                    "initial wealth must sum to the initial maximum supply",
                    "initial_wealth");

    std::optional<ScheduleRun> schedule_run;
    if (schedule)
        schedule_run.emplace(*schedule, *taxonomy, state.wealth, state.max_supply,
                             config.dt, config.run_seed);

    Trajectory trajectory;
    trajectory.dt = config.dt;
    trajectory.states.reserve(std::size_t(config.horizon) + 1);
    trajectory.states.push_back(state);

    for (std::int64_t k = 0; k < config.horizon; ++k) {
        MacroState next;
        if (schedule_run) {
            auto [beta, gamma] =
                schedule_run->materialize(k, state.wealth.values, state.max_supply);
            next = step(state, beta, gamma, supply, alloc, config.dt);
        } else {
            next = step(state, *fixed_interaction, *fixed_rotation, supply, alloc,
                        config.dt);
        }

        double total = 0.0;
        for (double v : next.wealth.values) total += v;
        if (std::abs(total - next.max_supply) >
            config.conservation_tolerance * next.max_supply)
            throw Error(ErrorCode::ConservationViolated,
                        "conservation drift exceeded tolerance at step " +
                            std::to_string(next.wealth.step));

        trajectory.states.push_back(next);
        state = std::move(next);
    }
    return trajectory;
}

}  // namespace

Trajectory simulate(const TokenomicTaxonomy& taxonomy, const RateSchedule& schedule,
                    const SupplyModel& supply_model, const MintBurnAllocation& alloc,
                    const WealthVector& initial_wealth, const MacroRunConfig& config) {
    return run_simulation(&taxonomy, &schedule, nullptr, nullptr, supply_model, alloc,
                          initial_wealth, config);
}

Trajectory simulate_constant_rates(const Matrix& interaction, const Matrix& rotation,
                                   const SupplyModel& supply_model,
                                   const MintBurnAllocation& alloc,
                                   const WealthVector& initial_wealth,
                                   const MacroRunConfig& config) {
    return run_simulation(nullptr, nullptr, &interaction, &rotation, supply_model,
                          alloc, initial_wealth, config);
}

}  // namespace detect

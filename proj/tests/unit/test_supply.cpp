#include <doctest.h>

#include <cmath>

#include "detect/macro.hpp"
#include "detect/supply.hpp"

using namespace detect;

namespace {

TokenomicTaxonomy pair_taxonomy() {
    return build_taxonomy({{"cm", "Control Mechanism", CategoryKind::ControlMechanism},
                           {"hh", "Households", CategoryKind::Normal}});
}

}  // namespace

TEST_SUITE("supply") {

TEST_CASE("deterministic supply laws") {
    CHECK(supply_at(SimpleIncrement{100.0, 0.1}, 5.0) == doctest::Approx(150.0));
    CHECK(supply_at(CompoundIncrement{100.0, 0.1}, 2.0) == doctest::Approx(121.0));
    CHECK(supply_at(ConstantSupply{100.0}, 17.0) == doctest::Approx(100.0));
    CHECK(supply_at(ConstantSupply{100.0}, 0.0) == doctest::Approx(100.0));
}

TEST_CASE("stochastic supply: ensemble mean matches the expected-value path") {
    // zero-drift GBM keeps E[R_t] = 1, so E[M(5)] = M_initial
    const SupplyModel model = StochasticIncrement{100.0, GbmSpec{1.0, 0.0, 0.1}};
    const int paths = 10000;
    double total = 0.0, total_sq = 0.0;
    for (int p = 0; p < paths; ++p) {
        SupplyRealization realization(model, 1.0, std::uint64_t(p));
        const double m5 = realization.at_step(5);
        total += m5;
        total_sq += m5 * m5;
    }
    const double mean = total / paths;
    const double variance = total_sq / paths - mean * mean;
    const double standard_error = std::sqrt(variance / paths);
    CHECK(std::abs(mean - 100.0) < 3.0 * standard_error);
}

TEST_CASE("rate-range validation") {
    try {
        validate_supply(SimpleIncrement{100.0, -0.2}, 10, 1.0);
        FAIL("expected RateOutOfRange");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::RateOutOfRange);  // needs r > -0.1
    }
    try {
        validate_supply(CompoundIncrement{100.0, 1.5}, 10, 1.0);
        FAIL("expected RateOutOfRange");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::RateOutOfRange);
    }
    // r = -0.05 over 10 steps leaves M(10) = 0.5 M0 > 0
    CHECK_NOTHROW(validate_supply(SimpleIncrement{100.0, -0.05}, 10, 1.0));
    CHECK_NOTHROW(validate_supply(StochasticIncrement{100.0, GbmSpec{1.0, 0.0, 0.3}},
                                  100, 1.0));

    SUBCASE("nonpositive initial supply") {
        try {
            validate_supply(ConstantSupply{0.0}, 10, 1.0);
            FAIL("expected NonPositiveSupply");
        } catch (const Error& err) {
            CHECK(err.code() == ErrorCode::NonPositiveSupply);
        }
    }

    SUBCASE("general table must start at m_initial and stay positive") {
        CHECK_NOTHROW(validate_supply(
            GeneralSupply{100.0, TimePath(TablePath{{100.0, 110.0, 105.0}})}, 2, 1.0));
        CHECK_THROWS_AS(validate_supply(
                            GeneralSupply{100.0, TimePath(TablePath{{90.0, 110.0, 105.0}})},
                            2, 1.0),
                        Error);
        CHECK_THROWS_AS(
            validate_supply(GeneralSupply{100.0, TimePath(TablePath{{100.0, -1.0, 105.0}})},
                            2, 1.0),
            Error);
        // table shorter than the grid
        CHECK_THROWS_AS(validate_supply(
                            GeneralSupply{100.0, TimePath(TablePath{{100.0, 110.0}})}, 5,
                            1.0),
                        Error);
    }
}

TEST_CASE("supply deltas") {
    const auto taxonomy = pair_taxonomy();
    const MintBurnAllocation cm_only = control_mechanism_allocation(taxonomy);

    SUBCASE("simple incrementation mints a constant amount to the control mechanism") {
        SupplyRealization realization(SimpleIncrement{100.0, 0.1}, 1.0, 0);
        for (std::int64_t t = 1; t <= 5; ++t) {
            const SupplyDelta delta = supply_delta(realization, t, cm_only);
            CHECK(delta.values[0] == doctest::Approx(10.0));
            CHECK(delta.values[1] == 0.0);
        }
    }

    SUBCASE("constant supply yields the zero vector") {
        SupplyRealization realization(ConstantSupply{100.0}, 1.0, 0);
        const SupplyDelta delta = supply_delta(realization, 3, cm_only);
        CHECK(delta.values[0] == 0.0);
        CHECK(delta.values[1] == 0.0);
    }

    SUBCASE("compound decrement split across two categories") {
        SupplyRealization realization(CompoundIncrement{100.0, -0.5}, 1.0, 0);
        MintBurnAllocation half{{0.5, 0.5}};
        const SupplyDelta delta = supply_delta(realization, 1, half);
        CHECK(delta.values[0] == doctest::Approx(-25.0));
        CHECK(delta.values[1] == doctest::Approx(-25.0));
    }

    SUBCASE("delta sums exactly to the supply difference") {
        SupplyRealization realization(CompoundIncrement{100.0, 0.037}, 1.0, 0);
        MintBurnAllocation weights{{1.0 / 3.0, 2.0 / 3.0}};
        for (std::int64_t t = 1; t <= 50; ++t) {
            const SupplyDelta delta = supply_delta(realization, t, weights);
            const double change = realization.at_step(t) - realization.at_step(t - 1);
            CHECK(delta.values[0] + delta.values[1] == change);
        }
    }
}

TEST_CASE("discount factor") {
    CHECK(discount_factor(SimpleIncrement{100.0, 0.1}, 5.0) ==
          doctest::Approx(1.0 / 1.5));
    CHECK(discount_factor(ConstantSupply{100.0}, 9.0) == doctest::Approx(1.0));
    CHECK(discount_factor(CompoundIncrement{100.0, 0.1}, 2.0) ==
          doctest::Approx(1.0 / 1.21));

    // discount * supply recovers M_initial as built
    for (double t : {0.0, 1.0, 7.0, 29.0}) {
        const SupplyModel model = CompoundIncrement{123.0, 0.05};
        CHECK(discount_factor(model, t) * supply_at(model, t) ==
              doctest::Approx(123.0).epsilon(1e-14));
    }
}

TEST_CASE("linear vs exponential signatures") {
    SupplyRealization simple(SimpleIncrement{100.0, 0.07}, 1.0, 0);
    SupplyRealization compound(CompoundIncrement{100.0, 0.07}, 1.0, 0);
    const double diff0 = simple.at_step(1) - simple.at_step(0);
    const double ratio0 = compound.at_step(1) / compound.at_step(0);
    for (std::int64_t t = 2; t <= 30; ++t) {
        CHECK(simple.at_step(t) - simple.at_step(t - 1) ==
              doctest::Approx(diff0).epsilon(1e-12));
        CHECK(compound.at_step(t) / compound.at_step(t - 1) ==
              doctest::Approx(ratio0).epsilon(1e-12));
    }
}

TEST_CASE("monotonicity of the deterministic laws") {
    SupplyRealization growing(SimpleIncrement{100.0, 0.02}, 1.0, 0);
    SupplyRealization shrinking(CompoundIncrement{100.0, -0.02}, 1.0, 0);
    for (std::int64_t t = 1; t <= 40; ++t) {
        CHECK(growing.at_step(t) > growing.at_step(t - 1));
        CHECK(shrinking.at_step(t) < shrinking.at_step(t - 1));
    }
}

TEST_CASE("time translation check on integrator output") {
    const auto taxonomy = pair_taxonomy();
    const MintBurnAllocation alloc = control_mechanism_allocation(taxonomy);
    Matrix beta(2);
    beta(0, 1) = 0.1;
    beta(1, 0) = -0.1;
    const Matrix gamma = rotation_matrix(2, {{0, 1, 0.05}, {1, 0, 0.02}});

    MacroRunConfig config;
    config.horizon = 500;
    config.dt = 1.0;
    config.run_seed = 11;

    SUBCASE("constant supply conserves exactly") {
        const WealthVector start{{40.0, 60.0}, 0};
        const Trajectory trajectory = simulate_constant_rates(
            beta, gamma, ConstantSupply{100.0}, alloc, start, config);
        std::vector<WealthVector> wealth_path;
        for (const auto& s : trajectory.states) wealth_path.push_back(s.wealth);
        SupplyRealization replay(ConstantSupply{100.0}, 1.0, config.run_seed);
        const SymmetryReport report = check_time_translation(wealth_path, replay, 1e-9);
        CHECK(report.passed);
        CHECK(report.max_relative_drift <= 1e-9);
    }

    SUBCASE("simple incrementation with minting to the control mechanism") {
        const WealthVector start{{40.0, 60.0}, 0};
        const SupplyModel model = SimpleIncrement{100.0, 0.01};
        const Trajectory trajectory =
            simulate_constant_rates(beta, gamma, model, alloc, start, config);
        std::vector<WealthVector> wealth_path;
        for (const auto& s : trajectory.states) wealth_path.push_back(s.wealth);
        SupplyRealization replay(model, 1.0, config.run_seed);
        const SymmetryReport report = check_time_translation(wealth_path, replay, 1e-9);
        CHECK(report.passed);
    }

    SUBCASE("a corrupted entry fails with the offending step reported") {
        const WealthVector start{{40.0, 60.0}, 0};
        const Trajectory trajectory = simulate_constant_rates(
            beta, gamma, ConstantSupply{100.0}, alloc, start, config);
        std::vector<WealthVector> wealth_path;
        for (const auto& s : trajectory.states) wealth_path.push_back(s.wealth);
        wealth_path[123].values[1] += 1.0;  // inject one extra token
        SupplyRealization replay(ConstantSupply{100.0}, 1.0, config.run_seed);
        const SymmetryReport report = check_time_translation(wealth_path, replay, 1e-9);
        CHECK_FALSE(report.passed);
        CHECK(report.worst_step == 123);
    }
}

}  // TEST_SUITE

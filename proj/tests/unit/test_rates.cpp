#include <doctest.h>

#include <cmath>

#include "detect/rates.hpp"

using namespace detect;

namespace {

TokenomicTaxonomy pair_taxonomy(DemandGranularity granularity =
                                    DemandGranularity::Continuous) {
    return build_taxonomy(
        {{"cm", "Control Mechanism", CategoryKind::ControlMechanism},
         {"hh", "Households", CategoryKind::Normal}},
        {{"trade", "cm", "hh", granularity}}, {{"hh", "cm"}});
}

RateSchedule constant_schedule(RateMode mode, double demand, double price,
                               double rotation) {
    RateSchedule schedule;
    schedule.mode = mode;
    schedule.demand.push_back(DemandConstant{demand});
    schedule.price.push_back(PriceConstant{price});
    schedule.rotation.push_back(RotationConstant{rotation});
    return schedule;
}

}  // namespace

TEST_SUITE("rates") {

TEST_CASE("static deterministic interaction rates") {
    // M=100, dt=1, flow 2 toward the lower-indexed endpoint, F=(20,30)
    WealthVector wealth{{20.0, 30.0}, 0};
    const Matrix beta =
        beta_static_deterministic({{0, 1, 2.0}}, wealth, 100.0, 1.0);
    CHECK(beta(0, 1) == doctest::Approx(1.0 / 3.0));
    CHECK(beta(1, 0) == doctest::Approx(-1.0 / 3.0));
    CHECK(beta(0, 0) == 0.0);

    SUBCASE("zero flows give the zero matrix") {
        const Matrix zero = beta_static_deterministic({{0, 1, 0.0}}, wealth, 100.0, 1.0);
        CHECK(zero(0, 1) == 0.0);
        CHECK(zero(1, 0) == 0.0);
    }

    SUBCASE("zero wealth at a declared endpoint") {
        WealthVector broke{{0.0, 30.0}, 0};
        try {
            beta_static_deterministic({{0, 1, 2.0}}, broke, 100.0, 1.0);
            FAIL("expected ZeroWealthEndpoint");
        } catch (const Error& err) {
            CHECK(err.code() == ErrorCode::ZeroWealthEndpoint);
        }
    }
}

TEST_CASE("static probabilistic interaction rates") {
    const auto taxonomy = pair_taxonomy();
    WealthVector wealth{{20.0, 30.0}, 0};

    // Bernoulli p=0.5, price 10: expected flow 5, beta = 100*5/600
    {
        std::vector<DemandModel> demand{DemandBernoulli{0.5, 1.0}};
        std::vector<PriceModel> price{PriceConstant{10.0}};
        const Matrix beta =
            beta_static_probabilistic(demand, price, taxonomy, wealth, 100.0, 1.0);
        CHECK(beta(0, 1) == doctest::Approx(5.0 / 6.0));
        CHECK(beta(1, 0) == doctest::Approx(-5.0 / 6.0));
    }

    // binomial D=10, p=0.3, price 2: expected flow 3*2 = 6 per step
    {
        const DemandModel demand = DemandBinomial{10, 0.3};
        CHECK(demand_expected_value(demand, 0, 1.0) == doctest::Approx(3.0));
        std::vector<DemandModel> demands{demand};
        std::vector<PriceModel> price{PriceConstant{2.0}};
        const Matrix beta =
            beta_static_probabilistic(demands, price, taxonomy, wealth, 100.0, 1.0);
        CHECK(beta(0, 1) * 20.0 * 30.0 / 100.0 == doctest::Approx(6.0));
    }

    // p = 0: no expected interactions
    {
        std::vector<DemandModel> demand{DemandBernoulli{0.0, 1.0}};
        std::vector<PriceModel> price{PriceConstant{10.0}};
        const Matrix beta =
            beta_static_probabilistic(demand, price, taxonomy, wealth, 100.0, 1.0);
        CHECK(beta(0, 1) == 0.0);
    }
}

TEST_CASE("unbounded expectation is rejected") {
    try {
        demand_expected_value(DemandPareto{1.0, 1.0}, 0, 1.0);
        FAIL("expected UnboundedExpectation");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::UnboundedExpectation);
    }
}

TEST_CASE("static rotation matrix") {
    // mu(A1->A2) = 0.1, n=2: column 0 sums to zero
    const Matrix gamma = gamma_static(2, {{0, 1, 0.1}});
    CHECK(gamma(0, 0) == doctest::Approx(-0.1));
    CHECK(gamma(1, 0) == doctest::Approx(0.1));
    CHECK(gamma(0, 1) == 0.0);
    CHECK(gamma(1, 1) == 0.0);

    SUBCASE("all-zero rates give the zero matrix") {
        const Matrix zero = gamma_static(2, {{0, 1, 0.0}});
        CHECK(max_column_sum(zero) == 0.0);
        CHECK(zero(1, 0) == 0.0);
    }

    SUBCASE("negative rotation rate is rejected") {
        try {
            gamma_static(2, {{0, 1, -0.5}});
            FAIL("expected NegativeRotationRate");
        } catch (const Error& err) {
            CHECK(err.code() == ErrorCode::NegativeRotationRate);
        }
    }
}

TEST_CASE("static schedules return identical matrices at every step") {
    const auto taxonomy = pair_taxonomy();
    const auto schedule =
        constant_schedule(RateMode::StaticDeterministic, 2.0, 1.0, 0.05);
    WealthVector wealth{{20.0, 30.0}, 0};
    ScheduleRun run(schedule, taxonomy, wealth, 100.0, 1.0, 7);

    const auto at0 = run.materialize(0, wealth.values, 100.0);
    std::vector<double> other{{40.0, 60.0}};
    const auto at9 = run.materialize(9, other, 100.0);
    CHECK(at0.first == at9.first);
    CHECK(at0.second == at9.second);
    CHECK(at0.first(0, 1) == doctest::Approx(100.0 * 2.0 / (20.0 * 30.0)));
}

TEST_CASE("dynamic deterministic path demand") {
    // demand d(t)=t, price 1, F=(50,50), M=100: at t=2 beta = 100*2/2500
    const auto taxonomy = pair_taxonomy();
    RateSchedule schedule;
    schedule.mode = RateMode::DynamicDeterministic;
    schedule.demand.push_back(DemandPath{TimePath(LinearPath{0.0, 1.0})});
    schedule.price.push_back(PriceConstant{1.0});
    schedule.rotation.push_back(RotationConstant{0.0});

    WealthVector wealth{{50.0, 50.0}, 0};
    ScheduleRun run(schedule, taxonomy, wealth, 100.0, 1.0, 7);
    run.materialize(0, wealth.values, 100.0);
    run.materialize(1, wealth.values, 100.0);
    const auto [beta, gamma] = run.materialize(2, wealth.values, 100.0);
    CHECK(beta(0, 1) == doctest::Approx(0.08));
    CHECK(max_column_sum(gamma) == doctest::Approx(0.0));
}

TEST_CASE("degenerate bernoulli demand always samples its quantity") {
    Rng rng(123);
    const DemandModel demand = DemandBernoulli{1.0, 1.0};
    double total = 0.0;
    for (int i = 0; i < 10000; ++i) total += sample_demand(demand, 0, 1.0, rng);
    CHECK(total == doctest::Approx(10000.0));
}

TEST_CASE("sampled flow mean matches expectation within three standard errors") {
    const int draws = 10000;
    struct Case {
        DemandModel demand;
        double price;
    };
    const Case cases[] = {{DemandBernoulli{0.37, 2.0}, 5.0},
                          {DemandBinomial{12, 0.25}, 1.5},
                          {DemandPoisson{3.2}, 2.0}};
    int case_index = 0;
    for (const auto& c : cases) {
        Rng rng(1000 + case_index++);
        const double expected = demand_expected_value(c.demand, 0, 1.0) * c.price;
        const double sd = demand_standard_deviation(c.demand, 0, 1.0) * c.price;
        double total = 0.0;
        for (int i = 0; i < draws; ++i)
            total += sample_demand(c.demand, 0, 1.0, rng) * c.price;
        const double mean = total / draws;
        const double standard_error = sd / std::sqrt(double(draws));
        CHECK(std::abs(mean - expected) < 3.0 * standard_error);
    }
}

TEST_CASE("matrix invariants hold across modes and steps") {
    const auto taxonomy = build_taxonomy(
        {{"cm", "CM", CategoryKind::ControlMechanism},
         {"a", "A", CategoryKind::Normal},
         {"b", "B", CategoryKind::Normal}},
        {{"i1", "cm", "a", DemandGranularity::Continuous},
         {"i2", "a", "b", DemandGranularity::Integer}},
        {{"a", "b"}, {"b", "cm"}});

    RateSchedule schedule;
    schedule.mode = RateMode::DynamicProbabilistic;
    schedule.demand.push_back(DemandLogNormal{0.0, 0.3});
    schedule.demand.push_back(DemandPoisson{1.5});
    schedule.price.push_back(GbmSpec{1.0, 0.0, 0.1});
    schedule.price.push_back(PriceConstant{0.5});
    schedule.rotation.push_back(RotationConstant{0.02});
    schedule.rotation.push_back(GbmSpec{0.01, 0.0, 0.2});

    WealthVector wealth{{40.0, 30.0, 30.0}, 0};
    ScheduleRun run(schedule, taxonomy, wealth, 100.0, 1.0, 99);
    for (std::int64_t t = 0; t < 200; ++t) {
        const auto [beta, gamma] = run.materialize(t, wealth.values, 100.0);
        CHECK(max_antisymmetry_defect(beta) == 0.0);  // stored once, mirrored
        CHECK(max_column_sum(gamma) < 1e-12);
    }
}

TEST_CASE("proactive schedules are pure functions of the step") {
    const auto taxonomy = pair_taxonomy();
    RateSchedule schedule;
    schedule.mode = RateMode::DynamicProbabilistic;
    schedule.demand.push_back(DemandPoisson{2.0});
    schedule.price.push_back(PriceConstant{1.0});
    schedule.rotation.push_back(RotationConstant{0.0});

    WealthVector wealth{{50.0, 50.0}, 0};
    ScheduleRun run(schedule, taxonomy, wealth, 100.0, 1.0, 5);
    const auto first = run.materialize(3, wealth.values, 100.0);
    const auto second = run.materialize(3, wealth.values, 100.0);
    CHECK(first.first == second.first);
    CHECK(first.second == second.second);

    // an identically-seeded run reproduces the same matrices
    ScheduleRun replay(schedule, taxonomy, wealth, 100.0, 1.0, 5);
    const auto replayed = replay.materialize(3, wealth.values, 100.0);
    CHECK(replayed.first == first.first);
}

TEST_CASE("reactive affine rule scales rates by circulating share") {
    const auto taxonomy = pair_taxonomy();
    RateSchedule schedule;
    schedule.mode = RateMode::DynamicDeterministic;
    schedule.dynamic_kind = DynamicKind::Reactive;
    schedule.reactive = ReactiveAffine{0.0, 2.0};  // scale = 2 * S/M
    schedule.demand.push_back(DemandConstant{1.0});
    schedule.price.push_back(PriceConstant{1.0});
    schedule.rotation.push_back(RotationConstant{0.1});

    // cm holds 40 of 100: S/M = 0.6, scale 1.2
    WealthVector wealth{{40.0, 60.0}, 0};
    ScheduleRun run(schedule, taxonomy, wealth, 100.0, 1.0, 1);
    const auto [beta, gamma] = run.materialize(0, wealth.values, 100.0);
    CHECK(beta(0, 1) == doctest::Approx(100.0 * 1.2 / (40.0 * 60.0)));
    CHECK(gamma(0, 1) == doctest::Approx(0.12));

    // same schedule at different state scales differently (reactive reads F)
    std::vector<double> drained{80.0, 20.0};
    ScheduleRun run2(schedule, taxonomy, wealth, 100.0, 1.0, 1);
    const auto scaled = run2.materialize(0, drained, 100.0);
    CHECK(scaled.second(0, 1) == doctest::Approx(0.1 * 2.0 * 0.2));
}

TEST_CASE("reactive table rule interpolates on circulating share") {
    const auto taxonomy = pair_taxonomy();
    RateSchedule schedule;
    schedule.mode = RateMode::DynamicDeterministic;
    schedule.dynamic_kind = DynamicKind::Reactive;
    schedule.reactive = ReactiveTable{{{0.0, 0.0}, {0.5, 1.0}, {1.0, 3.0}}};
    schedule.demand.push_back(DemandConstant{1.0});
    schedule.price.push_back(PriceConstant{1.0});
    schedule.rotation.push_back(RotationConstant{0.1});

    WealthVector wealth{{40.0, 60.0}, 0};  // S/M = 0.6 -> scale 1 + 0.2/0.5*2 = 1.4
    ScheduleRun run(schedule, taxonomy, wealth, 100.0, 1.0, 1);
    const auto [beta, gamma] = run.materialize(0, wealth.values, 100.0);
    CHECK(gamma(0, 1) == doctest::Approx(0.14));

    std::vector<double> all_reserve{100.0, 0.0};  // S/M = 0 -> scale 0
    // fresh run: interaction endpoint hh has zero wealth, so drop interactions
    RateSchedule rotation_only = schedule;
    const auto bare_taxonomy = build_taxonomy(
        {{"cm", "CM", CategoryKind::ControlMechanism},
         {"hh", "HH", CategoryKind::Normal}},
        {}, {{"hh", "cm"}});
    rotation_only.demand.clear();
    rotation_only.price.clear();
    ScheduleRun run2(rotation_only, bare_taxonomy, wealth, 100.0, 1.0, 1);
    const auto clamped = run2.materialize(0, all_reserve, 100.0);
    CHECK(clamped.second(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("granularity and mode validation") {
    const auto integer_taxonomy = pair_taxonomy(DemandGranularity::Integer);

    SUBCASE("continuous distribution for an integer good is rejected") {
        RateSchedule schedule;
        schedule.mode = RateMode::DynamicProbabilistic;
        schedule.demand.push_back(DemandLogNormal{0.0, 1.0});
        schedule.price.push_back(PriceConstant{1.0});
        schedule.rotation.push_back(RotationConstant{0.0});
        CHECK_THROWS_AS(validate_schedule(schedule, integer_taxonomy, 10), Error);
    }

    SUBCASE("integer-valued distributions pass") {
        RateSchedule schedule;
        schedule.mode = RateMode::DynamicProbabilistic;
        schedule.demand.push_back(DemandBinomial{5, 0.5});
        schedule.price.push_back(PriceConstant{1.0});
        schedule.rotation.push_back(RotationConstant{0.0});
        CHECK_NOTHROW(validate_schedule(schedule, integer_taxonomy, 10));
    }

    SUBCASE("static mode rejects processes and nonconstant prices") {
        const auto taxonomy = pair_taxonomy();
        RateSchedule schedule;
        schedule.mode = RateMode::StaticProbabilistic;
        schedule.demand.push_back(GbmSpec{1.0, 0.0, 0.1});
        schedule.price.push_back(PriceConstant{1.0});
        schedule.rotation.push_back(RotationConstant{0.0});
        CHECK_THROWS_AS(validate_schedule(schedule, taxonomy, 10), Error);

        schedule.demand[0] = DemandConstant{1.0};
        schedule.price[0] = PricePath{TimePath(LinearPath{1.0, 0.1})};
        CHECK_THROWS_AS(validate_schedule(schedule, taxonomy, 10), Error);
    }

    SUBCASE("demand tables shorter than the horizon are rejected") {
        const auto taxonomy = pair_taxonomy();
        RateSchedule schedule;
        schedule.mode = RateMode::DynamicDeterministic;
        schedule.demand.push_back(DemandPath{TimePath(TablePath{{1.0, 2.0, 3.0}})});
        schedule.price.push_back(PriceConstant{1.0});
        schedule.rotation.push_back(RotationConstant{0.0});
        CHECK_NOTHROW(validate_schedule(schedule, taxonomy, 3));
        CHECK_THROWS_AS(validate_schedule(schedule, taxonomy, 10), Error);
    }
}

TEST_CASE("exhausted table raises ProcessExhausted at materialization") {
    const auto taxonomy = pair_taxonomy();
    RateSchedule schedule;
    schedule.mode = RateMode::DynamicDeterministic;
    schedule.demand.push_back(DemandPath{TimePath(TablePath{{1.0, 2.0}})});
    schedule.price.push_back(PriceConstant{1.0});
    schedule.rotation.push_back(RotationConstant{0.0});

    WealthVector wealth{{50.0, 50.0}, 0};
    ScheduleRun run(schedule, taxonomy, wealth, 100.0, 1.0, 0);
    CHECK_NOTHROW(run.materialize(1, wealth.values, 100.0));
    try {
        run.materialize(2, wealth.values, 100.0);
        FAIL("expected ProcessExhausted");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::ProcessExhausted);
    }
}

TEST_CASE("infeasible sample: non-integer demand for an integer good") {
    const auto taxonomy = pair_taxonomy(DemandGranularity::Integer);
    RateSchedule schedule;
    schedule.mode = RateMode::DynamicDeterministic;
    schedule.demand.push_back(DemandPath{TimePath(LinearPath{0.5, 0.0})});
    schedule.price.push_back(PriceConstant{1.0});
    schedule.rotation.push_back(RotationConstant{0.0});

    WealthVector wealth{{50.0, 50.0}, 0};
    ScheduleRun run(schedule, taxonomy, wealth, 100.0, 1.0, 0);
    try {
        run.materialize(0, wealth.values, 100.0);
        FAIL("expected InfeasibleSample");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::InfeasibleSample);
    }
}

}  // TEST_SUITE

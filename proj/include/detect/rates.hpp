#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "detect/matrix.hpp"
#include "detect/paths.hpp"
#include "detect/rng.hpp"
#include "detect/taxonomy.hpp"

namespace detect {

// ---------------------------------------------------------------------------
// Demand / price / rotation models
// ---------------------------------------------------------------------------

struct DemandConstant {
    double value = 0.0;
};
struct DemandPath {
    TimePath path;
};
// Interaction happens with probability p and moves `quantity` units.
struct DemandBernoulli {
    double p = 0.0;
    double quantity = 1.0;
};
struct DemandBinomial {
    long trials = 0;
    double p = 0.0;
};
struct DemandPoisson {
    double mean = 0.0;
};
struct DemandUniformInt {
    long lo = 0;
    long hi = 0;
};
struct DemandUniformReal {
    double lo = 0.0;
    double hi = 0.0;
};
struct DemandLogNormal {
    double mu = 0.0;
    double sigma = 0.0;
};
struct DemandPareto {
    double alpha = 1.0;
    double xmin = 1.0;
};
// Geometric Brownian motion stepped on the scenario grid; shared by demand,
// price, rotation and supply processes.
struct GbmSpec {
    double initial = 1.0;
    double drift = 0.0;
    double volatility = 0.0;
};

using DemandModel =
    std::variant<DemandConstant, DemandPath, DemandBernoulli, DemandBinomial,
                 DemandPoisson, DemandUniformInt, DemandUniformReal, DemandLogNormal,
                 DemandPareto, GbmSpec>;

struct PriceConstant {
    double value = 0.0;
};
struct PricePath {
    TimePath path;
};
using PriceModel = std::variant<PriceConstant, PricePath, GbmSpec>;

struct RotationConstant {
    double rate = 0.0;
};
struct RotationPath {
    TimePath path;
};
using RotationModel = std::variant<RotationConstant, RotationPath, GbmSpec>;

bool demand_is_probabilistic(const DemandModel& model);
bool demand_is_process(const DemandModel& model);
bool demand_is_integer_valued(const DemandModel& model);
// Throws UnboundedExpectation when the declared distribution has no finite mean.
double demand_expected_value(const DemandModel& model, std::int64_t step, double dt);
double demand_standard_deviation(const DemandModel& model, std::int64_t step, double dt);
// One draw from a distribution-style demand model (processes need a run).
double sample_demand(const DemandModel& model, std::int64_t step, double dt, Rng& rng);

// ---------------------------------------------------------------------------
// Rate schedule
// ---------------------------------------------------------------------------

enum class RateMode {
    StaticDeterministic,
    StaticProbabilistic,
    DynamicDeterministic,
    DynamicProbabilistic,
};

enum class DynamicKind { Proactive, Reactive };

// Built-in reactive rules keyed on the circulating-supply share S/M.
struct ReactiveAffine {
    double offset = 1.0;
    double slope = 0.0;
};
struct ReactiveTable {
    std::vector<std::pair<double, double>> points;  // (S/M, scale), sorted by x
};
using ReactiveRule = std::variant<std::monostate, ReactiveAffine, ReactiveTable>;

// Directly-specified constant interaction rate (static modes; also how a
// solved scenario patch feeds rates back into the simulator).
struct BetaEntry {
    std::size_t row = 0;
    std::size_t col = 0;
    double value = 0.0;  // B(row, col); the mirror entry is implied
};

struct RateSchedule {
    RateMode mode = RateMode::StaticDeterministic;
    DynamicKind dynamic_kind = DynamicKind::Proactive;
    std::vector<DemandModel> demand;     // aligned with taxonomy.interactions()
    std::vector<PriceModel> price;       // aligned with taxonomy.interactions()
    std::vector<RotationModel> rotation; // aligned with taxonomy.rotations()
    std::vector<BetaEntry> direct_beta;  // optional, static modes
    ReactiveRule reactive;               // meaningful when dynamic_kind == Reactive
};

// Structural validation against the taxonomy: model/mode compatibility,
// demand granularity, table lengths vs horizon, static-mode constraints.
void validate_schedule(const RateSchedule& schedule, const TokenomicTaxonomy& taxonomy,
                       std::int64_t horizon);

// ---------------------------------------------------------------------------
// Matrix construction
// ---------------------------------------------------------------------------

// Net signed flow on one unordered category pair; positive value means net
// flow toward the lower-indexed endpoint.
struct PairFlow {
    std::size_t lo = 0;
    std::size_t hi = 0;
    double value = 0.0;
};

// beta = (M/dt) * flow / (F_lo * F_hi), stored once and mirrored so the
// matrix is antisymmetric by construction.
Matrix beta_from_pair_flows(std::size_t n, const std::vector<PairFlow>& flows,
                            const std::vector<double>& wealth, double max_supply,
                            double dt);

struct ChannelRate {
    std::size_t from = 0;
    std::size_t to = 0;
    double rate = 0.0;  // gross rotation rate, must be >= 0
};

// Off-diagonals from the channel rates, diagonal of column m set to minus the
// column's off-diagonal sum, so every column sums to zero exactly.
Matrix rotation_matrix(std::size_t n, const std::vector<ChannelRate>& channels);

// Static-deterministic rates from realized flow totals (the classic
// definition with wealth-normalized flows).
Matrix beta_static_deterministic(const std::vector<PairFlow>& flows,
                                 const WealthVector& wealth, double max_supply,
                                 double dt);

// Static-probabilistic rates: expected demand times price in place of the
// realized flow.
Matrix beta_static_probabilistic(const std::vector<DemandModel>& demand,
                                 const std::vector<PriceModel>& price,
                                 const TokenomicTaxonomy& taxonomy,
                                 const WealthVector& wealth, double max_supply,
                                 double dt);

// Static rotation matrix from gross per-channel averages.
Matrix gamma_static(std::size_t n, const std::vector<ChannelRate>& gross_rates);

// ---------------------------------------------------------------------------
// Per-run materialization
// ---------------------------------------------------------------------------

// Owns the sampling state of one run: a dedicated substream per interaction
// type and per rotation channel, lazy process stepping, and the precomputed
// matrices for static modes. Steps must be requested in nondecreasing order.
class ScheduleRun {
  public:
    ScheduleRun(const RateSchedule& schedule, const TokenomicTaxonomy& taxonomy,
                const WealthVector& initial_wealth, double initial_supply, double dt,
                std::uint64_t run_seed);

    // B(t), Gamma(t) for the step about to be taken. Reactive schedules read
    // the pre-step wealth; proactive ones ignore it beyond normalization.
    std::pair<Matrix, Matrix> materialize(std::int64_t step,
                                          const std::vector<double>& wealth,
                                          double max_supply);

    const RateSchedule& schedule() const { return schedule_; }

  private:
    struct ProcessState {
        Rng rng;
        std::int64_t step = 0;
        double value = 0.0;
    };
    struct DrawState {
        Rng rng;
        std::int64_t step = -1;
        double value = 0.0;
    };

    double demand_at(std::size_t index, std::int64_t step);
    double price_at(std::size_t index, std::int64_t step);
    double rotation_at(std::size_t index, std::int64_t step);
    double reactive_scale(const std::vector<double>& wealth, double max_supply) const;

    const RateSchedule schedule_;
    const TokenomicTaxonomy& taxonomy_;
    double dt_;
    std::vector<DrawState> demand_state_;
    std::vector<DrawState> price_state_;
    std::vector<DrawState> rotation_state_;
    std::optional<std::pair<Matrix, Matrix>> static_pair_;
    std::int64_t cached_step_ = -1;
    std::optional<std::pair<Matrix, Matrix>> cached_pair_;
};

}  // namespace detect

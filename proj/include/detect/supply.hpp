#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "detect/paths.hpp"
#include "detect/rates.hpp"
#include "detect/rng.hpp"
#include "detect/taxonomy.hpp"

namespace detect {

// Maximum-supply laws. The law argument is scenario time t = step * dt.
struct ConstantSupply {
    double m_initial = 0.0;
};
struct SimpleIncrement {
    double m_initial = 0.0;
    double rate = 0.0;  // M(t) = (1 + r t) M_initial, r in (-1/t_max, inf)
};
struct CompoundIncrement {
    double m_initial = 0.0;
    double rate = 0.0;  // M(t) = (1 + r)^t M_initial, r in (-1, 1)
};
struct StochasticIncrement {
    double m_initial = 0.0;
    GbmSpec process;  // R_t, positive by construction; E[R_t] = exp(drift * t)
};
struct GeneralSupply {
    double m_initial = 0.0;
    TimePath path;  // g(t), with g(0) = m_initial
};

using SupplyModel = std::variant<ConstantSupply, SimpleIncrement, CompoundIncrement,
                                 StochasticIncrement, GeneralSupply>;

double supply_initial(const SupplyModel& model);
bool supply_is_stochastic(const SupplyModel& model);

// Deterministic variants only; the stochastic law needs a realization.
double supply_at(const SupplyModel& model, double time);

// Rate-range and positivity checks over the scenario grid.
// Throws RateOutOfRange / NonPositiveSupply.
void validate_supply(const SupplyModel& model, std::int64_t horizon, double dt);

// Which categories absorb supply changes. Weights are nonnegative and sum
// to one; the last nonzero-weight category absorbs rounding residue so the
// delta sums to the supply difference exactly.
struct MintBurnAllocation {
    std::vector<double> weights;
};

MintBurnAllocation control_mechanism_allocation(const TokenomicTaxonomy& taxonomy);
void validate_allocation(const MintBurnAllocation& alloc, std::size_t n);

struct SupplyDelta {
    std::vector<double> values;  // per-category signed wealth change
};

// One run's realized supply path. Deterministic variants evaluate the law;
// the stochastic variant draws its path lazily from a dedicated substream
// and caches it, so repeated queries see one consistent path.
class SupplyRealization {
  public:
    SupplyRealization(const SupplyModel& model, double dt, std::uint64_t run_seed);

    double at_step(std::int64_t step);
    double m_initial() const { return supply_initial(model_); }
    double dt() const { return dt_; }
    const SupplyModel& model() const { return model_; }

    // M_initial / M(t); multiplying the wealth total by it recovers M_initial.
    double discount_factor(std::int64_t step);

    SupplyDelta delta(std::int64_t step, const MintBurnAllocation& alloc);

  private:
    SupplyModel model_;
    double dt_ = 1.0;
    Rng rng_;
    std::vector<double> path_;  // realized R_t * M_initial for the stochastic law
};

double discount_factor(const SupplyModel& model, double time);

SupplyDelta supply_delta(SupplyRealization& realization, std::int64_t step,
                         const MintBurnAllocation& alloc);

// Time-translation check: max over steps of |sum(F) - M(t)| / M(t).
struct SymmetryReport {
    double max_relative_drift = 0.0;
    std::int64_t worst_step = 0;
    double max_discount_drift = 0.0;  // |discount * sum(F) - M_initial| / M_initial
    double tolerance = 0.0;
    bool passed = false;
};

SymmetryReport check_time_translation(const std::vector<WealthVector>& trajectory,
                                      SupplyRealization& realization, double tol);

}  // namespace detect

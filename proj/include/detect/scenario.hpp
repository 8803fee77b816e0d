#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "detect/inverse.hpp"
#include "detect/kinetic.hpp"
#include "detect/rates.hpp"
#include "detect/supply.hpp"
#include "detect/taxonomy.hpp"

namespace detect {

// Agent-level simulation block (used by the `kinetic` command).
struct KineticBlock {
    KineticModel model;
    std::size_t agents = 0;
    double total_wealth = 0.0;
    std::int64_t steps = 0;
    std::int64_t snapshot_every = 0;
    std::vector<double> initial_wealth;
    bool require_equilibrium = false;
    std::size_t window = 5;
    double tolerance = 0.02;
};

// Inverse-propagation block (used by the `invert` command).
struct InvertBlock {
    std::vector<double> target;          // by category order
    std::vector<BetaParam> beta;
    std::vector<GammaParam> gamma;
    double regularization = -1.0;        // < 0: solver default
    double perturbation = 0.05;
    std::int64_t verify_horizon = 500;
};

struct Scenario {
    TokenomicTaxonomy taxonomy;
    WealthVector initial_wealth;
    RateSchedule rates;
    SupplyModel supply = ConstantSupply{};
    MintBurnAllocation allocation;       // defaults to the control mechanism
    std::int64_t horizon = 0;
    double dt = 1.0;
    std::uint64_t seed = 0;
    std::size_t ensemble_size = 1;
    std::int64_t snapshot_every = 0;
    std::optional<KineticBlock> kinetic;
    std::optional<InvertBlock> invert;

    std::string text;    // the parsed scenario text, for digests
    std::string digest;  // stable content hash (fnv-1a, hex)
};

// Parses and validates scenario JSON; throws SyntaxError on malformed input
// and ValidationError(field, reason) on the first failing field.
Scenario parse_scenario(const std::string& text);

Scenario load_scenario(const std::string& path);

std::string scenario_digest(const std::string& text);

}  // namespace detect

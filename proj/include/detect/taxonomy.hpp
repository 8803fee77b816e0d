#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "detect/errors.hpp"

namespace detect {

enum class CategoryKind { Normal, ControlMechanism, TokenDump };

enum class DemandGranularity { Integer, Continuous };

struct AgentCategory {
    std::string id;
    std::string name;
    CategoryKind kind = CategoryKind::Normal;
};

// Interaction between two distinct categories. `recipient` receives the
// demand*price flow; `payer` pays it. The pair is unordered for identity
// purposes, the declaration carries the flow direction.
struct InteractionType {
    std::string id;
    std::string recipient;
    std::string payer;
    DemandGranularity granularity = DemandGranularity::Continuous;
};

struct RotationChannel {
    std::string from;
    std::string to;
};

// Agent categories, interaction types and rotation channels. Category
// declaration order fixes the matrix index order everywhere downstream.
class TokenomicTaxonomy {
  public:
    TokenomicTaxonomy() = default;

    const std::vector<AgentCategory>& categories() const { return categories_; }
    const std::vector<InteractionType>& interactions() const { return interactions_; }
    const std::vector<RotationChannel>& rotations() const { return rotations_; }

    std::size_t size() const { return categories_.size(); }
    std::size_t index_of(const std::string& id) const;
    std::size_t control_mechanism_index() const { return control_index_; }

  private:
    friend TokenomicTaxonomy build_taxonomy(std::vector<AgentCategory>,
                                            std::vector<InteractionType>,
                                            std::vector<RotationChannel>);

    std::vector<AgentCategory> categories_;
    std::vector<InteractionType> interactions_;
    std::vector<RotationChannel> rotations_;
    std::size_t control_index_ = 0;
};

// Validates and freezes a taxonomy. Throws MissingControlMechanism,
// DuplicateId, DanglingEndpoint and friends.
TokenomicTaxonomy build_taxonomy(std::vector<AgentCategory> categories,
                                 std::vector<InteractionType> interactions = {},
                                 std::vector<RotationChannel> rotations = {});

struct WealthVector {
    std::vector<double> values;
    std::int64_t step = 0;
};

// Circulating supply S = M minus the control mechanism's holdings.
double circulating_supply(const WealthVector& wealth, const TokenomicTaxonomy& taxonomy,
                          double max_supply);

}  // namespace detect

#include "detect/taxonomy.hpp"

#include <cmath>
#include <unordered_set>

#include "detect/matrix.hpp"

namespace detect {

std::string_view error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::MissingControlMechanism: return "MissingControlMechanism";
        case ErrorCode::DuplicateControlMechanism: return "DuplicateControlMechanism";
        case ErrorCode::MultipleTokenDumps: return "MultipleTokenDumps";
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::DanglingEndpoint: return "DanglingEndpoint";
        case ErrorCode::TooFewCategories: return "TooFewCategories";
        case ErrorCode::ZeroWealthEndpoint: return "ZeroWealthEndpoint";
        case ErrorCode::UnboundedExpectation: return "UnboundedExpectation";
        case ErrorCode::ProcessExhausted: return "ProcessExhausted";
        case ErrorCode::InfeasibleSample: return "InfeasibleSample";
        case ErrorCode::NegativeRotationRate: return "NegativeRotationRate";
        case ErrorCode::RateOutOfRange: return "RateOutOfRange";
        case ErrorCode::NonPositiveSupply: return "NonPositiveSupply";
        case ErrorCode::InsufficientWealthForBurn: return "InsufficientWealthForBurn";
        case ErrorCode::NegativeWealth: return "NegativeWealth";
        case ErrorCode::ConservationViolated: return "ConservationViolated";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::LambdaOutOfRange: return "LambdaOutOfRange";
        case ErrorCode::SampleTooSmall: return "SampleTooSmall";
        case ErrorCode::ZeroVariance: return "ZeroVariance";
        case ErrorCode::TailTooSmall: return "TailTooSmall";
        case ErrorCode::InfeasibleStructure: return "InfeasibleStructure";
        case ErrorCode::MaxIterations: return "MaxIterations";
        case ErrorCode::SyntaxError: return "SyntaxError";
        case ErrorCode::ValidationError: return "ValidationError";
        case ErrorCode::IoError: return "IoError";
    }
    return "UnknownError";
}

bool is_validation_error(ErrorCode code) {
    switch (code) {
        case ErrorCode::MissingControlMechanism:
        case ErrorCode::DuplicateControlMechanism:
        case ErrorCode::MultipleTokenDumps:
        case ErrorCode::DuplicateId:
        case ErrorCode::DanglingEndpoint:
        case ErrorCode::TooFewCategories:
        case ErrorCode::RateOutOfRange:
        case ErrorCode::NonPositiveSupply:
        case ErrorCode::UnboundedExpectation:
        case ErrorCode::LambdaOutOfRange:
        case ErrorCode::SyntaxError:
        case ErrorCode::ValidationError:
            return true;
        default:
            return false;
    }
}

double max_antisymmetry_defect(const Matrix& m) {
    double worst = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j <= i; ++j)
            worst = std::max(worst, std::abs(m(i, j) + m(j, i)));
    return worst;
}

double max_column_sum(const Matrix& m) {
    double worst = 0.0;
    for (std::size_t j = 0; j < m.size(); ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < m.size(); ++i) sum += m(i, j);
        worst = std::max(worst, std::abs(sum));
    }
    return worst;
}

std::size_t TokenomicTaxonomy::index_of(const std::string& id) const {
    for (std::size_t i = 0; i < categories_.size(); ++i)
        if (categories_[i].id == id) return i;
    throw Error(ErrorCode::DanglingEndpoint, "unknown category id: " + id);
}

TokenomicTaxonomy build_taxonomy(std::vector<AgentCategory> categories,
                                 std::vector<InteractionType> interactions,
                                 std::vector<RotationChannel> rotations) {
    if (categories.size() < 2)
        throw Error(ErrorCode::TooFewCategories,
                    "taxonomy needs at least two agent categories");

    std::unordered_set<std::string> ids;
    std::size_t control_count = 0, dump_count = 0, control_index = 0;
    for (std::size_t i = 0; i < categories.size(); ++i) {
        const auto& cat = categories[i];
        if (!ids.insert(cat.id).second)
            throw Error(ErrorCode::DuplicateId, "duplicate category id: " + cat.id);
        if (cat.kind == CategoryKind::ControlMechanism) {
            ++control_count;
            control_index = i;
        } else if (cat.kind == CategoryKind::TokenDump) {
            ++dump_count;
        }
    }
    if (control_count == 0)
        throw Error(ErrorCode::MissingControlMechanism,
                    "taxonomy requires a control mechanism category");
    if (control_count > 1)
        throw Error(ErrorCode::DuplicateControlMechanism,
                    "taxonomy allows exactly one control mechanism");
    if (dump_count > 1)
        throw Error(ErrorCode::MultipleTokenDumps, "at most one token dump allowed");

    std::unordered_set<std::string> interaction_ids;
    for (const auto& it : interactions) {
        if (!interaction_ids.insert(it.id).second)
            throw Error(ErrorCode::DuplicateId, "duplicate interaction id: " + it.id);
        if (!ids.count(it.recipient))
            throw Error(ErrorCode::DanglingEndpoint,
                        "interaction " + it.id + " references unknown category " + it.recipient);
        if (!ids.count(it.payer))
            throw Error(ErrorCode::DanglingEndpoint,
                        "interaction " + it.id + " references unknown category " + it.payer);
        if (it.recipient == it.payer)
            throw Error(ErrorCode::DanglingEndpoint,
                        "interaction " + it.id + " endpoints must be distinct");
    }
    for (const auto& rot : rotations) {
        if (!ids.count(rot.from))
            throw Error(ErrorCode::DanglingEndpoint,
                        "rotation references unknown category " + rot.from);
        if (!ids.count(rot.to))
            throw Error(ErrorCode::DanglingEndpoint,
                        "rotation references unknown category " + rot.to);
        if (rot.from == rot.to)
            throw Error(ErrorCode::DanglingEndpoint, "rotation endpoints must be distinct");
    }

    TokenomicTaxonomy taxonomy;
    taxonomy.categories_ = std::move(categories);
    taxonomy.interactions_ = std::move(interactions);
    taxonomy.rotations_ = std::move(rotations);
    taxonomy.control_index_ = control_index;
    return taxonomy;
}

double circulating_supply(const WealthVector& wealth, const TokenomicTaxonomy& taxonomy,
                          double max_supply) {
    return max_supply - wealth.values[taxonomy.control_mechanism_index()];
}

}  // namespace detect

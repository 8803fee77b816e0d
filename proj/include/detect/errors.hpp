#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace detect {

// Machine-readable failure codes, surfaced by the CLI as error JSON.
enum class ErrorCode {
    // taxonomy
    MissingControlMechanism,
    DuplicateControlMechanism,
    MultipleTokenDumps,
    DuplicateId,
    DanglingEndpoint,
    TooFewCategories,
    // parametrization
    ZeroWealthEndpoint,
    UnboundedExpectation,
    ProcessExhausted,
    InfeasibleSample,
    NegativeRotationRate,
    // supply
    RateOutOfRange,
    NonPositiveSupply,
    InsufficientWealthForBurn,
    // macro
    NegativeWealth,
    ConservationViolated,
    LengthMismatch,
    // analysis
    LambdaOutOfRange,
    SampleTooSmall,
    ZeroVariance,
    TailTooSmall,
    // inverse
    InfeasibleStructure,
    MaxIterations,
    // scenario / io
    SyntaxError,
    ValidationError,
    IoError,
};

std::string_view error_code_name(ErrorCode code);

// Is this a scenario/input problem (CLI exit 2) as opposed to a runtime
// failure (CLI exit 3)?
bool is_validation_error(ErrorCode code);

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, std::string message, std::string field = {})
        : std::runtime_error(message.empty() ? std::string(error_code_name(code))
                                             : message),
          code_(code), field_(std::move(field)) {}

    ErrorCode code() const { return code_; }
    const std::string& field() const { return field_; }

  private:
    ErrorCode code_;
    std::string field_;  // dotted path into the scenario, when known
};

}  // namespace detect

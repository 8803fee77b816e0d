#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <variant>
#include <vector>

#include "detect/errors.hpp"

namespace detect {

// Deterministic step-indexed paths: inline tables or the named closed forms
// {constant, linear, exponential, sinusoid}. Closed forms are evaluated at
// scenario time t = step * dt; tables are indexed by step.
struct ConstantPath {
    double value = 0.0;
};
struct LinearPath {
    double intercept = 0.0;
    double slope = 0.0;
};
struct ExponentialPath {
    double initial = 0.0;
    double rate = 0.0;  // value = initial * exp(rate * t)
};
struct SinusoidPath {
    double base = 0.0;
    double amplitude = 0.0;
    double period = 1.0;
    double phase = 0.0;
};
struct TablePath {
    std::vector<double> values;  // one entry per step, starting at step 0
};

class TimePath {
  public:
    using Spec = std::variant<ConstantPath, LinearPath, ExponentialPath, SinusoidPath,
                              TablePath>;

    TimePath() : spec_(ConstantPath{0.0}) {}
    explicit TimePath(Spec spec) : spec_(std::move(spec)) {}

    double at(std::int64_t step, double dt) const {
        if (const auto* table = std::get_if<TablePath>(&spec_)) {
            if (step < 0 || std::size_t(step) >= table->values.size())
                throw Error(ErrorCode::ProcessExhausted,
                            "tabulated path has no value for step " +
                                std::to_string(step));
            return table->values[std::size_t(step)];
        }
        return at_time(double(step) * dt);
    }

    // Closed forms only; tables are step-indexed.
    double at_time(double t) const {
        if (const auto* c = std::get_if<ConstantPath>(&spec_)) return c->value;
        if (const auto* l = std::get_if<LinearPath>(&spec_))
            return l->intercept + l->slope * t;
        if (const auto* e = std::get_if<ExponentialPath>(&spec_))
            return e->initial * std::exp(e->rate * t);
        if (const auto* s = std::get_if<SinusoidPath>(&spec_))
            return s->base +
                   s->amplitude *
                       std::sin(2.0 * std::numbers::pi * t / s->period + s->phase);
        throw Error(ErrorCode::ValidationError,
                    "tabulated path has no continuous-time form");
    }

    bool is_table() const { return std::holds_alternative<TablePath>(spec_); }
    std::size_t table_length() const { return std::get<TablePath>(spec_).values.size(); }
    const Spec& spec() const { return spec_; }

  private:
    Spec spec_;
};

}  // namespace detect

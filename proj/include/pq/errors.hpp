#pragma once

#include <stdexcept>
#include <string>

namespace pq {

// Threshold below which a quantity entering a division or a fractional power
// is treated as degenerate. Operations fail loudly instead of regularizing.
inline constexpr double kDegenerateThreshold = 1e-12;

// A norm or divisor collapsed below the degenerate threshold.
class DegenerateError : public std::runtime_error {
public:
    DegenerateError(const std::string& what, double offending)
        : std::runtime_error(what + " (value " + std::to_string(offending) + ")"),
          value_(offending) {}
    double offending_value() const noexcept { return value_; }

private:
    double value_ = 0.0;
};

// Out-of-range parameter: p or q below 2, invalid jet order, bad bounds.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Point outside the validity region of a chart.
class GuardError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Structural mismatch: jet dimensions, field shapes, component counts.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed expression or problem file.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Filesystem failure while reading or writing artifacts.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace pq

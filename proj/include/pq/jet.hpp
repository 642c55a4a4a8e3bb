#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "pq/errors.hpp"

namespace pq {

// Exponent tuple of a partial derivative, one entry per chart variable.
using MultiIndex = std::vector<int>;

int degree(const MultiIndex& idx);
double multi_factorial(const MultiIndex& idx);

namespace detail {

constexpr int kMaxDim = 6;
constexpr int kMaxOrder = 10;
// Covers every layout the engine uses by default (dim <= 4 at order <= 4)
// without touching the heap; larger layouts spill.
constexpr int kInlineCoeffs = 70;

// Dense coefficient bookkeeping for one (dim, order): the graded-lex
// multi-index enumeration, exponent lookup, and the Cauchy-product pair
// table. Layouts are immutable, built once, cached forever. Enumeration is
// graded, so the layout of order k-1 is a prefix of the layout of order k;
// mixed-order arithmetic reads the common prefix of both operands.
struct JetLayout {
    int dim = 0;
    int order = 0;
    int count = 0;
    std::vector<std::array<std::uint8_t, kMaxDim>> exponents;
    std::vector<double> index_factorial;
    std::vector<std::int32_t> lookup; // packed exponents -> position, -1 if absent
    std::vector<std::vector<std::pair<std::uint16_t, std::uint16_t>>> pairs_by_target;
    // diff[var][t]: coefficient t of d/dx_var comes from source position .first
    // scaled by .second
    std::vector<std::vector<std::pair<std::int32_t, double>>> diff;
    const JetLayout* lower = nullptr; // layout of (dim, order-1)

    static const JetLayout& get(int dim, int order);
    int position(const MultiIndex& idx) const; // -1 if not representable
    int position(const std::array<std::uint8_t, kMaxDim>& e) const;
};

// Zero-initialized coefficient block with inline storage for the common
// small layouts. Copies and moves touch only the live prefix.
class CoeffStore {
public:
    CoeffStore() : count_(0) {}
    explicit CoeffStore(int count) : count_(count) {
        if (count_ > kInlineCoeffs) spill_ = std::make_unique<double[]>(count_);
        std::fill_n(data(), count_, 0.0);
    }
    CoeffStore(const CoeffStore& other) : count_(other.count_) {
        if (other.spill_) {
            spill_ = std::make_unique<double[]>(count_);
            std::copy_n(other.spill_.get(), count_, spill_.get());
        } else {
            std::copy_n(other.inline_.data(), count_, inline_.data());
        }
    }
    CoeffStore(CoeffStore&& other) noexcept
        : count_(other.count_), spill_(std::move(other.spill_)) {
        if (!spill_) std::copy_n(other.inline_.data(), count_, inline_.data());
    }
    CoeffStore& operator=(const CoeffStore& other) {
        if (this == &other) return *this;
        count_ = other.count_;
        if (other.spill_) {
            spill_ = std::make_unique<double[]>(count_);
            std::copy_n(other.spill_.get(), count_, spill_.get());
        } else {
            spill_.reset();
            std::copy_n(other.inline_.data(), count_, inline_.data());
        }
        return *this;
    }
    CoeffStore& operator=(CoeffStore&& other) noexcept {
        if (this == &other) return *this;
        count_ = other.count_;
        spill_ = std::move(other.spill_);
        if (!spill_) std::copy_n(other.inline_.data(), count_, inline_.data());
        return *this;
    }

    double* data() noexcept { return spill_ ? spill_.get() : inline_.data(); }
    const double* data() const noexcept { return spill_ ? spill_.get() : inline_.data(); }
    double& operator[](int i) noexcept { return data()[i]; }
    double operator[](int i) const noexcept { return data()[i]; }
    int size() const noexcept { return count_; }

private:
    int count_;
    std::array<double, kInlineCoeffs> inline_;
    std::unique_ptr<double[]> spill_;
};

} // namespace detail

// Truncated multivariate Taylor expansion of a scalar quantity at a base
// point. Coefficients use the Taylor convention (partial derivative divided
// by the multi-index factorial) and dense graded-lex storage. Jets are
// immutable after construction; every operation is a pure function, so
// evaluation is safe to run in parallel across points.
//
// Binary arithmetic requires matching dims. Operands of different orders
// combine at the lower of the two orders: extracting a derivative costs one
// order, and downstream expressions routinely mix the results.
class Jet {
public:
    Jet(); // scalar zero: dim 1, order 0

    static Jet constant(int dim, int order, double value);
    // Identity seeds: the i-th jet carries value x[i] and unit first-order
    // coefficient in variable i.
    static std::vector<Jet> lift_point(std::span<const double> x, int order);

    int dim() const noexcept { return layout_->dim; }
    int order() const noexcept { return layout_->order; }
    int coefficient_count() const noexcept { return layout_->count; }
    const detail::JetLayout* layout() const noexcept { return layout_; }

    double value() const noexcept { return c_[0]; }
    double coefficient(const MultiIndex& idx) const;
    // Partial derivative at the base point: coefficient times factorial.
    double partial(const MultiIndex& idx) const;
    std::span<const double> coefficients() const noexcept {
        return {c_.data(), static_cast<std::size_t>(c_.size())};
    }

    bool is_finite() const noexcept;
    bool is_zero() const noexcept; // every coefficient exactly zero

    // Same dim/order, value v, all other coefficients zero.
    Jet constant_like(double v) const;
    // Drop coefficients above new_order (new_order <= order).
    Jet truncated(int new_order) const;
    // d/dx_var as a jet of one order less.
    Jet derivative(int var) const;

    Jet operator-() const;

    friend Jet operator+(const Jet& a, const Jet& b);
    friend Jet operator-(const Jet& a, const Jet& b);
    friend Jet operator*(const Jet& a, const Jet& b);
    friend Jet operator/(const Jet& a, const Jet& b);

    friend Jet operator+(const Jet& a, double s);
    friend Jet operator+(double s, const Jet& a) { return a + s; }
    friend Jet operator-(const Jet& a, double s) { return a + (-s); }
    friend Jet operator-(double s, const Jet& a) { return -a + s; }
    friend Jet operator*(const Jet& a, double s);
    friend Jet operator*(double s, const Jet& a) { return a * s; }
    friend Jet operator/(const Jet& a, double s);
    friend Jet operator/(double s, const Jet& a) { return a.constant_like(s) / a; }

    // a^r. Integer exponents are evaluated by repeated multiplication and
    // are regular at zero; fractional exponents require value(a) above the
    // degenerate threshold.
    friend Jet pow(const Jet& a, double r);
    friend Jet sqrt(const Jet& a) { return pow(a, 0.5); }
    friend Jet exp(const Jet& a);

    friend std::ostream& operator<<(std::ostream& os, const Jet& a);

private:
    explicit Jet(const detail::JetLayout* layout);

    const detail::JetLayout* layout_;
    detail::CoeffStore c_;
};

} // namespace pq

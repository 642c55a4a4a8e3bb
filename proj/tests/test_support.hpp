#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "pq/jet.hpp"
#include "pq/rng.hpp"

namespace pqtest {

using ScalarFn = std::function<double(std::span<const double>)>;

// |a - b| scaled by max(1, |b|); partials that are exactly zero compare
// against an absolute floor instead of blowing up.
inline double scaled_err(double a, double b) {
    return std::abs(a - b) / std::max(1.0, std::abs(b));
}

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

namespace detail {

inline double stencil(const ScalarFn& f, std::vector<double>& x, const pq::MultiIndex& idx,
                      int var, double h);

inline double fd_rec(const ScalarFn& f, std::vector<double>& x, pq::MultiIndex idx, double h) {
    for (int v = 0; v < static_cast<int>(idx.size()); ++v) {
        if (idx[v] > 0) {
            pq::MultiIndex rest = idx;
            rest[v] = 0;
            auto inner = [&](double shift) {
                const double saved = x[v];
                x[v] = saved + shift;
                const double r = fd_rec(f, x, rest, h);
                x[v] = saved;
                return r;
            };
            switch (idx[v]) {
                case 1: return (inner(h) - inner(-h)) / (2 * h);
                case 2: return (inner(h) - 2 * inner(0) + inner(-h)) / (h * h);
                case 3:
                    return (inner(2 * h) - 2 * inner(h) + 2 * inner(-h) - inner(-2 * h)) /
                           (2 * h * h * h);
                case 4:
                    return (inner(2 * h) - 4 * inner(h) + 6 * inner(0) - 4 * inner(-h) +
                            inner(-2 * h)) /
                           (h * h * h * h);
                default: return std::nan("");
            }
        }
    }
    return f(x);
}

} // namespace detail

// Central finite difference of the mixed partial given by idx, Richardson
// extrapolated. High degrees get one level at a larger step: a second level
// would shrink the step into the eps/h^deg rounding blow-up.
inline double fd_partial(const ScalarFn& f, std::vector<double> x, const pq::MultiIndex& idx,
                         double h = 0.0) {
    const int deg = pq::degree(idx);
    if (h == 0.0) h = deg <= 2 ? 5e-3 : (deg == 3 ? 2e-2 : 3e-2);
    auto d = [&](double step) { return detail::fd_rec(f, x, idx, step); };
    const double d1 = d(h), d2 = d(h / 2);
    const double r1 = (4 * d2 - d1) / 3;
    if (deg > 2) return r1;
    const double d3 = d(h / 4);
    const double r2 = (4 * d3 - d2) / 3;
    return (16 * r2 - r1) / 15;
}

} // namespace pqtest

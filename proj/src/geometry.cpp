#include "pq/geometry.hpp"

#include <cmath>
#include <sstream>

namespace pq {

namespace {

std::string point_string(std::span<const double> x) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i) os << ", ";
        os << x[i];
    }
    os << ")";
    return os.str();
}

void check_symmetric(const std::vector<Jet>& g, int m, const std::string& name) {
    double scale = 0.0;
    for (const auto& entry : g) scale = std::max(scale, std::abs(entry.value()));
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
            if (std::abs(g[i * m + j].value() - g[j * m + i].value()) > 1e-14 * (1.0 + scale))
                throw ShapeError("metric '" + name + "' is not symmetric");
}

void check_spd(const std::vector<Jet>& g, int m, const std::string& name) {
    // Cholesky on the values; any non-positive pivot means non-SPD.
    std::vector<double> a(m * m);
    for (int i = 0; i < m * m; ++i) a[i] = g[i].value();
    for (int k = 0; k < m; ++k) {
        double pivot = a[k * m + k];
        for (int j = 0; j < k; ++j) pivot -= a[k * m + j] * a[k * m + j];
        if (!(pivot > 0.0))
            throw DegenerateError("metric '" + name + "' is not positive definite", pivot);
        const double root = std::sqrt(pivot);
        a[k * m + k] = root;
        for (int i = k + 1; i < m; ++i) {
            double v = a[i * m + k];
            for (int j = 0; j < k; ++j) v -= a[i * m + j] * a[k * m + j];
            a[i * m + k] = v / root;
        }
    }
}

} // namespace

bool MetricField::inside(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim) return false;
    return !guard || guard(x);
}

void MetricField::require_inside(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim)
        throw ShapeError("point dimension does not match metric '" + name + "'");
    if (guard && !guard(x))
        throw GuardError("point " + point_string(x) + " is outside the chart of metric '" +
                         name + "'");
}

MetricField euclidean_metric(int dim, std::string name) {
    MetricField g;
    g.dim = dim;
    g.name = std::move(name);
    g.components = [dim](const JetPoint& x) {
        std::vector<Jet> out(dim * dim, x[0].constant_like(0.0));
        for (int i = 0; i < dim; ++i) out[i * dim + i] = x[0].constant_like(1.0);
        return out;
    };
    return g;
}

MetricField conformal_metric(int dim, JetScalarFn factor, GuardFn guard, std::string name) {
    MetricField g;
    g.dim = dim;
    g.name = std::move(name);
    g.guard = std::move(guard);
    g.components = [dim, factor = std::move(factor)](const JetPoint& x) {
        Jet lambda = factor(x);
        std::vector<Jet> out(dim * dim, lambda.constant_like(0.0));
        for (int i = 0; i < dim; ++i) out[i * dim + i] = lambda;
        return out;
    };
    return g;
}

namespace detail {

std::vector<double> jet_values(const std::vector<Jet>& jets) {
    std::vector<double> v(jets.size());
    for (std::size_t i = 0; i < jets.size(); ++i) v[i] = jets[i].value();
    return v;
}

std::vector<Jet> jet_matrix_inverse(std::vector<Jet> a, int m) {
    std::vector<Jet> inv(m * m, a[0].constant_like(0.0));
    for (int i = 0; i < m; ++i) inv[i * m + i] = a[0].constant_like(1.0);

    bool diagonal = true;
    for (int i = 0; i < m && diagonal; ++i)
        for (int j = 0; j < m; ++j)
            if (i != j && !a[i * m + j].is_zero()) {
                diagonal = false;
                break;
            }
    if (diagonal) {
        for (int i = 0; i < m; ++i) {
            if (std::abs(a[i * m + i].value()) <= kDegenerateThreshold)
                throw DegenerateError("singular matrix in jet inversion", a[i * m + i].value());
            inv[i * m + i] = inv[i * m + i] / a[i * m + i];
        }
        return inv;
    }

    for (int col = 0; col < m; ++col) {
        int pivot = col;
        for (int r = col + 1; r < m; ++r)
            if (std::abs(a[r * m + col].value()) > std::abs(a[pivot * m + col].value())) pivot = r;
        if (std::abs(a[pivot * m + col].value()) <= kDegenerateThreshold)
            throw DegenerateError("singular matrix in jet inversion", a[pivot * m + col].value());
        if (pivot != col)
            for (int j = 0; j < m; ++j) {
                std::swap(a[pivot * m + j], a[col * m + j]);
                std::swap(inv[pivot * m + j], inv[col * m + j]);
            }
        const Jet diag = a[col * m + col];
        for (int j = 0; j < m; ++j) {
            a[col * m + j] = a[col * m + j] / diag;
            inv[col * m + j] = inv[col * m + j] / diag;
        }
        for (int r = 0; r < m; ++r) {
            if (r == col) continue;
            const Jet f = a[r * m + col];
            if (f.is_zero()) continue;
            for (int j = 0; j < m; ++j) {
                a[r * m + j] = a[r * m + j] - f * a[col * m + j];
                inv[r * m + j] = inv[r * m + j] - f * inv[col * m + j];
            }
        }
    }
    return inv;
}

Jet jet_matrix_det(std::vector<Jet> a, int m) {
    Jet det = a[0].constant_like(1.0);
    bool diagonal = true;
    for (int i = 0; i < m && diagonal; ++i)
        for (int j = 0; j < m; ++j)
            if (i != j && !a[i * m + j].is_zero()) {
                diagonal = false;
                break;
            }
    if (diagonal) {
        for (int i = 0; i < m; ++i) det = det * a[i * m + i];
        return det;
    }

    double sign = 1.0;
    for (int col = 0; col < m; ++col) {
        int pivot = col;
        for (int r = col + 1; r < m; ++r)
            if (std::abs(a[r * m + col].value()) > std::abs(a[pivot * m + col].value())) pivot = r;
        if (std::abs(a[pivot * m + col].value()) <= kDegenerateThreshold)
            throw DegenerateError("singular matrix in jet determinant", a[pivot * m + col].value());
        if (pivot != col) {
            sign = -sign;
            for (int j = col; j < m; ++j) std::swap(a[pivot * m + j], a[col * m + j]);
        }
        det = det * a[col * m + col];
        for (int r = col + 1; r < m; ++r) {
            const Jet f = a[r * m + col] / a[col * m + col];
            for (int j = col; j < m; ++j) a[r * m + j] = a[r * m + j] - f * a[col * m + j];
        }
    }
    return det * sign;
}

} // namespace detail

std::vector<Jet> metric_components(const MetricField& g, const JetPoint& x) {
    if (static_cast<int>(x.size()) != g.dim)
        throw ShapeError("jet point dimension does not match metric '" + g.name + "'");
    g.require_inside(detail::jet_values(x));
    std::vector<Jet> out = g.components(x);
    if (static_cast<int>(out.size()) != g.dim * g.dim)
        throw ShapeError("metric '" + g.name + "' returned a wrong component count");
    check_symmetric(out, g.dim, g.name);
    check_spd(out, g.dim, g.name);
    return out;
}

std::vector<Jet> metric_inverse(const MetricField& g, const JetPoint& x) {
    return detail::jet_matrix_inverse(metric_components(g, x), g.dim);
}

namespace detail {

std::vector<Jet> christoffel_core(const std::vector<Jet>& comps, const std::vector<Jet>& ginv,
                                  int m) {
    // dg[l][i][j] = d_l g_ij
    std::vector<Jet> dg;
    dg.reserve(m * m * m);
    bool constant_metric = true;
    for (int l = 0; l < m; ++l)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                dg.push_back(comps[i * m + j].derivative(l));
                constant_metric = constant_metric && dg.back().is_zero();
            }
    const Jet zero = dg[0].constant_like(0.0);
    std::vector<Jet> gamma(m * m * m, zero);
    if (constant_metric) return gamma;

    auto dgat = [&](int l, int i, int j) -> const Jet& { return dg[(l * m + i) * m + j]; };
    std::vector<Jet> bracket(m, zero);
    for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j) {
            for (int l = 0; l < m; ++l)
                bracket[l] = dgat(i, j, l) + dgat(j, i, l) - dgat(l, i, j);
            for (int k = 0; k < m; ++k) {
                Jet sum = zero;
                for (int l = 0; l < m; ++l) {
                    if (bracket[l].is_zero() || ginv[k * m + l].is_zero()) continue;
                    sum = sum + ginv[k * m + l] * bracket[l];
                }
                sum = sum * 0.5;
                gamma[(k * m + i) * m + j] = sum;
                gamma[(k * m + j) * m + i] = sum;
            }
        }
    return gamma;
}

} // namespace detail

std::vector<Jet> christoffel(const MetricField& g, const JetPoint& x) {
    auto comps = metric_components(g, x);
    auto ginv = detail::jet_matrix_inverse(comps, g.dim);
    return detail::christoffel_core(comps, ginv, g.dim);
}

std::vector<Jet> riemann(const MetricField& g, const JetPoint& x) {
    const int m = g.dim;
    auto gamma = christoffel(g, x);
    auto at = [&](int k, int i, int j) -> const Jet& { return gamma[(k * m + i) * m + j]; };

    std::vector<Jet> r(m * m * m * m, x[0].constant_like(0.0));
    for (int l = 0; l < m; ++l)
        for (int k = 0; k < m; ++k)
            for (int i = 0; i < m; ++i)
                for (int j = i + 1; j < m; ++j) {
                    Jet sum = at(l, j, k).derivative(i) - at(l, i, k).derivative(j);
                    for (int e = 0; e < m; ++e)
                        sum = sum + at(l, i, e) * at(e, j, k) - at(l, j, e) * at(e, i, k);
                    r[((l * m + k) * m + i) * m + j] = sum;
                    r[((l * m + k) * m + j) * m + i] = -sum;
                }
    return r;
}

Jet sqrt_det(const MetricField& g, const JetPoint& x) {
    Jet det = detail::jet_matrix_det(metric_components(g, x), g.dim);
    if (det.value() <= kDegenerateThreshold)
        throw DegenerateError("metric determinant is not positive", det.value());
    return pow(det, 0.5);
}

std::vector<Jet> grad_scalar(const MetricField& g, const JetPoint& x, const Jet& f) {
    const int m = g.dim;
    auto ginv = metric_inverse(g, x);
    std::vector<Jet> df;
    df.reserve(m);
    for (int j = 0; j < m; ++j) df.push_back(f.derivative(j));
    std::vector<Jet> grad;
    grad.reserve(m);
    for (int i = 0; i < m; ++i) {
        Jet sum = ginv[i * m] * df[0];
        for (int j = 1; j < m; ++j) sum = sum + ginv[i * m + j] * df[j];
        grad.push_back(sum);
    }
    return grad;
}

Jet div_one_form(const MetricField& g, const OneFormField& theta, const JetPoint& x) {
    const int m = g.dim;
    auto ginv = metric_inverse(g, x);
    auto gamma = christoffel(g, x);
    auto comps = theta.components(x);
    if (static_cast<int>(comps.size()) != m)
        throw ShapeError("one-form component count does not match the metric dimension");

    Jet sum = comps[0].derivative(0).constant_like(0.0);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            Jet term = comps[j].derivative(i);
            for (int k = 0; k < m; ++k) term = term - gamma[(k * m + i) * m + j] * comps[k];
            sum = sum + ginv[i * m + j] * term;
        }
    return sum;
}

std::vector<double> metric_inverse(const MetricField& g, std::span<const double> x) {
    return detail::jet_values(metric_inverse(g, Jet::lift_point(x, 1)));
}

std::vector<double> christoffel(const MetricField& g, std::span<const double> x) {
    return detail::jet_values(christoffel(g, Jet::lift_point(x, 1)));
}

std::vector<double> riemann(const MetricField& g, std::span<const double> x) {
    return detail::jet_values(riemann(g, Jet::lift_point(x, 2)));
}

double sqrt_det(const MetricField& g, std::span<const double> x) {
    return sqrt_det(g, Jet::lift_point(x, 1)).value();
}

std::vector<double> grad_scalar(const MetricField& g, const JetScalarFn& f,
                                std::span<const double> x) {
    auto lifted = Jet::lift_point(x, 1);
    return detail::jet_values(grad_scalar(g, lifted, f(lifted)));
}

double div_one_form(const MetricField& g, const OneFormField& theta, std::span<const double> x) {
    return div_one_form(g, theta, Jet::lift_point(x, 2)).value();
}

} // namespace pq

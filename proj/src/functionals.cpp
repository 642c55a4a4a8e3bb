#include "pq/functionals.hpp"

#include <cmath>
#include <numbers>

namespace pq {

namespace {

constexpr double kBumpTail = 1e-9; // profile underflows double precision past this

double value_det(std::vector<double> a, int m) {
    double det = 1.0;
    for (int col = 0; col < m; ++col) {
        int pivot = col;
        for (int r = col + 1; r < m; ++r)
            if (std::abs(a[r * m + col]) > std::abs(a[pivot * m + col])) pivot = r;
        if (a[pivot * m + col] == 0.0) return 0.0;
        if (pivot != col) {
            det = -det;
            for (int j = col; j < m; ++j) std::swap(a[pivot * m + j], a[col * m + j]);
        }
        det *= a[col * m + col];
        for (int r = col + 1; r < m; ++r) {
            const double f = a[r * m + col] / a[col * m + col];
            for (int j = col; j < m; ++j) a[r * m + j] -= f * a[col * m + j];
        }
    }
    return det;
}

// |tau_p|^q is smooth in |tau_p|^2 only for even q; elsewhere a vanishing
// p-tension on a node is a modeling error and fails loudly.
void require_integrand_regular(double q, double norm_sq) {
    const double half = q / 2.0;
    if (std::abs(half - std::round(half)) < 1e-12) return;
    if (norm_sq <= kDegenerateThreshold)
        throw DegenerateError("(p,q)-energy integrand: |tau_p| vanished under a fractional power",
                              norm_sq);
}

double tau_p_norm_sq_value(const detail::MapJets& mj, double p) {
    auto tau_p = detail::p_tension(mj, p);
    double nsq = 0.0;
    for (int a = 0; a < mj.n; ++a)
        for (int b = 0; b < mj.n; ++b)
            nsq += mj.h_phi[a * mj.n + b].value() * tau_p[a].value() * tau_p[b].value();
    return nsq;
}

double sqrt_det_value(const detail::MapJets& mj) {
    std::vector<double> g(mj.m * mj.m);
    for (int i = 0; i < mj.m * mj.m; ++i) g[i] = mj.g[i].value();
    return std::sqrt(value_det(std::move(g), mj.m));
}

template <class Fn>
void for_each_node(const QuadratureRule& rule, Fn&& fn) {
    const int dims = static_cast<int>(rule.nodes.size());
    std::vector<int> idx(dims, 0);
    std::vector<double> point(dims);
    for (;;) {
        double weight = 1.0;
        for (int d = 0; d < dims; ++d) {
            point[d] = rule.nodes[d][idx[d]];
            weight *= rule.weights[d][idx[d]];
        }
        fn(std::span<const double>(point), weight);
        int d = 0;
        while (d < dims) {
            if (++idx[d] < static_cast<int>(rule.nodes[d].size())) break;
            idx[d] = 0;
            ++d;
        }
        if (d == dims) return;
    }
}

void require_node_inside(const BoxDomain& box, std::span<const double> x) {
    if (box.guard && !box.guard(x))
        throw GuardError("quadrature node outside the chart guard");
}

} // namespace

void BoxDomain::validate() const {
    if (dim < 1 || static_cast<int>(lo.size()) != dim || static_cast<int>(hi.size()) != dim)
        throw ShapeError("box bounds do not match its dimension");
    for (int d = 0; d < dim; ++d)
        if (!(lo[d] < hi[d])) throw ParameterError("box bounds must satisfy lo < hi");
}

bool BoxDomain::contains_ball(std::span<const double> center, double radius) const {
    if (static_cast<int>(center.size()) != dim || !(radius > 0.0)) return false;
    for (int d = 0; d < dim; ++d)
        if (!(center[d] - radius > lo[d] && center[d] + radius < hi[d])) return false;
    return true;
}

double BoxDomain::min_half_extent() const {
    double h = (hi[0] - lo[0]) / 2;
    for (int d = 1; d < dim; ++d) h = std::min(h, (hi[d] - lo[d]) / 2);
    return h;
}

QuadratureRule QuadratureRule::gauss_legendre(const BoxDomain& box, int nodes_per_axis) {
    box.validate();
    if (nodes_per_axis < 1) throw ParameterError("quadrature needs at least one node per axis");
    const int n = nodes_per_axis;

    // Legendre roots and weights on [-1, 1] by Newton iteration.
    std::vector<double> xs(n), ws(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        xs[i] = -x;
        xs[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        ws[i] = w;
        ws[n - 1 - i] = w;
    }

    QuadratureRule rule;
    rule.nodes.resize(box.dim);
    rule.weights.resize(box.dim);
    for (int d = 0; d < box.dim; ++d) {
        const double mid = (box.lo[d] + box.hi[d]) / 2;
        const double half = (box.hi[d] - box.lo[d]) / 2;
        rule.nodes[d].resize(n);
        rule.weights[d].resize(n);
        for (int k = 0; k < n; ++k) {
            rule.nodes[d][k] = mid + half * xs[k];
            rule.weights[d][k] = half * ws[k];
        }
    }
    return rule;
}

int QuadratureRule::node_count() const {
    int count = 1;
    for (const auto& axis : nodes) count *= static_cast<int>(axis.size());
    return count;
}

std::vector<double> VariationField::values(std::span<const double> x) const {
    if (in_support && !in_support(x)) return std::vector<double>(target_dim, 0.0);
    auto jets = components(Jet::lift_point(x, 1));
    std::vector<double> v(jets.size());
    for (std::size_t i = 0; i < jets.size(); ++i) v[i] = jets[i].value();
    return v;
}

VariationField make_bump(const BoxDomain& box, std::span<const double> center, double radius,
                         std::span<const double> direction) {
    box.validate();
    if (!box.contains_ball(center, radius))
        throw ParameterError("bump ball is not strictly inside the box");
    if (direction.empty()) throw ShapeError("bump direction must have target components");

    std::vector<double> c(center.begin(), center.end());
    std::vector<double> dir(direction.begin(), direction.end());
    const double r2 = radius * radius;

    VariationField v;
    v.target_dim = static_cast<int>(dir.size());
    v.in_support = [c, r2](std::span<const double> x) {
        double rho = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) rho += (x[i] - c[i]) * (x[i] - c[i]);
        return rho / r2 < 1.0 - kBumpTail;
    };
    v.components = [c, r2, dir](const JetPoint& x) {
        Jet rho = (x[0] - c[0]) * (x[0] - c[0]);
        for (std::size_t i = 1; i < c.size(); ++i) rho = rho + (x[i] - c[i]) * (x[i] - c[i]);
        rho = rho / r2;
        std::vector<Jet> out;
        out.reserve(dir.size());
        if (rho.value() >= 1.0 - kBumpTail) {
            out.assign(dir.size(), x[0].constant_like(0.0));
            return out;
        }
        const Jet profile = exp(1.0 - 1.0 / (1.0 - rho));
        for (double d : dir) out.push_back(profile * d);
        return out;
    };
    v.support_lo.resize(c.size());
    v.support_hi.resize(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        v.support_lo[i] = c[i] - radius;
        v.support_hi[i] = c[i] + radius;
    }
    v.ball_center = c;
    v.ball_radius = radius;
    return v;
}

BallRule BallRule::make(std::span<const double> center, double radius, int resolution) {
    const int dim = static_cast<int>(center.size());
    if (dim < 2 || dim > 4)
        throw ShapeError("ball quadrature supports dimensions 2 to 4");
    if (!(radius > 0.0)) throw ParameterError("ball quadrature needs a positive radius");
    const int n = std::max(resolution, 4);

    // radial panels geometrically refined toward s = radius
    const int panels = 7;
    const int per_panel = std::max(4, n / 4);
    BoxDomain unit;
    unit.dim = 1;
    std::vector<double> rs, rw;
    double b_lo = 0.0;
    for (int k = 0; k < panels; ++k) {
        const double b_hi = k + 1 == panels ? radius : radius * (1.0 - std::pow(2.0, -(k + 1)));
        unit.lo = {b_lo};
        unit.hi = {b_hi};
        auto panel = QuadratureRule::gauss_legendre(unit, per_panel);
        for (int i = 0; i < per_panel; ++i) {
            const double s = panel.nodes[0][i];
            rs.push_back(s);
            rw.push_back(panel.weights[0][i] * std::pow(s, dim - 1));
        }
        b_lo = b_hi;
    }

    // smooth angular factors: Gauss in the polar angles, midpoint around the
    // equatorial one
    const int n_theta = std::max(12, n);
    const int n_polar = std::max(6, n / 2);
    BallRule rule;
    auto emit = [&](std::span<const double> unit_vec, double angular_weight) {
        for (std::size_t ri = 0; ri < rs.size(); ++ri) {
            std::vector<double> x(center.begin(), center.end());
            for (int d = 0; d < dim; ++d) x[d] += rs[ri] * unit_vec[d];
            rule.points.push_back(std::move(x));
            rule.weights.push_back(rw[ri] * angular_weight);
        }
    };

    const double two_pi = 2.0 * std::numbers::pi;
    if (dim == 2) {
        for (int i = 0; i < n_theta; ++i) {
            const double theta = two_pi * (i + 0.5) / n_theta;
            const double u[] = {std::cos(theta), std::sin(theta)};
            emit(u, two_pi / n_theta);
        }
    } else if (dim == 3) {
        unit.lo = {-1.0};
        unit.hi = {1.0};
        auto polar = QuadratureRule::gauss_legendre(unit, n_polar);
        for (int j = 0; j < n_polar; ++j) {
            const double c = polar.nodes[0][j];
            const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
            for (int i = 0; i < n_theta; ++i) {
                const double theta = two_pi * (i + 0.5) / n_theta;
                const double u[] = {c, s * std::cos(theta), s * std::sin(theta)};
                emit(u, polar.weights[0][j] * two_pi / n_theta);
            }
        }
    } else {
        unit.lo = {0.0};
        unit.hi = {std::numbers::pi};
        auto psi_rule = QuadratureRule::gauss_legendre(unit, n_polar);
        auto phi_rule = QuadratureRule::gauss_legendre(unit, n_polar);
        for (int a = 0; a < n_polar; ++a) {
            const double psi = psi_rule.nodes[0][a];
            const double w_psi = psi_rule.weights[0][a] * std::sin(psi) * std::sin(psi);
            for (int b = 0; b < n_polar; ++b) {
                const double phi = phi_rule.nodes[0][b];
                const double w_phi = phi_rule.weights[0][b] * std::sin(phi);
                for (int i = 0; i < n_theta; ++i) {
                    const double theta = two_pi * (i + 0.5) / n_theta;
                    const double u[] = {std::cos(psi), std::sin(psi) * std::cos(phi),
                                        std::sin(psi) * std::sin(phi) * std::cos(theta),
                                        std::sin(psi) * std::sin(phi) * std::sin(theta)};
                    emit(u, w_psi * w_phi * two_pi / n_theta);
                }
            }
        }
    }
    return rule;
}

VariationField operator+(const VariationField& a, const VariationField& b) {
    if (a.target_dim != b.target_dim)
        throw ShapeError("variation fields have different target dimensions");
    VariationField sum;
    sum.target_dim = a.target_dim;
    sum.in_support = [sa = a.in_support, sb = b.in_support](std::span<const double> x) {
        return (!sa || sa(x)) || (!sb || sb(x));
    };
    sum.components = [ca = a.components, cb = b.components](const JetPoint& x) {
        auto va = ca(x);
        auto vb = cb(x);
        for (std::size_t i = 0; i < va.size(); ++i) va[i] = va[i] + vb[i];
        return va;
    };
    if (!a.support_lo.empty() && !b.support_lo.empty()) {
        sum.support_lo.resize(a.support_lo.size());
        sum.support_hi.resize(a.support_hi.size());
        for (std::size_t i = 0; i < a.support_lo.size(); ++i) {
            sum.support_lo[i] = std::min(a.support_lo[i], b.support_lo[i]);
            sum.support_hi[i] = std::max(a.support_hi[i], b.support_hi[i]);
        }
    }
    // a composite field is no longer a single ball
    return sum;
}

std::optional<BoxDomain> support_box(const BoxDomain& box, const VariationField& v) {
    BoxDomain sub = box;
    if (!v.support_lo.empty()) {
        for (int d = 0; d < box.dim; ++d) {
            sub.lo[d] = std::max(box.lo[d], v.support_lo[d]);
            sub.hi[d] = std::min(box.hi[d], v.support_hi[d]);
            if (!(sub.lo[d] < sub.hi[d])) return std::nullopt;
        }
    }
    return sub;
}

VariationField seeded_bump(const BoxDomain& box, int target_dim, Rng& rng) {
    const double radius = (0.55 + 0.2 * rng.uniform()) * box.min_half_extent();
    std::vector<double> center(box.dim);
    for (int d = 0; d < box.dim; ++d) {
        const double mid = (box.lo[d] + box.hi[d]) / 2;
        const double slack = (box.hi[d] - box.lo[d]) / 2 - radius;
        center[d] = mid + 0.9 * slack * rng.uniform(-1.0, 1.0);
    }
    std::vector<double> dir(target_dim);
    double norm = 0.0;
    while (norm < 0.1) {
        norm = 0.0;
        for (double& d : dir) {
            d = rng.uniform(-1.0, 1.0);
            norm += d * d;
        }
        norm = std::sqrt(norm);
    }
    const double scale = 0.01 * (0.75 + 0.5 * rng.uniform()) / norm;
    for (double& d : dir) d *= scale;
    return make_bump(box, center, radius, dir);
}

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double energy_pq(const MapField& map, double p, double q, const BoxDomain& box,
                 const QuadratureRule& rule) {
    map.validate();
    std::vector<double> contributions;
    contributions.reserve(rule.node_count());
    for_each_node(rule, [&](std::span<const double> x, double w) {
        require_node_inside(box, x);
        auto mj = detail::make_map_jets(map, Jet::lift_point(x, 2));
        const double nsq = tau_p_norm_sq_value(mj, p);
        require_integrand_regular(q, nsq);
        contributions.push_back(w * std::pow(std::max(nsq, 0.0), q / 2.0) / q *
                                sqrt_det_value(mj));
    });
    return pairwise_sum(contributions);
}

double energy_p(const MapField& map, double p, const BoxDomain& box, const QuadratureRule& rule) {
    map.validate();
    std::vector<double> contributions;
    contributions.reserve(rule.node_count());
    for_each_node(rule, [&](std::span<const double> x, double w) {
        require_node_inside(box, x);
        auto mj = detail::make_map_jets(map, Jet::lift_point(x, 2));
        const double e = detail::energy_density(mj).value();
        contributions.push_back(w * std::pow(std::max(e, 0.0), p / 2.0) / p *
                                sqrt_det_value(mj));
    });
    return pairwise_sum(contributions);
}

MapField translated_map(const MapField& map, const VariationField& v, double t) {
    if (v.target_dim != map.target_dim)
        throw ShapeError("variation target dimension does not match the map");
    MapField shifted = map;
    shifted.components = [phi = map.components, vc = v.components, t](const JetPoint& x) {
        auto out = phi(x);
        auto dv = vc(x);
        for (std::size_t a = 0; a < out.size(); ++a) out[a] = out[a] + dv[a] * t;
        return out;
    };
    return shifted;
}

namespace {

int rule_nodes_per_axis(const QuadratureRule& rule) {
    return static_cast<int>(rule.nodes.empty() ? 0 : rule.nodes[0].size());
}

// Comparison nodes for the first-variation check: the ball rule for a single
// bump, the support bounding box otherwise. Returns the node count.
template <class Fn>
int for_each_support_node(const VariationField& v, const BoxDomain& box, int resolution,
                          Fn&& fn) {
    if (v.ball_radius > 0.0) {
        auto ball = BallRule::make(v.ball_center, v.ball_radius, resolution);
        for (std::size_t i = 0; i < ball.points.size(); ++i)
            fn(std::span<const double>(ball.points[i]), ball.weights[i]);
        return static_cast<int>(ball.points.size());
    }
    auto sub = support_box(box, v);
    if (!sub) return 0;
    auto rule = QuadratureRule::gauss_legendre(*sub, resolution);
    for_each_node(rule, fn);
    return rule.node_count();
}

double fd_density(const MapField& m, double p, double q, const JetPoint& lifted) {
    auto mj = detail::make_map_jets(m, lifted);
    const double nsq = tau_p_norm_sq_value(mj, p);
    require_integrand_regular(q, nsq);
    return std::pow(std::max(nsq, 0.0), q / 2.0) / q * sqrt_det_value(mj);
}

double fd_over_nodes(const MapField& map, double p, double q, const VariationField& v,
                     const BoxDomain& box, int resolution, double step) {
    const MapField plus = translated_map(map, v, step);
    const MapField minus = translated_map(map, v, -step);
    const MapField plus_half = translated_map(map, v, step / 2);
    const MapField minus_half = translated_map(map, v, -step / 2);

    std::vector<double> contributions;
    for_each_support_node(v, box, resolution, [&](std::span<const double> x, double w) {
        require_node_inside(box, x);
        if (v.in_support && !v.in_support(x)) return; // identically zero contribution
        auto lifted = Jet::lift_point(x, 2);
        const double d_full =
            (fd_density(plus, p, q, lifted) - fd_density(minus, p, q, lifted)) / (2 * step);
        const double d_half =
            (fd_density(plus_half, p, q, lifted) - fd_density(minus_half, p, q, lifted)) / step;
        contributions.push_back(w * (4 * d_half - d_full) / 3);
    });
    return pairwise_sum(contributions);
}

double pairing_contribution(const MapField& map, double p, double q, const VariationField& v,
                            std::span<const double> x) {
    auto tau = pq_tension(map, p, q, x);
    auto vv = v.values(x);
    auto phi = map_components(map, Jet::lift_point(x, 1));
    std::vector<double> y0(phi.size());
    for (std::size_t a = 0; a < phi.size(); ++a) y0[a] = phi[a].value();
    auto h = metric_components(map.target_metric, Jet::lift_point(y0, 1));
    const int n = map.target_dim;
    double inner = 0.0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) inner += h[a * n + b].value() * vv[a] * tau[b];
    auto mj = detail::make_map_jets(map, Jet::lift_point(x, 2));
    return -inner * sqrt_det_value(mj);
}

} // namespace

double first_variation_fd(const MapField& map, double p, double q, const VariationField& v,
                          const BoxDomain& box, const QuadratureRule& rule, double step) {
    map.validate();
    if (!(step > 0.0)) throw ParameterError("finite-difference step must be positive");
    return fd_over_nodes(map, p, q, v, box, rule_nodes_per_axis(rule), step);
}

// The pairing keeps the caller's nodes: the integrand is exactly linear in v
// on a fixed grid.
double variation_pairing(const MapField& map, double p, double q, const VariationField& v,
                         const BoxDomain& box, const QuadratureRule& rule) {
    map.validate();
    std::vector<double> contributions;
    contributions.reserve(rule.node_count());
    for_each_node(rule, [&](std::span<const double> x, double w) {
        require_node_inside(box, x);
        if (v.in_support && !v.in_support(x)) return;
        contributions.push_back(w * pairing_contribution(map, p, q, v, x));
    });
    return pairwise_sum(contributions);
}

double variation_pairing(const MapField& map, double p, double q, const VariationField& v,
                         const BoxDomain& box, const BallRule& rule) {
    map.validate();
    std::vector<double> contributions;
    contributions.reserve(rule.points.size());
    for (std::size_t i = 0; i < rule.points.size(); ++i) {
        std::span<const double> x(rule.points[i]);
        require_node_inside(box, x);
        if (v.in_support && !v.in_support(x)) continue;
        contributions.push_back(rule.weights[i] * pairing_contribution(map, p, q, v, x));
    }
    return pairwise_sum(contributions);
}

bool VariationReport::zero_case() const {
    return std::max(std::abs(fd_value), std::abs(pairing_value)) <= zero_scale();
}

bool VariationReport::passes(double rel_tol) const {
    if (zero_case()) return true;
    return abs_residual <= rel_tol * std::max(std::abs(fd_value), std::abs(pairing_value));
}

VariationReport variation_residual(const MapField& map, double p, double q,
                                   const VariationField& v, const BoxDomain& box,
                                   const QuadratureRule& rule, double step) {
    VariationReport report;
    report.nodes_per_axis = rule_nodes_per_axis(rule);
    report.step = step;
    report.fd_value = first_variation_fd(map, p, q, v, box, rule, step);
    if (v.ball_radius > 0.0) {
        auto ball = BallRule::make(v.ball_center, v.ball_radius, report.nodes_per_axis);
        report.pairing_value = variation_pairing(map, p, q, v, box, ball);
        report.quadrature_points = static_cast<int>(ball.points.size());
    } else {
        report.pairing_value = variation_pairing(map, p, q, v, box, rule);
        report.quadrature_points = rule.node_count();
    }
    report.abs_residual = std::abs(report.fd_value - report.pairing_value);
    const double scale = std::max(std::abs(report.fd_value), std::abs(report.pairing_value));
    report.rel_residual = scale > 0.0 ? report.abs_residual / scale : 0.0;
    // the energy only sets the vanishing-variation scale; modest nodes suffice
    report.energy = energy_pq(map, p, q, box,
                              QuadratureRule::gauss_legendre(
                                  box, std::min(report.nodes_per_axis, 8)));
    return report;
}

} // namespace pq

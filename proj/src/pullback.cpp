#include "pq/pullback.hpp"

#include <cmath>

namespace pq {

void MapField::validate() const {
    if (source_dim < 1 || target_dim < 1) throw ShapeError("map dimensions must be positive");
    if (!components) throw ShapeError("map has no component functions");
    if (source_metric.dim != source_dim)
        throw ShapeError("source metric dimension does not match the map");
    if (target_metric.dim != target_dim)
        throw ShapeError("target metric dimension does not match the map");
}

namespace detail {

namespace {

double dvalue(const Jet& j, int dim, int var) {
    MultiIndex e(dim, 0);
    e[var] = 1;
    return j.partial(e);
}

void check_params(double p, double q) {
    if (!(p >= 2.0 - 1e-12) || !(q >= 2.0 - 1e-12))
        throw ParameterError("p and q must both be at least 2");
}

} // namespace

Jet guarded_pow(const Jet& a, double r, const char* what) {
    try {
        return pow(a, r);
    } catch (const DegenerateError&) {
        throw DegenerateError(std::string("degenerate point: ") + what +
                                  " collapsed under exponent " + std::to_string(r),
                              a.value());
    }
}

Jet compose(const Jet& outer, const std::vector<Jet>& args, std::span<const double> center) {
    const int n = outer.dim();
    if (static_cast<int>(args.size()) != n || args.size() != center.size())
        throw ShapeError("composition argument count does not match the outer jet");
    const int result_order = std::min(outer.order(), args[0].order());
    const int arg_dim = args[0].dim();

    // powers of the centered arguments, truncated to the result order
    std::vector<std::vector<Jet>> pw(n);
    for (int d = 0; d < n; ++d) {
        Jet dy = (args[d] - center[d]).truncated(std::min(result_order, args[d].order()));
        pw[d].push_back(dy);
        for (int e = 2; e <= result_order; ++e) pw[d].push_back(pw[d].back() * dy);
    }

    Jet acc = Jet::constant(arg_dim, result_order, 0.0);
    const auto& layout = detail::JetLayout::get(n, outer.order());
    for (int t = 0; t < layout.count; ++t) {
        int deg = 0;
        for (int d = 0; d < n; ++d) deg += layout.exponents[t][d];
        if (deg > result_order) continue; // centered powers kill these terms
        const double c = outer.coefficients()[t];
        if (c == 0.0) continue;
        Jet term = Jet::constant(arg_dim, result_order, c);
        for (int d = 0; d < n; ++d) {
            const int e = layout.exponents[t][d];
            if (e > 0) term = term * pw[d][e - 1];
        }
        acc = acc + term;
    }
    return acc;
}

MapJets make_map_jets(const MapField& map, JetPoint x) {
    map.validate();
    MapJets mj;
    mj.map = &map;
    mj.m = map.source_dim;
    mj.n = map.target_dim;
    mj.order = x[0].order();
    if (static_cast<int>(x.size()) != mj.m)
        throw ShapeError("lifted point dimension does not match the map source");

    mj.phi = map.components(x);
    if (static_cast<int>(mj.phi.size()) != mj.n)
        throw ShapeError("map returned a wrong component count");

    std::vector<double> y0(mj.n);
    for (int a = 0; a < mj.n; ++a) y0[a] = mj.phi[a].value();
    map.target_metric.require_inside(y0);

    mj.dphi.reserve(mj.n * mj.m);
    for (int a = 0; a < mj.n; ++a)
        for (int i = 0; i < mj.m; ++i) mj.dphi.push_back(mj.phi[a].derivative(i));

    mj.g = metric_components(map.source_metric, x);
    mj.ginv = jet_matrix_inverse(mj.g, mj.m);
    mj.gamma_src = christoffel_core(mj.g, mj.ginv, mj.m);
    mj.h_phi = metric_components(map.target_metric, mj.phi);
    mj.x = std::move(x);

    // Christoffels of h live on the target chart; build their jets in target
    // variables at phi(x) and compose with the map jets. A constant target
    // metric short-circuits the whole branch.
    auto y_lift = Jet::lift_point(y0, mj.order);
    auto h_at_y = metric_components(map.target_metric, y_lift);
    mj.target_flat = true;
    for (int var = 0; var < mj.n && mj.target_flat; ++var)
        for (const auto& entry : h_at_y) {
            if (!entry.derivative(var).is_zero()) {
                mj.target_flat = false;
                break;
            }
        }
    if (mj.target_flat) {
        mj.gamma_h_phi.assign(mj.n * mj.n * mj.n,
                              Jet::constant(mj.m, std::max(mj.order - 1, 0), 0.0));
        return mj;
    }
    auto h_inv = jet_matrix_inverse(h_at_y, mj.n);
    auto gamma_y = christoffel_core(h_at_y, h_inv, mj.n);
    bool gamma_zero = true;
    for (const auto& entry : gamma_y) gamma_zero = gamma_zero && entry.is_zero();
    if (gamma_zero) {
        mj.target_flat = true;
        mj.gamma_h_phi.assign(gamma_y.size(), Jet::constant(mj.m, std::max(mj.order - 1, 0), 0.0));
    } else {
        mj.gamma_h_phi.reserve(gamma_y.size());
        for (const auto& entry : gamma_y) mj.gamma_h_phi.push_back(compose(entry, mj.phi, y0));
    }
    return mj;
}

Jet energy_density(const MapJets& mj) {
    Jet e = mj.dphi[0].constant_like(0.0);
    for (int a = 0; a < mj.n; ++a)
        for (int b = 0; b < mj.n; ++b) {
            if (mj.h_phi[a * mj.n + b].is_zero()) continue;
            Jet hs = mj.ginv[0].constant_like(0.0);
            for (int i = 0; i < mj.m; ++i)
                for (int j = 0; j < mj.m; ++j) {
                    if (mj.ginv[i * mj.m + j].is_zero() || mj.dphi_at(a, i).is_zero() ||
                        mj.dphi_at(b, j).is_zero())
                        continue;
                    hs = hs + mj.ginv[i * mj.m + j] * mj.dphi_at(a, i) * mj.dphi_at(b, j);
                }
            e = e + mj.h_phi[a * mj.n + b] * hs;
        }
    return e;
}

std::vector<Jet> tension(const MapJets& mj) {
    const int m = mj.m, n = mj.n;
    // contracted source Christoffels: C^k = g^{ij} Gamma^k_{ij}
    std::vector<Jet> contracted;
    contracted.reserve(m);
    for (int k = 0; k < m; ++k) {
        Jet sum = mj.ginv[0].constant_like(0.0);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                if (mj.ginv[i * m + j].is_zero() || mj.gsrc(k, i, j).is_zero()) continue;
                sum = sum + mj.ginv[i * m + j] * mj.gsrc(k, i, j);
            }
        contracted.push_back(sum);
    }
    // H^{ab} = g^{ij} d_i phi^a d_j phi^b
    std::vector<Jet> hs(n * n, mj.dphi[0].constant_like(0.0));
    if (!mj.target_flat) {
        for (int a = 0; a < n; ++a)
            for (int b = a; b < n; ++b) {
                Jet sum = mj.dphi[0].constant_like(0.0);
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < m; ++j) {
                        if (mj.ginv[i * m + j].is_zero() || mj.dphi_at(a, i).is_zero() ||
                            mj.dphi_at(b, j).is_zero())
                            continue;
                        sum = sum + mj.ginv[i * m + j] * mj.dphi_at(a, i) * mj.dphi_at(b, j);
                    }
                hs[a * n + b] = sum;
                hs[b * n + a] = sum;
            }
    }

    std::vector<Jet> tau;
    tau.reserve(n);
    for (int c = 0; c < n; ++c) {
        Jet sum = mj.dphi[0].derivative(0).constant_like(0.0);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                if (mj.ginv[i * m + j].is_zero()) continue;
                Jet dd = mj.dphi_at(c, i).derivative(j);
                if (dd.is_zero()) continue;
                sum = sum + mj.ginv[i * m + j] * dd;
            }
        for (int k = 0; k < m; ++k) {
            if (contracted[k].is_zero() || mj.dphi_at(c, k).is_zero()) continue;
            sum = sum - contracted[k] * mj.dphi_at(c, k);
        }
        if (!mj.target_flat)
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) {
                    if (mj.gh(c, a, b).is_zero()) continue;
                    sum = sum + mj.gh(c, a, b) * hs[a * n + b];
                }
        tau.push_back(sum);
    }
    return tau;
}

std::vector<Jet> p_tension(const MapJets& mj, double p) {
    auto tau = tension(mj);
    const Jet e = energy_density(mj);
    const Jet s = guarded_pow(e, (p - 2.0) / 2.0, "|dphi|^2 entering |dphi|^{p-2}");

    std::vector<Jet> ds;
    ds.reserve(mj.m);
    for (int j = 0; j < mj.m; ++j) ds.push_back(s.derivative(j));
    std::vector<Jet> grad_s;
    grad_s.reserve(mj.m);
    for (int i = 0; i < mj.m; ++i) {
        Jet sum = mj.ginv[i * mj.m] * ds[0];
        for (int j = 1; j < mj.m; ++j) sum = sum + mj.ginv[i * mj.m + j] * ds[j];
        grad_s.push_back(sum);
    }

    std::vector<Jet> out;
    out.reserve(mj.n);
    for (int c = 0; c < mj.n; ++c) {
        Jet push = grad_s[0] * mj.dphi_at(c, 0);
        for (int i = 1; i < mj.m; ++i) push = push + grad_s[i] * mj.dphi_at(c, i);
        out.push_back(s * tau[c] + push);
    }
    return out;
}

std::vector<Jet> covariant_along(const MapJets& mj, const std::vector<Jet>& w, int dir) {
    if (static_cast<int>(w.size()) != mj.n)
        throw ShapeError("field along the map has a wrong component count");
    std::vector<Jet> out;
    out.reserve(mj.n);
    for (int c = 0; c < mj.n; ++c) {
        Jet sum = w[c].derivative(dir);
        if (!mj.target_flat)
            for (int a = 0; a < mj.n; ++a)
                for (int b = 0; b < mj.n; ++b)
                    sum = sum + mj.gh(c, a, b) * w[a] * mj.dphi_at(b, dir);
        out.push_back(sum);
    }
    return out;
}

WParts w_parts(const MapJets& mj, double p, double q) {
    WParts parts;
    parts.tau_p = p_tension(mj, p);
    Jet nsq = parts.tau_p[0].constant_like(0.0);
    for (int a = 0; a < mj.n; ++a)
        for (int b = 0; b < mj.n; ++b)
            nsq = nsq + mj.h_phi[a * mj.n + b] * parts.tau_p[a] * parts.tau_p[b];
    parts.tau_p_norm_sq = nsq;
    parts.q_factor = guarded_pow(nsq, (q - 2.0) / 2.0, "|tau_p|^2 entering |tau_p|^{q-2}");
    parts.w.reserve(mj.n);
    for (int c = 0; c < mj.n; ++c) parts.w.push_back(parts.q_factor * parts.tau_p[c]);
    return parts;
}

namespace {

// Traced covariant derivative of a one-form worth of vector fields along the
// map: out^c = g^{ij} [ (nabla_i v_j)^c - Gamma^k_{ij} v_k^c ], at values.
std::vector<double> traced_covariant(const MapJets& mj,
                                     const std::vector<std::vector<Jet>>& v) {
    const int m = mj.m, n = mj.n;
    std::vector<double> ginv(m * m), gsrc(m * m * m), dphi(n * m);
    for (int i = 0; i < m * m; ++i) ginv[i] = mj.ginv[i].value();
    for (int i = 0; i < m * m * m; ++i) gsrc[i] = mj.gamma_src[i].value();
    for (int i = 0; i < n * m; ++i) dphi[i] = mj.dphi[i].value();

    std::vector<double> out(n, 0.0);
    for (int c = 0; c < n; ++c) {
        double sum = 0.0;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                const double gij = ginv[i * m + j];
                if (gij == 0.0) continue;
                double nabla = dvalue(v[j][c], m, i);
                if (!mj.target_flat)
                    for (int a = 0; a < n; ++a)
                        for (int b = 0; b < n; ++b)
                            nabla += mj.gh(c, a, b).value() * v[j][a].value() * dphi[b * m + i];
                for (int k = 0; k < m; ++k)
                    nabla -= gsrc[(k * m + i) * m + j] * v[k][c].value();
                sum += gij * nabla;
            }
        out[c] = sum;
    }
    return out;
}

// -coeff * trace R^N(field, dphi) dphi at values, using
// R(X, Y)Z = R^l_{kij} X^i Y^j Z^k e_l on the target chart.
std::vector<double> curvature_trace(const MapJets& mj, const std::vector<double>& field,
                                    double coeff) {
    const int m = mj.m, n = mj.n;
    std::vector<double> out(n, 0.0);
    if (mj.target_flat || coeff == 0.0) return out;

    std::vector<double> y0(n);
    for (int a = 0; a < n; ++a) y0[a] = mj.phi[a].value();
    auto r = riemann(mj.map->target_metric, y0);

    std::vector<double> dphi(n * m);
    for (int i = 0; i < n * m; ++i) dphi[i] = mj.dphi[i].value();
    std::vector<double> ginv(m * m);
    for (int i = 0; i < m * m; ++i) ginv[i] = mj.ginv[i].value();

    for (int c = 0; c < n; ++c) {
        double sum = 0.0;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                const double gij = ginv[i * m + j];
                if (gij == 0.0) continue;
                double term = 0.0;
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b)
                        for (int d = 0; d < n; ++d)
                            term += r[((c * n + d) * n + a) * n + b] * field[a] *
                                    dphi[b * m + i] * dphi[d * m + j];
                sum += gij * term;
            }
        out[c] = -coeff * sum;
    }
    return out;
}

std::vector<double> values_of(const std::vector<Jet>& jets) {
    std::vector<double> v(jets.size());
    for (std::size_t i = 0; i < jets.size(); ++i) v[i] = jets[i].value();
    return v;
}

} // namespace

} // namespace detail

std::vector<Jet> map_components(const MapField& map, const JetPoint& x) {
    map.validate();
    map.source_metric.require_inside(detail::jet_values(x));
    auto phi = map.components(x);
    if (static_cast<int>(phi.size()) != map.target_dim)
        throw ShapeError("map returned a wrong component count");
    map.target_metric.require_inside(detail::jet_values(phi));
    return phi;
}

std::vector<Jet> differential(const MapField& map, const JetPoint& x) {
    auto phi = map_components(map, x);
    std::vector<Jet> d;
    d.reserve(map.target_dim * map.source_dim);
    for (int a = 0; a < map.target_dim; ++a)
        for (int i = 0; i < map.source_dim; ++i) d.push_back(phi[a].derivative(i));
    return d;
}

Jet energy_density(const MapField& map, const JetPoint& x) {
    return detail::energy_density(detail::make_map_jets(map, x));
}

std::vector<Jet> tension(const MapField& map, const JetPoint& x) {
    return detail::tension(detail::make_map_jets(map, x));
}

std::vector<Jet> p_tension(const MapField& map, double p, const JetPoint& x) {
    if (!(p >= 2.0 - 1e-12)) throw ParameterError("p must be at least 2");
    return detail::p_tension(detail::make_map_jets(map, x), p);
}

std::vector<Jet> pullback_derivative(const MapField& map, const VectorFieldAlongMap& w, int dir,
                                     const JetPoint& x) {
    auto mj = detail::make_map_jets(map, x);
    if (dir < 0 || dir >= mj.m) throw ShapeError("pullback direction out of range");
    return detail::covariant_along(mj, w.components(x), dir);
}

VectorFieldAlongMap w_field(const MapField& map, double p, double q) {
    detail::check_params(p, q);
    map.validate();
    VectorFieldAlongMap w;
    w.target_dim = map.target_dim;
    w.components = [map, p, q](const JetPoint& x) {
        return detail::w_parts(detail::make_map_jets(map, x), p, q).w;
    };
    return w;
}

std::vector<double> differential(const MapField& map, std::span<const double> x) {
    return detail::jet_values(differential(map, Jet::lift_point(x, 1)));
}

double energy_density(const MapField& map, std::span<const double> x) {
    return energy_density(map, Jet::lift_point(x, 1)).value();
}

std::vector<double> tension(const MapField& map, std::span<const double> x) {
    return detail::jet_values(tension(map, Jet::lift_point(x, 2)));
}

std::vector<double> p_tension(const MapField& map, double p, std::span<const double> x) {
    return detail::jet_values(p_tension(map, p, Jet::lift_point(x, 2)));
}

std::vector<double> pullback_derivative(const MapField& map, const VectorFieldAlongMap& w,
                                        int dir, std::span<const double> x, int order) {
    return detail::jet_values(pullback_derivative(map, w, dir, Jet::lift_point(x, order)));
}

std::vector<double> PqTensionTerms::total() const {
    std::vector<double> sum(trace.size(), 0.0);
    for (std::size_t i = 0; i < sum.size(); ++i)
        sum[i] = curvature[i] + trace[i] + p_trace[i];
    return sum;
}

PqTensionTerms pq_tension_terms(const MapField& map, double p, double q, std::span<const double> x,
                                int order, bool include_curvature) {
    detail::check_params(p, q);
    if (order < 4) throw ParameterError("tau_{p,q} needs jet order at least 4");

    auto mj = detail::make_map_jets(map, Jet::lift_point(x, order));
    const int m = mj.m, n = mj.n;
    auto wp = detail::w_parts(mj, p, q);
    const Jet e = detail::energy_density(mj);
    const Jet s = detail::guarded_pow(e, (p - 2.0) / 2.0, "|dphi|^2 entering |dphi|^{p-2}");

    std::vector<std::vector<Jet>> cov_w(m);
    for (int j = 0; j < m; ++j) cov_w[j] = detail::covariant_along(mj, wp.w, j);

    PqTensionTerms terms;

    // (ii) -trace nabla^phi |dphi|^{p-2} nabla^phi W
    std::vector<std::vector<Jet>> v(m);
    for (int j = 0; j < m; ++j) {
        v[j].reserve(n);
        for (int c = 0; c < n; ++c) v[j].push_back(s * cov_w[j][c]);
    }
    terms.trace = detail::traced_covariant(mj, v);
    for (double& t : terms.trace) t = -t;

    // (iii) -(p-2) trace nabla^phi |dphi|^{p-4} <nabla W, dphi> dphi
    terms.p_trace.assign(n, 0.0);
    if (std::abs(p - 2.0) > 1e-14) {
        Jet inner = cov_w[0][0].constant_like(0.0);
        for (int k = 0; k < m; ++k)
            for (int l = 0; l < m; ++l) {
                Jet h_pair = cov_w[0][0].constant_like(0.0);
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b)
                        h_pair = h_pair + mj.h_phi[a * n + b] * cov_w[k][a] * mj.dphi_at(b, l);
                inner = inner + mj.ginv[k * m + l] * h_pair;
            }
        const Jet b_scalar =
            detail::guarded_pow(e, (p - 4.0) / 2.0, "|dphi|^2 entering |dphi|^{p-4}") * inner;
        std::vector<std::vector<Jet>> a_fields(m);
        for (int j = 0; j < m; ++j) {
            a_fields[j].reserve(n);
            for (int c = 0; c < n; ++c) a_fields[j].push_back(b_scalar * mj.dphi_at(c, j));
        }
        terms.p_trace = detail::traced_covariant(mj, a_fields);
        for (double& t : terms.p_trace) t = -(p - 2.0) * t;
    }

    // (i) -|dphi|^{p-2} |tau_p|^{q-2} trace R^N(tau_p, dphi) dphi
    if (include_curvature) {
        terms.curvature = detail::curvature_trace(mj, detail::values_of(wp.tau_p),
                                                  s.value() * wp.q_factor.value());
    } else {
        terms.curvature.assign(n, 0.0);
    }
    return terms;
}

std::vector<double> pq_tension(const MapField& map, double p, double q, std::span<const double> x,
                               int order) {
    return pq_tension_terms(map, p, q, x, order).total();
}

std::vector<double> bi_p_tension(const MapField& map, double p, std::span<const double> x,
                                 int order) {
    if (!(p >= 2.0 - 1e-12)) throw ParameterError("p must be at least 2");
    if (order < 4) throw ParameterError("tau_{p,2} needs jet order at least 4");

    auto mj = detail::make_map_jets(map, Jet::lift_point(x, order));
    const int m = mj.m, n = mj.n;
    auto tau_p = detail::p_tension(mj, p);
    const Jet e = detail::energy_density(mj);
    const Jet s = detail::guarded_pow(e, (p - 2.0) / 2.0, "|dphi|^2 entering |dphi|^{p-2}");

    std::vector<std::vector<Jet>> cov_tau(m);
    for (int j = 0; j < m; ++j) cov_tau[j] = detail::covariant_along(mj, tau_p, j);

    std::vector<std::vector<Jet>> u(m);
    for (int j = 0; j < m; ++j) {
        u[j].reserve(n);
        for (int c = 0; c < n; ++c) u[j].push_back(s * cov_tau[j][c]);
    }
    auto trace = detail::traced_covariant(mj, u);

    std::vector<double> p_trace(n, 0.0);
    if (std::abs(p - 2.0) > 1e-14) {
        Jet inner = cov_tau[0][0].constant_like(0.0);
        for (int k = 0; k < m; ++k)
            for (int l = 0; l < m; ++l) {
                Jet h_pair = cov_tau[0][0].constant_like(0.0);
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b)
                        h_pair = h_pair + mj.h_phi[a * n + b] * cov_tau[k][a] * mj.dphi_at(b, l);
                inner = inner + mj.ginv[k * m + l] * h_pair;
            }
        const Jet b_scalar =
            detail::guarded_pow(e, (p - 4.0) / 2.0, "|dphi|^2 entering |dphi|^{p-4}") * inner;
        std::vector<std::vector<Jet>> a_fields(m);
        for (int j = 0; j < m; ++j) {
            a_fields[j].reserve(n);
            for (int c = 0; c < n; ++c) a_fields[j].push_back(b_scalar * mj.dphi_at(c, j));
        }
        p_trace = detail::traced_covariant(mj, a_fields);
    }

    auto curvature = detail::curvature_trace(mj, detail::values_of(tau_p), s.value());

    std::vector<double> out(n, 0.0);
    for (int c = 0; c < n; ++c)
        out[c] = curvature[c] - trace[c] - (p - 2.0) * p_trace[c];
    return out;
}

std::vector<double> p_bitension(const MapField& map, double pb, std::span<const double> x,
                                int order) {
    if (!(pb >= 2.0 - 1e-12)) throw ParameterError("pb must be at least 2");
    if (order < 4) throw ParameterError("tau_{2,pb} needs jet order at least 4");

    auto mj = detail::make_map_jets(map, Jet::lift_point(x, order));
    const int m = mj.m, n = mj.n;
    auto tau = detail::tension(mj);
    Jet nsq = tau[0].constant_like(0.0);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) nsq = nsq + mj.h_phi[a * n + b] * tau[a] * tau[b];
    const Jet q_factor =
        detail::guarded_pow(nsq, (pb - 2.0) / 2.0, "|tau|^2 entering |tau|^{pb-2}");

    std::vector<Jet> v;
    v.reserve(n);
    for (int c = 0; c < n; ++c) v.push_back(q_factor * tau[c]);

    std::vector<std::vector<Jet>> cov_v(m);
    for (int j = 0; j < m; ++j) cov_v[j] = detail::covariant_along(mj, v, j);
    auto trace2 = detail::traced_covariant(mj, cov_v);

    auto curvature = detail::curvature_trace(mj, detail::values_of(tau), q_factor.value());

    std::vector<double> out(n, 0.0);
    for (int c = 0; c < n; ++c) out[c] = curvature[c] - trace2[c];
    return out;
}

Theta3Report theta3_divergence_residual(const MapField& map, double p, double q,
                                        std::span<const double> x, int order) {
    detail::check_params(p, q);
    if (order < 3) throw ParameterError("theta3 diagnostics need jet order at least 3");

    OneFormField theta;
    theta.dim = map.source_dim;
    theta.components = [map, p, q](const JetPoint& xj) {
        auto mj = detail::make_map_jets(map, xj);
        auto wp = detail::w_parts(mj, p, q);
        const Jet e = detail::energy_density(mj);
        const Jet s = detail::guarded_pow(e, (p - 2.0) / 2.0, "|dphi|^2 entering |dphi|^{p-2}");
        std::vector<Jet> comps;
        comps.reserve(mj.m);
        for (int i = 0; i < mj.m; ++i) {
            Jet sum = wp.w[0].constant_like(0.0);
            for (int a = 0; a < mj.n; ++a)
                for (int b = 0; b < mj.n; ++b)
                    sum = sum + mj.h_phi[a * mj.n + b] * wp.w[a] * (s * mj.dphi_at(b, i));
            comps.push_back(sum);
        }
        return comps;
    };

    auto lifted = Jet::lift_point(x, order);
    Theta3Report report;
    report.div_theta3 = div_one_form(map.source_metric, theta, lifted).value();

    auto mj = detail::make_map_jets(map, lifted);
    auto wp = detail::w_parts(mj, p, q);
    report.tau_p_norm_q = std::pow(std::max(wp.tau_p_norm_sq.value(), 0.0), q / 2.0);
    report.residual = report.div_theta3 - report.tau_p_norm_q;
    for (int j = 0; j < mj.m; ++j) {
        auto cov = detail::covariant_along(mj, wp.w, j);
        for (const Jet& comp : cov)
            report.parallelism_defect = std::max(report.parallelism_defect,
                                                 std::abs(comp.value()));
    }
    return report;
}

} // namespace pq

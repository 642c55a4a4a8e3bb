#include "pq/catalog.hpp"

#include <algorithm>
#include <cmath>

namespace pq {

namespace {

BoxDomain box_of(const MetricField& source, std::vector<double> lo, std::vector<double> hi) {
    BoxDomain box;
    box.dim = source.dim;
    box.lo = std::move(lo);
    box.hi = std::move(hi);
    box.guard = source.guard;
    box.validate();
    return box;
}

} // namespace

ExampleCase example_cylinder() {
    ExampleCase ex;
    ex.name = "cylinder";
    ex.source_dim = 3;
    ex.target_dim = 2;
    ex.default_p = 2.0;
    ex.default_q = 2.0;
    ex.params_valid = [](double p, double q) { return p >= 2.0 && q >= 2.0; };
    ex.params_requirement = "p >= 2 and q >= 2";

    ex.make = [](double p, double q) {
        if (!(p >= 2.0 && q >= 2.0))
            throw ParameterError("cylinder case needs p >= 2 and q >= 2");
        MetricField source = conformal_metric(
            3,
            [p](const JetPoint& x) {
                return pow(x[0] * x[0] + x[1] * x[1], -1.0 / p);
            },
            [](std::span<const double> x) { return x[0] * x[0] + x[1] * x[1] > 0.0; },
            "cylinder source (x^2+y^2)^(-1/p) delta");
        MapField map;
        map.source_dim = 3;
        map.target_dim = 2;
        map.source_metric = std::move(source);
        map.target_metric = euclidean_metric(2, "flat R^2");
        map.components = [](const JetPoint& x) {
            std::vector<Jet> out;
            out.reserve(2);
            out.push_back(sqrt(x[0] * x[0] + x[1] * x[1]));
            out.push_back(x[2]);
            return out;
        };
        return map;
    };

    auto w_u = [](double p, double q) {
        return std::pow(2.0, (p - 2.0) * (q - 1.0) / 2.0) * std::pow(2.0 - 3.0 / p, q - 1.0);
    };
    ex.expected_w = [w_u](double p, double q, std::span<const double>) {
        return std::vector<double>{w_u(p, q), 0.0};
    };
    ex.expected_tau_p = [w_u](double p, std::span<const double>) {
        return std::vector<double>{w_u(p, 2.0), 0.0};
    };
    ex.expected_tau_p_pow = [](double p, double q) {
        return std::pow(2.0, (p - 2.0) * (q - 2.0) / 2.0) * std::pow(2.0 - 3.0 / p, q - 2.0);
    };
    ex.expected_tau_pq = [](double, double, std::span<const double>) {
        return std::vector<double>{0.0, 0.0};
    };

    MetricField guard_src = ex.make(2.0, 2.0).source_metric;
    ex.domain = box_of(guard_src, {0.5, 0.5, -0.5}, {1.5, 1.5, 0.5});
    return ex;
}

ExampleCase example_hyperbolic(double p_seed) {
    if (!(p_seed > 4.0))
        throw ParameterError("hyperbolic case needs p > 4 (got " + std::to_string(p_seed) + ")");

    ExampleCase ex;
    ex.name = "hyperbolic";
    ex.source_dim = 4;
    ex.target_dim = 4;
    ex.default_p = p_seed;
    ex.default_q = 2.0;
    // The displayed constants are proper only for p > 4; the map itself is a
    // perfectly good smooth map for any p >= 2 and the variation and
    // reduction suites evaluate it there.
    ex.params_valid = [](double p, double q) { return p > 4.0 && q >= 2.0; };
    ex.params_requirement = "p > 4 and q >= 2";

    ex.make = [](double p, double q) {
        if (!(p >= 2.0 && q >= 2.0))
            throw ParameterError("hyperbolic case needs p >= 2 and q >= 2");
        MetricField source = conformal_metric(
            4, [p](const JetPoint& x) { return pow(x[3], -2.0 / p); },
            [](std::span<const double> x) { return x[3] > 0.0; },
            "hyperbolic source x4^(-2/p) delta");
        MapField map;
        map.source_dim = 4;
        map.target_dim = 4;
        map.source_metric = std::move(source);
        map.target_metric = euclidean_metric(4, "flat R^4");
        map.components = [](const JetPoint& x) { return x; };
        return map;
    };

    ex.expected_w = [](double p, double q, std::span<const double>) {
        std::vector<double> w(4, 0.0);
        w[3] = std::pow(2.0, (p - 2.0) * (q - 1.0)) * std::pow(p, 1.0 - q) *
               std::pow(p - 4.0, q - 1.0);
        return w;
    };
    ex.expected_tau_p = [](double p, std::span<const double>) {
        std::vector<double> t(4, 0.0);
        t[3] = std::pow(2.0, p - 2.0) * (p - 4.0) / p;
        return t;
    };
    ex.expected_tau_p_pow = [](double p, double q) {
        return std::pow(2.0, (p - 2.0) * (q - 2.0)) * std::pow(p, 2.0 - q) *
               std::pow(p - 4.0, q - 2.0);
    };
    ex.expected_tau_pq = [](double, double, std::span<const double>) {
        return std::vector<double>(4, 0.0);
    };

    MetricField guard_src = ex.make(p_seed, 2.0).source_metric;
    ex.domain = box_of(guard_src, {0.5, 0.5, 0.5, 0.5}, {1.5, 1.5, 1.5, 1.5});
    return ex;
}

ExampleCase example_power(double s) {
    if (s == 1.0) throw ParameterError("power case needs s != 1");

    ExampleCase ex;
    ex.name = "power";
    ex.source_dim = 2;
    ex.target_dim = 2;
    ex.default_p = 2.0;
    ex.default_q = 2.0;
    ex.params_valid = [](double p, double q) { return p >= 2.0 && q >= 2.0; };
    ex.params_requirement = "p >= 2 and q >= 2";

    ex.make = [s](double p, double q) {
        if (!(p >= 2.0 && q >= 2.0)) throw ParameterError("power case needs p >= 2 and q >= 2");
        MetricField source = euclidean_metric(2, "flat half-plane x > 0");
        source.guard = [](std::span<const double> x) { return x[0] > 0.0; };
        MapField map;
        map.source_dim = 2;
        map.target_dim = 2;
        map.source_metric = std::move(source);
        map.target_metric = euclidean_metric(2, "flat R^2");
        map.components = [s](const JetPoint& x) {
            std::vector<Jet> out;
            out.reserve(2);
            out.push_back(pow(x[0], s));
            out.push_back(x[0].constant_like(0.0));
            return out;
        };
        return map;
    };

    auto tau_p_coeff = [s](double p) {
        return std::pow(s, p - 1.0) * (p * s - p - s + 1.0);
    };
    ex.expected_tau_p = [s, tau_p_coeff](double p, std::span<const double> x) {
        return std::vector<double>{tau_p_coeff(p) * std::pow(x[0], p * s - p - s), 0.0};
    };
    ex.expected_w = [s, tau_p_coeff](double p, double q, std::span<const double> x) {
        // |tau_p|^{q-2} tau_p with x > 0: |c|^{q-2} c x^{(q-1)(ps-p-s)}
        const double c = tau_p_coeff(p);
        const double u = std::pow(std::abs(c), q - 2.0) * c *
                         std::pow(x[0], (q - 1.0) * (p * s - p - s));
        return std::vector<double>{u, 0.0};
    };
    ex.expected_tau_pq = [s](double p, double q, std::span<const double> x) {
        const double u = -(p - 1.0) * (q - 1.0) * (p * s - p - s) *
                         (p * q * s - p * q - q * s - s + 1.0) *
                         std::pow(p * s - p - s + 1.0, q - 1.0) *
                         std::pow(s, p - 2.0 + (p - 1.0) * (q - 1.0)) *
                         std::pow(x[0], p * q * s - p * q - q * s - s);
        return std::vector<double>{u, 0.0};
    };

    MetricField guard_src = ex.make(2.0, 2.0).source_metric;
    ex.domain = box_of(guard_src, {0.5, -0.5}, {2.0, 0.5});
    return ex;
}

std::vector<std::string> catalog_names() { return {"cylinder", "hyperbolic", "power"}; }

ExampleCase example_by_name(const std::string& name, double p, double s) {
    if (name == "cylinder") return example_cylinder();
    if (name == "hyperbolic") return example_hyperbolic(p);
    if (name == "power") return example_power(s);
    throw ParameterError("unknown catalog case '" + name + "'");
}

std::vector<std::vector<double>> sample_points(const BoxDomain& box, int count,
                                               std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<double>> points;
    points.reserve(count);
    while (static_cast<int>(points.size()) < count) {
        std::vector<double> x(box.dim);
        for (int d = 0; d < box.dim; ++d) x[d] = rng.uniform(box.lo[d], box.hi[d]);
        if (box.guard && !box.guard(x)) continue;
        points.push_back(std::move(x));
    }
    return points;
}

std::pair<double, double> critical_s(double p, double q) {
    if (!(p >= 2.0 && q >= 2.0)) throw ParameterError("critical exponents need p, q >= 2");
    const double denom = p * q - q - 1.0;
    if (denom == 0.0) throw ParameterError("critical exponent denominator pq - q - 1 vanishes");
    return {p / (p - 1.0), (p * q - 1.0) / denom};
}

ScanResult scan_critical_s(double p, double q, double s_lo, double s_hi, int samples) {
    if (!(s_lo < s_hi)) throw ParameterError("scan interval is empty");
    if (s_lo <= 1.0 && s_hi >= 1.0) throw ParameterError("scan interval must exclude s = 1");
    if (samples < 16) throw ParameterError("scan needs at least 16 samples");

    const double probe[] = {kScanProbeX, 0.0};
    auto tau_u = [&](double s) {
        auto map = example_power(s).make(p, q);
        return pq_tension(map, p, q, probe)[0];
    };

    ScanResult result;
    result.samples.reserve(samples);
    for (int i = 0; i < samples; ++i) {
        const double s = s_lo + (s_hi - s_lo) * i / (samples - 1);
        result.samples.emplace_back(s, tau_u(s));
    }

    // a sample is a numerical zero when it collapses relative to its neighbours
    auto is_zero = [&](int i) {
        const double f = std::abs(result.samples[i].second);
        double neighbour = 0.0;
        if (i > 0) neighbour = std::max(neighbour, std::abs(result.samples[i - 1].second));
        if (i + 1 < samples) neighbour = std::max(neighbour, std::abs(result.samples[i + 1].second));
        return f <= 1e-10 * neighbour;
    };

    for (int i = 0; i < samples; ++i) {
        if (!is_zero(i)) continue;
        int j = i;
        while (j + 1 < samples && is_zero(j + 1)) ++j;
        result.roots.push_back((result.samples[i].first + result.samples[j].first) / 2);
        i = j;
    }

    for (int i = 0; i + 1 < samples; ++i) {
        if (is_zero(i) || is_zero(i + 1)) continue;
        auto [sa, fa] = result.samples[i];
        auto [sb, fb] = result.samples[i + 1];
        if (fa * fb < 0.0) {
            while (sb - sa > 1e-8) {
                const double mid = (sa + sb) / 2;
                const double fm = tau_u(mid);
                if (fm == 0.0) {
                    sa = sb = mid;
                    break;
                }
                if (fa * fm < 0.0) {
                    sb = mid;
                    fb = fm;
                } else {
                    sa = mid;
                    fa = fm;
                }
            }
            result.roots.push_back((sa + sb) / 2);
        }
    }
    std::sort(result.roots.begin(), result.roots.end());

    // near-vanishing local minima that never produced a sign change
    double max_abs = 0.0;
    for (const auto& [s, f] : result.samples) max_abs = std::max(max_abs, std::abs(f));
    for (int i = 1; i + 1 < samples; ++i) {
        auto [s, f] = result.samples[i];
        if (is_zero(i) || std::abs(f) > 1e-10 * std::max(1.0, max_abs)) continue;
        if (std::abs(f) > std::abs(result.samples[i - 1].second) ||
            std::abs(f) > std::abs(result.samples[i + 1].second))
            continue;
        bool near_root = false;
        for (double r : result.roots) near_root |= std::abs(r - s) < 2e-2 * (s_hi - s_lo);
        if (!near_root) result.touching_zeros.push_back(s);
    }
    return result;
}

} // namespace pq

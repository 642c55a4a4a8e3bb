#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "pq/geometry.hpp"
#include "pq/rng.hpp"
#include "test_support.hpp"

using pq::Jet;
using pq::JetPoint;
using pq::MetricField;

namespace {

// u_k closures of the conformal oracle Gamma^k_ij = d^k_i u_j + d^k_j u_i - d_ij u_k
using GradU = std::function<std::vector<double>(std::span<const double>)>;

struct TestMetric {
    MetricField metric;
    GradU grad_u;
    std::vector<double> lo, hi;
};

TestMetric cylinder_metric(double p) {
    TestMetric tm;
    tm.metric = pq::conformal_metric(
        3, [p](const JetPoint& x) { return pow(x[0] * x[0] + x[1] * x[1], -1.0 / p); },
        [](std::span<const double> x) { return x[0] * x[0] + x[1] * x[1] > 0.0; },
        "cylinder");
    tm.grad_u = [p](std::span<const double> x) {
        const double rho = x[0] * x[0] + x[1] * x[1];
        return std::vector<double>{-x[0] / (p * rho), -x[1] / (p * rho), 0.0};
    };
    tm.lo = {0.5, 0.5, -0.5};
    tm.hi = {1.5, 1.5, 0.5};
    return tm;
}

TestMetric hyperbolic_metric(double p) {
    TestMetric tm;
    tm.metric = pq::conformal_metric(
        4, [p](const JetPoint& x) { return pow(x[3], -2.0 / p); },
        [](std::span<const double> x) { return x[3] > 0.0; }, "hyperbolic");
    tm.grad_u = [p](std::span<const double> x) {
        return std::vector<double>{0.0, 0.0, 0.0, -1.0 / (p * x[3])};
    };
    tm.lo = {-0.5, -0.5, -0.5, 0.5};
    tm.hi = {0.5, 0.5, 0.5, 1.5};
    return tm;
}

TestMetric half_plane_metric() {
    TestMetric tm;
    tm.metric = pq::conformal_metric(
        2, [](const JetPoint& x) { return pow(x[1], -2.0); },
        [](std::span<const double> x) { return x[1] > 0.0; }, "half-plane");
    tm.grad_u = [](std::span<const double> x) {
        return std::vector<double>{0.0, -1.0 / x[1]};
    };
    tm.lo = {-1.0, 0.5};
    tm.hi = {1.0, 2.0};
    return tm;
}

TestMetric sphere_metric() {
    TestMetric tm;
    tm.metric = pq::conformal_metric(
        2,
        [](const JetPoint& x) {
            Jet denom = 1.0 + x[0] * x[0] + x[1] * x[1];
            return 4.0 / (denom * denom);
        },
        nullptr, "stereographic sphere");
    tm.grad_u = [](std::span<const double> x) {
        const double denom = 1.0 + x[0] * x[0] + x[1] * x[1];
        return std::vector<double>{-2.0 * x[0] / denom, -2.0 * x[1] / denom};
    };
    tm.lo = {-1.0, -1.0};
    tm.hi = {1.0, 1.0};
    return tm;
}

std::vector<TestMetric> catalog_metrics() {
    return {cylinder_metric(2.0), cylinder_metric(3.0), hyperbolic_metric(5.0),
            half_plane_metric(), sphere_metric()};
}

std::vector<double> seeded_point(const TestMetric& tm, pq::Rng& rng) {
    std::vector<double> x(tm.lo.size());
    for (std::size_t d = 0; d < x.size(); ++d) x[d] = rng.uniform(tm.lo[d], tm.hi[d]);
    return x;
}

double sectional(const MetricField& g, std::span<const double> x, int i, int j) {
    const int m = g.dim;
    auto r = pq::riemann(g, x);
    auto comps = pq::detail::jet_values(pq::metric_components(g, Jet::lift_point(x, 1)));
    double numerator = 0.0;
    for (int l = 0; l < m; ++l)
        numerator += r[((l * m + j) * m + i) * m + j] * comps[l * m + i];
    const double denom = comps[i * m + i] * comps[j * m + j] - comps[i * m + j] * comps[i * m + j];
    return numerator / denom;
}

} // namespace

TEST_CASE("metric inverse on the worked examples") {
    auto euclid = pq::euclidean_metric(3);
    auto inv = pq::metric_inverse(euclid, std::vector<double>{0.3, -2.0, 5.0});
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(inv[i * 3 + j] == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-15));

    auto cyl = cylinder_metric(2.0).metric;
    auto cyl_inv = pq::metric_inverse(cyl, std::vector<double>{1.0, 1.0, 0.0});
    for (int i = 0; i < 3; ++i)
        CHECK(cyl_inv[i * 3 + i] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));

    auto hyp = hyperbolic_metric(3.0).metric;
    auto hyp_inv = pq::metric_inverse(hyp, std::vector<double>{0.0, 0.0, 0.0, 8.0});
    for (int i = 0; i < 4; ++i)
        CHECK(hyp_inv[i * 4 + i] == doctest::Approx(4.0).epsilon(1e-14));

    // inverse contracted with the metric is the identity, jet-valued too
    auto lifted = Jet::lift_point(std::vector<double>{1.0, 1.0, 0.0}, 3);
    auto comps = pq::metric_components(cyl, lifted);
    auto inv_jets = pq::metric_inverse(cyl, lifted);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            Jet sum = comps[0].constant_like(0.0);
            for (int k = 0; k < 3; ++k) sum = sum + inv_jets[i * 3 + k] * comps[k * 3 + j];
            auto coeffs = sum.coefficients();
            CHECK(std::abs(coeffs[0] - (i == j ? 1.0 : 0.0)) <= 1e-13);
            for (std::size_t t = 1; t < coeffs.size(); ++t) CHECK(std::abs(coeffs[t]) <= 1e-13);
        }
}

TEST_CASE("christoffel symbols: flat, half-plane closed form, conformal oracle") {
    auto euclid = pq::euclidean_metric(2);
    for (double v : pq::christoffel(euclid, std::vector<double>{1.0, 2.0})) CHECK(v == 0.0);

    auto hp = half_plane_metric().metric;
    auto gamma = pq::christoffel(hp, std::vector<double>{0.0, 2.0});
    auto at = [&](int k, int i, int j) { return gamma[(k * 2 + i) * 2 + j]; };
    CHECK(at(0, 0, 1) == doctest::Approx(-0.5).epsilon(1e-14)); // Gamma^x_xy
    CHECK(at(1, 0, 0) == doctest::Approx(0.5).epsilon(1e-14));  // Gamma^y_xx
    CHECK(at(1, 1, 1) == doctest::Approx(-0.5).epsilon(1e-14)); // Gamma^y_yy
    CHECK(at(0, 0, 0) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(at(0, 1, 1) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(at(1, 0, 1) == doctest::Approx(0.0).epsilon(1e-14));

    pq::Rng rng(pq::kDefaultSeed);
    for (const auto& tm : catalog_metrics()) {
        const int m = tm.metric.dim;
        for (int trial = 0; trial < 20; ++trial) {
            auto x = seeded_point(tm, rng);
            auto g = pq::christoffel(tm.metric, x);
            auto du = tm.grad_u(x);
            for (int k = 0; k < m; ++k)
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < m; ++j) {
                        const double expected = (k == i ? du[j] : 0.0) + (k == j ? du[i] : 0.0) -
                                                (i == j ? du[k] : 0.0);
                        CHECK(std::abs(g[(k * m + i) * m + j] - expected) <= 1e-12);
                    }
        }
    }
}

TEST_CASE("christoffel symmetry in the lower indices is exact") {
    pq::Rng rng(17);
    for (const auto& tm : catalog_metrics()) {
        const int m = tm.metric.dim;
        for (int trial = 0; trial < 20; ++trial) {
            auto x = seeded_point(tm, rng);
            auto g = pq::christoffel(tm.metric, x);
            for (int k = 0; k < m; ++k)
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < m; ++j)
                        CHECK(g[(k * m + i) * m + j] == g[(k * m + j) * m + i]);
        }
    }
}

TEST_CASE("riemann tensor: flat metric vanishes, constant-curvature oracles") {
    auto euclid = pq::euclidean_metric(3);
    for (double v : pq::riemann(euclid, std::vector<double>{0.2, -0.7, 1.0})) CHECK(v == 0.0);

    auto hp = half_plane_metric().metric;
    CHECK(sectional(hp, std::vector<double>{0.0, 1.0}, 0, 1) == doctest::Approx(-1.0).epsilon(1e-11));
    CHECK(sectional(hp, std::vector<double>{0.4, 1.7}, 0, 1) == doctest::Approx(-1.0).epsilon(1e-11));

    auto sphere = sphere_metric().metric;
    CHECK(sectional(sphere, std::vector<double>{0.0, 0.0}, 0, 1) ==
          doctest::Approx(1.0).epsilon(1e-11));
    CHECK(sectional(sphere, std::vector<double>{0.5, -0.3}, 0, 1) ==
          doctest::Approx(1.0).epsilon(1e-11));
}

TEST_CASE("riemann symmetries at seeded points of every catalog metric") {
    pq::Rng rng(23);
    for (const auto& tm : catalog_metrics()) {
        const int m = tm.metric.dim;
        for (int trial = 0; trial < 20; ++trial) {
            auto x = seeded_point(tm, rng);
            auto r = pq::riemann(tm.metric, x);
            auto comps = pq::detail::jet_values(
                pq::metric_components(tm.metric, Jet::lift_point(x, 1)));
            auto at = [&](int l, int k, int i, int j) { return r[((l * m + k) * m + i) * m + j]; };

            for (int l = 0; l < m; ++l)
                for (int k = 0; k < m; ++k)
                    for (int i = 0; i < m; ++i)
                        for (int j = 0; j < m; ++j) {
                            CHECK(std::abs(at(l, k, i, j) + at(l, k, j, i)) <= 1e-12);
                            CHECK(std::abs(at(l, k, i, j) + at(l, i, j, k) + at(l, j, k, i)) <=
                                  1e-11);
                        }

            // lowered pair symmetry R_{lkij} = R_{ijlk}
            std::vector<double> lowered(m * m * m * m, 0.0);
            for (int l = 0; l < m; ++l)
                for (int k = 0; k < m; ++k)
                    for (int i = 0; i < m; ++i)
                        for (int j = 0; j < m; ++j) {
                            double sum = 0.0;
                            for (int e = 0; e < m; ++e)
                                sum += comps[l * m + e] * at(e, k, i, j);
                            lowered[((l * m + k) * m + i) * m + j] = sum;
                        }
            for (int l = 0; l < m; ++l)
                for (int k = 0; k < m; ++k)
                    for (int i = 0; i < m; ++i)
                        for (int j = 0; j < m; ++j)
                            CHECK(std::abs(lowered[((l * m + k) * m + i) * m + j] -
                                           lowered[((i * m + j) * m + l) * m + k]) <= 1e-11);
        }
    }
}

TEST_CASE("sqrt_det on the worked examples") {
    CHECK(pq::sqrt_det(pq::euclidean_metric(4), std::vector<double>{1.0, 2.0, 3.0, 4.0}) ==
          doctest::Approx(1.0).epsilon(1e-15));
    CHECK(pq::sqrt_det(cylinder_metric(2.0).metric, std::vector<double>{1.0, 1.0, 0.0}) ==
          doctest::Approx(std::pow(2.0, -0.75)).epsilon(1e-14));
    CHECK(pq::sqrt_det(hyperbolic_metric(3.0).metric, std::vector<double>{0.0, 0.0, 0.0, 1.0}) ==
          doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("grad_scalar on the worked examples") {
    auto euclid1 = pq::euclidean_metric(1);
    auto grad = pq::grad_scalar(
        euclid1, [](const JetPoint& x) { return x[0] * x[0]; }, std::vector<double>{3.0});
    CHECK(grad[0] == doctest::Approx(6.0).epsilon(1e-14));

    auto hp = half_plane_metric().metric;
    auto zero = pq::grad_scalar(
        hp, [](const JetPoint& x) { return x[0].constant_like(2.5); },
        std::vector<double>{0.3, 1.2});
    CHECK(zero[0] == 0.0);
    CHECK(zero[1] == 0.0);

    auto dy = pq::grad_scalar(
        hp, [](const JetPoint& x) { return x[1]; }, std::vector<double>{0.0, 2.0});
    CHECK(dy[0] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(dy[1] == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("div_one_form on the worked examples") {
    auto euclid = pq::euclidean_metric(2);
    pq::OneFormField radial;
    radial.dim = 2;
    radial.components = [](const JetPoint& x) { return std::vector<Jet>{x[0], x[1]}; };
    CHECK(pq::div_one_form(euclid, radial, std::vector<double>{0.7, -1.3}) ==
          doctest::Approx(2.0).epsilon(1e-14));

    pq::OneFormField zero;
    zero.dim = 2;
    zero.components = [](const JetPoint& x) {
        return std::vector<Jet>{x[0].constant_like(0.0), x[0].constant_like(0.0)};
    };
    CHECK(pq::div_one_form(euclid, zero, std::vector<double>{0.1, 0.2}) == 0.0);

    pq::OneFormField theta;
    theta.dim = 2;
    theta.components = [](const JetPoint& x) {
        return std::vector<Jet>{x[0] * 4.0, x[0].constant_like(0.0)};
    };
    CHECK(pq::div_one_form(euclid, theta, std::vector<double>{1.0, 0.0}) ==
          doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("error paths: guard violations, non-SPD metrics, asymmetry") {
    auto hp = half_plane_metric().metric;
    CHECK_THROWS_AS(pq::christoffel(hp, std::vector<double>{0.0, -1.0}), pq::GuardError);

    MetricField bad;
    bad.dim = 2;
    bad.name = "indefinite";
    bad.components = [](const JetPoint& x) {
        std::vector<Jet> out(4, x[0].constant_like(0.0));
        out[0] = x[0].constant_like(1.0);
        out[3] = x[0].constant_like(-1.0);
        return out;
    };
    CHECK_THROWS_AS(pq::metric_inverse(bad, std::vector<double>{0.0, 0.0}),
                    pq::DegenerateError);

    MetricField asym;
    asym.dim = 2;
    asym.name = "asymmetric";
    asym.components = [](const JetPoint& x) {
        std::vector<Jet> out(4, x[0].constant_like(0.0));
        out[0] = x[0].constant_like(1.0);
        out[1] = x[0].constant_like(0.25);
        out[3] = x[0].constant_like(1.0);
        return out;
    };
    CHECK_THROWS_AS(pq::metric_inverse(asym, std::vector<double>{0.0, 0.0}), pq::ShapeError);
}

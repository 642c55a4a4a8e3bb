// Acceptance suite: one line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "pq/catalog.hpp"
#include "pq/report.hpp"
#include "test_support.hpp"

namespace {

using clock_type = std::chrono::steady_clock;

struct Outcome {
    bool pass = true;
    double worst = 0.0; // largest scaled error observed
    std::string note;

    void bound(double err, double tol) {
        worst = std::max(worst, err);
        if (err > tol) pass = false;
    }
};

int failures = 0;

void run(const std::string& name, double budget_seconds,
         const std::function<void(Outcome&)>& body) {
    Outcome outcome;
    const auto start = clock_type::now();
    try {
        body(outcome);
    } catch (const std::exception& e) {
        outcome.pass = false;
        outcome.note = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(clock_type::now() - start).count();
    if (budget_seconds > 0.0 && seconds > budget_seconds) {
        outcome.pass = false;
        outcome.note += (outcome.note.empty() ? "" : "; ") + std::string("over time budget");
    }
    if (!outcome.pass) ++failures;
    std::printf("[%s] %-28s  worst %.3e  (%.2f s%s)%s%s\n", outcome.pass ? "PASS" : "FAIL",
                name.c_str(), outcome.worst, seconds,
                budget_seconds > 0 ? (" / " + pq::format_double(budget_seconds) + " s").c_str()
                                   : "",
                outcome.note.empty() ? "" : " - ", outcome.note.c_str());
    std::fflush(stdout);
}

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

std::vector<double> computed_w(const pq::MapField& map, double p, double q,
                               std::span<const double> x) {
    return pq::detail::jet_values(
        pq::detail::w_parts(pq::detail::make_map_jets(map, pq::Jet::lift_point(x, 4)), p, q).w);
}

void check_w_and_tau_pq(Outcome& o, const pq::ExampleCase& example, double p, double q,
                        const std::vector<std::vector<double>>& points) {
    auto map = example.make(p, q);
    for (const auto& x : points) {
        auto got = computed_w(map, p, q, x);
        auto want = example.expected_w(p, q, x);
        const double scale = max_abs(want);
        for (std::size_t c = 0; c < got.size(); ++c)
            o.bound(std::abs(got[c] - want[c]) / std::max(std::abs(want[c]), scale), 1e-8);

        auto tau_pq = pq::pq_tension(map, p, q, x);
        o.bound(max_abs(tau_pq) / (1.0 + scale) * 10.0, 1e-6); // i.e. <= 1e-7 * (1 + |W|)
    }
}

} // namespace

int main() {
    std::printf("acceptance suite\n");
    const auto suite_start = clock_type::now();

    run("1. cylinder constants", 5.0, [](Outcome& o) {
        auto example = pq::example_cylinder();
        auto points = pq::sample_points(example.domain, 10);
        for (auto [p, q] : {std::pair{2.0, 2.0}, {2.0, 3.0}, {3.0, 2.0}, {3.0, 4.0}, {5.0, 2.0}})
            check_w_and_tau_pq(o, example, p, q, points);
    });

    run("2. hyperbolic constants", 5.0, [](Outcome& o) {
        auto example = pq::example_hyperbolic(5.0);
        auto points = pq::sample_points(example.domain, 10);
        for (double p : {5.0, 6.0, 7.0}) {
            for (double q : {2.0, 3.0}) {
                check_w_and_tau_pq(o, example, p, q, points);
                auto map = example.make(p, q);
                const double want = example.expected_tau_p_pow(p, q);
                for (const auto& x : points) {
                    auto mj = pq::detail::make_map_jets(map, pq::Jet::lift_point(x, 4));
                    const double got = pq::detail::w_parts(mj, p, q).q_factor.value();
                    o.bound(std::abs(got - want) / std::abs(want), 1e-8);
                }
            }
        }
    });

    run("3. power-map closed form", 5.0, [](Outcome& o) {
        for (double s : {1.2, 1.8, 2.2, 2.7, 4.0}) {
            auto example = pq::example_power(s);
            for (double p : {2.0, 3.0, 4.0}) {
                for (double q : {2.0, 3.0, 4.0}) {
                    auto map = example.make(p, q);
                    for (double x : {0.5, 1.0, 1.5, 2.0}) {
                        const std::vector<double> pt{x, 0.25};
                        auto got = pq::pq_tension(map, p, q, pt);
                        auto want = example.expected_tau_pq(p, q, pt);
                        const double scale = max_abs(want);
                        for (std::size_t c = 0; c < got.size(); ++c)
                            o.bound(std::abs(got[c] - want[c]) /
                                        std::max(std::abs(want[c]), scale),
                                    1e-8);
                    }
                }
            }
        }
        // pinned instantiation
        auto tau = pq::pq_tension(pq::example_power(4.0).make(2.0, 2.0), 2.0, 2.0,
                                  std::vector<double>{1.0, 0.0});
        o.bound(std::abs(tau[0] + 24.0), 1e-10);
        o.bound(std::abs(tau[1]), 1e-10);
    });

    run("4. critical-exponent recovery", 10.0, [](Outcome& o) {
        struct Scan {
            double p, q, lo, hi;
        };
        for (const auto& scan : {Scan{2.0, 2.0, 1.2, 4.0}, Scan{3.0, 2.0, 1.1, 2.0},
                                 Scan{2.0, 3.0, 1.2, 4.0}, Scan{3.0, 4.0, 1.1, 2.0}}) {
            auto result = pq::scan_critical_s(scan.p, scan.q, scan.lo, scan.hi, 256);
            auto [s1, s2] = pq::critical_s(scan.p, scan.q);
            for (double expected : {s1, s2}) {
                if (expected < scan.lo || expected > scan.hi) continue;
                double best = 1e9;
                for (double r : result.roots) best = std::min(best, std::abs(r - expected));
                o.bound(best, 1e-6);
            }
        }
    });

    run("5. first-variation identity", 60.0, [](Outcome& o) {
        struct Setup {
            pq::ExampleCase example;
            int nodes;
        };
        std::vector<Setup> setups;
        setups.push_back({pq::example_cylinder(), 16});
        setups.push_back({pq::example_hyperbolic(5.0), 12});
        setups.push_back({pq::example_power(4.0), 24});
        std::uint64_t seed = pq::kDefaultSeed;
        for (const auto& setup : setups) {
            const auto& box = setup.example.domain;
            auto rule = pq::QuadratureRule::gauss_legendre(box, setup.nodes);
            for (double p : {2.0, 3.0}) {
                for (double q : {2.0, 3.0}) {
                    auto map = setup.example.make(p, q);
                    pq::Rng rng(seed++);
                    for (int trial = 0; trial < 3; ++trial) {
                        auto bump = pq::seeded_bump(box, map.target_dim, rng);
                        auto report = pq::variation_residual(map, p, q, bump, box, rule);
                        if (!report.zero_case()) o.bound(report.rel_residual, 1e-4);
                        if (!report.passes(1e-4)) o.pass = false;
                    }
                }
            }
        }
    });

    run("6. reduction oracles", 30.0, [](Outcome& o) {
        std::vector<pq::ExampleCase> cases{pq::example_cylinder(), pq::example_hyperbolic(5.0),
                                           pq::example_power(4.0)};
        for (const auto& example : cases) {
            auto points = pq::sample_points(example.domain, 20, pq::kDefaultSeed + 1);
            for (const auto& x : points) {
                for (double p : {2.0, 3.0, 5.0}) {
                    auto map = example.make(p, 2.0);
                    auto a = pq::pq_tension(map, p, 2.0, x);
                    auto b = pq::bi_p_tension(map, p, x);
                    const double scale = 1.0 + std::max(max_abs(a), max_abs(b));
                    for (std::size_t c = 0; c < a.size(); ++c)
                        o.bound(std::abs(a[c] - b[c]) / scale, 1e-9);
                }
                for (double qb : {2.0, 3.0, 4.0}) {
                    auto map = example.make(2.0, qb);
                    auto a = pq::pq_tension(map, 2.0, qb, x);
                    auto b = pq::p_bitension(map, qb, x);
                    const double scale = 1.0 + std::max(max_abs(a), max_abs(b));
                    for (std::size_t c = 0; c < a.size(); ++c)
                        o.bound(std::abs(a[c] - b[c]) / scale, 1e-9);
                }
            }
        }
    });

    run("7. theta3 identity", 10.0, [](Outcome& o) {
        auto cylinder = pq::example_cylinder();
        auto points = pq::sample_points(cylinder.domain, 5, pq::kDefaultSeed + 2);
        for (auto [p, q] : {std::pair{2.0, 2.0}, {3.0, 2.0}, {2.0, 3.0}}) {
            auto map = cylinder.make(p, q);
            for (const auto& x : points) {
                auto diag = pq::theta3_divergence_residual(map, p, q, x);
                o.bound(std::abs(diag.residual), 1e-8);
                o.bound(diag.parallelism_defect * 0.01, 1e-12); // defect <= 1e-10
            }
        }
        auto parabola = pq::example_power(2.0).make(2.0, 2.0);
        for (double x : {0.7, 1.0, 1.6}) {
            auto diag =
                pq::theta3_divergence_residual(parabola, 2.0, 2.0, std::vector<double>{x, 0.1});
            o.bound(std::abs(diag.residual), 1e-8);
            o.bound(diag.parallelism_defect * 0.01, 1e-12);
        }
        // the quartic map reports a genuine defect and is excluded by design
        auto quartic = pq::example_power(4.0).make(2.0, 2.0);
        auto diag =
            pq::theta3_divergence_residual(quartic, 2.0, 2.0, std::vector<double>{1.0, 0.0});
        if (diag.parallelism_defect < 1.0) {
            o.pass = false;
            o.note = "quartic defect unexpectedly small";
        }
    });

    run("8. geometry property suite", 5.0, [](Outcome& o) {
        struct TestMetric {
            pq::MetricField metric;
            std::function<std::vector<double>(std::span<const double>)> grad_u;
            std::vector<double> lo, hi;
            double curvature = 0.0; // 0 = not constant-curvature
        };
        std::vector<TestMetric> metrics;
        metrics.push_back({pq::conformal_metric(
                               3,
                               [](const pq::JetPoint& x) {
                                   return pow(x[0] * x[0] + x[1] * x[1], -1.0 / 2.0);
                               },
                               [](std::span<const double> x) {
                                   return x[0] * x[0] + x[1] * x[1] > 0.0;
                               },
                               "cylinder p=2"),
                           [](std::span<const double> x) {
                               const double rho = x[0] * x[0] + x[1] * x[1];
                               return std::vector<double>{-x[0] / (2 * rho), -x[1] / (2 * rho),
                                                          0.0};
                           },
                           {0.5, 0.5, -0.5},
                           {1.5, 1.5, 0.5},
                           0.0});
        metrics.push_back({pq::conformal_metric(
                               4, [](const pq::JetPoint& x) { return pow(x[3], -2.0 / 5.0); },
                               [](std::span<const double> x) { return x[3] > 0.0; },
                               "hyperbolic p=5"),
                           [](std::span<const double> x) {
                               return std::vector<double>{0.0, 0.0, 0.0, -1.0 / (5 * x[3])};
                           },
                           {-0.5, -0.5, -0.5, 0.5},
                           {0.5, 0.5, 0.5, 1.5},
                           0.0});
        metrics.push_back({pq::conformal_metric(
                               2, [](const pq::JetPoint& x) { return pow(x[1], -2.0); },
                               [](std::span<const double> x) { return x[1] > 0.0; },
                               "half-plane"),
                           [](std::span<const double> x) {
                               return std::vector<double>{0.0, -1.0 / x[1]};
                           },
                           {-1.0, 0.5},
                           {1.0, 2.0},
                           -1.0});
        metrics.push_back({pq::conformal_metric(
                               2,
                               [](const pq::JetPoint& x) {
                                   pq::Jet d = 1.0 + x[0] * x[0] + x[1] * x[1];
                                   return 4.0 / (d * d);
                               },
                               nullptr, "sphere"),
                           [](std::span<const double> x) {
                               const double d = 1.0 + x[0] * x[0] + x[1] * x[1];
                               return std::vector<double>{-2 * x[0] / d, -2 * x[1] / d};
                           },
                           {-1.0, -1.0},
                           {1.0, 1.0},
                           1.0});

        pq::Rng rng(pq::kDefaultSeed + 3);
        for (const auto& tm : metrics) {
            const int m = tm.metric.dim;
            for (int trial = 0; trial < 20; ++trial) {
                std::vector<double> x(m);
                for (int d = 0; d < m; ++d) x[d] = rng.uniform(tm.lo[d], tm.hi[d]);

                auto gamma = pq::christoffel(tm.metric, x);
                auto du = tm.grad_u(x);
                for (int k = 0; k < m; ++k)
                    for (int i = 0; i < m; ++i)
                        for (int j = 0; j < m; ++j) {
                            if (gamma[(k * m + i) * m + j] != gamma[(k * m + j) * m + i])
                                o.pass = false;
                            const double oracle = (k == i ? du[j] : 0.0) +
                                                  (k == j ? du[i] : 0.0) -
                                                  (i == j ? du[k] : 0.0);
                            o.bound(std::abs(gamma[(k * m + i) * m + j] - oracle), 1e-12);
                        }

                auto r = pq::riemann(tm.metric, x);
                auto comps = pq::detail::jet_values(
                    pq::metric_components(tm.metric, pq::Jet::lift_point(x, 1)));
                auto at = [&](int l, int k, int i, int j) {
                    return r[((l * m + k) * m + i) * m + j];
                };
                std::vector<double> lowered(m * m * m * m, 0.0);
                for (int l = 0; l < m; ++l)
                    for (int k = 0; k < m; ++k)
                        for (int i = 0; i < m; ++i)
                            for (int j = 0; j < m; ++j) {
                                o.bound(std::abs(at(l, k, i, j) + at(l, k, j, i)), 1e-12);
                                o.bound(std::abs(at(l, k, i, j) + at(l, i, j, k) +
                                                 at(l, j, k, i)) *
                                            0.1,
                                        1e-12); // Bianchi at 1e-11
                                double sum = 0.0;
                                for (int e = 0; e < m; ++e)
                                    sum += comps[l * m + e] * at(e, k, i, j);
                                lowered[((l * m + k) * m + i) * m + j] = sum;
                            }
                for (int l = 0; l < m; ++l)
                    for (int k = 0; k < m; ++k)
                        for (int i = 0; i < m; ++i)
                            for (int j = 0; j < m; ++j)
                                o.bound(std::abs(lowered[((l * m + k) * m + i) * m + j] -
                                                 lowered[((i * m + j) * m + l) * m + k]) *
                                            0.1,
                                        1e-12); // pair symmetry at 1e-11

                if (tm.curvature != 0.0) {
                    double numerator = 0.0;
                    for (int l = 0; l < m; ++l)
                        numerator += at(l, 1, 0, 1) * comps[l * m + 0];
                    const double denom =
                        comps[0] * comps[m + 1] - comps[1] * comps[1];
                    o.bound(std::abs(numerator / denom - tm.curvature), 1e-9);
                }
            }
        }
    });

    run("9. jet correctness", 30.0, [](Outcome& o) {
        pq::Rng rng(pq::kDefaultSeed);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> pc(6), rc(6), qc(3);
            for (auto& c : pc) c = rng.uniform(-0.6, 0.6);
            for (auto& c : rc) c = rng.uniform(-0.6, 0.6);
            for (auto& c : qc) c = rng.uniform(-0.3, 0.3);
            auto eval = [&](const auto& x, const auto& y) {
                auto poly = [&](const std::vector<double>& c) {
                    return c[0] + c[1] * x + c[2] * y + c[3] * x * y + c[4] * x * x +
                           c[5] * y * y;
                };
                auto qv = qc[0] + qc[1] * x + qc[2] * y;
                return poly(pc) + poly(rc) / (qv * qv + 4.0);
            };
            pqtest::ScalarFn fd_fn = [&](std::span<const double> x) { return eval(x[0], x[1]); };
            const double base[] = {rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2)};
            auto lifted = pq::Jet::lift_point(base, 4);
            pq::Jet fj = eval(lifted[0], lifted[1]);
            for (int a = 0; a <= 4; ++a)
                for (int b = 0; a + b <= 4; ++b) {
                    const pq::MultiIndex idx{a, b};
                    const double expected =
                        pqtest::fd_partial(fd_fn, {base[0], base[1]}, idx);
                    o.bound(pqtest::scaled_err(fj.partial(idx), expected), 1e-6);
                }
        }
    });

    const double total = std::chrono::duration<double>(clock_type::now() - suite_start).count();
    std::printf("%d of 9 criteria passed (total %.1f s)\n", 9 - failures, total);
    if (total > 120.0) {
        std::printf("[FAIL] full suite exceeded the 2 minute budget\n");
        return 1;
    }
    return failures == 0 ? 0 : 1;
}

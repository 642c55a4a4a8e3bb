#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pq/catalog.hpp"
#include "pq/expr.hpp"
#include "pq/report.hpp"

namespace {

using pq::Json;

constexpr int kExitPass = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

struct GlobalOptions {
    int order = pq::kDefaultOrder;
    int nodes = 16;
    double step = 1e-2;
    std::uint64_t seed = pq::kDefaultSeed;
    bool json = false;
    std::string out_path;
};

std::vector<double> parse_point(const std::string& text) {
    std::vector<double> point;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            point.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw pq::ParseError("bad coordinate '" + item + "' in point '" + text + "'");
        }
    }
    if (point.empty()) throw pq::ParseError("empty point '" + text + "'");
    return point;
}

Json to_json(std::span<const double> values) {
    Json array = Json::array();
    for (double v : values) array.push_back(v);
    return array;
}

double max_abs(std::span<const double> values) {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

void emit(const pq::RunReport& report, const GlobalOptions& global) {
    const std::string json_text = pq::write_canonical(report.to_json()) + "\n";
    if (global.json)
        std::cout << json_text;
    else
        std::cout << report.to_text();
    if (!global.out_path.empty()) {
        std::ofstream out(global.out_path);
        if (!out) throw pq::IoError("cannot open output file '" + global.out_path + "'");
        out << json_text;
        if (!out.good()) throw pq::IoError("failed writing '" + global.out_path + "'");
    }
}

class Stopwatch {
public:
    double ms() const {
        return std::chrono::duration<double, std::milli>(
                   std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// ---------------------------------------------------------------------------

int cmd_eval(const GlobalOptions& global, const std::string& case_name,
             const std::string& problem_path, double p, double q, double s,
             const std::string& at) {
    Stopwatch watch;
    pq::RunReport report;
    report.command = "eval";
    report.parameters["p"] = p;
    report.parameters["q"] = q;
    report.parameters["order"] = global.order;

    pq::MapField map;
    std::vector<double> point = parse_point(at);
    if (!problem_path.empty()) {
        report.parameters["problem"] = problem_path;
        map = pq::load_problem(problem_path).map;
    } else {
        report.parameters["case"] = case_name;
        if (case_name == "power") report.parameters["s"] = s;
        auto example = pq::example_by_name(case_name, std::max(p, 4.5), s);
        map = example.make(p, q);
    }
    report.parameters["at"] = to_json(point);

    map.source_metric.require_inside(point);
    report.values["energy_density"] = pq::energy_density(map, point);
    report.values["tension"] = to_json(pq::tension(map, point));
    report.values["p_tension"] = to_json(pq::p_tension(map, p, point));
    auto w = pq::w_field(map, p, q);
    report.values["w"] = to_json(pq::detail::jet_values(
        w.components(pq::Jet::lift_point(point, global.order))));
    report.values["pq_tension"] = to_json(pq::pq_tension(map, p, q, point, global.order));

    report.duration_ms = watch.ms();
    emit(report, global);
    return kExitPass;
}

// ---------------------------------------------------------------------------

void verify_case(const pq::ExampleCase& example, const std::vector<double>& p_grid,
                 const std::vector<double>& q_grid, const GlobalOptions& global,
                 pq::RunReport& report) {
    const auto points = pq::sample_points(example.domain, 10, global.seed);
    for (double p : p_grid) {
        for (double q : q_grid) {
            const std::string tag = example.name + " p=" + pq::format_double(p) +
                                    " q=" + pq::format_double(q);
            if (!example.params_valid(p, q)) {
                report.add(pq::CheckRecord::skip(tag, example.params_requirement + " required"));
                continue;
            }
            auto map = example.make(p, q);
            auto w_closure = pq::w_field(map, p, q);

            double w_err = 0.0, tau_pq_rel = 0.0, tau_pq_worst = 0.0, tau_pq_tol = 0.0,
                   pow_err = 0.0, tau_p_err = 0.0;
            bool has_tau_pq_rel = false;
            for (const auto& x : points) {
                auto lifted = pq::Jet::lift_point(x, global.order);
                auto w = pq::detail::jet_values(w_closure.components(lifted));
                auto expected_w = example.expected_w(p, q, x);
                const double w_scale = max_abs(expected_w);
                for (std::size_t c = 0; c < w.size(); ++c)
                    w_err = std::max(w_err, std::abs(w[c] - expected_w[c]) /
                                                std::max(std::abs(expected_w[c]), w_scale));

                auto tau_pq = pq::pq_tension(map, p, q, x, global.order);
                auto expected_pq = example.expected_tau_pq(p, q, x);
                const double pq_scale = max_abs(expected_pq);
                if (pq_scale > 1e-9) {
                    has_tau_pq_rel = true;
                    for (std::size_t c = 0; c < tau_pq.size(); ++c)
                        tau_pq_rel =
                            std::max(tau_pq_rel, std::abs(tau_pq[c] - expected_pq[c]) /
                                                     std::max(std::abs(expected_pq[c]), pq_scale));
                } else {
                    tau_pq_worst = std::max(tau_pq_worst, max_abs(tau_pq));
                    tau_pq_tol = std::max(tau_pq_tol, 1e-7 * (1.0 + w_scale));
                }

                if (example.expected_tau_p) {
                    auto tau_p = pq::p_tension(map, p, x);
                    auto expected_tp = example.expected_tau_p(p, x);
                    const double tp_scale = max_abs(expected_tp);
                    for (std::size_t c = 0; c < tau_p.size(); ++c)
                        tau_p_err = std::max(tau_p_err,
                                             std::abs(tau_p[c] - expected_tp[c]) /
                                                 std::max(std::abs(expected_tp[c]), tp_scale));
                }
                if (example.expected_tau_p_pow) {
                    auto mj = pq::detail::make_map_jets(map, lifted);
                    auto wp = pq::detail::w_parts(mj, p, q);
                    pow_err = std::max(
                        pow_err, std::abs(wp.q_factor.value() - example.expected_tau_p_pow(p, q)) /
                                     std::abs(example.expected_tau_p_pow(p, q)));
                }
            }

            report.add(pq::CheckRecord::bound(tag + ": W max rel err (10 pts)", w_err, 1e-8));
            if (has_tau_pq_rel)
                report.add(pq::CheckRecord::bound(tag + ": tau_pq max rel err (10 pts)",
                                                  tau_pq_rel, 1e-8));
            if (tau_pq_tol > 0.0)
                report.add(pq::CheckRecord::bound(tag + ": |tau_pq| max (10 pts)", tau_pq_worst,
                                                  tau_pq_tol));
            if (example.expected_tau_p)
                report.add(
                    pq::CheckRecord::bound(tag + ": tau_p max rel err (10 pts)", tau_p_err, 1e-8));
            if (example.expected_tau_p_pow)
                report.add(pq::CheckRecord::bound(tag + ": |tau_p|^(q-2) max rel err (10 pts)",
                                                  pow_err, 1e-8));
        }
    }
}

int cmd_verify(const GlobalOptions& global, const std::string& which,
               std::vector<double> p_grid, std::vector<double> q_grid, double s) {
    Stopwatch watch;
    if (p_grid.empty()) p_grid = {2.0, 2.5, 3.0, 5.0, 6.0};
    if (q_grid.empty()) q_grid = {2.0, 3.0, 4.0};

    pq::RunReport report;
    report.command = "verify";
    report.parameters["case"] = which;
    report.parameters["p_grid"] = to_json(p_grid);
    report.parameters["q_grid"] = to_json(q_grid);
    report.parameters["seed"] = global.seed;
    report.parameters["order"] = global.order;
    if (which == "power" || which == "all") report.parameters["s"] = s;

    std::vector<std::string> names;
    if (which == "all")
        names = pq::catalog_names();
    else
        names = {which};
    for (const auto& name : names)
        verify_case(pq::example_by_name(name, 5.0, s), p_grid, q_grid, global, report);

    report.duration_ms = watch.ms();
    emit(report, global);
    return report.overall_pass() ? kExitPass : kExitCheckFailure;
}

// ---------------------------------------------------------------------------

int cmd_variation(const GlobalOptions& global, const std::string& case_name, double p, double q,
                  double s, const std::string& bump_center, double bump_radius,
                  const std::string& bump_dir) {
    Stopwatch watch;
    auto example = pq::example_by_name(case_name, std::max(p, 4.5), s);
    auto map = example.make(p, q);
    const auto& box = example.domain;

    pq::VariationField bump;
    pq::RunReport report;
    report.command = "variation";
    report.parameters["case"] = case_name;
    report.parameters["p"] = p;
    report.parameters["q"] = q;
    report.parameters["nodes"] = global.nodes;
    report.parameters["step"] = global.step;
    if (!bump_center.empty()) {
        auto center = parse_point(bump_center);
        std::vector<double> direction(map.target_dim, 0.0);
        if (!bump_dir.empty()) {
            direction = parse_point(bump_dir);
            if (static_cast<int>(direction.size()) != map.target_dim)
                throw pq::ShapeError("bump direction must have one entry per target dimension");
        } else {
            direction[0] = 0.01;
        }
        bump = pq::make_bump(box, center, bump_radius, direction);
        report.parameters["bump_center"] = to_json(center);
        report.parameters["bump_radius"] = bump_radius;
        report.parameters["bump_dir"] = to_json(direction);
    } else {
        pq::Rng rng(global.seed);
        bump = pq::seeded_bump(box, map.target_dim, rng);
        report.parameters["seed"] = global.seed;
    }

    auto rule = pq::QuadratureRule::gauss_legendre(box, global.nodes);
    auto result = pq::variation_residual(map, p, q, bump, box, rule, global.step);

    report.values["fd_value"] = result.fd_value;
    report.values["pairing_value"] = result.pairing_value;
    report.values["abs_residual"] = result.abs_residual;
    report.values["rel_residual"] = result.rel_residual;
    report.values["energy_pq"] = result.energy;
    report.values["quadrature_points"] = result.quadrature_points;

    pq::CheckRecord check;
    check.name = "first variation identity";
    check.computed = result.fd_value;
    check.expected = result.pairing_value;
    check.abs_err = result.abs_residual;
    check.rel_err = result.rel_residual;
    check.tolerance = 1e-4;
    check.pass = result.passes(1e-4);
    if (result.zero_case()) check.note = "both sides vanish (harmonic case)";
    report.add(check);

    report.duration_ms = watch.ms();
    emit(report, global);
    return report.overall_pass() ? kExitPass : kExitCheckFailure;
}

// ---------------------------------------------------------------------------

int cmd_scan(const GlobalOptions& global, double p, double q, const std::string& range,
             int samples, const std::string& csv_path) {
    Stopwatch watch;
    auto bounds = parse_point(range);
    if (bounds.size() != 2) throw pq::ParseError("scan range must be 'lo,hi'");

    pq::RunReport report;
    report.command = "scan";
    report.parameters["p"] = p;
    report.parameters["q"] = q;
    report.parameters["range"] = to_json(bounds);
    report.parameters["samples"] = samples;

    auto result = pq::scan_critical_s(p, q, bounds[0], bounds[1], samples);

    if (!csv_path.empty()) {
        std::ofstream csv(csv_path);
        if (!csv) throw pq::IoError("cannot open CSV output '" + csv_path + "'");
        csv << "s,tau_pq_u_at_probe\n";
        for (const auto& [s, f] : result.samples)
            csv << pq::format_double(s) << "," << pq::format_double(f) << "\n";
        if (!csv.good()) throw pq::IoError("failed writing CSV '" + csv_path + "'");
        report.parameters["csv"] = csv_path;
    }

    report.values["roots"] = to_json(result.roots);
    report.values["touching_zeros"] = to_json(result.touching_zeros);

    auto [s1, s2] = pq::critical_s(p, q);
    report.values["closed_form_roots"] = to_json(std::vector<double>{s1, s2});
    for (double expected : {s1, s2}) {
        if (expected < bounds[0] || expected > bounds[1]) continue;
        double best = std::numeric_limits<double>::infinity();
        double found = std::nan("");
        for (double r : result.roots)
            if (std::abs(r - expected) < best) {
                best = std::abs(r - expected);
                found = r;
            }
        report.add(pq::CheckRecord::against(
            "root near s=" + pq::format_double(expected), found, expected, 1e-6, 1.0));
    }

    report.duration_ms = watch.ms();
    emit(report, global);
    return report.overall_pass() ? kExitPass : kExitCheckFailure;
}

// ---------------------------------------------------------------------------

int cmd_report(const GlobalOptions& global, const std::string& in_path) {
    std::ifstream in(in_path);
    if (!in) throw pq::IoError("cannot open report '" + in_path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) throw pq::IoError("failed reading report '" + in_path + "'");

    Json parsed;
    try {
        parsed = Json::parse(buffer.str());
    } catch (const std::exception& e) {
        throw pq::ParseError(std::string("bad JSON report: ") + e.what());
    }
    const std::string text = pq::write_canonical(parsed) + "\n";
    if (!global.out_path.empty()) {
        std::ofstream out(global.out_path);
        if (!out) throw pq::IoError("cannot open output file '" + global.out_path + "'");
        out << text;
        if (!out.good()) throw pq::IoError("failed writing '" + global.out_path + "'");
    } else {
        std::cout << text;
    }
    return kExitPass;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tension fields of maps between Riemannian manifolds"};
    app.require_subcommand(1);

    GlobalOptions global;
    app.add_option("--order", global.order, "jet order for tension computations")
        ->capture_default_str();
    app.add_option("--nodes", global.nodes, "quadrature nodes per axis")->capture_default_str();
    app.add_option("--step", global.step, "finite-difference step")->capture_default_str();
    app.add_option("--seed", global.seed, "seed for sampled points and bumps")
        ->capture_default_str();
    app.add_flag("--json", global.json, "print the report as canonical JSON");
    app.add_option("--out", global.out_path, "also write the JSON report to this path");

    std::string case_name = "cylinder", problem_path, at = "1,1,0";
    double p = 2.0, q = 2.0, s = 4.0;

    auto* eval = app.add_subcommand("eval", "evaluate tension fields at a point");
    eval->add_option("--case", case_name, "catalog case (cylinder, hyperbolic, power)");
    eval->add_option("--problem", problem_path, "problem file instead of a catalog case");
    eval->add_option("-p,--p", p, "exponent p")->capture_default_str();
    eval->add_option("-q,--q", q, "exponent q")->capture_default_str();
    eval->add_option("-s,--s", s, "power-map exponent s")->capture_default_str();
    eval->add_option("--at", at, "evaluation point, comma separated")->capture_default_str();

    std::string verify_which = "all";
    std::vector<double> p_grid, q_grid;
    auto* verify = app.add_subcommand("verify", "check the catalog closed forms over a grid");
    verify->add_option("which", verify_which, "case name or 'all'");
    verify->add_option("--p-grid", p_grid, "p values to verify");
    verify->add_option("--q-grid", q_grid, "q values to verify");
    verify->add_option("-s,--s", s, "power-map exponent s");

    std::string bump_center, bump_dir;
    double bump_radius = 0.3;
    auto* variation = app.add_subcommand("variation", "first-variation identity check");
    variation->add_option("--case", case_name, "catalog case");
    variation->add_option("-p,--p", p, "exponent p")->capture_default_str();
    variation->add_option("-q,--q", q, "exponent q")->capture_default_str();
    variation->add_option("-s,--s", s, "power-map exponent s");
    variation->add_option("--bump-center", bump_center, "bump center (default: seeded)");
    variation->add_option("--bump-radius", bump_radius, "bump radius");
    variation->add_option("--bump-dir", bump_dir, "bump direction in the target chart");

    std::string range = "1.2,4";
    int samples = 256;
    std::string csv_path = "scan.csv";
    auto* scan = app.add_subcommand("scan", "locate critical exponents of the power family");
    scan->add_option("-p,--p", p, "exponent p")->capture_default_str();
    scan->add_option("-q,--q", q, "exponent q")->capture_default_str();
    scan->add_option("--range", range, "s interval 'lo,hi'")->capture_default_str();
    scan->add_option("--samples", samples, "sample count")->capture_default_str();
    scan->add_option("--csv", csv_path, "CSV output path (empty to skip)")
        ->capture_default_str();

    std::string report_in;
    auto* report = app.add_subcommand("report", "re-serialize a JSON report canonically");
    report->add_option("--in", report_in, "report file")->required();

    // global flags may follow the subcommand
    for (auto* sub : {eval, verify, variation, scan, report}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (eval->parsed()) return cmd_eval(global, case_name, problem_path, p, q, s, at);
        if (verify->parsed()) return cmd_verify(global, verify_which, p_grid, q_grid, s);
        if (variation->parsed())
            return cmd_variation(global, case_name, p, q, s, bump_center, bump_radius, bump_dir);
        if (scan->parsed()) return cmd_scan(global, p, q, range, samples, csv_path);
        if (report->parsed()) return cmd_report(global, report_in);
    } catch (const pq::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const pq::ParameterError& e) {
        std::cerr << "parameter error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const pq::ShapeError& e) {
        std::cerr << "shape error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const pq::DegenerateError& e) {
        std::cerr << "degenerate point: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const pq::GuardError& e) {
        std::cerr << "guard violation: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const pq::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitUsage;
}

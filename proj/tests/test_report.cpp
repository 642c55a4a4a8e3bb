#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pq/report.hpp"
#include "pq/rng.hpp"

using pq::CheckRecord;
using pq::Json;
using pq::RunReport;

TEST_CASE("check records compute errors and verdicts") {
    auto good = CheckRecord::against("w", 1.0000000001, 1.0, 1e-8);
    CHECK(good.pass);
    CHECK(good.rel_err == doctest::Approx(1e-10).epsilon(1e-3));

    auto bad = CheckRecord::against("w", 1.1, 1.0, 1e-8);
    CHECK_FALSE(bad.pass);

    auto bound = CheckRecord::bound("norm", 5e-9, 1e-8);
    CHECK(bound.pass);

    auto skipped = CheckRecord::skip("hyperbolic p=4", "p > 4 required");
    CHECK(skipped.skipped);

    RunReport report;
    report.command = "verify";
    report.add(good);
    report.add(skipped);
    CHECK(report.overall_pass());
    report.add(bad);
    CHECK_FALSE(report.overall_pass());
}

TEST_CASE("canonical JSON round-trips byte for byte") {
    RunReport report;
    report.command = "eval";
    report.parameters["p"] = 2.5;
    report.parameters["q"] = 2.0;
    report.parameters["at"] = Json::array({1.0, 1.0, 0.0});
    report.values["tension"] = Json::array({-24.0, 0.0});
    report.values["energy_density"] = 2.8284271247461903;
    report.add(CheckRecord::against("w_u", 1.4142135623730951, 1.4142135623730951, 1e-8));
    report.add(CheckRecord::skip("hyperbolic", "p > 4 required"));
    report.duration_ms = 12.25;

    const std::string text = pq::write_canonical(report.to_json());
    const std::string again = pq::write_canonical(Json::parse(text));
    CHECK(text == again);

    // while we are here: a second round trip is also stable
    CHECK(pq::write_canonical(Json::parse(again)) == again);
}

TEST_CASE("floats format at 12 significant digits") {
    CHECK(pq::format_double(1.0) == "1");
    CHECK(pq::format_double(-24.0) == "-24");
    CHECK(pq::format_double(0.5) == "0.5");
    CHECK(pq::format_double(1.4142135623730951) == "1.41421356237");
    CHECK(pq::format_double(1e-10) == "1e-10");
    CHECK(pq::format_double(1.23456789012345e8) == "123456789.012");
}

TEST_CASE("round trip survives randomized reports") {
    pq::Rng rng(2026);
    for (int trial = 0; trial < 50; ++trial) {
        RunReport report;
        report.command = "fuzz";
        Json values = Json::array();
        for (int i = 0; i < 12; ++i) {
            const double mag = std::pow(10.0, rng.uniform(-14.0, 14.0));
            values.push_back(rng.uniform(-1.0, 1.0) * mag);
        }
        report.values["samples"] = values;
        report.duration_ms = rng.uniform(0.0, 1e4);
        const std::string text = pq::write_canonical(report.to_json());
        CHECK(pq::write_canonical(Json::parse(text)) == text);
    }
}

TEST_CASE("report text includes every check verdict") {
    RunReport report;
    report.command = "verify";
    report.parameters["case"] = "cylinder";
    report.add(CheckRecord::against("w_u", 1.41, 1.4142, 1e-2));
    report.add(CheckRecord::skip("hyperbolic p=4", "p > 4 required"));
    const std::string text = report.to_text();
    CHECK(text.find("verify") != std::string::npos);
    CHECK(text.find("[pass]") != std::string::npos);
    CHECK(text.find("[skip]") != std::string::npos);
    CHECK(text.find("p > 4 required") != std::string::npos);
}

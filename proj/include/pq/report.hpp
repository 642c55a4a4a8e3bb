#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace pq {

using Json = nlohmann::ordered_json;

// One verified quantity. Skipped records carry the reason in `note` and do
// not count against the overall status.
struct CheckRecord {
    std::string name;
    double computed = 0.0;
    double expected = 0.0;
    double abs_err = 0.0;
    double rel_err = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    bool skipped = false;
    std::string note;

    static CheckRecord against(std::string name, double computed, double expected,
                               double tolerance, double scale_floor = 0.0);
    static CheckRecord bound(std::string name, double computed, double tolerance);
    static CheckRecord skip(std::string name, std::string reason);
};

struct RunReport {
    std::string command;
    Json parameters = Json::object();
    Json values = Json::object(); // computed quantities without an expected side
    std::vector<CheckRecord> checks;
    double duration_ms = 0.0;

    bool overall_pass() const;
    void add(CheckRecord record) { checks.push_back(std::move(record)); }

    Json to_json() const;
    std::string to_text() const;
};

// Deterministic serialization: insertion-ordered keys, floats at 12
// significant digits. write_canonical(parse(write_canonical(x))) is
// byte-identical.
std::string write_canonical(const Json& value);
std::string format_double(double value);

} // namespace pq

#include "pq/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace pq {

CheckRecord CheckRecord::against(std::string name, double computed, double expected,
                                 double tolerance, double scale_floor) {
    CheckRecord r;
    r.name = std::move(name);
    r.computed = computed;
    r.expected = expected;
    r.abs_err = std::abs(computed - expected);
    const double scale = std::max(std::abs(expected), scale_floor);
    r.rel_err = scale > 0.0 ? r.abs_err / scale : r.abs_err;
    r.tolerance = tolerance;
    r.pass = r.rel_err <= tolerance;
    return r;
}

CheckRecord CheckRecord::bound(std::string name, double computed, double tolerance) {
    CheckRecord r;
    r.name = std::move(name);
    r.computed = computed;
    r.expected = 0.0;
    r.abs_err = std::abs(computed);
    r.rel_err = r.abs_err;
    r.tolerance = tolerance;
    r.pass = r.abs_err <= tolerance;
    return r;
}

CheckRecord CheckRecord::skip(std::string name, std::string reason) {
    CheckRecord r;
    r.name = std::move(name);
    r.skipped = true;
    r.pass = true;
    r.note = std::move(reason);
    return r;
}

bool RunReport::overall_pass() const {
    for (const auto& check : checks)
        if (!check.skipped && !check.pass) return false;
    return true;
}

Json RunReport::to_json() const {
    Json j = Json::object();
    j["command"] = command;
    j["parameters"] = parameters;
    if (!values.empty()) j["values"] = values;
    Json checks_json = Json::array();
    for (const auto& c : checks) {
        Json cj = Json::object();
        cj["name"] = c.name;
        if (c.skipped) {
            cj["skipped"] = true;
            cj["note"] = c.note;
        } else {
            cj["computed"] = c.computed;
            cj["expected"] = c.expected;
            cj["abs_err"] = c.abs_err;
            cj["rel_err"] = c.rel_err;
            cj["tolerance"] = c.tolerance;
            cj["pass"] = c.pass;
            if (!c.note.empty()) cj["note"] = c.note;
        }
        checks_json.push_back(std::move(cj));
    }
    j["checks"] = std::move(checks_json);
    j["overall"] = overall_pass() ? "pass" : "fail";
    j["duration_ms"] = duration_ms;
    return j;
}

namespace {

std::string compact(const Json& value) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_number_float()) return format_double(value.get<double>());
    if (value.is_array()) {
        std::string out = "(";
        bool first = true;
        for (const auto& item : value) {
            if (!first) out += ", ";
            first = false;
            out += compact(item);
        }
        return out + ")";
    }
    return value.dump();
}

} // namespace

std::string RunReport::to_text() const {
    std::ostringstream os;
    os << "# " << command << "\n";
    for (auto it = parameters.begin(); it != parameters.end(); ++it)
        os << "  " << it.key() << " = " << compact(it.value()) << "\n";
    for (auto it = values.begin(); it != values.end(); ++it)
        os << "  " << it.key() << " = " << compact(it.value()) << "\n";
    if (!checks.empty()) {
        os << "  checks:\n";
        for (const auto& c : checks) {
            if (c.skipped) {
                os << "    [skip] " << c.name << " (" << c.note << ")\n";
                continue;
            }
            os << "    [" << (c.pass ? "pass" : "FAIL") << "] " << c.name << ": computed "
               << format_double(c.computed) << ", expected " << format_double(c.expected)
               << ", rel err " << format_double(c.rel_err) << " (tol "
               << format_double(c.tolerance) << ")";
            if (!c.note.empty()) os << " - " << c.note;
            os << "\n";
        }
    }
    os << "  overall: " << (overall_pass() ? "pass" : "FAIL") << " (" << format_double(duration_ms)
       << " ms)\n";
    return os.str();
}

std::string format_double(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.12g", value);
    return buffer;
}

namespace {

void write_value(const Json& value, std::string& out, int indent) {
    const std::string pad(indent * 2, ' ');
    switch (value.type()) {
        case Json::value_t::object: {
            if (value.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (auto it = value.begin(); it != value.end(); ++it) {
                if (!first) out += ",\n";
                first = false;
                out += pad + "  " + Json(it.key()).dump() + ": ";
                write_value(it.value(), out, indent + 1);
            }
            out += "\n" + pad + "}";
            return;
        }
        case Json::value_t::array: {
            if (value.empty()) {
                out += "[]";
                return;
            }
            out += "[\n";
            bool first = true;
            for (const auto& item : value) {
                if (!first) out += ",\n";
                first = false;
                out += pad + "  ";
                write_value(item, out, indent + 1);
            }
            out += "\n" + pad + "]";
            return;
        }
        case Json::value_t::number_float:
            out += format_double(value.get<double>());
            return;
        default:
            out += value.dump();
            return;
    }
}

} // namespace

std::string write_canonical(const Json& value) {
    std::string out;
    write_value(value, out, 0);
    return out;
}

} // namespace pq

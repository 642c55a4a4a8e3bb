#include "pq/expr.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace pq {

struct Expression::Node {
    enum class Kind { Constant, Variable, Add, Sub, Mul, Div, Neg, Pow };
    Kind kind = Kind::Constant;
    double constant = 0.0;   // Constant, Pow exponent
    int variable = -1;       // Variable
    std::shared_ptr<const Node> lhs, rhs;

    Jet eval(const JetPoint& vars) const {
        switch (kind) {
            case Kind::Constant: return vars[0].constant_like(constant);
            case Kind::Variable: return vars[variable];
            case Kind::Add: return lhs->eval(vars) + rhs->eval(vars);
            case Kind::Sub: return lhs->eval(vars) - rhs->eval(vars);
            case Kind::Mul: return lhs->eval(vars) * rhs->eval(vars);
            case Kind::Div: return lhs->eval(vars) / rhs->eval(vars);
            case Kind::Neg: return -lhs->eval(vars);
            case Kind::Pow: return pow(lhs->eval(vars), constant);
        }
        throw ParseError("corrupt expression node");
    }

    double eval_const() const {
        switch (kind) {
            case Kind::Constant: return constant;
            case Kind::Add: return lhs->eval_const() + rhs->eval_const();
            case Kind::Sub: return lhs->eval_const() - rhs->eval_const();
            case Kind::Mul: return lhs->eval_const() * rhs->eval_const();
            case Kind::Div: return lhs->eval_const() / rhs->eval_const();
            case Kind::Neg: return -lhs->eval_const();
            case Kind::Pow: return std::pow(lhs->eval_const(), constant);
            case Kind::Variable: break;
        }
        throw ParseError("expression is not constant");
    }

    bool constant_only() const {
        switch (kind) {
            case Kind::Constant: return true;
            case Kind::Variable: return false;
            case Kind::Neg: return lhs->constant_only();
            case Kind::Pow: return lhs->constant_only();
            default: return lhs->constant_only() && rhs->constant_only();
        }
    }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

NodePtr make_node(Kind kind, NodePtr lhs = nullptr, NodePtr rhs = nullptr, double constant = 0.0,
                  int variable = -1) {
    auto n = std::make_shared<Expression::Node>();
    n->kind = kind;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    n->constant = constant;
    n->variable = variable;
    return n;
}

class Parser {
public:
    Parser(const std::string& text, const std::vector<std::string>& variables)
        : text_(text), vars_(variables) {}

    NodePtr run() {
        auto node = expression();
        skip_space();
        if (pos_ != text_.size())
            throw ParseError("unexpected trailing input at position " + std::to_string(pos_) +
                             " in '" + text_ + "'");
        return node;
    }

private:
    NodePtr expression() {
        auto node = term();
        for (;;) {
            skip_space();
            if (consume('+'))
                node = make_node(Kind::Add, node, term());
            else if (consume('-'))
                node = make_node(Kind::Sub, node, term());
            else
                return node;
        }
    }

    NodePtr term() {
        auto node = factor();
        for (;;) {
            skip_space();
            if (consume('*'))
                node = make_node(Kind::Mul, node, factor());
            else if (consume('/'))
                node = make_node(Kind::Div, node, factor());
            else
                return node;
        }
    }

    NodePtr factor() {
        skip_space();
        if (consume('-')) return make_node(Kind::Neg, factor());
        if (consume('+')) return factor();
        return power();
    }

    NodePtr power() {
        auto base = atom();
        skip_space();
        if (!consume('^')) return base;
        auto exponent = factor();
        if (!exponent->constant_only())
            throw ParseError("exponent of ^ must be a constant expression in '" + text_ + "'");
        return make_node(Kind::Pow, base, nullptr, exponent->eval_const());
    }

    NodePtr atom() {
        skip_space();
        if (pos_ >= text_.size()) throw ParseError("unexpected end of expression in '" + text_ + "'");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            auto node = expression();
            skip_space();
            if (!consume(')'))
                throw ParseError("missing ')' at position " + std::to_string(pos_) + " in '" +
                                 text_ + "'");
            return node;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        throw ParseError("unexpected character '" + std::string(1, c) + "' at position " +
                         std::to_string(pos_) + " in '" + text_ + "'");
    }

    NodePtr number() {
        std::size_t end = pos_;
        while (end < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(text_[end])) || text_[end] == '.'))
            ++end;
        if (end < text_.size() && (text_[end] == 'e' || text_[end] == 'E')) {
            std::size_t mark = end + 1;
            if (mark < text_.size() && (text_[mark] == '+' || text_[mark] == '-')) ++mark;
            if (mark < text_.size() && std::isdigit(static_cast<unsigned char>(text_[mark]))) {
                end = mark;
                while (end < text_.size() && std::isdigit(static_cast<unsigned char>(text_[end])))
                    ++end;
            }
        }
        const std::string token = text_.substr(pos_, end - pos_);
        try {
            const double value = std::stod(token);
            pos_ = end;
            return make_node(Kind::Constant, nullptr, nullptr, value);
        } catch (const std::exception&) {
            throw ParseError("bad numeric literal '" + token + "'");
        }
    }

    NodePtr identifier() {
        std::size_t end = pos_;
        while (end < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[end])) ||
                                      text_[end] == '_'))
            ++end;
        const std::string name = text_.substr(pos_, end - pos_);
        for (std::size_t v = 0; v < vars_.size(); ++v) {
            if (vars_[v] == name) {
                pos_ = end;
                return make_node(Kind::Variable, nullptr, nullptr, 0.0, static_cast<int>(v));
            }
        }
        throw ParseError("unknown variable '" + name + "' in '" + text_ + "'");
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool consume(char c) {
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    const std::string& text_;
    const std::vector<std::string>& vars_;
    std::size_t pos_ = 0;
};

} // namespace

Expression Expression::parse(const std::string& text, const std::vector<std::string>& variables) {
    Expression e;
    e.root_ = Parser(text, variables).run();
    return e;
}

Jet Expression::evaluate(const JetPoint& vars) const {
    if (vars.empty()) throw ShapeError("expression evaluation needs at least one variable jet");
    return root_->eval(vars);
}

double Expression::evaluate(std::span<const double> vars) const {
    if (root_->constant_only()) return root_->eval_const();
    return root_->eval(Jet::lift_point(vars, 1)).value();
}

bool Expression::is_constant() const { return root_->constant_only(); }

namespace {

struct Section {
    std::vector<std::string> vars;
    std::optional<std::string> guard;
    std::map<std::string, std::string> entries;
};

MetricField build_metric(const Section& section, const std::string& which) {
    if (section.vars.empty())
        throw ParseError("section [" + which + "] needs a 'vars' line");
    const int m = static_cast<int>(section.vars.size());

    std::vector<std::optional<Expression>> comps(m * m);
    for (const auto& [key, value] : section.entries) {
        if (key.size() != 3 || key[0] != 'g' || !std::isdigit((unsigned char)key[1]) ||
            !std::isdigit((unsigned char)key[2]))
            throw ParseError("unexpected key '" + key + "' in section [" + which + "]");
        const int i = key[1] - '1';
        const int j = key[2] - '1';
        if (i < 0 || i >= m || j < 0 || j >= m)
            throw ParseError("metric index out of range in '" + key + "'");
        Expression e = Expression::parse(value, section.vars);
        if (comps[i * m + j] || (i != j && comps[j * m + i]))
            throw ParseError("duplicate metric component '" + key + "'");
        comps[i * m + j] = e;
        comps[j * m + i] = std::move(e);
    }
    for (int i = 0; i < m; ++i)
        if (!comps[i * m + i])
            throw ParseError("diagonal component g" + std::to_string(i + 1) +
                             std::to_string(i + 1) + " missing in section [" + which + "]");

    MetricField g;
    g.dim = m;
    g.name = which;
    g.components = [m, comps](const JetPoint& x) {
        std::vector<Jet> out;
        out.reserve(m * m);
        for (int i = 0; i < m * m; ++i)
            out.push_back(comps[i] ? comps[i]->evaluate(x) : x[0].constant_like(0.0));
        return out;
    };
    if (section.guard) {
        Expression guard_expr = Expression::parse(*section.guard, section.vars);
        g.guard = [guard_expr](std::span<const double> x) { return guard_expr.evaluate(x) > 0.0; };
    }
    return g;
}

} // namespace

Problem parse_problem(const std::string& text) {
    std::map<std::string, Section> sections;
    std::string current;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        const auto begin = line.find_first_not_of(" \t\r");
        if (begin == std::string::npos) continue;
        const auto end = line.find_last_not_of(" \t\r");
        line = line.substr(begin, end - begin + 1);

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ParseError("bad section header on line " + std::to_string(line_no));
            current = line.substr(1, line.size() - 2);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected 'key = value' on line " + std::to_string(line_no));
        if (current.empty())
            throw ParseError("entry outside any section on line " + std::to_string(line_no));
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        key.erase(key.find_last_not_of(" \t") + 1);
        value.erase(0, value.find_first_not_of(" \t"));

        Section& section = sections[current];
        if (key == "vars") {
            std::istringstream vs(value);
            std::string v;
            while (vs >> v) {
                if (!v.empty() && v.back() == ',') v.pop_back();
                section.vars.push_back(v);
            }
        } else if (key == "guard") {
            section.guard = value;
        } else {
            if (!section.entries.emplace(key, value).second)
                throw ParseError("duplicate key '" + key + "' on line " + std::to_string(line_no));
        }
    }

    for (const char* required : {"metric.source", "metric.target", "map"})
        if (!sections.count(required))
            throw ParseError(std::string("missing section [") + required + "]");

    Problem problem;
    problem.source_vars = sections["metric.source"].vars;
    problem.target_vars = sections["metric.target"].vars;

    MetricField source = build_metric(sections["metric.source"], "metric.source");
    MetricField target = build_metric(sections["metric.target"], "metric.target");

    const Section& map_section = sections["map"];
    const int n = static_cast<int>(problem.target_vars.size());
    std::vector<Expression> comps;
    for (int k = 1; k <= n; ++k) {
        auto it = map_section.entries.find("phi" + std::to_string(k));
        if (it == map_section.entries.end())
            throw ParseError("map component phi" + std::to_string(k) + " missing");
        comps.push_back(Expression::parse(it->second, problem.source_vars));
    }
    if (static_cast<int>(map_section.entries.size()) != n)
        throw ParseError("section [map] must define exactly phi1..phi" + std::to_string(n));

    problem.map.source_dim = static_cast<int>(problem.source_vars.size());
    problem.map.target_dim = n;
    problem.map.source_metric = std::move(source);
    problem.map.target_metric = std::move(target);
    problem.map.components = [comps](const JetPoint& x) {
        std::vector<Jet> out;
        out.reserve(comps.size());
        for (const auto& c : comps) out.push_back(c.evaluate(x));
        return out;
    };
    problem.map.validate();
    return problem;
}

Problem load_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open problem file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) throw IoError("failed reading problem file '" + path + "'");
    return parse_problem(buffer.str());
}

} // namespace pq

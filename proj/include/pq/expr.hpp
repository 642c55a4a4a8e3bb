#pragma once

#include <memory>
#include <string>
#include <vector>

#include "pq/pullback.hpp"

namespace pq {

// Arithmetic expression over named chart variables: + - * / ^, real
// constants, parentheses, unary minus. The right operand of ^ must fold to a
// constant; fractional exponents become jet powers.
class Expression {
public:
    static Expression parse(const std::string& text, const std::vector<std::string>& variables);

    Jet evaluate(const JetPoint& vars) const;
    double evaluate(std::span<const double> vars) const;
    bool is_constant() const;

    struct Node;

private:
    std::shared_ptr<const Node> root_;
};

// Declarative problem description: metric components and map components as
// expressions, one per line, in sections [metric.source], [metric.target],
// [map]. See the README for the exact grammar.
struct Problem {
    MapField map;
    std::vector<std::string> source_vars;
    std::vector<std::string> target_vars;
};

Problem parse_problem(const std::string& text);
Problem load_problem(const std::string& path); // throws IoError on filesystem failure

} // namespace pq

#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pq/jet.hpp"

namespace pq {

using JetPoint = std::vector<Jet>;
using GuardFn = std::function<bool(std::span<const double>)>;
using JetMatrixFn = std::function<std::vector<Jet>(const JetPoint&)>;
using JetScalarFn = std::function<Jet(const JetPoint&)>;
using JetVectorFn = std::function<std::vector<Jet>(const JetPoint&)>;

// One coordinate chart of a Riemannian manifold: component functions g_ij
// evaluable over jets, plus the predicate marking where the chart is valid.
struct MetricField {
    int dim = 0;
    JetMatrixFn components; // dim*dim entries, row major, symmetric
    GuardFn guard;          // empty means the whole chart
    std::string name;

    bool inside(std::span<const double> x) const;
    void require_inside(std::span<const double> x) const;
};

struct OneFormField {
    int dim = 0;
    JetVectorFn components;
};

MetricField euclidean_metric(int dim, std::string name = "euclidean");
// e^{2u} delta, given the conformal factor e^{2u} as a jet closure.
MetricField conformal_metric(int dim, JetScalarFn factor, GuardFn guard, std::string name);

// --- jet-level operations (accuracy follows the order of the lifted point) ---

// Evaluates the components and checks symmetry and positive-definiteness at
// the point value.
std::vector<Jet> metric_components(const MetricField& g, const JetPoint& x);
std::vector<Jet> metric_inverse(const MetricField& g, const JetPoint& x);
// Gamma^k_{ij} indexed [k*m*m + i*m + j]; one order below the input point.
std::vector<Jet> christoffel(const MetricField& g, const JetPoint& x);
// R^l_{kij} indexed [((l*m + k)*m + i)*m + j], convention
// R(e_i, e_j) e_k = R^l_{kij} e_l; two orders below the input point.
std::vector<Jet> riemann(const MetricField& g, const JetPoint& x);
Jet sqrt_det(const MetricField& g, const JetPoint& x);
// (grad f)^i = g^{ij} d_j f for a scalar jet evaluated at the same point.
std::vector<Jet> grad_scalar(const MetricField& g, const JetPoint& x, const Jet& f);
// div theta = g^{ij} (d_i theta_j - Gamma^k_{ij} theta_k)
Jet div_one_form(const MetricField& g, const OneFormField& theta, const JetPoint& x);

// --- point-level wrappers ---

std::vector<double> metric_inverse(const MetricField& g, std::span<const double> x);
std::vector<double> christoffel(const MetricField& g, std::span<const double> x);
std::vector<double> riemann(const MetricField& g, std::span<const double> x);
double sqrt_det(const MetricField& g, std::span<const double> x);
std::vector<double> grad_scalar(const MetricField& g, const JetScalarFn& f,
                                std::span<const double> x);
double div_one_form(const MetricField& g, const OneFormField& theta, std::span<const double> x);

namespace detail {
// Gauss-Jordan with value pivoting on jet entries.
std::vector<Jet> jet_matrix_inverse(std::vector<Jet> a, int m);
Jet jet_matrix_det(std::vector<Jet> a, int m);
std::vector<double> jet_values(const std::vector<Jet>& jets);
// Christoffel symbols from already-evaluated components and inverse.
std::vector<Jet> christoffel_core(const std::vector<Jet>& comps, const std::vector<Jet>& ginv,
                                  int m);
} // namespace detail

} // namespace pq

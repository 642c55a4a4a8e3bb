#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pq/functionals.hpp"

namespace pq {

// One worked example: a parametrized family of maps together with the
// closed-form values its source provides. `make` instantiates the map for
// concrete (p, q); the expectation closures are only meaningful where
// params_valid holds.
struct ExampleCase {
    std::string name;
    int source_dim = 0;
    int target_dim = 0;
    BoxDomain domain; // recommended, clear of singular loci
    double default_p = 2.0;
    double default_q = 2.0;

    std::function<MapField(double p, double q)> make;
    std::function<bool(double p, double q)> params_valid;
    std::string params_requirement;

    // closed forms (null when the source gives none)
    std::function<std::vector<double>(double p, double q, std::span<const double> x)> expected_w;
    std::function<std::vector<double>(double p, std::span<const double> x)> expected_tau_p;
    // |tau_p|^{q-2} where it is a constant
    std::function<double(double p, double q)> expected_tau_p_pow;
    std::function<std::vector<double>(double p, double q, std::span<const double> x)>
        expected_tau_pq;
};

// (R^2 \ {0}) x R with g = (x^2+y^2)^{-1/p} delta, phi(x,y,z) = (sqrt(x^2+y^2), z)
// into flat R^2. W is the constant 2^{(p-2)(q-1)/2} (2 - 3/p)^{q-1} d_u and
// tau_{p,q} vanishes for all p, q >= 2.
ExampleCase example_cylinder();
// Identity from (H^4, x4^{-2/p} delta) to flat R^4; proper for p > 4.
ExampleCase example_hyperbolic(double p);
// phi(x,y) = (x^s, 0) between flat planes; tau_{p,q} has a closed form with
// critical exponents s = p/(p-1) and s = (pq-1)/(pq-q-1).
ExampleCase example_power(double s);

std::vector<std::string> catalog_names();
// s parametrizes the power family and is ignored by the others; p seeds the
// hyperbolic default.
ExampleCase example_by_name(const std::string& name, double p = 5.0, double s = 4.0);

// Deterministic sample points inside the box (guard-checked).
std::vector<std::vector<double>> sample_points(const BoxDomain& box, int count,
                                               std::uint64_t seed = kDefaultSeed);

// Closed-form critical exponents (p/(p-1), (pq-1)/(pq-q-1)).
std::pair<double, double> critical_s(double p, double q);

struct ScanResult {
    std::vector<double> roots;             // refined sign changes
    std::vector<double> touching_zeros;    // vanishing samples without a sign change
    std::vector<std::pair<double, double>> samples; // (s, tau_pq u-component at the probe)
};

// Recovers the critical exponents numerically: samples the u-component of
// tau_{p,q} for the power family at the probe x = (1.5, 0), brackets sign
// changes and bisects each to |ds| <= 1e-8.
ScanResult scan_critical_s(double p, double q, double s_lo, double s_hi, int samples);

inline constexpr double kScanProbeX = 1.5;

} // namespace pq

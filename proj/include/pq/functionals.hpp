#pragma once

#include <optional>
#include <span>
#include <vector>

#include "pq/pullback.hpp"
#include "pq/rng.hpp"

namespace pq {

// Compact integration region: an axis-aligned box inside the source chart.
struct BoxDomain {
    int dim = 0;
    std::vector<double> lo, hi;
    GuardFn guard; // inherited from the source metric's chart guard

    void validate() const;
    bool contains_ball(std::span<const double> center, double radius) const;
    double min_half_extent() const;
};

// Tensor-product Gauss-Legendre nodes and weights mapped to a box.
struct QuadratureRule {
    std::vector<std::vector<double>> nodes;   // [axis][k]
    std::vector<std::vector<double>> weights; // [axis][k]

    static QuadratureRule gauss_legendre(const BoxDomain& box, int nodes_per_axis = 16);
    int node_count() const;
};

// Smooth compactly supported variation of the map, valued in the target
// chart. Outside its support the components and all derivatives vanish.
struct VariationField {
    int target_dim = 0;
    JetVectorFn components;
    GuardFn in_support; // false means identically zero there
    // bounding box of the support; empty means unknown (whole domain)
    std::vector<double> support_lo, support_hi;
    // ball support, when the field is a single bump; radius 0 otherwise
    std::vector<double> ball_center;
    double ball_radius = 0.0;

    std::vector<double> values(std::span<const double> x) const;
};

// Product quadrature over a ball: radial Gauss panels geometrically graded
// toward the sphere (where the bump profile has its boundary layer) times
// smooth spherical angles. This is what makes integrals of bump derivatives
// converge at practical node counts; tensor rules on the enclosing box do
// not resolve the layer.
struct BallRule {
    std::vector<std::vector<double>> points;
    std::vector<double> weights; // include the spherical volume element

    static BallRule make(std::span<const double> center, double radius, int resolution);
};

// direction * exp(1 - 1/(1 - |x-center|^2/radius^2)) inside the ball,
// identically zero outside. The ball must lie strictly inside the box.
VariationField make_bump(const BoxDomain& box, std::span<const double> center, double radius,
                         std::span<const double> direction);
VariationField operator+(const VariationField& a, const VariationField& b);
// Reproducible bump for seeded suites: mid-box center, moderate radius, small
// direction so finite differencing stays deep in its asymptotic regime.
VariationField seeded_bump(const BoxDomain& box, int target_dim, Rng& rng);

// E_{p,q} = (1/q) int |tau_p|^q v_g over the box.
double energy_pq(const MapField& map, double p, double q, const BoxDomain& box,
                 const QuadratureRule& rule);
// E_p = (1/p) int |dphi|^p v_g.
double energy_p(const MapField& map, double p, const BoxDomain& box, const QuadratureRule& rule);

// phi + t*v as a new map over the same charts.
MapField translated_map(const MapField& map, const VariationField& v, double t);

// Central difference of t -> E_{p,q}(phi + t v) at 0 with one Richardson
// level, integrated as a single quadrature of the per-node difference
// quotient. Contributions vanish identically outside the support, so the
// integral runs over the bump ball (or the support bounding box for
// composite variations) at the rule's resolution.
double first_variation_fd(const MapField& map, double p, double q, const VariationField& v,
                          const BoxDomain& box, const QuadratureRule& rule, double step = 1e-2);

// -int h(v, tau_{p,q}) v_g on the caller's nodes; exactly linear in v.
double variation_pairing(const MapField& map, double p, double q, const VariationField& v,
                         const BoxDomain& box, const QuadratureRule& rule);
// Same pairing on an explicit ball rule (the residual comparator uses this
// so both sides resolve the bump's boundary layer).
double variation_pairing(const MapField& map, double p, double q, const VariationField& v,
                         const BoxDomain& box, const BallRule& rule);

// The box trimmed to the support bounding box of v; nullopt when the support
// does not meet the box at all.
std::optional<BoxDomain> support_box(const BoxDomain& box, const VariationField& v);

struct VariationReport {
    double fd_value = 0.0;
    double pairing_value = 0.0;
    double abs_residual = 0.0;
    double rel_residual = 0.0; // against max(|fd|, |pairing|)
    double energy = 0.0;       // E_{p,q}(phi) for scale
    int nodes_per_axis = 0;
    int quadrature_points = 0; // actual node count of the comparison rule
    double step = 0.0;

    // Both sides below this scale count as a vanishing first variation.
    double zero_scale() const { return 1e-6 * (1.0 + std::abs(energy)); }
    bool zero_case() const;
    bool passes(double rel_tol) const;
};

VariationReport variation_residual(const MapField& map, double p, double q,
                                   const VariationField& v, const BoxDomain& box,
                                   const QuadratureRule& rule, double step = 1e-2);

// Fixed-order pairwise reduction; deterministic run to run.
double pairwise_sum(std::span<const double> values);

} // namespace pq

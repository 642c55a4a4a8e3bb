#pragma once

#include <span>
#include <vector>

#include "pq/geometry.hpp"

namespace pq {

// A smooth map between charts: component functions evaluable over jets plus
// the two metrics. Closures are immutable after construction; evaluating one
// MapField at many points concurrently is safe.
struct MapField {
    int source_dim = 0;
    int target_dim = 0;
    JetVectorFn components;
    MetricField source_metric;
    MetricField target_metric;

    void validate() const;
};

// Point-indexed components in the target chart, attached to base point
// phi(x): a section of the pullback bundle.
struct VectorFieldAlongMap {
    int target_dim = 0;
    JetVectorFn components;
};

inline constexpr int kDefaultOrder = 4;

// Diagnostics of the identity div theta3 = |tau_p|^q, which holds where
// W = |tau_p|^{q-2} tau_p is parallel along the map.
struct Theta3Report {
    double div_theta3 = 0.0;
    double tau_p_norm_q = 0.0;
    double residual = 0.0;          // div theta3 - |tau_p|^q
    double parallelism_defect = 0.0; // max_i,component |nabla^phi_i W|
};

// --- jet-level operations ---

std::vector<Jet> map_components(const MapField& map, const JetPoint& x);
// (d phi)^a_i indexed [a*m + i]; one order below the input point.
std::vector<Jet> differential(const MapField& map, const JetPoint& x);
// |d phi|^2 in the Hilbert-Schmidt norm g^{ij} h_ab d_i phi^a d_j phi^b.
Jet energy_density(const MapField& map, const JetPoint& x);
std::vector<Jet> tension(const MapField& map, const JetPoint& x);
std::vector<Jet> p_tension(const MapField& map, double p, const JetPoint& x);
// nabla^phi along direction dir of a field given by its component jets at x.
std::vector<Jet> pullback_derivative(const MapField& map, const VectorFieldAlongMap& w, int dir,
                                     const JetPoint& x);

// W = |tau_p|^{q-2} tau_p as a first-class jet-evaluable field.
VectorFieldAlongMap w_field(const MapField& map, double p, double q);

// --- point-level operations ---

std::vector<double> differential(const MapField& map, std::span<const double> x);
double energy_density(const MapField& map, std::span<const double> x);
std::vector<double> tension(const MapField& map, std::span<const double> x);
std::vector<double> p_tension(const MapField& map, double p, std::span<const double> x);
std::vector<double> pullback_derivative(const MapField& map, const VectorFieldAlongMap& w,
                                        int dir, std::span<const double> x,
                                        int order = kDefaultOrder);

// The three terms of tau_{p,q}, kept separate so flat-target nullity of the
// curvature term can be checked directly.
struct PqTensionTerms {
    std::vector<double> curvature;
    std::vector<double> trace;   // -trace nabla |dphi|^{p-2} nabla W
    std::vector<double> p_trace; // -(p-2) trace nabla |dphi|^{p-4} <nabla W, dphi> dphi
    std::vector<double> total() const;
};

PqTensionTerms pq_tension_terms(const MapField& map, double p, double q, std::span<const double> x,
                                int order = kDefaultOrder, bool include_curvature = true);
std::vector<double> pq_tension(const MapField& map, double p, double q, std::span<const double> x,
                               int order = kDefaultOrder);
// tau_{p,2} assembled on its own, without the |tau_p|^{q-2} machinery.
std::vector<double> bi_p_tension(const MapField& map, double p, std::span<const double> x,
                                 int order = kDefaultOrder);
// tau_{2,pb}: -|tau|^{pb-2} trace R^N(tau, dphi) dphi - trace (nabla^phi)^2 |tau|^{pb-2} tau.
std::vector<double> p_bitension(const MapField& map, double pb, std::span<const double> x,
                                int order = kDefaultOrder);

Theta3Report theta3_divergence_residual(const MapField& map, double p, double q,
                                        std::span<const double> x, int order = kDefaultOrder);

namespace detail {

// Everything tau assembly needs at one lifted point, computed once.
struct MapJets {
    const MapField* map = nullptr;
    int m = 0, n = 0, order = 0;
    JetPoint x;
    std::vector<Jet> phi;          // n
    std::vector<Jet> dphi;         // n*m, [a*m + i], order-1
    std::vector<Jet> g;            // m*m
    std::vector<Jet> ginv;         // m*m
    std::vector<Jet> gamma_src;    // m^3, [k,i,j], order-1
    std::vector<Jet> h_phi;        // n*n, h composed with phi
    std::vector<Jet> gamma_h_phi;  // n^3, [c,a,b], order-1
    bool target_flat = false;      // Gamma(h) jets vanish at phi(x)

    const Jet& dphi_at(int a, int i) const { return dphi[a * m + i]; }
    const Jet& gsrc(int k, int i, int j) const { return gamma_src[(k * m + i) * m + j]; }
    const Jet& gh(int c, int a, int b) const { return gamma_h_phi[(c * n + a) * n + b]; }
};

MapJets make_map_jets(const MapField& map, JetPoint x);

Jet energy_density(const MapJets& mj);
std::vector<Jet> tension(const MapJets& mj);
std::vector<Jet> p_tension(const MapJets& mj, double p);
// nabla^phi_dir of component jets w (n entries).
std::vector<Jet> covariant_along(const MapJets& mj, const std::vector<Jet>& w, int dir);

struct WParts {
    std::vector<Jet> w;      // |tau_p|^{q-2} tau_p
    std::vector<Jet> tau_p;
    Jet q_factor;            // |tau_p|^{q-2}
    Jet tau_p_norm_sq;
};
WParts w_parts(const MapJets& mj, double p, double q);

// Compose a jet in target variables (Taylor polynomial at center) with
// jet-valued arguments; exact to the common order.
Jet compose(const Jet& outer, const std::vector<Jet>& args, std::span<const double> center);

// Fractional-power guard that names the quantity that collapsed.
Jet guarded_pow(const Jet& a, double r, const char* what);

} // namespace detail

} // namespace pq

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfl/measures.hpp"

namespace mfl {

// Feasible coupling between two atomic measures, witnessing a distance value.
struct TransportPlan {
    struct Entry {
        std::int32_t src = 0;
        std::int32_t dst = 0;
        double mass = 0.0;
    };
    std::vector<Entry> entries;
    double cost = 0.0;    // sum mass |x-y|^p, or the max |x-y| for p = inf
    double order_p = 0.0; // 1, 2, or inf

    // Throws unless marginals match the measures to `tol` and the cost is
    // consistent with the entries.
    void check(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double tol = 1e-10) const;
};

struct TransportLimits {
    std::size_t max_pair_product = 4'000'000;
};

struct DistanceResult {
    double distance = 0.0;
    TransportPlan plan;
    std::uint64_t pivots = 0; // simplex pivots / max-flow probes
    std::string solver;
};

// Exact d_p (p = 1 or 2) by network simplex on the complete bipartite graph.
// Masses are scaled to integer units with denominator 2^40; the induced
// rounding is below 1e-11 per atom.
DistanceResult wasserstein_p(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, int p,
                             const TransportLimits& limits = {});

// Exact bottleneck distance d_inf: binary search over attained pairwise
// distances with max-flow feasibility checks.
DistanceResult wasserstein_infinity(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                    const TransportLimits& limits = {});

// Exhaustive minimum over all N! matchings; equal counts and equal masses,
// N <= 8.  p = 1, 2, or +infinity.  Ground truth for the solvers.
double brute_force_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p);

struct SemidiscreteResult {
    double estimate = 0.0;
    double error_bar = 0.0; // (sqrt(d)/2) * mesh of the discretization
    double mesh = 0.0;
    std::size_t ref_atoms = 0;
};

// Distance from an atomic measure to a density, approximated through a
// grid_init discretization with at least `refinement` atoms (>= 10x the atom
// count of mu).  p = 1 or +infinity.
SemidiscreteResult semidiscrete_distance(const EmpiricalMeasure& mu, const DensitySpec& rho,
                                         double p, std::size_t refinement,
                                         const TransportLimits& limits = {});

} // namespace mfl

#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mfl/errors.hpp"

namespace mfl {

// Radial interaction potential W(x) = w(|x|) with closed-form value and
// derivatives.  The gradient at the origin is the zero vector for every
// variant; variants whose potential value diverges at 0 return 0 there.
class KernelSpec {
public:
    enum class Family { Morse, PowerLawRepAtt, Harmonic, TruncatedTail };

    // w(r) = -c_att e^{-r/len_att} + c_rep e^{-r/len_rep}
    static KernelSpec morse(double c_att, double len_att, double c_rep, double len_rep);
    // w(r) = r^a/a - r^b/b with a > b; a zero exponent means the logarithmic
    // convention r^0/0 := ln r.
    static KernelSpec power_law(double attract_exp, double repulse_exp);
    // w(r) = k r^2 / 2
    static KernelSpec harmonic(double stiffness);
    // Matches `base` on B(0, r_cut); outside, the radial gradient is frozen at
    // its r_cut value and faded to zero over [r_cut, 2 r_cut] by a C^1 cubic.
    static KernelSpec truncated_tail(KernelSpec base, double r_cut);

    Family family() const { return family_; }
    const double* params() const { return par_; }
    const KernelSpec& base() const; // TruncatedTail only

    // Radial profile.  value_radial applies the singular-value convention at
    // r = 0; deriv/second_deriv require r > 0.
    double value_radial(double r) const;
    double deriv_radial(double r) const;
    double second_deriv_radial(double r) const;
    // w'(r)/r, the factor multiplying (x - y) in the pairwise force.
    double gradient_scale(double r) const;

    bool value_singular_at_origin() const;
    std::string describe() const;

private:
    KernelSpec() = default;
    Family family_ = Family::Harmonic;
    double par_[4] = {0, 0, 0, 0};
    std::shared_ptr<const KernelSpec> base_; // TruncatedTail
};

// W(x); x = 0 allowed (convention value for singular variants).
double eval_potential(const KernelSpec& k, std::span<const double> x);

// grad W(x); zero vector at x = 0.
std::vector<double> eval_gradient(const KernelSpec& k, std::span<const double> x);

// Operator norm of D^2 W at x != 0, from the two radial eigenvalues
// w''(r) and w'(r)/r (the latter with multiplicity d-1).
double eval_hessian_norm(const KernelSpec& k, std::span<const double> x);

// Measured singularity profile of grad W near the origin:
//   |grad W(x)| <= c_grad / |x|^alpha,  |D^2 W(x)| <= c_hess / |x|^{1+alpha}
// for 0 < |x| <= valid_radius.
struct SingularityProfile {
    double alpha = 0.0;
    double c_grad = 0.0;
    double c_hess = 0.0;
    double valid_radius = 0.0;
};

// Least-squares fit of ln|grad W| against ln r over the given radii
// (decreasing, at least 4).  alpha is the negated slope; the constants are
// the maxima of |grad W| r^alpha and |D^2 W| r^{1+alpha} over the samples.
SingularityProfile estimate_singularity_order(const KernelSpec& k,
                                              std::span<const double> radii);

// Regime classification of a kernel profile for dimension d and
// integrability exponent p in (1, inf].
struct AdmissibilityReport {
    double alpha = 0.0;
    double c_grad = 0.0;
    double c_hess = 0.0;
    int d = 0;
    double p = 0.0;
    bool admissible = false;     // -1 <= alpha < d-1
    bool thm31_regime = false;   // 0 <= alpha < d/p' - 1
    bool cor33_regime = false;   // -1 <= alpha < 0
    bool chaos_regime = false;   // (1+alpha) p' < d(p-1)/(2p-1), alpha >= 0
    double margin_admissible = 0.0;
    double margin_thm31 = 0.0;
    double margin_chaos = 0.0;
    std::string to_text() const;
};

AdmissibilityReport verify_kernel_assumptions(const SingularityProfile& prof, int d, double p);

// Mollified kernel W_eps = W * theta_eps with theta a fixed smooth bump
// supported on the unit ball, scaled to B(0, eps) and normalized to unit mass
// on the quadrature grid itself.
struct MollifiedKernel {
    KernelSpec base;
    double epsilon = 0.0;
    int quadrature_order = 8; // Gauss-Legendre points per axis
};

// (grad W * theta_eps)(x) by symmetric tensor quadrature over B(0, eps).
// Exactly zero at x = 0 (the grid is summed in +/- pairs).
std::vector<double> mollify_gradient(const MollifiedKernel& m, std::span<const double> x);

// Radial interpolation table for a mollified gradient, for use in dynamics
// where per-pair quadrature would be prohibitive.  scale(r) approximates
// w_eps'(r)/r; accuracy is checked against mollify_gradient in the tests.
class RadialScaleTable {
public:
    // Dense nodes on [0, 4 eps], coarser nodes out to r_max; cubic Hermite
    // with centered-difference slopes.  Beyond r_max falls back to the base
    // closed form.  dim is the ambient dimension of the convolution.
    static RadialScaleTable build(const MollifiedKernel& m, int dim, double r_max,
                                  std::size_t near_nodes = 1024, std::size_t far_nodes = 4096);
    double scale(double r) const;
    double r_max() const { return far_hi_; }
    const KernelSpec& base() const { return base_; }

private:
    double eval_segment(const std::vector<double>& v, const std::vector<double>& dv,
                        double lo, double h, double r) const;
    KernelSpec base_ = KernelSpec::harmonic(1.0);
    double near_hi_ = 0.0, far_hi_ = 0.0;
    double near_h_ = 0.0, far_h_ = 0.0;
    std::vector<double> near_v_, near_d_, far_v_, far_d_;
};

} // namespace mfl

#pragma once

#include <span>
#include <string>
#include <vector>

#include "mfl/exponents.hpp"

namespace mfl {

// Parameter tuple feeding the bound formulas: dimension, integrability
// exponent p in (1, inf], singularity order alpha, the reference-solution
// norm proxy, and the calibrated constant of the differential inequalities.
struct TheoryParams {
    int d = 2;
    double p = kInfExponent;
    double alpha = 0.0;
    double rho_norm = 1.0;
    double c_cal = 1.0;

    double p_conj() const { return conjugate_exponent(p); }
    // check d/p' > (1+alpha) p'... (entry condition of the first-order regime)
    void require_regime() const {
        if (!(p_conj() * (1.0 + alpha) < static_cast<double>(d)))
            throw InvalidInputError("theory params: (1+alpha) p' < d required");
    }
};

// (eta0)^{d/p'} (eta_m0)^{-(1+alpha)}
double xi_n(double eta0, double eta_m0, const TheoryParams& tp);

struct GuaranteedTime {
    double time = 0.0;
    bool guaranteed = false; // false when xi >= 1
};
// -ln(xi) / (2 (d/p' + 1 + alpha) rho_norm), for xi in (0,1).
GuaranteedTime guaranteed_time(double xi, const TheoryParams& tp);

struct Thm31Envelope {
    double eta_upper = 0.0;
    double eta_m_lower = 0.0;
    bool applicable = false; // regime flag xi f^{d/p'} g^{-(1+alpha)} <= 1
};
// eta0 e^{2 C rho t} and eta_m0 e^{-2 C rho t}; the caller supplies the
// current normalized ratios f = eta/eta0, g = eta_m/eta_m0 for the regime flag.
Thm31Envelope envelope_thm31(double eta0, double eta_m0, double t, const TheoryParams& tp,
                             double f_cur, double g_cur);

struct Cor33Envelope {
    double eta_upper = 0.0;
    bool applicable = false; // requires -1 <= alpha < 0 and d/p' - alpha - 1 > 0
    bool expired = false;    // the closed-form bound blew up before t
    double expiry_time = 0.0;
};
// ((eta0)^{-s} e^{-C rho s t} + e^{-C rho s t} - 1)^{-1/s} with s = d/p'-alpha-1.
Cor33Envelope envelope_cor33(double eta0, double t, const TheoryParams& tp);

struct ChaosConstants {
    double gamma_lo = 0.0;    // p'(2p-1)(1+alpha)/(d(p-1)); admissible gamma in (gamma_lo, 1)
    double c_r = 0.0;         // 2 ln2 / [2(R+1)]^{d/p}
    double l_d = 0.0;         // 4 (4 floor(sqrt(d)) + 1)^{d/p} / c_d
    double mindist_exp = 0.0; // (2p-1)/(d(p-1)), 2/d at p = inf
    bool regime_ok = false;   // alpha >= 0 and (1+alpha) p' < d(p-1)/(2p-1)
    bool gamma_admissible() const { return gamma_lo < 1.0; }
};
// The deviation-bound constants c_R, L_d and the exponents are defined for
// any parameters; regime_ok and gamma_admissible() carry the restrictions.
ChaosConstants chaos_constants(const TheoryParams& tp, double support_radius);

// One time sample of a convergence run.
struct ConvergenceRecord {
    double t = 0.0;
    double eta = 0.0;           // d_inf to the reference
    double eta_error_bar = 0.0; // semi-discrete proxy error
    double eta_m = 0.0;
    double xi = 0.0;            // xi_N at t = 0 (constant through the run)
    double envelope_eta = 0.0;
    double envelope_eta_m = 0.0;
    bool regime_ok = false;
};

struct BoundsReport {
    std::vector<std::size_t> violations; // record indices violating the envelopes
    // boundary of the violation-free set: every c_cal >= this value is
    // violation-free (found by bisection)
    double c_cal = 0.0;
    bool step_a_ok = true; // eta_m <= 2 eta + 2 error bar at every sample
    std::string to_text() const;
};

// Flags envelope violations at the given TheoryParams (including its c_cal)
// and calibrates the minimal violation-free constant.
BoundsReport check_bounds_series(std::span<const ConvergenceRecord> records, const TheoryParams& tp);

} // namespace mfl

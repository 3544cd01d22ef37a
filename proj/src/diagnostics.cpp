#include "mfl/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mfl {

double xi_n(double eta0, double eta_m0, const TheoryParams& tp) {
    if (!(eta0 > 0.0) || !(eta_m0 > 0.0))
        throw InvalidInputError("xi_n: initial quantities must be positive");
    const double dpp = static_cast<double>(tp.d) / tp.p_conj();
    return std::pow(eta0, dpp) * std::pow(eta_m0, -(1.0 + tp.alpha));
}

GuaranteedTime guaranteed_time(double xi, const TheoryParams& tp) {
    if (!(xi > 0.0)) throw InvalidInputError("guaranteed_time: xi must be positive");
    if (!(tp.rho_norm > 0.0)) throw InvalidInputError("guaranteed_time: rho_norm must be positive");
    if (xi >= 1.0) return {0.0, false};
    const double dpp = static_cast<double>(tp.d) / tp.p_conj();
    return {-std::log(xi) / (2.0 * (dpp + 1.0 + tp.alpha) * tp.rho_norm), true};
}

Thm31Envelope envelope_thm31(double eta0, double eta_m0, double t, const TheoryParams& tp,
                             double f_cur, double g_cur) {
    Thm31Envelope env;
    const double dpp = static_cast<double>(tp.d) / tp.p_conj();
    const double xi = xi_n(eta0, eta_m0, tp);
    env.applicable = xi * std::pow(f_cur, dpp) * std::pow(g_cur, -(1.0 + tp.alpha)) <= 1.0;
    const double rate = 2.0 * tp.c_cal * tp.rho_norm * t;
    env.eta_upper = eta0 * std::exp(rate);
    env.eta_m_lower = eta_m0 * std::exp(-rate);
    return env;
}

Cor33Envelope envelope_cor33(double eta0, double t, const TheoryParams& tp) {
    Cor33Envelope env;
    if (!(tp.alpha >= -1.0 && tp.alpha < 0.0)) return env; // not applicable
    const double s = static_cast<double>(tp.d) / tp.p_conj() - tp.alpha - 1.0;
    if (!(s > 0.0)) return env;
    env.applicable = true;
    const double decay = std::exp(-tp.c_cal * tp.rho_norm * s * t);
    const double inner = std::pow(eta0, -s) * decay + decay - 1.0;
    env.expiry_time = std::log(1.0 + std::pow(eta0, -s)) / (tp.c_cal * tp.rho_norm * s);
    if (inner <= 0.0) {
        env.expired = true;
        return env;
    }
    env.eta_upper = std::pow(inner, -1.0 / s);
    return env;
}

ChaosConstants chaos_constants(const TheoryParams& tp, double support_radius) {
    ChaosConstants c;
    const double d = static_cast<double>(tp.d);
    const double pp = tp.p_conj();
    // (2p-1)/(p-1) -> 2 as p -> inf
    const double ratio = std::isinf(tp.p) ? 2.0 : (2.0 * tp.p - 1.0) / (tp.p - 1.0);
    c.gamma_lo = pp * ratio * (1.0 + tp.alpha) / d;
    c.regime_ok = in_chaos_regime(tp.d, tp.p, tp.alpha);
    const double d_over_p = std::isinf(tp.p) ? 0.0 : d / tp.p;
    c.c_r = 2.0 * std::log(2.0) / std::pow(2.0 * (support_radius + 1.0), d_over_p);
    c.l_d = 4.0 * std::pow(4.0 * std::floor(std::sqrt(d)) + 1.0, d_over_p) / unit_ball_volume(tp.d);
    c.mindist_exp = mindist_exponent(tp.d, tp.p);
    return c;
}

namespace {

bool run_violation_free(std::span<const ConvergenceRecord> records, const TheoryParams& tp,
                        double c_cal) {
    const double t0 = records.front().t;
    const double eta0 = records.front().eta;
    const double eta_m0 = records.front().eta_m;
    for (const auto& r : records) {
        if (!r.regime_ok) continue;
        const double rate = 2.0 * c_cal * tp.rho_norm * (r.t - t0);
        if (r.eta > eta0 * std::exp(rate) || r.eta_m < eta_m0 * std::exp(-rate)) return false;
    }
    return true;
}

} // namespace

BoundsReport check_bounds_series(std::span<const ConvergenceRecord> records, const TheoryParams& tp) {
    BoundsReport rep;
    if (records.empty()) return rep;
    for (std::size_t i = 0; i + 1 < records.size(); ++i)
        if (!(records[i].t < records[i + 1].t))
            throw InvalidInputError("check_bounds_series: records must be time-sorted");

    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.regime_ok && (r.eta > r.envelope_eta || r.eta_m < r.envelope_eta_m))
            rep.violations.push_back(i);
        if (r.eta_m > 2.0 * r.eta + 2.0 * r.eta_error_bar + 1e-12) rep.step_a_ok = false;
    }

    // bisection for the boundary of the violation-free set
    double hi = 1.0;
    while (!run_violation_free(records, tp, hi) && hi < 1e9) hi *= 2.0;
    if (hi >= 1e9) {
        rep.c_cal = hi;
        return rep;
    }
    double lo = 0.0;
    for (int it = 0; it < 200 && (hi - lo) > 1e-12 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (run_violation_free(records, tp, mid)) hi = mid;
        else lo = mid;
    }
    rep.c_cal = hi;
    return rep;
}

std::string BoundsReport::to_text() const {
    std::ostringstream os;
    os.precision(12);
    os << "violations " << violations.size() << "\n";
    os << "c_cal " << c_cal << "\n";
    os << "step_a_inequality " << (step_a_ok ? "ok" : "violated") << "\n";
    return os.str();
}

} // namespace mfl

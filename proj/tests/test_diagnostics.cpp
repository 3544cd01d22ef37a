#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mfl/diagnostics.hpp"

using namespace mfl;

namespace {

TheoryParams params(int d, double p, double alpha, double rho = 1.0, double c = 1.0) {
    TheoryParams tp;
    tp.d = d;
    tp.p = p;
    tp.alpha = alpha;
    tp.rho_norm = rho;
    tp.c_cal = c;
    return tp;
}

} // namespace

TEST_CASE("conjugate exponents and limits") {
    CHECK(conjugate_exponent(2.0) == doctest::Approx(2.0));
    CHECK(conjugate_exponent(kInfExponent) == 1.0);
    CHECK(mindist_exponent(3, kInfExponent) == doctest::Approx(2.0 / 3.0));
    CHECK(mindist_exponent(2, 2.0) == doctest::Approx(1.5)); // (2p-1)/(d(p-1)) = 3/2
    CHECK_THROWS_AS(conjugate_exponent(1.0), InvalidInputError);
}

TEST_CASE("xi_n plug-in values") {
    const auto tp = params(2, kInfExponent, 0.0);
    CHECK(xi_n(0.1, 0.1, tp) == doctest::Approx(0.1).epsilon(1e-14));
    // eta0 = eta_m0 = eps gives xi = eps^{d/p' - (1+alpha)}
    CHECK(xi_n(0.05, 0.05, tp) == doctest::Approx(0.05).epsilon(1e-14));
    CHECK_THROWS_AS(xi_n(0.0, 0.1, tp), InvalidInputError);
}

TEST_CASE("guaranteed time formula and monotonicity") {
    const auto tp = params(2, kInfExponent, 0.0); // d/p' = 2
    const auto g = guaranteed_time(std::exp(-6.0), tp);
    CHECK(g.guaranteed);
    CHECK(g.time == doctest::Approx(1.0).epsilon(1e-12)); // 6 / (2 (2+1) 1)

    const auto flagged = guaranteed_time(1.0, tp);
    CHECK_FALSE(flagged.guaranteed);
    CHECK(flagged.time == 0.0);

    double prev = std::numeric_limits<double>::infinity();
    for (double xi : {1e-6, 1e-4, 1e-2, 0.5, 0.99}) {
        const auto t = guaranteed_time(xi, tp);
        CHECK(t.time < prev);
        prev = t.time;
    }
    // decreasing in rho_norm as well
    auto tp2 = tp;
    tp2.rho_norm = 2.0;
    CHECK(guaranteed_time(0.1, tp2).time < guaranteed_time(0.1, tp).time);
}

TEST_CASE("first-order envelopes") {
    const auto tp = params(2, kInfExponent, 0.0, 1.0, 1.0);
    const auto at0 = envelope_thm31(0.2, 0.05, 0.0, tp, 1.0, 1.0);
    CHECK(at0.eta_upper == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(at0.eta_m_lower == doctest::Approx(0.05).epsilon(1e-14));
    CHECK(at0.applicable);

    const double t = std::log(2.0) / 2.0;
    const auto half = envelope_thm31(0.2, 0.05, t, tp, 1.0, 1.0);
    CHECK(half.eta_upper == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(half.eta_m_lower == doctest::Approx(0.025).epsilon(1e-12));

    // regime flag: xi f^{d/p'} g^{-(1+alpha)} <= 1 with caller-supplied ratios
    const auto out = envelope_thm31(0.9, 0.01, 0.1, tp, 10.0, 0.01);
    CHECK_FALSE(out.applicable);
}

TEST_CASE("harmonic two-body closed form is violation-free at C >= 1/2") {
    // eta_m(t) = eta_m0 e^{-t} against the lower envelope e^{-2 C t}
    TheoryParams tp = params(2, kInfExponent, 0.0, 1.0, 1.0);
    std::vector<ConvergenceRecord> recs;
    for (int k = 0; k <= 20; ++k) {
        ConvergenceRecord r;
        r.t = 0.1 * k;
        r.eta = 0.05 * std::exp(-r.t);
        r.eta_m = 0.05 * std::exp(-r.t);
        r.xi = xi_n(0.05, 0.05, tp);
        const auto env = envelope_thm31(0.05, 0.05, r.t, tp, std::exp(-r.t), std::exp(-r.t));
        r.envelope_eta = env.eta_upper;
        r.envelope_eta_m = env.eta_m_lower;
        r.regime_ok = env.applicable;
        recs.push_back(r);
    }
    const auto rep = check_bounds_series(recs, tp);
    CHECK(rep.violations.empty()); // e^{-t} >= e^{-2t}
    CHECK(rep.c_cal == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(rep.step_a_ok);
}

TEST_CASE("step-A structural inequality flag") {
    TheoryParams tp = params(2, kInfExponent, 0.0);
    std::vector<ConvergenceRecord> recs(2);
    recs[0].t = 0.0;
    recs[0].eta = 0.1;
    recs[0].eta_m = 0.1;
    recs[0].regime_ok = true;
    recs[0].envelope_eta = 1.0;
    recs[0].envelope_eta_m = 0.0;
    recs[1] = recs[0];
    recs[1].t = 1.0;
    recs[1].eta = 0.01;
    recs[1].eta_m = 0.1; // eta_m > 2 eta: flag
    const auto rep = check_bounds_series(recs, tp);
    CHECK_FALSE(rep.step_a_ok);
}

TEST_CASE("jump violation calibrates to ln(10)/(2 rho dt)") {
    TheoryParams tp = params(2, kInfExponent, 0.0, 1.0, 1.0);
    const double dt = 0.25;
    std::vector<ConvergenceRecord> recs(2);
    recs[0].t = 0.0;
    recs[0].eta = 0.01;
    recs[0].eta_m = 0.5;
    recs[0].regime_ok = true;
    recs[1].t = dt;
    recs[1].eta = 0.1; // 10x jump
    recs[1].eta_m = 0.5;
    recs[1].regime_ok = true;
    // with C_cal = 1 the envelope allows only e^{2 dt} ~ 1.65x: flagged
    recs[0].envelope_eta = 0.01;
    recs[0].envelope_eta_m = 0.5;
    recs[1].envelope_eta = 0.01 * std::exp(2.0 * dt);
    recs[1].envelope_eta_m = 0.5 * std::exp(-2.0 * dt);
    const auto rep = check_bounds_series(recs, tp);
    CHECK(rep.violations.size() == 1);
    CHECK(rep.c_cal == doctest::Approx(std::log(10.0) / (2.0 * dt)).epsilon(1e-6));
}

TEST_CASE("second-order decay envelope (negative-order kernels)") {
    // d=2, p=2 (p'=2, d/p'=1), alpha=-1: s = d/p' - alpha - 1 = 1
    auto tp = params(2, 2.0, -1.0, 1.0, 1.0);
    const auto at0 = envelope_cor33(0.1, 0.0, tp);
    CHECK(at0.applicable);
    CHECK(at0.eta_upper == doctest::Approx(0.1).epsilon(1e-12));

    // envelope(t) = (11 e^{-t} - 1)^{-1}, finite until ln 11
    const auto mid = envelope_cor33(0.1, 1.0, tp);
    CHECK(mid.eta_upper == doctest::Approx(1.0 / (11.0 * std::exp(-1.0) - 1.0)).epsilon(1e-12));
    CHECK(mid.expiry_time == doctest::Approx(std::log(11.0)).epsilon(1e-12));
    const auto late = envelope_cor33(0.1, 2.5, tp);
    CHECK(late.expired);

    // increasing in eta0
    CHECK(envelope_cor33(0.2, 1.0, tp).eta_upper > envelope_cor33(0.1, 1.0, tp).eta_upper);

    // not applicable outside -1 <= alpha < 0
    CHECK_FALSE(envelope_cor33(0.1, 1.0, params(2, 2.0, 0.1)).applicable);
}

TEST_CASE("chaos constants") {
    // d=3, p=inf, alpha=0.4: gamma_lo = 2(1+alpha)/d
    const auto cc = chaos_constants(params(3, kInfExponent, 0.4), 1.0);
    CHECK(cc.regime_ok);
    CHECK(cc.gamma_admissible());
    CHECK(cc.gamma_lo == doctest::Approx(2.8 / 3.0).epsilon(1e-12));
    CHECK(cc.mindist_exp == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(cc.c_r == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12)); // d/p = 0

    // d=2, p=2, R=1: the deviation-bound constants are defined regardless of
    // the chaos regime
    const auto c2 = chaos_constants(params(2, 2.0, -0.3), 1.0);
    CHECK(c2.c_r == doctest::Approx(std::log(2.0) / 2.0).epsilon(1e-12));
    CHECK(c2.l_d == doctest::Approx(20.0 / std::acos(-1.0)).epsilon(1e-12));
    CHECK_FALSE(c2.regime_ok);
    CHECK_FALSE(c2.gamma_admissible()); // gamma_lo = 3(1+alpha) >= 1: empty

    // outside the regime: flagged, not thrown
    CHECK_FALSE(chaos_constants(params(3, kInfExponent, 0.6), 1.0).regime_ok);
    CHECK_FALSE(chaos_constants(params(2, kInfExponent, 0.0), 1.0).gamma_admissible());
}

TEST_CASE("gamma_lo < 1 agrees with the chaos regime flag") {
    for (int d : {2, 3, 4, 5}) {
        for (double p : {1.5, 2.0, 3.0, 10.0, kInfExponent}) {
            for (double alpha : {0.0, 0.1, 0.25, 0.4, 0.49, 0.6, 0.9}) {
                const bool flag = in_chaos_regime(d, p, alpha);
                // independent route through the gamma_lo formula
                const double ratio = std::isinf(p) ? 2.0 : (2.0 * p - 1.0) / (p - 1.0);
                const double gamma_lo =
                    conjugate_exponent(p) * ratio * (1.0 + alpha) / static_cast<double>(d);
                CHECK(flag == (gamma_lo < 1.0));
            }
        }
    }
}

TEST_CASE("theory params regime precondition") {
    CHECK_THROWS_AS(params(2, 2.0, 0.5).require_regime(), InvalidInputError); // 2 * 1.5 = 3 > 2
    params(2, kInfExponent, 0.5).require_regime();                            // 1.5 < 2: fine
}

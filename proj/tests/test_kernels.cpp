#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "mfl/exponents.hpp"
#include "mfl/kernels.hpp"
#include "mfl/rng.hpp"

using namespace mfl;

namespace {

std::vector<double> dyadic_radii(int lo = 4, int hi = 12) {
    std::vector<double> r;
    for (int e = lo; e <= hi; ++e) r.push_back(std::pow(2.0, -e));
    return r;
}

// central finite difference of the potential; the independent route against
// which closed-form gradients are checked
std::vector<double> fd_gradient(const KernelSpec& k, const std::vector<double>& x, double h) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        auto xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        g[i] = (eval_potential(k, xp) - eval_potential(k, xm)) / (2.0 * h);
    }
    return g;
}

double norm(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

} // namespace

TEST_CASE("potential values at stated points") {
    const auto morse = KernelSpec::morse(1, 1, 2, 0.5);
    CHECK(eval_potential(morse, std::vector<double>{0.0}) == doctest::Approx(1.0).epsilon(1e-14));

    const auto pl = KernelSpec::power_law(2, 1);
    CHECK(eval_potential(pl, std::vector<double>{1.0}) == doctest::Approx(-0.5).epsilon(1e-14));

    const auto h = KernelSpec::harmonic(1);
    CHECK(eval_potential(h, std::vector<double>{3.0, 4.0}) == doctest::Approx(12.5).epsilon(1e-14));

    CHECK_THROWS_AS(eval_potential(h, std::vector<double>{std::nan("")}), InvalidInputError);
}

TEST_CASE("singular potential value convention at the origin") {
    const auto log_rep = KernelSpec::power_law(2, 0); // log repulsion diverges at 0
    CHECK(eval_potential(log_rep, std::vector<double>{0.0, 0.0}) == 0.0);
    const auto neg = KernelSpec::power_law(1, -1);
    CHECK(eval_potential(neg, std::vector<double>{0.0}) == 0.0);
}

TEST_CASE("gradient values and the origin convention") {
    const auto pl = KernelSpec::power_law(2, 1);
    const auto g = eval_gradient(pl, std::vector<double>{3.0, 4.0});
    CHECK(g[0] == doctest::Approx(2.4).epsilon(1e-14));
    CHECK(g[1] == doctest::Approx(3.2).epsilon(1e-14));

    const auto morse = KernelSpec::morse(1, 1, 2, 0.5);
    const double expect = std::exp(-1.0) - 4.0 * std::exp(-2.0);
    const auto gm = eval_gradient(morse, std::vector<double>{1.0, 0.0});
    CHECK(gm[0] == doctest::Approx(expect).epsilon(1e-12));
    CHECK(gm[1] == 0.0);
    // cross-check against the finite-difference route
    const auto fd = fd_gradient(morse, {1.0, 0.0}, 1e-6);
    CHECK(gm[0] == doctest::Approx(fd[0]).epsilon(1e-8));

    for (const auto* k : {&pl, &morse}) {
        const auto g0 = eval_gradient(*k, std::vector<double>{0.0, 0.0, 0.0});
        for (double v : g0) CHECK(v == 0.0);
    }
}

TEST_CASE("hessian operator norm from the radial eigenvalues") {
    const auto h = KernelSpec::harmonic(1);
    CHECK(eval_hessian_norm(h, std::vector<double>{0.3, -2.0}) == doctest::Approx(1.0));

    const auto pl = KernelSpec::power_law(2, 1);
    CHECK(eval_hessian_norm(pl, std::vector<double>{2.0, 0.0}) == doctest::Approx(1.0).epsilon(1e-12));

    // cross-check against a finite-difference Hessian at a radial point
    const double r = 0.7;
    const double hstep = 1e-5;
    auto w = [&](double x, double y) { return eval_potential(pl, std::vector<double>{x, y}); };
    const double wxx = (w(r + hstep, 0) - 2 * w(r, 0) + w(r - hstep, 0)) / (hstep * hstep);
    const double wyy = (w(r, hstep) - 2 * w(r, 0) + w(r, -hstep)) / (hstep * hstep);
    const double analytic = eval_hessian_norm(pl, std::vector<double>{r, 0.0});
    CHECK(analytic == doctest::Approx(std::max(std::abs(wxx), std::abs(wyy))).epsilon(1e-4));

    CHECK_THROWS_AS(eval_hessian_norm(pl, std::vector<double>{0.0, 0.0}), InvalidInputError);
}

TEST_CASE("hessian norm divergence rate for a singular kernel") {
    // |D^2 W| ~ r^{-(1+alpha)} with alpha = 0.5 for b = 0.5
    const auto pl = KernelSpec::power_law(2, 0.5);
    const auto radii = dyadic_radii();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (double r : radii) {
        const double lx = std::log(r);
        const double ly = std::log(eval_hessian_norm(pl, std::vector<double>{r, 0.0}));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double n = static_cast<double>(radii.size());
    const double slope = (sxy - sx * sy / n) / (sxx - sx * sx / n);
    CHECK(slope == doctest::Approx(-1.5).epsilon(0.02));
}

TEST_CASE("gradient matches finite differences for every variant") {
    const std::vector<KernelSpec> kernels = {
        KernelSpec::harmonic(1.7), KernelSpec::power_law(2, 1), KernelSpec::power_law(3, 0.5),
        KernelSpec::morse(1, 1, 2, 0.5),
        KernelSpec::truncated_tail(KernelSpec::power_law(2, 1), 5.0)};
    Rng rng(2024);
    for (const auto& k : kernels) {
        for (int trial = 0; trial < 1000; ++trial) {
            const int d = 1 + static_cast<int>(rng.next_u64() % 3);
            // radius log-uniform in [1e-3, 10]
            const double r = std::pow(10.0, rng.uniform(-3.0, 1.0));
            std::vector<double> x(d);
            double n2 = 0;
            for (auto& v : x) {
                v = rng.uniform(-1.0, 1.0);
                n2 += v * v;
            }
            for (auto& v : x) v *= r / std::sqrt(n2);
            const auto g = eval_gradient(k, x);
            const auto fd = fd_gradient(k, x, 1e-6 * std::max(1.0, r));
            std::vector<double> diff(d);
            for (int i = 0; i < d; ++i) diff[i] = g[i] - fd[i];
            const double scale = std::max(norm(g), 1e-12);
            CHECK(norm(diff) / scale <= 1e-5);
        }
    }
}

TEST_CASE("gradient odd symmetry is exact") {
    Rng rng(7);
    const auto k = KernelSpec::morse(1.2, 0.9, 2.5, 0.4);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x = {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
        std::vector<double> mx = {-x[0], -x[1], -x[2]};
        const auto g = eval_gradient(k, x);
        const auto gm = eval_gradient(k, mx);
        for (int i = 0; i < 3; ++i) CHECK(gm[i] == -g[i]);
    }
}

TEST_CASE("gradient bound |grad W| r^{1-b} stays bounded near the origin") {
    const double b = 0.5;
    const auto k = KernelSpec::power_law(2, b);
    auto decade_max = [&](double lo, double hi) {
        double best = 0;
        for (int i = 0; i <= 50; ++i) {
            const double r = lo * std::pow(hi / lo, i / 50.0);
            best = std::max(best, std::abs(k.deriv_radial(r)) * std::pow(r, 1.0 - b));
        }
        return best;
    };
    const double near = decade_max(1e-4, 1e-3);
    const double far = decade_max(1e-2, 1e-1);
    CHECK(std::max(near, far) / std::min(near, far) <= 10.0);
}

TEST_CASE("singularity order estimates") {
    const auto radii = dyadic_radii();

    auto p21 = estimate_singularity_order(KernelSpec::power_law(2, 1), radii);
    CHECK(std::abs(p21.alpha - 0.0) <= 1e-2);

    auto p205 = estimate_singularity_order(KernelSpec::power_law(2, 0.5), radii);
    CHECK(std::abs(p205.alpha - 0.5) <= 1e-2);

    auto morse = estimate_singularity_order(KernelSpec::morse(1, 1, 2, 0.5), radii);
    CHECK(std::abs(morse.alpha) <= 0.05);
    CHECK(morse.c_grad > 0);
    CHECK(morse.c_grad < 10); // bounded gradient: tends to C_A/l_A - C_R/l_R = -3

    CHECK_THROWS_AS(
        estimate_singularity_order(KernelSpec::power_law(2, 1), std::vector<double>{0.5, 0.25}),
        InvalidInputError);

    // vanishing gradient outside the truncation: degenerate
    const auto dead = KernelSpec::truncated_tail(KernelSpec::harmonic(1), 0.001);
    CHECK_THROWS_AS(estimate_singularity_order(dead, std::vector<double>{0.9, 0.8, 0.7, 0.6}),
                    InvalidInputError);
}

TEST_CASE("kernel regime classification") {
    SingularityProfile prof;
    prof.c_grad = prof.c_hess = 1.0;
    prof.valid_radius = 0.1;

    prof.alpha = 0.5;
    auto rep = verify_kernel_assumptions(prof, 2, kInfExponent);
    CHECK(rep.thm31_regime);       // 0.5 < d/p' - 1 = 1
    CHECK_FALSE(rep.chaos_regime); // empty in d=2 for alpha >= 0
    CHECK_FALSE(rep.cor33_regime);

    prof.alpha = 0.4;
    rep = verify_kernel_assumptions(prof, 3, kInfExponent);
    CHECK(rep.chaos_regime); // alpha < 1/2 at p = inf in d = 3
    CHECK(rep.margin_chaos == doctest::Approx(0.1));

    prof.alpha = 1.0;
    rep = verify_kernel_assumptions(prof, 2, kInfExponent);
    CHECK_FALSE(rep.admissible); // boundary alpha = d-1 excluded

    prof.alpha = -0.5;
    rep = verify_kernel_assumptions(prof, 2, 2.0);
    CHECK(rep.cor33_regime);
    CHECK(rep.to_text().find("regime_cor33 yes") != std::string::npos);
}

TEST_CASE("key gradient-difference inequality with the measured constants") {
    // |grad W(x) - grad W(y)| <= 2 C_hess |x-y| / min(|x|,|y|)^{1+alpha},
    // with C_hess measured over the sampled radius range
    for (const auto& k : {KernelSpec::power_law(2, 1), KernelSpec::power_law(2, 0.5),
                          KernelSpec::morse(1, 1, 2, 0.5)}) {
        const auto prof = estimate_singularity_order(k, dyadic_radii());
        double c_hess = 0.0;
        for (int i = 0; i <= 200; ++i) {
            const double r = 0.01 * std::pow(150.0, i / 200.0); // 0.01 .. 1.5
            const double h = std::max(std::abs(k.second_deriv_radial(r)), std::abs(k.deriv_radial(r) / r));
            c_hess = std::max(c_hess, h * std::pow(r, 1.0 + prof.alpha));
        }
        Rng rng(99);
        for (int trial = 0; trial < 1000; ++trial) {
            std::vector<double> x(2), y(2);
            auto draw = [&](std::vector<double>& v) {
                const double r = std::pow(10.0, rng.uniform(-1.3, 0.0)); // 0.05 .. 1
                const double a = rng.uniform(0.0, 2.0 * std::acos(-1.0));
                v = {r * std::cos(a), r * std::sin(a)};
                return r;
            };
            const double rx = draw(x), ry = draw(y);
            const auto gx = eval_gradient(k, x);
            const auto gy = eval_gradient(k, y);
            const double lhs = std::hypot(gx[0] - gy[0], gx[1] - gy[1]);
            const double dxy = std::hypot(x[0] - y[0], x[1] - y[1]);
            const double rhs = 2.0 * c_hess * dxy / std::pow(std::min(rx, ry), 1.0 + prof.alpha);
            CHECK(lhs <= rhs * (1.0 + 1e-9));
        }
    }
}

TEST_CASE("mollified gradient: symmetry exactness") {
    MollifiedKernel mk{KernelSpec::harmonic(1), 0.3, 8};
    const auto g = mollify_gradient(mk, std::vector<double>{1.0, 0.0});
    // linear gradients pass through a symmetric unit-mass mollifier unchanged
    CHECK(g[0] == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(g[1] == doctest::Approx(0.0).epsilon(1e-15));

    MollifiedKernel mks{KernelSpec::power_law(2, 1), 0.1, 8};
    const auto g0 = mollify_gradient(mks, std::vector<double>{0.0, 0.0});
    CHECK(g0[0] == 0.0);
    CHECK(g0[1] == 0.0);

    MollifiedKernel bad{KernelSpec::harmonic(1), 0.1, 0};
    CHECK_THROWS_AS(mollify_gradient(bad, std::vector<double>{1.0, 0.0}), ConfigError);
}

namespace {

// max over |x| in [2 eps, 1] of |grad(W - W_eps)(x)| |x|^{1+alpha} / eps
double mollifier_error_ratio(const KernelSpec& k, double alpha, double eps, int order = 8) {
    MollifiedKernel mk{k, eps, order};
    double worst = 0.0;
    for (int i = 0; i <= 60; ++i) {
        const double r = 2.0 * eps * std::pow(1.0 / (2.0 * eps), i / 60.0);
        std::vector<double> x = {r, 0.0};
        const auto gm = mollify_gradient(mk, x);
        const auto gb = eval_gradient(k, x);
        const double diff = std::hypot(gm[0] - gb[0], gm[1] - gb[1]);
        worst = std::max(worst, diff * std::pow(r, 1.0 + alpha) / eps);
    }
    return worst;
}

} // namespace

TEST_CASE("mollifier error bound is stable under eps halving") {
    const auto k = KernelSpec::power_law(2, 1);
    const double r1 = mollifier_error_ratio(k, 0.0, 0.1);
    const double r2 = mollifier_error_ratio(k, 0.0, 0.05);
    const double r3 = mollifier_error_ratio(k, 0.0, 0.025);
    const double hi = std::max({r1, r2, r3});
    const double lo = std::min({r1, r2, r3});
    CHECK(hi / lo <= 2.0);

    // pointwise second-order form of the same bound: |diff| |x|^2 / eps bounded
    MollifiedKernel mk{k, 0.1, 8};
    const auto gm = mollify_gradient(mk, std::vector<double>{0.5, 0.0});
    const auto gb = eval_gradient(k, std::vector<double>{0.5, 0.0});
    const double ratio = std::abs(gm[0] - gb[0]) * 0.25 / 0.1;
    CHECK(ratio <= 1.0);
}

TEST_CASE("radial scale table reproduces the quadrature") {
    MollifiedKernel mk{KernelSpec::power_law(2, 1), 0.05, 8};
    const auto table = RadialScaleTable::build(mk, 2, 4.0, 512, 1024);
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
        const double r = rng.uniform(0.01, 3.9);
        std::vector<double> x = {r, 0.0};
        const auto g = mollify_gradient(mk, x);
        const double direct = g[0] / r;
        CHECK(table.scale(r) == doctest::Approx(direct).epsilon(1e-5));
    }
    // beyond the table range: base closed form
    CHECK(table.scale(5.0) == doctest::Approx(KernelSpec::power_law(2, 1).gradient_scale(5.0)));
}

TEST_CASE("truncated tail matches the base inside and fades outside") {
    const auto base = KernelSpec::power_law(2, 1);
    const auto cut = KernelSpec::truncated_tail(base, 2.0);
    CHECK(cut.deriv_radial(1.5) == base.deriv_radial(1.5));
    CHECK(cut.value_radial(1.5) == base.value_radial(1.5));
    CHECK(cut.deriv_radial(2.0) == doctest::Approx(base.deriv_radial(2.0)));
    CHECK(cut.deriv_radial(4.0) == 0.0);
    CHECK(cut.deriv_radial(4.5) == 0.0);
    // gradient continuous at the cut and at 2 r_cut
    CHECK(cut.deriv_radial(2.0 + 1e-9) == doctest::Approx(base.deriv_radial(2.0)).epsilon(1e-6));
    CHECK(cut.deriv_radial(4.0 - 1e-6) == doctest::Approx(0.0).epsilon(1e-10));
}

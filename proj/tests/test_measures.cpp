#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mfl/exponents.hpp"
#include "mfl/measures.hpp"
#include "mfl/rng.hpp"
#include "mfl/transport.hpp"

using namespace mfl;

TEST_CASE("grid_init on the 1-d uniform box") {
    const auto rho = DensitySpec::uniform_box({0.0}, {1.0});
    const auto mu = grid_init(rho, 0.25);
    REQUIRE(mu.size() == 4);
    const double expect[4] = {0.125, 0.375, 0.625, 0.875};
    for (int i = 0; i < 4; ++i) {
        CHECK(mu.positions[i] == doctest::Approx(expect[i]).epsilon(1e-14));
        CHECK(mu.masses[i] == doctest::Approx(0.25).epsilon(1e-14));
    }
    CHECK(min_interparticle_distance(mu) == doctest::Approx(0.25).epsilon(1e-14));

    // d_inf to the density via a fine discretization: the cell-center map is
    // optimal here, value (sqrt(d)/2) mesh = 0.125
    const auto sd = semidiscrete_distance(mu, rho, kInfExponent, 10000);
    CHECK(std::abs(sd.estimate - 0.125) <= 5e-4 + sd.error_bar);
}

TEST_CASE("grid_init normalization and empty-support error") {
    const auto rho = DensitySpec::radial_bump({0.0, 0.0}, 1.0, 2.0);
    const auto mu = grid_init(rho, 0.2);
    CHECK(std::abs(mu.mass_sum() - 1.0) <= 1e-12);
    mu.check_normalized();
    for (double m : mu.masses) CHECK(m > 0.0);
}

TEST_CASE("grid refinement halves the distance to the density") {
    const auto rho = DensitySpec::uniform_box({0.0, 0.0}, {1.0, 1.0});
    TransportLimits wide;
    wide.max_pair_product = 512u * 1024u * 1024u;
    auto eta_of = [&](double mesh) {
        const auto mu = grid_init(rho, mesh);
        const auto proxy = grid_init(rho, mesh / 10.0);
        return wasserstein_infinity(mu, proxy, wide).distance;
    };
    const double e1 = eta_of(0.2);
    const double e2 = eta_of(0.1);
    CHECK(e2 <= 0.5 * e1 * 1.2);
    CHECK(e2 >= 0.5 * e1 * 0.8); // exact self-similar scaling here
}

TEST_CASE("xi_N scaling under the grid construction") {
    // xi = (eta0)^{d/p'} (eta_m0)^{-(1+alpha)} with d=2, p=inf, alpha=0:
    // slope in mesh must be d/p' - (1+alpha) = 1 within 5%
    const auto rho = DensitySpec::uniform_box({0.0, 0.0}, {1.0, 1.0});
    std::vector<double> meshes = {0.1, 0.05, 0.025};
    TransportLimits wide;
    wide.max_pair_product = 512u * 1024u * 1024u;
    std::vector<double> xs, ys;
    for (double mesh : meshes) {
        const auto mu = grid_init(rho, mesh);
        const auto proxy = grid_init(rho, mesh / 10.0);
        const double eta0 = wasserstein_infinity(mu, proxy, wide).distance;
        const double eta_m0 = min_interparticle_distance(mu);
        const double xi = eta0 * eta0 / eta_m0;
        xs.push_back(std::log(mesh));
        ys.push_back(std::log(xi));
    }
    const double slope = (ys.front() - ys.back()) / (xs.front() - xs.back());
    CHECK(std::abs(slope - 1.0) <= 0.05);
}

TEST_CASE("iid sampling: determinism, support, moments") {
    const auto rho = DensitySpec::uniform_box({0.0, 0.0}, {1.0, 1.0});

    const auto one = iid_sample(rho, 1, 42);
    REQUIRE(one.size() == 1);
    CHECK(one.masses[0] == 1.0);
    CHECK(one.positions[0] >= 0.0);
    CHECK(one.positions[0] <= 1.0);

    const auto a = iid_sample(rho, 1000, 42);
    const auto b = iid_sample(rho, 1000, 42);
    CHECK(a.positions == b.positions); // bit-identical for a fixed seed

    const std::size_t n = 100000;
    const auto big = iid_sample(rho, n, 7);
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += big.positions[2 * i];
        my += big.positions[2 * i + 1];
    }
    mx /= n;
    my /= n;
    const double tol = 3.0 * std::sqrt(1.0 / 12.0) / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(mx - 0.5) <= tol);
    CHECK(std::abs(my - 0.5) <= tol);
}

TEST_CASE("iid sampling matches the density (radial bump quantiles)") {
    const auto rho = DensitySpec::radial_bump({0.0, 0.0}, 1.0, 1.0);
    const std::size_t n = 20000;
    const auto mu = iid_sample(rho, n, 11);
    // radial CDF: P(r <= s) = 1 - (1-s^2)^2 for the q=1 bump in d=2
    std::vector<double> radii(n);
    for (std::size_t i = 0; i < n; ++i)
        radii[i] = std::hypot(mu.positions[2 * i], mu.positions[2 * i + 1]);
    std::sort(radii.begin(), radii.end());
    for (double s : {0.3, 0.5, 0.7}) {
        const double expect = 1.0 - std::pow(1.0 - s * s, 2.0);
        const auto it = std::lower_bound(radii.begin(), radii.end(), s);
        const double emp = static_cast<double>(it - radii.begin()) / static_cast<double>(n);
        CHECK(std::abs(emp - expect) <= 4.0 * std::sqrt(expect * (1 - expect) / n));
    }
}

TEST_CASE("blob density closed forms") {
    EmpiricalMeasure one;
    one.dim = 2;
    one.positions = {0.0, 0.0};
    one.masses = {1.0};
    const auto blob = blob_smooth(one, 1.0);
    const double pi = std::acos(-1.0);
    CHECK(blob.value(std::vector<double>{0.3, 0.4}) == doctest::Approx(1.0 / pi));
    CHECK(blob.value(std::vector<double>{1.2, 0.0}) == 0.0);

    EmpiricalMeasure two;
    two.dim = 2;
    two.positions = {0.0, 0.0, 0.0, 0.0};
    two.masses = {0.5, 0.5};
    const auto blob2 = blob_smooth(two, 1.0);
    CHECK(blob2.value(std::vector<double>{0.3, 0.4}) ==
          doctest::Approx(blob.value(std::vector<double>{0.3, 0.4})));

    CHECK(blob_epsilon_schedule(256, 0.5, 2) == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("blob L^p norms") {
    EmpiricalMeasure one;
    one.dim = 2;
    one.positions = {0.0, 0.0};
    one.masses = {1.0};
    const double pi = std::acos(-1.0);
    const double eps = 0.5;
    const auto blob = blob_smooth(one, eps);

    CHECK(blob_lp_norm(blob, kInfExponent, 8) == doctest::Approx(1.0 / (pi * 0.25)).epsilon(1e-12));
    // ||1_B / |B|||_p = (c_d eps^d)^{-1/p'}; counting quadrature resolves the
    // disk boundary to ~1/resolution
    const double expect2 = std::pow(pi * eps * eps, -0.5);
    CHECK(blob_lp_norm(blob, 2.0, 32) == doctest::Approx(expect2).epsilon(0.03));

    EmpiricalMeasure two;
    two.dim = 2;
    two.positions = {0.0, 0.0, 5.0, 0.0};
    two.masses = {0.5, 0.5};
    CHECK(blob_lp_norm(blob_smooth(two, eps), kInfExponent, 8) ==
          doctest::Approx(0.5 / (pi * 0.25)).epsilon(1e-12));

    CHECK_THROWS_AS(blob_lp_norm(blob, 2.0, 3), ConfigError);
}

TEST_CASE("blob L^p norm agrees with Monte Carlo integration") {
    Rng rng(3);
    EmpiricalMeasure mu;
    mu.dim = 2;
    const int n = 20;
    for (int i = 0; i < n; ++i) {
        mu.positions.push_back(rng.uniform(0, 1));
        mu.positions.push_back(rng.uniform(0, 1));
        mu.masses.push_back(1.0 / n);
    }
    const double eps = 0.15;
    const auto blob = blob_smooth(mu, eps);
    const double quad = blob_lp_norm(blob, 2.0, 16);

    // Monte Carlo on the bounding box
    const double lo = -eps, hi = 1.0 + eps;
    const double vol = (hi - lo) * (hi - lo);
    double acc = 0.0;
    const std::size_t samples = 1000000;
    for (std::size_t s = 0; s < samples; ++s) {
        const double x[2] = {rng.uniform(lo, hi), rng.uniform(lo, hi)};
        const double v = blob.value(std::span<const double>(x, 2));
        acc += v * v;
    }
    const double mc = std::sqrt(acc / samples * vol);
    CHECK(quad == doctest::Approx(mc).epsilon(0.01));
}

TEST_CASE("minimum inter-particle distance") {
    EmpiricalMeasure mu;
    mu.dim = 1;
    mu.positions = {0.0, 0.3, 1.0};
    mu.masses = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    CHECK(min_interparticle_distance(mu) == doctest::Approx(0.3).epsilon(1e-14));

    const auto rho = DensitySpec::uniform_box({0.0, 0.0}, {1.0, 1.0});
    const auto grid = grid_init(rho, 0.25);
    CHECK(min_interparticle_distance(grid) == doctest::Approx(0.25).epsilon(1e-12));

    // accelerated path equals the exhaustive scan
    Rng rng(17);
    EmpiricalMeasure rnd;
    rnd.dim = 2;
    const int n = 100;
    for (int i = 0; i < n; ++i) {
        rnd.positions.push_back(rng.uniform(0, 1));
        rnd.positions.push_back(rng.uniform(0, 1));
        rnd.masses.push_back(1.0 / n);
    }
    double best = 1e300;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            best = std::min(best, std::hypot(rnd.positions[2 * i] - rnd.positions[2 * j],
                                             rnd.positions[2 * i + 1] - rnd.positions[2 * j + 1]));
    CHECK(min_interparticle_distance(rnd) == best);

    EmpiricalMeasure single;
    single.dim = 1;
    single.positions = {0.5};
    single.masses = {1.0};
    CHECK_THROWS_AS(min_interparticle_distance(single), InvalidInputError);
}

TEST_CASE("support radius") {
    EmpiricalMeasure mu;
    mu.dim = 2;
    mu.positions = {0.0, 0.0};
    mu.masses = {1.0};
    CHECK(support_radius(mu) == 0.0);

    mu.positions = {-1.0, 0.0, 0.0, 2.0};
    mu.masses = {0.5, 0.5};
    CHECK(support_radius(mu) == 2.0);

    const auto rho = DensitySpec::uniform_box({0.0, 0.0}, {1.0, 1.0});
    CHECK(support_radius(iid_sample(rho, 500, 9)) <= 1.0);
    CHECK(rho.support_radius() == 1.0);
}

TEST_CASE("density norms and sup bounds") {
    const auto box = DensitySpec::uniform_box({0.0, 0.0}, {1.0, 1.0});
    CHECK(box.lp_norm(2.0) == doctest::Approx(1.0));
    CHECK(box.lp_norm(kInfExponent) == doctest::Approx(1.0));

    const auto gauss = DensitySpec::gaussian_truncated({0.0}, 0.5, 2.0);
    // normalization cross-check: value integrates to ~1 on a fine grid
    double acc = 0.0;
    const int n = 4000;
    for (int i = 0; i < n; ++i) {
        const double x = -2.0 + 4.0 * (i + 0.5) / n;
        acc += gauss.value(std::vector<double>{x}) * (4.0 / n);
    }
    CHECK(acc == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("ill-conditioned density rejected during sampling") {
    // sharp gaussian in a huge truncation ball: acceptance rate ~ (sigma/R)^d
    const auto bad = DensitySpec::gaussian_truncated({0.0, 0.0}, 5e-3, 1.0);
    CHECK_THROWS_AS(iid_sample(bad, 100, 1), ConfigError);
}

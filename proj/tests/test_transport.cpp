#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mfl/exponents.hpp"
#include "mfl/measures.hpp"
#include "mfl/rng.hpp"
#include "mfl/transport.hpp"

using namespace mfl;

namespace {

EmpiricalMeasure make(int dim, std::vector<double> pos, std::vector<double> mass) {
    EmpiricalMeasure mu;
    mu.dim = dim;
    mu.positions = std::move(pos);
    mu.masses = std::move(mass);
    return mu;
}

EmpiricalMeasure random_measure(Rng& rng, int dim, std::size_t n, bool equal_masses) {
    EmpiricalMeasure mu;
    mu.dim = dim;
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (int k = 0; k < dim; ++k) mu.positions.push_back(rng.uniform(-1, 1));
        const double m = equal_masses ? 1.0 : rng.uniform(0.1, 1.0);
        mu.masses.push_back(m);
        total += m;
    }
    for (auto& m : mu.masses) m /= total;
    return mu;
}

} // namespace

TEST_CASE("point-to-point distances") {
    const auto mu = make(2, {0.0, 0.0}, {1.0});
    const auto nu = make(2, {3.0, 4.0}, {1.0});
    for (int p : {1, 2}) {
        const auto r = wasserstein_p(mu, nu, p);
        CHECK(r.distance == doctest::Approx(5.0).epsilon(1e-12));
        r.plan.check(mu, nu);
    }
    const auto ri = wasserstein_infinity(mu, nu);
    CHECK(ri.distance == doctest::Approx(5.0).epsilon(1e-12));
    ri.plan.check(mu, nu);
}

TEST_CASE("forced split plan") {
    const auto mu = make(1, {0.0, 1.0}, {0.5, 0.5});
    const auto nu = make(1, {0.5}, {1.0});
    CHECK(wasserstein_p(mu, nu, 1).distance == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(wasserstein_infinity(mu, nu).distance == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("two-atom permutation case") {
    const auto mu = make(1, {0.0, 1.0}, {0.5, 0.5});
    const auto nu = make(1, {0.1, 0.9}, {0.5, 0.5});
    CHECK(wasserstein_p(mu, nu, 1).distance == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(wasserstein_p(mu, nu, 2).distance == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(wasserstein_infinity(mu, nu).distance == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(brute_force_distance(mu, nu, 1.0) == doctest::Approx(0.1).epsilon(1e-14));
}

TEST_CASE("identical measures have zero distance and identity plan") {
    Rng rng(31);
    const auto mu = random_measure(rng, 2, 17, false);
    const auto r = wasserstein_infinity(mu, mu);
    CHECK(r.distance == 0.0);
    r.plan.check(mu, mu);
    CHECK(wasserstein_p(mu, mu, 1).distance <= 1e-14);
    CHECK(wasserstein_p(mu, mu, 2).distance <= 1e-7); // sqrt of a ~1e-15 cost
}

TEST_CASE("brute-force oracle equivalence on 200 random instances") {
    Rng rng(12345);
    for (int trial = 0; trial < 200; ++trial) {
        const int d = 1 + static_cast<int>(rng.next_u64() % 3);
        const std::size_t n = 1 + rng.next_u64() % 7;
        const auto mu = random_measure(rng, d, n, true);
        const auto nu = random_measure(rng, d, n, true);

        const double b1 = brute_force_distance(mu, nu, 1.0);
        const double b2 = brute_force_distance(mu, nu, 2.0);
        const double bi = brute_force_distance(mu, nu, kInfExponent);

        const auto r1 = wasserstein_p(mu, nu, 1);
        const auto r2 = wasserstein_p(mu, nu, 2);
        const auto ri = wasserstein_infinity(mu, nu);
        CHECK(std::abs(r1.distance - b1) <= 1e-12);
        CHECK(std::abs(r2.distance - b2) <= 1e-12);
        CHECK(std::abs(ri.distance - bi) <= 1e-12);
        r1.plan.check(mu, nu);
        r2.plan.check(mu, nu);
        ri.plan.check(mu, nu);
    }
}

TEST_CASE("brute force preconditions") {
    Rng rng(5);
    const auto mu = random_measure(rng, 2, 9, true);
    const auto nu = random_measure(rng, 2, 9, true);
    CHECK_THROWS_AS(brute_force_distance(mu, nu, 1.0), CapacityError);
    const auto unequal = random_measure(rng, 2, 4, false);
    const auto other = random_measure(rng, 2, 4, true);
    CHECK_THROWS_AS(brute_force_distance(unequal, other, 1.0), InvalidInputError);
}

TEST_CASE("metric axioms on random triples") {
    Rng rng(777);
    for (int trial = 0; trial < 100; ++trial) {
        const int d = 1 + static_cast<int>(rng.next_u64() % 2);
        const auto a = random_measure(rng, d, 2 + rng.next_u64() % 4, false);
        const auto b = random_measure(rng, d, 2 + rng.next_u64() % 4, false);
        const auto c = random_measure(rng, d, 2 + rng.next_u64() % 4, false);
        for (int p : {1, 2}) {
            const double ab = wasserstein_p(a, b, p).distance;
            const double ba = wasserstein_p(b, a, p).distance;
            const double ac = wasserstein_p(a, c, p).distance;
            const double cb = wasserstein_p(c, b, p).distance;
            CHECK(std::abs(ab - ba) <= 1e-10);
            CHECK(ab <= ac + cb + 1e-9);
        }
        const double ab = wasserstein_infinity(a, b).distance;
        const double ba = wasserstein_infinity(b, a).distance;
        const double ac = wasserstein_infinity(a, c).distance;
        const double cb = wasserstein_infinity(c, b).distance;
        CHECK(std::abs(ab - ba) <= 1e-10);
        CHECK(ab <= ac + cb + 1e-9);
        CHECK(ab > 1e-10); // distinct random supports
    }
}

TEST_CASE("order monotonicity d1 <= d2 <= dinf") {
    Rng rng(404);
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = random_measure(rng, 2, 3 + rng.next_u64() % 6, false);
        const auto b = random_measure(rng, 2, 3 + rng.next_u64() % 6, false);
        const double d1 = wasserstein_p(a, b, 1).distance;
        const double d2 = wasserstein_p(a, b, 2).distance;
        const double di = wasserstein_infinity(a, b).distance;
        CHECK(d1 <= d2 + 1e-10);
        CHECK(d2 <= di + 1e-10);
    }
}

TEST_CASE("capacity limit") {
    Rng rng(6);
    const auto a = random_measure(rng, 2, 64, true);
    const auto b = random_measure(rng, 2, 64, true);
    TransportLimits limits;
    limits.max_pair_product = 1000;
    CHECK_THROWS_AS(wasserstein_p(a, b, 1, limits), CapacityError);
    CHECK_THROWS_AS(wasserstein_infinity(a, b, limits), CapacityError);
}

TEST_CASE("dimension mismatch") {
    const auto a = make(1, {0.0}, {1.0});
    const auto b = make(2, {0.0, 0.0}, {1.0});
    CHECK_THROWS_AS(wasserstein_p(a, b, 1), InvalidInputError);
}

TEST_CASE("collision bound: eta_m <= 2 d_inf(mu, density proxy)") {
    const auto rho = DensitySpec::uniform_box({0.0, 0.0}, {1.0, 1.0});
    Rng rng(88);
    const auto mu = iid_sample(rho, 50, 21);
    const auto sd = semidiscrete_distance(mu, rho, kInfExponent, 600);
    const double eta_m = min_interparticle_distance(mu);
    CHECK(eta_m <= 2.0 * sd.estimate + 2.0 * sd.error_bar);
}

TEST_CASE("semidiscrete distance to a density") {
    const auto rho = DensitySpec::uniform_box({0.0, 0.0}, {1.0, 1.0});
    const auto mu = grid_init(rho, 0.25); // 16 atoms
    const auto sd = semidiscrete_distance(mu, rho, kInfExponent, 400);
    // cell-to-center map: estimate <= (sqrt2/2) 0.25 plus the proxy error
    CHECK(sd.estimate <= 0.5 * std::sqrt(2.0) * 0.25 + sd.error_bar);
    CHECK(sd.error_bar > 0.0);
    CHECK(sd.ref_atoms >= 400);

    // single atom vs 1-d uniform: mass at the ends must travel 1/2
    const auto line = DensitySpec::uniform_box({0.0}, {1.0});
    const auto point = make(1, {0.5}, {1.0});
    const auto sd1 = semidiscrete_distance(point, line, kInfExponent, 1000);
    CHECK(std::abs(sd1.estimate - 0.5) <= 1e-3 + sd1.error_bar);
    const auto sd1_d1 = semidiscrete_distance(point, line, 1.0, 1000);
    CHECK(std::abs(sd1_d1.estimate - 0.25) <= 1e-3 + sd1_d1.error_bar); // mean |x-1/2| = 1/4

    CHECK_THROWS_AS(semidiscrete_distance(mu, rho, kInfExponent, 100), InvalidInputError);
}

TEST_CASE("plan cost consistency is verified") {
    Rng rng(9);
    const auto a = random_measure(rng, 2, 6, false);
    const auto b = random_measure(rng, 2, 9, false);
    auto r = wasserstein_p(a, b, 2);
    r.plan.check(a, b);
    auto tampered = r.plan;
    tampered.cost *= 1.5;
    CHECK_THROWS_AS(tampered.check(a, b), InvalidInputError);
}

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mfl/errors.hpp"

namespace mfl {

// Weighted atomic measure sum_i m_i delta_{X_i} with unit total mass.
struct EmpiricalMeasure {
    int dim = 0;
    std::vector<double> positions; // n x dim, row-major
    std::vector<double> masses;    // n entries, strictly positive

    std::size_t size() const { return masses.size(); }
    std::span<const double> atom(std::size_t i) const {
        return {positions.data() + i * dim, static_cast<std::size_t>(dim)};
    }
    double mass_sum() const;
    // Throws unless masses are positive and sum to 1 within tol.
    void check_normalized(double tol = 1e-12) const;
};

// Compactly supported reference density with closed-form value and a declared
// sup bound (used for rejection sampling).
class DensitySpec {
public:
    // Uniform on the box [lo, hi] (per axis).
    static DensitySpec uniform_box(std::vector<double> lo, std::vector<double> hi);
    // rho(x) proportional to (1 - (|x-c|/radius)^2)^q on the ball, q >= 0.
    static DensitySpec radial_bump(std::vector<double> center, double radius, double exponent);
    // Gaussian of width sigma truncated to the ball of the given radius.
    static DensitySpec gaussian_truncated(std::vector<double> center, double sigma, double radius);

    int dim() const { return dim_; }
    double value(std::span<const double> x) const;
    double sup_bound() const { return sup_bound_; }
    // Smallest R with support in [-R, R]^d.
    double support_radius() const;
    const std::vector<double>& box_lo() const { return lo_; }
    const std::vector<double>& box_hi() const { return hi_; }
    // L^p norm of the density (p in (1, inf]); closed form for the box,
    // radial quadrature otherwise.
    double lp_norm(double p) const;
    // Mass contained in the axis-aligned cell [clo, chi]: closed form for the
    // uniform box, composite tensor quadrature otherwise.
    double box_mass(std::span<const double> clo, std::span<const double> chi) const;
    std::string describe() const;

private:
    DensitySpec() = default;
    void normalize_and_verify();
    enum class Kind { UniformBox, RadialBump, GaussianTruncated } kind_ = Kind::UniformBox;
    int dim_ = 0;
    std::vector<double> lo_, hi_;     // bounding box of the support
    std::vector<double> center_;
    double radius_ = 0.0, shape_ = 0.0; // bump exponent / gaussian sigma
    double norm_const_ = 1.0;           // multiplies the unnormalized profile
    double sup_bound_ = 0.0;
};

// One particle per nonempty mesh cell at the cell center, mass equal to the
// cell mass, renormalized to exact unit sum.  Cells with relative mass below
// 1e-12 are dropped.
EmpiricalMeasure grid_init(const DensitySpec& rho, double mesh);

// N iid draws with equal masses 1/N, by rejection against the density's sup
// bound.  Bit-reproducible for a fixed seed.
EmpiricalMeasure iid_sample(const DensitySpec& rho, std::size_t n, std::uint64_t seed);

// Atoms convolved with the normalized indicator of B(0, epsilon).
struct BlobDensity {
    EmpiricalMeasure atoms;
    double epsilon = 0.0;
    double value(std::span<const double> x) const;
};

BlobDensity blob_smooth(const EmpiricalMeasure& mu, double epsilon);

// Blob width schedule of the chaos construction: eps(N) = N^{-gamma/d}.
double blob_epsilon_schedule(std::size_t n, double gamma, int d);

// L^p norm of the blob density by counting quadrature on a grid of spacing
// epsilon/resolution covering the support; p = inf returns the max cell value.
double blob_lp_norm(const BlobDensity& b, double p, int resolution);

// Exact min over i != j of |X_i - X_j| (bucket-accelerated; compared against
// the exhaustive scan in tests).
double min_interparticle_distance(const EmpiricalMeasure& mu);

// Max over atoms of the sup-norm |X_i|_inf.
double support_radius(const EmpiricalMeasure& mu);

} // namespace mfl

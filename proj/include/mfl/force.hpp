#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mfl/kernels.hpp"
#include "mfl/measures.hpp"

namespace mfl {

// Positions in structure-of-arrays form, padded so SIMD lanes can run off the
// end: stride is a multiple of 4 and padding slots sit far away with zero
// companion mass.
struct ParticleSoA {
    int dim = 0;
    std::size_t n = 0;
    std::size_t stride = 0;
    std::vector<double> data; // dim * stride, axis-major

    static constexpr double kPadCoord = 1e8;

    static ParticleSoA from_rowmajor(std::span<const double> positions, int dim);
    double* axis(int k) { return data.data() + static_cast<std::size_t>(k) * stride; }
    const double* axis(int k) const { return data.data() + static_cast<std::size_t>(k) * stride; }
    void store_rowmajor(std::span<double> out) const;
};

// Pads masses to `stride` entries with zeros.
std::vector<double> pad_masses(std::span<const double> masses, std::size_t stride);

enum class SimdBackend { Auto, Scalar, Avx2 };

bool avx2_available();
SimdBackend resolve_backend(SimdBackend requested);
const char* backend_name(SimdBackend resolved);

// Radial factor s(r) = w'(r)/r of the pairwise force, flattened for the
// inner loops.  Both the scalar and SIMD paths evaluate the same expression
// per element; only accumulation order differs between them.
struct ScaleFun {
    enum class Kind { Harmonic, PowerA2B1, Power, Morse, Tabulated, Generic };
    Kind kind = Kind::Harmonic;
    double p0 = 0, p1 = 0, p2 = 0, p3 = 0;
    std::shared_ptr<const RadialScaleTable> table;
    std::shared_ptr<const KernelSpec> generic;

    static ScaleFun from_kernel(const KernelSpec& k);
    static ScaleFun from_table(std::shared_ptr<const RadialScaleTable> t);

    double operator()(double r) const;
    bool simd_native() const { return kind == Kind::Harmonic || kind == Kind::PowerA2B1; }
};

// First-order aggregation velocities
//   vel_i = - sum_{j != i} m_j s(r_ij) (x_i - x_j),
// with the zero-force convention for coincident pairs.  Returns the min over
// pairs of r_ij^2 (infinity when n < 2).  out_vel is row-major n x dim.
//
// The scalar kernel is the semantic reference: each unordered pair visited
// once in ascending order, contributions applied with +/- symmetry.
double force_first_order_scalar(const ParticleSoA& pts, std::span<const double> masses_padded,
                                const ScaleFun& f, std::span<double> out_vel);
#if defined(__x86_64__)
double force_first_order_avx2(const ParticleSoA& pts, std::span<const double> masses_padded,
                              const ScaleFun& f, std::span<double> out_vel, int threads);
#endif

// Backend-dispatched entry point.
double force_first_order(const ParticleSoA& pts, std::span<const double> masses_padded,
                         const ScaleFun& f, std::span<double> out_vel,
                         SimdBackend backend = SimdBackend::Auto, int threads = 1);

// Min over pairs of |x_i - x_j|^2 on SoA data (same backends).
double min_pair_r2(const ParticleSoA& pts, SimdBackend backend = SimdBackend::Auto,
                   int threads = 1);

} // namespace mfl

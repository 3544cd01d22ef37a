#if defined(__x86_64__)

#include <immintrin.h>

#include <cmath>
#include <limits>
#include <thread>
#include <vector>

#include "mfl/force.hpp"

namespace mfl {

namespace {

// scale(r) on four lanes.  Harmonic and the (a=2,b=1) power law stay in
// vector registers; the remaining families evaluate the shared scalar
// expression lane-wise so both backends agree to rounding order.
inline __m256d scale_lanes(const ScaleFun& f, __m256d r2) {
    switch (f.kind) {
        case ScaleFun::Kind::Harmonic:
            return _mm256_set1_pd(f.p0);
        case ScaleFun::Kind::PowerA2B1: {
            const __m256d r = _mm256_sqrt_pd(r2);
            return _mm256_sub_pd(_mm256_set1_pd(1.0), _mm256_div_pd(_mm256_set1_pd(1.0), r));
        }
        default: {
            alignas(32) double rr[4];
            _mm256_store_pd(rr, _mm256_sqrt_pd(r2));
            alignas(32) double ss[4];
            for (int l = 0; l < 4; ++l) ss[l] = f(rr[l]);
            return _mm256_load_pd(ss);
        }
    }
}

struct ChunkResult {
    double min_r2 = std::numeric_limits<double>::infinity();
};

template <int D>
void force_rows(const ParticleSoA& pts, const double* masses, const ScaleFun& f, double* out_vel,
                std::size_t i_begin, std::size_t i_end, ChunkResult* res) {
    const std::size_t stride = pts.stride;
    const double* xs[3] = {nullptr, nullptr, nullptr};
    for (int k = 0; k < D; ++k) xs[k] = pts.axis(k);

    const __m256d ones = _mm256_set1_pd(1.0);
    const __m256d inf = _mm256_set1_pd(std::numeric_limits<double>::infinity());
    __m256d vmin = inf;

    for (std::size_t i = i_begin; i < i_end; ++i) {
        __m256d xi[3];
        for (int k = 0; k < D; ++k) xi[k] = _mm256_set1_pd(xs[k][i]);
        const __m256i iv = _mm256_set1_epi64x(static_cast<long long>(i));
        __m256i jv = _mm256_set_epi64x(3, 2, 1, 0);
        const __m256i four = _mm256_set1_epi64x(4);
        __m256d acc[3] = {_mm256_setzero_pd(), _mm256_setzero_pd(), _mm256_setzero_pd()};

        for (std::size_t jb = 0; jb < stride; jb += 4) {
            __m256d diff[3];
            __m256d r2 = _mm256_setzero_pd();
            for (int k = 0; k < D; ++k) {
                diff[k] = _mm256_sub_pd(xi[k], _mm256_loadu_pd(xs[k] + jb));
                // unfused so r2 matches the scalar reference bit for bit
                r2 = _mm256_add_pd(r2, _mm256_mul_pd(diff[k], diff[k]));
            }
            const __m256d self = _mm256_castsi256_pd(_mm256_cmpeq_epi64(jv, iv));
            jv = _mm256_add_epi64(jv, four);

            vmin = _mm256_min_pd(vmin, _mm256_blendv_pd(r2, inf, self));
            // zero-force convention: mask self and exactly coincident pairs
            const __m256d coincident = _mm256_cmp_pd(r2, _mm256_setzero_pd(), _CMP_EQ_OQ);
            const __m256d dead = _mm256_or_pd(self, coincident);
            const __m256d r2_safe = _mm256_blendv_pd(r2, ones, dead);
            const __m256d m = _mm256_andnot_pd(dead, _mm256_loadu_pd(masses + jb));
            const __m256d w = _mm256_mul_pd(m, scale_lanes(f, r2_safe));
            for (int k = 0; k < D; ++k) acc[k] = _mm256_fmadd_pd(w, diff[k], acc[k]);
        }
        alignas(32) double lanes[4];
        for (int k = 0; k < D; ++k) {
            _mm256_store_pd(lanes, acc[k]);
            out_vel[i * D + k] = -(((lanes[0] + lanes[1]) + lanes[2]) + lanes[3]);
        }
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, vmin);
    res->min_r2 = std::min(std::min(lanes[0], lanes[1]), std::min(lanes[2], lanes[3]));
}

template <int D>
double dispatch_rows(const ParticleSoA& pts, std::span<const double> masses, const ScaleFun& f,
                     std::span<double> out_vel, int threads) {
    const std::size_t n = pts.n;
    if (threads <= 1 || n < 256) {
        ChunkResult r;
        force_rows<D>(pts, masses.data(), f, out_vel.data(), 0, n, &r);
        return r.min_r2;
    }
    const int t = threads;
    std::vector<ChunkResult> results(t);
    std::vector<std::thread> workers;
    workers.reserve(t);
    for (int c = 0; c < t; ++c) {
        const std::size_t lo = n * c / t, hi = n * (c + 1) / t;
        workers.emplace_back(force_rows<D>, std::cref(pts), masses.data(), std::cref(f),
                             out_vel.data(), lo, hi, &results[c]);
    }
    for (auto& w : workers) w.join();
    double min_r2 = std::numeric_limits<double>::infinity();
    for (const auto& r : results) min_r2 = std::min(min_r2, r.min_r2);
    return min_r2;
}

} // namespace

double force_first_order_avx2(const ParticleSoA& pts, std::span<const double> masses_padded,
                              const ScaleFun& f, std::span<double> out_vel, int threads) {
    switch (pts.dim) {
        case 1: return dispatch_rows<1>(pts, masses_padded, f, out_vel, threads);
        case 2: return dispatch_rows<2>(pts, masses_padded, f, out_vel, threads);
        case 3: return dispatch_rows<3>(pts, masses_padded, f, out_vel, threads);
        default:
            throw InvalidInputError("avx2 force kernel supports dimensions 1 to 3");
    }
}

} // namespace mfl

#endif // __x86_64__

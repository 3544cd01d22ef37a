#include <limits>

#include "mfl/force.hpp"

namespace mfl {

bool avx2_available() {
#if defined(__x86_64__) && defined(__GNUC__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

SimdBackend resolve_backend(SimdBackend requested) {
    if (requested == SimdBackend::Scalar) return SimdBackend::Scalar;
    if (requested == SimdBackend::Avx2) {
        if (!avx2_available()) throw ConfigError("avx2 backend requested but not available");
        return SimdBackend::Avx2;
    }
    return avx2_available() ? SimdBackend::Avx2 : SimdBackend::Scalar;
}

const char* backend_name(SimdBackend resolved) {
    switch (resolved) {
        case SimdBackend::Scalar: return "scalar";
        case SimdBackend::Avx2: return "avx2";
        default: return "auto";
    }
}

double force_first_order(const ParticleSoA& pts, std::span<const double> masses_padded,
                         const ScaleFun& f, std::span<double> out_vel, SimdBackend backend,
                         int threads) {
    const SimdBackend b = resolve_backend(backend);
#if defined(__x86_64__)
    if (b == SimdBackend::Avx2 && pts.dim <= 3)
        return force_first_order_avx2(pts, masses_padded, f, out_vel, threads);
#endif
    (void)b;
    return force_first_order_scalar(pts, masses_padded, f, out_vel);
}

double min_pair_r2(const ParticleSoA& pts, SimdBackend backend, int threads) {
    if (pts.n < 2) return std::numeric_limits<double>::infinity();
    // share the force kernels with a zero-mass weight vector: the velocity
    // output is discarded and the pair minimum falls out for free
    static const ScaleFun harmonic = [] {
        ScaleFun f;
        f.kind = ScaleFun::Kind::Harmonic;
        f.p0 = 0.0;
        return f;
    }();
    std::vector<double> zero_masses(pts.stride, 0.0);
    std::vector<double> sink(pts.n * static_cast<std::size_t>(pts.dim));
    return force_first_order(pts, zero_masses, harmonic, sink, backend, threads);
}

} // namespace mfl

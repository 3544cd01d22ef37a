#include <cmath>
#include <limits>

#include "mfl/force.hpp"

namespace mfl {

ParticleSoA ParticleSoA::from_rowmajor(std::span<const double> positions, int dim) {
    ParticleSoA p;
    p.dim = dim;
    p.n = positions.size() / static_cast<std::size_t>(dim);
    p.stride = (p.n + 3) / 4 * 4;
    p.data.assign(static_cast<std::size_t>(dim) * p.stride, kPadCoord);
    for (std::size_t i = 0; i < p.n; ++i)
        for (int k = 0; k < dim; ++k) p.data[static_cast<std::size_t>(k) * p.stride + i] = positions[i * dim + k];
    return p;
}

void ParticleSoA::store_rowmajor(std::span<double> out) const {
    for (std::size_t i = 0; i < n; ++i)
        for (int k = 0; k < dim; ++k) out[i * dim + k] = data[static_cast<std::size_t>(k) * stride + i];
}

std::vector<double> pad_masses(std::span<const double> masses, std::size_t stride) {
    std::vector<double> m(stride, 0.0);
    for (std::size_t i = 0; i < masses.size(); ++i) m[i] = masses[i];
    return m;
}

namespace {

double pow_or_special(double r, double e) {
    if (e == 0.0) return 1.0;
    if (e == 1.0) return r;
    if (e == -1.0) return 1.0 / r;
    if (e == 2.0) return r * r;
    return std::pow(r, e);
}

} // namespace

ScaleFun ScaleFun::from_kernel(const KernelSpec& k) {
    ScaleFun f;
    switch (k.family()) {
        case KernelSpec::Family::Harmonic:
            f.kind = Kind::Harmonic;
            f.p0 = k.params()[0];
            break;
        case KernelSpec::Family::PowerLawRepAtt:
            if (k.params()[0] == 2.0 && k.params()[1] == 1.0) {
                f.kind = Kind::PowerA2B1;
            } else {
                f.kind = Kind::Power;
                f.p0 = k.params()[0] - 2.0;
                f.p1 = k.params()[1] - 2.0;
            }
            break;
        case KernelSpec::Family::Morse:
            f.kind = Kind::Morse;
            f.p0 = k.params()[0] / k.params()[1]; // c_att / len_att
            f.p1 = 1.0 / k.params()[1];
            f.p2 = k.params()[2] / k.params()[3];
            f.p3 = 1.0 / k.params()[3];
            break;
        case KernelSpec::Family::TruncatedTail:
            f.kind = Kind::Generic;
            f.generic = std::make_shared<const KernelSpec>(k);
            break;
    }
    return f;
}

ScaleFun ScaleFun::from_table(std::shared_ptr<const RadialScaleTable> t) {
    ScaleFun f;
    f.kind = Kind::Tabulated;
    f.table = std::move(t);
    return f;
}

double ScaleFun::operator()(double r) const {
    switch (kind) {
        case Kind::Harmonic: return p0;
        case Kind::PowerA2B1: return 1.0 - 1.0 / r;
        case Kind::Power: return pow_or_special(r, p0) - pow_or_special(r, p1);
        case Kind::Morse: return (p0 * std::exp(-p1 * r) - p2 * std::exp(-p3 * r)) / r;
        case Kind::Tabulated: return table->scale(r);
        case Kind::Generic: return generic->gradient_scale(r);
    }
    return 0.0;
}

double force_first_order_scalar(const ParticleSoA& pts, std::span<const double> masses_padded,
                                const ScaleFun& f, std::span<double> out_vel) {
    const std::size_t n = pts.n;
    const int d = pts.dim;
    for (std::size_t i = 0; i < n * static_cast<std::size_t>(d); ++i) out_vel[i] = 0.0;
    double min_r2 = std::numeric_limits<double>::infinity();

    const double* xs[3] = {nullptr, nullptr, nullptr};
    for (int k = 0; k < d; ++k) xs[k] = pts.axis(k);

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double diff[3] = {0, 0, 0};
            double r2 = 0.0;
            for (int k = 0; k < d; ++k) {
                diff[k] = xs[k][i] - xs[k][j];
                r2 += diff[k] * diff[k];
            }
            if (r2 < min_r2) min_r2 = r2;
            if (r2 == 0.0) continue; // coincident pair: zero force by convention
            const double s = f(std::sqrt(r2));
            const double wi = masses_padded[j] * s;
            const double wj = masses_padded[i] * s;
            for (int k = 0; k < d; ++k) {
                out_vel[i * d + k] -= wi * diff[k];
                out_vel[j * d + k] += wj * diff[k];
            }
        }
    }
    return min_r2;
}

} // namespace mfl

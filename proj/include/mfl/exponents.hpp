#pragma once

#include <cmath>
#include <limits>

#include "mfl/errors.hpp"

namespace mfl {

constexpr double kInfExponent = std::numeric_limits<double>::infinity();

// p' = p/(p-1), with p = inf mapped to 1.
inline double conjugate_exponent(double p) {
    if (!(p > 1.0)) throw InvalidInputError("integrability exponent p must lie in (1, inf]");
    if (std::isinf(p)) return 1.0;
    return p / (p - 1.0);
}

// (p-1)/(2p-1); limit 1/2 at p = inf.
inline double chaos_ratio(double p) {
    if (std::isinf(p)) return 0.5;
    return (p - 1.0) / (2.0 * p - 1.0);
}

// (2p-1)/(d(p-1)); limit 2/d at p = inf.
inline double mindist_exponent(int d, double p) {
    if (std::isinf(p)) return 2.0 / static_cast<double>(d);
    return (2.0 * p - 1.0) / (static_cast<double>(d) * (p - 1.0));
}

// Strict margin of the first-order convergence regime: alpha < d/p' - 1.
inline double thm31_margin(int d, double p, double alpha) {
    return static_cast<double>(d) / conjugate_exponent(p) - 1.0 - alpha;
}

// Strict margin of the chaos regime: (1+alpha) p' < d (p-1)/(2p-1).
inline double chaos_margin(int d, double p, double alpha) {
    return static_cast<double>(d) * chaos_ratio(p) - (1.0 + alpha) * conjugate_exponent(p);
}

inline bool in_chaos_regime(int d, double p, double alpha) {
    return alpha >= 0.0 && chaos_margin(d, p, alpha) > 0.0;
}

// Volume of the unit ball in R^d: pi^{d/2} / Gamma(d/2 + 1).
inline double unit_ball_volume(int d) {
    return std::pow(std::acos(-1.0), 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

} // namespace mfl

#include "mfl/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

#include "mfl/exponents.hpp"

namespace mfl {

namespace {

bool all_finite(std::span<const double> x) {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

double norm2(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

// r^e/e with the logarithmic convention at e = 0.
double pow_over_exp(double r, double e) {
    if (e == 0.0) return std::log(r);
    return std::pow(r, e) / e;
}

// C^1 cubic fade used by the truncated tail: 1 at u=0, 0 at u=1, flat ends.
double fade(double u) { return 1.0 - u * u * (3.0 - 2.0 * u); }
double fade_deriv(double u) { return -6.0 * u * (1.0 - u); }
// Antiderivative of fade with F(0) = 0.
double fade_integral(double u) { return u - u * u * u + 0.5 * u * u * u * u; }

} // namespace

KernelSpec KernelSpec::morse(double c_att, double len_att, double c_rep, double len_rep) {
    if (!(c_att > 0 && len_att > 0 && c_rep > 0 && len_rep > 0))
        throw InvalidInputError("morse kernel requires positive strengths and lengths");
    KernelSpec k;
    k.family_ = Family::Morse;
    k.par_[0] = c_att;
    k.par_[1] = len_att;
    k.par_[2] = c_rep;
    k.par_[3] = len_rep;
    return k;
}

KernelSpec KernelSpec::power_law(double attract_exp, double repulse_exp) {
    if (!(attract_exp > repulse_exp))
        throw InvalidInputError("power-law kernel requires attraction exponent a > repulsion exponent b");
    KernelSpec k;
    k.family_ = Family::PowerLawRepAtt;
    k.par_[0] = attract_exp;
    k.par_[1] = repulse_exp;
    return k;
}

KernelSpec KernelSpec::harmonic(double stiffness) {
    if (!(stiffness > 0)) throw InvalidInputError("harmonic kernel requires positive stiffness");
    KernelSpec k;
    k.family_ = Family::Harmonic;
    k.par_[0] = stiffness;
    return k;
}

KernelSpec KernelSpec::truncated_tail(KernelSpec base, double r_cut) {
    if (!(r_cut > 0)) throw InvalidInputError("truncation radius must be positive");
    if (base.family_ == Family::TruncatedTail)
        throw InvalidInputError("nested tail truncation is not supported");
    KernelSpec k;
    k.family_ = Family::TruncatedTail;
    k.par_[0] = r_cut;
    k.base_ = std::make_shared<const KernelSpec>(std::move(base));
    return k;
}

const KernelSpec& KernelSpec::base() const {
    if (!base_) throw InvalidInputError("kernel has no base");
    return *base_;
}

bool KernelSpec::value_singular_at_origin() const {
    switch (family_) {
        case Family::PowerLawRepAtt: return par_[1] <= 0.0; // b <= 0 diverges (log or negative power)
        case Family::TruncatedTail: return base_->value_singular_at_origin();
        default: return false;
    }
}

double KernelSpec::value_radial(double r) const {
    switch (family_) {
        case Family::Morse:
            return -par_[0] * std::exp(-r / par_[1]) + par_[2] * std::exp(-r / par_[3]);
        case Family::PowerLawRepAtt:
            if (r == 0.0) return 0.0; // W(0) = 0, by convention when singular
            return pow_over_exp(r, par_[0]) - pow_over_exp(r, par_[1]);
        case Family::Harmonic:
            return 0.5 * par_[0] * r * r;
        case Family::TruncatedTail: {
            const double rc = par_[0];
            if (r <= rc) return base_->value_radial(r);
            const double u = std::min((r - rc) / rc, 1.0);
            return base_->value_radial(rc) + base_->deriv_radial(rc) * rc * fade_integral(u);
        }
    }
    return 0.0;
}

double KernelSpec::deriv_radial(double r) const {
    switch (family_) {
        case Family::Morse:
            return par_[0] / par_[1] * std::exp(-r / par_[1]) -
                   par_[2] / par_[3] * std::exp(-r / par_[3]);
        case Family::PowerLawRepAtt:
            return std::pow(r, par_[0] - 1.0) - std::pow(r, par_[1] - 1.0);
        case Family::Harmonic:
            return par_[0] * r;
        case Family::TruncatedTail: {
            const double rc = par_[0];
            if (r <= rc) return base_->deriv_radial(r);
            if (r >= 2.0 * rc) return 0.0;
            return base_->deriv_radial(rc) * fade((r - rc) / rc);
        }
    }
    return 0.0;
}

double KernelSpec::second_deriv_radial(double r) const {
    switch (family_) {
        case Family::Morse:
            return -par_[0] / (par_[1] * par_[1]) * std::exp(-r / par_[1]) +
                   par_[2] / (par_[3] * par_[3]) * std::exp(-r / par_[3]);
        case Family::PowerLawRepAtt:
            return (par_[0] - 1.0) * std::pow(r, par_[0] - 2.0) -
                   (par_[1] - 1.0) * std::pow(r, par_[1] - 2.0);
        case Family::Harmonic:
            return par_[0];
        case Family::TruncatedTail: {
            const double rc = par_[0];
            if (r <= rc) return base_->second_deriv_radial(r);
            if (r >= 2.0 * rc) return 0.0;
            return base_->deriv_radial(rc) * fade_deriv((r - rc) / rc) / rc;
        }
    }
    return 0.0;
}

double KernelSpec::gradient_scale(double r) const {
    if (family_ == Family::Harmonic) return par_[0];
    return deriv_radial(r) / r;
}

std::string KernelSpec::describe() const {
    std::ostringstream os;
    switch (family_) {
        case Family::Morse:
            os << "morse(c_att=" << par_[0] << ",len_att=" << par_[1] << ",c_rep=" << par_[2]
               << ",len_rep=" << par_[3] << ")";
            break;
        case Family::PowerLawRepAtt:
            os << "power_law(a=" << par_[0] << ",b=" << par_[1] << ")";
            break;
        case Family::Harmonic:
            os << "harmonic(k=" << par_[0] << ")";
            break;
        case Family::TruncatedTail:
            os << "truncated(" << base_->describe() << ",r_cut=" << par_[0] << ")";
            break;
    }
    return os.str();
}

double eval_potential(const KernelSpec& k, std::span<const double> x) {
    if (!all_finite(x)) throw InvalidInputError("eval_potential: non-finite input coordinate");
    const double r = norm2(x);
    if (r == 0.0 && k.value_singular_at_origin()) return 0.0;
    return k.value_radial(r);
}

std::vector<double> eval_gradient(const KernelSpec& k, std::span<const double> x) {
    if (!all_finite(x)) throw InvalidInputError("eval_gradient: non-finite input coordinate");
    std::vector<double> g(x.size(), 0.0);
    const double r = norm2(x);
    if (r == 0.0) return g;
    const double s = k.gradient_scale(r);
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = s * x[i];
    return g;
}

double eval_hessian_norm(const KernelSpec& k, std::span<const double> x) {
    if (!all_finite(x)) throw InvalidInputError("eval_hessian_norm: non-finite input coordinate");
    const double r = norm2(x);
    if (r == 0.0) throw InvalidInputError("eval_hessian_norm: singular point x = 0");
    const double radial = std::abs(k.second_deriv_radial(r));
    if (x.size() == 1) return radial;
    return std::max(radial, std::abs(k.deriv_radial(r) / r));
}

SingularityProfile estimate_singularity_order(const KernelSpec& k,
                                              std::span<const double> radii) {
    if (radii.size() < 4)
        throw InvalidInputError("estimate_singularity_order: need at least 4 radii");
    for (std::size_t i = 0; i + 1 < radii.size(); ++i)
        if (!(radii[i] > radii[i + 1]) || !(radii[i + 1] > 0.0))
            throw InvalidInputError("estimate_singularity_order: radii must be positive and decreasing");

    std::vector<double> lr, lg;
    for (double r : radii) {
        const double g = std::abs(k.deriv_radial(r));
        if (g < 1e-300) continue;
        lr.push_back(std::log(r));
        lg.push_back(std::log(g));
    }
    if (lr.size() < 2)
        throw InvalidInputError("estimate_singularity_order: gradient vanishes on the samples (degenerate kernel)");

    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lr.size(); ++i) {
        mx += lr[i];
        my += lg[i];
    }
    mx /= lr.size();
    my /= lr.size();
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lr.size(); ++i) {
        sxx += (lr[i] - mx) * (lr[i] - mx);
        sxy += (lr[i] - mx) * (lg[i] - my);
    }
    SingularityProfile prof;
    prof.alpha = -sxy / sxx;
    prof.valid_radius = radii.front();
    for (double r : radii) {
        prof.c_grad = std::max(prof.c_grad, std::abs(k.deriv_radial(r)) * std::pow(r, prof.alpha));
        const double hess = std::max(std::abs(k.second_deriv_radial(r)), std::abs(k.deriv_radial(r) / r));
        prof.c_hess = std::max(prof.c_hess, hess * std::pow(r, 1.0 + prof.alpha));
    }
    return prof;
}

AdmissibilityReport verify_kernel_assumptions(const SingularityProfile& prof, int d, double p) {
    if (d < 1) throw InvalidInputError("verify_kernel_assumptions: dimension must be >= 1");
    conjugate_exponent(p); // validates p in (1, inf]

    AdmissibilityReport rep;
    rep.alpha = prof.alpha;
    rep.c_grad = prof.c_grad;
    rep.c_hess = prof.c_hess;
    rep.d = d;
    rep.p = p;
    rep.margin_admissible = (d - 1.0) - prof.alpha;
    rep.margin_thm31 = thm31_margin(d, p, prof.alpha);
    rep.margin_chaos = chaos_margin(d, p, prof.alpha);
    rep.admissible = prof.alpha >= -1.0 && rep.margin_admissible > 0.0;
    rep.thm31_regime = rep.admissible && prof.alpha >= 0.0 && rep.margin_thm31 > 0.0;
    rep.cor33_regime = rep.admissible && prof.alpha >= -1.0 && prof.alpha < 0.0;
    rep.chaos_regime = rep.admissible && in_chaos_regime(d, p, prof.alpha);
    return rep;
}

std::string AdmissibilityReport::to_text() const {
    std::ostringstream os;
    os.precision(12);
    os << "alpha " << alpha << "\n";
    os << "C_grad " << c_grad << "\n";
    os << "C_hess " << c_hess << "\n";
    os << "d " << d << "\n";
    os << "p " << p << "\n";
    os << "admissible " << (admissible ? "yes" : "no") << " margin " << margin_admissible << "\n";
    os << "regime_thm31 " << (thm31_regime ? "yes" : "no") << " margin " << margin_thm31 << "\n";
    os << "regime_cor33 " << (cor33_regime ? "yes" : "no") << " margin " << -alpha << "\n";
    os << "regime_chaos " << (chaos_regime ? "yes" : "no") << " margin " << margin_chaos << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Mollification

namespace {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.resize(n);
    weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::acos(-1.0) * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
}

// Unnormalized bump on the unit ball.
double bump(double rho2) {
    const double s = 1.0 - rho2;
    if (s <= 0.0) return 0.0;
    return std::exp(-1.0 / s);
}

// Half-grid of a symmetric tensor product: multi-indices whose first
// coordinate differing from the grid midpoint is on the positive side.
struct MollifierGrid {
    int d = 0;
    int order = 0;
    std::vector<double> nodes, weights;
    // Points of the half grid (unit-ball coordinates), their scalar weights
    // (quadrature weight times normalized bump value).
    std::vector<double> pts;  // flattened d-vectors
    std::vector<double> wts;
};

const MollifierGrid& mollifier_grid(int d, int order) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, MollifierGrid> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find({d, order});
    if (it != cache.end()) return it->second;

    MollifierGrid g;
    g.d = d;
    g.order = order;
    gauss_legendre(order, g.nodes, g.weights);

    std::vector<int> idx(d, 0);
    double total = 0.0;
    std::vector<double> pt(d);
    while (true) {
        // only keep points whose lexicographically first nonzero node is > 0
        double w = 1.0;
        double rho2 = 0.0;
        bool positive_side = false, decided = false;
        for (int k = 0; k < d; ++k) {
            const double c = g.nodes[idx[k]];
            pt[k] = c;
            w *= g.weights[idx[k]];
            rho2 += c * c;
            if (!decided && c != 0.0) {
                positive_side = c > 0.0;
                decided = true;
            }
        }
        // Even orders have no zero node, so every point is decided.
        if (decided && positive_side) {
            const double bw = w * bump(rho2);
            if (bw > 0.0) {
                g.pts.insert(g.pts.end(), pt.begin(), pt.end());
                g.wts.push_back(bw);
                total += 2.0 * bw; // the mirrored point carries the same weight
            }
        }
        int k = 0;
        while (k < d && ++idx[k] == order) idx[k++] = 0;
        if (k == d) break;
    }
    if (total <= 0.0) throw ConfigError("mollifier quadrature grid has no interior points; increase the order");
    for (auto& w : g.wts) w /= total; // normalize: sum over full grid = 1
    auto [pos, ok] = cache.emplace(std::make_pair(d, order), std::move(g));
    return pos->second;
}

} // namespace

std::vector<double> mollify_gradient(const MollifiedKernel& m, std::span<const double> x) {
    if (m.quadrature_order < 1) throw ConfigError("mollifier quadrature order must be >= 1");
    if (!(m.epsilon > 0.0)) throw InvalidInputError("mollifier width must be positive");
    if (!all_finite(x)) throw InvalidInputError("mollify_gradient: non-finite input coordinate");
    const int d = static_cast<int>(x.size());
    const auto& grid = mollifier_grid(d, m.quadrature_order);

    std::vector<double> acc(d, 0.0), xm(d), xp(d);
    const std::size_t npts = grid.wts.size();
    for (std::size_t q = 0; q < npts; ++q) {
        const double* y = &grid.pts[q * d];
        for (int k = 0; k < d; ++k) {
            xm[k] = x[k] - m.epsilon * y[k];
            xp[k] = x[k] + m.epsilon * y[k];
        }
        const auto gm = eval_gradient(m.base, xm);
        const auto gp = eval_gradient(m.base, xp);
        // summing the +/- pair keeps the integrand's odd part exactly odd
        for (int k = 0; k < d; ++k) acc[k] += grid.wts[q] * (gm[k] + gp[k]);
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Radial interpolation table

namespace {

double mollified_scale_direct(const MollifiedKernel& m, int dim, double r) {
    // evaluate along the first axis; the convolution of radial functions is radial
    std::vector<double> x(dim, 0.0);
    x[0] = r;
    const auto g = mollify_gradient(m, x);
    return r > 0.0 ? g[0] / r : 0.0;
}

} // namespace

RadialScaleTable RadialScaleTable::build(const MollifiedKernel& m, int dim, double r_max,
                                         std::size_t near_nodes, std::size_t far_nodes) {
    if (!(r_max > 4.0 * m.epsilon))
        throw ConfigError("radial table range must exceed the mollification region");
    RadialScaleTable t;
    t.base_ = m.base;
    t.near_hi_ = 4.0 * m.epsilon;
    t.far_hi_ = r_max;
    t.near_h_ = t.near_hi_ / static_cast<double>(near_nodes - 1);
    t.far_h_ = (t.far_hi_ - t.near_hi_) / static_cast<double>(far_nodes - 1);

    auto sample = [&](double r) { return mollified_scale_direct(m, dim, r); };

    t.near_v_.resize(near_nodes);
    for (std::size_t i = 1; i < near_nodes; ++i) t.near_v_[i] = sample(t.near_h_ * i);
    // scale(0) by quadratic extrapolation: the profile is even in r
    t.near_v_[0] = (4.0 * t.near_v_[1] - t.near_v_[2]) / 3.0;

    t.far_v_.resize(far_nodes);
    for (std::size_t i = 0; i < far_nodes; ++i) t.far_v_[i] = sample(t.near_hi_ + t.far_h_ * i);

    auto slopes = [](const std::vector<double>& v, double h) {
        std::vector<double> d(v.size());
        for (std::size_t i = 1; i + 1 < v.size(); ++i) d[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
        d.front() = (v[1] - v[0]) / h;
        d.back() = (v[v.size() - 1] - v[v.size() - 2]) / h;
        return d;
    };
    t.near_d_ = slopes(t.near_v_, t.near_h_);
    t.far_d_ = slopes(t.far_v_, t.far_h_);
    return t;
}

double RadialScaleTable::eval_segment(const std::vector<double>& v, const std::vector<double>& dv,
                                      double lo, double h, double r) const {
    const double s = (r - lo) / h;
    std::size_t i = static_cast<std::size_t>(s);
    if (i + 1 >= v.size()) i = v.size() - 2;
    const double u = s - static_cast<double>(i);
    const double v0 = v[i], v1 = v[i + 1], d0 = dv[i] * h, d1 = dv[i + 1] * h;
    const double u2 = u * u, u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * v0 + (u3 - 2 * u2 + u) * d0 +
           (-2 * u3 + 3 * u2) * v1 + (u3 - u2) * d1;
}

double RadialScaleTable::scale(double r) const {
    if (r >= far_hi_) return base_.gradient_scale(r);
    if (r >= near_hi_) return eval_segment(far_v_, far_d_, near_hi_, far_h_, r);
    return eval_segment(near_v_, near_d_, 0.0, near_h_, r);
}

} // namespace mfl

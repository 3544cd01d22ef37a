#include "mfl/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mfl {

ModelSpec ModelSpec::first_order(KernelSpec k) {
    ModelSpec m;
    m.kind = Kind::FirstOrderAggregation;
    m.kernel = std::move(k);
    return m;
}

ModelSpec ModelSpec::first_order_mollified(KernelSpec k, double eps, int quad_order, double r_max) {
    if (!(eps > 0.0)) throw InvalidInputError("mollified model requires eps > 0");
    ModelSpec m;
    m.kind = Kind::FirstOrderAggregation;
    m.kernel = std::move(k);
    m.mollify_eps = eps;
    m.mollify_quad_order = quad_order;
    m.table_r_max = r_max;
    return m;
}

ModelSpec ModelSpec::dorsogna(KernelSpec k, double alpha_sp, double beta_fr) {
    if (alpha_sp < 0.0 || beta_fr < 0.0)
        throw InvalidInputError("dorsogna: self-propulsion and friction must be nonnegative");
    ModelSpec m;
    m.kind = Kind::DOrsogna;
    m.kernel = std::move(k);
    m.alpha_sp = alpha_sp;
    m.beta_fr = beta_fr;
    return m;
}

ModelSpec ModelSpec::cucker_smale(double gamma_cs) {
    if (gamma_cs < 0.0) throw InvalidInputError("cucker_smale: exponent must be nonnegative");
    ModelSpec m;
    m.kind = Kind::CuckerSmale;
    m.gamma_cs = gamma_cs;
    return m;
}

namespace {

bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

void require_equal_masses(std::span<const double> masses, const char* what) {
    const double expect = 1.0 / static_cast<double>(masses.size());
    for (double m : masses)
        if (std::abs(m - expect) > 1e-12)
            throw InvalidInputError(std::string(what) + ": unsupported configuration, masses must be equal");
}

} // namespace

std::vector<double> rhs_first_order(const FirstOrderState& s, const KernelSpec& kernel) {
    if (!all_finite(s.measure.positions))
        throw NumericError("rhs_first_order: diverged state (non-finite position)", s.time);
    const auto soa = ParticleSoA::from_rowmajor(s.measure.positions, s.measure.dim);
    const auto masses = pad_masses(s.measure.masses, soa.stride);
    std::vector<double> vel(s.measure.positions.size());
    force_first_order_scalar(soa, masses, ScaleFun::from_kernel(kernel), vel);
    return vel;
}

void rhs_dorsogna(const SecondOrderState& s, const ModelSpec& model,
                  std::vector<double>& dv, std::vector<double>& dx) {
    if (!all_finite(s.positions) || !all_finite(s.velocities))
        throw NumericError("rhs_dorsogna: diverged state", s.time);
    require_equal_masses(s.masses, "rhs_dorsogna");
    const std::size_t n = s.size();
    const int d = s.dim;
    dx = s.velocities;
    dv.assign(n * d, 0.0);

    // interaction term: -(1/N) sum grad W = the first-order force with masses 1/N
    const auto soa = ParticleSoA::from_rowmajor(s.positions, d);
    const auto masses = pad_masses(s.masses, soa.stride);
    force_first_order_scalar(soa, masses, ScaleFun::from_kernel(*model.kernel), dv);

    for (std::size_t i = 0; i < n; ++i) {
        double v2 = 0.0;
        for (int k = 0; k < d; ++k) v2 += s.velocities[i * d + k] * s.velocities[i * d + k];
        const double drive = model.alpha_sp - model.beta_fr * v2;
        for (int k = 0; k < d; ++k) dv[i * d + k] += drive * s.velocities[i * d + k];
    }
}

void rhs_cucker_smale(const SecondOrderState& s, double gamma_cs,
                      std::vector<double>& dv, std::vector<double>& dx) {
    if (!all_finite(s.positions) || !all_finite(s.velocities))
        throw NumericError("rhs_cucker_smale: diverged state", s.time);
    require_equal_masses(s.masses, "rhs_cucker_smale");
    const std::size_t n = s.size();
    const int d = s.dim;
    dx = s.velocities;
    dv.assign(n * d, 0.0);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double r2 = 0.0;
            for (int k = 0; k < d; ++k) {
                const double diff = s.positions[i * d + k] - s.positions[j * d + k];
                r2 += diff * diff;
            }
            const double w = (gamma_cs == 0.0) ? 1.0 : std::pow(1.0 + r2, -gamma_cs);
            for (int k = 0; k < d; ++k) {
                const double rel = s.velocities[j * d + k] - s.velocities[i * d + k];
                dv[i * d + k] += inv_n * w * rel;
                dv[j * d + k] -= inv_n * w * rel;
            }
        }
    }
}

double velocity_diameter(const SecondOrderState& s) {
    const std::size_t n = s.size();
    const int d = s.dim;
    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double r2 = 0.0;
            for (int k = 0; k < d; ++k) {
                const double diff = s.velocities[i * d + k] - s.velocities[j * d + k];
                r2 += diff * diff;
            }
            best = std::max(best, r2);
        }
    return std::sqrt(best);
}

// ---------------------------------------------------------------------------
// Integration

namespace {

void validate_config(const IntegratorConfig& cfg) {
    if (!(cfg.dt > 0.0)) throw ConfigError("integrator: dt must be positive");
    if (!(cfg.t_final > 0.0)) throw ConfigError("integrator: horizon must be positive");
    if (cfg.dt > cfg.t_final * (1.0 + 1e-12)) throw ConfigError("integrator: dt exceeds the horizon");
    if (cfg.collision_stop_threshold < 0.0)
        throw ConfigError("integrator: collision threshold must be nonnegative");
}

// Locates the closest pair (for the event log).
CollisionEvent closest_pair(std::span<const double> pos, int d, double time) {
    CollisionEvent ev;
    ev.time = time;
    const std::size_t n = pos.size() / static_cast<std::size_t>(d);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double r2 = 0.0;
            for (int k = 0; k < d; ++k) {
                const double diff = pos[i * d + k] - pos[j * d + k];
                r2 += diff * diff;
            }
            if (r2 < best) {
                best = r2;
                ev.i = i;
                ev.j = j;
            }
        }
    ev.dist = std::sqrt(best);
    return ev;
}

struct FirstOrderRhs {
    const ScaleFun& scale;
    std::span<const double> masses_padded;
    int dim;
    SimdBackend backend;
    int threads;
    // returns min pair r^2 at the evaluated positions
    double operator()(std::span<const double> pos, std::span<double> vel) const {
        const auto soa = ParticleSoA::from_rowmajor(pos, dim);
        return force_first_order(soa, masses_padded, scale, vel, backend, threads);
    }
};

} // namespace

TrajectoryRecord integrate(const FirstOrderState& init, const ModelSpec& model,
                           const IntegratorConfig& cfg, int sample_every) {
    if (model.kind != ModelSpec::Kind::FirstOrderAggregation)
        throw ConfigError("integrate(first-order): model kind mismatch");
    validate_config(cfg);
    if (sample_every < 1) throw ConfigError("integrate: sample_every must be >= 1");
    init.measure.check_normalized();

    const int d = init.measure.dim;
    const std::size_t n = init.measure.size();

    ScaleFun scale;
    std::shared_ptr<const RadialScaleTable> table;
    if (model.mollify_eps > 0.0) {
        double r_max = model.table_r_max;
        if (r_max <= 0.0) r_max = std::max(16.0 * (1.0 + 2.0 * support_radius(init.measure)),
                                           8.0 * model.mollify_eps);
        table = std::make_shared<const RadialScaleTable>(RadialScaleTable::build(
            MollifiedKernel{*model.kernel, model.mollify_eps, model.mollify_quad_order}, d, r_max));
        scale = ScaleFun::from_table(table);
    } else {
        scale = ScaleFun::from_kernel(*model.kernel);
    }

    const std::size_t stride = (n + 3) / 4 * 4;
    const auto masses_padded = pad_masses(init.measure.masses, stride);
    const FirstOrderRhs rhs{scale, masses_padded, d, cfg.backend, cfg.threads};

    TrajectoryRecord rec;
    rec.backend = backend_name(resolve_backend(cfg.backend));

    std::vector<double> y = init.measure.positions;
    const std::size_t m = y.size();
    std::vector<double> k1(m), k2(m), k3(m), k4(m), tmp(m);

    const double span_t = cfg.t_final - init.time;
    const std::size_t n_steps = static_cast<std::size_t>(std::ceil(span_t / cfg.dt - 1e-9));
    bool below_threshold = false;

    auto push_sample = [&](double t, double eta_m) {
        rec.times.push_back(t);
        EmpiricalMeasure mu;
        mu.dim = d;
        mu.positions = y;
        mu.masses = init.measure.masses;
        rec.states.push_back(std::move(mu));
        rec.eta_m.push_back(eta_m);
    };

    for (std::size_t step = 0; step <= n_steps; ++step) {
        const double t = init.time + std::min(span_t, cfg.dt * static_cast<double>(step));
        if (!all_finite(y))
            throw NumericError("integrate: diverged state", rec.times.empty() ? init.time : rec.times.back());

        // k1 doubles as the monitoring pass: its positions are the current state
        const double min_r2 = rhs(y, k1);
        const double eta_m = n >= 2 ? std::sqrt(min_r2) : std::numeric_limits<double>::infinity();

        const bool due = (step % static_cast<std::size_t>(sample_every) == 0) || step == n_steps;
        if (due) push_sample(t, eta_m);

        if (cfg.collision_stop_threshold > 0.0 && n >= 2) {
            if (eta_m < cfg.collision_stop_threshold && !below_threshold) {
                below_threshold = true;
                auto ev = closest_pair(y, d, t);
                rec.events.push_back(ev);
                if (!cfg.continue_after_collision) {
                    rec.halted_on_collision = true;
                    rec.halt_time = t;
                    if (!due) push_sample(t, eta_m);
                    return rec;
                }
            } else if (eta_m >= cfg.collision_stop_threshold) {
                below_threshold = false;
            }
        }
        if (step == n_steps) break;

        const double h = std::min(cfg.dt, span_t - cfg.dt * static_cast<double>(step));
        if (cfg.scheme == Scheme::ExplicitEuler) {
            for (std::size_t i = 0; i < m; ++i) y[i] += h * k1[i];
        } else {
            for (std::size_t i = 0; i < m; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
            rhs(tmp, k2);
            for (std::size_t i = 0; i < m; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
            rhs(tmp, k3);
            for (std::size_t i = 0; i < m; ++i) tmp[i] = y[i] + h * k3[i];
            rhs(tmp, k4);
            for (std::size_t i = 0; i < m; ++i)
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    return rec;
}

TrajectoryRecord integrate(const SecondOrderState& init, const ModelSpec& model,
                           const IntegratorConfig& cfg, int sample_every) {
    if (model.kind == ModelSpec::Kind::FirstOrderAggregation)
        throw ConfigError("integrate(second-order): model kind mismatch");
    validate_config(cfg);
    if (sample_every < 1) throw ConfigError("integrate: sample_every must be >= 1");

    const int d = init.dim;
    const std::size_t n = init.size();
    const std::size_t m = n * static_cast<std::size_t>(d);

    TrajectoryRecord rec;
    rec.backend = "scalar";

    SecondOrderState s = init;
    std::vector<double> dv1, dv2, dv3, dv4, dx1, dx2, dx3, dx4;
    SecondOrderState tmp = s;

    auto eval = [&](const SecondOrderState& state, std::vector<double>& dv, std::vector<double>& dx) {
        if (model.kind == ModelSpec::Kind::DOrsogna) rhs_dorsogna(state, model, dv, dx);
        else rhs_cucker_smale(state, model.gamma_cs, dv, dx);
    };

    const double span_t = cfg.t_final - init.time;
    const std::size_t n_steps = static_cast<std::size_t>(std::ceil(span_t / cfg.dt - 1e-9));

    auto eta_m_of = [&](const SecondOrderState& state) {
        if (n < 2) return std::numeric_limits<double>::infinity();
        const auto soa = ParticleSoA::from_rowmajor(state.positions, d);
        return std::sqrt(min_pair_r2(soa, cfg.backend, cfg.threads));
    };

    bool below_threshold = false;
    for (std::size_t step = 0; step <= n_steps; ++step) {
        s.time = init.time + std::min(span_t, cfg.dt * static_cast<double>(step));
        if (!all_finite(s.positions) || !all_finite(s.velocities))
            throw NumericError("integrate: diverged state", rec.times.empty() ? init.time : rec.times.back());

        const bool due = (step % static_cast<std::size_t>(sample_every) == 0) || step == n_steps;
        double eta_m = 0.0;
        if (due || cfg.collision_stop_threshold > 0.0) eta_m = eta_m_of(s);
        if (due) {
            rec.times.push_back(s.time);
            rec.states2.push_back(s);
            rec.eta_m.push_back(eta_m);
        }
        if (cfg.collision_stop_threshold > 0.0 && n >= 2) {
            if (eta_m < cfg.collision_stop_threshold && !below_threshold) {
                below_threshold = true;
                rec.events.push_back(closest_pair(s.positions, d, s.time));
                if (!cfg.continue_after_collision) {
                    rec.halted_on_collision = true;
                    rec.halt_time = s.time;
                    return rec;
                }
            } else if (eta_m >= cfg.collision_stop_threshold) {
                below_threshold = false;
            }
        }
        if (step == n_steps) break;

        const double h = std::min(cfg.dt, span_t - cfg.dt * static_cast<double>(step));
        eval(s, dv1, dx1);
        if (cfg.scheme == Scheme::ExplicitEuler) {
            for (std::size_t i = 0; i < m; ++i) {
                s.positions[i] += h * dx1[i];
                s.velocities[i] += h * dv1[i];
            }
        } else {
            auto blend = [&](double c, const std::vector<double>& dx, const std::vector<double>& dv) {
                for (std::size_t i = 0; i < m; ++i) {
                    tmp.positions[i] = s.positions[i] + c * h * dx[i];
                    tmp.velocities[i] = s.velocities[i] + c * h * dv[i];
                }
            };
            blend(0.5, dx1, dv1);
            eval(tmp, dv2, dx2);
            blend(0.5, dx2, dv2);
            eval(tmp, dv3, dx3);
            blend(1.0, dx3, dv3);
            eval(tmp, dv4, dx4);
            for (std::size_t i = 0; i < m; ++i) {
                s.positions[i] += h / 6.0 * (dx1[i] + 2.0 * dx2[i] + 2.0 * dx3[i] + dx4[i]);
                s.velocities[i] += h / 6.0 * (dv1[i] + 2.0 * dv2[i] + 2.0 * dv3[i] + dv4[i]);
            }
        }
    }
    return rec;
}

} // namespace mfl

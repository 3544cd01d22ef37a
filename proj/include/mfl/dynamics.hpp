#pragma once

#include <optional>
#include <vector>

#include "mfl/force.hpp"
#include "mfl/kernels.hpp"
#include "mfl/measures.hpp"

namespace mfl {

struct FirstOrderState {
    double time = 0.0;
    EmpiricalMeasure measure;
};

struct SecondOrderState {
    double time = 0.0;
    int dim = 0;
    std::vector<double> positions;  // n x dim
    std::vector<double> velocities; // n x dim
    std::vector<double> masses;     // n
    std::size_t size() const { return masses.size(); }
};

struct ModelSpec {
    enum class Kind { FirstOrderAggregation, DOrsogna, CuckerSmale };
    Kind kind = Kind::FirstOrderAggregation;
    std::optional<KernelSpec> kernel;
    // First-order only: eps > 0 integrates under the mollified kernel through
    // a radial table (the regularized-characteristics construction).
    double mollify_eps = 0.0;
    int mollify_quad_order = 8;
    double table_r_max = 0.0; // 0: derived from the initial support
    double alpha_sp = 0.0;    // D'Orsogna self-propulsion
    double beta_fr = 0.0;     // D'Orsogna friction
    double gamma_cs = 0.0;    // Cucker-Smale communication exponent

    static ModelSpec first_order(KernelSpec k);
    static ModelSpec first_order_mollified(KernelSpec k, double eps, int quad_order = 8,
                                           double r_max = 0.0);
    static ModelSpec dorsogna(KernelSpec k, double alpha_sp, double beta_fr);
    static ModelSpec cucker_smale(double gamma_cs);
};

enum class Scheme { ExplicitEuler, RK4 };

struct IntegratorConfig {
    Scheme scheme = Scheme::RK4;
    double dt = 1e-3;
    double t_final = 1.0;
    double collision_stop_threshold = 0.0; // 0 disables the halt
    bool continue_after_collision = false; // continuation is not unique; off by default
    SimdBackend backend = SimdBackend::Auto;
    int threads = 1;
};

struct CollisionEvent {
    double time = 0.0;
    std::size_t i = 0, j = 0;
    double dist = 0.0;
};

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<EmpiricalMeasure> states;      // first-order samples
    std::vector<SecondOrderState> states2;     // second-order samples
    std::vector<double> eta_m;                 // min inter-particle distance at samples
    std::vector<CollisionEvent> events;
    bool halted_on_collision = false;
    double halt_time = 0.0;
    std::string backend;
};

// Exact pairwise right-hand side of the first-order system (the scalar
// reference loop, one pass per unordered pair).
std::vector<double> rhs_first_order(const FirstOrderState& s, const KernelSpec& kernel);

// D'Orsogna right-hand sides; requires equal masses 1/N.
void rhs_dorsogna(const SecondOrderState& s, const ModelSpec& model,
                  std::vector<double>& dv, std::vector<double>& dx);

// Cucker-Smale velocity averaging; requires equal masses.
void rhs_cucker_smale(const SecondOrderState& s, double gamma_cs,
                      std::vector<double>& dv, std::vector<double>& dx);

double velocity_diameter(const SecondOrderState& s);

// Fixed-step integration recording every `sample_every`-th step (plus the
// initial and final states).  Records eta_m at each sample; if the collision
// threshold is positive and eta_m crosses below it, halts (or logs and
// continues when configured) with the event recorded.
TrajectoryRecord integrate(const FirstOrderState& init, const ModelSpec& model,
                           const IntegratorConfig& cfg, int sample_every);
TrajectoryRecord integrate(const SecondOrderState& init, const ModelSpec& model,
                           const IntegratorConfig& cfg, int sample_every);

} // namespace mfl

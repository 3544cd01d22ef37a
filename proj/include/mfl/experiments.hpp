#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mfl/diagnostics.hpp"
#include "mfl/dynamics.hpp"
#include "mfl/io.hpp"
#include "mfl/kernels.hpp"
#include "mfl/measures.hpp"
#include "mfl/transport.hpp"

namespace mfl {

// Common study result: a main table, optional companions, plot data, and the
// outcome of the study's built-in assertions.
struct StudyOutput {
    Table table;
    std::vector<std::pair<std::string, Table>> extra_tables;           // filename stem -> table
    std::vector<std::pair<std::string, std::string>> plot_files;       // filename -> content
    bool assertions_passed = true;
    std::vector<std::string> assertion_notes;
};

// ---------------------------------------------------------------------------

enum class ReferenceRule { FinestGrid, ClosedFormHarmonic, MollifiedFinest };

struct ConvergenceStudyConfig {
    KernelSpec kernel;
    DensitySpec density;
    std::vector<std::size_t> n_schedule; // strictly increasing
    double horizon = 0.5;
    IntegratorConfig integrator;
    int sample_count = 6; // samples including t = 0
    ReferenceRule reference = ReferenceRule::MollifiedFinest;
    double ref_factor = 4.0;         // reference atoms >= ref_factor * max N
    double mollify_eps_factor = 1.0; // eps_reg = factor * reference mesh
    double blob_eps_factor = 2.0;    // blob radius for the rho_norm proxy
    double p = kInfExponent;
    double collision_threshold_factor = 1e-6; // relative to the initial mesh
    TransportLimits limits;
    int threads = 1;
};

struct ConvergenceStudyResult {
    StudyOutput out;
    TheoryParams theory; // with measured alpha and rho_norm
    std::vector<double> c_cal_per_n;
    std::vector<double> final_eta_per_n;
    std::vector<std::vector<ConvergenceRecord>> records_per_n;
    bool any_collision = false;
};

ConvergenceStudyResult run_convergence_study(const ConvergenceStudyConfig& cfg);

// ---------------------------------------------------------------------------

struct CauchyCheckConfig {
    KernelSpec kernel;
    DensitySpec density;
    double eps_a = 0.1, eps_b = 0.05;
    std::size_t n_atoms = 256;
    double horizon = 0.5;
    IntegratorConfig integrator;
    int sample_count = 6;
    TransportLimits limits;
    int threads = 1;
};

struct CauchyCheckResult {
    StudyOutput out;
    double c_fit = 0.0;      // smallest C with d1(t) <= (eps+eps')(e^{Ct}-1)
    double c_fit_half = 0.0; // same for the halved pair
    bool stable = false;     // fits within a factor 2
};

CauchyCheckResult run_regularization_cauchy_check(const CauchyCheckConfig& cfg);

// ---------------------------------------------------------------------------

struct MindistCheckConfig {
    DensitySpec density;
    std::size_t n = 256;
    double length_scale = 0.1; // L
    std::size_t trials = 1000;
    std::uint64_t seed = 1;
    double p = kInfExponent;
};

struct MindistCheckResult {
    StudyOutput out;
    double threshold = 0.0;   // L N^{-(2p-1)/(d(p-1))}
    double bound = 0.0;       // e^{-2 c_d^{1/p'} ||rho0||_p L^{d/p'}}
    double frequency = 0.0;
    double slack = 0.0;       // 3 binomial standard errors
    bool hypothesis_ok = false;
    bool passed = false;
};

MindistCheckResult run_mindist_check(const MindistCheckConfig& cfg);

// ---------------------------------------------------------------------------

struct BlobnormCheckConfig {
    DensitySpec density;
    std::vector<std::size_t> n_schedule;
    double gamma = 0.5;
    double p = 2.0;
    std::size_t trials = 500;
    std::uint64_t seed = 1;
    int resolution = 5;
};

struct BlobnormCheckResult {
    StudyOutput out;
    std::vector<double> bounds;
    std::vector<double> frequencies;
    std::vector<bool> vacuous;
    bool passed = false;
};

BlobnormCheckResult run_blobnorm_check(const BlobnormCheckConfig& cfg);

// ---------------------------------------------------------------------------

struct ChaosStudyConfig {
    KernelSpec kernel;
    DensitySpec density;
    std::vector<std::size_t> n_schedule;
    std::size_t trials = 200;
    double gamma = 0.9;
    double horizon = 0.5;
    IntegratorConfig integrator;
    int sample_count = 6;
    double p = kInfExponent;
    double r_exp = 0.0;         // 0: midpoint of the admissible interval
    double c1 = 2.0;            // omega1: eta_m0 >= eps^r / c1
    double omega2_factor = 0.0; // omega2 threshold factor x ||rho0||_p; 0 = the L_d constant
    double calib_quantile = 0.5;
    std::size_t prop52_subsample = 8;
    double ref_factor = 4.0;
    double mollify_eps_factor = 1.0;
    std::uint64_t seed = 1;
    int blob_resolution = 5;
    TransportLimits limits;
    int threads = 1;
};

struct ChaosStudyResult {
    StudyOutput out;
    ChaosConstants constants;
    double alpha = 0.0;
    double calibrated_c = 0.0;
    std::vector<double> phat;          // filtered exceedance frequencies per N
    std::vector<double> phat_se;
    std::vector<double> c2_fits;       // Prop 5.2 fitted constants per N
    std::vector<double> omega1_rate, omega2_rate, omega3_rate;
    bool trend_ok = false;
    bool c2_stable = false;
};

ChaosStudyResult run_chaos_study(const ChaosStudyConfig& cfg);

// ---------------------------------------------------------------------------

// Mesh giving roughly n atoms under grid_init for this density.
double mesh_for_atoms(const DensitySpec& rho, std::size_t n);

// Measured singularity profile over dyadic radii 2^-k, k = 4..12.
SingularityProfile standard_profile(const KernelSpec& k);

} // namespace mfl

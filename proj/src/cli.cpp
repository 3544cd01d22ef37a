#include "mfl/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <thread>

#include "mfl/config.hpp"
#include "mfl/experiments.hpp"
#include "mfl/rng.hpp"

namespace mfl {

namespace {

namespace fs = std::filesystem;

struct CommonOpts {
    std::string config_path;
    std::string out_dir = "out";
    std::string backend = "auto";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
};

SimdBackend backend_from_name(const std::string& name) {
    if (name == "scalar") return SimdBackend::Scalar;
    if (name == "avx2") return SimdBackend::Avx2;
    if (name == "auto") return SimdBackend::Auto;
    throw ConfigError("unknown backend '" + name + "' (expected scalar, avx2 or auto)");
}

int effective_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

struct OutputSink {
    fs::path dir;
    std::vector<std::string> files;
    explicit OutputSink(const std::string& d) : dir(d) { fs::create_directories(dir); }
    void add(const std::string& name, const std::string& content) {
        write_text_file(dir / name, content);
        files.push_back(name);
    }
    void finalize() { write_manifest(dir, files); }
};

void emit_study(OutputSink& sink, const std::string& stem, const StudyOutput& out) {
    sink.add(stem + ".csv", out.table.to_csv());
    for (const auto& [name, table] : out.extra_tables) sink.add(name + ".csv", table.to_csv());
    for (const auto& [name, content] : out.plot_files) sink.add(name, content);
    for (const auto& note : out.assertion_notes) std::cout << note << "\n";
}

IntegratorConfig integrator_from_config(ConfigMap& cfg, const std::string& section,
                                        const CommonOpts& opts) {
    IntegratorConfig ic;
    ic.dt = cfg.get_double(section + ".dt", 1e-3);
    ic.t_final = cfg.get_double(section + ".t_final");
    const std::string scheme = cfg.get_string(section + ".scheme", "rk4");
    if (scheme == "rk4") ic.scheme = Scheme::RK4;
    else if (scheme == "euler") ic.scheme = Scheme::ExplicitEuler;
    else cfg.record_error(section + ".scheme: expected rk4 or euler");
    ic.collision_stop_threshold = cfg.get_double(section + ".collision_stop_threshold", 0.0);
    ic.continue_after_collision = cfg.get_int(section + ".continue_after_collision", 0) != 0;
    ic.backend = backend_from_name(opts.backend);
    ic.threads = effective_threads(opts.threads);
    return ic;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const CommonOpts& opts) {
    ConfigMap cfg = ConfigMap::parse(read_text_file(opts.config_path));
    const std::string model_name = cfg.get_string("run.model", "first_order");
    auto ic = integrator_from_config(cfg, "run", opts);
    const int sample_every = static_cast<int>(cfg.get_int("run.sample_every", 10));
    std::uint64_t seed = cfg.get_seed("run.seed", 1);
    if (opts.seed_set) seed = opts.seed;

    OutputSink sink(opts.out_dir);

    if (model_name == "first_order") {
        const auto kernel = kernel_from_config(cfg);
        const auto density = density_from_config(cfg);
        const std::string init = cfg.get_string("run.init", "grid");
        const long n = cfg.get_int("run.n");
        const double mollify_eps = cfg.get_double("run.mollify_eps", 0.0);
        cfg.finish();

        EmpiricalMeasure mu0 = (init == "iid")
                                   ? iid_sample(density, static_cast<std::size_t>(n), seed)
                                   : grid_init(density, mesh_for_atoms(density, static_cast<std::size_t>(n)));
        const auto model = mollify_eps > 0.0 ? ModelSpec::first_order_mollified(kernel, mollify_eps)
                                             : ModelSpec::first_order(kernel);
        const auto rec = integrate(FirstOrderState{0.0, mu0}, model, ic, sample_every);
        sink.add("trajectory.traj", trajectory_to_text(rec));
        sink.add("final.atoms", atoms_to_text(rec.states.back()));
        sink.finalize();
        std::cout << "samples=" << rec.times.size() << " final_t=" << format_g17(rec.times.back())
                  << " backend=" << rec.backend << "\n";
        if (rec.halted_on_collision) {
            std::cout << "collision halt at t=" << format_g17(rec.halt_time) << "\n";
            return 2;
        }
        return 0;
    }

    // second-order models
    const auto density = density_from_config(cfg);
    const long n = cfg.get_int("run.n");
    const std::string vel_init = cfg.get_string("run.vel_init", "uniform");
    const double vel_scale = cfg.get_double("run.vel_scale", 1.0);

    ModelSpec model = ModelSpec::cucker_smale(0.0);
    if (model_name == "dorsogna") {
        const auto kernel = kernel_from_config(cfg);
        model = ModelSpec::dorsogna(kernel, cfg.get_double("run.alpha_sp", 1.0),
                                    cfg.get_double("run.beta_fr", 0.5));
    } else if (model_name == "cucker_smale") {
        model = ModelSpec::cucker_smale(cfg.get_double("run.gamma_cs", 0.25));
    } else {
        cfg.record_error("run.model: expected first_order, dorsogna or cucker_smale");
    }
    cfg.finish();

    const auto mu0 = iid_sample(density, static_cast<std::size_t>(n), seed);
    SecondOrderState s0;
    s0.dim = mu0.dim;
    s0.positions = mu0.positions;
    s0.masses = mu0.masses;
    s0.velocities.assign(mu0.positions.size(), 0.0);
    if (vel_init == "uniform") {
        Rng rng(derive_seed(seed, 7));
        for (auto& v : s0.velocities) v = rng.uniform(-vel_scale, vel_scale);
    }
    const auto rec = integrate(s0, model, ic, sample_every);

    // positions and velocities as parallel block files
    TrajectoryRecord pos_rec;
    pos_rec.times = rec.times;
    pos_rec.events = rec.events;
    TrajectoryRecord vel_rec;
    vel_rec.times = rec.times;
    for (const auto& st : rec.states2) {
        EmpiricalMeasure pm;
        pm.dim = st.dim;
        pm.positions = st.positions;
        pm.masses = st.masses;
        pos_rec.states.push_back(std::move(pm));
        EmpiricalMeasure vm;
        vm.dim = st.dim;
        vm.positions = st.velocities;
        vm.masses = st.masses;
        vel_rec.states.push_back(std::move(vm));
    }
    sink.add("trajectory.traj", trajectory_to_text(pos_rec));
    sink.add("velocities.traj", trajectory_to_text(vel_rec));
    sink.finalize();
    std::cout << "samples=" << rec.times.size() << " final_t=" << format_g17(rec.times.back())
              << "\n";
    if (rec.halted_on_collision) return 2;
    return 0;
}

int cmd_distance(const std::string& file_a, const std::string& file_b, const CommonOpts& opts) {
    const auto mu = read_atoms(file_a);
    const auto nu = read_atoms(file_b);
    OutputSink sink(opts.out_dir);

    auto record = [&](const DistanceResult& r, const std::string& tag) {
        std::ostringstream os;
        os << "p " << tag << "\n";
        os << "value " << format_g17(r.distance) << "\n";
        os << "solver " << r.solver << "\n";
        os << "pivots " << r.pivots << "\n";
        sink.add("result_" + tag + ".txt", os.str());
        std::ostringstream plan;
        for (const auto& e : r.plan.entries)
            plan << e.src << " " << e.dst << " " << format_g17(e.mass) << "\n";
        sink.add("plan_" + tag + ".txt", plan.str());
    };

    const auto r1 = wasserstein_p(mu, nu, 1);
    const auto r2 = wasserstein_p(mu, nu, 2);
    const auto ri = wasserstein_infinity(mu, nu);
    record(r1, "1");
    record(r2, "2");
    record(ri, "inf");
    sink.finalize();
    std::cout << "d_1=" << format_g17(r1.distance) << " d_2=" << format_g17(r2.distance)
              << " d_inf=" << format_g17(ri.distance) << "\n";
    return 0;
}

int cmd_check_kernel(const CommonOpts& opts) {
    ConfigMap cfg = ConfigMap::parse(read_text_file(opts.config_path));
    const auto kernel = kernel_from_config(cfg);
    const int d = static_cast<int>(cfg.get_int("run.d", 2));
    const double p = cfg.get_exponent("run.p", kInfExponent);
    cfg.finish();

    const auto prof = standard_profile(kernel);
    const auto rep = verify_kernel_assumptions(prof, d, p);
    std::cout << rep.to_text();
    OutputSink sink(opts.out_dir);
    sink.add("kernel_report.txt", rep.to_text());
    sink.finalize();
    return 0;
}

int cmd_converge(const CommonOpts& opts) {
    ConfigMap cfg = ConfigMap::parse(read_text_file(opts.config_path));
    ConvergenceStudyConfig sc{kernel_from_config(cfg), density_from_config(cfg)};
    sc.n_schedule = cfg.get_sizes("study.n_schedule");
    sc.horizon = cfg.get_double("study.t_final", 0.5);
    sc.integrator = integrator_from_config(cfg, "study", opts);
    sc.integrator.t_final = sc.horizon;
    sc.sample_count = static_cast<int>(cfg.get_int("study.sample_count", 6));
    const std::string ref = cfg.get_string("study.reference", "mollified");
    if (ref == "mollified") sc.reference = ReferenceRule::MollifiedFinest;
    else if (ref == "finest") sc.reference = ReferenceRule::FinestGrid;
    else if (ref == "closed_form") sc.reference = ReferenceRule::ClosedFormHarmonic;
    else cfg.record_error("study.reference: expected mollified, finest or closed_form");
    sc.ref_factor = cfg.get_double("study.ref_factor", 4.0);
    sc.mollify_eps_factor = cfg.get_double("study.mollify_eps_factor", 1.0);
    sc.p = cfg.get_exponent("study.p", kInfExponent);
    sc.threads = effective_threads(opts.threads);
    cfg.finish();

    const auto result = run_convergence_study(sc);
    OutputSink sink(opts.out_dir);
    emit_study(sink, "converge", result.out);
    sink.finalize();
    return result.out.assertions_passed ? 0 : 3;
}

int cmd_chaos(const CommonOpts& opts) {
    ConfigMap cfg = ConfigMap::parse(read_text_file(opts.config_path));
    ChaosStudyConfig sc{kernel_from_config(cfg), density_from_config(cfg)};
    sc.n_schedule = cfg.get_sizes("study.n_schedule");
    sc.trials = static_cast<std::size_t>(cfg.get_int("study.trials", 200));
    sc.gamma = cfg.get_double("study.gamma");
    sc.horizon = cfg.get_double("study.t_final", 0.5);
    sc.integrator = integrator_from_config(cfg, "study", opts);
    sc.integrator.t_final = sc.horizon;
    sc.sample_count = static_cast<int>(cfg.get_int("study.sample_count", 6));
    sc.p = cfg.get_exponent("study.p", kInfExponent);
    sc.r_exp = cfg.get_double("study.r", 0.0);
    sc.c1 = cfg.get_double("study.c1", 2.0);
    sc.omega2_factor = cfg.get_double("study.omega2_factor", 0.0);
    sc.calib_quantile = cfg.get_double("study.calib_quantile", 0.5);
    sc.prop52_subsample = static_cast<std::size_t>(cfg.get_int("study.prop52_subsample", 8));
    sc.ref_factor = cfg.get_double("study.ref_factor", 4.0);
    sc.seed = cfg.get_seed("study.seed", 1);
    if (opts.seed_set) sc.seed = opts.seed;
    sc.threads = effective_threads(opts.threads);
    cfg.finish();

    const auto result = run_chaos_study(sc);
    OutputSink sink(opts.out_dir);
    emit_study(sink, "chaos", result.out);
    sink.finalize();
    return result.out.assertions_passed ? 0 : 3;
}

int cmd_mindist(const CommonOpts& opts) {
    ConfigMap cfg = ConfigMap::parse(read_text_file(opts.config_path));
    MindistCheckConfig mc{density_from_config(cfg)};
    mc.n = static_cast<std::size_t>(cfg.get_int("study.n", 256));
    mc.length_scale = cfg.get_double("study.l", 0.1);
    mc.trials = static_cast<std::size_t>(cfg.get_int("study.trials", 1000));
    mc.p = cfg.get_exponent("study.p", kInfExponent);
    mc.seed = cfg.get_seed("study.seed", 1);
    if (opts.seed_set) mc.seed = opts.seed;
    cfg.finish();

    const auto result = run_mindist_check(mc);
    OutputSink sink(opts.out_dir);
    emit_study(sink, "mindist", result.out);
    sink.finalize();
    return result.passed ? 0 : 3;
}

int cmd_blobnorm(const CommonOpts& opts) {
    ConfigMap cfg = ConfigMap::parse(read_text_file(opts.config_path));
    BlobnormCheckConfig bc{density_from_config(cfg)};
    bc.n_schedule = cfg.get_sizes("study.n_schedule");
    bc.gamma = cfg.get_double("study.gamma", 0.5);
    bc.p = cfg.get_exponent("study.p", 2.0);
    bc.trials = static_cast<std::size_t>(cfg.get_int("study.trials", 500));
    bc.resolution = static_cast<int>(cfg.get_int("study.resolution", 5));
    bc.seed = cfg.get_seed("study.seed", 1);
    if (opts.seed_set) bc.seed = opts.seed;
    cfg.finish();

    const auto result = run_blobnorm_check(bc);
    OutputSink sink(opts.out_dir);
    emit_study(sink, "blobnorm", result.out);
    sink.finalize();
    return result.passed ? 0 : 3;
}

int cmd_cauchy(const CommonOpts& opts) {
    ConfigMap cfg = ConfigMap::parse(read_text_file(opts.config_path));
    CauchyCheckConfig cc{kernel_from_config(cfg), density_from_config(cfg)};
    cc.eps_a = cfg.get_double("study.eps_a", 0.1);
    cc.eps_b = cfg.get_double("study.eps_b", 0.05);
    cc.n_atoms = static_cast<std::size_t>(cfg.get_int("study.n", 256));
    cc.horizon = cfg.get_double("study.t_final", 0.5);
    cc.integrator = integrator_from_config(cfg, "study", opts);
    cc.integrator.t_final = cc.horizon;
    cc.sample_count = static_cast<int>(cfg.get_int("study.sample_count", 6));
    cc.threads = effective_threads(opts.threads);
    cfg.finish();

    const auto result = run_regularization_cauchy_check(cc);
    OutputSink sink(opts.out_dir);
    emit_study(sink, "cauchy", result.out);
    sink.finalize();
    std::cout << "C_fit=" << format_g17(result.c_fit) << " C_fit_half=" << format_g17(result.c_fit_half)
              << "\n";
    return result.stable ? 0 : 3;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"interacting-particle approximations of the aggregation equation: "
                 "simulators, exact transport distances, and convergence studies"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string file_a, file_b;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        if (needs_config)
            sub->add_option("--config", opts.config_path, "configuration file")->required();
        sub->add_option("--out", opts.out_dir, "output directory");
        sub->add_option("--backend", opts.backend, "force backend: scalar, avx2 or auto");
        sub->add_option("--threads", opts.threads, "worker threads (0 = hardware)");
        sub->add_option("--seed", opts.seed, "override the config seed")
            ->each([&](const std::string&) { opts.seed_set = true; });
    };

    auto* simulate = app.add_subcommand("simulate", "integrate a particle system");
    add_common(simulate, true);
    auto* distance = app.add_subcommand("distance", "transport distances between two measures");
    distance->add_option("measure_a", file_a, "first .atoms file")->required();
    distance->add_option("measure_b", file_b, "second .atoms file")->required();
    add_common(distance, false);
    auto* check_kernel = app.add_subcommand("check-kernel", "singularity profile and regimes");
    add_common(check_kernel, true);
    auto* converge = app.add_subcommand("converge", "mean-field convergence study");
    add_common(converge, true);
    auto* chaos = app.add_subcommand("chaos", "propagation-of-chaos Monte Carlo study");
    add_common(chaos, true);
    auto* mindist = app.add_subcommand("mindist", "iid minimum-distance bound check");
    add_common(mindist, true);
    auto* blobnorm = app.add_subcommand("blobnorm", "blob-norm large deviation check");
    add_common(blobnorm, true);
    auto* cauchy = app.add_subcommand("cauchy", "regularization Cauchy-sequence check");
    add_common(cauchy, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(opts);
        if (distance->parsed()) return cmd_distance(file_a, file_b, opts);
        if (check_kernel->parsed()) return cmd_check_kernel(opts);
        if (converge->parsed()) return cmd_converge(opts);
        if (chaos->parsed()) return cmd_chaos(opts);
        if (mindist->parsed()) return cmd_mindist(opts);
        if (blobnorm->parsed()) return cmd_blobnorm(opts);
        if (cauchy->parsed()) return cmd_cauchy(opts);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const CapacityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const InvalidInputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const CheckFailure& e) {
        std::cerr << "check failed: " << e.what() << "\n";
        return 3;
    }
    return 1;
}

} // namespace mfl

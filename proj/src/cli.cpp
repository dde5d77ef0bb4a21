#include "ibflow/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "ibflow/bench.hpp"
#include "ibflow/checkpoint.hpp"
#include "ibflow/coefficients.hpp"

namespace ibflow {

namespace {

Config load_config(const std::string& path, const std::vector<std::string>& overrides) {
    Config cfg = Config::from_file(path);
    for (const std::string& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got: " + kv);
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

std::vector<std::string> echo_command(int argc, const char* const* argv) {
    std::vector<std::string> out;
    for (int i = 0; i < argc; ++i) out.emplace_back(argv[i]);
    return out;
}

void write_force_csv(const std::string& path, const std::vector<ForceSample>& forces,
                     const FluidParams& fp) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path);
    os.precision(17);
    const double c = 2.0 / (fp.rho * fp.u_inf * fp.u_inf * fp.diameter);
    os << "t,Fx,Fy,C_D,C_L,omega_k\n";
    for (const ForceSample& s : forces)
        os << s.t << ',' << s.fx << ',' << s.fy << ',' << c * s.fx << ',' << c * s.fy << ','
           << s.omega << '\n';
}

int run_gen_data(const Config& cfg, const std::string& out_path, uint64_t seed,
                 const std::vector<std::string>& command) {
    CaseSetup setup = build_setup(cfg);
    auto solver = make_solver(setup);
    solver->init_uniform(setup.perturb_amp, setup.perturb_x, setup.perturb_y,
                         setup.perturb_sigma);
    const DownsampleMap down = build_downsample_map(setup.fine_grid, setup.coarse_grid);

    DatasetHeader hdr = make_dataset_header(setup);
    DatasetWriter writer(out_path, hdr);

    // k = 0: the downsampled initial state (no force yet).
    {
        const StaggeredField coarse0 = downsample(solver->state(), down);
        Snapshot s0;
        s0.k = 0;
        s0.omega_k = setup.schedule().omega_at(0.0);
        s0.u = coarse0.u;
        s0.v = coarse0.v;
        writer.append(s0);
    }

    RunOutputs out = run_case(*solver, &down,
                              [&](long k, double omega_k, const StaggeredField& snap, Vec2 f) {
                                  Snapshot s;
                                  s.k = k;
                                  s.omega_k = omega_k;
                                  s.u = snap.u;
                                  s.v = snap.v;
                                  s.force = f;
                                  writer.append(s);
                              });
    writer.close();
    if (out.stride_warning)
        std::cerr << "warning: snapshot stride exceeds the horizon; no snapshots emitted\n";

    write_force_csv(out_path + ".forces.csv", out.forces, setup.fluid);
    write_manifest(out_path + ".manifest.json", cfg, seed, command);
    std::cout << "wrote " << out.snapshots + 1 << " snapshots to " << out_path << "\n";
    return 0;
}

int run_validate(const Config& cfg, const std::string& out_dir, bool full, uint64_t seed,
                 const std::vector<std::string>& command) {
    Config c = cfg;
    if (!full && cfg.has("validate.smoke_overrides")) {
        // smoke_overrides holds semicolon-separated key=value pairs
        std::istringstream is(cfg.get_str("validate.smoke_overrides"));
        std::string kv;
        while (std::getline(is, kv, ';')) {
            const auto eq = kv.find('=');
            if (eq != std::string::npos) c.set(kv.substr(0, eq), kv.substr(eq + 1));
        }
    }
    CaseSetup setup = build_setup(c);
    auto solver = make_solver(setup);
    solver->init_uniform(setup.perturb_amp, setup.perturb_x, setup.perturb_y,
                         setup.perturb_sigma);
    std::cout << "grid " << setup.fine_grid.nx() << " x " << setup.fine_grid.ny()
              << ", dt = " << setup.solver_cfg.dt << ", t_end = " << setup.solver_cfg.t_end
              << "\n";
    RunOutputs out = run_case(*solver, nullptr, nullptr);
    const ForceStats st =
        compute_coefficients(out.forces, setup.fluid, c.get_double("eval.transient_cutoff", 100.0),
                             c.get_double("eval.min_window", 60.0));

    if (!out_dir.empty()) {
        ensure_dir(out_dir);
        write_force_csv(out_dir + "/forces.csv", out.forces, setup.fluid);
        write_manifest(out_dir + "/validate.manifest.json", c, seed, command);
    }

    const double cd_lo = c.get_double("validate.cd_min", 1.33);
    const double cd_hi = c.get_double("validate.cd_max", 1.46);
    const double cl_lo = c.get_double("validate.cl_min", 0.305);
    const double cl_hi = c.get_double("validate.cl_max", 0.385);
    const double st_lo = c.get_double("validate.st_min", 0.162);
    const double st_hi = c.get_double("validate.st_max", 0.172);

    bool ok = true;
    auto line = [&](const char* name, double v, double lo, double hi) {
        const bool pass = v >= lo && v <= hi;
        ok = ok && pass;
        std::cout << name << " = " << v << "  [" << lo << ", " << hi << "]  "
                  << (pass ? "PASS" : "FAIL") << "\n";
    };
    line("C_D_mean", st.cd_mean, cd_lo, cd_hi);
    line("C_L_amp ", st.cl_amp, cl_lo, cl_hi);
    line("St      ", require_strouhal(st), st_lo, st_hi);
    return ok ? 0 : 4;
}

std::vector<SnapshotDataset> load_datasets(const std::vector<std::string>& paths) {
    std::vector<SnapshotDataset> out;
    for (const std::string& p : paths) out.push_back(read_dataset(p));
    return out;
}

CheckpointHeader topology_header(const CaseSetup& setup, ModelKind kind) {
    CheckpointHeader h;
    h.model_kind = static_cast<uint32_t>(kind);
    h.n_substeps = setup.model_cfg.n_substeps;
    h.ib_iters = setup.model_cfg.ib_iters;
    h.upsample_factor = setup.model_cfg.upsample_factor;
    h.dt_learn = setup.model_cfg.dt_learn;
    return h;
}

void copy_blocks(std::vector<ConvResNet*> dst, const std::vector<ConvResNet>& src) {
    if (dst.size() != src.size()) throw ConfigError("checkpoint block count mismatch");
    for (size_t b = 0; b < dst.size(); ++b) {
        if (dst[b]->layers.size() != src[b].layers.size())
            throw ConfigError("checkpoint layer count mismatch in block " + src[b].name);
        for (size_t l = 0; l < src[b].layers.size(); ++l) {
            if (!dst[b]->layers[l].kernel.same_shape(src[b].layers[l].kernel))
                throw ConfigError("checkpoint kernel shape mismatch in block " + src[b].name);
            dst[b]->layers[l] = src[b].layers[l];
        }
    }
}

ModelKind parse_kind(const std::string& name) {
    if (name == "hybrid") return ModelKind::Hybrid;
    if (name == "datadriven") return ModelKind::DataDriven;
    if (name == "physloss") return ModelKind::PhysicsLoss;
    if (name == "coarse") return ModelKind::CoarseNumerical;
    throw ConfigError("unknown model kind: " + name);
}

TrainRunConfig train_config_from(const Config& cfg) {
    TrainRunConfig tc;
    tc.epochs = cfg.get_int("train.epochs", 3000);
    tc.batch_size = cfg.get_int("train.batch", 128);
    tc.seed = cfg.get_u64("train.seed", 0);
    tc.window = cfg.get_int("train.window", 1);
    tc.val_fraction = cfg.get_double("train.val_fraction", 0.1);
    tc.lr0 = cfg.get_double("train.lr", 1e-3);
    tc.adam.weight_decay = cfg.get_double("train.weight_decay", 1e-5);
    tc.scheduler.factor = cfg.get_double("train.lr_factor", 0.5);
    tc.scheduler.patience = cfg.get_int("train.lr_patience", 2);
    tc.scheduler.cooldown = cfg.get_int("train.lr_cooldown", 0);
    tc.scheduler.min_lr = cfg.get_double("train.min_lr", 1e-6);
    tc.phys.alpha = cfg.get_double("train.phys_alpha", -1.0);
    tc.phys.beta = cfg.get_double("train.phys_beta", 1.0);
    return tc;
}

int run_train(const Config& cfg, const std::string& kind_name,
              const std::vector<std::string>& data_paths, const std::string& out_path,
              const std::string& strategy, int window, uint64_t seed,
              const std::vector<std::string>& command) {
    const ModelKind kind = parse_kind(kind_name);
    if (kind == ModelKind::CoarseNumerical)
        throw ConfigError("the coarse numerical baseline has no trainable parameters");
    CaseSetup setup = build_setup(cfg);
    const std::vector<SnapshotDataset> sets = load_datasets(data_paths);
    std::vector<const SnapshotDataset*> ptrs;
    for (const SnapshotDataset& ds : sets) {
        if (ds.header.nx != setup.coarse_grid.nx() || ds.header.ny != setup.coarse_grid.ny())
            throw ConfigError("dataset grid does not match the configured coarse grid");
        ptrs.push_back(&ds);
    }

    TrainRunConfig tc = train_config_from(cfg);
    tc.seed = seed;
    if (strategy == "single") {
        tc.window = 1;
    } else if (strategy == "bptt") {
        tc.window = window;
        if (tc.window < 2) throw ConfigError("BPTT needs --window >= 2");
    } else {
        throw ConfigError("strategy must be single or bptt");
    }
    tc.log_csv = out_path + ".train_log.csv";

    TrainResult res;
    if (kind == ModelKind::Hybrid) {
        auto model = make_hybrid(setup, seed);
        auto adapter = make_adapter(*model);
        res = train_model(*adapter, ptrs, tc);
        write_checkpoint(out_path, topology_header(setup, kind),
                         {&model->block1(), &model->block2()});
    } else {
        auto model = make_datadriven(setup, seed, kind);
        auto adapter = make_adapter(*model);
        res = train_model(*adapter, ptrs, tc);
        write_checkpoint(out_path, topology_header(setup, kind),
                         {&model->block_a(), &model->block_b(), &model->block_c()});
    }
    write_manifest(out_path + ".manifest.json", cfg, seed, command);
    std::cout << "trained " << kind_name << ": best val loss " << res.best_val << " at epoch "
              << res.best_epoch << ", params " << res.param_count
              << ", peak activations " << res.peak_activation_bytes << " bytes\n";
    return 0;
}

int run_rollout(const Config& cfg, const std::string& ckpt_path, const std::string& truth_path,
                long steps, const std::string& out_dir, uint64_t seed,
                const std::vector<std::string>& command) {
    CaseSetup setup = build_setup(cfg);
    const SnapshotDataset truth = read_dataset(truth_path);
    if (truth.header.nx != setup.coarse_grid.nx() || truth.header.ny != setup.coarse_grid.ny())
        throw ConfigError("truth grid does not match the configured coarse grid");
    ensure_dir(out_dir);

    std::unique_ptr<StepModel> model;
    std::unique_ptr<HybridModel> hybrid;
    std::unique_ptr<DataDrivenModel> dd;
    ModelKind kind;
    if (ckpt_path == "coarse") {
        kind = ModelKind::CoarseNumerical;
        setup.cs = truth.case_descriptor();
        model = make_coarse_numerical(setup);
    } else {
        const LoadedCheckpoint ck = read_checkpoint(ckpt_path);
        kind = static_cast<ModelKind>(ck.header.model_kind);
        if (kind == ModelKind::Hybrid) {
            hybrid = make_hybrid(setup, seed);
            copy_blocks({&hybrid->block1(), &hybrid->block2()}, ck.blocks);
        } else {
            dd = make_datadriven(setup, seed, kind);
            copy_blocks({&dd->block_a(), &dd->block_b(), &dd->block_c()}, ck.blocks);
        }
    }
    StepModel& m = hybrid ? static_cast<StepModel&>(*hybrid)
                          : (dd ? static_cast<StepModel&>(*dd) : *model);

    const RotationSchedule sched = truth.case_descriptor().schedule();
    const StaggeredField init = truth.to_field(0, setup.coarse_grid);
    const double vel_limit = cfg.get_double("rollout.vel_limit_factor", 50.0) * setup.fluid.u_inf;
    RolloutRecord rec = rollout(m, init, steps, sched, &truth, vel_limit);

    const std::string stem = out_dir + "/" + model_kind_name(kind);
    export_error_curves_csv(stem + "_errors.csv", rec, truth.header.dt_learn,
                            cfg.get_double("bench.train_window_tstar", 100.0));
    export_force_history_csv(stem + "_forces.csv", rec, &truth, setup.fluid,
                             truth.header.dt_learn);

    // Predicted trajectory as a dataset (k = 0 copies the initial state).
    DatasetHeader ph = truth.header;
    DatasetWriter pw(stem + "_pred.ibds", ph);
    Snapshot s0 = truth.snaps[0];
    pw.append(s0);
    for (const RolloutStep& s : rec.steps) {
        Snapshot sn;
        sn.k = s.k;
        sn.omega_k = sched.omega_at(static_cast<double>(s.k));
        sn.u = s.u;
        sn.v = s.v;
        sn.force = s.force;
        pw.append(sn);
    }
    pw.close();
    write_manifest(out_dir + "/rollout.manifest.json", cfg, seed, command);

    std::cout << "rollout: " << rec.steps.size() << " steps, mean error " << rec.eps_mean;
    if (rec.diverged_at >= 0) std::cout << " (diverged at step " << rec.diverged_at << ")";
    std::cout << "\n";
    return rec.diverged_at >= 0 ? 3 : 0;
}

int run_bench_seen(const Config& cfg, const std::string& truth_path, const std::string& out_dir,
                   uint64_t seed, const std::vector<std::string>& command) {
    CaseSetup setup = build_setup(cfg);
    const SnapshotDataset truth = read_dataset(truth_path);
    BenchConfig bc;
    bc.rollout_steps = cfg.get_long("rollout.steps", 400);
    bc.train_window_tstar = cfg.get_double("bench.train_window_tstar", 100.0);
    bc.train = train_config_from(cfg);
    bc.train.seed = seed;
    bc.seed = seed;
    SeenReport rep = benchmark_seen(setup, truth, bc, out_dir);
    write_manifest(out_dir + "/bench_seen.manifest.json", cfg, seed, command);
    std::cout << "model          eps_mean    in_window   extrapolation\n";
    for (const ModelReport& m : rep.models)
        std::cout << model_kind_name(m.kind) << "\t" << m.record.eps_mean << "\t" << m.eps_in
                  << "\t" << m.eps_out << "\n";
    return 0;
}

int run_bench_unseen(const Config& cfg, const std::vector<std::string>& train_paths,
                     const std::vector<std::string>& test_paths, const std::string& out_dir,
                     uint64_t seed, const std::vector<std::string>& command) {
    CaseSetup setup = build_setup(cfg);
    const std::vector<SnapshotDataset> train_sets = load_datasets(train_paths);
    const std::vector<SnapshotDataset> test_sets = load_datasets(test_paths);
    std::vector<const SnapshotDataset*> tr, te;
    for (const SnapshotDataset& d : train_sets) tr.push_back(&d);
    for (const SnapshotDataset& d : test_sets) te.push_back(&d);

    BenchConfig bc;
    bc.rollout_steps = cfg.get_long("rollout.steps", 400);
    bc.train_window_tstar = cfg.get_double("bench.train_window_tstar", 100.0);
    bc.train = train_config_from(cfg);
    bc.train.seed = seed;
    bc.seed = seed;
    UnseenReport rep = benchmark_unseen(setup, tr, te, bc, out_dir);
    write_manifest(out_dir + "/bench_unseen.manifest.json", cfg, seed, command);

    std::cout << "model";
    for (double w : rep.omegas) std::cout << "\tomega=" << w;
    std::cout << "\n";
    for (size_t k = 0; k < rep.kinds.size(); ++k) {
        std::cout << model_kind_name(rep.kinds[k]);
        for (double e : rep.eps_mean[k]) std::cout << "\t" << e;
        std::cout << "\n";
    }
    return 0;
}

int run_export(const std::string& truth_path, const std::string& pred_path,
               const std::string& out_dir, const std::vector<long>& frames,
               double window_tstar) {
    const SnapshotDataset truth = read_dataset(truth_path);
    const SnapshotDataset pred = read_dataset(pred_path);
    ensure_dir(out_dir);
    const Grid g = truth.make_grid();

    RolloutRecord rec;
    for (size_t i = 1; i < pred.snaps.size() && i < truth.snaps.size(); ++i) {
        const Snapshot& p = pred.snaps[i];
        const Snapshot& t = truth.snaps[i];
        RolloutStep rs;
        rs.k = p.k;
        rs.u = p.u;
        rs.v = p.v;
        rs.force = p.force;
        rs.eps_u = relative_lp(p.u.raw(), t.u.raw(), 2.0, 1e-8);
        rs.eps_v = relative_lp(p.v.raw(), t.v.raw(), 2.0, 1e-8);
        rs.eps_f = relative_lp({p.force.x, p.force.y}, {t.force.x, t.force.y}, 2.0, 1e-8);
        rs.eps = (rs.eps_u + rs.eps_v + rs.eps_f) / 3.0;
        rec.steps.push_back(std::move(rs));
    }
    double sum = 0.0;
    for (const RolloutStep& s : rec.steps) sum += s.eps;
    if (!rec.steps.empty()) rec.eps_mean = sum / static_cast<double>(rec.steps.size());

    export_error_curves_csv(out_dir + "/errors.csv", rec, truth.header.dt_learn, window_tstar);
    export_force_history_csv(out_dir + "/forces.csv", rec, &truth, truth.fluid(),
                             truth.header.dt_learn);
    std::ofstream os(out_dir + "/summary.csv");
    os.precision(17);
    os << "eps_mean\n" << rec.eps_mean << "\n";

    const double scale = 3.0 * truth.header.u_inf / truth.header.diameter;
    for (long k : frames) {
        if (k < 0 || k >= static_cast<long>(pred.snaps.size()))
            throw ConfigError("frame index out of range: " + std::to_string(k));
        const StaggeredField pf = pred.to_field(k, g);
        const StaggeredField tf = truth.to_field(k, g);
        export_vorticity_pgm(out_dir + "/pred_k" + std::to_string(k) + ".pgm", pf, scale);
        export_vorticity_pgm(out_dir + "/truth_k" + std::to_string(k) + ".pgm", tf, scale);
    }
    std::cout << "export: " << rec.steps.size() << " compared steps, mean error " << rec.eps_mean
              << "\n";
    return 0;
}

} // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"immersed-boundary flow surrogate toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_path, out_dir, kind_name = "hybrid";
    std::string ckpt_path, truth_path, pred_path, strategy = "single";
    std::vector<std::string> overrides, data_paths, train_paths, test_paths;
    std::vector<long> frames;
    long steps = 400;
    int window = 3;
    bool full = false;
    uint64_t seed = 0;
    double window_tstar = 100.0;

    auto add_common = [&](CLI::App* sub, bool needs_config = true) {
        if (needs_config)
            sub->add_option("--config", config_path, "key = value config file")->required();
        sub->add_option("--set", overrides, "override config entries (key=value)");
        sub->add_option("--seed", seed, "random seed");
    };

    CLI::App* gen = app.add_subcommand("gen-data", "run the reference solver, emit a dataset");
    add_common(gen);
    gen->add_option("--out", out_path, "output .ibds path")->required();

    CLI::App* val = app.add_subcommand("validate-solver",
                                       "run the stationary benchmark and check coefficients");
    add_common(val);
    val->add_option("--out", out_dir, "optional output directory");
    val->add_flag("--full", full, "full-resolution variant (default: smoke overrides)");

    CLI::App* tr = app.add_subcommand("train", "train a model on datasets");
    add_common(tr);
    tr->add_option("--model", kind_name, "hybrid | datadriven | physloss")->required();
    tr->add_option("--data", data_paths, "training dataset(s)")->required();
    tr->add_option("--out", out_path, "checkpoint output path")->required();
    tr->add_option("--strategy", strategy, "single | bptt");
    tr->add_option("--window", window, "BPTT window length");

    CLI::App* ro = app.add_subcommand("rollout", "autoregressive rollout of a checkpoint");
    add_common(ro);
    ro->add_option("--checkpoint", ckpt_path, "checkpoint path, or 'coarse'")->required();
    ro->add_option("--truth", truth_path, "ground-truth dataset")->required();
    ro->add_option("--steps", steps, "number of learning steps");
    ro->add_option("--out", out_dir, "output directory")->required();

    CLI::App* bs = app.add_subcommand("bench-seen", "seen-condition benchmark (all models)");
    add_common(bs);
    bs->add_option("--truth", truth_path, "ground-truth dataset")->required();
    bs->add_option("--out", out_dir, "output directory")->required();

    CLI::App* bu = app.add_subcommand("bench-unseen", "unseen-condition benchmark");
    add_common(bu);
    bu->add_option("--train", train_paths, "training-condition datasets")->required();
    bu->add_option("--test", test_paths, "held-out-condition datasets")->required();
    bu->add_option("--out", out_dir, "output directory")->required();

    CLI::App* ex = app.add_subcommand("export", "CSV curves and vorticity frames");
    ex->add_option("--truth", truth_path, "ground-truth dataset")->required();
    ex->add_option("--pred", pred_path, "predicted dataset")->required();
    ex->add_option("--out", out_dir, "output directory")->required();
    ex->add_option("--frames", frames, "snapshot indices to rasterize");
    ex->add_option("--window-tstar", window_tstar, "training-window end (t*)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const std::vector<std::string> command = echo_command(argc, argv);
    try {
        if (gen->parsed()) return run_gen_data(load_config(config_path, overrides), out_path, seed, command);
        if (val->parsed())
            return run_validate(load_config(config_path, overrides), out_dir, full, seed, command);
        if (tr->parsed())
            return run_train(load_config(config_path, overrides), kind_name, data_paths, out_path,
                             strategy, window, seed, command);
        if (ro->parsed())
            return run_rollout(load_config(config_path, overrides), ckpt_path, truth_path, steps,
                               out_dir, seed, command);
        if (bs->parsed())
            return run_bench_seen(load_config(config_path, overrides), truth_path, out_dir, seed,
                                  command);
        if (bu->parsed())
            return run_bench_unseen(load_config(config_path, overrides), train_paths, test_paths,
                                    out_dir, seed, command);
        if (ex->parsed()) return run_export(truth_path, pred_path, out_dir, frames, window_tstar);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const InsufficientDataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const DivergenceError& e) {
        std::cerr << "numerical divergence: " << e.what() << "\n";
        return 3;
    } catch (const ConvergenceError& e) {
        std::cerr << "solver did not converge: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

} // namespace ibflow

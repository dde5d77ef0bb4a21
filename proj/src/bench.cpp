#include "ibflow/bench.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ibflow/stencils.hpp"

namespace ibflow {

namespace {

StaggeredField initial_field(const SnapshotDataset& truth, const Grid& g) {
    require(!truth.snaps.empty(), "truth dataset is empty");
    require(truth.snaps.front().k == 0, "truth dataset must start at k = 0");
    return truth.to_field(0, g);
}

void check_grid(const SnapshotDataset& ds, const Grid& g) {
    if (ds.header.nx != g.nx() || ds.header.ny != g.ny())
        throw ConfigError("dataset grid does not match the configured coarse grid");
}

struct SplitMeans {
    double in_window = -1.0, extrap = -1.0;
};

SplitMeans split_means(const RolloutRecord& rec, long split_step) {
    double si = 0.0, so = 0.0;
    long ni = 0, no = 0;
    for (const RolloutStep& s : rec.steps) {
        if (s.eps < 0.0) continue;
        if (s.k <= split_step) {
            si += s.eps;
            ++ni;
        } else {
            so += s.eps;
            ++no;
        }
    }
    SplitMeans m;
    if (ni > 0) m.in_window = si / ni;
    if (no > 0) m.extrap = so / no;
    return m;
}

TrainRunConfig with_log(TrainRunConfig cfg, const std::string& log_path) {
    cfg.log_csv = log_path;
    return cfg;
}

} // namespace

SnapshotDataset truncate_dataset(const SnapshotDataset& ds, long last_k) {
    SnapshotDataset out;
    out.header = ds.header;
    for (const Snapshot& s : ds.snaps)
        if (s.k <= last_k) out.snaps.push_back(s);
    out.header.snapshot_count = out.snaps.size();
    return out;
}

double penalized_eps_mean(const RolloutRecord& rec, long horizon) {
    double worst = 1.0;
    double sum = 0.0;
    long n = 0;
    for (const RolloutStep& s : rec.steps)
        if (s.eps >= 0.0) {
            worst = std::max(worst, s.eps);
            sum += s.eps;
            ++n;
        }
    if (n == 0) return worst;
    if (rec.diverged_at < 0 && n >= horizon) return sum / static_cast<double>(n);
    sum += worst * static_cast<double>(horizon - n);
    return sum / static_cast<double>(horizon);
}

void ensure_dir(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) throw ConfigError("cannot create directory " + path + ": " + ec.message());
}

SeenReport benchmark_seen(const CaseSetup& setup, const SnapshotDataset& truth,
                          const BenchConfig& bc, const std::string& out_dir) {
    check_grid(truth, setup.coarse_grid);
    ensure_dir(out_dir);
    SeenReport report;
    report.dt_learn = truth.header.dt_learn;
    report.split_step =
        static_cast<long>(std::llround(bc.train_window_tstar / truth.header.dt_learn));

    const SnapshotDataset train_ds = truncate_dataset(truth, report.split_step);
    const std::vector<const SnapshotDataset*> train_sets{&train_ds};
    const StaggeredField init = initial_field(truth, setup.coarse_grid);
    const RotationSchedule sched = truth.case_descriptor().schedule();
    const double vel_limit = bc.vel_limit_factor * setup.fluid.u_inf;

    for (ModelKind kind : bc.kinds) {
        ModelReport mr;
        mr.kind = kind;
        const std::string stem = out_dir + "/" + model_kind_name(kind);
        if (kind == ModelKind::CoarseNumerical) {
            auto model = make_coarse_numerical(setup);
            mr.record = rollout(*model, init, bc.rollout_steps, sched, &truth, vel_limit);
        } else if (kind == ModelKind::Hybrid) {
            auto model = make_hybrid(setup, bc.seed);
            auto adapter = make_adapter(*model);
            mr.train = train_model(*adapter, train_sets,
                                   with_log(bc.train, stem + "_train_log.csv"));
            mr.record = rollout(*model, init, bc.rollout_steps, sched, &truth, vel_limit);
        } else {
            auto model = make_datadriven(setup, bc.seed, kind);
            auto adapter = make_adapter(*model);
            mr.train = train_model(*adapter, train_sets,
                                   with_log(bc.train, stem + "_train_log.csv"));
            mr.record = rollout(*model, init, bc.rollout_steps, sched, &truth, vel_limit);
        }
        const SplitMeans m = split_means(mr.record, report.split_step);
        mr.eps_in = m.in_window;
        mr.eps_out = m.extrap;
        export_error_curves_csv(stem + "_errors.csv", mr.record, report.dt_learn,
                                bc.train_window_tstar);
        export_force_history_csv(stem + "_forces.csv", mr.record, &truth, setup.fluid,
                                 report.dt_learn);
        report.models.push_back(std::move(mr));
    }
    export_seen_summary_csv(out_dir + "/summary.csv", report);
    return report;
}

UnseenReport benchmark_unseen(const CaseSetup& setup,
                              const std::vector<const SnapshotDataset*>& train_sets,
                              const std::vector<const SnapshotDataset*>& test_sets,
                              const BenchConfig& bc, const std::string& out_dir) {
    require(!train_sets.empty() && !test_sets.empty(), "unseen protocol needs both pools");
    ensure_dir(out_dir);
    for (const SnapshotDataset* ds : train_sets) check_grid(*ds, setup.coarse_grid);
    for (const SnapshotDataset* ds : test_sets) check_grid(*ds, setup.coarse_grid);

    // The training pool must not contain any test condition.
    for (const SnapshotDataset* tr : train_sets)
        for (const SnapshotDataset* te : test_sets)
            if (std::abs(tr->header.omega_a - te->header.omega_a) < 1e-12)
                throw ConfigError("training pool contains a test condition");

    const long split_step =
        static_cast<long>(std::llround(bc.train_window_tstar / train_sets[0]->header.dt_learn));
    std::vector<SnapshotDataset> truncated;
    for (const SnapshotDataset* ds : train_sets)
        truncated.push_back(truncate_dataset(*ds, split_step));
    std::vector<const SnapshotDataset*> train_ptrs;
    for (const SnapshotDataset& ds : truncated) train_ptrs.push_back(&ds);

    UnseenReport report;
    report.kinds = bc.kinds;
    for (const SnapshotDataset* te : test_sets) report.omegas.push_back(te->header.omega_a);
    const double vel_limit = bc.vel_limit_factor * setup.fluid.u_inf;

    for (ModelKind kind : bc.kinds) {
        std::vector<double> row;
        long diverged = -1;
        const std::string stem = out_dir + "/" + model_kind_name(kind);

        std::unique_ptr<HybridModel> hybrid;
        std::unique_ptr<DataDrivenModel> dd;
        if (kind == ModelKind::Hybrid) {
            hybrid = make_hybrid(setup, bc.seed);
            auto adapter = make_adapter(*hybrid);
            train_model(*adapter, train_ptrs, with_log(bc.train, stem + "_train_log.csv"));
        } else if (kind == ModelKind::DataDriven || kind == ModelKind::PhysicsLoss) {
            dd = make_datadriven(setup, bc.seed, kind);
            auto adapter = make_adapter(*dd);
            train_model(*adapter, train_ptrs, with_log(bc.train, stem + "_train_log.csv"));
        }

        for (const SnapshotDataset* te : test_sets) {
            const RotationSchedule sched = te->case_descriptor().schedule();
            const StaggeredField init = initial_field(*te, setup.coarse_grid);
            RolloutRecord rec;
            if (kind == ModelKind::CoarseNumerical) {
                CaseSetup per_case = setup;
                per_case.cs = te->case_descriptor();
                auto model = make_coarse_numerical(per_case);
                rec = rollout(*model, init, bc.rollout_steps, sched, te, vel_limit);
            } else if (kind == ModelKind::Hybrid) {
                rec = rollout(*hybrid, init, bc.rollout_steps, sched, te, vel_limit);
            } else {
                rec = rollout(*dd, init, bc.rollout_steps, sched, te, vel_limit);
            }
            std::ostringstream name;
            name << stem << "_omega" << te->header.omega_a << "_errors.csv";
            export_error_curves_csv(name.str(), rec, te->header.dt_learn,
                                    bc.train_window_tstar);
            // Charge steps missing after a divergence at the worst level.
            const double eps = penalized_eps_mean(rec, bc.rollout_steps);
            if (rec.diverged_at >= 0)
                diverged = (diverged < 0) ? rec.diverged_at : std::min(diverged, rec.diverged_at);
            row.push_back(eps);
        }
        report.eps_mean.push_back(std::move(row));
        report.diverged.push_back(diverged);
    }
    export_unseen_summary_csv(out_dir + "/unseen_summary.csv", report);
    return report;
}

// --- file emission ---------------------------------------------------------

namespace {

void open_csv(std::ofstream& os, const std::string& path) {
    os.open(path);
    if (!os) throw ConfigError("cannot write " + path);
    os.precision(17);
}

} // namespace

void export_error_curves_csv(const std::string& path, const RolloutRecord& rec, double dt_learn,
                             double train_window_tstar) {
    std::ofstream os;
    open_csv(os, path);
    os << "t_star,eps,eps_u,eps_v,eps_f,in_window\n";
    for (const RolloutStep& s : rec.steps) {
        if (s.eps < 0.0) continue;
        const double ts = s.k * dt_learn;
        os << ts << ',' << s.eps << ',' << s.eps_u << ',' << s.eps_v << ',' << s.eps_f << ','
           << (ts <= train_window_tstar ? 1 : 0) << '\n';
    }
}

void export_force_history_csv(const std::string& path, const RolloutRecord& rec,
                              const SnapshotDataset* truth, const FluidParams& fp,
                              double dt_learn) {
    std::ofstream os;
    open_csv(os, path);
    const double c = 2.0 / (fp.rho * fp.u_inf * fp.u_inf * fp.diameter);
    os << "t_star,c_d,c_l,c_d_truth,c_l_truth\n";
    for (const RolloutStep& s : rec.steps) {
        os << s.k * dt_learn << ',' << c * s.force.x << ',' << c * s.force.y;
        if (truth && s.k < static_cast<long>(truth->snaps.size())) {
            const Snapshot& t = truth->snaps[s.k];
            os << ',' << c * t.force.x << ',' << c * t.force.y;
        } else {
            os << ",,";
        }
        os << '\n';
    }
}

void export_seen_summary_csv(const std::string& path, const SeenReport& report) {
    std::ofstream os;
    open_csv(os, path);
    os << "model,eps_mean,eps_in_window,eps_extrapolation,diverged_at\n";
    for (const ModelReport& m : report.models)
        os << model_kind_name(m.kind) << ',' << m.record.eps_mean << ',' << m.eps_in << ','
           << m.eps_out << ',' << m.record.diverged_at << '\n';
}

void export_unseen_summary_csv(const std::string& path, const UnseenReport& report) {
    std::ofstream os;
    open_csv(os, path);
    os << "model";
    for (double w : report.omegas) os << ",eps_mean_omega" << w;
    os << ",diverged_at\n";
    for (size_t k = 0; k < report.kinds.size(); ++k) {
        os << model_kind_name(report.kinds[k]);
        for (double e : report.eps_mean[k]) os << ',' << e;
        os << ',' << report.diverged[k] << '\n';
    }
}

double eps_mean_from_error_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read " + path);
    std::string line;
    std::getline(is, line);  // header
    double sum = 0.0;
    long n = 0;
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        std::string tok;
        std::getline(ls, tok, ',');  // t_star
        if (!std::getline(ls, tok, ',')) continue;
        const double eps = std::stod(tok);
        if (std::isfinite(eps)) {
            sum += eps;
            ++n;
        }
    }
    if (n == 0) throw InsufficientDataError("no error rows in " + path);
    return sum / static_cast<double>(n);
}

void export_vorticity_pgm(const std::string& path, const StaggeredField& f, double vort_scale) {
    const Array2D w = vorticity(f);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot write " + path);
    os << "P5\n" << w.cols() << " " << w.rows() << "\n255\n";
    std::vector<unsigned char> row(w.cols());
    for (int j = w.rows() - 1; j >= 0; --j) {  // top row first
        for (int i = 0; i < w.cols(); ++i) {
            const double t = std::clamp((w(j, i) + vort_scale) / (2.0 * vort_scale), 0.0, 1.0);
            row[i] = static_cast<unsigned char>(std::lround(255.0 * t));
        }
        os.write(reinterpret_cast<const char*>(row.data()), row.size());
    }
}

} // namespace ibflow

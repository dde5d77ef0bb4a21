// Acceptance suite: runs every gate criterion end to end and prints one
// PASS/FAIL line per criterion. The full-resolution solver validation is
// hours of wall clock and runs only with IBFLOW_ACCEPT_FULL=1; the default
// uses the reduced-grid smoke variant. Generated datasets and trained
// checkpoints are cached under the working directory keyed by config hash.
//
// IBFLOW_ACCEPT_ONLY=1,5,9  runs a subset.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "ibflow/bench.hpp"
#include "ibflow/checkpoint.hpp"
#include "ibflow/coefficients.hpp"
#include "ibflow/loss.hpp"

using namespace ibflow;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string repo_path(const std::string& rel) {
    return std::string(IBFLOW_REPO_DIR) + "/" + rel;
}

Config smoke_config(const Config& base) {
    Config c = base;
    std::istringstream is(base.get_str("validate.smoke_overrides"));
    std::string kv;
    while (std::getline(is, kv, ';')) {
        const auto eq = kv.find('=');
        if (eq != std::string::npos) c.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return c;
}

std::string cache_dir() {
    const std::string dir = "acceptance_cache";
    ensure_dir(dir);
    return dir;
}

// --- criterion 1: solver validation ----------------------------------------

Outcome criterion1() {
    const bool full = std::getenv("IBFLOW_ACCEPT_FULL") != nullptr;
    Config cfg = Config::from_file(repo_path("configs/cylinder_re100.cfg"));
    if (!full) cfg = smoke_config(cfg);
    CaseSetup setup = build_setup(cfg);

    std::ostringstream msg;
    msg << (full ? "full" : "smoke") << " grid " << setup.fine_grid.nx() << "x"
        << setup.fine_grid.ny();

    char hash_name[64];
    std::snprintf(hash_name, sizeof(hash_name), "%s/validate_%016llx.csv", cache_dir().c_str(),
                  static_cast<unsigned long long>(cfg.hash()));
    std::vector<ForceSample> forces;
    if (std::filesystem::exists(hash_name)) {
        std::ifstream is(hash_name);
        std::string line;
        std::getline(is, line);
        while (std::getline(is, line)) {
            ForceSample s;
            std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &s.t, &s.fx, &s.fy, &s.omega);
            forces.push_back(s);
        }
        msg << " (cached history)";
    } else {
        auto solver = make_solver(setup);
        solver->init_uniform(setup.perturb_amp, setup.perturb_x, setup.perturb_y,
                             setup.perturb_sigma);
        RunOutputs out = run_case(*solver, nullptr, nullptr);
        forces = std::move(out.forces);
        std::ofstream os(hash_name);
        os.precision(17);
        os << "t,fx,fy,omega\n";
        for (const ForceSample& s : forces)
            os << s.t << ',' << s.fx << ',' << s.fy << ',' << s.omega << '\n';
    }

    const ForceStats st = compute_coefficients(forces, setup.fluid,
                                               cfg.get_double("eval.transient_cutoff", 100.0),
                                               cfg.get_double("eval.min_window", 60.0));
    const double cd_lo = cfg.get_double("validate.cd_min", 1.33);
    const double cd_hi = cfg.get_double("validate.cd_max", 1.46);
    const double cl_lo = cfg.get_double("validate.cl_min", 0.305);
    const double cl_hi = cfg.get_double("validate.cl_max", 0.385);
    const double st_lo = cfg.get_double("validate.st_min", 0.162);
    const double st_hi = cfg.get_double("validate.st_max", 0.172);
    const double strouhal = require_strouhal(st);

    const bool ok = st.cd_mean >= cd_lo && st.cd_mean <= cd_hi && st.cl_amp >= cl_lo &&
                    st.cl_amp <= cl_hi && strouhal >= st_lo && strouhal <= st_hi;
    msg << ": C_D=" << st.cd_mean << " [" << cd_lo << "," << cd_hi << "], C_L'=" << st.cl_amp
        << " [" << cl_lo << "," << cl_hi << "], St=" << strouhal << " [" << st_lo << ","
        << st_hi << "]";
    return {ok, msg.str()};
}

// --- criterion 2: kernel properties -----------------------------------------

Outcome criterion2() {
    std::ostringstream msg;
    bool ok = true;

    const double e = 1e-8;
    const double c1 = std::abs(phi3(0.5 - e) - phi3(0.5 + e));
    const double c2 = std::abs(phi3(1.5 - e));
    ok = ok && c1 <= 1e-6 && c2 <= 1e-6;
    for (double r = 1.5; r < 8.0; r += 0.37) ok = ok && phi3(r) == 0.0;

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> d(-2.0, 2.0);
    const double h = 0.25;
    double worst_pou = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const double X = d(rng), Y = d(rng);
        double sum = 0.0;
        for (int j = -10; j <= 10; ++j)
            for (int i = -10; i <= 10; ++i) sum += delta_h(i * h - X, j * h - Y, h) * h * h;
        worst_pou = std::max(worst_pou, std::abs(sum - 1.0));
    }
    ok = ok && worst_pou <= 1e-10;

    // Adjointness of interpolate/spread.
    const Grid g = Grid::uniform(30, 26, 0.0, 0.0, 0.2, 0.2);
    LagrangianBoundary b = cylinder_markers(1.2, 17, 3.0, 2.6);
    bind_measure(b, 0.2);
    StaggeredField a(g);
    std::uniform_real_distribution<double> dd(-1.0, 1.0);
    for (double& v : a.u.raw()) v = dd(rng);
    for (double& v : a.v.raw()) v = dd(rng);
    std::vector<Vec2> c(b.n_markers());
    for (Vec2& f : c) f = {dd(rng), dd(rng)};
    const FaceVec sp = spread_forcing(c, b, g);
    double lhs = 0.0;
    const double h2 = 0.04;
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i <= g.nx(); ++i) lhs += sp.u(j, i) * a.u(j, i) * h2;
    for (int j = 0; j <= g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) lhs += sp.v(j, i) * a.v(j, i) * h2;
    const std::vector<Vec2> interp = interpolate_to_markers(a, b);
    double rhs = 0.0;
    for (int m = 0; m < b.n_markers(); ++m)
        rhs += (c[m].x * interp[m].x + c[m].y * interp[m].y) * b.ds[m];
    const double adj = std::abs(lhs - rhs);
    ok = ok && adj <= 1e-12;

    msg << "continuity " << c1 << "/" << c2 << ", unity " << worst_pou << ", adjoint " << adj;
    return {ok, msg.str()};
}

// --- criterion 3: differentiability -----------------------------------------

Outcome criterion3() {
    std::mt19937_64 rng(33);
    bool ok = true;
    std::ostringstream msg;

    // Individual op: conv2d FD at 1e-6.
    {
        Tensor x0(1, 2, 5, 5), w0(3, 2, 3, 3), b0(1, 3, 1, 1);
        std::uniform_real_distribution<double> d(-1.0, 1.0);
        for (double& v : x0.data) v = d(rng);
        for (double& v : w0.data) v = d(rng);
        for (double& v : b0.data) v = d(rng);
        auto loss_of = [&](const Tensor& x, const Tensor& w, const Tensor& b) {
            Tape t;
            Var y = conv2d(t, t.leaf(x), t.leaf(w), t.leaf(b));
            double s = 0.0;
            for (double u : t.val(y).data) s += u * u;
            return s;
        };
        Tape t;
        Var x = t.leaf(x0, true), w = t.leaf(w0, true), b = t.leaf(b0, true);
        Var y = conv2d(t, x, w, b);
        t.backward(sum_all(t, hadamard(t, y, y)));
        double worst = 0.0;
        for (size_t k = 0; k < w0.size(); ++k) {
            Tensor wp = w0;
            wp.data[k] += 1e-6;
            Tensor wm = w0;
            wm.data[k] -= 1e-6;
            const double fd = (loss_of(x0, wp, b0) - loss_of(x0, wm, b0)) / 2e-6;
            const double an = t.grad(w).data[k];
            worst = std::max(worst, std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8}));
        }
        ok = ok && worst < 1e-6;
        msg << "conv fd " << worst;
    }

    // Full hybrid one-step loss on the 16 x 8 toy grid at 1e-4, and the
    // structural zero of dL_F / d(theta_2).
    {
        Grid coarse = Grid::uniform(16, 8, 0.0, 0.0, 0.2, 0.2, DomainTag::Truncated);
        FluidParams fluid{1.0, 0.01, 1.0, 1.0};
        DomainBC bc{1.0};
        HybridConfig cfg;
        cfg.hidden = {8, 8};
        HybridModel m(coarse, fluid, bc, 126, 0.8, 0.8, cfg, 3);
        std::uniform_real_distribution<double> d(-0.02, 0.02);
        for (ConvResNet* blk : {&m.block1(), &m.block2()})
            for (ConvLayer& l : blk->layers) {
                for (double& v : l.kernel.data) v = d(rng);
                for (double& v : l.bias.data) v = std::abs(d(rng)) + 0.05;
            }
        StaggeredField in(coarse), target(coarse);
        std::uniform_real_distribution<double> df(-0.3, 0.3);
        for (double& v : in.u.raw()) v = 1.0 + df(rng);
        for (double& v : in.v.raw()) v = df(rng);
        apply_boundary(in, bc);
        for (double& v : target.u.raw()) v = 1.0 + df(rng);
        for (double& v : target.v.raw()) v = df(rng);
        const Vec2 f_target{0.7, -0.1};
        const LossConfig lc;

        auto loss_value = [&]() {
            Tape t;
            FieldVars fin = field_leaves(t, in, false);
            const ConvResNet::TapeParams p1 = m.block1().register_params(t, false);
            const ConvResNet::TapeParams p2 = m.block2().register_params(t, false);
            HybridModel::TapedStep ts = m.taped_step(t, fin, 0.6, p1, p2);
            StepLossVars sl =
                one_step_loss(t, ts.u_next, ts.force, target.u, target.v, f_target, lc);
            return scalar_value(t, sl.total);
        };

        Tape t;
        FieldVars fin = field_leaves(t, in, false);
        const ConvResNet::TapeParams p1 = m.block1().register_params(t, true);
        const ConvResNet::TapeParams p2 = m.block2().register_params(t, true);
        HybridModel::TapedStep ts = m.taped_step(t, fin, 0.6, p1, p2);
        StepLossVars sl = one_step_loss(t, ts.u_next, ts.force, target.u, target.v, f_target, lc);
        t.backward(sl.total);

        std::vector<Var> pvars;
        for (const Var& v : p1.kernels) pvars.push_back(v);
        for (const Var& v : p1.biases) pvars.push_back(v);
        for (const Var& v : p2.kernels) pvars.push_back(v);
        for (const Var& v : p2.biases) pvars.push_back(v);
        std::uniform_int_distribution<int> pick(0, static_cast<int>(pvars.size()) - 1);
        double worst = 0.0;
        for (int trial = 0; trial < 16; ++trial) {
            const int pi = pick(rng);
            Tensor* pt = const_cast<Tensor*>(&t.val(pvars[pi]));
            std::uniform_int_distribution<int> pe(0, static_cast<int>(pt->size()) - 1);
            const int k = pe(rng);
            const double keep = pt->data[k];
            pt->data[k] = keep + 1e-7;
            const double fp = loss_value();
            pt->data[k] = keep - 1e-7;
            const double fm = loss_value();
            pt->data[k] = keep;
            const double fd = (fp - fm) / 2e-7;
            const Tensor* gg = t.maybe_grad(pvars[pi]);
            const double an = gg ? gg->data[k] : 0.0;
            worst = std::max(worst, std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-7}));
        }
        ok = ok && worst < 1e-4;
        msg << ", hybrid fd " << worst;

        // dL_F / d(theta_2) must vanish identically.
        Tape t2;
        FieldVars fin2 = field_leaves(t2, in, false);
        const ConvResNet::TapeParams q1 = m.block1().register_params(t2, true);
        const ConvResNet::TapeParams q2 = m.block2().register_params(t2, true);
        HybridModel::TapedStep ts2 = m.taped_step(t2, fin2, 0.6, q1, q2);
        Tensor ft(1, 2, 1, 1);
        ft.data = {f_target.x, f_target.y};
        t2.backward(taped_relative_l2(t2, ts2.force, ft, 1e-8));
        double theta2_mag = 0.0;
        for (const Var& v : q2.kernels)
            if (const Tensor* gg = t2.maybe_grad(v))
                for (double x : gg->data) theta2_mag = std::max(theta2_mag, std::abs(x));
        for (const Var& v : q2.biases)
            if (const Tensor* gg = t2.maybe_grad(v))
                for (double x : gg->data) theta2_mag = std::max(theta2_mag, std::abs(x));
        ok = ok && theta2_mag == 0.0;
        msg << ", |dLF/dtheta2| " << theta2_mag;
    }
    return {ok, msg.str()};
}

// --- criterion 4: projection property ---------------------------------------

Outcome criterion4() {
    const double tol = 1e-6;
    bool ok = true;
    double worst = 0.0;

    Grid grid = Grid::uniform(48, 32, 0.0, 0.0, 0.1, 0.1);
    SolverConfig cfg;
    cfg.dt = 0.01;
    cfg.poisson_tol = tol;
    RefSolver solver(grid, FluidParams{1.0, 0.01, 1.0, 1.0}, DomainBC{1.0},
                     cylinder_markers(1.0, 31, 1.6, 1.6), {}, cfg);
    solver.init_uniform(0.1, 2.6, 1.6, 0.5);
    for (int n = 0; n < 40; ++n) {
        const StepDiagnostics d = solver.step();
        worst = std::max(worst, d.max_div);
    }
    ok = ok && worst <= 10.0 * tol;

    // Coarse numerical baseline steps obey the same bound.
    Grid coarse = Grid::uniform(24, 12, 0.0, 0.0, 0.2, 0.2, DomainTag::Truncated);
    HybridConfig mc;
    CoarseNumericalModel model(coarse, FluidParams{1.0, 0.01, 1.0, 1.0}, DomainBC{1.0}, 196,
                               1.2, 1.2, {}, mc);
    StaggeredField state(coarse);
    state.fill(1.0, 0.0);
    apply_boundary(state, DomainBC{1.0});
    double worst_c = 0.0;
    for (int k = 0; k < 4; ++k) {
        StepOut out = model.step(state, static_cast<double>(k), 0.0);
        StaggeredField chk = out.next;
        worst_c = std::max(worst_c, divergence(chk).max_abs());
        state = out.next;
    }
    ok = ok && worst_c <= 10.0 * tol;

    std::ostringstream msg;
    msg << "max|div| solver " << worst << ", coarse baseline " << worst_c << " (bound "
        << 10.0 * tol << ")";
    return {ok, msg.str()};
}

// --- criterion 5: sub-iteration arithmetic ----------------------------------

Outcome criterion5() {
    const double dt_learn = 0.5;
    const int N = 20;
    const double dt_sub = dt_learn / N;
    bool ok = dt_sub == 0.025;  // exact in binary floating point

    Grid coarse = Grid::uniform(16, 8, 0.0, 0.0, 0.2, 0.2, DomainTag::Truncated);
    FluidParams fluid{1.0, 0.01, 1.0, 1.0};
    DomainBC bc{1.0};
    HybridConfig cfg;
    cfg.hidden = {8, 8};
    HybridModel m(coarse, fluid, bc, 126, 0.8, 0.8, cfg, 2);
    StaggeredField in(coarse);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> d(-0.1, 0.1);
    for (double& v : in.u.raw()) v = 1.0 + d(rng);
    for (double& v : in.v.raw()) v = d(rng);
    apply_boundary(in, bc);

    Tape t;
    FieldVars fin = field_leaves(t, in, false);
    FieldVars out = m.pde_operator(t, fin);
    Tape t2;
    FieldVars cur = field_leaves(t2, in, false);
    for (int s = 0; s < N; ++s) {
        cur = op_substep(t2, cur, coarse, fluid.nu, dt_sub, AdvectionScheme::Upwind1);
        cur = op_enforce_bc(t2, cur, coarse, bc);
    }
    ok = ok && t.val(out.u).data == t2.val(cur.u).data && t.val(out.v).data == t2.val(cur.v).data;

    std::ostringstream msg;
    msg << "dt/N = " << dt_sub << " exactly, composition bitwise "
        << (ok ? "equal" : "UNEQUAL");
    return {ok, msg.str()};
}

// --- criterion 6: training-protocol equivalences -----------------------------

SnapshotDataset small_synth(int n_snaps) {
    std::mt19937_64 rng(99);
    SnapshotDataset ds;
    ds.header.nx = 16;
    ds.header.ny = 12;
    ds.header.dt_learn = 0.5;
    ds.header.win_w = 3.2;
    ds.header.win_h = 2.4;
    std::uniform_real_distribution<double> d(-0.05, 0.05);
    for (int k = 0; k < n_snaps; ++k) {
        Snapshot s;
        s.k = k;
        s.u = Array2D(12, 17);
        s.v = Array2D(13, 16);
        for (double& v : s.u.raw()) v = 1.0 + d(rng);
        for (double& v : s.v.raw()) v = 0.3 + d(rng);
        quantize32(s.u);
        quantize32(s.v);
        s.force = {0.7, 0.1};
        ds.snaps.push_back(std::move(s));
    }
    ds.header.snapshot_count = ds.snaps.size();
    return ds;
}

Outcome criterion6() {
    Grid coarse = Grid::uniform(16, 12, 0.0, 0.0, 0.2, 0.2, DomainTag::Truncated);
    FluidParams fluid{1.0, 0.01, 1.0, 1.0};
    DomainBC bc{1.0};
    HybridConfig cfg;
    cfg.hidden = {8, 8};
    const SnapshotDataset ds = small_synth(12);

    auto run = [&](int window, int epochs, size_t* peak) {
        HybridModel m(coarse, fluid, bc, 126, 0.9, 1.2, cfg, 4);
        auto adapter = make_adapter(m);
        TrainRunConfig tc;
        tc.epochs = epochs;
        tc.batch_size = 3;
        tc.seed = 11;
        tc.window = window;
        TrainResult res = train_model(*adapter, {&ds}, tc);
        if (peak) *peak = res.peak_activation_bytes;
        std::vector<double> flat;
        for (const Tensor* p : m.parameters())
            flat.insert(flat.end(), p->data.begin(), p->data.end());
        return flat;
    };

    size_t p1 = 0, p3 = 0, p5 = 0;
    const std::vector<double> a = run(1, 2, &p1);
    const std::vector<double> b = run(1, 2, nullptr);
    const bool bitwise = a == b;
    run(3, 1, &p3);
    run(5, 1, &p5);
    const bool ordering = p1 < p3 && p3 < p5;

    std::ostringstream msg;
    msg << "T=1 replay bitwise " << (bitwise ? "equal" : "UNEQUAL")
        << "; peak activations " << p1 << " < " << p3 << " < " << p5;
    return {bitwise && ordering, msg.str()};
}

// --- criteria 7 and 8: desk-scale regeneration -------------------------------

struct DeskData {
    Config cfg;
    CaseSetup setup;
    std::map<double, SnapshotDataset> sets;  // by omega_a
};

std::string dataset_cache_path(const Config& cfg, double omega) {
    Config keyed = cfg;
    std::ostringstream w;
    w.precision(17);
    w << omega;
    keyed.set("case.omega_a", w.str());
    keyed.set("case.kind", omega == 0.0 ? "stationary" : "rotating");
    char name[96];
    std::snprintf(name, sizeof(name), "%s/desk_%016llx_omega%g.ibds", cache_dir().c_str(),
                  static_cast<unsigned long long>(keyed.hash()), omega);
    return name;
}

void generate_case(const Config& base, double omega, const std::string& path) {
    Config cfg = base;
    std::ostringstream w;
    w.precision(17);
    w << omega;
    cfg.set("case.omega_a", w.str());
    cfg.set("case.kind", omega == 0.0 ? "stationary" : "rotating");
    CaseSetup setup = build_setup(cfg);
    auto solver = make_solver(setup);
    solver->init_uniform(setup.perturb_amp, setup.perturb_x, setup.perturb_y,
                         setup.perturb_sigma);
    const DownsampleMap down = build_downsample_map(setup.fine_grid, setup.coarse_grid);
    DatasetWriter writer(path, make_dataset_header(setup));
    {
        const StaggeredField c0 = downsample(solver->state(), down);
        Snapshot s0;
        s0.k = 0;
        s0.omega_k = setup.schedule().omega_at(0.0);
        s0.u = c0.u;
        s0.v = c0.v;
        writer.append(s0);
    }
    run_case(*solver, &down, [&](long k, double omega_k, const StaggeredField& snap, Vec2 f) {
        Snapshot s;
        s.k = k;
        s.omega_k = omega_k;
        s.u = snap.u;
        s.v = snap.v;
        s.force = f;
        writer.append(s);
    });
    writer.close();
}

DeskData desk_data(const std::vector<double>& omegas) {
    DeskData d{Config::from_file(repo_path("configs/desk_re100.cfg")), {}, {}};
    d.setup = build_setup(d.cfg);
    std::vector<std::thread> workers;
    for (double w : omegas) {
        const std::string path = dataset_cache_path(d.cfg, w);
        if (!std::filesystem::exists(path))
            workers.emplace_back([cfg = d.cfg, w, path] { generate_case(cfg, w, path); });
    }
    for (std::thread& t : workers) t.join();
    for (double w : omegas) d.sets[w] = read_dataset(dataset_cache_path(d.cfg, w));
    return d;
}

TrainRunConfig desk_train_config(const Config& cfg, int epochs) {
    TrainRunConfig tc;
    tc.epochs = epochs;
    tc.batch_size = cfg.get_int("train.batch", 32);
    tc.window = 1;
    tc.val_fraction = cfg.get_double("train.val_fraction", 0.1);
    tc.lr0 = cfg.get_double("train.lr", 1e-3);
    tc.adam.weight_decay = cfg.get_double("train.weight_decay", 1e-5);
    return tc;
}

Outcome criterion7(const DeskData& d) {
    const SnapshotDataset& truth = d.sets.at(0.0);
    BenchConfig bc;
    bc.rollout_steps = 400;
    bc.train_window_tstar = 100.0;
    bc.train = desk_train_config(d.cfg, d.cfg.get_int("train.epochs", 300));
    bc.kinds = {ModelKind::Hybrid, ModelKind::DataDriven, ModelKind::CoarseNumerical};
    ensure_dir("acceptance_out");
    const SeenReport rep = benchmark_seen(d.setup, truth, bc, "acceptance_out/seen");

    const ModelReport* hy = nullptr;
    const ModelReport* dd = nullptr;
    const ModelReport* cn = nullptr;
    for (const ModelReport& m : rep.models) {
        if (m.kind == ModelKind::Hybrid) hy = &m;
        if (m.kind == ModelKind::DataDriven) dd = &m;
        if (m.kind == ModelKind::CoarseNumerical) cn = &m;
    }

    const bool no_divergence = hy->record.diverged_at < 0 &&
                               static_cast<long>(hy->record.steps.size()) == 400;
    const double eps_h = penalized_eps_mean(hy->record, 400);
    const double eps_d = penalized_eps_mean(dd->record, 400);
    const double eps_c = penalized_eps_mean(cn->record, 400);
    const bool ordered = eps_h < eps_d && eps_h < eps_c;

    // Dominant lift frequency of the rollout force within 10% of the truth.
    auto force_series = [&](auto get) {
        std::vector<ForceSample> out;
        for (long k = 1; k <= 400; ++k) {
            ForceSample s;
            s.t = k * truth.header.dt_learn;
            get(k, s);
            out.push_back(s);
        }
        return out;
    };
    const std::vector<ForceSample> truth_f = force_series([&](long k, ForceSample& s) {
        s.fx = truth.snaps[k].force.x;
        s.fy = truth.snaps[k].force.y;
    });
    const std::vector<ForceSample> hyb_f = force_series([&](long k, ForceSample& s) {
        s.fx = hy->record.steps[k - 1].force.x;
        s.fy = hy->record.steps[k - 1].force.y;
    });
    const double st_truth =
        require_strouhal(compute_coefficients(truth_f, d.setup.fluid, 100.0, 60.0));
    const double st_hyb =
        require_strouhal(compute_coefficients(hyb_f, d.setup.fluid, 100.0, 60.0));
    const bool st_ok = std::abs(st_hyb - st_truth) <= 0.1 * st_truth;

    std::ostringstream msg;
    msg << "rollout steps " << hy->record.steps.size() << "/400, eps hybrid " << eps_h
        << " vs datadriven " << eps_d << " vs coarse " << eps_c << ", St " << st_hyb << " vs "
        << st_truth;
    return {no_divergence && ordered && st_ok, msg.str()};
}

Outcome criterion8(const DeskData& d) {
    BenchConfig bc;
    bc.rollout_steps = 400;
    bc.train_window_tstar = 100.0;
    // Same update budget as the seen-condition training: the pooled two-case
    // set doubles the per-epoch sample count, so the epoch count halves.
    bc.train = desk_train_config(d.cfg, d.cfg.get_int("train.epochs", 300) / 2);
    const std::vector<const SnapshotDataset*> train_sets{&d.sets.at(2.0), &d.sets.at(4.0)};
    const std::vector<const SnapshotDataset*> test_sets{&d.sets.at(3.0), &d.sets.at(5.0)};
    ensure_dir("acceptance_out");
    const UnseenReport rep =
        benchmark_unseen(d.setup, train_sets, test_sets, bc, "acceptance_out/unseen");

    // The training pool must exclude the test conditions (benchmark_unseen
    // enforces this; assert the protocol shape too).
    bool ok = rep.kinds.size() == 4 && rep.omegas.size() == 2;
    size_t hy_row = 0;
    for (size_t k = 0; k < rep.kinds.size(); ++k)
        if (rep.kinds[k] == ModelKind::Hybrid) hy_row = k;
    std::ostringstream msg;
    msg << "eps table:";
    for (size_t c = 0; c < rep.omegas.size(); ++c) {
        msg << " omega=" << rep.omegas[c] << " [";
        for (size_t k = 0; k < rep.kinds.size(); ++k) {
            if (k) msg << " ";
            msg << model_kind_name(rep.kinds[k]) << "=" << rep.eps_mean[k][c];
            if (k != hy_row) ok = ok && rep.eps_mean[hy_row][c] < rep.eps_mean[k][c];
        }
        msg << "]";
    }
    return {ok, msg.str()};
}

// --- criterion 9: data pipeline ----------------------------------------------

Outcome criterion9(const DeskData& d) {
    bool ok = true;
    std::ostringstream msg;

    // Flux conservation of the production downsampling map.
    const DownsampleMap map = build_downsample_map(d.setup.fine_grid, d.setup.coarse_grid);
    StaggeredField fine(d.setup.fine_grid);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (double& v : fine.u.raw()) v = dist(rng);
    for (double& v : fine.v.raw()) v = dist(rng);
    const StaggeredField coarse = downsample(fine, map);
    double worst_flux = 0.0;
    for (int J = 0; J < d.setup.coarse_grid.ny(); ++J)
        for (int I = 0; I <= d.setup.coarse_grid.nx(); ++I) {
            double fine_flux = 0.0, len = 0.0;
            for (int j = map.yface[J]; j < map.yface[J + 1]; ++j) {
                fine_flux += d.setup.fine_grid.dy(j) * fine.u(j, map.xface[I]);
                len += d.setup.fine_grid.dy(j);
            }
            worst_flux = std::max(worst_flux, std::abs(coarse.u(J, I) * len - fine_flux));
        }
    ok = ok && worst_flux <= 1e-12;

    // Bit-exact write -> read round trip of a generated dataset.
    const SnapshotDataset& ds = d.sets.at(0.0);
    const std::string tmp = "acceptance_cache/roundtrip.ibds";
    write_dataset(tmp, ds);
    const SnapshotDataset back = read_dataset(tmp);
    bool bitwise = back.snaps.size() == ds.snaps.size();
    for (size_t k = 0; bitwise && k < ds.snaps.size(); ++k)
        bitwise = back.snaps[k].u == ds.snaps[k].u && back.snaps[k].v == ds.snaps[k].v &&
                  back.snaps[k].force.x == ds.snaps[k].force.x &&
                  back.snaps[k].omega_k == ds.snaps[k].omega_k;
    ok = ok && bitwise;

    // Snapshot stride: dt_learn = output_every * dt = 0.5 and k t* spacing.
    const double stride = d.setup.solver_cfg.output_every * d.setup.solver_cfg.dt;
    ok = ok && stride == 0.5 && d.setup.solver_cfg.output_every == 100;
    ok = ok && ds.snaps.size() == 401;  // t* in [0, 200] at 0.5

    msg << "flux " << worst_flux << ", round trip " << (bitwise ? "bitwise" : "BROKEN")
        << ", stride " << d.setup.solver_cfg.output_every << " x " << d.setup.solver_cfg.dt
        << " = " << stride << ", snapshots " << ds.snaps.size();
    return {ok, msg.str()};
}

} // namespace

int main() {
    std::set<int> only;
    if (const char* env = std::getenv("IBFLOW_ACCEPT_ONLY")) {
        std::istringstream is(env);
        std::string tok;
        while (std::getline(is, tok, ',')) only.insert(std::stoi(tok));
    }
    auto selected = [&](int n) { return only.empty() || only.count(n) > 0; };

    bool all_pass = true;
    auto report = [&](int n, const char* title, const Outcome& o) {
        all_pass = all_pass && o.pass;
        std::cout << "C" << n << " " << title << ": " << (o.pass ? "PASS" : "FAIL") << " — "
                  << o.detail << "\n"
                  << std::flush;
    };
    auto run = [&](int n, const char* title, Outcome (*fn)()) {
        if (!selected(n)) return;
        try {
            report(n, title, fn());
        } catch (const std::exception& e) {
            report(n, title, {false, std::string("exception: ") + e.what()});
        }
    };

    if (only.count(0)) {
        // Pseudo-criterion 0: only populate the desk-scale dataset cache.
        desk_data({0.0, 2.0, 3.0, 4.0, 5.0});
        std::cout << "desk-scale dataset cache populated\n";
        return 0;
    }

    run(2, "kernel properties", criterion2);
    run(3, "differentiability", criterion3);
    run(4, "projection property", criterion4);
    run(5, "sub-iteration arithmetic", criterion5);
    run(6, "training-protocol equivalences", criterion6);
    run(1, "solver validation", criterion1);

    const bool need_desk = selected(7) || selected(8) || selected(9);
    if (need_desk) {
        try {
            std::vector<double> omegas;
            if (selected(9) || selected(7)) omegas.push_back(0.0);
            if (selected(8))
                for (double w : {2.0, 3.0, 4.0, 5.0}) omegas.push_back(w);
            const DeskData d = desk_data(omegas);
            if (selected(9)) {
                try {
                    report(9, "data pipeline", criterion9(d));
                } catch (const std::exception& e) {
                    report(9, "data pipeline", {false, std::string("exception: ") + e.what()});
                }
            }
            if (selected(7)) {
                try {
                    report(7, "long-horizon behavior", criterion7(d));
                } catch (const std::exception& e) {
                    report(7, "long-horizon behavior",
                           {false, std::string("exception: ") + e.what()});
                }
            }
            if (selected(8)) {
                try {
                    report(8, "unseen-condition protocol", criterion8(d));
                } catch (const std::exception& e) {
                    report(8, "unseen-condition protocol",
                           {false, std::string("exception: ") + e.what()});
                }
            }
        } catch (const std::exception& e) {
            std::cout << "desk-scale data generation failed: " << e.what() << "\n";
            all_pass = false;
        }
    }

    std::cout << (all_pass ? "ACCEPTANCE: ALL SELECTED CRITERIA PASS"
                           : "ACCEPTANCE: FAILURES PRESENT")
              << "\n";
    return all_pass ? 0 : 1;
}

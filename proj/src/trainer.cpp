#include "ibflow/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ibflow {

namespace {

std::vector<Var> flatten_params(const ConvResNet::TapeParams& p) {
    std::vector<Var> out;
    for (size_t l = 0; l < p.kernels.size(); ++l) {
        out.push_back(p.kernels[l]);
        out.push_back(p.biases[l]);
    }
    return out;
}

ConvResNet::TapeParams unflatten(const std::vector<Var>& flat, size_t offset, size_t layers) {
    ConvResNet::TapeParams p;
    for (size_t l = 0; l < layers; ++l) {
        p.kernels.push_back(flat[offset + 2 * l]);
        p.biases.push_back(flat[offset + 2 * l + 1]);
    }
    return p;
}

class HybridAdapter : public TrainableAdapter {
public:
    explicit HybridAdapter(HybridModel& m) : m_(m) {}
    std::vector<Tensor*> parameters() override { return m_.parameters(); }
    std::vector<Var> register_params(Tape& t, bool rg) override {
        std::vector<Var> out = flatten_params(m_.block1().register_params(t, rg));
        for (Var v : flatten_params(m_.block2().register_params(t, rg))) out.push_back(v);
        return out;
    }
    TapedStepOut taped_step(Tape& t, FieldVars in, double omega_k,
                            const std::vector<Var>& pv) override {
        const size_t l1 = m_.block1().layers.size();
        const size_t l2 = m_.block2().layers.size();
        const ConvResNet::TapeParams p1 = unflatten(pv, 0, l1);
        const ConvResNet::TapeParams p2 = unflatten(pv, 2 * l1, l2);
        require(pv.size() == 2 * (l1 + l2), "parameter var list does not match the model");
        HybridModel::TapedStep ts = m_.taped_step(t, in, omega_k, p1, p2);
        return {ts.u_next, ts.force};
    }
    ModelKind kind() const override { return ModelKind::Hybrid; }
    StepModel& model() override { return m_; }
    const Grid& grid() const override { return m_.coarse_grid(); }
    const LagrangianBoundary& boundary() const override { return m_.boundary(); }
    const FluidParams& fluid() const override { return m_.fluid(); }
    double dt_learn() const override { return m_.config().dt_learn; }

private:
    HybridModel& m_;
};

class DataDrivenAdapter : public TrainableAdapter {
public:
    explicit DataDrivenAdapter(DataDrivenModel& m) : m_(m) {}
    std::vector<Tensor*> parameters() override { return m_.parameters(); }
    std::vector<Var> register_params(Tape& t, bool rg) override {
        DataDrivenModel::TapeParams p = m_.register_params(t, rg);
        std::vector<Var> out = flatten_params(p.a);
        for (Var v : flatten_params(p.b)) out.push_back(v);
        for (Var v : flatten_params(p.c)) out.push_back(v);
        return out;
    }
    TapedStepOut taped_step(Tape& t, FieldVars in, double omega_k,
                            const std::vector<Var>& pv) override {
        const size_t la = m_.block_a().layers.size();
        const size_t lb = m_.block_b().layers.size();
        const size_t lc = m_.block_c().layers.size();
        require(pv.size() == 2 * (la + lb + lc), "parameter var list does not match the model");
        DataDrivenModel::TapeParams p;
        p.a = unflatten(pv, 0, la);
        p.b = unflatten(pv, 2 * la, lb);
        p.c = unflatten(pv, 2 * (la + lb), lc);
        DataDrivenModel::TapedStep ts = m_.taped_step(t, in, omega_k, p);
        return {ts.u_next, ts.force};
    }
    ModelKind kind() const override { return m_.kind(); }
    StepModel& model() override { return m_; }
    const Grid& grid() const override { return m_.coarse_grid(); }
    const LagrangianBoundary& boundary() const override { return m_.boundary(); }
    const FluidParams& fluid() const override { return m_.fluid(); }
    double dt_learn() const override { return 0.5; }

private:
    DataDrivenModel& m_;
};

} // namespace

std::unique_ptr<TrainableAdapter> make_adapter(HybridModel& m) {
    return std::make_unique<HybridAdapter>(m);
}
std::unique_ptr<TrainableAdapter> make_adapter(DataDrivenModel& m) {
    return std::make_unique<DataDrivenAdapter>(m);
}

std::pair<std::vector<WindowRef>, std::vector<WindowRef>> split_windows(
    const std::vector<const SnapshotDataset*>& cases, int window, double fraction) {
    if (fraction <= 0.0 || fraction >= 1.0)
        throw ConfigError("validation fraction must lie in (0,1); the scheduler needs it");
    require(window >= 1, "window length must be >= 1");
    std::vector<WindowRef> train, val;
    for (size_t c = 0; c < cases.size(); ++c) {
        const long n = static_cast<long>(cases[c]->snaps.size()) - window;
        if (n <= 0)
            throw ConfigError("case " + std::to_string(c) + " too short for window " +
                              std::to_string(window));
        long n_val = std::lround(fraction * static_cast<double>(n));
        n_val = std::clamp<long>(n_val, 1, n - 1);
        for (long s = 0; s < n - n_val; ++s)
            train.push_back({static_cast<int>(c), static_cast<int>(s)});
        for (long s = n - n_val; s < n; ++s)
            val.push_back({static_cast<int>(c), static_cast<int>(s)});
    }
    return {train, val};
}

namespace {

struct SampleEval {
    double loss = 0.0;
    double data_loss = 0.0;
    double phys_loss = 0.0;
    size_t tape_bytes = 0;
};

// Forward (and optionally backward) over one training window.
SampleEval eval_window(TrainableAdapter& model, const std::vector<const SnapshotDataset*>& cases,
                       const WindowRef& w, const TrainRunConfig& cfg, double alpha,
                       bool with_grad, std::vector<Tensor>* grads_out) {
    const SnapshotDataset& ds = *cases[w.case_id];
    const Grid& g = model.grid();
    Tape tape;
    std::vector<Var> pv = model.register_params(tape, with_grad);

    const Snapshot& s0 = ds.snaps[w.start];
    StaggeredField f0(g);
    f0.u = s0.u;
    f0.v = s0.v;
    FieldVars cur = field_leaves(tape, f0, false);

    Var data_total, phys_total;
    for (int tau = 0; tau < cfg.window; ++tau) {
        const Snapshot& target = ds.snaps[w.start + tau + 1];
        const double omega_k = ds.snaps[w.start + tau].omega_k;
        TapedStepOut out = model.taped_step(tape, cur, omega_k, pv);
        StepLossVars sl = one_step_loss(tape, out.next, out.force, target.u, target.v,
                                        target.force, cfg.loss);
        data_total = data_total.valid() ? add(tape, data_total, sl.total) : sl.total;

        if (model.kind() == ModelKind::PhysicsLoss) {
            const Snapshot& prev = ds.snaps[w.start + tau];
            StaggeredField pf(g);
            pf.u = prev.u;
            pf.v = prev.v;
            const std::vector<Vec2> targets = marker_targets(model.boundary(), omega_k);
            PhysicsLossVars pl = physics_loss(tape, out.next, pf, g, model.fluid(),
                                              model.dt_learn(), model.boundary(), targets,
                                              cfg.loss);
            phys_total = phys_total.valid() ? add(tape, phys_total, pl.l_phy) : pl.l_phy;
        }
        cur = out.next;
    }

    Var total = data_total;
    if (phys_total.valid())
        total = add(tape, scale(tape, data_total, cfg.phys.beta),
                    scale(tape, phys_total, alpha));

    SampleEval ev;
    ev.data_loss = scalar_value(tape, data_total);
    ev.phys_loss = phys_total.valid() ? scalar_value(tape, phys_total) : 0.0;
    ev.loss = scalar_value(tape, total);

    if (with_grad) {
        tape.backward(total);
        grads_out->clear();
        for (const Var& p : pv) {
            const Tensor* gp = tape.maybe_grad(p);
            if (gp) {
                grads_out->push_back(*gp);
            } else {
                const Tensor& shape = tape.val(p);
                grads_out->emplace_back(shape.n, shape.c, shape.h, shape.w);
            }
        }
    }
    ev.tape_bytes = tape.bytes();
    return ev;
}

} // namespace

TrainResult train_model(TrainableAdapter& model,
                        const std::vector<const SnapshotDataset*>& cases,
                        const TrainRunConfig& cfg) {
    require(!cases.empty(), "training needs at least one dataset");
    auto [train_refs, val_refs] = split_windows(cases, cfg.window, cfg.val_fraction);

    std::vector<Tensor*> params = model.parameters();
    AdamState adam;
    adam.init(params, cfg.lr0);
    PlateauScheduler sched = cfg.scheduler;

    TrainResult res;
    res.param_count = 0;
    for (const Tensor* p : params) res.param_count += p->size();
    res.best_val = std::numeric_limits<double>::infinity();

    // Physics-loss weighting: balance the physics term against the data term
    // on the first batch with the initial parameters.
    double alpha = cfg.phys.alpha;
    if (model.kind() == ModelKind::PhysicsLoss && alpha < 0.0) {
        const size_t n0 = std::min<size_t>(cfg.batch_size, train_refs.size());
        double lr_sum = 0.0, lp_sum = 0.0;
        for (size_t i = 0; i < n0; ++i) {
            SampleEval ev = eval_window(model, cases, train_refs[i], cfg, 0.0, false, nullptr);
            lr_sum += ev.data_loss;
            lp_sum += ev.phys_loss;
        }
        alpha = (lp_sum > 1e-30) ? cfg.phys.beta * lr_sum / lp_sum : 1.0;
    }
    res.resolved_alpha = alpha;

    std::mt19937_64 rng(cfg.seed);
    std::vector<Tensor> best_params;

    std::ofstream log_os;
    if (!cfg.log_csv.empty()) {
        log_os.open(cfg.log_csv);
        log_os << "epoch,train_loss,val_loss,lr,wall_seconds,peak_activation_bytes\n";
    }

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::shuffle(train_refs.begin(), train_refs.end(), rng);

        double train_loss_sum = 0.0;
        size_t peak_bytes = 0;
        for (size_t b0 = 0; b0 < train_refs.size(); b0 += cfg.batch_size) {
            const size_t nb = std::min<size_t>(cfg.batch_size, train_refs.size() - b0);
            std::vector<SampleEval> evals(nb);
            std::vector<std::vector<Tensor>> grads(nb);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
            for (long i = 0; i < static_cast<long>(nb); ++i) {
                evals[i] = eval_window(model, cases, train_refs[b0 + i], cfg, alpha, true,
                                       &grads[i]);
            }
            // Deterministic fixed-order reduction.
            std::vector<Tensor> acc;
            for (size_t p = 0; p < params.size(); ++p)
                acc.emplace_back(params[p]->n, params[p]->c, params[p]->h, params[p]->w);
            for (size_t i = 0; i < nb; ++i) {
                if (!std::isfinite(evals[i].loss))
                    throw DivergenceError("non-finite training loss at epoch " +
                                              std::to_string(epoch) + ", batch " +
                                              std::to_string(b0 / cfg.batch_size),
                                          epoch);
                train_loss_sum += evals[i].loss;
                peak_bytes = std::max(peak_bytes, evals[i].tape_bytes);
                for (size_t p = 0; p < params.size(); ++p)
                    for (size_t k = 0; k < acc[p].size(); ++k)
                        acc[p].data[k] += grads[i][p].data[k] / static_cast<double>(nb);
            }
            adam_step(params, acc, adam, cfg.adam);
        }

        std::vector<double> val_losses(val_refs.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
        for (long i = 0; i < static_cast<long>(val_refs.size()); ++i)
            val_losses[i] = eval_window(model, cases, val_refs[i], cfg, alpha, false, nullptr).loss;
        double val_loss_sum = 0.0;
        for (double v : val_losses) val_loss_sum += v;
        const double val_loss = val_loss_sum / static_cast<double>(val_refs.size());
        const double train_loss = train_loss_sum / static_cast<double>(train_refs.size());

        adam.lr = sched.step(val_loss, adam.lr);
        if (val_loss < res.best_val) {
            res.best_val = val_loss;
            res.best_epoch = epoch;
            best_params.clear();
            for (const Tensor* p : params) best_params.push_back(*p);
        }
        res.peak_activation_bytes = std::max(res.peak_activation_bytes, peak_bytes);

        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        res.log.push_back({epoch, train_loss, val_loss, adam.lr, wall, peak_bytes});
        if (log_os)
            log_os << epoch << ',' << train_loss << ',' << val_loss << ',' << adam.lr << ','
                   << wall << ',' << peak_bytes << '\n';
    }

    if (!best_params.empty())
        for (size_t p = 0; p < params.size(); ++p) *params[p] = best_params[p];
    return res;
}

} // namespace ibflow

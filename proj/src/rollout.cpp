#include "ibflow/rollout.hpp"

#include <cmath>

#include "ibflow/loss.hpp"

namespace ibflow {

double stepwise_error(const Array2D& u_pred, const Array2D& v_pred, Vec2 f_pred,
                      const Array2D& u_truth, const Array2D& v_truth, Vec2 f_truth,
                      double eps) {
    auto q = [](const Array2D& a) {
        std::vector<double> out(a.raw());
        for (double& v : out) v = quantize32(v);
        return out;
    };
    const double ru = relative_lp(q(u_pred), q(u_truth), 2.0, eps);
    const double rv = relative_lp(q(v_pred), q(v_truth), 2.0, eps);
    const std::vector<double> fp{quantize32(f_pred.x), quantize32(f_pred.y)};
    const std::vector<double> ft{quantize32(f_truth.x), quantize32(f_truth.y)};
    const double rf = relative_lp(fp, ft, 2.0, eps);
    return (ru + rv + rf) / 3.0;
}

RolloutRecord rollout(StepModel& model, const StaggeredField& initial, long steps,
                      const RotationSchedule& schedule, const SnapshotDataset* truth,
                      double vel_limit) {
    RolloutRecord rec;
    StaggeredField state = initial;
    double eps_sum = 0.0;
    long eps_count = 0;

    for (long t = 1; t <= steps; ++t) {
        StepOut out;
        try {
            out = model.step(state, static_cast<double>(t - 1),
                             schedule.omega_at(static_cast<double>(t - 1)));
        } catch (const DivergenceError&) {
            rec.diverged_at = t;
            break;
        }
        if (!out.next.all_finite() || out.next.max_velocity() > vel_limit) {
            rec.diverged_at = t;
            break;
        }

        RolloutStep rs;
        rs.k = t;
        rs.u = out.next.u;
        rs.v = out.next.v;
        quantize32(rs.u);
        quantize32(rs.v);
        rs.force = {quantize32(out.force.x), quantize32(out.force.y)};

        if (truth && t < static_cast<long>(truth->snaps.size())) {
            const Snapshot& s = truth->snaps[t];
            require(s.k == t, "truth snapshots must be indexed k = 0,1,2,...");
            const double e8 = 1e-8;
            auto r2 = [&](const Array2D& a, const Array2D& b) {
                std::vector<double> qa(a.raw()), qb(b.raw());
                for (double& v : qa) v = quantize32(v);
                for (double& v : qb) v = quantize32(v);
                return relative_lp(qa, qb, 2.0, e8);
            };
            rs.eps_u = r2(rs.u, s.u);
            rs.eps_v = r2(rs.v, s.v);
            const std::vector<double> fp{rs.force.x, rs.force.y};
            const std::vector<double> ft{quantize32(s.force.x), quantize32(s.force.y)};
            rs.eps_f = relative_lp(fp, ft, 2.0, e8);
            rs.eps = (rs.eps_u + rs.eps_v + rs.eps_f) / 3.0;
            eps_sum += rs.eps;
            ++eps_count;
        }
        rec.steps.push_back(std::move(rs));
        state = out.next;
    }
    if (eps_count > 0) rec.eps_mean = eps_sum / static_cast<double>(eps_count);
    return rec;
}

} // namespace ibflow

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>
#include <random>

#include "ibflow/field_ops.hpp"

using namespace ibflow;

namespace {

std::mt19937_64 rng(2024);

StaggeredField random_field(const Grid& g, double s = 0.5) {
    StaggeredField f(g);
    std::uniform_real_distribution<double> d(-s, s);
    for (double& v : f.u.raw()) v = d(rng);
    for (double& v : f.v.raw()) v = d(rng);
    return f;
}

// FD check of d(loss)/d(u,v) for a scalar loss built from taped field ops.
using FieldLoss = std::function<Var(Tape&, FieldVars)>;

void fd_check_field(const Grid& g, const StaggeredField& f0, const FieldLoss& make_loss,
                    double tol = 1e-6, double step = 1e-6) {
    Tape t;
    FieldVars in = field_leaves(t, f0, true);
    Var loss = make_loss(t, in);
    t.backward(loss);
    const Tensor gu = t.grad(in.u);
    const Tensor gv = t.grad(in.v);

    auto eval = [&](const StaggeredField& f) {
        Tape tt;
        FieldVars vv = field_leaves(tt, f, false);
        return scalar_value(tt, make_loss(tt, vv));
    };

    double worst = 0.0;
    StaggeredField f = f0;
    std::uniform_int_distribution<int> pick_u(0, static_cast<int>(f.u.size()) - 1);
    std::uniform_int_distribution<int> pick_v(0, static_cast<int>(f.v.size()) - 1);
    for (int trial = 0; trial < 40; ++trial) {
        const bool use_u = trial % 2 == 0;
        const int k = use_u ? pick_u(rng) : pick_v(rng);
        double& slot = use_u ? f.u.raw()[k] : f.v.raw()[k];
        const double keep = slot;
        slot = keep + step;
        const double fp = eval(f);
        slot = keep - step;
        const double fm = eval(f);
        slot = keep;
        const double fd = (fp - fm) / (2.0 * step);
        const double an = use_u ? gu.data[k] : gv.data[k];
        const double denom = std::max({std::abs(fd), std::abs(an), 1e-8});
        worst = std::max(worst, std::abs(fd - an) / denom);
    }
    CHECK(worst < tol);
}

Var field_norm2(Tape& t, FieldVars f) {
    return add(t, sum_all(t, hadamard(t, f.u, f.u)), sum_all(t, hadamard(t, f.v, f.v)));
}

} // namespace

TEST_CASE("substep: forward matches the solver stencils") {
    const Grid g = Grid::uniform(10, 8, 0.0, 0.0, 0.5, 0.5);
    StaggeredField f = random_field(g);
    apply_boundary(f, DomainBC{1.0});
    const double nu = 0.02, dt = 0.05;

    Tape t;
    FieldVars in = field_leaves(t, f, false);
    FieldVars out = op_substep(t, in, g, nu, dt, AdvectionScheme::Upwind1);
    const StaggeredField got = field_values(t, out, g);

    const FaceVec conv = convect(f, AdvectionScheme::Upwind1);
    const FaceVec diff = diffuse(f, nu);
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 1; i < g.nx(); ++i)
            CHECK(got.u(j, i) ==
                  doctest::Approx(f.u(j, i) + dt * (conv.u(j, i) + diff.u(j, i)))
                      .epsilon(1e-14));
    for (int j = 1; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i)
            CHECK(got.v(j, i) ==
                  doctest::Approx(f.v(j, i) + dt * (conv.v(j, i) + diff.v(j, i)))
                      .epsilon(1e-14));
    // Boundary faces pass through.
    for (int j = 0; j < g.ny(); ++j) {
        CHECK(got.u(j, 0) == f.u(j, 0));
        CHECK(got.u(j, g.nx()) == f.u(j, g.nx()));
    }
}

TEST_CASE("substep gradient passes finite differences (upwind)") {
    const Grid g = Grid::uniform(8, 6, 0.0, 0.0, 0.5, 0.5);
    const StaggeredField f0 = random_field(g);
    fd_check_field(g, f0, [&](Tape& t, FieldVars in) {
        FieldVars out = op_substep(t, in, g, 0.02, 0.05, AdvectionScheme::Upwind1);
        return field_norm2(t, out);
    });
}

TEST_CASE("substep gradient passes finite differences (central, stretched grid)") {
    AxisSpec ax{0.0, 4.0, {{1.0, 3.0, 0.25}}, 1.05, 1.0};
    const Grid g(build_axis_spacings(ax), build_axis_spacings(ax), 0.0, 0.0);
    const StaggeredField f0 = random_field(g);
    fd_check_field(g, f0, [&](Tape& t, FieldVars in) {
        FieldVars out = op_substep(t, in, g, 0.02, 0.02, AdvectionScheme::Central2);
        return field_norm2(t, out);
    });
}

TEST_CASE("substep gradient through two chained substeps") {
    const Grid g = Grid::uniform(6, 6, 0.0, 0.0, 0.5, 0.5);
    const StaggeredField f0 = random_field(g);
    fd_check_field(g, f0, [&](Tape& t, FieldVars in) {
        FieldVars a = op_substep(t, in, g, 0.02, 0.04, AdvectionScheme::Upwind1);
        FieldVars b = op_substep(t, a, g, 0.02, 0.04, AdvectionScheme::Upwind1);
        return field_norm2(t, b);
    });
}

TEST_CASE("enforce_bc: matches apply_boundary and has the copy adjoint") {
    const Grid g = Grid::uniform(8, 6, 0.0, 0.0, 0.5, 0.5);
    const StaggeredField f0 = random_field(g);
    const DomainBC bc{1.25};
    Tape t;
    FieldVars in = field_leaves(t, f0, true);
    FieldVars out = op_enforce_bc(t, in, g, bc);
    StaggeredField expect = f0;
    apply_boundary(expect, bc);
    CHECK(field_values(t, out, g).u == expect.u);
    CHECK(field_values(t, out, g).v == expect.v);

    fd_check_field(g, f0, [&](Tape& tt, FieldVars vv) {
        FieldVars o = op_enforce_bc(tt, vv, g, bc);
        return field_norm2(tt, o);
    });
}

TEST_CASE("face/center mappings: values and gradients") {
    const Grid g = Grid::uniform(7, 5, 0.0, 0.0, 0.5, 0.5);
    const StaggeredField f0 = random_field(g);
    Tape t;
    FieldVars in = field_leaves(t, f0, false);
    Var c = op_face_to_center(t, in, g);
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            CHECK(t.val(c).at(0, 0, j, i) ==
                  doctest::Approx(0.5 * (f0.u(j, i) + f0.u(j, i + 1))).epsilon(1e-14));
            CHECK(t.val(c).at(0, 1, j, i) ==
                  doctest::Approx(0.5 * (f0.v(j, i) + f0.v(j + 1, i))).epsilon(1e-14));
        }
    FieldVars back = op_center_to_face(t, c, g);
    // Boundary faces pinned to zero.
    for (int j = 0; j < g.ny(); ++j) {
        CHECK(t.val(back.u).at(0, 0, j, 0) == 0.0);
        CHECK(t.val(back.u).at(0, 0, j, g.nx()) == 0.0);
    }

    fd_check_field(g, f0, [&](Tape& tt, FieldVars vv) {
        Var cc = op_face_to_center(tt, vv, g);
        FieldVars ff = op_center_to_face(tt, cc, g);
        return field_norm2(tt, ff);
    });
}

TEST_CASE("divergence op: value and gradient") {
    const Grid g = Grid::uniform(6, 7, 0.0, 0.0, 0.4, 0.3);
    const StaggeredField f0 = random_field(g);
    Tape t;
    FieldVars in = field_leaves(t, f0, false);
    Var div = op_divergence(t, in, g);
    const Array2D oracle = divergence(f0);
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i)
            CHECK(t.val(div).at(0, 0, j, i) == doctest::Approx(oracle(j, i)).epsilon(1e-13));

    fd_check_field(g, f0, [&](Tape& tt, FieldVars vv) {
        Var d = op_divergence(tt, vv, g);
        return sum_all(tt, hadamard(tt, d, d));
    });
}

TEST_CASE("upsample/downsample ops: values match the plain versions") {
    const Grid cg = Grid::uniform(6, 4, 0.0, 0.0, 0.5, 0.5, DomainTag::Truncated);
    const Grid fg = refined_grid(cg, 4);
    const DownsampleMap map = build_downsample_map(fg, cg);
    const StaggeredField c0 = random_field(cg);

    Tape t;
    FieldVars in = field_leaves(t, c0, false);
    FieldVars up = op_upsample(t, in, cg, fg, 4);
    StaggeredField plain(fg);
    upsample(c0, plain, 4);
    CHECK(field_values(t, up, fg).u == plain.u);
    CHECK(field_values(t, up, fg).v == plain.v);

    FieldVars down = op_downsample(t, up, map);
    const StaggeredField rt = downsample(plain, map);
    CHECK(field_values(t, down, cg).u == rt.u);
    CHECK(field_values(t, down, cg).v == rt.v);
}

TEST_CASE("upsample/downsample gradient passes finite differences") {
    const Grid cg = Grid::uniform(5, 4, 0.0, 0.0, 0.5, 0.5, DomainTag::Truncated);
    const Grid fg = refined_grid(cg, 3);
    const DownsampleMap map = build_downsample_map(fg, cg);
    const StaggeredField c0 = random_field(cg);
    fd_check_field(cg, c0, [&](Tape& t, FieldVars in) {
        FieldVars up = op_upsample(t, in, cg, fg, 3);
        FieldVars down = op_downsample(t, up, map);
        return field_norm2(t, down);
    });
}

TEST_CASE("marker ops: interp/spread/total agree with the plain kernels") {
    const Grid g = Grid::uniform(30, 24, 0.0, 0.0, 0.125, 0.125);
    LagrangianBoundary b = cylinder_markers(1.0, 12, 1.9, 1.5);
    bind_measure(b, 0.125);
    const StaggeredField f0 = random_field(g);

    Tape t;
    FieldVars in = field_leaves(t, f0, false);
    Var interp = op_interp_markers(t, in, g, b);
    const std::vector<Vec2> oracle = interpolate_to_markers(f0, b);
    for (int m = 0; m < b.n_markers(); ++m) {
        CHECK(t.val(interp).at(0, 0, m, 0) == doctest::Approx(oracle[m].x).epsilon(1e-13));
        CHECK(t.val(interp).at(0, 1, m, 0) == doctest::Approx(oracle[m].y).epsilon(1e-13));
    }

    // Spread the interpolated values back and compare against spread_forcing.
    FieldVars body = op_spread(t, interp, g, b);
    const FaceVec plain = spread_forcing(oracle, b, g);
    const StaggeredField got = field_values(t, body, g);
    for (size_t k = 0; k < got.u.size(); ++k)
        CHECK(got.u.raw()[k] == doctest::Approx(plain.u.raw()[k]).epsilon(1e-12));

    Var total = op_marker_total(t, interp, b, -1.0);
    double ex = 0.0;
    for (int m = 0; m < b.n_markers(); ++m) ex -= oracle[m].x * b.ds[m];
    CHECK(t.val(total).at(0, 0, 0, 0) == doctest::Approx(ex).epsilon(1e-13));
}

TEST_CASE("marker op gradients pass finite differences") {
    const Grid g = Grid::uniform(26, 20, 0.0, 0.0, 0.125, 0.125);
    LagrangianBoundary b = cylinder_markers(0.9, 9, 1.6, 1.25);
    bind_measure(b, 0.125);
    const StaggeredField f0 = random_field(g);
    fd_check_field(g, f0, [&](Tape& t, FieldVars in) {
        Var interp = op_interp_markers(t, in, g, b);
        FieldVars body = op_spread(t, interp, g, b);
        Var total = op_marker_total(t, interp, b, -1.0);
        Var a = field_norm2(t, body);
        Var bb = sum_all(t, hadamard(t, total, total));
        return add(t, a, bb);
    });
}

TEST_CASE("taped interp/spread adjointness through backward") {
    // For a linear op A, the gradient of <c, A x> w.r.t. x is A^T c. With
    // A = interp and A^T expected to be spreading with ds -> h^2 weights, a
    // random inner product closes the loop.
    const Grid g = Grid::uniform(24, 24, 0.0, 0.0, 0.125, 0.125);
    LagrangianBoundary b = cylinder_markers(0.8, 7, 1.5, 1.5);
    bind_measure(b, 0.125);
    const StaggeredField f0 = random_field(g);
    Tensor c(1, 2, b.n_markers(), 1);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (double& v : c.data) v = d(rng);

    Tape t;
    FieldVars in = field_leaves(t, f0, true);
    Var interp = op_interp_markers(t, in, g, b);
    Var loss = sum_all(t, hadamard(t, interp, t.leaf(c)));
    t.backward(loss);

    // <grad, x> must equal <c, interp(x)> (Euler identity for linear maps).
    double lhs = 0.0;
    for (size_t k = 0; k < f0.u.size(); ++k) lhs += t.grad(in.u).data[k] * f0.u.raw()[k];
    for (size_t k = 0; k < f0.v.size(); ++k) lhs += t.grad(in.v).data[k] * f0.v.raw()[k];
    double rhs = 0.0;
    for (size_t k = 0; k < t.val(interp).size(); ++k)
        rhs += t.val(interp).data[k] * c.data[k];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

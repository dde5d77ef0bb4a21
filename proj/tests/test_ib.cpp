#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "ibflow/ib.hpp"
#include "ibflow/stencils.hpp"

using namespace ibflow;

namespace {
std::mt19937_64 rng(777);

void randomize(StaggeredField& f) {
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (double& v : f.u.raw()) v = d(rng);
    for (double& v : f.v.raw()) v = d(rng);
}
} // namespace

TEST_CASE("phi: branch values and support") {
    CHECK(phi3(0.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(phi3(0.5) == doctest::Approx(0.5).epsilon(1e-15));  // (1/6)(3.5 - sqrt(0.25))
    CHECK(phi3(1.5) == 0.0);
    CHECK(phi3(2.0) == 0.0);
    CHECK(phi3(7.3) == 0.0);
    CHECK_THROWS_AS(phi3(-0.1), ContractViolation);
}

TEST_CASE("phi: continuity at the branch points") {
    const double e = 1e-8;
    CHECK(std::abs(phi3(0.5 - e) - phi3(0.5 + e)) < 1e-6);
    CHECK(std::abs(phi3(1.5 - e)) < 1e-6);
}

TEST_CASE("delta_h: tensor product and support bound") {
    const double h = 0.25;
    CHECK(delta_h(0.0, 0.0, h) ==
          doctest::Approx((2.0 / 3.0) * (2.0 / 3.0) / (h * h)).epsilon(1e-14));
    CHECK(delta_h(1.5 * h, 0.1 * h, h) == 0.0);
    CHECK(delta_h(2.0 * h, 0.0, h) == 0.0);
    CHECK(delta_h(0.3 * h, 1.7 * h, h) == 0.0);
}

TEST_CASE("delta_h: partition of unity over random interior offsets") {
    const double h = 0.5;
    std::uniform_real_distribution<double> d(-2.0, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
        const double X = d(rng), Y = d(rng);
        double sum = 0.0;
        for (int j = -8; j <= 8; ++j)
            for (int i = -8; i <= 8; ++i) sum += delta_h(i * h - X, j * h - Y, h) * h * h;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("cylinder markers: uniform spacing, radius, measure") {
    const LagrangianBoundary b4 = cylinder_markers(2.0, 4, 1.0, -1.0);
    CHECK(b4.x[0] == doctest::Approx(2.0));
    CHECK(b4.y[1] == doctest::Approx(0.0));
    CHECK(b4.x[2] == doctest::Approx(0.0));
    CHECK(b4.y[3] == doctest::Approx(-2.0));

    LagrangianBoundary b = cylinder_markers(1.0, 196, 0.0, 0.0);
    CHECK(b.arc_spacing == doctest::Approx(M_PI / 196.0).epsilon(1e-12));
    CHECK(196.0 * b.arc_spacing == doctest::Approx(M_PI).epsilon(1e-10));
    for (int m = 0; m < 196; ++m) {
        const double r = std::hypot(b.x[m], b.y[m]);
        CHECK(r == doctest::Approx(0.5).epsilon(1e-14));
    }
    for (int m = 1; m < 196; ++m) {
        const double a1 = std::atan2(b.y[m], b.x[m]);
        const double a0 = std::atan2(b.y[m - 1], b.x[m - 1]);
        double da = a1 - a0;
        if (da < 0) da += 2.0 * M_PI;
        CHECK(da == doctest::Approx(2.0 * M_PI / 196.0).epsilon(1e-10));
    }
    bind_measure(b, 0.1);
    for (double ds : b.ds) CHECK(ds == doctest::Approx(0.1 * M_PI / 196.0).epsilon(1e-14));
}

TEST_CASE("rotation schedule and marker targets") {
    RotationSchedule s{4.0, 0.2};
    CHECK(s.omega_at(0.0) == 0.0);
    CHECK(s.omega_at(5.0) == doctest::Approx(0.0).epsilon(1e-12));  // sin(2 pi) = 0
    CHECK(s.omega_at(1.25) == doctest::Approx(4.0).epsilon(1e-12));

    LagrangianBoundary b = cylinder_markers(1.0, 8, 2.0, 3.0);
    const std::vector<Vec2> t0 = marker_targets(b, RotationSchedule{0.0, 0.2}, 3.0);
    for (const Vec2& t : t0) {
        CHECK(t.x == 0.0);
        CHECK(t.y == 0.0);
    }
    // Rigid rotation at omega = 1: marker at (cx + D/2, cy) moves with (0, D/2).
    const std::vector<Vec2> t1 = marker_targets(b, 1.0);
    CHECK(t1[0].x == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(t1[0].y == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("interpolation: partition of unity and linear exactness") {
    const Grid g = Grid::uniform(40, 40, 0.0, 0.0, 0.1, 0.1);
    StaggeredField f(g);
    f.fill(1.0, 0.0);
    LagrangianBoundary b = cylinder_markers(1.0, 24, 2.0, 2.0);
    bind_measure(b, 0.1);
    std::vector<Vec2> uk = interpolate_to_markers(f, b);
    for (const Vec2& u : uk) {
        CHECK(u.x == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(u.y == doctest::Approx(0.0).epsilon(1e-12));
    }

    for (int j = 0; j < 40; ++j)
        for (int i = 0; i <= 40; ++i) f.u(j, i) = g.xf(i);
    uk = interpolate_to_markers(f, b);
    for (int m = 0; m < b.n_markers(); ++m)
        CHECK(uk[m].x == doctest::Approx(b.x[m]).epsilon(1e-10));
}

TEST_CASE("interpolation matches the brute-force triple loop") {
    const Grid g = Grid::uniform(30, 24, 0.0, 0.0, 0.125, 0.125);
    StaggeredField f(g);
    randomize(f);
    LagrangianBoundary b = cylinder_markers(0.9, 17, 1.9, 1.5);
    bind_measure(b, 0.125);
    const std::vector<Vec2> uk = interpolate_to_markers(f, b);
    const double h = 0.125;
    for (int m = 0; m < b.n_markers(); ++m) {
        double ex = 0.0, ey = 0.0;
        for (int j = 0; j < g.ny(); ++j)
            for (int i = 0; i <= g.nx(); ++i)
                ex += f.u(j, i) * delta_h(g.xf(i) - b.x[m], g.yc(j) - b.y[m], h) * h * h;
        for (int j = 0; j <= g.ny(); ++j)
            for (int i = 0; i < g.nx(); ++i)
                ey += f.v(j, i) * delta_h(g.xc(i) - b.x[m], g.yf(j) - b.y[m], h) * h * h;
        CHECK(uk[m].x == doctest::Approx(ex).epsilon(1e-13));
        CHECK(uk[m].y == doctest::Approx(ey).epsilon(1e-13));
    }
}

TEST_CASE("marker forcing: direct evaluation and scaling") {
    const std::vector<Vec2> target{{0.0, 0.0}};
    const std::vector<Vec2> interp{{1.0, 0.0}};
    std::vector<Vec2> f = marker_forcing(target, interp, 0.5);
    CHECK(f[0].x == doctest::Approx(-2.0));
    CHECK(f[0].y == 0.0);
    std::vector<Vec2> f2 = marker_forcing(target, interp, 1.0);
    CHECK(f2[0].x == doctest::Approx(0.5 * f[0].x));
    std::vector<Vec2> f3 = marker_forcing(interp, interp, 0.25);
    CHECK(f3[0].x == 0.0);
    CHECK(f3[0].y == 0.0);
}

TEST_CASE("spreading: single-marker stamp and momentum identity") {
    const Grid g = Grid::uniform(32, 32, 0.0, 0.0, 0.1, 0.1);
    LagrangianBoundary b;
    b.x = {1.63};
    b.y = {1.57};
    b.cx = 1.63;
    b.cy = 1.57;
    b.radius = 0.0;
    b.arc_spacing = 1.0;
    bind_measure(b, 0.1);

    const FaceVec out = spread_forcing({{1.0, 0.0}}, b, g);
    const double h = 0.1;
    for (int j = 0; j < 32; ++j)
        for (int i = 0; i <= 32; ++i)
            CHECK(out.u(j, i) ==
                  doctest::Approx(b.ds[0] * delta_h(g.xf(i) - b.x[0], g.yc(j) - b.y[0], h))
                      .epsilon(1e-12));

    double total = 0.0;
    for (int j = 0; j < 32; ++j)
        for (int i = 0; i <= 32; ++i) total += out.u(j, i) * h * h;
    CHECK(total == doctest::Approx(b.ds[0]).epsilon(1e-10));
}

TEST_CASE("spreading matches the brute-force double loop") {
    const Grid g = Grid::uniform(28, 26, 0.0, 0.0, 0.125, 0.125);
    LagrangianBoundary b = cylinder_markers(0.8, 11, 1.7, 1.6);
    bind_measure(b, 0.125);
    std::vector<Vec2> forces(b.n_markers());
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (Vec2& f : forces) f = {d(rng), d(rng)};
    const FaceVec out = spread_forcing(forces, b, g);
    const double h = 0.125;
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i <= g.nx(); ++i) {
            double e = 0.0;
            for (int m = 0; m < b.n_markers(); ++m)
                e += forces[m].x * delta_h(g.xf(i) - b.x[m], g.yc(j) - b.y[m], h) * b.ds[m];
            CHECK(out.u(j, i) == doctest::Approx(e).epsilon(1e-13));
        }
}

TEST_CASE("interpolate and spread are adjoint through the shared kernel") {
    const Grid g = Grid::uniform(26, 22, 0.0, 0.0, 0.2, 0.2);
    LagrangianBoundary b = cylinder_markers(1.1, 13, 2.6, 2.2);
    bind_measure(b, 0.2);
    StaggeredField a(g);
    randomize(a);
    std::vector<Vec2> c(b.n_markers());
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (Vec2& f : c) f = {d(rng), d(rng)};

    // <spread(c), a>_grid h^2 == <c, interp(a)>_markers ds.
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
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("accumulate_force: zero, direct value, spreading consistency") {
    CHECK(accumulate_force({}, {}).x == 0.0);
    const Vec2 f = accumulate_force({{{1.0, 0.0}}}, {0.1});
    CHECK(f.x == doctest::Approx(-0.1).epsilon(1e-15));
    CHECK(f.y == 0.0);

    // F equals minus the spread momentum divided by dt, summed over cycles.
    const Grid g = Grid::uniform(30, 30, 0.0, 0.0, 0.1, 0.1);
    LagrangianBoundary b = cylinder_markers(1.0, 19, 1.5, 1.5);
    bind_measure(b, 0.1);
    StaggeredField field(g);
    randomize(field);
    const double dt = 0.37;
    StaggeredField work = field;
    const std::vector<Vec2> targets(b.n_markers(), Vec2{0.3, -0.2});
    IBResult res = ib_correct(work, b, targets, {3}, dt);

    double mom_x = 0.0;
    const double h2 = 0.01;
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i <= g.nx(); ++i) mom_x += (work.u(j, i) - field.u(j, i)) * h2;
    CHECK(mom_x == doctest::Approx(-res.force.x * dt).epsilon(1e-10));
}

TEST_CASE("ib_correct: fixed point, single-cycle oracle, residual decrease") {
    const Grid g = Grid::uniform(40, 40, 0.0, 0.0, 0.1, 0.1);
    LagrangianBoundary b = cylinder_markers(1.0, 21, 2.0, 2.0);
    bind_measure(b, 0.1);

    StaggeredField zero(g);
    const std::vector<Vec2> zero_targets(b.n_markers(), Vec2{0.0, 0.0});
    StaggeredField w = zero;
    IBResult r = ib_correct(w, b, zero_targets, {5}, 0.5);
    CHECK(r.force.x == 0.0);
    CHECK(r.force.y == 0.0);
    CHECK(w.u == zero.u);
    CHECK(w.v == zero.v);

    // M = 1 equals one manual gather-force-spread-update application.
    StaggeredField f(g);
    randomize(f);
    StaggeredField manual = f;
    const std::vector<Vec2> targets = marker_targets(b, 1.3);
    const double dt = 0.5;
    {
        const std::vector<Vec2> interp = interpolate_to_markers(manual, b);
        const std::vector<Vec2> forces = marker_forcing(targets, interp, dt);
        const FaceVec body = spread_forcing(forces, b, *manual.grid);
        for (int j = 0; j < g.ny(); ++j)
            for (int i = 0; i <= g.nx(); ++i) manual.u(j, i) += dt * body.u(j, i);
        for (int j = 0; j <= g.ny(); ++j)
            for (int i = 0; i < g.nx(); ++i) manual.v(j, i) += dt * body.v(j, i);
    }
    StaggeredField one = f;
    ib_correct(one, b, targets, {1}, dt);
    CHECK(one.u == manual.u);
    CHECK(one.v == manual.v);

    // Uniform ambient flow past a stationary cylinder: the no-slip residual
    // strictly decreases over the five cycles.
    StaggeredField amb(g);
    amb.fill(1.0, 0.0);
    IBResult conv = ib_correct(amb, b, zero_targets, {5}, 0.5);
    REQUIRE(conv.residuals.size() == 5);
    for (size_t m = 1; m < conv.residuals.size(); ++m)
        CHECK(conv.residuals[m] < conv.residuals[m - 1]);
}

TEST_CASE("markers too close to the hull are rejected") {
    const Grid g = Grid::uniform(10, 10, 0.0, 0.0, 0.1, 0.1);
    StaggeredField f(g);
    LagrangianBoundary b = cylinder_markers(1.9, 8, 0.5, 0.5);  // touches the domain edge
    bind_measure(b, 0.1);
    CHECK_THROWS_AS(interpolate_to_markers(f, b), ContractViolation);
}

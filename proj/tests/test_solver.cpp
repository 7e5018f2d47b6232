#include <doctest.h>

#include <cmath>
#include <random>

#include "lagfield/datagen.hpp"
#include "lagfield/del.hpp"
#include "lagfield/errors.hpp"
#include "lagfield/solver.hpp"
#include "lagfield/twave.hpp"
#include "oracles.hpp"

using namespace lagfield;
using D2 = ad::Dual2<double>;

namespace {

const Mesh kMesh(0.5, 1.0, 20, 20);

// Wave density with the potential evaluated at the time midpoint,
// kappa/4 ((a+b)/2)^4, so the Newton problem for b is genuinely nonlinear.
ExpressionDensity midpoint_quartic(double dt, double dx, double kappa) {
    return ExpressionDensity(1, [=](std::span<const D2> a, std::span<const D2> b, std::span<const D2> c) {
        const D2 vt = (b[0] - a[0]) / dt, vx = (c[0] - a[0]) / dx, mid = (a[0] + b[0]) * 0.5;
        return vt * vt * 0.5 - vx * vx * 0.5 - ad::pow(mid, 4) * (kappa / 4.0);
    }, "midpoint-quartic");
}

}  // namespace

TEST_CASE("one Newton step solves the affine wave problem") {
    const WaveDensity L(kMesh.dt(), kMesh.dx());
    const double ui = 0.4, uip = -0.1, uim = 0.3, uimp = 0.2, uim1 = 0.5, uipm = 0.25;
    const double n[] = {ui, uip, uim, uimp, uim1, uipm};
    const Neighbours nb{std::span(n, 1), std::span(n + 1, 1), std::span(n + 2, 1),
                        std::span(n + 3, 1), std::span(n + 4, 1), std::span(n + 5, 1)};
    const double guess[] = {ui};
    const NewtonResult r = newton_step_solve(L, nb, guess, SolverConfig{});
    const double dt = kMesh.dt(), dx = kMesh.dx();
    const double closed = 2 * ui - uim + (dt * dt) / (dx * dx) * (uim1 - 2 * ui + uip) - dt * dt * ui;
    CHECK(r.report.iterations == 1);
    CHECK(r.value[0] == doctest::Approx(closed).epsilon(1e-13));
    CHECK(r.report.final_residual_norm <= r.report.tolerance_used);
    CHECK(r.report.rho_star == doctest::Approx(dt * dt).epsilon(1e-15));
}

TEST_CASE("Newton on a nonlinear density converges quadratically") {
    const double dt = 0.5, dx = 0.5, kappa = 8.0;
    const ExpressionDensity L = midpoint_quartic(dt, dx, kappa);
    const double n[] = {0.9, 0.7, 0.6, 0.5, 0.8, 1.0};
    const Neighbours nb{std::span(n, 1), std::span(n + 1, 1), std::span(n + 2, 1),
                        std::span(n + 3, 1), std::span(n + 4, 1), std::span(n + 5, 1)};
    // Independent residual in long double: the three terms written out.
    auto R = [&](long double x) {
        const long double a = n[0], c = n[1], pa = n[2], pc = n[3], la = n[4], lb = n[5];
        const long double DT = dt, DX = dx;
        const long double t1 = (a - pa) / (DT * DT) - kappa / 2.0L * std::pow((pa + a) / 2.0L, 3);
        const long double t2 = -(x - a) / (DT * DT) + (c - a) / (DX * DX) - kappa / 2.0L * std::pow((a + x) / 2.0L, 3);
        const long double t3 = -(a - la) / (DX * DX);
        (void)lb;
        return t1 + t2 + t3;
    };
    const long double xstar = oracle::bisect(R, -10.0L, 10.0L);
    const double guess[] = {static_cast<double>(xstar) + 0.6};
    SolverConfig cfg;
    cfg.residual_tolerance = 1e-14;
    const NewtonResult r = newton_step_solve(L, nb, guess, cfg);
    CHECK(r.report.iterations >= 3);
    CHECK(std::abs(r.value[0] - static_cast<double>(xstar)) <= 1e-14);

    std::vector<double> e;
    for (double x : r.report.iterates) e.push_back(std::abs(static_cast<double>(x - xstar)));
    // theta: Lipschitz constant of the mixed derivative, 3 kappa / 8 |a + x| over the visited hull.
    double hull = 0.0;
    for (double x : r.report.iterates) hull = std::max(hull, std::abs(n[0] + x));
    const double theta = 3.0 * kappa / 8.0 * hull;
    for (std::size_t k = 0; k + 1 < e.size() && e[k + 1] > 1e-13; ++k)
        CHECK(e[k + 1] <= r.report.rho_star * theta * e[k] * e[k]);
    // Fitted log-log slope before the floating-point floor.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (std::size_t k = 0; k + 1 < e.size() && e[k + 1] > 1e-13; ++k, ++m) {
        const double x = std::log(e[k]), y = std::log(e[k + 1]);
        sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    REQUIRE(m >= 2);
    CHECK((m * sxy - sx * sy) / (m * sxx - sx * sx) >= 1.8);
}

TEST_CASE("Newton failure modes") {
    const double n[] = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    const Neighbours nb{std::span(n, 1), std::span(n + 1, 1), std::span(n + 2, 1),
                        std::span(n + 3, 1), std::span(n + 4, 1), std::span(n + 5, 1)};
    const double guess[] = {0.0};
    const ExpressionDensity degenerate(1, [](std::span<const D2> a, std::span<const D2> b, std::span<const D2> c) {
        return a[0] * a[0] + c[0] * b[0] * b[0] * 0.0 + a[0];
    });
    CHECK_THROWS_AS(newton_step_solve(degenerate, nb, guess, SolverConfig{}), SingularJacobian);
    SolverConfig one;
    one.max_iterations = 1;
    CHECK_THROWS_AS(newton_step_solve(midpoint_quartic(0.5, 0.5, 8.0), nb, guess, one), NoConvergence);
    SolverConfig bad;
    bad.residual_tolerance = 0.0;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("propagation under the wave density reproduces exact solutions") {
    const WaveDensity L(kMesh.dt(), kMesh.dx());
    GenConfig g;
    const FieldGrid ref = generate_trajectory(g, 0);
    const PropagationResult P = propagate(L, ref.row(0), ref.row(1), kMesh, SolverConfig{});
    CHECK(sup_norm_diff(P.grid, ref) <= 1e-10);
    CHECK(std::equal(ref.row(0).begin(), ref.row(0).end(), P.grid.row(0).begin()));
    CHECK(std::equal(ref.row(1).begin(), ref.row(1).end(), P.grid.row(1).begin()));
    CHECK(P.max_iterations == 1);
    CHECK(P.max_rho_star == doctest::Approx(kMesh.dt() * kMesh.dt()).epsilon(1e-14));
    for (const NewtonReport& r : P.reports) CHECK(r.final_residual_norm <= r.tolerance_used);
    CHECK(del_field(L, P.grid).max_norm() <= 10.0 * 1e-12 * 4.0 / (kMesh.dt() * kMesh.dt()));

    // Exact travelling wave of mode 1.
    const ExactWave w = exact_wave_tw(1, 0.3, 0.8, kMesh);
    const FieldGrid tw = tw_grid(w.state, kMesh);
    CHECK(sup_norm_diff(propagate(L, tw.row(0), tw.row(1), kMesh, SolverConfig{}).grid, tw) <= 1e-10);
}

TEST_CASE("propagation of zero data stays zero") {
    const std::vector<double> zero(kMesh.M(), 0.0);
    const PropagationResult P = propagate(WaveDensity(kMesh.dt(), kMesh.dx()), zero, zero, kMesh, SolverConfig{});
    for (double v : P.grid.values()) CHECK(v == 0.0);
}

TEST_CASE("propagation closes the periodic row seam and is deterministic") {
    // Coupling between b and c makes u^{i+1}_{j-1} enter DEL^i_j.
    const double dt = kMesh.dt(), dx = kMesh.dx();
    const ExpressionDensity L(1, [=](std::span<const D2> a, std::span<const D2> b, std::span<const D2> c) {
        const D2 vt = (b[0] - a[0]) / dt, vx = (c[0] - a[0]) / dx;
        return vt * vt * 0.5 - vx * vx * 0.5 - a[0] * a[0] * 0.5 + b[0] * c[0] * 5.0 + ad::pow(b[0], 4) * 2.0;
    });
    GenConfig g;
    const FieldGrid ref = generate_trajectory(g, 1);
    SolverConfig cfg;
    cfg.initial_guess = GuessStrategy::linear_extrapolation;
    const PropagationResult P = propagate(L, ref.row(0), ref.row(1), kMesh, cfg);
    bool resweep = false;
    for (int s : P.sweeps) resweep = resweep || s > 2;
    CHECK(resweep);
    // Every DEL equation holds with the final neighbours, including j = 0.
    const ResidualField R = del_field(L, P.grid);
    double tol = 0.0;
    for (const NewtonReport& r : P.reports) tol = std::max(tol, r.tolerance_used);
    CHECK(R.max_norm() <= 10.0 * tol);
    CHECK(propagate(L, ref.row(0), ref.row(1), kMesh, cfg).grid == P.grid);
}

TEST_CASE("propagation errors carry the failing point") {
    // L = a: every residual is 1 and the mixed block vanishes.
    const ExpressionDensity lin(1, [](std::span<const D2> a, std::span<const D2>, std::span<const D2>) { return a[0]; });
    const std::vector<double> zero(kMesh.M(), 0.0);
    try {
        propagate(lin, zero, zero, kMesh, SolverConfig{});
        FAIL("expected SingularJacobian");
    } catch (const SingularJacobian& e) {
        CHECK(std::string(e.what()).find("(i=1, j=0)") != std::string::npos);
    }
    CHECK_THROWS_AS(propagate(lin, std::vector<double>(3), zero, kMesh, SolverConfig{}), MeshMismatch);
}

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "blowup/io.hpp"
#include "blowup/wave_solver.hpp"
#include "oracles.hpp"

using namespace blowup;

namespace {

const Model kCubic({.p = 3, .a = 2});
const Model kCubicOff({.p = 3, .a = 2, .perturbed = false});

double state_at(const RunResult& r, std::size_t snap, std::size_t i) { return r.snapshots.at(snap).state.u.at(i); }

RunResult bump_run(std::size_t nx, double dt0)
{
    const Grid grid = Grid::line(-1.0, 1.0, nx);
    SolverConfig cfg;
    cfg.dt0 = dt0;
    return run_to_blowup(kCubic, grid, bump_data(grid, 5.0 * kCubic.kappa(), 0.2), cfg);
}

} // namespace

TEST(Step, ZeroIsEquilibrium)
{
    const Grid grid = Grid::line(-1, 1, 64);
    FieldState s = zero_data(grid);
    for (int k = 0; k < 10; ++k) s = step(kCubic, grid, s, 0.01);
    for (std::size_t i = 0; i < grid.n; ++i) {
        EXPECT_EQ(s.u[i], 0.0);
        EXPECT_EQ(s.ut[i], 0.0);
    }
    EXPECT_NEAR(s.t, 0.1, 1e-15);
}

TEST(Step, RejectsCflViolationAndSaturates)
{
    const Grid grid = Grid::line(-1, 1, 64);
    EXPECT_THROW(step(kCubic, grid, zero_data(grid), 0.5), ConfigError);
    FieldState hot = constant_data(grid, 1e120, 0.0);
    EXPECT_THROW(step(kCubic, grid, hot, 0.01), NumericalError);
}

TEST(Step, SpaceIndependentDataTrackOde)
{
    // Periodic, so the Laplacian vanishes and every node follows the ODE.
    const Grid grid = Grid::line(0, 1, 16);
    const double T_probe = 0.5;
    const auto ref = integrate_ode(kCubic, 1.0, 0.5, 1e3, 1e-5, {.cfl = 1e9, .max_steps = 50000});
    const std::size_t k_ref = 50000;
    ASSERT_NEAR(ref.t[k_ref], T_probe, 1e-9);
    std::vector<double> err;
    for (double dt0 : {0.02, 0.01, 0.005}) {
        SolverConfig cfg;
        cfg.dt0 = dt0;
        cfg.snapshot_times = {T_probe};
        cfg.t_stop = T_probe;
        const auto run = run_to_blowup(kCubic, grid, constant_data(grid, 1.0, 0.5), cfg);
        ASSERT_EQ(run.snapshots.size(), 1u);
        for (std::size_t i = 1; i < grid.n; ++i) EXPECT_EQ(state_at(run, 0, i), state_at(run, 0, 0));
        err.push_back(std::abs(state_at(run, 0, 3) - ref.v[k_ref]));
    }
    EXPECT_NEAR(err[0] / err[1], 4.0, 0.5);
    EXPECT_NEAR(err[1] / err[2], 4.0, 0.5);
}

TEST(Step, LinearPulseTranslatesAtUnitSpeed)
{
    // Tiny amplitude makes the nonlinearity negligible; u0 = g, ut = -g' moves right.
    auto g = [](double x) { return 1e-6 * std::exp(-std::pow(x / 0.1, 2)); };
    auto dg = [&](double x) { return -2.0 * x / 0.01 * g(x); };
    std::vector<double> err, mass_drift;
    for (std::size_t nx : {400, 800, 1600}) {
        const Grid grid = Grid::line(-1, 1, nx);
        FieldState s = zero_data(grid);
        for (std::size_t i = 0; i < nx; ++i) {
            s.u[i] = g(grid.x(i));
            s.ut[i] = -dg(grid.x(i));
        }
        SolverConfig cfg;
        cfg.dt0 = 0.25 * grid.dx;
        cfg.snapshot_times = {0.5, 2.0};
        cfg.t_stop = 2.0;
        const auto run = run_to_blowup(kCubicOff, grid, s, cfg);
        ASSERT_EQ(run.snapshots.size(), 2u);
        double e = 0.0, m0 = 0.0, m1 = 0.0;
        for (std::size_t i = 0; i < nx; ++i) {
            double xs = grid.x(i) - 0.5;
            if (xs < -1) xs += 2;
            e = std::max(e, std::abs(state_at(run, 0, i) - g(xs)));
            m0 += s.u[i] * s.u[i];
            m1 += state_at(run, 1, i) * state_at(run, 1, i);
        }
        err.push_back(e / 1e-6);
        mass_drift.push_back(std::abs(m1 / m0 - 1.0));
    }
    EXPECT_LT(err[0], 0.05);
    EXPECT_NEAR(err[0] / err[1], 4.0, 0.6);
    EXPECT_NEAR(err[1] / err[2], 4.0, 0.6);
    EXPECT_LT(mass_drift[2], mass_drift[0] / 8.0);
}

TEST(Step, RadialLinearWaveMatchesExactSolution)
{
    // N = 3: r u solves the 1-D wave equation, giving a closed form for data at rest.
    auto phi = [](double r) { return 1e-6 * std::exp(-std::pow(r / 0.2, 2)); };
    auto exact = [&](double r, double t) {
        if (r == 0.0) {
            const double h = 1e-6;
            return 0.5 * ((h + t) * phi(h + t) + (h - t) * phi(h - t)) / h;
        }
        return 0.5 * ((r + t) * phi(r + t) + (r - t) * phi(r - t)) / r;
    };
    std::vector<double> err;
    for (std::size_t nr : {201, 401}) {
        const Grid grid = Grid::radial(2.0, nr, 3);
        FieldState s = zero_data(grid);
        for (std::size_t i = 0; i < nr; ++i) s.u[i] = phi(grid.x(i));
        SolverConfig cfg;
        cfg.dt0 = 0.25 * grid.dx;
        cfg.snapshot_times = {0.3};
        cfg.t_stop = 0.3;
        const auto run = run_to_blowup(kCubicOff, grid, s, cfg);
        double e = 0.0;
        for (std::size_t i = 0; i < nr; ++i) e = std::max(e, std::abs(state_at(run, 0, i) - exact(grid.x(i), 0.3)));
        err.push_back(e / 1e-6);
    }
    EXPECT_LT(err[0], 0.02);
    EXPECT_GT(err[0] / err[1], 3.0);
}

TEST(Run, ZeroDataIsGloballyBounded)
{
    const Grid grid = Grid::line(-1, 1, 64);
    SolverConfig cfg;
    cfg.t_max = 1.0;
    const auto run = run_to_blowup(kCubic, grid, zero_data(grid), cfg);
    EXPECT_EQ(run.status, RunStatus::bounded);
    EXPECT_FALSE(run.blew_up());
    const auto surf = estimate_surface(grid, run.history, 3.0);
    EXPECT_TRUE(std::isinf(surf.T_min));
}

TEST(Run, SpaceIndependentBlowupGivesFlatSurface)
{
    const Grid grid = Grid::line(0, 1, 64);
    SolverConfig cfg;
    cfg.dt0 = 1e-3;
    const double v0 = 2.0;
    const auto run = run_to_blowup(kCubic, grid, ode_manifold_data(kCubic, grid, v0), cfg);
    ASSERT_EQ(run.status, RunStatus::blew_up);
    const auto surf = estimate_surface(grid, run.history, 3.0);
    const auto ode = fit_blowup(integrate_ode(kCubic, v0, manifold_velocity(kCubic, v0), 1e8, 1e-4), 3.0);
    for (double T : surf.T_of_x) EXPECT_NEAR(T / ode.T_est, 1.0, 1e-3);
    for (double T : surf.T_of_x) EXPECT_EQ(T, surf.T_of_x.front());
    EXPECT_EQ(surf.slope_max, 0.0);
    ASSERT_TRUE(surf.non_characteristic.has_value());
    EXPECT_TRUE(*surf.non_characteristic);
}

TEST(Run, BumpBlowsUpAtCentreAndRefines)
{
    const auto coarse = bump_run(2000, 1e-3);
    const auto fine = bump_run(4000, 5e-4);
    ASSERT_EQ(coarse.status, RunStatus::blew_up);
    ASSERT_EQ(fine.status, RunStatus::blew_up);
    const auto sc = estimate_surface(coarse.grid, coarse.history, 3.0);
    const auto sf = estimate_surface(fine.grid, fine.history, 3.0);
    EXPECT_NEAR(sc.x_star, 0.0, 1e-12);
    EXPECT_NEAR(sf.x_star, 0.0, 1e-12);
    EXPECT_NEAR(sc.T_min / sf.T_min, 1.0, 0.01);

    // Discrete 1-Lipschitz bound, with slack shrinking under refinement.
    auto worst_lip = [](const BlowupSurface& s) {
        double w = 0.0;
        for (std::size_t k = 1; k < s.x.size(); ++k)
            if (std::isfinite(s.T_of_x[k]) && std::isfinite(s.T_of_x[k - 1]))
                w = std::max(w, std::abs(s.T_of_x[k] - s.T_of_x[k - 1]) / (s.x[k] - s.x[k - 1]));
        return w;
    };
    EXPECT_LE(worst_lip(sf), 1.05);
    const auto ncc = non_characteristic_check(sc, 0.0, 0.05);
    const auto ncf = non_characteristic_check(sf, 0.0, 0.05);
    EXPECT_EQ(ncc.verdict, Verdict::yes);
    EXPECT_EQ(ncf.verdict, Verdict::yes);
    EXPECT_LT(ncf.slope, 1.0);

    // Far outside the light cone of the bump nothing reaches blow-up.
    for (std::size_t k = 0; k < sf.x.size(); ++k)
        if (std::abs(sf.x[k]) > 0.2 * 4 + sf.T_min) {
            EXPECT_TRUE(std::isinf(sf.T_of_x[k]));
        }
}

TEST(Run, FiniteSpeedOfPropagation)
{
    const double R = 0.2;
    const Grid grid = Grid::line(-2, 2, 4000);
    FieldState s = zero_data(grid);
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double x = grid.x(i);
        if (std::abs(x) < R) s.u[i] = 0.5 * std::pow(1 - x * x / (R * R), 6);
    }
    SolverConfig cfg;
    cfg.dt0 = 0.25 * grid.dx;
    cfg.snapshot_times = {0.5};
    cfg.t_stop = 0.5;
    const auto run = run_to_blowup(kCubic, grid, s, cfg);
    ASSERT_EQ(run.snapshots.size(), 1u);
    double outside = 0.0;
    for (std::size_t i = 0; i < grid.n; ++i)
        if (std::abs(grid.x(i)) > R + 0.5 + 10 * grid.dx) outside = std::max(outside, std::abs(state_at(run, 0, i)));
    EXPECT_LT(outside, 1e-9);
}

TEST(Run, SnapshotsAreExactTimesAndCropped)
{
    const Grid grid = Grid::line(-1, 1, 800);
    SolverConfig cfg;
    cfg.dt0 = 1e-3;
    cfg.snapshot_times = {0.05, 0.1};
    cfg.crop = CropWindow{0.0, 0.3, 0.02};
    cfg.t_stop = 0.1;
    const auto run = run_to_blowup(kCubic, grid, bump_data(grid, 1.0, 0.2), cfg);
    ASSERT_EQ(run.snapshots.size(), 2u);
    EXPECT_EQ(run.snapshots[0].state.t, 0.05);
    EXPECT_EQ(run.status, RunStatus::stopped);
    const auto& g = run.snapshots[1].grid;
    EXPECT_LE(g.x_min, -(0.2 + 0.02));
    EXPECT_GE(g.x_max(), 0.2 + 0.02);
    EXPECT_LT(g.n, grid.n);
    // Main trajectory unaffected by the auxiliary snapshot steps.
    SolverConfig plain = cfg;
    plain.snapshot_times.clear();
    const auto run2 = run_to_blowup(kCubic, grid, bump_data(grid, 1.0, 0.2), plain);
    EXPECT_EQ(run2.final_state.u, run.final_state.u);
}

TEST(Run, ConeRestrictionLeavesConeUnchanged)
{
    // Freezing everything outside the backward cone of (0, 0.41) must not change
    // the solution inside it.
    const Grid grid = Grid::line(-1, 1, 4000);
    SolverConfig cfg;
    cfg.probe_x = {0.0, 0.1};
    cfg.snapshot_times = {0.3, 0.4};
    cfg.crop = CropWindow{0.0, 0.41, 0.05};
    const auto full = run_to_blowup(kCubic, grid, bump_data(grid, 5.0 * kCubic.kappa(), 0.2), cfg);
    cfg.restrict_to_crop = true;
    const auto cone = run_to_blowup(kCubic, grid, bump_data(grid, 5.0 * kCubic.kappa(), 0.2), cfg);
    ASSERT_TRUE(cone.blew_up());
    ASSERT_EQ(cone.snapshots.size(), 2u);
    EXPECT_EQ(cone.steps, full.steps);
    for (std::size_t k = 0; k < 2; ++k) {
        const auto& a = full.snapshots[k].state;
        const auto& b = cone.snapshots[k].state;
        ASSERT_EQ(a.u.size(), b.u.size());
        const auto& g = cone.snapshots[k].grid;
        for (std::size_t i = 0; i < a.u.size(); ++i)
            if (std::abs(g.x(i)) <= 0.41 - b.t) {
                EXPECT_NEAR(b.u[i], a.u[i], 1e-12 * std::abs(a.u[i]) + 1e-14);
            }
    }
    EXPECT_EQ(cone.probes[0].u, full.probes[0].u);
}

TEST(EstimateT, SyntheticInverseLaw)
{
    std::vector<double> t, u;
    for (int i = 0; i < 200; ++i) {
        t.push_back(0.7 - 0.5 * std::pow(0.95, i));
        u.push_back(3.0 / (0.7 - t.back()));
    }
    const auto est = estimate_T(t, u, 3.0);
    EXPECT_EQ(est.quality, TQuality::ok);
    EXPECT_NEAR(est.T, 0.7, 1e-6);
}

TEST(EstimateT, Sentinels)
{
    std::vector<double> t, u;
    for (int i = 0; i < 10; ++i) {
        t.push_back(i);
        u.push_back(1.0 + i);
    }
    EXPECT_TRUE(std::isinf(estimate_T(t, u, 3.0).T));
    std::vector<double> t2, u2;
    for (int i = 0; i < 100; ++i) {
        t2.push_back(0.1 * i);
        u2.push_back(std::exp(0.05 * i) * (1.0 + 0.3 * std::sin(3.0 * i)));
    }
    const auto e = estimate_T(t2, u2, 3.0);
    EXPECT_TRUE(std::isinf(e.T));
    EXPECT_EQ(e.quality, TQuality::non_monotone);
    for (double& v : u2) v = 1e-3;
    EXPECT_EQ(estimate_T(t2, u2, 3.0).quality, TQuality::below_floor);
}

TEST(NonCharacteristic, FlatConeAndInconclusive)
{
    BlowupSurface flat, cone, sparse;
    for (int i = -20; i <= 20; ++i) {
        const double x = 0.01 * i;
        flat.x.push_back(x);
        flat.T_of_x.push_back(0.5);
        cone.x.push_back(x);
        cone.T_of_x.push_back(0.5 - std::abs(x));
        sparse.x.push_back(x);
        sparse.T_of_x.push_back(i == 0 || i == 1 ? 0.5 : std::numeric_limits<double>::infinity());
    }
    auto a = non_characteristic_check(flat, 0.0, 0.1);
    EXPECT_EQ(a.verdict, Verdict::yes);
    EXPECT_EQ(a.slope, 0.0);
    auto b = non_characteristic_check(cone, 0.0, 0.1);
    EXPECT_EQ(b.verdict, Verdict::no);
    EXPECT_NEAR(b.slope, 1.0, 1e-12);
    EXPECT_EQ(non_characteristic_check(sparse, 0.0, 0.1).verdict, Verdict::inconclusive);
}

TEST(SnapshotIo, ReingestBitExact)
{
    const Grid grid = Grid::line(-1, 1, 64);
    FieldState s = bump_data(grid, 1.234567890123, 0.3);
    for (std::size_t i = 0; i < grid.n; ++i) s.ut[i] = std::sin(double(i)) / 3.0;
    s.t = 0.1 + 1e-17;
    const Snapshot snap{grid, s};
    for (auto format : {io::SnapshotFormat::csv, io::SnapshotFormat::binary}) {
        std::ostringstream out;
        if (format == io::SnapshotFormat::csv) io::write_snapshot_csv(out, snap);
        else io::write_snapshot_binary(out, snap);
        const Snapshot back = format == io::SnapshotFormat::csv ? io::read_snapshot_csv(out.str())
                                                                : io::read_snapshot_binary(out.str());
        EXPECT_EQ(back.state.u, s.u);
        EXPECT_EQ(back.state.ut, s.ut);
        EXPECT_EQ(back.state.t, s.t);
        EXPECT_EQ(back.grid.dx, grid.dx);
        EXPECT_EQ(back.grid.x_min, grid.x_min);
        EXPECT_EQ(back.grid.n, grid.n);
    }
    EXPECT_THROW(io::read_snapshot_csv("nonsense\n"), ConfigError);
    EXPECT_THROW(io::read_snapshot_binary("BLSNAP01"), ConfigError);
}

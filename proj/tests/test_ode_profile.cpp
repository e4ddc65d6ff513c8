#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "blowup/ode_profile.hpp"
#include "oracles.hpp"

using namespace blowup;

namespace {

const double kSqrt2 = std::sqrt(2.0);

OdeTrajectory exact_run(double dt0)
{
    const Model model({.p = 3, .a = 2, .perturbed = false});
    return integrate_ode(model, kSqrt2, kSqrt2, 1e6, dt0);
}

} // namespace

TEST(IntegrateOde, TracksClosedForm)
{
    // A phase error dT shows up as a relative error dT/(1-t) in v, so pointwise
    // agreement up to v = 1e6 needs the step control refined along with dt0.
    const Model model({.p = 3, .a = 2, .perturbed = false});
    std::vector<double> worst;
    for (double scale : {1.0, 0.5, 0.25, 0.125, 0.0625}) {
        const auto traj = integrate_ode(model, kSqrt2, kSqrt2, 1e6, 1e-3 * scale, {.cfl = 0.1 * scale});
        ASSERT_TRUE(traj.blew_up());
        double w = 0.0;
        for (std::size_t i = 0; i < traj.size(); ++i)
            w = std::max(w, std::abs(traj.v[i] * (1.0 - traj.t[i]) / kSqrt2 - 1.0));
        worst.push_back(w);
    }
    for (std::size_t k = 1; k < worst.size(); ++k) EXPECT_LT(worst[k], worst[k - 1] / 8.0);
    EXPECT_LT(worst.back(), 1e-6);
}

TEST(IntegrateOde, TrajectoryInvariants)
{
    const Model model({.p = 3, .a = 2});
    const auto traj = integrate_ode(model, 10.0, 0.0, 1e8, 1e-3);
    ASSERT_TRUE(traj.blew_up());
    for (std::size_t i = 1; i < traj.size(); ++i) {
        EXPECT_GT(traj.t[i], traj.t[i - 1]);
        EXPECT_TRUE(std::isfinite(traj.v[i]));
        EXPECT_GT(traj.v[i], traj.v[i - 1]);
        EXPECT_GT(traj.vdot[i], 0.0);
    }
}

TEST(IntegrateOde, ZeroDataIsEquilibrium)
{
    const Model model({.p = 3, .a = 2, .perturbed = false});
    const auto traj = integrate_ode(model, 0.0, 0.0, 10.0, 1e-2, {.max_steps = 500});
    EXPECT_EQ(traj.stopped_at, OdeStop::max_steps);
    EXPECT_EQ(traj.size(), 501u);
    for (double v : traj.v) EXPECT_EQ(v, 0.0);
    EXPECT_THROW(fit_blowup(traj, 3.0), NumericalError);
}

TEST(IntegrateOde, BadArguments)
{
    const Model model({.p = 3, .a = 2});
    EXPECT_THROW(integrate_ode(model, 1.0, 0.0, 10.0, 0.0), ConfigError);
    EXPECT_THROW(integrate_ode(model, 20.0, 0.0, 10.0, 1e-3), ConfigError);
    EXPECT_THROW(integrate_ode(model, 0.5, 0.0, 1.0, 1e-3), ConfigError);
}

TEST(IntegrateOde, PerturbedBlowupTimeMatchesEnergyIntegral)
{
    const Model model({.p = 3, .a = 2});
    const auto traj = integrate_ode(model, 10.0, 0.0, 1e8, 1e-3);
    const auto fit = fit_blowup(traj, 3.0);
    const double T = oracle::ode_blowup_time(3, 2, true, 10.0, 0.0);
    EXPECT_NEAR(fit.T_est / T, 1.0, 1e-4);
}

TEST(IntegrateOde, RefiningDtMovesBlowupTimeQuadratically)
{
    const Model model({.p = 3, .a = 2});
    auto T_of = [&](double dt0) { return fit_blowup(integrate_ode(model, 1.0, 0.0, 1e8, dt0), 3.0).T_est; };
    for (double dt0 : {0.04, 0.02}) EXPECT_LT(std::abs(T_of(dt0) - T_of(dt0 / 2)), dt0 * dt0) << dt0;
}

TEST(IntegrateOde, HamiltonianConserved)
{
    const Model model({.p = 3, .a = 2, .perturbed = false});
    auto drift = [&](double dt0) {
        const auto traj = integrate_ode(model, 0.5, 0.1, 5.0, dt0, {.cfl = 1e9});
        auto H = [&](std::size_t i) {
            return 0.5 * traj.vdot[i] * traj.vdot[i] - std::pow(traj.v[i], 4) / 4.0;
        };
        double worst = 0.0;
        for (std::size_t i = 0; i < traj.size(); ++i) worst = std::max(worst, std::abs(H(i) - H(0)));
        return worst / traj.t.back();
    };
    const double d1 = drift(0.02), d2 = drift(0.01);
    EXPECT_LT(d1, 1e-3);
    EXPECT_LT(d2, d1 / 8.0);
}

TEST(FitBlowup, ExactSolution)
{
    const auto traj = exact_run(1e-3);
    const auto fit = fit_blowup(traj, 3.0);
    EXPECT_NEAR(fit.T_est, 1.0, 1e-4);
    EXPECT_NEAR(fit.exponent_est, 1.0, 0.01);
    EXPECT_NEAR(fit.kappa_est, kSqrt2, 0.01 * kSqrt2);
    EXPECT_GT(fit.T_est, traj.t.back());
}

TEST(FitBlowup, QuadraticOnManifold)
{
    const Model model({.p = 2, .a = 1.5, .perturbed = false});
    const double v0 = 6.0; // kappa for p = 2 and T = 1
    const auto traj = integrate_ode(model, v0, manifold_velocity(model, v0), 1e8, 1e-3);
    const auto fit = fit_blowup(traj, 2.0);
    EXPECT_NEAR(fit.exponent_est, 2.0, 0.02);
    EXPECT_NEAR(fit.T_est, oracle::ode_blowup_time(2, 1.5, false, v0, manifold_velocity(model, v0)), 1e-5);
}

TEST(FitBlowup, PerturbedRateUnchanged)
{
    const Model model({.p = 3, .a = 2});
    const auto traj = integrate_ode(model, 10.0, 0.0, 1e8, 1e-3);
    const auto fit = fit_blowup(traj, 3.0);
    EXPECT_NEAR(fit.exponent_est, 1.0, 0.05);
    EXPECT_NEAR(fit.kappa_est, kSqrt2, 0.05 * kSqrt2);
}

TEST(FitBlowup, SyntheticNoiseless)
{
    const double T = 0.8, beta = 1.3, A = 2.5;
    std::vector<double> t, v;
    for (int i = 0; i < 400; ++i) {
        const double tau = std::pow(10.0, -0.02 * i);
        t.push_back(T - 0.8 * tau);
        v.push_back(A * std::pow(T - t.back(), -beta));
    }
    const auto fit = fit_blowup(t, v, 2.0 / beta + 1.0);
    EXPECT_NEAR(fit.T_est, T, 1e-6);
    EXPECT_NEAR(fit.exponent_est, beta, 1e-6);
    EXPECT_NEAR(fit.amplitude_est, A, 1e-6);
}

TEST(FitBlowup, Errors)
{
    std::vector<double> t{0, 1, 2}, v{1, 2, 3};
    EXPECT_THROW(fit_blowup(t, v, 3.0), NumericalError);
    std::vector<double> tt, vv;
    for (int i = 0; i < 200; ++i) {
        tt.push_back(0.01 * i);
        vv.push_back(1.0 / (2.0 - tt.back()) * 1e3 * (i % 2 ? 1.0 : 1.01));
    }
    vv.front() = 1.0;
    EXPECT_THROW(fit_blowup(tt, vv, 3.0), NumericalError);
}

#pragma once

// The associated ODE v'' = |v|^{p-1} v + f(v): integration to blow-up and
// estimation of (T, rate exponent, amplitude) from the tail of a trajectory.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "blowup/errors.hpp"
#include "blowup/model.hpp"

namespace blowup {

enum class OdeStop { threshold, max_steps };

struct OdeTrajectory {
    std::vector<double> t;
    std::vector<double> v;
    std::vector<double> vdot;
    OdeStop stopped_at = OdeStop::max_steps;

    std::size_t size() const { return t.size(); }
    bool blew_up() const { return stopped_at == OdeStop::threshold; }
};

struct OdeOptions {
    /// Steps are halved until |v|^{(p-1)/2} dt <= cfl.
    double cfl = 0.1;
    std::size_t max_steps = 200000;
};

/// Classical RK4 with deterministic step halving keyed to the local time scale
/// |v|^{-(p-1)/2}; the step is never enlarged again.  Every accepted step is stored.
inline OdeTrajectory integrate_ode(const Model& model, double v0, double v1, double threshold,
                                   double dt0, const OdeOptions& opt = {})
{
    if (!(dt0 > 0.0)) throw ConfigError("integrate_ode: dt0 must be > 0");
    if (!(threshold > std::max(1.0, std::abs(v0))))
        throw ConfigError("integrate_ode: threshold must exceed max(1, |v0|)");

    const double half_pm1 = 0.5 * (model.p() - 1.0);
    auto rhs = [&](double v) { return model.source(v); };

    OdeTrajectory traj;
    traj.t.push_back(0.0);
    traj.v.push_back(v0);
    traj.vdot.push_back(v1);

    double t = 0.0, v = v0, w = v1, dt = dt0;
    for (std::size_t step = 0; step < opt.max_steps; ++step) {
        while (std::pow(std::abs(v), half_pm1) * dt > opt.cfl) dt *= 0.5;

        const double k1v = w, k1w = rhs(v);
        const double k2v = w + 0.5 * dt * k1w, k2w = rhs(v + 0.5 * dt * k1v);
        const double k3v = w + 0.5 * dt * k2w, k3w = rhs(v + 0.5 * dt * k2v);
        const double k4v = w + dt * k3w, k4w = rhs(v + dt * k3v);
        const double v_new = v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
        const double w_new = w + dt / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w);
        if (!std::isfinite(v_new) || !std::isfinite(w_new)) {
            // Saturation inside a step; the last finite point is the end of the record.
            traj.stopped_at = OdeStop::threshold;
            return traj;
        }
        t += dt;
        v = v_new;
        w = w_new;
        traj.t.push_back(t);
        traj.v.push_back(v);
        traj.vdot.push_back(w);
        if (std::abs(v) >= threshold) {
            traj.stopped_at = OdeStop::threshold;
            return traj;
        }
    }
    traj.stopped_at = OdeStop::max_steps;
    return traj;
}

/// Initial velocity putting v0 on the zero-energy (self-similar) blow-up branch:
/// v1^2 / 2 = |v0|^{p+1} / (p+1) + F(v0).
inline double manifold_velocity(const Model& model, double v0)
{
    const double G = std::pow(std::abs(v0), model.p() + 1.0) / (model.p() + 1.0) +
                     (model.perturbed() ? F_antiderivative(v0, model.params(), 1e-13) : 0.0);
    return std::sqrt(2.0 * std::max(G, 0.0));
}

struct BlowupFit {
    double T_est = 0.0;
    double exponent_est = 0.0;
    double amplitude_est = 0.0; ///< A of the joint fit v ~ A (T - t)^{-exponent}
    double kappa_est = 0.0;     ///< mean of v (T_est - t)^{2/(p-1)} over the fit window
    double residual = 0.0;      ///< RMS of the log-log residual
    std::size_t window_points = 0;
};

struct FitOptions {
    std::size_t min_window_points = 20;
    std::size_t min_growth_points = 50;
    int max_iterations = 200;
};

/// Joint Gauss-Newton fit of log|v| = log A - beta log(T - t) over the final
/// decade of growth.  T starts from the zero of a least-squares line through
/// |v|^{-(p-1)/2}, which is asymptotically linear in t.
inline BlowupFit fit_blowup(std::span<const double> t, std::span<const double> v, double p,
                            const FitOptions& opt = {})
{
    const std::size_t n = t.size();
    if (v.size() != n) throw ConfigError("fit_blowup: t and v sizes differ");
    if (n < 2) throw NumericalError("fit_blowup: insufficient points");

    const double v_start = std::abs(v.front());
    std::size_t grown = 0;
    for (double x : v)
        if (std::abs(x) > 10.0 * v_start) ++grown;
    if (grown < opt.min_growth_points)
        throw NumericalError("fit_blowup: insufficient points beyond 10x initial value");

    const double v_last = std::abs(v.back());
    std::size_t first = n - 1;
    while (first > 0 && std::abs(v[first - 1]) >= 0.1 * v_last) --first;
    const std::size_t m = n - first;
    if (m < opt.min_window_points) throw NumericalError("fit_blowup: insufficient points in final decade");
    for (std::size_t i = first + 1; i < n; ++i)
        if (!(std::abs(v[i]) > std::abs(v[i - 1])) || !(t[i] > t[i - 1]))
            throw NumericalError("fit_blowup: degenerate (non-monotone) tail");

    const double beta0 = 2.0 / (p - 1.0);
    // Line through z = |v|^{-1/beta0}:  z ~ c0 + c1 t, zero at T.
    double st = 0, sz = 0, stt = 0, stz = 0;
    for (std::size_t i = first; i < n; ++i) {
        const double z = std::pow(std::abs(v[i]), -1.0 / beta0);
        st += t[i];
        sz += z;
        stt += t[i] * t[i];
        stz += t[i] * z;
    }
    const double dm = double(m);
    const double c1 = (dm * stz - st * sz) / (dm * stt - st * st);
    const double c0 = (sz - c1 * st) / dm;
    const double t_last = t[n - 1];
    double T = (c1 < 0.0) ? -c0 / c1 : t_last + (t_last - t[first]);
    if (!(T > t_last)) T = t_last + 1e-3 * (t_last - t[first]) + 1e-300;
    double beta = beta0;
    double logA = 0.0;
    for (std::size_t i = first; i < n; ++i) logA += std::log(std::abs(v[i])) + beta * std::log(T - t[i]);
    logA /= dm;

    auto sse = [&](double TT, double bb, double la) {
        double s = 0.0;
        for (std::size_t i = first; i < n; ++i) {
            const double e = std::log(std::abs(v[i])) - (la - bb * std::log(TT - t[i]));
            s += e * e;
        }
        return s;
    };

    double current = sse(T, beta, logA);
    for (int it = 0; it < opt.max_iterations; ++it) {
        Eigen::Matrix3d JtJ = Eigen::Matrix3d::Zero();
        Eigen::Vector3d Jte = Eigen::Vector3d::Zero();
        for (std::size_t i = first; i < n; ++i) {
            const double tau = T - t[i];
            const double e = std::log(std::abs(v[i])) - (logA - beta * std::log(tau));
            const Eigen::Vector3d g(-beta / tau, -std::log(tau), 1.0); // d model / d(T, beta, logA)
            JtJ += g * g.transpose();
            Jte += g * e;
        }
        const Eigen::Vector3d step = JtJ.ldlt().solve(Jte);
        if (!step.allFinite()) break;
        double lambda = 1.0;
        bool accepted = false;
        for (int k = 0; k < 40; ++k) {
            const double T_try = T + lambda * step(0);
            if (T_try > t_last) {
                const double next = sse(T_try, beta + lambda * step(1), logA + lambda * step(2));
                if (next <= current) {
                    T = T_try;
                    beta += lambda * step(1);
                    logA += lambda * step(2);
                    const double improvement = current - next;
                    current = next;
                    accepted = true;
                    if (improvement <= 1e-30 + 1e-15 * current) it = opt.max_iterations;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if (!accepted) break;
    }

    BlowupFit fit;
    fit.T_est = T;
    fit.exponent_est = beta;
    fit.amplitude_est = std::exp(logA);
    fit.residual = std::sqrt(current / dm);
    fit.window_points = m;
    double ksum = 0.0;
    for (std::size_t i = first; i < n; ++i) ksum += std::abs(v[i]) * std::pow(T - t[i], beta0);
    fit.kappa_est = ksum / dm;
    if (!(fit.T_est > t_last) || !(fit.exponent_est > 0.0))
        throw NumericalError("fit_blowup: fit did not produce an admissible blow-up time");
    return fit;
}

inline BlowupFit fit_blowup(const OdeTrajectory& traj, double p, const FitOptions& opt = {})
{
    if (!traj.blew_up()) throw NumericalError("fit_blowup: trajectory did not reach the threshold");
    return fit_blowup(traj.t, traj.v, p, opt);
}

} // namespace blowup

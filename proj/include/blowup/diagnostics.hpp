#pragma once

// Verdicts over series of energy reports and over physical snapshots.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "blowup/energy.hpp"
#include "blowup/errors.hpp"
#include "blowup/interp.hpp"
#include "blowup/model.hpp"
#include "blowup/wave_solver.hpp"

namespace blowup {

struct DiagnosticsConfig {
    double S1 = 1.0;
    std::optional<double> theta;      ///< empty means choose automatically
    std::optional<double> tolerance;  ///< absolute slack; empty means tolerance_factor * ds^2 * max|H|
    double tolerance_factor = 10.0;
    double theta_cap = 1e6;
    double theta_resolution = 1e-3;

    void validate() const
    {
        if (!(S1 >= 1.0)) throw ConfigError("diagnostics: S1 must be >= 1");
        if (tolerance && !(*tolerance >= 0.0)) throw ConfigError("diagnostics: tolerance must be >= 0");
        if (theta && !(*theta >= 0.0)) throw ConfigError("diagnostics: theta must be >= 0");
        if (!(tolerance_factor >= 0.0)) throw ConfigError("diagnostics: tolerance_factor must be >= 0");
    }
};

struct Violation {
    double s1 = 0.0;
    double s2 = 0.0;
    double excess = 0.0; ///< H(s2) - H(s1) + alpha int D - tolerance, > 0
};

struct MonotonicityResult {
    std::vector<Violation> violations;
    double worst_excess = -std::numeric_limits<double>::infinity(); ///< max over pairs of lhs - tolerance
    double tolerance = 0.0;
    std::size_t pairs = 0;
    bool pass() const { return violations.empty(); }
};

namespace detail {

inline std::vector<const EnergyReport*> from_S1(std::span<const EnergyReport> reports, double S1)
{
    std::vector<const EnergyReport*> out;
    for (const auto& r : reports) {
        if (r.s < S1) continue;
        if (!out.empty() && !(r.s > out.back()->s)) throw ConfigError("diagnostics: reports must increase in s");
        out.push_back(&r);
    }
    return out;
}

} // namespace detail

/// Checks H(s2) - H(s1) + alpha int_{s1}^{s2} D ds <= tolerance for every adjacent
/// pair at s >= S1.  The integral of D is the trapezoid of the two endpoint values.
inline MonotonicityResult theorem1_monotonicity(std::span<const EnergyReport> reports, const Model& model,
                                                const DiagnosticsConfig& cfg)
{
    cfg.validate();
    const auto rs = detail::from_S1(reports, cfg.S1);
    MonotonicityResult out;
    if (rs.size() < 2) return out;
    double max_H = 0.0, max_ds = 0.0;
    for (std::size_t k = 0; k < rs.size(); ++k) {
        max_H = std::max(max_H, std::abs(rs[k]->H));
        if (k) max_ds = std::max(max_ds, rs[k]->s - rs[k - 1]->s);
    }
    out.tolerance = cfg.tolerance ? *cfg.tolerance : cfg.tolerance_factor * max_ds * max_ds * max_H;
    const double alpha = model.alpha();
    for (std::size_t k = 1; k < rs.size(); ++k) {
        const EnergyReport& a = *rs[k - 1];
        const EnergyReport& b = *rs[k];
        const double lhs = b.H - a.H + alpha * 0.5 * (a.D + b.D) * (b.s - a.s);
        const double excess = lhs - out.tolerance;
        out.worst_excess = std::max(out.worst_excess, excess);
        ++out.pairs;
        if (excess > 0.0) out.violations.push_back({a.s, b.s, excess});
    }
    return out;
}

/// Smallest theta >= 0 (to cfg.theta_resolution) for which the monotonicity check
/// passes.  Throws NumericalError if even cfg.theta_cap fails.
inline double choose_theta(std::span<const EnergyReport> reports, const Model& model, const DiagnosticsConfig& cfg)
{
    cfg.validate();
    auto passes = [&](double theta) {
        std::vector<EnergyReport> shifted;
        shifted.reserve(reports.size());
        for (const auto& r : reports) shifted.push_back(with_theta(r, model, theta));
        return theorem1_monotonicity(shifted, model, cfg).pass();
    };
    if (passes(0.0)) return 0.0;
    double hi = 1.0;
    while (!passes(hi)) {
        if (hi >= cfg.theta_cap) {
            std::vector<EnergyReport> shifted;
            for (const auto& r : reports) shifted.push_back(with_theta(r, model, cfg.theta_cap));
            const auto res = theorem1_monotonicity(shifted, model, cfg);
            throw NumericalError("choose_theta: no theta up to the cap restores monotonicity (worst excess " +
                                 io::fmt(res.worst_excess) + " at s = " + io::fmt(res.violations.front().s1) +
                                 "); the discretisation is too coarse");
        }
        hi = std::min(2.0 * hi, cfg.theta_cap);
    }
    double lo = hi > 1.0 ? 0.5 * hi : 0.0;
    while (hi - lo > cfg.theta_resolution) {
        const double mid = 0.5 * (lo + hi);
        (passes(mid) ? hi : lo) = mid;
    }
    return hi;
}

/// Reports where H < 0: such states cannot extend to a global solution.
inline bool blowup_criterion(const EnergyReport& r) { return r.H < 0.0; }

struct BoundsReport {
    double eps0_emp = 0.0;
    double K_emp = 0.0;
    double E_min = 0.0;
    double E_max = 0.0;
    double cumulative_dissipation = 0.0;
    double s_lo = 0.0;
    double s_hi = 0.0;

    double band_ratio() const { return eps0_emp > 0.0 ? K_emp / eps0_emp : std::numeric_limits<double>::infinity(); }
};

inline BoundsReport corollary_bounds(std::span<const EnergyReport> reports)
{
    if (reports.empty()) throw ConfigError("corollary_bounds: empty report window");
    BoundsReport b;
    b.s_lo = reports.front().s;
    b.s_hi = reports.back().s;
    b.eps0_emp = std::numeric_limits<double>::infinity();
    b.K_emp = 0.0;
    b.E_min = std::numeric_limits<double>::infinity();
    b.E_max = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < reports.size(); ++k) {
        const auto& r = reports[k];
        const double band = r.h1_norm + r.l2_ws;
        b.eps0_emp = std::min(b.eps0_emp, band);
        b.K_emp = std::max(b.K_emp, band);
        b.E_min = std::min(b.E_min, r.E);
        b.E_max = std::max(b.E_max, r.E);
        if (k) b.cumulative_dissipation += 0.5 * (r.D + reports[k - 1].D) * (r.s - reports[k - 1].s);
    }
    return b;
}

/// Reports with s in [lo, hi] (inclusive up to round-off).
inline std::span<const EnergyReport> window(std::span<const EnergyReport> reports, double lo, double hi)
{
    const double tol = 1e-9 * std::max(1.0, std::abs(hi));
    auto first = std::find_if(reports.begin(), reports.end(), [&](const auto& r) { return r.s >= lo - tol; });
    auto last = std::find_if(first, reports.end(), [&](const auto& r) { return r.s > hi + tol; });
    return {first, last};
}

// ---------------------------------------------------------------------------
// Physical-space two-sided bound

struct QPoint {
    double t = 0.0;
    double Q = 0.0;
};

struct QSeries {
    double T = 0.0;
    double t0 = 0.0;
    std::vector<QPoint> points;    ///< snapshots with t in [t0, T)
    bool resolution_exhausted = false;

    double q_lo() const
    {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& p : points) m = std::min(m, p.Q);
        return m;
    }
    double q_hi() const
    {
        double m = 0.0;
        for (const auto& p : points) m = std::max(m, p.Q);
        return m;
    }
    double envelope_ratio() const { return points.empty() ? std::numeric_limits<double>::quiet_NaN() : q_hi() / q_lo(); }
};

/// First time of the window: max(T - e^{-s0}, 3T/4) with s0 = max(S1, -log(T/4)).
inline double theorem2_start(double T, double S1)
{
    const double s0 = std::max(S1, -std::log(T / 4.0));
    return std::max(T - std::exp(-s0), 0.75 * T);
}

/// L2 norms of u, u_t and grad u over the ball B(x0, R) of a snapshot, by
/// three-point Gauss panels on the cubic interpolant.  Returns {u, ut, grad u}.
inline std::array<double, 3> ball_norms(const Snapshot& snap, double x0, double R)
{
    const auto& g = snap.grid;
    const bool radial = g.kind == BallKind::radial;
    const double lo = radial ? 0.0 : x0 - R, hi = x0 + R;
    const double eps = 1e-12 * std::max(1.0, std::abs(hi));
    if ((!radial && lo < g.x_min - eps) || hi > g.x_max() + eps)
        throw ConfigError("ball_norms: the ball leaves the snapshot domain");
    const EdgeRule edge = radial ? EdgeRule::mirror : EdgeRule::clamp;
    const std::size_t panels = std::max<std::size_t>(4, std::size_t(std::ceil((hi - lo) / g.dx)));
    const double h = (hi - lo) / double(panels);
    static constexpr double gx[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
    static constexpr double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    double su = 0.0, sut = 0.0, sux = 0.0;
    for (std::size_t k = 0; k < panels; ++k) {
        const double mid = lo + (double(k) + 0.5) * h;
        for (int j = 0; j < 3; ++j) {
            const double x = mid + 0.5 * h * gx[j];
            double wt = 0.5 * h * gw[j];
            if (radial) wt *= sphere_area(g.N) * std::pow(x, g.N - 1);
            const auto u = cubic_sample(snap.state.u, g.x_min, g.dx, x, edge);
            const auto ut = cubic_sample(snap.state.ut, g.x_min, g.dx, x, edge);
            su += wt * u.value * u.value;
            sut += wt * ut.value * ut.value;
            sux += wt * u.derivative * u.derivative;
        }
    }
    return {std::sqrt(su), std::sqrt(sut), std::sqrt(sux)};
}

/// Q(t) = tau^{2/(p-1)} |u|/tau^{N/2} + tau^{2/(p-1)+1} (|u_t| + |grad u|)/tau^{N/2},
/// norms over B(x0, tau), tau = T - t.  Snapshots before t0 are skipped; the
/// series stops once the ball spans fewer than three cells.
inline QSeries theorem2_physical(std::span<const Snapshot> snapshots, double T, double x0, const Model& model,
                                 double S1 = 1.0)
{
    if (!(std::isfinite(T) && T > 0.0)) throw ConfigError("theorem2: needs a finite blow-up time");
    QSeries out;
    out.T = T;
    out.t0 = theorem2_start(T, S1);
    const double beta = model.beta();
    for (const auto& snap : snapshots) {
        const double t = snap.state.t;
        if (t < out.t0 - 1e-12 || t >= T) continue;
        const double tau = T - t;
        const bool radial = snap.grid.kind == BallKind::radial;
        if ((radial ? tau : 2.0 * tau) < 3.0 * snap.grid.dx) {
            out.resolution_exhausted = true;
            break;
        }
        const auto [nu, nut, nux] = ball_norms(snap, x0, tau);
        const int N = snap.grid.kind == BallKind::radial ? snap.grid.N : 1;
        const double norm = std::pow(tau, 0.5 * N);
        const double Q = std::pow(tau, beta) * nu / norm + std::pow(tau, beta + 1.0) * (nut + nux) / norm;
        out.points.push_back({t, Q});
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON verdicts

inline nlohmann::json verdict_json(const std::string& check, double s_lo, double s_hi, bool pass, double worst_excess,
                                   nlohmann::json constants = nlohmann::json::object())
{
    nlohmann::json j;
    j["check"] = check;
    j["window"] = {s_lo, s_hi};
    j["pass"] = pass;
    j["worst_excess"] = std::isfinite(worst_excess) ? nlohmann::json(worst_excess) : nlohmann::json(nullptr);
    j["empirical_constants"] = std::move(constants);
    return j;
}

inline nlohmann::json to_json(const MonotonicityResult& m, double s_lo, double s_hi, double theta)
{
    nlohmann::json v = nlohmann::json::array();
    for (const auto& x : m.violations) v.push_back({{"s1", x.s1}, {"s2", x.s2}, {"excess", x.excess}});
    auto j = verdict_json("theorem1_monotonicity", s_lo, s_hi, m.pass(), m.worst_excess,
                          {{"theta", theta}, {"tolerance", m.tolerance}, {"pairs", m.pairs}});
    j["violations"] = std::move(v);
    return j;
}

inline nlohmann::json to_json(const BoundsReport& b)
{
    const bool pass = std::isfinite(b.E_min) && std::isfinite(b.E_max) && std::isfinite(b.cumulative_dissipation) &&
                      b.eps0_emp > 0.0 && std::isfinite(b.K_emp);
    return verdict_json("corollary_bounds", b.s_lo, b.s_hi, pass, std::numeric_limits<double>::quiet_NaN(),
                        {{"eps0_emp", b.eps0_emp},
                         {"K_emp", b.K_emp},
                         {"E_min", b.E_min},
                         {"E_max", b.E_max},
                         {"cumulative_dissipation", b.cumulative_dissipation}});
}

} // namespace blowup

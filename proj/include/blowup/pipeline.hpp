#pragma once

// Two-pass orchestration: locate T(x0), then rerun with snapshots on a uniform
// s-grid of the frame (x0, T0) and evaluate energy reports on them.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "blowup/diagnostics.hpp"
#include "blowup/energy.hpp"
#include "blowup/errors.hpp"
#include "blowup/model.hpp"
#include "blowup/similarity.hpp"
#include "blowup/wave_solver.hpp"

namespace blowup {

/// Initial data as a function of the grid, so that runs at other resolutions share it.
using InitFn = std::function<FieldState(const Grid&)>;

struct LocateOptions {
    std::size_t coarse_factor = 8; ///< the pre-pass uses nx / coarse_factor nodes
    double slack = 0.05;           ///< relative slack on the coarse T for the cone of the fine pass
    SurfaceOptions surface;
};

struct Located {
    double x0 = 0.0;
    double T0 = std::numeric_limits<double>::infinity();
    TEstimate estimate;
    BlowupSurface coarse_surface;
    RunResult run; ///< fine pass; probe 0 sits at x0
};

inline Grid coarsened(const Grid& g, std::size_t factor)
{
    if (factor <= 1) return g;
    const std::size_t n = std::max<std::size_t>(16, g.n / factor);
    Grid c = g;
    c.n = n;
    if (g.kind == BallKind::radial) {
        c.dx = g.x_max() / double(n - 1);
    } else {
        // Keep the physical extent; periodic and closed grids both scale dx by n.
        c.dx = g.dx * double(g.n) / double(n);
    }
    return c;
}

/// Coarse full-domain run for x_star and a T guess, then a cone-restricted fine
/// run that estimates T at x0 (x_star when no x0 is given) from its probe.
inline Located locate_blowup(const Model& model, const Grid& grid, const InitFn& init, SolverConfig cfg,
                             std::optional<double> x0 = std::nullopt, const LocateOptions& opt = {})
{
    if (grid.kind == BallKind::radial) x0 = 0.0;
    Located out;

    SolverConfig coarse_cfg = cfg;
    coarse_cfg.snapshot_times.clear();
    coarse_cfg.snapshot_growth = 0.0;
    coarse_cfg.crop.reset();
    coarse_cfg.restrict_to_crop = false;
    coarse_cfg.probe_x.clear();
    const Grid cgrid = coarsened(grid, opt.coarse_factor);
    const RunResult coarse = run_to_blowup(model, cgrid, init(cgrid), coarse_cfg);
    if (!coarse.blew_up()) {
        out.run = coarse;
        return out;
    }
    out.coarse_surface = estimate_surface(cgrid, coarse.history, model.p(), opt.surface);
    if (!std::isfinite(out.coarse_surface.T_min)) throw NumericalError("locate: no usable T estimate on the coarse grid");
    const double center = x0 ? *x0 : out.coarse_surface.x_star;
    double T_guess = out.coarse_surface.T_min;
    if (x0) {
        const std::size_t k = std::min_element(out.coarse_surface.x.begin(), out.coarse_surface.x.end(),
                                               [&](double a, double b) { return std::abs(a - center) < std::abs(b - center); }) -
                              out.coarse_surface.x.begin();
        if (std::isfinite(out.coarse_surface.T_of_x[k])) T_guess = out.coarse_surface.T_of_x[k];
    }

    cfg.snapshot_times.clear();
    cfg.snapshot_growth = 0.0;
    cfg.crop = CropWindow{center, T_guess * (1.0 + opt.slack), 0.05};
    cfg.restrict_to_crop = true;
    cfg.probe_x = {center};
    out.run = run_to_blowup(model, grid, init(grid), cfg);
    if (!out.run.blew_up()) return out;
    const auto& pr = out.run.probes.front();
    std::vector<double> au(pr.u.size());
    for (std::size_t i = 0; i < au.size(); ++i) au[i] = std::abs(pr.u[i]);
    const double floor = std::max(opt.surface.u_floor, opt.surface.floor_factor * std::max(au.front(), 1e-300));
    out.x0 = pr.x;
    out.estimate = estimate_T(pr.t, au, model.p(), floor, opt.surface.min_points);
    out.T0 = out.estimate.T;
    return out;
}

/// s_lo, s_lo + ds, ..., up to s_hi (inclusive within 1e-9 ds).
inline std::vector<double> s_grid(double s_lo, double s_hi, double ds)
{
    if (!(ds > 0.0) || !(s_hi >= s_lo)) throw ConfigError("s-grid: need ds > 0 and s_hi >= s_lo");
    std::vector<double> out;
    const auto n = static_cast<std::size_t>(std::floor((s_hi - s_lo) / ds + 1e-9));
    for (std::size_t k = 0; k <= n; ++k) out.push_back(s_lo + ds * double(k));
    return out;
}

struct FrameRun {
    SimilarityFrame frame;
    std::vector<double> s;
    std::vector<Snapshot> snapshots; ///< one per s, cropped to the frame's cone
    RunResult run;
};

/// Reruns from the initial data and snapshots at t = T0 - e^{-s} for each s.
inline FrameRun run_frame(const Model& model, const Grid& grid, const InitFn& init, SolverConfig cfg,
                          const SimilarityFrame& frame, std::span<const double> s_values, double margin = 0.05)
{
    if (!std::isfinite(frame.T0) || !(frame.T0 > 0.0)) throw ConfigError("frame: T0 must be finite and > 0");
    if (s_values.empty()) throw ConfigError("frame: empty s-grid");
    FrameRun out;
    out.frame = frame;
    out.s.assign(s_values.begin(), s_values.end());
    cfg.snapshot_times.clear();
    for (double s : s_values) {
        const double t = frame.T0 - std::exp(-s);
        if (t < 0.0) throw ConfigError("frame: s = " + std::to_string(s) + " precedes the initial time");
        cfg.snapshot_times.push_back(t);
    }
    if (!std::is_sorted(cfg.snapshot_times.begin(), cfg.snapshot_times.end()))
        throw ConfigError("frame: s-grid must be increasing");
    cfg.snapshot_growth = 0.0;
    cfg.crop = CropWindow{frame.x0, frame.T0, margin};
    cfg.restrict_to_crop = true;
    cfg.t_stop = cfg.snapshot_times.back();
    cfg.probe_x.clear();
    out.run = run_to_blowup(model, grid, init(grid), cfg);
    out.snapshots = std::move(out.run.snapshots);
    out.run.snapshots.clear();
    if (out.snapshots.size() != s_values.size())
        throw NumericalError("frame: the solution left the resolvable range before the last snapshot");
    return out;
}

/// Reports with theta = 0; apply with_theta afterwards.
inline std::vector<EnergyReport> frame_reports(std::span<const Snapshot> snaps, const SimilarityFrame& frame,
                                               const Model& model, const QuadSet& q)
{
    std::vector<EnergyReport> out;
    out.reserve(snaps.size());
    for (const auto& snap : snaps) out.push_back(compute_H(PhysicalBallSampler(snap, frame, model), model, q, 0.0));
    return out;
}

inline void apply_theta(std::vector<EnergyReport>& reports, const Model& model, double theta)
{
    for (auto& r : reports) r = with_theta(r, model, theta);
}

} // namespace blowup

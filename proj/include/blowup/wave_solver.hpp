#pragma once

// Physical-space solver for d_tt u = Laplacian(u) + |u|^{p-1} u + f(u) on a line
// or radially in N dimensions, plus blow-up time estimation per node.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "blowup/errors.hpp"
#include "blowup/model.hpp"
#include "blowup/ode_profile.hpp"
#include "blowup/quadrature.hpp"

namespace blowup {

enum class Boundary { periodic, absorbing };

/// Uniform grid.  Line grids hold x_min + i dx for i < n; with periodic ends the
/// node x_min + n dx is identified with x_min.  Radial grids start at r = 0.
struct Grid {
    BallKind kind = BallKind::line;
    double x_min = 0.0;
    double dx = 1.0;
    std::size_t n = 0;
    int N = 1;

    double x(std::size_t i) const { return x_min + dx * double(i); }
    double x_max() const { return x(n - 1); }

    static Grid line(double x_min, double x_max, std::size_t nx, bool periodic = true)
    {
        if (nx < 16) throw ConfigError("grid: nx must be >= 16");
        if (!(x_max > x_min)) throw ConfigError("grid: x_max must exceed x_min");
        Grid g;
        g.kind = BallKind::line;
        g.x_min = x_min;
        g.n = nx;
        g.dx = periodic ? (x_max - x_min) / double(nx) : (x_max - x_min) / double(nx - 1);
        return g;
    }

    static Grid radial(double r_max, std::size_t nr, int N)
    {
        if (nr < 16) throw ConfigError("grid: nx must be >= 16");
        if (!(r_max > 0.0)) throw ConfigError("grid: radial extent must be > 0");
        if (N < 2) throw ConfigError("grid: radial grids need N >= 2");
        Grid g;
        g.kind = BallKind::radial;
        g.x_min = 0.0;
        g.n = nr;
        g.N = N;
        g.dx = r_max / double(nr - 1);
        return g;
    }
};

struct FieldState {
    double t = 0.0;
    std::vector<double> u;
    std::vector<double> ut;
};

/// A field state together with the (possibly cropped) grid it lives on.
struct Snapshot {
    Grid grid;
    FieldState state;
};

inline void check_state(const Grid& grid, const FieldState& s)
{
    if (s.u.size() != grid.n || s.ut.size() != grid.n)
        throw ConfigError("field state size does not match grid");
    for (std::size_t i = 0; i < grid.n; ++i)
        if (!std::isfinite(s.u[i]) || !std::isfinite(s.ut[i]))
            throw NumericalError("field state holds non-finite values");
}

/// Nodes [lo, hi) that a step updates; the rest stay frozen.
struct ActiveRange {
    std::size_t lo = 0;
    std::size_t hi = 0;

    static ActiveRange all(const Grid& g) { return {0, g.n}; }
};

/// Discrete Laplacian plus source on the active nodes.  Returns false if any
/// value is non-finite.
inline bool acceleration(const Model& model, const Grid& grid, Boundary bc, std::span<const double> u,
                         std::span<double> out, ActiveRange range)
{
    const std::size_t n = grid.n;
    const double inv_dx2 = 1.0 / (grid.dx * grid.dx);
    const std::size_t first = std::max<std::size_t>(range.lo, 1);
    const std::size_t last = std::min(range.hi, n - 1);
    return visit_source(model.params(), [&](const auto& src) {
        double probe = 0.0; // picks up nan if any value is non-finite
        auto put = [&](std::size_t i, double lap) {
            out[i] = lap + src(u[i]);
            probe += out[i] * 0.0;
        };
        if (grid.kind == BallKind::line) {
            for (std::size_t i = first; i < last; ++i) put(i, (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_dx2);
            if (range.lo == 0)
                put(0, bc == Boundary::periodic ? (u[1] - 2.0 * u[0] + u[n - 1]) * inv_dx2
                                                : 2.0 * (u[1] - u[0]) * inv_dx2);
            if (range.hi == n)
                put(n - 1, bc == Boundary::periodic ? (u[0] - 2.0 * u[n - 1] + u[n - 2]) * inv_dx2
                                                    : 2.0 * (u[n - 2] - u[n - 1]) * inv_dx2);
            return probe == 0.0;
        }
        // Radial: (N-1)/r du/dr, and N d2u/dr2 at the origin by symmetry.
        const double Nm1 = double(grid.N - 1);
        const double inv_2dx = 0.5 / grid.dx;
        for (std::size_t i = first; i < last; ++i) {
            const double r = grid.x(i);
            put(i, (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_dx2 + Nm1 / r * (u[i + 1] - u[i - 1]) * inv_2dx);
        }
        if (range.lo == 0) put(0, double(grid.N) * 2.0 * (u[1] - u[0]) * inv_dx2);
        if (range.hi == n) put(n - 1, 2.0 * (u[n - 2] - u[n - 1]) * inv_dx2);
        return probe == 0.0;
    });
}

inline bool acceleration(const Model& model, const Grid& grid, Boundary bc, std::span<const double> u,
                         std::span<double> out)
{
    return acceleration(model, grid, bc, u, out, ActiveRange::all(grid));
}

namespace detail {

// Outgoing first-order characteristic condition u_t = -du/dn - (N-1)/(2r) u.
inline void absorb_edges(const Grid& grid, Boundary bc, FieldState& s, ActiveRange range)
{
    const std::size_t n = grid.n;
    if (grid.kind == BallKind::line) {
        if (bc != Boundary::absorbing) return;
        if (range.lo == 0) s.ut[0] = (s.u[1] - s.u[0]) / grid.dx;
        if (range.hi == n) s.ut[n - 1] = -(s.u[n - 1] - s.u[n - 2]) / grid.dx;
        return;
    }
    if (range.hi != n) return;
    const double r = grid.x(n - 1);
    s.ut[n - 1] = -(s.u[n - 1] - s.u[n - 2]) / grid.dx - 0.5 * double(grid.N - 1) / r * s.u[n - 1];
}

} // namespace detail

/// One velocity-Verlet step (the leapfrog scheme in kick-drift-kick form) from a
/// state whose acceleration `acc` is known.  Writes the new state and its
/// acceleration into `next`/`next_acc`; returns false on a non-finite result.
/// Nodes outside `range` are copied unchanged.
inline bool verlet_step(const Model& model, const Grid& grid, Boundary bc, const FieldState& cur,
                        std::span<const double> acc, double dt, FieldState& next,
                        std::vector<double>& next_acc, ActiveRange range)
{
    const std::size_t n = grid.n;
    next.u.resize(n);
    next.ut.resize(n);
    next_acc.resize(n);
    auto freeze = [&](std::size_t a, std::size_t b) {
        std::copy(cur.u.begin() + std::ptrdiff_t(a), cur.u.begin() + std::ptrdiff_t(b), next.u.begin() + std::ptrdiff_t(a));
        std::copy(cur.ut.begin() + std::ptrdiff_t(a), cur.ut.begin() + std::ptrdiff_t(b), next.ut.begin() + std::ptrdiff_t(a));
        std::copy(acc.begin() + std::ptrdiff_t(a), acc.begin() + std::ptrdiff_t(b), next_acc.begin() + std::ptrdiff_t(a));
    };
    freeze(0, range.lo);
    freeze(range.hi, n);
    double probe = 0.0;
    const double half_dt2 = 0.5 * dt * dt;
    for (std::size_t i = range.lo; i < range.hi; ++i) {
        next.u[i] = cur.u[i] + dt * cur.ut[i] + half_dt2 * acc[i];
        probe += next.u[i] * 0.0;
    }
    if (probe != 0.0) return false;
    if (!acceleration(model, grid, bc, next.u, next_acc, range)) return false;
    const double half_dt = 0.5 * dt;
    for (std::size_t i = range.lo; i < range.hi; ++i) {
        next.ut[i] = cur.ut[i] + half_dt * (acc[i] + next_acc[i]);
        probe += next.ut[i] * 0.0;
    }
    detail::absorb_edges(grid, bc, next, range);
    next.t = cur.t + dt;
    return probe == 0.0;
}

inline bool verlet_step(const Model& model, const Grid& grid, Boundary bc, const FieldState& cur,
                        std::span<const double> acc, double dt, FieldState& next,
                        std::vector<double>& next_acc)
{
    return verlet_step(model, grid, bc, cur, acc, dt, next, next_acc, ActiveRange::all(grid));
}

/// Convenience single step; throws NumericalError (saturation) on non-finite output.
inline FieldState step(const Model& model, const Grid& grid, const FieldState& state, double dt,
                       Boundary bc = Boundary::periodic)
{
    if (!(dt > 0.0) || dt > 0.5 * grid.dx * (1.0 + 1e-12))
        throw ConfigError("step: dt must satisfy 0 < dt <= dx/2");
    std::vector<double> acc(grid.n), next_acc;
    if (!acceleration(model, grid, bc, state.u, acc)) throw NumericalError("step: saturated");
    FieldState next;
    if (!verlet_step(model, grid, bc, state, acc, dt, next, next_acc)) throw NumericalError("step: saturated");
    return next;
}

enum class RunStatus {
    blew_up,   ///< max|u| reached U_max
    saturated, ///< non-finite values; the last finite state is kept
    bounded,   ///< step or time budget exhausted without blow-up
    stopped,   ///< requested stop time reached
};

inline const char* to_string(RunStatus s)
{
    switch (s) {
    case RunStatus::blew_up: return "blew_up";
    case RunStatus::saturated: return "saturated";
    case RunStatus::bounded: return "bounded";
    case RunStatus::stopped: return "stopped";
    }
    return "unknown";
}

/// Backward-cone crop: at time t keep |x - center| <= (T0 - t) + margin.
struct CropWindow {
    double center = 0.0;
    double T0 = std::numeric_limits<double>::infinity();
    double margin = 0.05;
};

struct SolverConfig {
    double dt0 = 1e-3;
    double U_max = 1e7;
    /// dt is halved (never enlarged) until max|u|^{(p-1)/2} dt <= nonlinear_cfl.
    double nonlinear_cfl = 0.1;
    double t_max = 50.0;
    std::size_t max_steps = 20'000'000;
    double t_stop = std::numeric_limits<double>::infinity();
    Boundary boundary = Boundary::periodic;
    std::vector<double> snapshot_times;
    /// Extra snapshots each time max|u| grows by this factor (0 disables).
    double snapshot_growth = 0.0;
    std::optional<CropWindow> crop;
    /// Integrate only the backward cone of the crop frame (plus its margin);
    /// nodes outside it are frozen.  max|u| is then taken over the cone.
    bool restrict_to_crop = false;
    /// Nodes recorded at every step (nearest grid node to each position).
    std::vector<double> probe_x;
    std::size_t max_history_nodes = 4097;
    int levels_per_decade = 40;
};

/// |u| at a strided node subset, recorded at t = 0 and whenever max|u| crosses
/// max|u(0)| * 10^{k/levels_per_decade}.
struct NodeHistory {
    std::vector<std::size_t> nodes;
    std::vector<double> t;
    std::vector<std::vector<double>> values; ///< values[record][k] for nodes[k]

    std::vector<double> series(std::size_t k) const
    {
        std::vector<double> out(values.size());
        for (std::size_t r = 0; r < values.size(); ++r) out[r] = values[r][k];
        return out;
    }
};

struct ProbeHistory {
    double x = 0.0;
    std::size_t node = 0;
    std::vector<double> t;
    std::vector<double> u;
    std::vector<double> ut;
};

struct RunResult {
    RunStatus status = RunStatus::bounded;
    Grid grid;
    FieldState final_state;
    std::vector<Snapshot> snapshots;
    NodeHistory history;
    std::vector<ProbeHistory> probes;
    std::size_t steps = 0;
    double max_abs_u = 0.0;

    bool blew_up() const { return status == RunStatus::blew_up || status == RunStatus::saturated; }
};

inline double max_abs(std::span<const double> v)
{
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline std::size_t nearest_node(const Grid& grid, double x)
{
    const double pos = std::round((x - grid.x_min) / grid.dx);
    if (pos < 0.0 || pos > double(grid.n - 1)) throw ConfigError("position outside the grid");
    return static_cast<std::size_t>(pos);
}

/// Copy of the grid/state restricted to |x - center| <= half_width (never wraps).
inline Snapshot crop_snapshot(const Grid& grid, const FieldState& s, double center, double half_width)
{
    if (grid.kind == BallKind::radial) {
        const auto hi = std::min<std::size_t>(grid.n - 1, std::size_t(std::ceil(half_width / grid.dx)));
        Snapshot out{grid, {s.t, {}, {}}};
        out.grid.n = hi + 1;
        out.state.u.assign(s.u.begin(), s.u.begin() + std::ptrdiff_t(hi + 1));
        out.state.ut.assign(s.ut.begin(), s.ut.begin() + std::ptrdiff_t(hi + 1));
        return out;
    }
    const double lo_pos = std::floor((center - half_width - grid.x_min) / grid.dx);
    const double hi_pos = std::ceil((center + half_width - grid.x_min) / grid.dx);
    if (lo_pos < 0.0 || hi_pos > double(grid.n - 1))
        throw ConfigError("snapshot window leaves the computational domain; enlarge the grid");
    const auto lo = std::size_t(lo_pos), hi = std::size_t(hi_pos);
    Snapshot out{grid, {s.t, {}, {}}};
    out.grid.x_min = grid.x(lo);
    out.grid.n = hi - lo + 1;
    out.state.u.assign(s.u.begin() + std::ptrdiff_t(lo), s.u.begin() + std::ptrdiff_t(hi + 1));
    out.state.ut.assign(s.ut.begin() + std::ptrdiff_t(lo), s.ut.begin() + std::ptrdiff_t(hi + 1));
    return out;
}

/// Advances to blow-up (max|u| >= U_max), saturation, the stop time, or the budget.
/// Snapshots are taken at exactly the requested times by an auxiliary Verlet step
/// from the current state, so the main step sequence does not depend on them.
inline RunResult run_to_blowup(const Model& model, const Grid& grid, FieldState init,
                               const SolverConfig& cfg)
{
    check_state(grid, init);
    if (!(cfg.dt0 > 0.0)) throw ConfigError("solver: dt0 must be > 0");
    if (!(cfg.U_max > 0.0)) throw ConfigError("solver: U_max must be > 0");
    if (grid.kind == BallKind::radial && cfg.crop && cfg.crop->center != 0.0)
        throw ConfigError("solver: radial runs only admit frames centred at the origin");

    RunResult res;
    res.grid = grid;
    const Boundary bc = grid.kind == BallKind::radial ? Boundary::absorbing : cfg.boundary;
    const double half_pm1 = 0.5 * (model.p() - 1.0);

    std::vector<double> times = cfg.snapshot_times;
    std::sort(times.begin(), times.end());
    for (double tk : times)
        if (tk < init.t) throw ConfigError("solver: snapshot time precedes the initial time");
    std::size_t next_snapshot = 0;

    const std::size_t stride = std::max<std::size_t>(1, (grid.n + cfg.max_history_nodes - 1) / cfg.max_history_nodes);
    for (std::size_t i = 0; i < grid.n; i += stride) res.history.nodes.push_back(i);
    if (res.history.nodes.back() != grid.n - 1 && grid.kind == BallKind::line && stride > 1)
        res.history.nodes.push_back(grid.n - 1);

    for (double x : cfg.probe_x) {
        ProbeHistory ph;
        ph.node = nearest_node(grid, x);
        ph.x = grid.x(ph.node);
        res.probes.push_back(std::move(ph));
    }

    FieldState cur = std::move(init), next;
    std::vector<double> acc(grid.n), next_acc;
    if (!acceleration(model, grid, bc, cur.u, acc)) throw NumericalError("solver: initial data saturate the source");

    auto record_probes = [&](const FieldState& s) {
        for (auto& ph : res.probes) {
            ph.t.push_back(s.t);
            ph.u.push_back(s.u[ph.node]);
            ph.ut.push_back(s.ut[ph.node]);
        }
    };
    auto record_history = [&](const FieldState& s) {
        std::vector<double> row(res.history.nodes.size());
        for (std::size_t k = 0; k < row.size(); ++k) row[k] = std::abs(s.u[res.history.nodes[k]]);
        res.history.t.push_back(s.t);
        res.history.values.push_back(std::move(row));
    };
    const bool use_cone = cfg.restrict_to_crop && cfg.crop && std::isfinite(cfg.crop->T0);
    auto active_range = [&](double t) {
        if (!use_cone) return ActiveRange::all(grid);
        const double half = std::max(0.0, cfg.crop->T0 - t) + cfg.crop->margin + 4.0 * grid.dx;
        const double lo_pos = std::floor((cfg.crop->center - half - grid.x_min) / grid.dx);
        const double hi_pos = std::ceil((cfg.crop->center + half - grid.x_min) / grid.dx) + 1.0;
        ActiveRange r;
        r.lo = grid.kind == BallKind::radial || lo_pos <= 0.0 ? 0 : std::size_t(lo_pos);
        r.hi = hi_pos >= double(grid.n) ? grid.n : std::size_t(hi_pos);
        return r;
    };
    auto take_snapshot = [&](const FieldState& s) {
        if (cfg.crop) {
            const double half = std::max(0.0, cfg.crop->T0 - s.t) + cfg.crop->margin + 4.0 * grid.dx;
            if (std::isfinite(half)) {
                res.snapshots.push_back(crop_snapshot(grid, s, cfg.crop->center, half));
                return;
            }
        }
        res.snapshots.push_back({grid, s});
    };

    double max_u = max_abs(cur.u);
    const double base_level = max_u > 0.0 ? max_u : 1.0;
    const double level_ratio = std::pow(10.0, 1.0 / cfg.levels_per_decade);
    double next_level = base_level * level_ratio;
    double next_growth = cfg.snapshot_growth > 1.0 ? base_level * cfg.snapshot_growth
                                                   : std::numeric_limits<double>::infinity();
    record_history(cur);
    record_probes(cur);

    double dt = std::min(cfg.dt0, 0.5 * grid.dx);
    FieldState probe;
    std::vector<double> probe_acc;
    res.status = RunStatus::bounded;
    for (;;) {
        if (max_u >= cfg.U_max) {
            res.status = RunStatus::blew_up;
            break;
        }
        if (res.steps >= cfg.max_steps || cur.t >= cfg.t_max) break;
        while (std::pow(max_u, half_pm1) * dt > cfg.nonlinear_cfl) dt *= 0.5;

        const double t_next = cur.t + dt;
        while (next_snapshot < times.size() && times[next_snapshot] <= t_next) {
            const double dts = times[next_snapshot] - cur.t;
            if (dts <= 0.0) {
                take_snapshot(cur);
            } else if (verlet_step(model, grid, bc, cur, acc, dts, probe, probe_acc, active_range(cur.t))) {
                probe.t = times[next_snapshot];
                take_snapshot(probe);
            } else {
                break;
            }
            ++next_snapshot;
        }
        if (cfg.t_stop <= t_next) {
            res.status = RunStatus::stopped;
            break;
        }

        const ActiveRange range = active_range(cur.t);
        if (!verlet_step(model, grid, bc, cur, acc, dt, next, next_acc, range)) {
            res.status = RunStatus::saturated;
            break;
        }
        std::swap(cur, next);
        std::swap(acc, next_acc);
        ++res.steps;
        max_u = max_abs(std::span<const double>(cur.u).subspan(range.lo, range.hi - range.lo));
        record_probes(cur);
        if (max_u >= next_level) {
            record_history(cur);
            while (next_level <= max_u) next_level *= level_ratio;
        }
        if (max_u >= next_growth) {
            take_snapshot(cur);
            while (next_growth <= max_u) next_growth *= cfg.snapshot_growth;
        }
    }
    if (res.history.t.back() != cur.t) record_history(cur);
    res.max_abs_u = max_u;
    res.final_state = std::move(cur);
    return res;
}

enum class TQuality { ok, too_few_points, below_floor, no_growth, non_monotone };

inline const char* to_string(TQuality q)
{
    switch (q) {
    case TQuality::ok: return "ok";
    case TQuality::too_few_points: return "too_few_points";
    case TQuality::below_floor: return "below_floor";
    case TQuality::no_growth: return "no_growth";
    case TQuality::non_monotone: return "non_monotone";
    }
    return "unknown";
}

struct TEstimate {
    double T = std::numeric_limits<double>::infinity();
    TQuality quality = TQuality::too_few_points;
};

/// Frozen-exponent fit |u| ~ C (T - t)^{-2/(p-1)} on the final growth decade:
/// |u|^{-(p-1)/2} is linear in t and vanishes at T.  A series that never grew by
/// a full decade has no such window and gets the +inf sentinel.
inline TEstimate estimate_T(std::span<const double> t, std::span<const double> abs_u, double p,
                            double u_floor = 1.0, std::size_t min_points = 20)
{
    TEstimate out;
    const std::size_t n = t.size();
    if (n < min_points || abs_u.size() != n) return out;
    const double last = abs_u[n - 1];
    if (!(last >= u_floor)) {
        out.quality = TQuality::below_floor;
        return out;
    }
    std::size_t first = n - 1;
    while (first > 0 && abs_u[first - 1] >= 0.1 * last) --first;
    if (first == 0) {
        out.quality = TQuality::no_growth;
        return out;
    }
    const std::size_t m = n - first;
    if (m < min_points) return out;
    for (std::size_t i = first + 1; i < n; ++i)
        if (!(abs_u[i] > abs_u[i - 1]) || !(t[i] > t[i - 1])) {
            out.quality = TQuality::non_monotone;
            return out;
        }
    const double q = 0.5 * (p - 1.0);
    double st = 0, sz = 0, stt = 0, stz = 0;
    const double t_ref = t[n - 1];
    for (std::size_t i = first; i < n; ++i) {
        const double ti = t[i] - t_ref;
        const double z = std::pow(abs_u[i], -q);
        st += ti;
        sz += z;
        stt += ti * ti;
        stz += ti * z;
    }
    const double dm = double(m);
    const double slope = (dm * stz - st * sz) / (dm * stt - st * st);
    const double icpt = (sz - slope * st) / dm;
    if (!(slope < 0.0)) {
        out.quality = TQuality::non_monotone;
        return out;
    }
    out.T = t_ref - icpt / slope;
    out.quality = TQuality::ok;
    return out;
}

struct BlowupSurface {
    std::vector<double> x;
    std::vector<double> T_of_x;
    std::vector<TQuality> quality;
    std::vector<double> slope; ///< local |dT/dx| by central (one-sided at gaps) differences; NaN if undefined
    double slope_max = std::numeric_limits<double>::quiet_NaN();
    double x_star = std::numeric_limits<double>::quiet_NaN();
    double T_min = std::numeric_limits<double>::infinity();
    std::optional<bool> non_characteristic;
};

enum class Verdict { yes, no, inconclusive };

inline const char* to_string(Verdict v)
{
    switch (v) {
    case Verdict::yes: return "true";
    case Verdict::no: return "false";
    case Verdict::inconclusive: return "inconclusive";
    }
    return "unknown";
}

struct NonCharacteristic {
    Verdict verdict = Verdict::inconclusive;
    double slope = std::numeric_limits<double>::quiet_NaN();
};

/// Max finite-difference slope of T over finite nodes with |x - x0| <= window;
/// non-characteristic iff slope <= 1 - margin.
inline NonCharacteristic non_characteristic_check(const BlowupSurface& surf, double x0, double window,
                                                  double margin = 0.05)
{
    NonCharacteristic out;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < surf.x.size(); ++i)
        if (std::abs(surf.x[i] - x0) <= window && std::isfinite(surf.T_of_x[i])) idx.push_back(i);
    if (idx.size() < 3) return out;
    double worst = 0.0;
    for (std::size_t k = 1; k < idx.size(); ++k) {
        const std::size_t i = idx[k - 1], j = idx[k];
        worst = std::max(worst, std::abs(surf.T_of_x[j] - surf.T_of_x[i]) / (surf.x[j] - surf.x[i]));
    }
    out.slope = worst;
    out.verdict = worst <= 1.0 - margin ? Verdict::yes : Verdict::no;
    return out;
}

struct SurfaceOptions {
    double u_floor = 1.0;
    /// Nodes must also end above this multiple of max|u| at the first record, so
    /// that only nodes well inside their own blow-up regime are fitted.
    double floor_factor = 10.0;
    std::size_t min_points = 20;
    double window = 0.05; ///< half-width around x_star for slope_max and the verdict
    double margin = 0.05;
};

inline BlowupSurface estimate_surface(const Grid& grid, const NodeHistory& hist, double p,
                                      const SurfaceOptions& opt = {})
{
    BlowupSurface s;
    const std::size_t m = hist.nodes.size();
    s.x.resize(m);
    s.T_of_x.resize(m);
    s.quality.resize(m);
    s.slope.assign(m, std::numeric_limits<double>::quiet_NaN());
    const double floor = hist.values.empty() ? opt.u_floor
                                             : std::max(opt.u_floor, opt.floor_factor * max_abs(hist.values.front()));
    for (std::size_t k = 0; k < m; ++k) {
        s.x[k] = grid.x(hist.nodes[k]);
        const auto series = hist.series(k);
        const auto est = estimate_T(hist.t, series, p, floor, opt.min_points);
        s.T_of_x[k] = est.T;
        s.quality[k] = est.quality;
        if (est.T < s.T_min) {
            s.T_min = est.T;
            s.x_star = s.x[k];
        }
    }
    for (std::size_t k = 0; k < m; ++k) {
        if (!std::isfinite(s.T_of_x[k])) continue;
        const bool left = k > 0 && std::isfinite(s.T_of_x[k - 1]);
        const bool right = k + 1 < m && std::isfinite(s.T_of_x[k + 1]);
        if (left && right)
            s.slope[k] = std::max(std::abs(s.T_of_x[k] - s.T_of_x[k - 1]) / (s.x[k] - s.x[k - 1]),
                                  std::abs(s.T_of_x[k + 1] - s.T_of_x[k]) / (s.x[k + 1] - s.x[k]));
        else if (left)
            s.slope[k] = std::abs(s.T_of_x[k] - s.T_of_x[k - 1]) / (s.x[k] - s.x[k - 1]);
        else if (right)
            s.slope[k] = std::abs(s.T_of_x[k + 1] - s.T_of_x[k]) / (s.x[k + 1] - s.x[k]);
    }
    if (std::isfinite(s.T_min)) {
        const auto nc = non_characteristic_check(s, s.x_star, opt.window, opt.margin);
        s.slope_max = nc.slope;
        if (nc.verdict != Verdict::inconclusive) s.non_characteristic = nc.verdict == Verdict::yes;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Initial data

inline FieldState zero_data(const Grid& grid) { return {0.0, std::vector<double>(grid.n), std::vector<double>(grid.n)}; }

/// Gaussian A exp(-((x - c)/w)^2) at rest (radial grids use |x|, c = 0).
inline FieldState bump_data(const Grid& grid, double amplitude, double width, double center = 0.0)
{
    if (!(width > 0.0)) throw ConfigError("bump: width must be > 0");
    FieldState s = zero_data(grid);
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double z = (grid.x(i) - center) / width;
        s.u[i] = amplitude * std::exp(-z * z);
    }
    return s;
}

inline FieldState constant_data(const Grid& grid, double value, double velocity)
{
    return {0.0, std::vector<double>(grid.n, value), std::vector<double>(grid.n, velocity)};
}

/// Space-independent data on the zero-energy branch of the ODE.
inline FieldState ode_manifold_data(const Model& model, const Grid& grid, double v0)
{
    return constant_data(grid, v0, manifold_velocity(model, v0));
}

} // namespace blowup

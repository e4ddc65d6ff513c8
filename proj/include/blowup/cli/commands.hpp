#pragma once

// The four blowup-lab subcommands.  Each writes into an output directory and
// returns a process exit code; library exceptions propagate to the caller.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "blowup/cli/config.hpp"
#include "blowup/diagnostics.hpp"
#include "blowup/energy.hpp"
#include "blowup/io.hpp"
#include "blowup/ode_profile.hpp"
#include "blowup/pipeline.hpp"
#include "blowup/wave_solver.hpp"

namespace blowup::cli {

namespace fs = std::filesystem;

enum ExitCode : int { ok = 0, config_error = 2, no_blowup = 3, numerical_failure = 4 };

/// Maps the exception in flight to the exit-code contract.
inline int exit_code_for(const std::exception_ptr& e)
{
    try {
        std::rethrow_exception(e);
    } catch (const ConfigError&) {
        return config_error;
    } catch (const NumericalError&) {
        return numerical_failure;
    } catch (const json::exception&) {
        return config_error;
    } catch (...) {
        return numerical_failure;
    }
}

/// BLOWUP_LAB_THREADS, if set, caps parallelism.
inline std::size_t thread_cap(std::size_t requested)
{
    std::size_t n = std::max<std::size_t>(1, requested);
    if (const char* env = std::getenv("BLOWUP_LAB_THREADS"); env && *env) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (*end != '\0' || cap < 1) throw ConfigError("BLOWUP_LAB_THREADS must be a positive integer");
        n = std::min(n, std::size_t(cap));
    }
    return n;
}

namespace detail {

inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline void write_json(const fs::path& path, const json& j)
{
    auto out = io::open_out(path);
    out << j.dump(2) << '\n';
}

inline std::optional<bool> verdict_flag(Verdict v)
{
    if (v == Verdict::inconclusive) return std::nullopt;
    return v == Verdict::yes;
}

inline json flag(std::optional<bool> v) { return v ? json(*v) : json(nullptr); }

inline std::string snapshot_name(std::size_t k, io::SnapshotFormat f)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "snap_%04zu.%s", k, f == io::SnapshotFormat::binary ? "bin" : "csv");
    return buf;
}

inline std::vector<double> abs_series(const std::vector<double>& v)
{
    std::vector<double> out(v.size());
    std::transform(v.begin(), v.end(), out.begin(), [](double x) { return std::abs(x); });
    return out;
}

inline void write_plot_stub(const fs::path& dir)
{
    auto out = io::open_out(dir / "plot.gp");
    out << "# gnuplot -p plot.gp\n"
           "set xlabel 's'\n"
           "set multiplot layout 3,1\n"
           "plot 'H.dat' using 1:2 with linespoints title 'H'\n"
           "set logscale y\n"
           "plot 'D.dat' using 1:2 with linespoints title 'D'\n"
           "unset logscale y\n"
           "plot 'lp1.dat' using 1:2 with linespoints title 'lp1'\n"
           "unset multiplot\n";
}

} // namespace detail

// ---------------------------------------------------------------------------

inline int cmd_ode(const RunConfig& c, const fs::path& out_dir)
{
    const Model model(c.model);
    const double v1 = c.ode.v1 ? *c.ode.v1 : manifold_velocity(model, c.ode.v0);
    const auto traj = integrate_ode(model, c.ode.v0, v1, c.ode.threshold, c.ode.dt0, c.ode.options);
    io::write_csv(out_dir / "trajectory.csv", {"t", "v", "vdot"}, {traj.t, traj.v, traj.vdot});
    json j{{"schema_version", kSchemaVersion}, {"v0", c.ode.v0}, {"v1", v1}, {"blew_up", traj.blew_up()},
           {"steps", traj.size() - 1}};
    if (!traj.blew_up()) {
        detail::write_json(out_dir / "summary.json", j);
        return no_blowup;
    }
    const auto fit = fit_blowup(traj, model.p());
    j["T_est"] = fit.T_est;
    j["exponent_est"] = fit.exponent_est;
    j["kappa_est"] = fit.kappa_est;
    j["amplitude_est"] = fit.amplitude_est;
    j["residual"] = fit.residual;
    j["window_points"] = fit.window_points;
    j["kappa"] = model.kappa();
    detail::write_json(out_dir / "summary.json", j);
    return ok;
}

// ---------------------------------------------------------------------------

inline int cmd_simulate(const RunConfig& c, const fs::path& out_dir)
{
    const Model model(c.model);
    const Grid grid = c.grid.make(c.model.N);
    SolverConfig cfg = c.solver;
    if (c.frame.x0) cfg.probe_x = {*c.frame.x0};
    const auto run = run_to_blowup(model, grid, make_init(c)(grid), cfg);

    for (std::size_t k = 0; k < run.snapshots.size(); ++k)
        io::save_snapshot(out_dir / "snapshots" / detail::snapshot_name(k, c.output.snapshot_format), run.snapshots[k],
                          c.output.snapshot_format);

    json v{{"schema_version", kSchemaVersion}, {"status", to_string(run.status)}, {"steps", run.steps},
           {"t_final", run.final_state.t}, {"max_abs_u", run.max_abs_u}, {"snapshots", run.snapshots.size()}};
    if (!run.blew_up()) {
        detail::write_json(out_dir / "verdict.json", v);
        return no_blowup;
    }
    const auto surf = estimate_surface(grid, run.history, model.p());
    std::vector<double> quality(surf.quality.size());
    for (std::size_t k = 0; k < quality.size(); ++k) quality[k] = surf.quality[k] == TQuality::ok ? 1.0 : 0.0;
    io::write_csv(out_dir / "surface.csv", {"x", "T", "slope", "ok"}, {surf.x, surf.T_of_x, surf.slope, quality});

    v["T_min"] = detail::number(surf.T_min);
    v["x_star"] = detail::number(surf.x_star);
    v["slope_max"] = detail::number(surf.slope_max);
    v["non_characteristic"] = detail::flag(surf.non_characteristic);
    if (c.frame.x0) {
        const auto nc = non_characteristic_check(surf, *c.frame.x0, 0.05, 0.05);
        v["frame"] = {{"x0", *c.frame.x0},
                      {"non_characteristic", detail::flag(detail::verdict_flag(nc.verdict))},
                      {"slope", detail::number(nc.slope)}};
        const auto& pr = run.probes.front();
        const auto est = estimate_T(pr.t, detail::abs_series(pr.u), model.p(),
                                    std::max(1.0, 10.0 * std::abs(pr.u.front())));
        v["frame"]["T_probe"] = detail::number(est.T);
        v["frame"]["T_quality"] = to_string(est.quality);
    }
    detail::write_json(out_dir / "verdict.json", v);
    return ok;
}

// ---------------------------------------------------------------------------

struct EnergySummary {
    double x0 = 0.0;
    double T0 = std::numeric_limits<double>::quiet_NaN();
    double exponent_est = std::numeric_limits<double>::quiet_NaN();
    double theta = 0.0;
    bool theorem1_pass = false;
    double q_envelope_ratio = std::numeric_limits<double>::quiet_NaN();
    std::optional<bool> non_characteristic;
    int exit_code = ok;
};

/// Monotonicity verdict plus the frame; a frame known to be characteristic gets a warning.
inline json theorem1_json(const MonotonicityResult& mono, double s_lo, double s_hi, double theta,
                          const SimilarityFrame& frame, std::optional<bool> non_characteristic)
{
    json t1 = to_json(mono, s_lo, s_hi, theta);
    t1["schema_version"] = kSchemaVersion;
    t1["frame"] = {{"x0", frame.x0}, {"T0", frame.T0}};
    t1["non_characteristic"] = detail::flag(non_characteristic);
    if (non_characteristic == false) t1["warning"] = "frame x0 is characteristic; the monotonicity statement does not apply";
    return t1;
}

inline EnergySummary energy_report(const RunConfig& c, const fs::path& out_dir)
{
    const Model model(c.model);
    EnergySummary sum;
    SimilarityFrame frame;
    std::vector<Snapshot> snaps;

    if (!c.snapshots.empty()) {
        if (!c.frame.T0 || !c.frame.x0) throw ConfigError("energy-report: stored snapshots need explicit frame x0 and T0");
        frame = {*c.frame.x0, *c.frame.T0};
        for (const auto& p : c.snapshots) snaps.push_back(io::load_snapshot(p));
    } else {
        const Grid grid = c.grid.make(c.model.N);
        const InitFn init = make_init(c);
        if (c.frame.T0 && c.frame.x0) {
            frame = {*c.frame.x0, *c.frame.T0};
        } else {
            const auto loc = locate_blowup(model, grid, init, c.solver, c.frame.x0);
            if (!loc.run.blew_up()) {
                sum.exit_code = no_blowup;
                detail::write_json(out_dir / "theorem1.json",
                                   {{"schema_version", kSchemaVersion}, {"status", to_string(loc.run.status)}});
                return sum;
            }
            if (!std::isfinite(loc.T0))
                throw NumericalError(std::string("energy-report: T(x0) estimate failed (") +
                                     to_string(loc.estimate.quality) + ")");
            frame = {loc.x0, c.frame.T0 ? *c.frame.T0 : loc.T0};
            sum.non_characteristic =
                detail::verdict_flag(non_characteristic_check(loc.coarse_surface, loc.x0, 0.05, 0.05).verdict);
            const auto& pr = loc.run.probes.front();
            try {
                sum.exponent_est = fit_blowup(pr.t, detail::abs_series(pr.u), model.p()).exponent_est;
            } catch (const NumericalError&) {
            }
        }
        const auto sv = s_grid(c.similarity.s_min, c.similarity.s_max, c.similarity.ds);
        auto fr = run_frame(model, grid, init, c.solver, frame, sv, c.similarity.margin);
        snaps = std::move(fr.snapshots);
        for (std::size_t k = 0; k < snaps.size(); ++k)
            io::save_snapshot(out_dir / "snapshots" / detail::snapshot_name(k, c.output.snapshot_format), snaps[k],
                              c.output.snapshot_format);
    }
    sum.x0 = frame.x0;
    sum.T0 = frame.T0;

    const QuadSet q = QuadSet::make(model, c.similarity.quad_nodes, c.grid.kind);
    auto reports = frame_reports(snaps, frame, model, q);
    sum.theta = c.diag.theta ? *c.diag.theta : choose_theta(reports, model, c.diag);
    apply_theta(reports, model, sum.theta);
    const auto mono = theorem1_monotonicity(reports, model, c.diag);
    sum.theorem1_pass = mono.pass();
    write_energy_csv(out_dir / "energy.csv", reports);

    const double s_lo = reports.front().s, s_hi = reports.back().s;
    detail::write_json(out_dir / "theorem1.json",
                       theorem1_json(mono, s_lo, s_hi, sum.theta, frame, sum.non_characteristic));

    double hardy = 0.0, sigma_c = 0.0;
    for (std::size_t k = 0; k < snaps.size(); ++k) {
        hardy = std::max(hardy, hardy_ratio(PhysicalBallSampler(snaps[k], frame, model), q));
        sigma_c = std::max(sigma_c, sigma0_bound_check(reports[k], model));
    }
    const auto bounds = corollary_bounds(reports);
    const auto qs = theorem2_physical(snaps, frame.T0, frame.x0, model, c.diag.S1);
    sum.q_envelope_ratio = qs.points.empty() ? std::numeric_limits<double>::quiet_NaN() : qs.envelope_ratio();
    json qp = json::array();
    for (const auto& pt : qs.points) qp.push_back({pt.t, pt.Q});
    json diag{{"schema_version", kSchemaVersion},
              {"hardy", verdict_json("hardy", s_lo, s_hi, std::isfinite(hardy), std::numeric_limits<double>::quiet_NaN(),
                                     {{"max_ratio", hardy}})},
              {"sigma0_bound", verdict_json("sigma0_bound", s_lo, s_hi, std::isfinite(sigma_c),
                                            std::numeric_limits<double>::quiet_NaN(), {{"C_emp", sigma_c}})},
              {"bounds", to_json(bounds)},
              {"theorem2", verdict_json("theorem2_envelope", s_lo, s_hi,
                                        qs.points.empty() ? false : std::isfinite(sum.q_envelope_ratio),
                                        std::numeric_limits<double>::quiet_NaN(),
                                        {{"t0", qs.t0},
                                         {"q_lo", qs.points.empty() ? json(nullptr) : json(qs.q_lo())},
                                         {"q_hi", qs.points.empty() ? json(nullptr) : json(qs.q_hi())},
                                         {"envelope_ratio", detail::number(sum.q_envelope_ratio)},
                                         {"resolution_exhausted", qs.resolution_exhausted}})},
              {"Q", qp},
              {"exponent_est", detail::number(sum.exponent_est)}};
    detail::write_json(out_dir / "diagnostics.json", diag);

    std::vector<double> s, H, D, lp1;
    for (const auto& r : reports) {
        s.push_back(r.s);
        H.push_back(r.H);
        D.push_back(r.D);
        lp1.push_back(r.lp1);
    }
    io::write_dat(out_dir / "H.dat", s, H, "s H");
    io::write_dat(out_dir / "D.dat", s, D, "s D");
    io::write_dat(out_dir / "lp1.dat", s, lp1, "s lp1");
    detail::write_plot_stub(out_dir);
    return sum;
}

inline int cmd_energy_report(const RunConfig& c, const fs::path& out_dir) { return energy_report(c, out_dir).exit_code; }

// ---------------------------------------------------------------------------

struct SweepRow {
    double p = 0.0;
    double a = 0.0;
    double amplitude = 0.0;
    EnergySummary summary;
    int exit_code = ok;
    std::string error;
};

inline std::vector<RunConfig> expand(const SweepConfig& s)
{
    auto axis = [](const std::vector<double>& v, double base) { return v.empty() ? std::vector<double>{base} : v; };
    std::vector<RunConfig> out;
    for (double p : axis(s.p, s.base.model.p))
        for (double a : axis(s.a, s.base.model.a))
            for (double amp : axis(s.amplitude, s.base.init.amplitude)) {
                RunConfig c = s.base;
                c.model.p = p;
                c.model.a = a;
                c.init.amplitude = amp;
                out.push_back(std::move(c));
            }
    return out;
}

inline int cmd_sweep(const SweepConfig& s, const fs::path& out_dir)
{
    if (s.size() > s.max_runs) throw ConfigError("sweep: run count exceeds the cap");
    const auto configs = expand(s);
    std::vector<SweepRow> rows(configs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < configs.size(); k = next++) {
            auto& row = rows[k];
            row.p = configs[k].model.p;
            row.a = configs[k].model.a;
            row.amplitude = configs[k].init.amplitude;
            char name[32];
            std::snprintf(name, sizeof name, "run_%03zu", k);
            try {
                row.summary = energy_report(configs[k], out_dir / name);
                row.exit_code = row.summary.exit_code;
            } catch (const std::exception& e) {
                row.exit_code = exit_code_for(std::current_exception());
                row.error = e.what();
            }
        }
    };
    const std::size_t threads = std::min(thread_cap(s.parallelism), configs.size());
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
        worker();
    }

    auto out = io::open_out(out_dir / "summary.csv");
    out << "run,p,a,amplitude,exponent_est,theta_used,theorem1_pass,q_envelope_ratio,exit_code,error\n";
    int code = ok;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& r = rows[k];
        std::string err = r.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        out << k << ',' << io::fmt(r.p) << ',' << io::fmt(r.a) << ',' << io::fmt(r.amplitude) << ','
            << io::fmt(r.summary.exponent_est) << ',' << io::fmt(r.summary.theta) << ','
            << (r.exit_code == ok && r.summary.theorem1_pass ? "true" : "false") << ','
            << io::fmt(r.summary.q_envelope_ratio) << ',' << r.exit_code << ',' << err << '\n';
        if (code == ok && r.exit_code != ok) code = r.exit_code;
    }
    return code;
}

} // namespace blowup::cli

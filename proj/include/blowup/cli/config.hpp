#pragma once

// JSON run and sweep configurations (schema_version 1).

#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "blowup/diagnostics.hpp"
#include "blowup/errors.hpp"
#include "blowup/interp.hpp"
#include "blowup/io.hpp"
#include "blowup/model.hpp"
#include "blowup/ode_profile.hpp"
#include "blowup/pipeline.hpp"
#include "blowup/wave_solver.hpp"

namespace blowup::cli {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

struct GridSpec {
    BallKind kind = BallKind::line;
    double x_min = -1.0;
    double x_max = 1.0;
    std::size_t nx = 4000;
    Boundary boundary = Boundary::periodic;

    Grid make(int N) const
    {
        if (kind == BallKind::radial) return Grid::radial(x_max, nx, N);
        return Grid::line(x_min, x_max, nx, boundary == Boundary::periodic);
    }
};

struct InitSpec {
    std::string preset = "bump";
    double amplitude = 1.0;
    bool amplitude_in_kappa = false; ///< amplitude is a multiple of kappa
    double width = 0.2;
    double center = 0.0;
    double v0 = 1.0;
    double value = 0.0;
    double velocity = 0.0;
    std::filesystem::path path;
};

struct FrameSpec {
    std::optional<double> x0; ///< empty: x_star of the located surface
    std::optional<double> T0; ///< empty: estimated T(x0)
};

struct SimilaritySpec {
    double s_min = 2.0;
    double s_max = 8.0;
    double ds = 0.25;
    std::size_t quad_nodes = 64;
    double margin = 0.05;
};

struct OdeSpec {
    double v0 = 1.0;
    std::optional<double> v1; ///< empty: on the zero-energy branch
    double threshold = 1e8;
    double dt0 = 1e-3;
    OdeOptions options;
};

struct OutputSpec {
    std::filesystem::path dir = "out";
    io::SnapshotFormat snapshot_format = io::SnapshotFormat::csv;
};

struct RunConfig {
    ModelParams model;
    GridSpec grid;
    InitSpec init;
    FrameSpec frame;
    SolverConfig solver;
    SimilaritySpec similarity;
    DiagnosticsConfig diag;
    OdeSpec ode;
    OutputSpec output;
    std::vector<std::filesystem::path> snapshots; ///< precomputed input for energy-report
};

struct SweepConfig {
    RunConfig base;
    std::vector<double> p;
    std::vector<double> a;
    std::vector<double> amplitude;
    std::size_t parallelism = 1;
    std::size_t max_runs = 64;

    std::size_t size() const
    {
        auto n = [](const std::vector<double>& v) { return std::max<std::size_t>(1, v.size()); };
        return n(p) * n(a) * n(amplitude);
    }
};

namespace detail {

template <class T>
T get_or(const json& j, const char* key, T fallback)
{
    if (!j.contains(key) || j[key].is_null()) return fallback;
    try {
        return j[key].get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config: bad value for '") + key + "'");
    }
}

/// A number, or the string "auto" (empty optional).
inline std::optional<double> number_or_auto(const json& j, const char* key)
{
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    if (j[key].is_string()) {
        if (j[key] == "auto") return std::nullopt;
        throw ConfigError(std::string("config: '") + key + "' must be a number or \"auto\"");
    }
    if (!j[key].is_number()) throw ConfigError(std::string("config: '") + key + "' must be a number or \"auto\"");
    return j[key].get<double>();
}

inline void check_keys(const json& j, const char* where, std::initializer_list<const char*> allowed)
{
    if (!j.is_object()) throw ConfigError(std::string("config: '") + where + "' must be an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError("config: unknown key '" + key + "' in '" + where + "'");
    }
}

inline const json& section(const json& j, const char* key)
{
    static const json empty = json::object();
    return j.contains(key) ? j[key] : empty;
}

} // namespace detail

inline void check_schema(const json& j)
{
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    if (!j.contains("schema_version")) throw ConfigError("config: missing schema_version");
    if (j["schema_version"] != kSchemaVersion)
        throw ConfigError("config: unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");
}

inline RunConfig parse_run_config(const json& j)
{
    using detail::get_or;
    using detail::section;
    check_schema(j);
    detail::check_keys(j, "config",
                       {"schema_version", "model", "grid", "init", "frame", "solver", "similarity", "diag", "ode",
                        "output", "snapshots"});
    RunConfig c;

    const json& m = section(j, "model");
    detail::check_keys(m, "model", {"p", "a", "M", "N", "perturbed"});
    c.model.p = get_or(m, "p", c.model.p);
    c.model.a = get_or(m, "a", c.model.a);
    c.model.M = get_or(m, "M", c.model.M);
    c.model.N = get_or(m, "N", c.model.N);
    c.model.perturbed = get_or(m, "perturbed", c.model.perturbed);
    Model{c.model}; // validates

    const json& g = section(j, "grid");
    detail::check_keys(g, "grid", {"kind", "x_min", "x_max", "nx", "boundary"});
    c.grid.kind = io::parse_kind(get_or<std::string>(g, "kind", "line"));
    c.grid.x_min = get_or(g, "x_min", c.grid.x_min);
    c.grid.x_max = get_or(g, "x_max", c.grid.x_max);
    c.grid.nx = get_or(g, "nx", c.grid.nx);
    const auto bc = get_or<std::string>(g, "boundary", "periodic");
    if (bc == "periodic") c.grid.boundary = Boundary::periodic;
    else if (bc == "absorbing") c.grid.boundary = Boundary::absorbing;
    else throw ConfigError("config: unknown boundary '" + bc + "'");
    if (c.grid.nx < 16) throw ConfigError("config: nx must be >= 16");
    if (c.grid.kind == BallKind::radial && c.model.N < 2) throw ConfigError("config: radial grids need model.N >= 2");
    if (c.grid.kind == BallKind::line && c.model.N != 1) throw ConfigError("config: line grids need model.N = 1");
    c.grid.make(c.model.N);

    const json& in = section(j, "init");
    detail::check_keys(in, "init", {"preset", "amplitude", "amplitude_unit", "width", "center", "v0", "value", "velocity", "path"});
    c.init.preset = get_or<std::string>(in, "preset", c.init.preset);
    c.init.amplitude = get_or(in, "amplitude", c.init.amplitude);
    const auto unit = get_or<std::string>(in, "amplitude_unit", "absolute");
    if (unit != "absolute" && unit != "kappa") throw ConfigError("config: amplitude_unit must be absolute or kappa");
    c.init.amplitude_in_kappa = unit == "kappa";
    c.init.width = get_or(in, "width", c.init.width);
    c.init.center = get_or(in, "center", c.init.center);
    c.init.v0 = get_or(in, "v0", c.init.v0);
    c.init.value = get_or(in, "value", c.init.value);
    c.init.velocity = get_or(in, "velocity", c.init.velocity);
    c.init.path = get_or<std::string>(in, "path", "");
    if (c.init.preset != "zero" && c.init.preset != "bump" && c.init.preset != "ode_manifold" &&
        c.init.preset != "constant" && c.init.preset != "file")
        throw ConfigError("config: unknown init preset '" + c.init.preset + "'");
    if (c.init.preset == "file" && c.init.path.empty()) throw ConfigError("config: file preset needs 'path'");
    if (c.init.preset == "bump" && !(c.init.width > 0.0)) throw ConfigError("config: bump width must be > 0");

    const json& fr = section(j, "frame");
    detail::check_keys(fr, "frame", {"x0", "T0"});
    c.frame.x0 = detail::number_or_auto(fr, "x0");
    c.frame.T0 = detail::number_or_auto(fr, "T0");
    if (c.frame.T0 && !(*c.frame.T0 > 0.0)) throw ConfigError("config: frame T0 must be > 0");

    const json& so = section(j, "solver");
    detail::check_keys(so, "solver",
                       {"dt0", "U_max", "nonlinear_cfl", "t_max", "max_steps", "snapshot_times", "snapshot_growth"});
    c.solver.dt0 = get_or(so, "dt0", c.solver.dt0);
    c.solver.U_max = get_or(so, "U_max", c.solver.U_max);
    c.solver.nonlinear_cfl = get_or(so, "nonlinear_cfl", c.solver.nonlinear_cfl);
    c.solver.t_max = get_or(so, "t_max", c.solver.t_max);
    c.solver.max_steps = get_or(so, "max_steps", c.solver.max_steps);
    c.solver.snapshot_times = get_or(so, "snapshot_times", std::vector<double>{});
    c.solver.snapshot_growth = get_or(so, "snapshot_growth", 0.0);
    c.solver.boundary = c.grid.boundary;
    if (!(c.solver.dt0 > 0.0) || !(c.solver.U_max > 0.0) || !(c.solver.nonlinear_cfl > 0.0))
        throw ConfigError("config: solver dt0, U_max and nonlinear_cfl must be > 0");

    const json& si = section(j, "similarity");
    detail::check_keys(si, "similarity", {"s_min", "s_max", "ds", "quad_nodes", "margin"});
    c.similarity.s_min = get_or(si, "s_min", c.similarity.s_min);
    c.similarity.s_max = get_or(si, "s_max", c.similarity.s_max);
    c.similarity.ds = get_or(si, "ds", c.similarity.ds);
    c.similarity.quad_nodes = get_or(si, "quad_nodes", c.similarity.quad_nodes);
    c.similarity.margin = get_or(si, "margin", c.similarity.margin);
    s_grid(c.similarity.s_min, c.similarity.s_max, c.similarity.ds);
    if (!(c.similarity.s_min >= 1.0)) throw ConfigError("config: similarity s_min must be >= 1");
    if (c.similarity.quad_nodes < 2) throw ConfigError("config: quad_nodes must be >= 2");

    const json& d = section(j, "diag");
    detail::check_keys(d, "diag", {"S1", "theta", "tolerance", "tolerance_factor", "theta_cap"});
    c.diag.S1 = get_or(d, "S1", c.diag.S1);
    c.diag.theta = detail::number_or_auto(d, "theta");
    c.diag.tolerance = detail::number_or_auto(d, "tolerance");
    c.diag.tolerance_factor = get_or(d, "tolerance_factor", c.diag.tolerance_factor);
    c.diag.theta_cap = get_or(d, "theta_cap", c.diag.theta_cap);
    c.diag.validate();

    const json& o = section(j, "ode");
    detail::check_keys(o, "ode", {"v0", "v1", "threshold", "dt0", "cfl", "max_steps"});
    c.ode.v0 = get_or(o, "v0", c.ode.v0);
    c.ode.v1 = o.contains("v1") && o["v1"].is_string() && o["v1"] == "manifold" ? std::nullopt
                                                                                 : detail::number_or_auto(o, "v1");
    c.ode.threshold = get_or(o, "threshold", c.ode.threshold);
    c.ode.dt0 = get_or(o, "dt0", c.ode.dt0);
    c.ode.options.cfl = get_or(o, "cfl", c.ode.options.cfl);
    c.ode.options.max_steps = get_or(o, "max_steps", c.ode.options.max_steps);

    const json& out = section(j, "output");
    detail::check_keys(out, "output", {"dir", "snapshot_format"});
    c.output.dir = get_or<std::string>(out, "dir", c.output.dir.string());
    const auto sf = get_or<std::string>(out, "snapshot_format", "csv");
    if (sf == "csv") c.output.snapshot_format = io::SnapshotFormat::csv;
    else if (sf == "binary") c.output.snapshot_format = io::SnapshotFormat::binary;
    else throw ConfigError("config: unknown snapshot_format '" + sf + "'");

    for (const auto& p : get_or(j, "snapshots", std::vector<std::string>{})) c.snapshots.emplace_back(p);
    return c;
}

inline SweepConfig parse_sweep_config(const json& j)
{
    check_schema(j);
    detail::check_keys(j, "sweep", {"schema_version", "base", "axes", "parallelism", "max_runs"});
    if (!j.contains("base")) throw ConfigError("sweep: missing 'base'");
    json base = j["base"];
    if (base.is_object() && !base.contains("schema_version")) base["schema_version"] = kSchemaVersion;
    SweepConfig s;
    s.base = parse_run_config(base);
    const json& axes = detail::section(j, "axes");
    detail::check_keys(axes, "axes", {"p", "a", "amplitude"});
    s.p = detail::get_or(axes, "p", std::vector<double>{});
    s.a = detail::get_or(axes, "a", std::vector<double>{});
    s.amplitude = detail::get_or(axes, "amplitude", std::vector<double>{});
    s.parallelism = detail::get_or(j, "parallelism", s.parallelism);
    s.max_runs = detail::get_or(j, "max_runs", s.max_runs);
    if (s.parallelism < 1) throw ConfigError("sweep: parallelism must be >= 1");
    if (s.size() > s.max_runs)
        throw ConfigError("sweep: " + std::to_string(s.size()) + " runs exceed the cap of " + std::to_string(s.max_runs));
    return s;
}

inline json load_json(const std::filesystem::path& path)
{
    try {
        return json::parse(io::read_text(path));
    } catch (const json::parse_error& e) {
        throw ConfigError("config: " + path.string() + ": " + e.what());
    }
}

/// Samples a stored snapshot onto another grid of the same kind.
inline FieldState resample(const Snapshot& src, const Grid& grid)
{
    if (src.grid.kind != grid.kind) throw ConfigError("init file: grid kind differs from the config");
    const EdgeRule edge = grid.kind == BallKind::radial ? EdgeRule::mirror : EdgeRule::clamp;
    FieldState s{src.state.t, std::vector<double>(grid.n), std::vector<double>(grid.n)};
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double x = grid.x(i);
        if (x < src.grid.x_min - 1e-12 || x > src.grid.x_max() + 1e-12)
            throw ConfigError("init file: snapshot does not cover the grid");
        s.u[i] = cubic_sample(src.state.u, src.grid.x_min, src.grid.dx, x, edge).value;
        s.ut[i] = cubic_sample(src.state.ut, src.grid.x_min, src.grid.dx, x, edge).value;
    }
    s.t = 0.0;
    return s;
}

inline InitFn make_init(const RunConfig& c)
{
    const Model model(c.model);
    InitSpec in = c.init;
    if (in.amplitude_in_kappa) in.amplitude *= model.kappa();
    if (in.preset == "zero") return [](const Grid& g) { return zero_data(g); };
    if (in.preset == "bump") return [in](const Grid& g) { return bump_data(g, in.amplitude, in.width, in.center); };
    if (in.preset == "constant") return [in](const Grid& g) { return constant_data(g, in.value, in.velocity); };
    if (in.preset == "ode_manifold") {
        const double v1 = manifold_velocity(model, in.v0);
        return [in, v1](const Grid& g) { return constant_data(g, in.v0, v1); };
    }
    auto snap = std::make_shared<const Snapshot>(io::load_snapshot(in.path));
    return [snap](const Grid& g) {
        if (snap->grid.n == g.n && snap->grid.dx == g.dx && snap->grid.x_min == g.x_min) {
            FieldState s = snap->state;
            s.t = 0.0;
            return s;
        }
        return resample(*snap, g);
    };
}

} // namespace blowup::cli

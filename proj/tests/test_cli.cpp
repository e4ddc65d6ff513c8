#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "blowup/cli/commands.hpp"

using namespace blowup;
using namespace blowup::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / "blowup_cli_tests" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) { return io::read_text(p); }

json base_json()
{
    return json::parse(R"({
        "schema_version": 1,
        "model": {"p": 3, "a": 2},
        "grid": {"kind": "line", "x_min": -1, "x_max": 1, "nx": 2000},
        "init": {"preset": "bump", "amplitude": 5, "amplitude_unit": "kappa", "width": 0.2},
        "solver": {"U_max": 1e8},
        "similarity": {"s_min": 2, "s_max": 4, "ds": 0.25, "quad_nodes": 32}
    })");
}

json stationary_json()
{
    return json::parse(R"({
        "schema_version": 1,
        "model": {"p": 3, "a": 2, "perturbed": false},
        "grid": {"kind": "line", "x_min": -1, "x_max": 1, "nx": 400},
        "init": {"preset": "ode_manifold", "v0": 1.4142135623730951},
        "frame": {"x0": 0, "T0": 1},
        "solver": {"dt0": 1e-4},
        "similarity": {"s_min": 1, "s_max": 4, "ds": 0.25, "quad_nodes": 32}
    })");
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

int run_exe(const std::string& args)
{
    const std::string cmd = std::string(BLOWUP_LAB_EXE) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

} // namespace

TEST(Config, DefaultsAndAuto)
{
    const auto c = parse_run_config(base_json());
    EXPECT_EQ(c.model.p, 3.0);
    EXPECT_EQ(c.grid.nx, 2000u);
    EXPECT_FALSE(c.frame.x0);
    EXPECT_FALSE(c.frame.T0);
    EXPECT_FALSE(c.diag.theta);
    EXPECT_TRUE(c.init.amplitude_in_kappa);
    auto j = base_json();
    j["frame"] = {{"x0", 0.1}, {"T0", "auto"}};
    const auto d = parse_run_config(j);
    EXPECT_EQ(*d.frame.x0, 0.1);
    EXPECT_FALSE(d.frame.T0);
}

TEST(Config, Rejections)
{
    auto bad = [](auto edit) {
        json j = base_json();
        edit(j);
        return j;
    };
    EXPECT_THROW(parse_run_config(bad([](json& j) { j.erase("schema_version"); })), ConfigError);
    EXPECT_THROW(parse_run_config(bad([](json& j) { j["schema_version"] = 2; })), ConfigError);
    EXPECT_THROW(parse_run_config(bad([](json& j) { j["grid"]["nx"] = 15; })), ConfigError);
    EXPECT_THROW(parse_run_config(bad([](json& j) { j["init"]["preset"] = "gauss"; })), ConfigError);
    EXPECT_THROW(parse_run_config(bad([](json& j) { j["grid"]["colour"] = 1; })), ConfigError);
    EXPECT_THROW(parse_run_config(bad([](json& j) { j["model"]["p"] = 0.5; })), ConfigError);
    EXPECT_THROW(parse_run_config(bad([](json& j) { j["frame"] = {{"T0", "soon"}}; })), ConfigError);
    EXPECT_THROW(parse_run_config(bad([](json& j) { j["grid"]["nx"] = "many"; })), ConfigError);
    EXPECT_THROW(parse_run_config(bad([](json& j) { j["similarity"]["s_min"] = 0.5; })), ConfigError);
}

TEST(Ode, ExactManifold)
{
    auto j = stationary_json();
    j["ode"] = {{"v0", std::sqrt(2.0)}, {"v1", "manifold"}, {"threshold", 1e8}};
    const auto dir = scratch("ode_exact");
    ASSERT_EQ(cmd_ode(parse_run_config(j), dir), ok);
    const auto s = read_json(dir / "summary.json");
    EXPECT_NEAR(s["exponent_est"].get<double>(), 1.0, 0.01);
    EXPECT_NEAR(s["T_est"].get<double>(), 1.0, 1e-4);
    EXPECT_NEAR(s["kappa_est"].get<double>(), std::sqrt(2.0), 0.01 * std::sqrt(2.0));
    EXPECT_TRUE(fs::exists(dir / "trajectory.csv"));
}

TEST(Ode, PerturbedKappa)
{
    auto j = base_json();
    j["ode"] = {{"v0", 1.0}};
    const auto dir = scratch("ode_perturbed");
    ASSERT_EQ(cmd_ode(parse_run_config(j), dir), ok);
    EXPECT_NEAR(read_json(dir / "summary.json")["kappa_est"].get<double>(), std::sqrt(2.0), 0.05 * std::sqrt(2.0));
}

TEST(Ode, ZeroDataDoesNotBlowUp)
{
    auto j = base_json();
    j["ode"] = {{"v0", 0.0}, {"v1", 0.0}, {"max_steps", 500}};
    EXPECT_EQ(cmd_ode(parse_run_config(j), scratch("ode_zero")), no_blowup);
}

TEST(Simulate, BumpSurface)
{
    auto j = base_json();
    j["frame"] = {{"x0", 0.0}};
    j["solver"]["snapshot_growth"] = 100;
    const auto dir = scratch("sim_bump");
    ASSERT_EQ(cmd_simulate(parse_run_config(j), dir), ok);
    const auto v = read_json(dir / "verdict.json");
    EXPECT_EQ(v["status"], "blew_up");
    const double T = v["T_min"].get<double>();
    EXPECT_TRUE(std::isfinite(T));
    EXPECT_NEAR(v["frame"]["T_probe"].get<double>(), T, 1e-3 * T);
    EXPECT_EQ(v["frame"]["non_characteristic"], true);
    EXPECT_TRUE(fs::exists(dir / "surface.csv"));
    EXPECT_FALSE(fs::is_empty(dir / "snapshots"));
}

TEST(Simulate, ZeroAndFlat)
{
    auto z = base_json();
    z["init"] = {{"preset", "zero"}};
    z["solver"]["t_max"] = 0.5;
    EXPECT_EQ(cmd_simulate(parse_run_config(z), scratch("sim_zero")), no_blowup);

    auto f = base_json();
    f["grid"]["nx"] = 64;
    f["init"] = {{"preset", "ode_manifold"}, {"v0", 1.0}};
    const auto dir = scratch("sim_flat");
    ASSERT_EQ(cmd_simulate(parse_run_config(f), dir), ok);
    const auto text = slurp(dir / "surface.csv");
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    int rows = 0;
    while (std::getline(in, line)) {
        const auto cells = io::split(line);
        EXPECT_EQ(io::parse_double(cells[2]), 0.0) << line;
        ++rows;
    }
    EXPECT_GT(rows, 10);
}

TEST(EnergyReport, StationaryProfile)
{
    const auto dir = scratch("er_kappa");
    ASSERT_EQ(cmd_energy_report(parse_run_config(stationary_json()), dir), ok);
    std::istringstream in(slurp(dir / "energy.csv"));
    std::string line;
    std::getline(in, line);
    double prev_H = std::numeric_limits<double>::infinity();
    while (std::getline(in, line)) {
        const auto c = io::split(line);
        const double E0 = io::parse_double(c[1]), H = io::parse_double(c[5]), D = io::parse_double(c[6]);
        EXPECT_NEAR(E0, 4.0 / 3.0, 1e-6);
        EXPECT_LT(H, prev_H);
        EXPECT_LT(D, 1e-8);
        prev_H = H;
    }
    EXPECT_EQ(read_json(dir / "theorem1.json")["pass"], true);
    for (const char* f : {"H.dat", "D.dat", "lp1.dat", "plot.gp", "diagnostics.json"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
}

TEST(EnergyReport, PerturbedBumpPasses)
{
    const auto dir = scratch("er_bump");
    const auto sum = energy_report(parse_run_config(base_json()), dir);
    EXPECT_EQ(sum.exit_code, ok);
    EXPECT_TRUE(sum.theorem1_pass);
    EXPECT_EQ(sum.non_characteristic, true);
    EXPECT_NEAR(sum.exponent_est, 1.0, 0.05);
    const auto t1 = read_json(dir / "theorem1.json");
    EXPECT_EQ(t1["check"], "theorem1_monotonicity");
    EXPECT_EQ(t1["pass"], true);
    EXPECT_FALSE(t1.contains("warning"));
}

TEST(EnergyReport, StoredSnapshotsReproduceBitExactly)
{
    for (const char* format : {"csv", "binary"}) {
        auto j = stationary_json();
        j["output"] = {{"snapshot_format", format}};
        const auto first = scratch(std::string("er_first_") + format);
        ASSERT_EQ(cmd_energy_report(parse_run_config(j), first), ok);
        std::vector<std::string> files;
        for (const auto& e : fs::directory_iterator(first / "snapshots")) files.push_back(e.path().string());
        std::sort(files.begin(), files.end());
        j["snapshots"] = files;
        const auto second = scratch(std::string("er_second_") + format);
        ASSERT_EQ(cmd_energy_report(parse_run_config(j), second), ok);
        EXPECT_EQ(slurp(first / "energy.csv"), slurp(second / "energy.csv"));
        EXPECT_EQ(slurp(first / "theorem1.json"), slurp(second / "theorem1.json"));
    }
}

TEST(EnergyReport, Deterministic)
{
    const auto a = scratch("det_a"), b = scratch("det_b");
    ASSERT_EQ(cmd_energy_report(parse_run_config(stationary_json()), a), ok);
    ASSERT_EQ(cmd_energy_report(parse_run_config(stationary_json()), b), ok);
    EXPECT_EQ(slurp(a / "energy.csv"), slurp(b / "energy.csv"));
    EXPECT_EQ(slurp(a / "diagnostics.json"), slurp(b / "diagnostics.json"));
}

TEST(EnergyReport, InvalidFrame)
{
    // T0 precedes the s-grid's snapshot times.
    auto j = stationary_json();
    j["frame"]["T0"] = 0.1;
    EXPECT_THROW(cmd_energy_report(parse_run_config(j), scratch("er_bad")), ConfigError);
    auto k = stationary_json();
    const auto first = scratch("er_bad_src");
    ASSERT_EQ(cmd_energy_report(parse_run_config(k), first), ok);
    k["snapshots"] = {(first / "snapshots" / "snap_0003.csv").string(), (first / "snapshots" / "snap_0004.csv").string()};
    k["frame"]["T0"] = 0.5;
    EXPECT_THROW(cmd_energy_report(parse_run_config(k), scratch("er_bad_stored")), ConfigError);
}

TEST(EnergyReport, CharacteristicFrameWarns)
{
    MonotonicityResult mono;
    const auto j = theorem1_json(mono, 2.0, 3.0, 0.0, {0.3, 0.5}, false);
    EXPECT_EQ(j["non_characteristic"], false);
    EXPECT_TRUE(j.contains("warning"));
    EXPECT_EQ(j["pass"], true);
    EXPECT_TRUE(theorem1_json(mono, 2.0, 3.0, 0.0, {0.3, 0.5}, std::nullopt)["non_characteristic"].is_null());
}

TEST(Sweep, EmptyAxesEqualsBaseRun)
{
    json s{{"schema_version", 1}, {"base", stationary_json()}};
    const auto dir = scratch("sweep_single");
    const auto cfg = parse_sweep_config(s);
    EXPECT_EQ(cfg.size(), 1u);
    ASSERT_EQ(cmd_sweep(cfg, dir), ok);
    const auto single = scratch("sweep_single_ref");
    ASSERT_EQ(cmd_energy_report(parse_run_config(stationary_json()), single), ok);
    EXPECT_EQ(slurp(dir / "run_000" / "energy.csv"), slurp(single / "energy.csv"));
    std::istringstream in(slurp(dir / "summary.csv"));
    std::string line;
    int rows = -1;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 1);
}

TEST(Sweep, GridAndFailures)
{
    json s{{"schema_version", 1}, {"base", base_json()}, {"parallelism", 2}};
    s["base"]["grid"]["nx"] = 1000;
    s["base"]["similarity"]["s_max"] = 3;
    s["axes"] = {{"p", {2, 3}}, {"a", {1.5, 2}}};
    const auto dir = scratch("sweep_grid");
    ASSERT_EQ(cmd_sweep(parse_sweep_config(s), dir), ok);
    std::istringstream in(slurp(dir / "summary.csv"));
    std::string line;
    std::getline(in, line);
    int rows = 0;
    while (std::getline(in, line)) {
        const auto c = io::split(line);
        EXPECT_EQ(c[6], "true") << line;
        ++rows;
    }
    EXPECT_EQ(rows, 4);

    // One combination with a = 1 is invalid; the others still run.
    s["axes"] = {{"a", {1.0, 2.0}}};
    const auto dir2 = scratch("sweep_fail");
    EXPECT_EQ(cmd_sweep(parse_sweep_config(s), dir2), config_error);
    EXPECT_TRUE(fs::exists(dir2 / "run_001" / "energy.csv"));
}

TEST(Sweep, CapAndThreads)
{
    json s{{"schema_version", 1}, {"base", base_json()}, {"max_runs", 3}};
    s["axes"] = {{"p", {2, 3}}, {"a", {1.5, 2}}};
    EXPECT_THROW(parse_sweep_config(s), ConfigError);

    ::setenv("BLOWUP_LAB_THREADS", "2", 1);
    EXPECT_EQ(thread_cap(8), 2u);
    EXPECT_EQ(thread_cap(1), 1u);
    ::setenv("BLOWUP_LAB_THREADS", "zero", 1);
    EXPECT_THROW(thread_cap(4), ConfigError);
    ::unsetenv("BLOWUP_LAB_THREADS");
    EXPECT_EQ(thread_cap(3), 3u);
}

TEST(Executable, ExitCodes)
{
    const auto dir = scratch("exe");
    auto write = [&](const std::string& name, const json& j) {
        std::ofstream(dir / name) << j.dump();
        return (dir / name).string();
    };
    auto ode = stationary_json();
    ode["ode"] = {{"v0", std::sqrt(2.0)}};
    EXPECT_EQ(run_exe("ode --config " + write("ode.json", ode) + " --out " + (dir / "o").string()), 0);
    auto zero = base_json();
    zero["init"] = {{"preset", "zero"}};
    zero["solver"]["t_max"] = 0.2;
    EXPECT_EQ(run_exe("simulate --config " + write("zero.json", zero) + " --out " + (dir / "z").string()), 3);
    auto bad = base_json();
    bad["schema_version"] = 7;
    EXPECT_EQ(run_exe("simulate --config " + write("bad.json", bad)), 2);
    json sweep{{"schema_version", 1}, {"base", base_json()}, {"max_runs", 1}, {"axes", {{"p", {2, 3}}}}};
    EXPECT_EQ(run_exe("sweep --config " + write("sweep.json", sweep) + " --out " + (dir / "s").string()), 2);
    EXPECT_FALSE(fs::exists(dir / "s"));
    EXPECT_EQ(run_exe("simulate"), 2);
    auto unstable = stationary_json();
    unstable["frame"]["T0"] = 1.5; // the solution blows up at t = 1, before the frame's last snapshot
    EXPECT_EQ(run_exe("energy-report --config " + write("late.json", unstable) + " --out " + (dir / "l").string()), 4);
}

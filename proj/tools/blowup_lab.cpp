// blowup-lab ode|simulate|energy-report|sweep --config <file> [--out <dir>]

#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "blowup/cli/commands.hpp"

int main(int argc, char** argv)
{
    using namespace blowup::cli;

    CLI::App app{"Similarity-variable diagnostics for perturbed semilinear wave blow-up"};
    app.require_subcommand(1);
    std::string config, out;
    auto add = [&](const char* name, const char* help) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config, "JSON configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory (overrides output.dir)");
        return sub;
    };
    auto* ode = add("ode", "integrate the blow-up ODE and fit its rate");
    auto* simulate = add("simulate", "run the wave solver and estimate the blow-up surface");
    auto* energy = add("energy-report", "energy reports and verdicts in a similarity frame");
    auto* sweep = add("sweep", "energy reports over a grid of p, a and amplitude");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : config_error;
    }

    try {
        const auto j = load_json(config);
        if (sweep->parsed()) {
            const auto s = parse_sweep_config(j);
            return cmd_sweep(s, out.empty() ? s.base.output.dir : std::filesystem::path(out));
        }
        const auto c = parse_run_config(j);
        const std::filesystem::path dir = out.empty() ? c.output.dir : std::filesystem::path(out);
        if (ode->parsed()) return cmd_ode(c, dir);
        if (simulate->parsed()) return cmd_simulate(c, dir);
        if (energy->parsed()) return cmd_energy_report(c, dir);
    } catch (const std::exception& e) {
        std::cerr << "blowup-lab: " << e.what() << '\n';
        return exit_code_for(std::current_exception());
    }
    return config_error;
}

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mixedflow/analysis/sphere.hpp"
#include "mixedflow/csv.hpp"
#include "mixedflow/io/config.hpp"
#include "mixedflow/io/presets.hpp"
#include "mixedflow/io/snapshot.hpp"
#include "mixedflow/version.hpp"

namespace {

using namespace mixedflow;

int report(const io::ExperimentReport& rep)
{
    for (const std::string& n : rep.notes) std::cout << n << '\n';
    for (const io::Check& c : rep.checks) std::cout << c.describe() << '\n';
    std::cout << "output: " << rep.out_dir << '\n';
    if (!rep.pass()) {
        std::cerr << rep.name << ": FAIL\n";
        return 1;
    }
    std::cout << rep.name << ": PASS\n";
    return 0;
}

int fit_sphere_command(const std::string& path)
{
    const io::Snapshot s = io::read_snapshot(path);
    const harmonic::Grid g = harmonic::build_grid(s.n, s.lmax, 2);
    const auto fit = analysis::fit_sphere_coeffs(s.state.rho, g, s.R);
    std::cout << "t " << csv::format(s.state.t) << '\n';
    std::cout << "z0 " << csv::format(fit.coords.radius_offset()) << '\n';
    std::cout << "center";
    for (double c : fit.coords.center()) std::cout << ' ' << csv::format(c);
    std::cout << '\n';
    std::cout << "radius " << csv::format(s.R + fit.coords.radius_offset()) << '\n';
    std::cout << "residual_sup " << csv::format(fit.residual_sup) << '\n';
    std::cout << "residual_l2 " << csv::format(fit.residual_l2) << '\n';
    std::cout << "iterations " << fit.iterations << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Mixed-volume-preserving curvature flow of radial graphs over a sphere"};
    app.set_version_flag("--version", std::string("mixedflow ") + version);
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run the flow described by a config file");
    run->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);

    std::string preset_name;
    std::vector<std::string> overrides;
    std::string preset_help = "Run a named experiment and check it against the analytic predictions (";
    for (const auto& p : io::presets()) preset_help += p.name + (&p == &io::presets().back() ? ")" : ", ");
    auto* preset = app.add_subcommand("preset", preset_help);
    preset->add_option("name", preset_name, "Preset name")->required();
    preset->add_option("--set", overrides, "Override a config key (key=value)");

    int spectrum_lmax = 8;
    auto* spectrum = app.add_subcommand("spectrum", "Numerical Jacobian of G at zero against the analytic spectrum");
    spectrum->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
    spectrum->add_option("--lmax", spectrum_lmax, "Highest degree in the Jacobian")->check(CLI::Range(2, 32));

    std::string snapshot_path;
    auto* fit = app.add_subcommand("fit-sphere", "Best-fitting sphere of a snapshot");
    fit->add_option("--snapshot", snapshot_path, "Snapshot file")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return report(io::run_config(io::parse_config(config_path)));
        if (*preset) return report(io::run_experiment(preset_name, overrides));
        if (*spectrum) {
            const auto rep = io::spectrum_config(io::parse_config(config_path), spectrum_lmax);
            return report(rep);
        }
        if (*fit) return fit_sphere_command(snapshot_path);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

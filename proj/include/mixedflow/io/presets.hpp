#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mixedflow/analysis/decay.hpp"
#include "mixedflow/analysis/spectrum.hpp"
#include "mixedflow/analysis/sphere.hpp"
#include "mixedflow/csv.hpp"
#include "mixedflow/flow/run.hpp"
#include "mixedflow/io/config.hpp"
#include "mixedflow/io/snapshot.hpp"
#include "mixedflow/version.hpp"

namespace mixedflow::io {

/// One pass/fail comparison, printed with its threshold.
struct Check {
    enum class Kind { at_most, relative, equal };
    std::string name;
    Kind kind = Kind::at_most;
    double value = 0.0;
    double target = 0.0;
    /// Relative tolerance for Kind::relative.
    double tol = 0.0;

    bool pass() const
    {
        switch (kind) {
        case Kind::at_most: return value <= target;
        case Kind::relative: return std::abs(value - target) <= tol * std::abs(target);
        case Kind::equal: return value == target;
        }
        return false;
    }

    std::string describe() const
    {
        std::ostringstream os;
        os << name << ": value=" << csv::format(value);
        switch (kind) {
        case Kind::at_most: os << " required <= " << csv::format(target); break;
        case Kind::relative: os << " required " << csv::format(target) << " within " << csv::format(100.0 * tol) << "%"; break;
        case Kind::equal: os << " required == " << csv::format(target); break;
        }
        os << (pass() ? " PASS" : " FAIL");
        return os.str();
    }
};

struct ExperimentReport {
    std::string name;
    std::vector<Check> checks;
    std::vector<std::string> notes;
    std::string out_dir;

    bool pass() const
    {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass(); });
    }
};

struct Preset {
    std::string name;
    std::string summary;
    std::string config;
};

inline const std::vector<Preset>& presets()
{
    static const std::vector<Preset> list = {
        {"stationarity", "a concentric sphere has G = 0",
         "n = 2\nR = 1\nk = -1\nspeed = mean\ninit = const:0.5\nT = 0.1\n"},
        {"linear-decay", "a small degree-m mode decays at the linear rate",
         "n = 2\nR = 1\nk = -1\nspeed = mean\nintegrator = imex\ndt = 1e-4\nT = 1\ncadence = 100\ninit = harmonic:2,1,1e-4\n"},
        {"zero-modes", "constant and degree-1 data stay put and remain a sphere",
         "n = 2\nR = 1\nk = -1\nspeed = mean\nintegrator = imex\nT = 2\ncadence = 20\n"
         "init = const:1e-3; harmonic:1,1,1e-3; harmonic:1,2,-5e-4; harmonic:1,3,7e-4\n"},
        {"conservation", "V_{n-k} is preserved along the flow",
         "n = 2\nR = 1\nk = 0\nspeed = mean\nintegrator = rk4\ndt = 1e-4\nT = 0.5\ncadence = 100\ninit = random:0.05,6,42\n"},
        {"nonlinear-convergence", "random data converge exponentially to a nearby sphere",
         "n = 2\nR = 1\nk = -1\nspeed = mean\nintegrator = imex\nT = 3\ncadence = 10\ninit = random:0.05,6,42\n"},
        {"spectrum", "numerical Jacobian of G at 0 against the analytic spectrum",
         "n = 2\nR = 1\nk = -1\nspeed = mean\nL_max = 16\n"},
    };
    return list;
}

inline const Preset& find_preset(const std::string& name)
{
    for (const Preset& p : presets()) {
        if (p.name == name) return p;
    }
    std::string known;
    for (const Preset& p : presets()) known += (known.empty() ? "" : ", ") + p.name;
    throw InvalidArgument("unknown preset '" + name + "' (" + known + ")");
}

/// Preset text with `key=value` overrides replacing (or adding) lines.
inline std::string preset_config_text(const Preset& p, const std::vector<std::string>& overrides)
{
    std::vector<std::string> lines;
    std::istringstream in(p.config);
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    for (const std::string& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos) throw InvalidArgument("override '" + ov + "' must be key=value");
        const std::string key(detail::trim(std::string_view(ov).substr(0, eq)));
        std::erase_if(lines, [&](const std::string& l) {
            const auto e = l.find('=');
            return e != std::string::npos && detail::trim(std::string_view(l).substr(0, e)) == key;
        });
        lines.push_back(key + " = " + std::string(detail::trim(std::string_view(ov).substr(eq + 1))));
    }
    std::string text;
    for (const std::string& l : lines) text += l + "\n";
    return text;
}

/// Output directory: MIXEDFLOW_OUT wins over the configured one.
inline std::string resolve_out_dir(const std::string& configured)
{
    if (const char* env = std::getenv("MIXEDFLOW_OUT"); env && *env) return env;
    return configured;
}

inline std::string run_csv_header(const ExperimentConfig& cfg, const harmonic::Grid& g)
{
    std::ostringstream os;
    os << "# mixedflow " << version << '\n';
    for (const std::string& e : cfg.echo) os << "# " << e << '\n';
    os << "# speed " << cfg.flow.speed.describe() << '\n';
    os << "# grid " << g.describe() << '\n';
    os << "t,h_k,V,sup_G,sup_rho,sphere_residual_sup";
    for (int l = 2; l <= 8; ++l) os << ",mode_energy_l" << l;
    os << '\n';
    return os.str();
}

inline std::string run_csv_row(const flow::DiagnosticRecord& d)
{
    std::string row = csv::format(d.t) + ',' + csv::format(d.h_k) + ',' + csv::format(d.V) + ',' + csv::format(d.sup_G) + ',' +
                      csv::format(d.sup_rho) + ',' + csv::format(d.sphere_residual_sup);
    for (std::size_t l = 2; l <= 8; ++l) row += ',' + csv::format(l < d.mode_energy.size() ? d.mode_energy[l] : 0.0);
    return row + '\n';
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write " + path.string());
    out << text;
}

inline std::vector<double> series(const std::vector<flow::DiagnosticRecord>& r, double flow::DiagnosticRecord::*field)
{
    std::vector<double> out;
    for (const auto& d : r) out.push_back(d.*field);
    return out;
}

} // namespace detail

/// Runs the flow described by `cfg`, writing run.csv and final.txt (a
/// snapshot of the last state) into `out_dir`.
inline flow::RunResult run_and_record(const ExperimentConfig& cfg, const std::filesystem::path& out_dir)
{
    const flow::FlowSolver solver(cfg.flow);
    const std::vector<double> rho0 = initial_height(cfg.init, solver.grid(), cfg.flow.R);
    std::filesystem::create_directories(out_dir);
    std::ofstream csv_out(out_dir / "run.csv", std::ios::binary);
    if (!csv_out) throw InvalidArgument("cannot write " + (out_dir / "run.csv").string());
    csv_out << run_csv_header(cfg, solver.grid());
    flow::RunResult r = flow::run(solver, rho0, [&](const flow::FlowState&, const flow::DiagnosticRecord& d) { csv_out << run_csv_row(d); });
    write_snapshot(Snapshot{cfg.flow.n, cfg.flow.R, cfg.flow.lmax, r.final_state}, (out_dir / "final.txt").string());
    return r;
}

namespace detail {

inline void check_stationarity(const ExperimentConfig& cfg, const flow::RunResult& r, ExperimentReport& rep)
{
    const double scale = cfg.flow.speed.with_radius(cfg.flow.R).umbilic_value();
    double sup = 0.0;
    for (const auto& d : r.records) sup = std::max(sup, d.sup_G);
    rep.checks.push_back({"sup_G / F(kappa_0)", Check::Kind::at_most, sup / scale, 1e-10, 0.0});
}

inline void check_linear_decay(const ExperimentConfig& cfg, const flow::RunResult& r, ExperimentReport& rep)
{
    const flow::FlowSolver solver(cfg.flow);
    const auto& e0 = r.records.front().mode_energy;
    double total = 0.0;
    for (double e : e0) total += e;
    const auto t = series(r.records, &flow::DiagnosticRecord::t);
    for (int l = 2; l <= cfg.flow.lmax; ++l) {
        if (!(e0[static_cast<std::size_t>(l)] > 1e-12 * total)) continue;
        std::vector<double> amp;
        for (const auto& d : r.records) amp.push_back(std::sqrt(d.mode_energy[static_cast<std::size_t>(l)]));
        const double rate = analysis::fit_decay_rate(t, amp);
        rep.checks.push_back({"amplitude rate degree " + std::to_string(l), Check::Kind::relative, rate, solver.linear_eigenvalue(l), 0.01});
    }
    if (rep.checks.empty()) rep.notes.push_back("no degree >= 2 content in the initial data; nothing to fit");
}

inline void check_zero_modes(const ExperimentConfig& cfg, const flow::RunResult& r, ExperimentReport& rep)
{
    const flow::FlowSolver solver(cfg.flow);
    const auto t = series(r.records, &flow::DiagnosticRecord::t);
    std::vector<double> amp;
    for (const auto& d : r.records) amp.push_back(std::sqrt(d.mode_energy[0] + d.mode_energy[1]));
    const double rate = analysis::fit_decay_rate(t, amp);
    const double R = cfg.flow.R;
    rep.checks.push_back({"|zero-mode amplitude rate|", Check::Kind::at_most, std::abs(rate), 1e-3 * (cfg.flow.n + 2) / (R * R), 0.0});
    const auto values = harmonic::synthesize(r.final_state.rho, solver.grid(), R);
    const auto fit = analysis::fit_sphere(values, solver.grid(), R);
    rep.checks.push_back({"final sphere-fit residual sup", Check::Kind::at_most, fit.residual_sup, 1e-8, 0.0});
}

inline void check_conservation(const ExperimentConfig&, const flow::RunResult& r, ExperimentReport& rep)
{
    const double v0 = r.records.front().V;
    double drift = 0.0;
    for (const auto& d : r.records) drift = std::max(drift, std::abs(d.V - v0) / std::abs(v0));
    rep.checks.push_back({"max |V(t) - V(0)| / |V(0)|", Check::Kind::at_most, drift, 1e-6, 0.0});
}

/// Near-sphere surrogates for the initial data: sup|rho| / R and
/// R * sup of the covariant Hessian of rho (largest |eigenvalue|).
inline std::pair<double, double> smallness(std::span<const double> rho, const harmonic::Grid& g, double R)
{
    const auto d = harmonic::synthesize_derivatives(rho, g, R);
    double sup = 0.0;
    double hess = 0.0;
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
        sup = std::max(sup, std::abs(d.u[i]));
        if (g.n == 1) {
            hess = std::max(hess, std::abs(d.u_tt[i]));
            continue;
        }
        const double th = g.colat[i / static_cast<std::size_t>(g.n_lon)];
        const double s = std::sin(th);
        const double cot = std::cos(th) / s;
        const double h11 = d.u_tt[i];
        const double h12 = (d.u_tp[i] - cot * d.u_p[i]) / s;
        const double h22 = d.u_pp[i] / (s * s) + cot * d.u_t[i];
        hess = std::max(hess, std::abs(0.5 * (h11 + h22)) + std::hypot(0.5 * (h11 - h22), h12));
    }
    // Angular derivatives are on the unit sphere; the Hessian on S_R is R^-2 times that.
    return {sup / R, hess / R};
}

inline void check_nonlinear(const ExperimentConfig& cfg, const flow::RunResult& r, ExperimentReport& rep)
{
    const flow::FlowSolver solver(cfg.flow);
    const double R = cfg.flow.R;
    const auto [sup0, hess0] = smallness(initial_height(cfg.init, solver.grid(), R), solver.grid(), R);
    rep.notes.push_back("initial data: sup|rho|/R = " + csv::format(sup0) + " (surrogate bound 0.1), R sup|Hess rho| = " +
                        csv::format(hess0) + " (surrogate bound 0.5); informational, not a pass condition");
    // Transient: the first fifth of the horizon, while degree >= 3 content
    // (rates >= 10) dies out.
    const double t_transient = cfg.flow.T / 5.0;
    std::vector<double> t, res;
    for (const auto& d : r.records) {
        t.push_back(d.t);
        res.push_back(d.sphere_residual_sup);
    }
    double worst_rise = 0.0;
    for (std::size_t i = 1; i < res.size(); ++i) {
        if (t[i - 1] < t_transient) continue;
        worst_rise = std::max(worst_rise, (res[i] - res[i - 1]) / res[i - 1]);
    }
    rep.checks.push_back({"max relative rise of sphere residual after t=" + csv::format(t_transient), Check::Kind::at_most, worst_rise, 0.0, 0.0});
    const double rate = analysis::fit_decay_rate(t, res);
    rep.checks.push_back({"tail rate of sphere residual", Check::Kind::relative, rate, solver.linear_eigenvalue(2), 0.10});

    const auto values = harmonic::synthesize(r.final_state.rho, solver.grid(), R);
    const auto fit = analysis::fit_sphere(values, solver.grid(), R);
    const double v_fit = analysis::sphere_mixed_volume(cfg.flow.n, cfg.flow.k, R + fit.coords.radius_offset());
    rep.checks.push_back({"V(fitted sphere) vs V(rho_0)", Check::Kind::relative, v_fit, r.records.front().V, 1e-4});
    std::ostringstream os;
    os << "fitted sphere: radius offset " << csv::format(fit.coords.radius_offset()) << ", centre";
    for (double c : fit.coords.center()) os << ' ' << csv::format(c);
    rep.notes.push_back(os.str());
}

inline void spectrum_experiment(const ExperimentConfig& cfg, int lmax, const std::filesystem::path& out, ExperimentReport& rep)
{
    const flow::FlowSolver solver(cfg.flow);
    const double eps = 1e-5 * cfg.flow.R;
    const auto jac = analysis::numerical_jacobian(solver, lmax, eps);
    std::filesystem::create_directories(out);
    write_text(out / "spectrum.csv", analysis::spectrum_csv(jac.report));
    const auto& s = jac.report;
    const double lam = s.lambda_max_abs;
    rep.notes.push_back("Jacobian degrees <= " + std::to_string(lmax) + ", D = " + std::to_string(jac.matrix.rows()) + ", eps = " + csv::format(eps));
    rep.checks.push_back({"max off-diagonal / |lambda_max|", Check::Kind::at_most, s.offdiag_max / lam, 1e-6, 0.0});
    rep.checks.push_back({"max |J - J^T| / |lambda_max|", Check::Kind::at_most, s.symmetry_residual / lam, 1e-7, 0.0});
    rep.checks.push_back({"max diagonal deviation (relative)", Check::Kind::at_most, s.diagonal_residual, 1e-6, 0.0});
    rep.checks.push_back({"zero eigenvalue multiplicity", Check::Kind::equal, static_cast<double>(s.center_dimension),
                          static_cast<double>(cfg.flow.n + 2), 0.0});
    double top = -lam;
    for (double v : s.eigenvalues) top = std::max(top, v);
    rep.checks.push_back({"largest eigenvalue / |lambda_max|", Check::Kind::at_most, top / lam, 1e-6, 0.0});
}

} // namespace detail

inline std::string format_summary(const ExperimentReport& rep, const ExperimentConfig& cfg, const std::string& grid, const flow::RunResult* r)
{
    std::ostringstream os;
    os << "preset " << rep.name << '\n';
    os << "mixedflow " << version << '\n';
    os << "config\n";
    for (const std::string& e : cfg.echo) os << "  " << e << '\n';
    os << "speed " << cfg.flow.speed.describe() << '\n';
    os << "grid " << grid << '\n';
    if (r) {
        os << "steps " << r->steps << " dt " << csv::format(r->dt) << " final_t " << csv::format(r->final_state.t) << " status "
           << (r->status == flow::RunStatus::converged ? "converged" : "reached_end") << '\n';
    }
    for (const std::string& n : rep.notes) os << "note " << n << '\n';
    for (const Check& c : rep.checks) os << "check " << c.describe() << '\n';
    os << "result " << (rep.pass() ? "PASS" : "FAIL") << '\n';
    return os.str();
}

/// Runs a parsed config without checks; writes run.csv, final.txt and
/// summary.txt.
inline ExperimentReport run_config(const ExperimentConfig& cfg, const std::string& name = "custom")
{
    ExperimentReport rep;
    rep.name = name;
    rep.out_dir = resolve_out_dir(cfg.out_dir);
    const std::filesystem::path out(rep.out_dir);
    const flow::RunResult r = run_and_record(cfg, out);
    const harmonic::Grid grid = harmonic::build_grid(cfg.flow.n, cfg.flow.lmax, cfg.flow.oversample);
    const auto& last = r.records.back();
    rep.notes.push_back("final sup_G " + csv::format(last.sup_G) + ", sphere residual " + csv::format(last.sphere_residual_sup));
    detail::write_text(out / "summary.txt", format_summary(rep, cfg, grid.describe(), &r));
    return rep;
}

/// Spectrum of the linearization for a parsed config; writes spectrum.csv
/// and summary.txt.
inline ExperimentReport spectrum_config(ExperimentConfig cfg, int lmax)
{
    if (lmax < 2) throw InvalidArgument("spectrum degree must be at least 2");
    cfg.flow.lmax = std::max(cfg.flow.lmax, lmax);
    ExperimentReport rep;
    rep.name = "spectrum";
    rep.out_dir = resolve_out_dir(cfg.out_dir);
    const std::filesystem::path out(rep.out_dir);
    detail::spectrum_experiment(cfg, lmax, out, rep);
    const harmonic::Grid grid = harmonic::build_grid(cfg.flow.n, cfg.flow.lmax, cfg.flow.oversample);
    detail::write_text(out / "summary.txt", format_summary(rep, cfg, grid.describe(), nullptr));
    return rep;
}

/// Runs a named preset with overrides; writes run.csv (flow presets),
/// spectrum.csv (spectrum preset), final.txt and summary.txt.
inline ExperimentReport run_experiment(const std::string& name, const std::vector<std::string>& overrides = {})
{
    const Preset& preset = find_preset(name);
    ExperimentConfig cfg = parse_config_text(preset_config_text(preset, overrides));
    bool out_overridden = false;
    for (const std::string& ov : overrides) out_overridden = out_overridden || ov.rfind("out_dir", 0) == 0;
    if (!out_overridden) cfg.out_dir = "out/" + name;
    ExperimentReport rep;
    rep.name = name;
    rep.out_dir = resolve_out_dir(cfg.out_dir);
    const std::filesystem::path out(rep.out_dir);
    std::filesystem::create_directories(out);
    const harmonic::Grid grid = harmonic::build_grid(cfg.flow.n, cfg.flow.lmax, cfg.flow.oversample);

    if (name == "spectrum") {
        detail::spectrum_experiment(cfg, std::min(8, cfg.flow.lmax), out, rep);
        detail::write_text(out / "summary.txt", format_summary(rep, cfg, grid.describe(), nullptr));
        return rep;
    }

    const flow::RunResult r = run_and_record(cfg, out);
    try {
        if (name == "stationarity") detail::check_stationarity(cfg, r, rep);
        if (name == "linear-decay") detail::check_linear_decay(cfg, r, rep);
        if (name == "zero-modes") detail::check_zero_modes(cfg, r, rep);
        if (name == "conservation") detail::check_conservation(cfg, r, rep);
        if (name == "nonlinear-convergence") detail::check_nonlinear(cfg, r, rep);
    } catch (const Error& e) {
        rep.notes.push_back(std::string("analysis failed: ") + e.what());
        rep.checks.push_back({"analysis completed", Check::Kind::equal, 0.0, 1.0, 0.0});
    }
    detail::write_text(out / "summary.txt", format_summary(rep, cfg, grid.describe(), &r));
    return rep;
}

} // namespace mixedflow::io

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "mixedflow/analysis/sphere.hpp"
#include "mixedflow/analysis/volumes.hpp"
#include "mixedflow/flow/engine.hpp"

namespace mixedflow::flow {

struct DiagnosticRecord {
    double t = 0.0;
    double h_k = 0.0;
    /// V_{n-k} of the current surface.
    double V = 0.0;
    double sup_G = 0.0;
    double sup_rho = 0.0;
    /// Sup-norm of rho minus its least-squares sphere; NaN if the fit failed.
    double sphere_residual_sup = 0.0;
    double kappa_min = 0.0;
    double kappa_max = 0.0;
    /// sum_p a_{l,p}^2 for l = 0..L_max.
    std::vector<double> mode_energy;
};

enum class RunStatus { reached_end, converged };

struct RunResult {
    std::vector<DiagnosticRecord> records;
    FlowState final_state;
    RunStatus status = RunStatus::reached_end;
    long steps = 0;
    double dt = 0.0;
};

/// Squared coefficient mass per degree.
inline std::vector<double> mode_energies(std::span<const double> rho, int n, int lmax)
{
    std::vector<double> e(static_cast<std::size_t>(lmax + 1), 0.0);
    for (std::size_t i = 0; i < rho.size(); ++i) e[static_cast<std::size_t>(harmonic::degree_of(n, i))] += rho[i] * rho[i];
    return e;
}

inline DiagnosticRecord diagnose(const FlowSolver& solver, const FlowState& s, const Evaluation& e)
{
    const auto& cfg = solver.config();
    const auto& g = solver.grid();
    DiagnosticRecord d;
    d.t = s.t;
    d.h_k = e.h;
    d.sup_G = e.sup_G;

    const geometry::CurvatureBundle b = geometry::curvature_bundle(s.rho, g, cfg.R);
    d.V = cfg.k == -1 ? geometry::enclosed_volume(s.rho, g, cfg.R) : analysis::mixed_volume(b, cfg.k, g, cfg.R);
    d.kappa_min = std::numeric_limits<double>::infinity();
    d.kappa_max = -std::numeric_limits<double>::infinity();
    for (const auto& kap : b.kappa) {
        for (double v : kap) {
            d.kappa_min = std::min(d.kappa_min, v);
            d.kappa_max = std::max(d.kappa_max, v);
        }
    }

    const std::vector<double> values = harmonic::synthesize(s.rho, g, cfg.R);
    for (double v : values) d.sup_rho = std::max(d.sup_rho, std::abs(v));
    try {
        d.sphere_residual_sup = analysis::fit_sphere(values, g, cfg.R).residual_sup;
    } catch (const Error&) {
        d.sphere_residual_sup = std::numeric_limits<double>::quiet_NaN();
    }
    d.mode_energy = mode_energies(s.rho, cfg.n, cfg.lmax);
    return d;
}

inline DiagnosticRecord diagnose(const FlowSolver& solver, const FlowState& s) { return diagnose(solver, s, solver.evaluate(s.rho)); }

using RunObserver = std::function<void(const FlowState&, const DiagnosticRecord&)>;

/// Advances rho' = G(rho) from rho0 to T, or until sup|G| <= g_tol. A
/// diagnostic record is emitted at t = 0, every `cadence` steps, and at the
/// final state.
inline RunResult run(const FlowSolver& solver, std::span<const double> rho0, const RunObserver& observer = {})
{
    const auto& cfg = solver.config();
    RunResult out;
    out.dt = solver.step_size();
    FlowState s{0.0, solver.padded(rho0)};

    auto record = [&](const FlowState& st, const Evaluation& e) {
        out.records.push_back(diagnose(solver, st, e));
        if (observer) observer(st, out.records.back());
    };

    // Guard against a final sliver step from accumulated round-off in t.
    const double t_end = cfg.T * (1.0 - 1e-12);
    Evaluation e = solver.evaluate(s.rho);
    record(s, e);
    while (true) {
        if (e.sup_G <= cfg.g_tol) {
            out.status = RunStatus::converged;
            break;
        }
        if (s.t >= t_end) break;
        const double dt = std::min(out.dt, cfg.T - s.t);
        s = solver.step(s, dt, e);
        ++out.steps;
        // Time from the step count, so t carries no summation error.
        s.t = std::min(static_cast<double>(out.steps) * out.dt, cfg.T);
        e = solver.evaluate(s.rho);
        const bool last = s.t >= t_end || e.sup_G <= cfg.g_tol;
        if (out.steps % cfg.cadence == 0 || last) record(s, e);
    }
    if (out.records.back().t != s.t) record(s, e);
    out.final_state = std::move(s);
    return out;
}

} // namespace mixedflow::flow

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "mixedflow/analysis/volumes.hpp"
#include "mixedflow/errors.hpp"
#include "mixedflow/geometry.hpp"
#include "mixedflow/harmonic/grid.hpp"
#include "mixedflow/harmonic/operators.hpp"
#include "mixedflow/harmonic/transform.hpp"
#include "mixedflow/speeds.hpp"

namespace mixedflow::flow {

enum class Integrator { rk4, imex };

inline std::string to_string(Integrator i) { return i == Integrator::rk4 ? "rk4" : "imex"; }

struct FlowConfig {
    int n = 2;
    double R = 1.0;
    /// Constraint index, -1 <= k <= n - 1; the flow preserves V_{n-k}.
    int k = -1;
    speeds::SpeedSpec speed = speeds::SpeedSpec::mean(2, 1.0);
    Integrator integrator = Integrator::imex;
    /// Fixed step; 0 selects the integrator default.
    double dt = 0.0;
    /// Explicit stability coefficient: dt <= c_cfl R^2 / (F' L (L + n - 1)).
    double c_cfl = 0.5;
    double T = 1.0;
    int lmax = 16;
    int oversample = 2;
    /// Steps between diagnostic records.
    int cadence = 10;
    /// Run stops once sup|G| <= g_tol.
    double g_tol = 1e-10;

    void validate() const
    {
        if (n != 1 && n != 2) throw InvalidArgument("n must be 1 or 2");
        if (!(R > 0.0)) throw InvalidArgument("R must be positive");
        analysis::check_constraint_index(k, n);
        if (speed.dimension() != n) throw InvalidArgument("speed dimension does not match n");
        if (dt < 0.0) throw InvalidArgument("dt must be positive");
        if (!(T > 0.0)) throw InvalidArgument("T must be positive");
        if (!(c_cfl > 0.0)) throw InvalidArgument("c_cfl must be positive");
        if (cadence < 1) throw InvalidArgument("cadence must be >= 1");
        if (!(g_tol >= 0.0)) throw InvalidArgument("g_tol must be non-negative");
    }
};

struct FlowState {
    double t = 0.0;
    /// Height coefficients on S_R, degrees <= L_max.
    std::vector<double> rho;
};

/// G(rho) together with the quantities computed on the way.
struct Evaluation {
    /// Coefficients of G, truncated to degree L_max.
    std::vector<double> G;
    /// Global term h_{k,rho}.
    double h = 0.0;
    /// Max |G| over the grid before truncation.
    double sup_G = 0.0;
};

/// Velocity evaluation and time stepping for rho' = G(rho),
/// G(rho) = L_rho (h_{k,rho} - F(kappa_rho)).
class FlowSolver {
public:
    explicit FlowSolver(FlowConfig config)
        : config_(std::move(config))
    {
        config_.validate();
        if (std::abs(config_.speed.radius() - config_.R) > 1e-15 * config_.R) config_.speed = config_.speed.with_radius(config_.R);
        grid_ = harmonic::build_grid(config_.n, config_.lmax, config_.oversample);
        fprime_ = config_.speed.umbilic_derivative();
    }

    const FlowConfig& config() const { return config_; }
    const harmonic::Grid& grid() const { return grid_; }
    std::size_t num_coeffs() const { return grid_.num_coeffs(); }

    /// dF/dkappa_1(kappa_0).
    double speed_derivative() const { return fprime_; }

    /// Eigenvalue of dG(0) on degree-l harmonics: 0 for l = 0, and
    /// xi_l = -F'(kappa_0) (l - 1)(l + n) / R^2 otherwise.
    double linear_eigenvalue(int l) const
    {
        if (l <= 1) return 0.0;
        const double R = config_.R;
        return -fprime_ * (l - 1.0) * (l + config_.n) / (R * R);
    }

    /// Largest explicit step admitted by the stability coefficient.
    double cfl_limit() const
    {
        const double L = config_.lmax;
        return config_.c_cfl * config_.R * config_.R / (fprime_ * L * (L + config_.n - 1));
    }

    double default_dt() const
    {
        if (config_.integrator == Integrator::rk4) return cfl_limit();
        const double L = config_.lmax;
        return 0.1 * config_.R * config_.R / (fprime_ * L * L);
    }

    double step_size() const { return config_.dt > 0.0 ? config_.dt : default_dt(); }

    /// h_{k,rho} = int F E_{k+1} d mu_rho / int E_{k+1} d mu_rho.
    double global_term(const geometry::CurvatureBundle& b, std::span<const double> F) const
    {
        const auto& E = b.E[static_cast<std::size_t>(config_.k + 1)];
        // Accumulate F - F[0] so that a constant F is returned exactly.
        const double ref = F[0];
        double num = 0.0;
        double den = 0.0;
        for (std::size_t i = 0; i < b.size(); ++i) {
            const double w = grid_.weight(i) * E[i] * b.mu[i];
            num += w * (F[i] - ref);
            den += w;
        }
        if (!(den > 0.0)) {
            throw ConstraintDegenerate("integral of E_" + std::to_string(config_.k + 1) + " over the surface is not positive");
        }
        return ref + num / den;
    }

    double global_term(std::span<const double> rho) const
    {
        const geometry::CurvatureBundle b = geometry::curvature_bundle(rho, grid_, config_.R);
        const std::vector<double> F = speeds::eval_speed(config_.speed, b);
        return global_term(b, F);
    }

    Evaluation evaluate(std::span<const double> rho) const
    {
        const geometry::CurvatureBundle b = geometry::curvature_bundle(rho, grid_, config_.R);
        const std::vector<double> F = speeds::eval_speed(config_.speed, b);
        Evaluation e;
        e.h = global_term(b, F);
        std::vector<double> values(b.size());
        for (std::size_t i = 0; i < values.size(); ++i) {
            values[i] = b.graph_factor[i] * (e.h - F[i]);
            e.sup_G = std::max(e.sup_G, std::abs(values[i]));
        }
        e.G = harmonic::analyze(values, grid_, config_.R);
        return e;
    }

    std::vector<double> evaluate_G(std::span<const double> rho) const { return evaluate(rho).G; }

    /// dG(0) u, applied exactly in the harmonic basis.
    std::vector<double> linearized_at_zero(std::span<const double> u) const
    {
        std::vector<double> out(u.begin(), u.end());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= linear_eigenvalue(harmonic::degree_of(config_.n, i));
        return out;
    }

    /// Classical RK4; h_k is recomputed at every stage.
    FlowState step_explicit(const FlowState& s, double dt) const { return step_explicit(s, dt, evaluate(s.rho)); }

    FlowState step_explicit(const FlowState& s, double dt, const Evaluation& first) const
    {
        if (dt > cfl_limit() * (1.0 + 1e-12)) {
            throw StepRejected("dt=" + std::to_string(dt) + " exceeds the explicit stability limit " + std::to_string(cfl_limit()),
                               cfl_limit());
        }
        const std::size_t nc = num_coeffs();
        std::vector<double> rho = padded(s.rho);
        std::vector<double> stage(nc);
        try {
            const std::vector<double>& k1 = first.G;
            for (std::size_t i = 0; i < nc; ++i) stage[i] = rho[i] + 0.5 * dt * k1[i];
            const std::vector<double> k2 = evaluate(stage).G;
            for (std::size_t i = 0; i < nc; ++i) stage[i] = rho[i] + 0.5 * dt * k2[i];
            const std::vector<double> k3 = evaluate(stage).G;
            for (std::size_t i = 0; i < nc; ++i) stage[i] = rho[i] + dt * k3[i];
            const std::vector<double> k4 = evaluate(stage).G;
            for (std::size_t i = 0; i < nc; ++i) rho[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        } catch (const GeometryError& e) {
            throw StepRejected(std::string("admissibility lost during RK4 step at t=") + std::to_string(s.t) + ": " + e.what(),
                               0.5 * dt);
        }
        check_admissible(rho, s.t + dt, dt);
        return FlowState{s.t + dt, std::move(rho)};
    }

    /// Linearly implicit Euler on the splitting rho' = dG(0) rho + (G(rho) - dG(0) rho):
    /// (1 - dt xi_l) a_new = a + dt (G(a) - xi_l a), coefficient-wise.
    FlowState step_imex(const FlowState& s, double dt) const { return step_imex(s, dt, evaluate(s.rho)); }

    FlowState step_imex(const FlowState& s, double dt, const Evaluation& e) const
    {
        std::vector<double> rho = padded(s.rho);
        for (std::size_t i = 0; i < rho.size(); ++i) {
            const double xi = linear_eigenvalue(harmonic::degree_of(config_.n, i));
            rho[i] = (rho[i] + dt * (e.G[i] - xi * rho[i])) / (1.0 - dt * xi);
        }
        check_admissible(rho, s.t + dt, dt);
        return FlowState{s.t + dt, std::move(rho)};
    }

    FlowState step(const FlowState& s, double dt, const Evaluation& e) const
    {
        return config_.integrator == Integrator::rk4 ? step_explicit(s, dt, e) : step_imex(s, dt, e);
    }

    FlowState step(const FlowState& s, double dt) const { return step(s, dt, evaluate(s.rho)); }

    /// Coefficients zero-padded to the full basis; rejects degree overflow.
    std::vector<double> padded(std::span<const double> rho) const
    {
        if (rho.size() > num_coeffs()) {
            throw InvalidArgument("initial data has degree above L_max=" + std::to_string(config_.lmax));
        }
        std::vector<double> out(num_coeffs(), 0.0);
        std::copy(rho.begin(), rho.end(), out.begin());
        return out;
    }

private:
    void check_admissible(std::span<const double> rho, double t, double dt) const
    {
        const std::vector<double> v = harmonic::synthesize(rho, grid_, config_.R);
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!std::isfinite(v[i])) throw StepRejected("non-finite height at t=" + std::to_string(t), 0.5 * dt);
            if (!(config_.R + v[i] > 0.0)) {
                throw StepRejected("admissibility lost at t=" + std::to_string(t) + " (node " + std::to_string(i) + ")", 0.5 * dt);
            }
        }
    }

    FlowConfig config_;
    harmonic::Grid grid_;
    double fprime_ = 1.0;
};

} // namespace mixedflow::flow

#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "mixedflow/harmonic/grid.hpp"
#include "mixedflow/harmonic/transform.hpp"

namespace mixedflow::harmonic {

/// Laplace-Beltrami operator on S_R, applied coefficient-wise:
/// degree l is multiplied by -l(l + n - 1) / R^2.
inline std::vector<double> laplace_beltrami(std::span<const double> coeffs, int n, double R)
{
    std::vector<double> out(coeffs.begin(), coeffs.end());
    const double inv_r2 = 1.0 / (R * R);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const int l = degree_of(n, i);
        out[i] *= -static_cast<double>(l) * (l + n - 1) * inv_r2;
    }
    return out;
}

/// Pointwise |grad u|^2 on the unit sphere. On S_R divide by R^2.
inline std::vector<double> gradient_sq(std::span<const double> coeffs, const Grid& g, double R = 1.0)
{
    const SurfaceDerivatives d = synthesize_derivatives(coeffs, g, R);
    std::vector<double> out(g.num_nodes());
    if (g.n == 1) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = d.u_t[i] * d.u_t[i];
        return out;
    }
    for (int j = 0; j < g.n_lat; ++j) {
        const double s = std::sin(g.colat[static_cast<std::size_t>(j)]);
        const double inv_s2 = 1.0 / (s * s);
        for (int k = 0; k < g.n_lon; ++k) {
            const std::size_t i = static_cast<std::size_t>(j * g.n_lon + k);
            out[i] = d.u_t[i] * d.u_t[i] + d.u_p[i] * d.u_p[i] * inv_s2;
        }
    }
    return out;
}

/// Integral over S_R with the reference measure: R^n * sum(weights * u).
inline double quadrature(std::span<const double> values, const Grid& g, double R = 1.0)
{
    double sum = 0.0;
    const std::size_t nl = static_cast<std::size_t>(g.n_lon);
    for (int j = 0; j < g.n_lat; ++j) {
        double row = 0.0;
        for (std::size_t k = 0; k < nl; ++k) row += values[static_cast<std::size_t>(j) * nl + k];
        sum += g.lat_weight[static_cast<std::size_t>(j)] * row;
    }
    return std::pow(R, g.n) * g.lon_weight * sum;
}

/// Average over the sphere; independent of R.
inline double mean(std::span<const double> values, const Grid& g)
{
    return quadrature(values, g, 1.0) / unit_sphere_measure(g.n);
}

/// Result of splitting a field by the projector onto span{1, degree-1}.
struct CenterSplit {
    /// <u, u_{0,p}>, p = 0..n+1, in the orthonormal zero-eigenspace basis:
    /// the constant first, then degree-1 members in basis order.
    std::vector<double> center;
    /// Coefficients of (I - P)u.
    std::vector<double> residual;
};

/// Splits coefficients into the center part P u and the stable part (I - P)u.
inline CenterSplit project_center(std::span<const double> coeffs, int n)
{
    CenterSplit out;
    const std::size_t nc = static_cast<std::size_t>(n + 2);
    out.center.assign(nc, 0.0);
    out.residual.assign(coeffs.begin(), coeffs.end());
    for (std::size_t i = 0; i < nc && i < coeffs.size(); ++i) {
        out.center[i] = coeffs[i];
        out.residual[i] = 0.0;
    }
    return out;
}

/// Coefficients of P u alone (zero beyond degree 1).
inline std::vector<double> apply_center_projector(std::span<const double> coeffs, int n)
{
    std::vector<double> out(coeffs.size(), 0.0);
    for (std::size_t i = 0; i < static_cast<std::size_t>(n + 2) && i < coeffs.size(); ++i) out[i] = coeffs[i];
    return out;
}

} // namespace mixedflow::harmonic

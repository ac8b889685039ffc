#pragma once

#include <cmath>
#include <span>
#include <string>

#include "mixedflow/errors.hpp"
#include "mixedflow/geometry.hpp"
#include "mixedflow/harmonic/grid.hpp"
#include "mixedflow/harmonic/operators.hpp"
#include "mixedflow/speeds.hpp"

namespace mixedflow::analysis {

inline void check_constraint_index(int k, int n)
{
    if (k < -1 || k > n - 1) {
        throw InvalidArgument("constraint index k=" + std::to_string(k) + " outside -1.." + std::to_string(n - 1));
    }
}

/// V_{n-k} from an already computed curvature bundle (k >= 0 only).
inline double mixed_volume(const geometry::CurvatureBundle& b, int k, const harmonic::Grid& g, double R)
{
    check_constraint_index(k, g.n);
    if (k < 0) throw InvalidArgument("enclosed volume needs the height field, not a curvature bundle");
    const auto& Ek = b.E[static_cast<std::size_t>(k)];
    std::vector<double> integrand(b.size());
    for (std::size_t i = 0; i < integrand.size(); ++i) integrand[i] = Ek[i] * b.mu[i];
    const double norm = (g.n + 1) * speeds::binomial(g.n, k);
    return harmonic::quadrature(integrand, g, R) / norm;
}

/// V_{n-k}: the enclosed volume for k = -1, otherwise
/// ((n+1) binom(n,k))^{-1} times the surface integral of E_k.
inline double mixed_volume(std::span<const double> rho, int k, const harmonic::Grid& g, double R)
{
    check_constraint_index(k, g.n);
    if (k == -1) return geometry::enclosed_volume(rho, g, R);
    return mixed_volume(geometry::curvature_bundle(rho, g, R), k, g, R);
}

/// V_{n-k} of a round sphere of radius r: |S^n| r^{n-k} / (n + 1).
inline double sphere_mixed_volume(int n, int k, double r)
{
    check_constraint_index(k, n);
    return harmonic::unit_sphere_measure(n) * std::pow(r, n - k) / (n + 1);
}

} // namespace mixedflow::analysis

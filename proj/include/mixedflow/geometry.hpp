#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "mixedflow/errors.hpp"
#include "mixedflow/harmonic/grid.hpp"
#include "mixedflow/harmonic/operators.hpp"
#include "mixedflow/harmonic/transform.hpp"

namespace mixedflow::geometry {

/// l-th elementary symmetric function of kappa, by expanding
/// prod_i (1 + kappa_i t) and reading off the t^l coefficient.
inline double elementary_symmetric(std::span<const double> kappa, int l)
{
    const int n = static_cast<int>(kappa.size());
    if (l < 0 || l > n) {
        throw InvalidArgument("elementary symmetric order " + std::to_string(l) + " outside 0.." + std::to_string(n));
    }
    if (n == 1) return l == 0 ? 1.0 : kappa[0];
    if (n == 2) {
        if (l == 0) return 1.0;
        return l == 1 ? kappa[0] + kappa[1] : kappa[0] * kappa[1];
    }
    std::vector<double> e(static_cast<std::size_t>(l + 1), 0.0);
    e[0] = 1.0;
    for (double k : kappa) {
        for (int j = l; j >= 1; --j) e[static_cast<std::size_t>(j)] += k * e[static_cast<std::size_t>(j - 1)];
    }
    return e[static_cast<std::size_t>(l)];
}

/// Pointwise curvature data of a radial graph X(omega) = (R + rho) omega.
struct CurvatureBundle {
    int n = 2;
    /// kappa[i][node], i = 0..n-1. For n = 2, kappa[0] >= kappa[1].
    std::vector<std::vector<double>> kappa;
    /// E[l][node], l = 0..n.
    std::vector<std::vector<double>> E;
    /// d mu_rho = mu * d mu_0.
    std::vector<double> mu;
    /// L_rho = sqrt(1 + |grad rho|^2 / (R + rho)^2) (unit-sphere gradient).
    std::vector<double> graph_factor;
    /// r = R + rho at the nodes.
    std::vector<double> r;

    std::size_t size() const { return mu.size(); }
};

namespace detail {

inline void check_admissible(std::span<const double> r)
{
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (!(r[i] > 0.0)) {
            throw GeometryError("inadmissible height: R + rho = " + std::to_string(r[i]) + " at node " + std::to_string(i));
        }
    }
}

inline void check_finite(const CurvatureBundle& b)
{
    for (std::size_t i = 0; i < b.size(); ++i) {
        bool ok = std::isfinite(b.mu[i]) && std::isfinite(b.graph_factor[i]);
        for (const auto& k : b.kappa) ok = ok && std::isfinite(k[i]);
        if (!ok) throw GeometryError("non-finite curvature at node " + std::to_string(i));
    }
}

} // namespace detail

/// Principal curvatures, symmetric functions, area-element ratio and graph
/// factor of the radial graph with height coefficients `rho` over S_R.
///
/// Sign convention: outward normal, kappa_i = 1/r on a round sphere of
/// radius r. For n = 2 the Weingarten map S = g^{-1} h is assembled from the
/// spectrally differentiated height in (theta, phi) coordinates, and
/// kappa = (tr S +- sqrt(tr^2 - 4 det S)) / 2.
inline CurvatureBundle curvature_bundle(std::span<const double> rho, const harmonic::Grid& g, double R)
{
    const harmonic::SurfaceDerivatives d = harmonic::synthesize_derivatives(rho, g, R);
    const std::size_t nodes = g.num_nodes();
    const int n = g.n;

    CurvatureBundle b;
    b.n = n;
    b.r.resize(nodes);
    for (std::size_t i = 0; i < nodes; ++i) b.r[i] = R + d.u[i];
    detail::check_admissible(b.r);

    b.kappa.assign(static_cast<std::size_t>(n), std::vector<double>(nodes));
    b.E.assign(static_cast<std::size_t>(n + 1), std::vector<double>(nodes));
    b.mu.resize(nodes);
    b.graph_factor.resize(nodes);

    if (n == 1) {
        for (std::size_t i = 0; i < nodes; ++i) {
            const double r = b.r[i];
            const double r1 = d.u_t[i];
            const double r2 = d.u_tt[i];
            const double w2 = r * r + r1 * r1;
            const double w = std::sqrt(w2);
            const double k = (r * r + 2.0 * r1 * r1 - r * r2) / (w2 * w);
            b.kappa[0][i] = k;
            b.E[0][i] = 1.0;
            b.E[1][i] = k;
            b.mu[i] = w / R;
            b.graph_factor[i] = w / r;
        }
        detail::check_finite(b);
        return b;
    }

    for (int j = 0; j < g.n_lat; ++j) {
        const double th = g.colat[static_cast<std::size_t>(j)];
        const double s = std::sin(th);
        const double c = std::cos(th);
        for (int k = 0; k < g.n_lon; ++k) {
            const std::size_t i = static_cast<std::size_t>(j * g.n_lon + k);
            const double r = b.r[i];
            const double rt = d.u_t[i];
            const double rp = d.u_p[i];
            const double rtt = d.u_tt[i];
            const double rtp = d.u_tp[i];
            const double rpp = d.u_pp[i];

            // Forms in the orthonormal frame (d theta, sin(theta) d phi), so a
            // round sphere yields bit-identical values at every node.
            const double P = rp / s;
            const double w = std::sqrt(r * r + rt * rt + P * P);

            const double g11 = r * r + rt * rt;
            const double g12 = rt * P;
            const double g22 = r * r + P * P;
            // Second fundamental form, h_ij = -<X_ij, N> with outward N.
            const double h11 = (r * r + 2.0 * rt * rt - r * rtt) / w;
            const double h12 = (2.0 * rt * P + r * (P * c - rtp) / s) / w;
            const double h22 = (r * r + 2.0 * P * P - r * (rpp / s + c * rt) / s) / w;

            // Shape operator S = g^{-1} h; the discriminant is formed from its
            // entries so that it vanishes to roundoff squared at umbilic points.
            const double detg = g11 * g22 - g12 * g12;
            const double s11 = (g22 * h11 - g12 * h12) / detg;
            const double s12 = (g22 * h12 - g12 * h22) / detg;
            const double s21 = (g11 * h12 - g12 * h11) / detg;
            const double s22 = (g11 * h22 - g12 * h12) / detg;
            const double tr = s11 + s22;
            const double det = (h11 * h22 - h12 * h12) / detg;
            double disc = (s11 - s22) * (s11 - s22) + 4.0 * s12 * s21;
            if (disc < 0.0) {
                if (disc < -1e-12 * tr * tr) {
                    throw GeometryError("complex principal curvatures at node " + std::to_string(i));
                }
                disc = 0.0;
            }
            const double root = std::sqrt(disc);
            b.kappa[0][i] = 0.5 * (tr + root);
            b.kappa[1][i] = 0.5 * (tr - root);
            b.E[0][i] = 1.0;
            b.E[1][i] = tr;
            b.E[2][i] = det;
            b.mu[i] = r * w / (R * R);
            b.graph_factor[i] = w / r;
        }
    }
    detail::check_finite(b);
    return b;
}

/// Volume of the region enclosed by the radial graph:
/// integral over the unit sphere of (R + rho)^{n+1} / (n + 1).
inline double enclosed_volume(std::span<const double> rho, const harmonic::Grid& g, double R)
{
    std::vector<double> integrand = harmonic::synthesize(rho, g, R);
    for (std::size_t i = 0; i < integrand.size(); ++i) {
        const double r = R + integrand[i];
        if (!(r > 0.0)) {
            throw GeometryError("inadmissible height: R + rho = " + std::to_string(r) + " at node " + std::to_string(i));
        }
        integrand[i] = std::pow(r, g.n + 1) / (g.n + 1);
    }
    return harmonic::quadrature(integrand, g, 1.0);
}

/// Total area of the graph, integral of mu_rho over S_R.
inline double surface_area(const CurvatureBundle& b, const harmonic::Grid& g, double R)
{
    return harmonic::quadrature(b.mu, g, R);
}

} // namespace mixedflow::geometry

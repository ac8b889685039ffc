#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "mixedflow/errors.hpp"

namespace mixedflow::harmonic {

/// Measure of the unit n-sphere (2*pi for the circle, 4*pi for S^2).
inline double unit_sphere_measure(int n)
{
    return n == 1 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi;
}

/// Number of basis functions of degree exactly l on S^n.
inline int harmonic_count(int l, int n)
{
    if (l == 0) return 1;
    return n == 1 ? 2 : 2 * l + 1;
}

/// Number of basis functions of degree <= lmax on S^n.
inline std::size_t basis_size(int n, int lmax)
{
    if (n == 1) return static_cast<std::size_t>(2 * lmax + 1);
    return static_cast<std::size_t>((lmax + 1) * (lmax + 1));
}

/// Linear coefficient index of Y_{l,p}, p = 1..M_l. Ordering is l ascending
/// then p ascending. For n = 2, p = 1 is the zonal (m = 0) member, p = 2m is
/// the cos(m phi) member and p = 2m + 1 the sin(m phi) member. For n = 1,
/// p = 1 is cos(l theta) and p = 2 is sin(l theta).
inline std::size_t coeff_index(int n, int l, int p)
{
    if (l == 0) return 0;
    if (n == 1) return static_cast<std::size_t>(2 * l - 1 + (p - 1));
    return static_cast<std::size_t>(l * l + (p - 1));
}

/// Harmonic degree of the basis function at linear index i.
inline int degree_of(int n, std::size_t i)
{
    if (i == 0) return 0;
    if (n == 1) return static_cast<int>((i + 1) / 2);
    return static_cast<int>(std::sqrt(static_cast<double>(i) + 0.5));
}

/// (l, p) pair of the basis function at linear index i.
struct DegreeIndex {
    int l;
    int p;
};

inline DegreeIndex degree_index_of(int n, std::size_t i)
{
    const int l = degree_of(n, i);
    return {l, static_cast<int>(i - coeff_index(n, l, 1)) + 1};
}

/// Gauss-Legendre nodes x_j (descending, so colatitude ascends) and weights
/// on [-1, 1].
inline void gauss_legendre(int count, std::vector<double>& x, std::vector<double>& w)
{
    x.assign(static_cast<std::size_t>(count), 0.0);
    w.assign(static_cast<std::size_t>(count), 0.0);
    for (int i = 0; i < count; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (count + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = z;
            for (int k = 2; k <= count; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_count(z), p0 = P_{count-1}(z)
            dp = count * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        {
            double p0 = 1.0;
            double p1 = z;
            for (int k = 2; k <= count; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = count * (z * p1 - p0) / (z * z - 1.0);
        }
        x[static_cast<std::size_t>(i)] = z;
        w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
}

/// Tensor-product quadrature grid on the unit n-sphere with precomputed
/// transform tables. Immutable once built.
///
/// n = 2: Gauss-Legendre colatitudes (never at the poles) times a uniform
/// longitude grid; node (j, k) is stored at j * n_lon + k.
/// n = 1: uniform angle grid; n_lat == 1.
struct Grid {
    int n = 2;
    int lmax = 0;
    int oversample = 2;
    int n_lat = 0;
    int n_lon = 0;

    std::vector<double> colat;      // theta_j (n = 2)
    std::vector<double> lat_weight; // Gauss weights in cos(theta) (n = 2); {1} for n = 1
    std::vector<double> lon;        // phi_k, or theta_k for n = 1
    double lon_weight = 0.0;        // 2*pi / n_lon

    // cos(m * lon_k), sin(m * lon_k) at [m * n_lon + k], m = 0..lmax
    std::vector<double> cos_table;
    std::vector<double> sin_table;

    // Normalized associated Legendre functions Lambda_l^m(theta_j) and their
    // first and second theta derivatives, at [j * legendre_stride + lm(l, m)].
    // Lambda is normalized so that int_0^pi Lambda^2 sin(theta) dtheta = 1.
    std::vector<double> leg;
    std::vector<double> dleg;
    std::vector<double> d2leg;
    std::size_t legendre_stride = 0;

    std::size_t num_nodes() const { return static_cast<std::size_t>(n_lat) * static_cast<std::size_t>(n_lon); }
    std::size_t num_coeffs() const { return basis_size(n, lmax); }

    double weight(std::size_t node) const
    {
        return lat_weight[node / static_cast<std::size_t>(n_lon)] * lon_weight;
    }

    static std::size_t lm(int l, int m)
    {
        return static_cast<std::size_t>(l * (l + 1) / 2 + m);
    }

    double legendre(int j, int l, int m) const { return leg[static_cast<std::size_t>(j) * legendre_stride + lm(l, m)]; }
    double legendre_d1(int j, int l, int m) const { return dleg[static_cast<std::size_t>(j) * legendre_stride + lm(l, m)]; }
    double legendre_d2(int j, int l, int m) const { return d2leg[static_cast<std::size_t>(j) * legendre_stride + lm(l, m)]; }

    std::string describe() const
    {
        if (n == 1) {
            return "circle N_theta=" + std::to_string(n_lon) + " L_max=" + std::to_string(lmax) +
                   " oversample=" + std::to_string(oversample);
        }
        return "gauss-legendre N_lat=" + std::to_string(n_lat) + " N_lon=" + std::to_string(n_lon) +
               " L_max=" + std::to_string(lmax) + " oversample=" + std::to_string(oversample);
    }
};

namespace detail {

// Fully normalized associated Legendre functions (no Condon-Shortley phase)
// at one colatitude, plus theta derivatives.
inline void fill_legendre(int lmax, double theta, double* val, double* d1, double* d2)
{
    const double x = std::cos(theta);
    const double s = std::sin(theta);
    for (int m = 0; m <= lmax; ++m) {
        double pmm = 1.0 / std::sqrt(2.0);
        for (int i = 1; i <= m; ++i) pmm *= std::sqrt((2.0 * i + 1.0) / (2.0 * i)) * s;
        val[Grid::lm(m, m)] = pmm;
        if (m + 1 <= lmax) val[Grid::lm(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * x * pmm;
        for (int l = m + 2; l <= lmax; ++l) {
            const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - static_cast<double>(m) * m));
            const double b = std::sqrt((static_cast<double>(l - 1) * (l - 1) - static_cast<double>(m) * m) /
                                       (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
            val[Grid::lm(l, m)] = a * (x * val[Grid::lm(l - 1, m)] - b * val[Grid::lm(l - 2, m)]);
        }
    }
    for (int m = 0; m <= lmax; ++m) {
        for (int l = m; l <= lmax; ++l) {
            const double p = val[Grid::lm(l, m)];
            // sin(theta) dLambda/dtheta = l cos(theta) Lambda_l^m - c Lambda_{l-1}^m
            double prev = 0.0;
            if (l > m) {
                const double c = std::sqrt((static_cast<double>(l) * l - static_cast<double>(m) * m) *
                                           (2.0 * l + 1.0) / (2.0 * l - 1.0));
                prev = c * val[Grid::lm(l - 1, m)];
            }
            const double dp = (l * x * p - prev) / s;
            d1[Grid::lm(l, m)] = dp;
            // Associated Legendre ODE in theta.
            d2[Grid::lm(l, m)] = -(x / s) * dp - (l * (l + 1.0) - (m * m) / (s * s)) * p;
        }
    }
}

} // namespace detail

/// Builds the quadrature grid and transform tables.
///
/// n = 2: N_lat = oversample * (lmax + 1), N_lon = oversample * (2 lmax + 1).
/// n = 1: N_theta = max(2 * oversample * lmax, 2 lmax + 1).
inline Grid build_grid(int n, int lmax, int oversample = 2)
{
    if (n != 1 && n != 2) throw InvalidArgument("unsupported dimension n=" + std::to_string(n) + " (expected 1 or 2)");
    if (lmax < 4) throw InvalidArgument("L_max=" + std::to_string(lmax) + " too small (need >= 4)");
    if (oversample < 1) throw InvalidArgument("oversample factor must be >= 1");

    Grid g;
    g.n = n;
    g.lmax = lmax;
    g.oversample = oversample;
    if (n == 2) {
        g.n_lat = oversample * (lmax + 1);
        g.n_lon = oversample * (2 * lmax + 1);
    } else {
        g.n_lat = 1;
        g.n_lon = std::max(2 * oversample * lmax, 2 * lmax + 1);
    }

    g.lon_weight = 2.0 * std::numbers::pi / g.n_lon;
    g.lon.resize(static_cast<std::size_t>(g.n_lon));
    for (int k = 0; k < g.n_lon; ++k) g.lon[static_cast<std::size_t>(k)] = k * g.lon_weight;

    g.cos_table.resize(static_cast<std::size_t>((lmax + 1) * g.n_lon));
    g.sin_table.resize(g.cos_table.size());
    for (int m = 0; m <= lmax; ++m) {
        for (int k = 0; k < g.n_lon; ++k) {
            // Reduce m*k modulo n_lon so the tables are exactly periodic.
            const int mk = (m * k) % g.n_lon;
            const double a = 2.0 * std::numbers::pi * mk / g.n_lon;
            g.cos_table[static_cast<std::size_t>(m * g.n_lon + k)] = std::cos(a);
            g.sin_table[static_cast<std::size_t>(m * g.n_lon + k)] = std::sin(a);
        }
    }

    if (n == 1) {
        g.lat_weight = {1.0};
        return g;
    }

    std::vector<double> x;
    gauss_legendre(g.n_lat, x, g.lat_weight);
    g.colat.resize(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) g.colat[j] = std::acos(x[j]);

    g.legendre_stride = Grid::lm(lmax, lmax) + 1;
    g.leg.resize(g.legendre_stride * static_cast<std::size_t>(g.n_lat));
    g.dleg.resize(g.leg.size());
    g.d2leg.resize(g.leg.size());
    for (int j = 0; j < g.n_lat; ++j) {
        const std::size_t off = static_cast<std::size_t>(j) * g.legendre_stride;
        detail::fill_legendre(lmax, g.colat[static_cast<std::size_t>(j)], &g.leg[off], &g.dleg[off], &g.d2leg[off]);
    }
    return g;
}

/// Unit-sphere coordinates omega(node), n + 1 components.
inline void node_position(const Grid& g, std::size_t node, double* omega)
{
    const std::size_t k = node % static_cast<std::size_t>(g.n_lon);
    const double phi = g.lon[k];
    if (g.n == 1) {
        omega[0] = std::cos(phi);
        omega[1] = std::sin(phi);
        return;
    }
    const double th = g.colat[node / static_cast<std::size_t>(g.n_lon)];
    omega[0] = std::sin(th) * std::cos(phi);
    omega[1] = std::sin(th) * std::sin(phi);
    omega[2] = std::cos(th);
}

} // namespace mixedflow::harmonic

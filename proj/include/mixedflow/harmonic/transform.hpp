#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "mixedflow/errors.hpp"
#include "mixedflow/harmonic/grid.hpp"

namespace mixedflow::harmonic {

// Coefficients are taken in the real basis that is orthonormal on the sphere
// S_R of radius R: Y_{l,p} = Ybar_{l,p} / R^{n/2}, where Ybar is orthonormal
// on the unit sphere. Grid values are functions of the unit direction only.

/// Grid values and spectral angular derivatives of a band-limited field.
/// For n = 2, t is colatitude and p is longitude. For n = 1 only u, u_t and
/// u_tt are filled, t being the polar angle.
struct SurfaceDerivatives {
    std::vector<double> u;
    std::vector<double> u_t;
    std::vector<double> u_p;
    std::vector<double> u_tt;
    std::vector<double> u_tp;
    std::vector<double> u_pp;
};

namespace detail {

inline void check_coeff_count(std::size_t count, const Grid& g)
{
    if (count > g.num_coeffs()) {
        throw InvalidArgument("coefficient vector of length " + std::to_string(count) +
                              " exceeds degree L_max=" + std::to_string(g.lmax));
    }
}

inline double radius_scale(int n, double R)
{
    return n == 1 ? std::sqrt(R) : R;
}

inline double coeff_or_zero(std::span<const double> a, std::size_t i)
{
    return i < a.size() ? a[i] : 0.0;
}

// Per-latitude coefficient sums for order m: cos and sin parts, each for
// Legendre value / first / second theta derivative.
struct OrderSums {
    double c0, c1, c2, s0, s1, s2;
};

template <bool WithDerivatives>
void synthesize_n2(std::span<const double> a, const Grid& g, double scale, SurfaceDerivatives& out)
{
    const std::size_t nodes = g.num_nodes();
    out.u.assign(nodes, 0.0);
    if constexpr (WithDerivatives) {
        out.u_t.assign(nodes, 0.0);
        out.u_p.assign(nodes, 0.0);
        out.u_tt.assign(nodes, 0.0);
        out.u_tp.assign(nodes, 0.0);
        out.u_pp.assign(nodes, 0.0);
    }
    const int L = g.lmax;
    const double norm0 = scale / std::sqrt(2.0 * std::numbers::pi);
    const double normm = scale / std::sqrt(std::numbers::pi);
    std::vector<OrderSums> sums(static_cast<std::size_t>(L + 1));

    for (int j = 0; j < g.n_lat; ++j) {
        for (int m = 0; m <= L; ++m) {
            OrderSums s{0, 0, 0, 0, 0, 0};
            for (int l = m; l <= L; ++l) {
                const double ac = m == 0 ? coeff_or_zero(a, coeff_index(2, l, 1)) : coeff_or_zero(a, coeff_index(2, l, 2 * m));
                const double as = m == 0 ? 0.0 : coeff_or_zero(a, coeff_index(2, l, 2 * m + 1));
                if (ac == 0.0 && as == 0.0) continue;
                const double p0 = g.legendre(j, l, m);
                s.c0 += ac * p0;
                s.s0 += as * p0;
                if constexpr (WithDerivatives) {
                    const double p1 = g.legendre_d1(j, l, m);
                    const double p2 = g.legendre_d2(j, l, m);
                    s.c1 += ac * p1;
                    s.s1 += as * p1;
                    s.c2 += ac * p2;
                    s.s2 += as * p2;
                }
            }
            const double nm = m == 0 ? norm0 : normm;
            s.c0 *= nm; s.c1 *= nm; s.c2 *= nm;
            s.s0 *= nm; s.s1 *= nm; s.s2 *= nm;
            sums[static_cast<std::size_t>(m)] = s;
        }
        const std::size_t row = static_cast<std::size_t>(j) * static_cast<std::size_t>(g.n_lon);
        for (int m = 0; m <= L; ++m) {
            const OrderSums& s = sums[static_cast<std::size_t>(m)];
            const double* ct = &g.cos_table[static_cast<std::size_t>(m * g.n_lon)];
            const double* st = &g.sin_table[static_cast<std::size_t>(m * g.n_lon)];
            const double fm = m;
            for (int k = 0; k < g.n_lon; ++k) {
                const std::size_t node = row + static_cast<std::size_t>(k);
                const double c = ct[k];
                const double sn = st[k];
                out.u[node] += s.c0 * c + s.s0 * sn;
                if constexpr (WithDerivatives) {
                    out.u_t[node] += s.c1 * c + s.s1 * sn;
                    out.u_tt[node] += s.c2 * c + s.s2 * sn;
                    out.u_p[node] += fm * (s.s0 * c - s.c0 * sn);
                    out.u_tp[node] += fm * (s.s1 * c - s.c1 * sn);
                    out.u_pp[node] -= fm * fm * (s.c0 * c + s.s0 * sn);
                }
            }
        }
    }
}

template <bool WithDerivatives>
void synthesize_n1(std::span<const double> a, const Grid& g, double scale, SurfaceDerivatives& out)
{
    const std::size_t nodes = g.num_nodes();
    out.u.assign(nodes, coeff_or_zero(a, 0) * scale / std::sqrt(2.0 * std::numbers::pi));
    if constexpr (WithDerivatives) {
        out.u_t.assign(nodes, 0.0);
        out.u_tt.assign(nodes, 0.0);
    }
    const double nm = scale / std::sqrt(std::numbers::pi);
    for (int m = 1; m <= g.lmax; ++m) {
        const double ac = coeff_or_zero(a, coeff_index(1, m, 1)) * nm;
        const double as = coeff_or_zero(a, coeff_index(1, m, 2)) * nm;
        if (ac == 0.0 && as == 0.0) continue;
        const double* ct = &g.cos_table[static_cast<std::size_t>(m * g.n_lon)];
        const double* st = &g.sin_table[static_cast<std::size_t>(m * g.n_lon)];
        const double fm = m;
        for (std::size_t k = 0; k < nodes; ++k) {
            out.u[k] += ac * ct[k] + as * st[k];
            if constexpr (WithDerivatives) {
                out.u_t[k] += fm * (as * ct[k] - ac * st[k]);
                out.u_tt[k] -= fm * fm * (ac * ct[k] + as * st[k]);
            }
        }
    }
}

} // namespace detail

/// Grid values of the field with the given coefficients on S_R.
inline std::vector<double> synthesize(std::span<const double> coeffs, const Grid& g, double R = 1.0)
{
    detail::check_coeff_count(coeffs.size(), g);
    SurfaceDerivatives out;
    const double scale = 1.0 / detail::radius_scale(g.n, R);
    if (g.n == 1)
        detail::synthesize_n1<false>(coeffs, g, scale, out);
    else
        detail::synthesize_n2<false>(coeffs, g, scale, out);
    return std::move(out.u);
}

/// Values plus first and second angular derivatives on the unit sphere.
inline SurfaceDerivatives synthesize_derivatives(std::span<const double> coeffs, const Grid& g, double R = 1.0)
{
    detail::check_coeff_count(coeffs.size(), g);
    SurfaceDerivatives out;
    const double scale = 1.0 / detail::radius_scale(g.n, R);
    if (g.n == 1)
        detail::synthesize_n1<true>(coeffs, g, scale, out);
    else
        detail::synthesize_n2<true>(coeffs, g, scale, out);
    return out;
}

/// L2(S_R)-orthogonal projection of grid data onto degrees <= L_max, by
/// quadrature. Exact inverse of synthesize on band-limited data.
inline std::vector<double> analyze(std::span<const double> values, const Grid& g, double R = 1.0)
{
    if (values.size() != g.num_nodes()) {
        throw InvalidArgument("field has " + std::to_string(values.size()) + " values, grid has " +
                              std::to_string(g.num_nodes()) + " nodes");
    }
    std::vector<double> a(g.num_coeffs(), 0.0);
    const double scale = detail::radius_scale(g.n, R);
    const int L = g.lmax;

    if (g.n == 1) {
        const double w = g.lon_weight * scale;
        const double n0 = w / std::sqrt(2.0 * std::numbers::pi);
        const double nm = w / std::sqrt(std::numbers::pi);
        double sum0 = 0.0;
        for (double v : values) sum0 += v;
        a[0] = sum0 * n0;
        for (int m = 1; m <= L; ++m) {
            const double* ct = &g.cos_table[static_cast<std::size_t>(m * g.n_lon)];
            const double* st = &g.sin_table[static_cast<std::size_t>(m * g.n_lon)];
            double c = 0.0;
            double s = 0.0;
            for (std::size_t k = 0; k < values.size(); ++k) {
                c += values[k] * ct[k];
                s += values[k] * st[k];
            }
            a[coeff_index(1, m, 1)] = c * nm;
            a[coeff_index(1, m, 2)] = s * nm;
        }
        return a;
    }

    const double norm0 = scale * g.lon_weight / std::sqrt(2.0 * std::numbers::pi);
    const double normm = scale * g.lon_weight / std::sqrt(std::numbers::pi);
    std::vector<double> cm(static_cast<std::size_t>(L + 1));
    std::vector<double> sm(static_cast<std::size_t>(L + 1));
    for (int j = 0; j < g.n_lat; ++j) {
        const std::size_t row = static_cast<std::size_t>(j) * static_cast<std::size_t>(g.n_lon);
        for (int m = 0; m <= L; ++m) {
            const double* ct = &g.cos_table[static_cast<std::size_t>(m * g.n_lon)];
            const double* st = &g.sin_table[static_cast<std::size_t>(m * g.n_lon)];
            double c = 0.0;
            double s = 0.0;
            for (int k = 0; k < g.n_lon; ++k) {
                const double v = values[row + static_cast<std::size_t>(k)];
                c += v * ct[k];
                s += v * st[k];
            }
            const double wj = g.lat_weight[static_cast<std::size_t>(j)];
            cm[static_cast<std::size_t>(m)] = c * wj * (m == 0 ? norm0 : normm);
            sm[static_cast<std::size_t>(m)] = s * wj * normm;
        }
        for (int m = 0; m <= L; ++m) {
            for (int l = m; l <= L; ++l) {
                const double p = g.legendre(j, l, m);
                if (m == 0) {
                    a[coeff_index(2, l, 1)] += cm[0] * p;
                } else {
                    a[coeff_index(2, l, 2 * m)] += cm[static_cast<std::size_t>(m)] * p;
                    a[coeff_index(2, l, 2 * m + 1)] += sm[static_cast<std::size_t>(m)] * p;
                }
            }
        }
    }
    return a;
}

/// Value of basis function Y_{l,p} (orthonormal on S_R) at every grid node.
inline std::vector<double> basis_function(const Grid& g, int l, int p, double R = 1.0)
{
    if (l < 0 || l > g.lmax) throw InvalidArgument("degree " + std::to_string(l) + " outside 0..L_max");
    if (p < 1 || p > harmonic_count(l, g.n)) throw InvalidArgument("basis index p out of range");
    std::vector<double> a(g.num_coeffs(), 0.0);
    a[coeff_index(g.n, l, p)] = 1.0;
    return synthesize(a, g, R);
}

} // namespace mixedflow::harmonic

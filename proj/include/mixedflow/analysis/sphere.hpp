#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mixedflow/errors.hpp"
#include "mixedflow/harmonic/grid.hpp"
#include "mixedflow/harmonic/operators.hpp"
#include "mixedflow/harmonic/transform.hpp"

namespace mixedflow::analysis {

/// Parameters of a sphere near S_R: z[0] = R' - R (radius offset) and
/// z[1..n+1] = centre coordinates.
struct SphereCoords {
    std::vector<double> z;

    double radius_offset() const { return z[0]; }
    std::span<const double> center() const { return std::span<const double>(z).subspan(1); }
    int dimension() const { return static_cast<int>(z.size()) - 2; }

    static SphereCoords zero(int n) { return SphereCoords{std::vector<double>(static_cast<std::size_t>(n + 2), 0.0)}; }
};

// The zero eigenspace has two bases. The orthonormal one (used by the
// projector) is Y_{0,1} followed by the degree-1 harmonics in coefficient
// order. The coordinate one (used by the sphere formula) is the constant 1
// followed by the coordinate functions omega_1..omega_{n+1}. On S_R:
//   1       = sqrt(|S^n|) R^{n/2} Y_{0,1}
//   omega_p = sqrt(|S^n| / (n+1)) R^{n/2} Y_{1,q(p)}
// where q(p) is the degree-1 basis index of omega_p (coordinate_basis_index).

/// Degree-1 basis index p' with omega_p proportional to Y_{1,p'}.
inline int coordinate_basis_index(int n, int p)
{
    if (n == 1) return p;
    // n = 2: Y_{1,1} ~ z, Y_{1,2} ~ x, Y_{1,3} ~ y.
    return p == 3 ? 1 : p + 1;
}

inline double constant_scale(int n, double R) { return std::sqrt(harmonic::unit_sphere_measure(n)) * std::pow(R, 0.5 * n); }

inline double coordinate_scale(int n, double R)
{
    return std::sqrt(harmonic::unit_sphere_measure(n) / (n + 1)) * std::pow(R, 0.5 * n);
}

/// Orthonormal center coefficients <u, u_{0,p}> -> coordinates z such that
/// P u = z_0 + sum_p z_p omega_p.
inline SphereCoords center_to_sphere_coords(std::span<const double> center, int n, double R)
{
    SphereCoords z = SphereCoords::zero(n);
    z.z[0] = center[0] / constant_scale(n, R);
    for (int p = 1; p <= n + 1; ++p) {
        z.z[static_cast<std::size_t>(p)] = center[static_cast<std::size_t>(coordinate_basis_index(n, p))] / coordinate_scale(n, R);
    }
    return z;
}

/// Inverse of center_to_sphere_coords.
inline std::vector<double> sphere_coords_to_center(const SphereCoords& z, int n, double R)
{
    std::vector<double> c(static_cast<std::size_t>(n + 2), 0.0);
    c[0] = z.z[0] * constant_scale(n, R);
    for (int p = 1; p <= n + 1; ++p) {
        c[static_cast<std::size_t>(coordinate_basis_index(n, p))] = z.z[static_cast<std::size_t>(p)] * coordinate_scale(n, R);
    }
    return c;
}

namespace detail {

inline void check_coords(const SphereCoords& z, const harmonic::Grid& g)
{
    if (static_cast<int>(z.z.size()) != g.n + 2) {
        throw InvalidArgument("sphere coordinates need n + 2 = " + std::to_string(g.n + 2) + " entries");
    }
}

} // namespace detail

/// Height function over S_R of the sphere with centre (z_1..z_{n+1}) and
/// radius R + z_0:
///   rho = s - R + sqrt(s^2 + (R + z_0)^2 - |c|^2),  s = sum_p z_p omega_p.
/// Returns grid values (spheres are not band-limited).
inline std::vector<double> sphere_from_coords(const SphereCoords& z, const harmonic::Grid& g, double R)
{
    detail::check_coords(z, g);
    const int n = g.n;
    double c2 = 0.0;
    for (int p = 1; p <= n + 1; ++p) c2 += z.z[static_cast<std::size_t>(p)] * z.z[static_cast<std::size_t>(p)];
    const double rad = R + z.z[0];
    if (!(rad > 0.0)) throw GeometryError("sphere radius R + z_0 must be positive");

    std::vector<double> rho(g.num_nodes());
    std::array<double, 3> omega{};
    for (std::size_t i = 0; i < rho.size(); ++i) {
        harmonic::node_position(g, i, omega.data());
        double s = 0.0;
        for (int p = 1; p <= n + 1; ++p) s += z.z[static_cast<std::size_t>(p)] * omega[static_cast<std::size_t>(p - 1)];
        const double arg = s * s + rad * rad - c2;
        if (!(arg > 0.0)) {
            throw GeometryError("sphere is not a radial graph over S_R (node " + std::to_string(i) + ")");
        }
        const double root = std::sqrt(arg);
        // s + root can cancel when the centre lies outside; the product form
        // is exact: s + root = (rad^2 - c2) / (root - s) when s < 0.
        const double radial = s >= 0.0 ? s + root : (rad * rad - c2) / (root - s);
        if (!(radial > 0.0)) {
            throw GeometryError("sphere is not a radial graph over S_R (node " + std::to_string(i) + ")");
        }
        rho[i] = radial - R;
    }
    return rho;
}

/// d rho / d z at every node, column p = z_p, for Gauss-Newton.
inline Eigen::MatrixXd sphere_coords_jacobian(const SphereCoords& z, const harmonic::Grid& g, double R)
{
    detail::check_coords(z, g);
    const int n = g.n;
    double c2 = 0.0;
    for (int p = 1; p <= n + 1; ++p) c2 += z.z[static_cast<std::size_t>(p)] * z.z[static_cast<std::size_t>(p)];
    const double rad = R + z.z[0];
    Eigen::MatrixXd J(static_cast<Eigen::Index>(g.num_nodes()), n + 2);
    std::array<double, 3> omega{};
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
        harmonic::node_position(g, i, omega.data());
        double s = 0.0;
        for (int p = 1; p <= n + 1; ++p) s += z.z[static_cast<std::size_t>(p)] * omega[static_cast<std::size_t>(p - 1)];
        const double root = std::sqrt(s * s + rad * rad - c2);
        const auto row = static_cast<Eigen::Index>(i);
        J(row, 0) = rad / root;
        for (int p = 1; p <= n + 1; ++p) {
            const double w = omega[static_cast<std::size_t>(p - 1)];
            J(row, p) = w + (s * w - z.z[static_cast<std::size_t>(p)]) / root;
        }
    }
    return J;
}

struct SphereFit {
    SphereCoords coords;
    /// rho - rho(z_fit) at the grid nodes.
    std::vector<double> residual;
    /// L2(S_R) norm of the residual.
    double residual_l2 = 0.0;
    /// Max |residual| over the nodes.
    double residual_sup = 0.0;
    int iterations = 0;
};

/// Least-squares sphere fit to grid data rho: Gauss-Newton on
/// ||rho - rho(z)||_{L2(S_R)}, started from the projection onto the zero
/// eigenspace. Converged when the step norm drops below 1e-12 R.
inline SphereFit fit_sphere(std::span<const double> rho, const harmonic::Grid& g, double R, int max_iterations = 50)
{
    const int n = g.n;
    const std::size_t nodes = g.num_nodes();
    if (rho.size() != nodes) throw InvalidArgument("fit_sphere: field size does not match grid");

    const std::vector<double> coeffs = harmonic::analyze(rho, g, R);
    const harmonic::CenterSplit split = harmonic::project_center(coeffs, n);

    SphereFit fit;
    fit.coords = center_to_sphere_coords(split.center, n, R);

    Eigen::VectorXd w(static_cast<Eigen::Index>(nodes));
    for (std::size_t i = 0; i < nodes; ++i) w(static_cast<Eigen::Index>(i)) = g.weight(i);

    bool converged = false;
    for (int it = 0; it < max_iterations; ++it) {
        const std::vector<double> model = sphere_from_coords(fit.coords, g, R);
        Eigen::VectorXd r(static_cast<Eigen::Index>(nodes));
        for (std::size_t i = 0; i < nodes; ++i) r(static_cast<Eigen::Index>(i)) = rho[i] - model[i];
        const Eigen::MatrixXd J = sphere_coords_jacobian(fit.coords, g, R);
        const Eigen::MatrixXd JtW = J.transpose() * w.asDiagonal();
        const Eigen::MatrixXd normal = JtW * J;
        const Eigen::VectorXd step = normal.ldlt().solve(JtW * r);
        for (int p = 0; p < n + 2; ++p) fit.coords.z[static_cast<std::size_t>(p)] += step(p);
        fit.iterations = it + 1;
        if (!step.allFinite()) break;
        if (step.norm() < 1e-12 * R) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw NotConverged("sphere fit did not converge in " + std::to_string(max_iterations) + " iterations");
    }

    const std::vector<double> model = sphere_from_coords(fit.coords, g, R);
    fit.residual.resize(nodes);
    std::vector<double> sq(nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
        fit.residual[i] = rho[i] - model[i];
        sq[i] = fit.residual[i] * fit.residual[i];
        fit.residual_sup = std::max(fit.residual_sup, std::abs(fit.residual[i]));
    }
    fit.residual_l2 = std::sqrt(harmonic::quadrature(sq, g, R));
    return fit;
}

/// Coefficient-space convenience overload.
inline SphereFit fit_sphere_coeffs(std::span<const double> coeffs, const harmonic::Grid& g, double R)
{
    const std::vector<double> values = harmonic::synthesize(coeffs, g, R);
    return fit_sphere(values, g, R);
}

} // namespace mixedflow::analysis

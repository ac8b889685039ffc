#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "mixedflow/analysis/decay.hpp"
#include "mixedflow/analysis/spectrum.hpp"
#include "mixedflow/analysis/sphere.hpp"
#include "mixedflow/analysis/volumes.hpp"
#include "mixedflow/flow/engine.hpp"
#include "test_support.hpp"

using namespace mixedflow;
using namespace mixedflow::analysis;
using flow::FlowConfig;
using flow::FlowSolver;
using harmonic::coeff_index;
using speeds::SpeedSpec;
using testsupport::max_abs;

namespace {

constexpr double pi = std::numbers::pi;

FlowSolver make_solver(int n, double R, SpeedSpec speed, int lmax, int k = -1)
{
    FlowConfig c;
    c.n = n;
    c.R = R;
    c.k = k;
    c.speed = std::move(speed);
    c.lmax = lmax;
    return FlowSolver(c);
}

SphereCoords random_coords(int n, double R, double max_norm, std::mt19937_64& rng)
{
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SphereCoords z = SphereCoords::zero(n);
    double norm = 0.0;
    for (double& x : z.z) {
        x = gauss(rng);
        norm += x * x;
    }
    const double scale = max_norm * R * std::pow(u(rng), 1.0 / (n + 2)) / std::sqrt(norm);
    for (double& x : z.z) x *= scale;
    return z;
}

} // namespace

TEST(MixedVolume, SphereClosedForms)
{
    const harmonic::Grid g = harmonic::build_grid(2, 8, 2);
    for (double R : {1.0, 2.0}) {
        const double c = 0.3 * R;
        const double r = R + c;
        std::vector<double> rho(g.num_coeffs(), 0.0);
        rho[0] = c * std::sqrt(4.0 * pi * R * R);
        const double expect[] = {4.0 * pi * r * r * r / 3.0, 4.0 * pi * r * r / 3.0, 4.0 * pi * r / 3.0};
        for (int k = -1; k <= 1; ++k) {
            const double v = mixed_volume(rho, k, g, R);
            EXPECT_NEAR(v, expect[k + 1], 1e-10 * expect[k + 1]) << "k=" << k;
            EXPECT_NEAR(sphere_mixed_volume(2, k, r), expect[k + 1], 1e-14 * expect[k + 1]);
        }
    }
    const harmonic::Grid g1 = harmonic::build_grid(1, 8, 2);
    std::vector<double> rho(g1.num_coeffs(), 0.0);
    rho[0] = 0.5 * std::sqrt(2.0 * pi);
    EXPECT_NEAR(mixed_volume(rho, -1, g1, 1.0), pi * 1.5 * 1.5, 1e-12);
    EXPECT_NEAR(mixed_volume(rho, 0, g1, 1.0), pi * 1.5, 1e-12);
}

TEST(MixedVolume, RejectsConstraintIndexOutOfRange)
{
    const harmonic::Grid g = harmonic::build_grid(2, 8, 2);
    const std::vector<double> rho(g.num_coeffs(), 0.0);
    EXPECT_THROW(mixed_volume(rho, 2, g, 1.0), InvalidArgument);
    EXPECT_THROW(mixed_volume(rho, -2, g, 1.0), InvalidArgument);
}

TEST(Spectrum, Multiplicities)
{
    EXPECT_EQ(harmonic_multiplicity(1, 2), 3);
    EXPECT_EQ(harmonic_multiplicity(2, 2), 5);
    for (int n : {1, 2, 3}) EXPECT_EQ(harmonic_multiplicity(0, n), 1);
    int total = 0;
    for (int l = 0; l <= 8; ++l) {
        EXPECT_EQ(harmonic_multiplicity(l, 2), 2 * l + 1);
        total += harmonic_multiplicity(l, 2);
        if (l > 0) {
            EXPECT_EQ(harmonic_multiplicity(l, 1), 2);
        }
    }
    EXPECT_EQ(total, 81);
    EXPECT_EQ(harmonic_multiplicity(2, 3), 9);
}

TEST(Spectrum, AnalyticExamples)
{
    const auto rep = analytic_spectrum(make_solver(2, 1.0, SpeedSpec::mean(2, 1.0), 8), 8);
    EXPECT_EQ(rep.center_dimension, 4);
    EXPECT_EQ(rep.rows[2].lambda_analytic, -4.0);
    EXPECT_EQ(rep.rows[2].multiplicity, 5);
    for (const auto& row : rep.rows) {
        EXPECT_LE(row.lambda_analytic, 0.0);
        if (row.l >= 2) {
            EXPECT_DOUBLE_EQ(row.lambda_analytic, -(row.l - 1.0) * (row.l + 2.0));
        }
    }
    EXPECT_DOUBLE_EQ(rep.lambda_max_abs, 70.0);

    const auto rep1 = analytic_spectrum(make_solver(1, 2.0, SpeedSpec::mean(1, 2.0), 8), 8);
    EXPECT_DOUBLE_EQ(rep1.rows[3].lambda_analytic, -2.0);
    EXPECT_EQ(rep1.center_dimension, 3);

    const auto pm = analytic_spectrum(make_solver(2, 1.0, SpeedSpec::power_mean(2, 1.0, 1, 2.0), 8), 8);
    for (std::size_t l = 0; l < pm.rows.size(); ++l) EXPECT_DOUBLE_EQ(pm.rows[l].lambda_analytic, rep.rows[l].lambda_analytic);

    const auto el = analytic_spectrum(make_solver(2, 2.0, SpeedSpec::elementary(2, 2.0, 2), 8), 4);
    EXPECT_DOUBLE_EQ(el.rows[2].lambda_analytic, -0.5 * 4.0 / 4.0);
}

TEST(Spectrum, NumericalJacobianIsDiagonalAndSymmetric)
{
    for (int n : {1, 2}) {
        const FlowSolver s = make_solver(n, 1.0, SpeedSpec::mean(n, 1.0), 10);
        const int lmax = n == 2 ? 4 : 8;
        const auto jac = numerical_jacobian(s, lmax, 1e-5);
        const auto& rep = jac.report;
        const double lam = rep.lambda_max_abs;
        EXPECT_LE(rep.offdiag_max, 1e-6 * lam) << "n=" << n;
        EXPECT_LE(rep.symmetry_residual, 1e-7 * lam) << "n=" << n;
        EXPECT_LE(rep.diagonal_residual, 1e-6) << "n=" << n;
        EXPECT_EQ(rep.center_dimension, n + 2);
        for (double v : rep.eigenvalues) EXPECT_LE(v, 1e-6 * lam);
        for (const auto& row : rep.rows) EXPECT_NEAR(row.lambda_numeric, row.lambda_analytic, 1e-6 * lam);

        // Constant and degree-1 directions are exact zero modes.
        EXPECT_LE(jac.matrix.col(0).cwiseAbs().maxCoeff(), 1e-9);
        for (int p = 1; p <= n + 1; ++p) EXPECT_LE(jac.matrix.col(p).cwiseAbs().maxCoeff(), 1e-8);

        // The exact linearization agrees with the diagonal.
        for (Eigen::Index i = 0; i < jac.matrix.rows(); ++i) {
            const double xi = s.linear_eigenvalue(harmonic::degree_of(n, static_cast<std::size_t>(i)));
            EXPECT_NEAR(jac.matrix(i, i), xi, 1e-6 * std::max(std::abs(xi), 1.0));
        }
    }
}

TEST(Spectrum, ZeroEigenspaceIsTheCenterSubspace)
{
    const FlowSolver s = make_solver(2, 1.0, SpeedSpec::mean(2, 1.0), 10);
    const auto jac = numerical_jacobian(s, 3, 1e-5);
    const Eigen::MatrixXd sym = 0.5 * (jac.matrix + jac.matrix.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    int found = 0;
    for (Eigen::Index j = 0; j < sym.cols(); ++j) {
        if (std::abs(es.eigenvalues()(j)) > 1e-6 * jac.report.lambda_max_abs) continue;
        ++found;
        const Eigen::VectorXd v = es.eigenvectors().col(j);
        std::vector<double> coeffs(v.data(), v.data() + v.size());
        const auto split = harmonic::project_center(coeffs, 2);
        EXPECT_LE(max_abs(split.residual), 1e-10);
    }
    EXPECT_EQ(found, 4);
}

TEST(Spectrum, ArgumentChecks)
{
    const FlowSolver s = make_solver(2, 1.0, SpeedSpec::mean(2, 1.0), 6);
    EXPECT_THROW(numerical_jacobian(s, 7, 1e-5), InvalidArgument);
    EXPECT_THROW(numerical_jacobian(s, 2, 1e-2), InvalidArgument);
    EXPECT_THROW(numerical_jacobian(s, 2, 1e-8), InvalidArgument);
}

TEST(Spectrum, CsvLayout)
{
    const auto rep = analytic_spectrum(make_solver(2, 1.0, SpeedSpec::mean(2, 1.0), 8), 3);
    EXPECT_EQ(spectrum_csv(rep),
              "l,lambda_analytic,lambda_numeric,multiplicity,offdiag_max\n"
              "0,0,nan,1,nan\n"
              "1,0,nan,3,nan\n"
              "2,-4,nan,5,nan\n"
              "3,-10,nan,7,nan\n");
}

TEST(SphereCoords, ConventionConversion)
{
    for (int n : {1, 2}) {
        const harmonic::Grid g = harmonic::build_grid(n, 6, 2);
        const double R = 1.7;
        std::array<double, 3> omega{};
        for (int p = 1; p <= n + 1; ++p) {
            std::vector<double> values(g.num_nodes());
            for (std::size_t i = 0; i < values.size(); ++i) {
                harmonic::node_position(g, i, omega.data());
                values[i] = omega[static_cast<std::size_t>(p - 1)];
            }
            const auto a = harmonic::analyze(values, g, R);
            const auto idx = static_cast<std::size_t>(coordinate_basis_index(n, p));
            EXPECT_NEAR(a[idx], coordinate_scale(n, R), 1e-13);
            std::vector<double> rest = a;
            rest[idx] = 0.0;
            EXPECT_LE(max_abs(rest), 1e-13);
        }
        const auto ones = harmonic::analyze(std::vector<double>(g.num_nodes(), 1.0), g, R);
        EXPECT_NEAR(ones[0], constant_scale(n, R), 1e-13);

        SphereCoords z = SphereCoords::zero(n);
        for (std::size_t i = 0; i < z.z.size(); ++i) z.z[i] = 0.1 * (static_cast<double>(i) + 1.0);
        const auto back = center_to_sphere_coords(sphere_coords_to_center(z, n, R), n, R);
        for (std::size_t i = 0; i < z.z.size(); ++i) EXPECT_NEAR(back.z[i], z.z[i], 1e-15);
    }
}

TEST(SphereCoords, FromCoordsExamples)
{
    const harmonic::Grid g = harmonic::build_grid(2, 10, 2);
    SphereCoords z = SphereCoords::zero(2);
    EXPECT_EQ(max_abs(sphere_from_coords(z, g, 1.0)), 0.0);
    z.z[0] = 0.25;
    for (double v : sphere_from_coords(z, g, 1.0)) EXPECT_NEAR(v, 0.25, 1e-15);

    z = SphereCoords{{0.0, 0.1, 0.0, 0.0}};
    const auto rho = sphere_from_coords(z, g, 1.0);
    std::array<double, 3> omega{};
    double linear_gap = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        harmonic::node_position(g, i, omega.data());
        const double r = 1.0 + rho[i];
        const double dx = r * omega[0] - 0.1, dy = r * omega[1], dz = r * omega[2];
        EXPECT_NEAR(std::sqrt(dx * dx + dy * dy + dz * dz), 1.0, 1e-12);
        linear_gap = std::max(linear_gap, std::abs(rho[i] - 0.1 * omega[0]));
    }
    EXPECT_LE(linear_gap, 0.01);
    EXPECT_GT(linear_gap, 1e-3);
}

TEST(SphereCoords, InadmissibleCoordsRejected)
{
    const harmonic::Grid g = harmonic::build_grid(2, 8, 2);
    EXPECT_THROW(sphere_from_coords(SphereCoords{{0.0, 1.5, 0.0, 0.0}}, g, 1.0), GeometryError);
    EXPECT_THROW(sphere_from_coords(SphereCoords{{-1.0, 0.0, 0.0, 0.0}}, g, 1.0), GeometryError);
    EXPECT_THROW(sphere_from_coords(SphereCoords{{0.0, 0.1}}, g, 1.0), InvalidArgument);
}

TEST(FitSphere, RoundTrip)
{
    std::mt19937_64 rng(61);
    for (int n : {1, 2}) {
        const harmonic::Grid g = harmonic::build_grid(n, 16, 2);
        for (double R : {1.0, 2.5}) {
            for (int trial = 0; trial < 20; ++trial) {
                const SphereCoords z = random_coords(n, R, 0.2, rng);
                const auto fit = fit_sphere(sphere_from_coords(z, g, R), g, R);
                for (std::size_t i = 0; i < z.z.size(); ++i) EXPECT_NEAR(fit.coords.z[i], z.z[i], 1e-10 * R);
                EXPECT_LE(fit.residual_sup, 1e-10 * R);
            }
        }
    }
}

TEST(FitSphere, ZeroField)
{
    const harmonic::Grid g = harmonic::build_grid(2, 8, 2);
    const auto fit = fit_sphere(std::vector<double>(g.num_nodes(), 0.0), g, 1.0);
    EXPECT_EQ(max_abs(fit.coords.z), 0.0);
    EXPECT_EQ(fit.residual_sup, 0.0);
}

TEST(FitSphere, PerturbedSphere)
{
    const harmonic::Grid g = harmonic::build_grid(2, 16, 2);
    const SphereCoords z{{0.05, 0.02, -0.03, 0.01}};
    const double eps = 1e-3;
    auto rho = sphere_from_coords(z, g, 1.0);
    const auto y31 = harmonic::basis_function(g, 3, 1, 1.0);
    for (std::size_t i = 0; i < rho.size(); ++i) rho[i] += eps * y31[i];
    const auto fit = fit_sphere(rho, g, 1.0);
    EXPECT_NEAR(fit.residual_l2, eps, 1e-2 * eps);
    for (std::size_t i = 0; i < z.z.size(); ++i) EXPECT_LE(std::abs(fit.coords.z[i] - z.z[i]), 10.0 * eps * eps);
}

TEST(FitSphere, IterationLimit)
{
    const harmonic::Grid g = harmonic::build_grid(2, 8, 2);
    const auto rho = sphere_from_coords(SphereCoords{{0.1, 0.1, 0.1, 0.1}}, g, 1.0);
    EXPECT_THROW(fit_sphere(rho, g, 1.0, 1), NotConverged);
    EXPECT_THROW(fit_sphere(std::vector<double>(3, 0.0), g, 1.0), InvalidArgument);
}

TEST(DecayRate, Examples)
{
    std::vector<double> t, a, b, c;
    for (int i = 0; i <= 200; ++i) {
        const double ti = 0.01 * i;
        t.push_back(ti);
        a.push_back(std::exp(-3.0 * ti));
        b.push_back(2.5);
        c.push_back(std::exp(-4.0 * ti) * (1.0 + 0.01 * std::sin(20.0 * ti)));
    }
    EXPECT_NEAR(fit_decay_rate(t, a), -3.0, 1e-10);
    EXPECT_NEAR(fit_decay_rate(t, b), 0.0, 1e-14);
    EXPECT_NEAR(fit_decay_rate(t, c), -4.0, 0.05);
    EXPECT_NEAR(fit_decay_rate(t, a, 1.0), -3.0, 1e-10);
}

TEST(DecayRate, Errors)
{
    std::vector<double> t(30), v(30, 1.0);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i);
    EXPECT_THROW(fit_decay_rate(t, v, 0.2), InvalidArgument);
    v.back() = 0.0;
    EXPECT_THROW(fit_decay_rate(t, v), InvalidArgument);
    EXPECT_THROW(fit_decay_rate(std::span<const double>(t).first(20), v), InvalidArgument);
    v.back() = 1.0;
    EXPECT_THROW(fit_decay_rate(t, v, 0.0), InvalidArgument);
}

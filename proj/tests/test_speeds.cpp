#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mixedflow/geometry.hpp"
#include "mixedflow/speeds.hpp"
#include "test_support.hpp"

using namespace mixedflow;
using namespace mixedflow::speeds;

namespace {

std::vector<double> umbilic(int n, double R) { return std::vector<double>(static_cast<std::size_t>(n), 1.0 / R); }

// Fourth-order central difference in kappa_1 at kappa_0, evaluated from
// F written out by hand rather than through SpeedSpec.
template <class F>
double fd_derivative(const F& f, int n, double R, double h)
{
    auto at = [&](double dk) {
        auto k = umbilic(n, R);
        k[0] += dk;
        return f(k);
    };
    return (8.0 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12.0 * h);
}

std::vector<SpeedSpec> builtin_speeds(int n, double R)
{
    std::vector<SpeedSpec> out{SpeedSpec::mean(n, R)};
    for (int m = 1; m <= n; ++m) {
        for (double beta : {0.5, 1.0, 2.0, 3.0}) out.push_back(SpeedSpec::power_mean(n, R, m, beta));
        out.push_back(SpeedSpec::elementary(n, R, m));
    }
    return out;
}

} // namespace

TEST(Speeds, Examples)
{
    const std::vector<double> k11{1.0, 1.0};
    EXPECT_EQ(SpeedSpec::mean(2, 1.0).at(k11), 2.0);
    const std::vector<double> k23{2.0, 3.0};
    EXPECT_EQ(SpeedSpec::elementary(2, 1.0, 2).at(k23), 6.0);
    EXPECT_EQ(SpeedSpec::power_mean(2, 1.0, 1, 2.0).at(k11), 1.0);
}

TEST(Speeds, UmbilicDerivativeExamples)
{
    for (double R : {0.5, 1.0, 3.0}) EXPECT_EQ(umbilic_derivative(SpeedSpec::mean(2, R)), 1.0);
    EXPECT_DOUBLE_EQ(umbilic_derivative(SpeedSpec::power_mean(2, 1.0, 1, 2.0)), 1.0);
    EXPECT_DOUBLE_EQ(umbilic_derivative(SpeedSpec::elementary(2, 2.0, 2)), 0.5);
}

TEST(Speeds, UmbilicDerivativeMatchesHandWrittenDifferences)
{
    for (int n = 1; n <= 4; ++n) {
        for (double R : {0.7, 1.0, 2.0}) {
            const double h = 1e-4 / R;
            auto e = [n](const std::vector<double>& k, int l) {
                // E_l by subset enumeration.
                double total = 0.0;
                for (unsigned mask = 0; mask < (1u << n); ++mask) {
                    if (__builtin_popcount(mask) != l) continue;
                    double p = 1.0;
                    for (int i = 0; i < n; ++i)
                        if (mask & (1u << i)) p *= k[static_cast<std::size_t>(i)];
                    total += p;
                }
                return total;
            };
            auto choose = [](int a, int b) {
                double c = 1.0;
                for (int i = 1; i <= b; ++i) c = c * (a - b + i) / i;
                return c;
            };
            const double mean_fd = fd_derivative([&](const auto& k) { return e(k, 1); }, n, R, h);
            EXPECT_NEAR(umbilic_derivative(SpeedSpec::mean(n, R)), mean_fd, 1e-7);
            for (int m = 1; m <= n; ++m) {
                const double el_fd = fd_derivative([&](const auto& k) { return e(k, m); }, n, R, h);
                const double el = umbilic_derivative(SpeedSpec::elementary(n, R, m));
                EXPECT_NEAR(el, el_fd, 1e-7 * std::abs(el));
                for (double beta : {0.5, 2.0, 3.0}) {
                    const double pm_fd =
                        fd_derivative([&](const auto& k) { return std::pow(e(k, m) / choose(n, m), beta); }, n, R, h);
                    const double pm = umbilic_derivative(SpeedSpec::power_mean(n, R, m, beta));
                    EXPECT_NEAR(pm, pm_fd, 1e-7 * std::abs(pm));
                }
            }
        }
    }
}

TEST(Speeds, ClosedFormsMatchLibraryCentralDifference)
{
    for (int n : {1, 2, 3}) {
        for (double R : {0.5, 1.0, 2.5}) {
            for (const auto& s : builtin_speeds(n, R)) {
                const double d = s.umbilic_derivative();
                EXPECT_NEAR(s.central_difference_derivative(1e-5 / R), d, 1e-7 * d) << s.describe();
            }
        }
    }
}

TEST(Speeds, PermutationSymmetry)
{
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.2, 3.0);
    for (int n : {2, 3, 4}) {
        for (const auto& s : builtin_speeds(n, 1.0)) {
            for (int trial = 0; trial < 10; ++trial) {
                std::vector<double> k(static_cast<std::size_t>(n));
                for (double& x : k) x = u(rng);
                auto p = k;
                std::reverse(p.begin(), p.end());
                EXPECT_NEAR(s.at(k), s.at(p), 1e-13 * std::abs(s.at(k))) << s.describe();
            }
        }
    }
}

TEST(Speeds, EvalSpeedSwapAtEveryNode)
{
    std::mt19937_64 rng(32);
    const auto g = harmonic::build_grid(2, 10, 2);
    auto rho = testsupport::random_coeffs(2, 6, rng, 1, g.num_coeffs());
    for (double& x : rho) x *= 0.01;
    const auto b = geometry::curvature_bundle(rho, g, 1.0);
    for (const auto& s : builtin_speeds(2, 1.0)) {
        const auto f = eval_speed(s, b);
        for (std::size_t i = 0; i < b.size(); ++i) {
            const std::vector<double> swapped{b.kappa[1][i], b.kappa[0][i]};
            EXPECT_NEAR(f[i], s.at(swapped), 1e-12 * std::abs(f[i])) << s.describe();
        }
    }
}

TEST(Speeds, ConstantOnRoundSpheres)
{
    for (int n : {1, 2}) {
        const auto g = harmonic::build_grid(n, 8, 2);
        for (double R : {0.5, 1.0, 2.0}) {
            std::vector<double> rho(g.num_coeffs(), 0.0);
            rho[0] = 0.25 * R * std::sqrt(harmonic::unit_sphere_measure(n) * std::pow(R, n));
            const auto b = geometry::curvature_bundle(rho, g, R);
            for (const auto& s : builtin_speeds(n, R)) {
                const auto f = eval_speed(s, b);
                const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
                EXPECT_LE(*hi - *lo, 1e-12 * std::abs(*hi)) << s.describe();
                EXPECT_NEAR(f[0], s.at(umbilic(n, 1.25 * R)), 1e-12 * std::abs(f[0]));
            }
        }
    }
}

TEST(Speeds, FractionalPowerOfNegativeBaseReportsNode)
{
    const auto s = SpeedSpec::power_mean(2, 1.0, 1, 0.5);
    const std::vector<double> e{1.0, -0.5, 0.1};
    try {
        (void)s.from_symmetric(e, 17);
        FAIL() << "expected SpeedError";
    } catch (const SpeedError& err) {
        EXPECT_NE(std::string(err.what()).find("17"), std::string::npos);
    }
    // Integer powers of negative bases are fine.
    EXPECT_DOUBLE_EQ(SpeedSpec::power_mean(2, 1.0, 1, 2.0).from_symmetric(e), 0.0625);
}

TEST(Speeds, RejectsBadParameters)
{
    EXPECT_THROW(SpeedSpec::power_mean(2, 1.0, 3, 1.0), InvalidArgument);
    EXPECT_THROW(SpeedSpec::power_mean(2, 1.0, 1, 0.0), InvalidArgument);
    EXPECT_THROW(SpeedSpec::elementary(2, 1.0, 0), InvalidArgument);
    EXPECT_THROW(SpeedSpec::mean(2, 0.0), InvalidArgument);
    // phi = -H_1 has negative umbilic derivative.
    EXPECT_THROW(SpeedSpec::custom(2, 1.0, SpeedExpr::constant(0.0) - SpeedExpr::mean_curvature(1)), SpeedError);
    EXPECT_THROW(SpeedSpec::custom(2, 1.0, SpeedExpr::mean_curvature(3)), InvalidArgument);
}

TEST(Speeds, CustomExpression)
{
    // phi = H_1 + H_2 at R = 1: dF/dkappa_1 = 1/2 + kappa_2.
    const auto s = SpeedSpec::custom(2, 1.0, SpeedExpr::mean_curvature(1) + SpeedExpr::mean_curvature(2));
    EXPECT_NEAR(s.umbilic_derivative(), 1.5, 1e-8);
    const std::vector<double> k{2.0, 4.0};
    EXPECT_DOUBLE_EQ(s.at(k), 3.0 + 8.0);
    // Same function as the built-in power mean.
    const auto sq = SpeedSpec::custom(2, 2.0, SpeedExpr::power(SpeedExpr::mean_curvature(1), 2.0));
    const auto pm = SpeedSpec::power_mean(2, 2.0, 1, 2.0);
    EXPECT_NEAR(sq.umbilic_derivative(), pm.umbilic_derivative(), 1e-8);
    EXPECT_DOUBLE_EQ(sq.at(k), pm.at(k));
    EXPECT_NE(s.describe().find("H1"), std::string::npos);
}

TEST(Speeds, WithRadiusRescalesUmbilicPoint)
{
    const auto s = SpeedSpec::power_mean(2, 1.0, 2, 1.0).with_radius(2.0);
    EXPECT_DOUBLE_EQ(s.radius(), 2.0);
    EXPECT_DOUBLE_EQ(s.umbilic_value(), 0.25);
    EXPECT_DOUBLE_EQ(s.umbilic_derivative(), 0.5);
}

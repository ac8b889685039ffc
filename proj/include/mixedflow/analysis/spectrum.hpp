#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mixedflow/csv.hpp"
#include "mixedflow/errors.hpp"
#include "mixedflow/flow/engine.hpp"
#include "mixedflow/harmonic/grid.hpp"
#include "mixedflow/speeds.hpp"

namespace mixedflow::analysis {

/// Number of independent degree-l spherical harmonics on S^n:
/// binom(l+n, n) - binom(l+n-2, n), with M_0 = 1.
inline int harmonic_multiplicity(int l, int n)
{
    if (l < 0) throw InvalidArgument("harmonic degree must be non-negative");
    if (l == 0) return 1;
    return static_cast<int>(std::lround(speeds::binomial(l + n, n) - speeds::binomial(l + n - 2, n)));
}

/// Spectrum of dG(0), listed per harmonic degree. Degrees 0 and 1 span the
/// zero eigenspace; degree m >= 2 carries xi_m = -F'(m-1)(m+n)/R^2.
struct SpectrumReport {
    struct Row {
        int l = 0;
        double lambda_analytic = 0.0;
        /// Mean Jacobian diagonal over the degree; NaN if not computed.
        double lambda_numeric = std::numeric_limits<double>::quiet_NaN();
        int multiplicity = 0;
        /// Largest |J_ij|, i != j, over rows i of this degree; NaN if not computed.
        double offdiag_max = std::numeric_limits<double>::quiet_NaN();
    };

    int n = 2;
    std::vector<Row> rows;
    /// Dimension of the zero eigenspace (n + 2 analytically).
    int center_dimension = 0;
    /// Largest |eigenvalue|.
    double lambda_max_abs = 0.0;

    // Numerical-only fields.
    bool numeric = false;
    double offdiag_max = 0.0;
    double symmetry_residual = 0.0;
    /// Largest relative deviation of a diagonal entry from its analytic value
    /// (absolute deviation / |lambda_max| for zero-eigenvalue entries).
    double diagonal_residual = 0.0;
    std::vector<double> eigenvalues;
};

inline SpectrumReport analytic_spectrum(const flow::FlowSolver& solver, int lmax)
{
    const int n = solver.config().n;
    SpectrumReport rep;
    rep.n = n;
    for (int l = 0; l <= lmax; ++l) {
        SpectrumReport::Row row;
        row.l = l;
        row.lambda_analytic = solver.linear_eigenvalue(l);
        row.multiplicity = harmonic_multiplicity(l, n);
        rep.rows.push_back(row);
        if (row.lambda_analytic == 0.0) rep.center_dimension += row.multiplicity;
        rep.lambda_max_abs = std::max(rep.lambda_max_abs, std::abs(row.lambda_analytic));
    }
    return rep;
}

struct JacobianResult {
    Eigen::MatrixXd matrix;
    SpectrumReport report;
};

/// Central-difference Jacobian of G at 0 in harmonic coefficients of degree
/// <= lmax: column j = (G(eps e_j) - G(-eps e_j)) / (2 eps).
inline JacobianResult numerical_jacobian(const flow::FlowSolver& solver, int lmax, double eps)
{
    const auto& cfg = solver.config();
    if (lmax > cfg.lmax) throw InvalidArgument("Jacobian degree exceeds the grid truncation");
    if (!(eps >= 1e-7 * cfg.R && eps <= 1e-3 * cfg.R)) throw InvalidArgument("eps must lie in [1e-7, 1e-3] R");
    const int n = cfg.n;
    const auto D = static_cast<Eigen::Index>(harmonic::basis_size(n, lmax));

    JacobianResult out;
    out.matrix.resize(D, D);
    std::vector<double> u(solver.num_coeffs(), 0.0);
    for (Eigen::Index j = 0; j < D; ++j) {
        u.assign(u.size(), 0.0);
        u[static_cast<std::size_t>(j)] = eps;
        const std::vector<double> gp = solver.evaluate_G(u);
        u[static_cast<std::size_t>(j)] = -eps;
        const std::vector<double> gm = solver.evaluate_G(u);
        for (Eigen::Index i = 0; i < D; ++i) {
            out.matrix(i, j) = (gp[static_cast<std::size_t>(i)] - gm[static_cast<std::size_t>(i)]) / (2.0 * eps);
        }
    }

    SpectrumReport rep = analytic_spectrum(solver, lmax);
    rep.numeric = true;
    const Eigen::MatrixXd& J = out.matrix;
    const double lam_max = rep.lambda_max_abs;
    for (auto& row : rep.rows) {
        row.lambda_numeric = 0.0;
        row.offdiag_max = 0.0;
    }
    for (Eigen::Index i = 0; i < D; ++i) {
        auto& row = rep.rows[static_cast<std::size_t>(harmonic::degree_of(n, static_cast<std::size_t>(i)))];
        row.lambda_numeric += J(i, i) / row.multiplicity;
        const double ref = row.lambda_analytic;
        const double dev = ref != 0.0 ? std::abs(J(i, i) - ref) / std::abs(ref) : std::abs(J(i, i)) / lam_max;
        rep.diagonal_residual = std::max(rep.diagonal_residual, dev);
        for (Eigen::Index j = 0; j < D; ++j) {
            if (i == j) continue;
            row.offdiag_max = std::max(row.offdiag_max, std::abs(J(i, j)));
            rep.symmetry_residual = std::max(rep.symmetry_residual, std::abs(J(i, j) - J(j, i)));
        }
        rep.offdiag_max = std::max(rep.offdiag_max, row.offdiag_max);
    }

    const Eigen::MatrixXd sym = 0.5 * (J + J.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    rep.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + D);
    double numeric_max = 0.0;
    for (double v : rep.eigenvalues) numeric_max = std::max(numeric_max, std::abs(v));
    rep.lambda_max_abs = numeric_max;
    rep.center_dimension = 0;
    for (double v : rep.eigenvalues) {
        if (std::abs(v) <= 1e-6 * numeric_max) ++rep.center_dimension;
    }
    out.report = std::move(rep);
    return out;
}

/// CSV with columns l, lambda_analytic, lambda_numeric, multiplicity, offdiag_max.
inline std::string spectrum_csv(const SpectrumReport& rep)
{
    std::ostringstream os;
    os << "l,lambda_analytic,lambda_numeric,multiplicity,offdiag_max\n";
    for (const auto& row : rep.rows) {
        os << row.l << ',' << csv::format(row.lambda_analytic) << ',' << csv::format(row.lambda_numeric) << ','
           << row.multiplicity << ',' << csv::format(row.offdiag_max) << '\n';
    }
    return os.str();
}

} // namespace mixedflow::analysis

#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mixedflow/errors.hpp"
#include "mixedflow/geometry.hpp"

namespace mixedflow::speeds {

inline double binomial(int n, int k)
{
    if (k < 0 || k > n) return 0.0;
    double b = 1.0;
    for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
    return b;
}

/// Expression tree phi(H_1, ..., H_n) for custom speeds. Built from the
/// normalized mean curvatures, so every custom speed is symmetric in kappa.
class SpeedExpr {
public:
    enum class Op { constant, mean_curvature, add, sub, mul, div, pow };

    using Ptr = std::shared_ptr<const SpeedExpr>;

    static Ptr constant(double v) { return Ptr(new SpeedExpr(Op::constant, v, 0, nullptr, nullptr)); }
    /// H_m = binom(n, m)^{-1} E_m.
    static Ptr mean_curvature(int m) { return Ptr(new SpeedExpr(Op::mean_curvature, 0.0, m, nullptr, nullptr)); }
    static Ptr binary(Op op, Ptr a, Ptr b) { return Ptr(new SpeedExpr(op, 0.0, 0, std::move(a), std::move(b))); }
    static Ptr power(Ptr base, double exponent) { return Ptr(new SpeedExpr(Op::pow, exponent, 0, std::move(base), nullptr)); }

    /// h[m - 1] = H_m.
    double evaluate(std::span<const double> h) const
    {
        switch (op_) {
        case Op::constant: return value_;
        case Op::mean_curvature: return h[static_cast<std::size_t>(index_ - 1)];
        case Op::add: return lhs_->evaluate(h) + rhs_->evaluate(h);
        case Op::sub: return lhs_->evaluate(h) - rhs_->evaluate(h);
        case Op::mul: return lhs_->evaluate(h) * rhs_->evaluate(h);
        case Op::div: return lhs_->evaluate(h) / rhs_->evaluate(h);
        case Op::pow: return std::pow(lhs_->evaluate(h), value_);
        }
        return 0.0;
    }

    /// Largest m referenced by a mean_curvature leaf.
    int max_order() const
    {
        int m = op_ == Op::mean_curvature ? index_ : 0;
        if (lhs_) m = std::max(m, lhs_->max_order());
        if (rhs_) m = std::max(m, rhs_->max_order());
        return m;
    }

    std::string to_string() const
    {
        std::ostringstream os;
        switch (op_) {
        case Op::constant: os << value_; break;
        case Op::mean_curvature: os << 'H' << index_; break;
        case Op::add: os << '(' << lhs_->to_string() << " + " << rhs_->to_string() << ')'; break;
        case Op::sub: os << '(' << lhs_->to_string() << " - " << rhs_->to_string() << ')'; break;
        case Op::mul: os << '(' << lhs_->to_string() << " * " << rhs_->to_string() << ')'; break;
        case Op::div: os << '(' << lhs_->to_string() << " / " << rhs_->to_string() << ')'; break;
        case Op::pow: os << lhs_->to_string() << '^' << value_; break;
        }
        return os.str();
    }

private:
    SpeedExpr(Op op, double value, int index, Ptr lhs, Ptr rhs)
        : op_(op), value_(value), index_(index), lhs_(std::move(lhs)), rhs_(std::move(rhs)) {}

    Op op_;
    double value_;
    int index_;
    Ptr lhs_;
    Ptr rhs_;
};

inline SpeedExpr::Ptr operator+(SpeedExpr::Ptr a, SpeedExpr::Ptr b) { return SpeedExpr::binary(SpeedExpr::Op::add, std::move(a), std::move(b)); }
inline SpeedExpr::Ptr operator-(SpeedExpr::Ptr a, SpeedExpr::Ptr b) { return SpeedExpr::binary(SpeedExpr::Op::sub, std::move(a), std::move(b)); }
inline SpeedExpr::Ptr operator*(SpeedExpr::Ptr a, SpeedExpr::Ptr b) { return SpeedExpr::binary(SpeedExpr::Op::mul, std::move(a), std::move(b)); }
inline SpeedExpr::Ptr operator/(SpeedExpr::Ptr a, SpeedExpr::Ptr b) { return SpeedExpr::binary(SpeedExpr::Op::div, std::move(a), std::move(b)); }

enum class SpeedKind { mean, power_mean, elementary, custom };

/// Symmetric speed F(kappa) together with the reference radius R that
/// fixes the umbilic point kappa_0 = (1/R, ..., 1/R). Immutable; the
/// factories reject parameters for which dF/dkappa_i(kappa_0) <= 0.
class SpeedSpec {
public:
    /// F = E_1 = sum of the principal curvatures.
    static SpeedSpec mean(int n, double R) { return SpeedSpec(SpeedKind::mean, n, R, 1, 1.0, 1, nullptr); }

    /// F = H_m^beta.
    static SpeedSpec power_mean(int n, double R, int m, double beta)
    {
        if (m < 1 || m > n) throw InvalidArgument("power_mean order m=" + std::to_string(m) + " outside 1..n");
        if (!(beta > 0.0)) throw InvalidArgument("power_mean exponent beta must be positive");
        return SpeedSpec(SpeedKind::power_mean, n, R, m, beta, 1, nullptr);
    }

    /// F = E_l.
    static SpeedSpec elementary(int n, double R, int l)
    {
        if (l < 1 || l > n) throw InvalidArgument("elementary order l=" + std::to_string(l) + " outside 1..n");
        return SpeedSpec(SpeedKind::elementary, n, R, 1, 1.0, l, nullptr);
    }

    /// F = phi(H_1, ..., H_n); umbilic derivative by central differences.
    static SpeedSpec custom(int n, double R, SpeedExpr::Ptr expr)
    {
        if (!expr) throw InvalidArgument("custom speed needs an expression");
        if (expr->max_order() > n) throw InvalidArgument("custom speed references H_m with m > n");
        return SpeedSpec(SpeedKind::custom, n, R, 1, 1.0, 1, std::move(expr));
    }

    SpeedKind kind() const { return kind_; }
    int dimension() const { return n_; }
    double radius() const { return R_; }
    int order_m() const { return m_; }
    double beta() const { return beta_; }
    int order_l() const { return l_; }
    const SpeedExpr::Ptr& expression() const { return expr_; }

    /// Same speed with the reference radius replaced.
    SpeedSpec with_radius(double R) const { return SpeedSpec(kind_, n_, R, m_, beta_, l_, expr_); }

    /// F from the elementary symmetric functions E_0..E_n at one point.
    double from_symmetric(std::span<const double> E, std::size_t node = 0) const
    {
        switch (kind_) {
        case SpeedKind::mean: return E[1];
        case SpeedKind::elementary: return E[static_cast<std::size_t>(l_)];
        case SpeedKind::power_mean: {
            const double h = E[static_cast<std::size_t>(m_)] / binomial(n_, m_);
            if (h < 0.0 && beta_ != std::floor(beta_)) {
                throw SpeedError("negative H_" + std::to_string(m_) + " = " + std::to_string(h) +
                                 " under fractional power at node " + std::to_string(node));
            }
            return std::pow(h, beta_);
        }
        case SpeedKind::custom: {
            std::vector<double> h(static_cast<std::size_t>(n_));
            for (int m = 1; m <= n_; ++m) h[static_cast<std::size_t>(m - 1)] = E[static_cast<std::size_t>(m)] / binomial(n_, m);
            const double v = expr_->evaluate(h);
            if (!std::isfinite(v)) throw SpeedError("custom speed not finite at node " + std::to_string(node));
            return v;
        }
        }
        return 0.0;
    }

    /// F at a raw principal-curvature vector.
    double at(std::span<const double> kappa) const
    {
        std::vector<double> E(static_cast<std::size_t>(n_ + 1));
        for (int l = 0; l <= n_; ++l) E[static_cast<std::size_t>(l)] = geometry::elementary_symmetric(kappa, l);
        return from_symmetric(E);
    }

    std::string describe() const
    {
        switch (kind_) {
        case SpeedKind::mean: return "mean";
        case SpeedKind::power_mean: {
            std::ostringstream os;
            os << "power_mean m=" << m_ << " beta=" << beta_;
            return os.str();
        }
        case SpeedKind::elementary: return "elementary l=" + std::to_string(l_);
        case SpeedKind::custom: return "custom " + expr_->to_string();
        }
        return {};
    }

private:
    SpeedSpec(SpeedKind kind, int n, double R, int m, double beta, int l, SpeedExpr::Ptr expr)
        : kind_(kind), n_(n), R_(R), m_(m), beta_(beta), l_(l), expr_(std::move(expr))
    {
        if (n < 1) throw InvalidArgument("speed dimension must be positive");
        if (!(R > 0.0)) throw InvalidArgument("reference radius must be positive");
        const double d = umbilic_derivative_unchecked();
        if (!(d > 0.0)) {
            throw SpeedError("speed " + describe() + " not admissible: dF/dkappa_1(kappa_0) = " + std::to_string(d));
        }
    }

    double umbilic_derivative_unchecked() const
    {
        switch (kind_) {
        case SpeedKind::mean: return 1.0;
        case SpeedKind::power_mean: return (m_ * beta_ / n_) * std::pow(R_, 1.0 - m_ * beta_);
        case SpeedKind::elementary: return binomial(n_ - 1, l_ - 1) * std::pow(R_, 1.0 - l_);
        case SpeedKind::custom: return central_difference_derivative(1e-6 / R_);
        }
        return 0.0;
    }

public:
    /// dF/dkappa_1 at kappa_0 by central differences with step h.
    double central_difference_derivative(double h) const
    {
        std::vector<double> kp(static_cast<std::size_t>(n_), 1.0 / R_);
        std::vector<double> km = kp;
        kp[0] += h;
        km[0] -= h;
        return (at(kp) - at(km)) / (2.0 * h);
    }

    /// dF/dkappa_1(kappa_0); equal to dF/dkappa_i for every i by symmetry.
    double umbilic_derivative() const { return umbilic_derivative_unchecked(); }

    /// F(kappa_0).
    double umbilic_value() const
    {
        std::vector<double> k0(static_cast<std::size_t>(n_), 1.0 / R_);
        return at(k0);
    }

private:
    SpeedKind kind_;
    int n_;
    double R_;
    int m_;
    double beta_;
    int l_;
    SpeedExpr::Ptr expr_;
};

/// Pointwise F over a curvature bundle.
inline std::vector<double> eval_speed(const SpeedSpec& spec, const geometry::CurvatureBundle& b)
{
    if (b.n != spec.dimension()) throw InvalidArgument("speed dimension does not match the surface");
    std::vector<double> out(b.size());
    std::vector<double> E(static_cast<std::size_t>(b.n + 1));
    for (std::size_t i = 0; i < b.size(); ++i) {
        for (int l = 0; l <= b.n; ++l) E[static_cast<std::size_t>(l)] = b.E[static_cast<std::size_t>(l)][i];
        out[i] = spec.from_symmetric(E, i);
    }
    return out;
}

inline double umbilic_derivative(const SpeedSpec& spec) { return spec.umbilic_derivative(); }

} // namespace mixedflow::speeds

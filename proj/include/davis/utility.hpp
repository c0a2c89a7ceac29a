// SPDX-License-Identifier: MIT
/// @file utility.hpp
/// @brief CRRA utilities on (0, inf), their convex conjugates and marginals.
#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "davis/error.hpp"

namespace davis {

enum class UtilityKind { Log, Power };

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Logarithmic or power utility U(x) = x^gamma / gamma (gamma < 1, gamma != 0).
///
/// U is extended to the whole real line: U(x) = -inf for x < 0 and
/// U(0) = inf_{x>0} U(x). The extension is a sentinel, never an error.
class Utility {
public:
    static Utility log() { return Utility(UtilityKind::Log, 0.0); }

    static Utility power(double gamma) {
        require(std::isfinite(gamma) && gamma < 1.0 && gamma != 0.0, ErrorKind::Argument,
                "power utility needs gamma < 1 and gamma != 0, got " + std::to_string(gamma));
        return Utility(UtilityKind::Power, gamma);
    }

    [[nodiscard]] UtilityKind kind() const noexcept { return kind_; }
    [[nodiscard]] double gamma() const noexcept { return gamma_; }

    [[nodiscard]] std::string name() const {
        return kind_ == UtilityKind::Log ? "log" : "power(" + std::to_string(gamma_) + ")";
    }

    /// U(x) with the -inf extension for x <= 0.
    [[nodiscard]] double operator()(double x) const {
        if (x < 0.0) return kNegInf;
        if (x == 0.0) return value_at_zero();
        if (kind_ == UtilityKind::Log) return std::log(x);
        return std::pow(x, gamma_) / gamma_;
    }

    [[nodiscard]] double value_at_zero() const {
        if (kind_ == UtilityKind::Power && gamma_ > 0.0) return 0.0;
        return kNegInf;
    }

    /// U'(x), x > 0.
    [[nodiscard]] double marginal(double x) const {
        require(x > 0.0, ErrorKind::Domain, "marginal utility needs x > 0");
        if (kind_ == UtilityKind::Log) return 1.0 / x;
        return std::pow(x, gamma_ - 1.0);
    }

    /// U''(x), x > 0.
    [[nodiscard]] double curvature(double x) const {
        require(x > 0.0, ErrorKind::Domain, "utility curvature needs x > 0");
        if (kind_ == UtilityKind::Log) return -1.0 / (x * x);
        return (gamma_ - 1.0) * std::pow(x, gamma_ - 2.0);
    }

    /// I = (U')^{-1}.
    [[nodiscard]] double inverse_marginal(double y) const {
        require(y > 0.0, ErrorKind::Domain, "inverse marginal needs y > 0");
        if (kind_ == UtilityKind::Log) return 1.0 / y;
        return std::pow(y, 1.0 / (gamma_ - 1.0));
    }

    /// V(y) = sup_{x>0} (U(x) - x y), closed form.
    [[nodiscard]] double conjugate(double y) const {
        require(y > 0.0, ErrorKind::Domain, "conjugate needs y > 0");
        if (kind_ == UtilityKind::Log) return -1.0 - std::log(y);
        return (1.0 - gamma_) / gamma_ * std::pow(y, gamma_ / (gamma_ - 1.0));
    }

    /// V'(y) = -I(y).
    [[nodiscard]] double conjugate_derivative(double y) const { return -inverse_marginal(y); }

    /// V(U'(x)) = U(x) - x U'(x), evaluated without forming U'(x) explicitly.
    [[nodiscard]] double conjugate_at_marginal(double x) const {
        require(x > 0.0, ErrorKind::Domain, "conjugate_at_marginal needs x > 0");
        if (kind_ == UtilityKind::Log) return std::log(x) - 1.0;
        return (1.0 - gamma_) / gamma_ * std::pow(x, gamma_);
    }

private:
    Utility(UtilityKind kind, double gamma) : kind_(kind), gamma_(gamma) {}

    UtilityKind kind_;
    double gamma_;
};

/// Convex conjugate bound to its utility.
struct Conjugate {
    Utility owner;

    [[nodiscard]] double operator()(double y) const { return owner.conjugate(y); }
    [[nodiscard]] double derivative(double y) const { return owner.conjugate_derivative(y); }
};

inline double evaluate(const Utility& u, double x) { return u(x); }
inline double conjugate_value(const Conjugate& c, double y) { return c(y); }
inline double inverse_marginal(const Utility& u, double y) { return u.inverse_marginal(y); }

struct ElasticityReport {
    bool reasonable = false;
    double closed_form = 0.0;                     ///< limsup x U'(x) / U(x)
    std::vector<double> grid_points;              ///< x = 10^k, k = 3..8
    std::vector<double> grid_ratios;              ///< x U'(x) / U(x) on the grid
};

/// Asymptotic elasticity limsup x U'(x)/U(x): gamma for power, 0 for log.
inline ElasticityReport check_reasonable_elasticity(const Utility& u) {
    ElasticityReport report;
    report.closed_form = u.kind() == UtilityKind::Log ? 0.0 : u.gamma();
    report.reasonable = report.closed_form < 1.0;
    for (int k = 3; k <= 8; ++k) {
        const double x = std::pow(10.0, k);
        report.grid_points.push_back(x);
        report.grid_ratios.push_back(x * u.marginal(x) / u(x));
    }
    return report;
}

}  // namespace davis

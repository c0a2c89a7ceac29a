// SPDX-License-Identifier: MIT
/// @file superrep.hpp
/// @brief Superreplication prices, replicability and least-element checks,
///        sub-replication envelopes.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "davis/error.hpp"
#include "davis/lp.hpp"
#include "davis/market.hpp"
#include "davis/numeric.hpp"

namespace davis {

enum class Uniqueness { UniquelySuper, NotUnique, Replicable };

inline const char* to_string(Uniqueness u) {
    switch (u) {
        case Uniqueness::UniquelySuper: return "UniquelySuper";
        case Uniqueness::NotUnique: return "NotUnique";
        case Uniqueness::Replicable: return "Replicable";
    }
    return "?";
}

struct SuperrepResult {
    double price = 0.0;                  ///< min cost x of x + pi dS >= psi
    double portfolio = 0.0;              ///< pi of the returned superreplicating portfolio
    std::vector<double> superrep_payoff; ///< price + portfolio * dS
    Uniqueness unique = Uniqueness::NotUnique;
    std::string certificate;
    std::vector<double> pointwise_inf;   ///< m_k = inf of x + pi dS_k over all superreplicating (x, pi)
    std::vector<double> measure;         ///< maximizing martingale weights
    double dual_price = 0.0;             ///< sup_Q E^Q[psi] from the LP
};

struct Replication {
    bool replicable = false;
    double psi0 = 0.0;
    double pi = 0.0;
    double residual = 0.0;   ///< max |psi - psi0 - pi dS|
};

/// Least-squares fit of psi on (1, dS) followed by a residual check.
inline Replication is_replicable(const FiniteMarket& m, std::span<const double> psi, double tol = 1e-9) {
    require(psi.size() == m.size(), ErrorKind::Argument, "payoff length differs from state count");
    const std::size_t n = m.size();
    const double nn = static_cast<double>(n);
    double mean_s = 0.0;
    double mean_p = 0.0;
    double scale = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        mean_s += m.dS[k] / nn;
        mean_p += psi[k] / nn;
        scale = std::max(scale, std::abs(psi[k]));
    }
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sxx += (m.dS[k] - mean_s) * (m.dS[k] - mean_s);
        sxy += (m.dS[k] - mean_s) * (psi[k] - mean_p);
    }
    Replication r;
    r.pi = sxx > 0.0 ? sxy / sxx : 0.0;
    r.psi0 = mean_p - r.pi * mean_s;
    for (std::size_t k = 0; k < n; ++k) {
        r.residual = std::max(r.residual, std::abs(psi[k] - r.psi0 - r.pi * m.dS[k]));
    }
    r.replicable = r.residual <= tol * scale;
    return r;
}

namespace detail {

/// max sum q psi  s.t. q >= 0, sum q = 1, sum q dS = target.
inline LpSolution measure_lp(const FiniteMarket& m, std::span<const double> psi, double target) {
    std::vector<double> c(psi.size());
    for (std::size_t k = 0; k < psi.size(); ++k) c[k] = -psi[k];
    LinearProgram lp(c);
    lp.add_row(std::vector<double>(m.size(), 1.0), RowSense::Equal, 1.0);
    lp.add_row(m.dS, RowSense::Equal, target);
    LpSolution sol = solve_lp(lp);
    require(sol.status == LpStatus::Optimal, ErrorKind::Internal,
            std::string("superreplication LP is ") + to_string(sol.status));
    return sol;
}

}  // namespace detail

/// Cheapest superreplication of psi and the least-element verdict.
///
/// The price comes from the measure-side LP over the martingale polytope; its
/// row multipliers give the portfolio. The verdict compares psi and the
/// per-state infimum vector m with the span of (1, dS).
inline SuperrepResult superreplicate(const FiniteMarket& m, std::span<const double> psi, double tol = 1e-9) {
    require(psi.size() == m.size(), ErrorKind::Argument, "payoff length differs from state count");
    require_no_arbitrage(m);
    SuperrepResult out;
    const LpSolution sol = detail::measure_lp(m, psi, 0.0);
    out.dual_price = -sol.value;
    out.measure = sol.x;
    out.portfolio = -sol.duals[1];
    // Cheapest cash for this portfolio; equals the LP price up to rounding.
    double cash = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < m.size(); ++k) cash = std::max(cash, psi[k] - out.portfolio * m.dS[k]);
    out.price = cash;
    out.superrep_payoff.resize(m.size());
    for (std::size_t k = 0; k < m.size(); ++k) out.superrep_payoff[k] = out.price + out.portfolio * m.dS[k];

    const Replication rep = is_replicable(m, psi, tol);
    if (rep.replicable) {
        out.unique = Uniqueness::Replicable;
        out.price = rep.psi0;
        out.portfolio = rep.pi;
        out.superrep_payoff.assign(psi.begin(), psi.end());
        out.pointwise_inf.assign(psi.begin(), psi.end());
        out.certificate = "payoff lies in span{1, dS} (residual " + std::to_string(rep.residual) + ")";
        return out;
    }
    out.pointwise_inf.resize(m.size());
    for (std::size_t k = 0; k < m.size(); ++k) {
        out.pointwise_inf[k] = -detail::measure_lp(m, psi, m.dS[k]).value;
    }
    const Replication least = is_replicable(m, out.pointwise_inf, std::max(tol, 1e-8));
    if (least.replicable) {
        out.unique = Uniqueness::UniquelySuper;
        out.price = least.psi0;
        out.portfolio = least.pi;
        out.superrep_payoff = out.pointwise_inf;
        out.certificate = "pointwise infimum is attained by x = " + std::to_string(least.psi0) +
                          ", pi = " + std::to_string(least.pi) +
                          "; it is also the minimal-cost superreplication";
    } else {
        out.unique = Uniqueness::NotUnique;
        out.certificate = "pointwise infimum of superreplicating outcomes is not attainable (residual " +
                          std::to_string(least.residual) + ")";
    }
    return out;
}

/// inf_Q E^Q[B + eps phi] = -superreplication price of -(B + eps phi).
inline double lower_envelope(const FiniteMarket& m, std::span<const double> B, std::span<const double> phi,
                             double eps) {
    require(B.size() == m.size() && phi.size() == m.size(), ErrorKind::Argument,
            "envelope inputs differ from state count");
    std::vector<double> neg(m.size());
    for (std::size_t k = 0; k < m.size(); ++k) neg[k] = -(B[k] + eps * phi[k]);
    return -superreplicate(m, neg).price;
}

/// inf_a (B(a) + eps phi(a)) on [lo, hi] by grid scan and Brent refinement.
template <class FB, class FP>
GlobalMinimum lower_envelope_fn(const FB& B, const FP& phi, double eps, double lo, double hi,
                                std::size_t grid = 4001) {
    return global_minimize([&](double a) { return B(a) + eps * phi(a); }, lo, hi, grid);
}

}  // namespace davis

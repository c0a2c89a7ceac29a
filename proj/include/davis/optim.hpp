// SPDX-License-Identifier: MIT
/// @file optim.hpp
/// @brief Primal utility maximization and dual minimization on finite markets.
///
/// With one traded asset both problems reduce to a scalar equation. Near the
/// edge of the admissible interval the optimal wealth in some state can be far
/// below machine epsilon (truncated countable markets), so both solvers work
/// with the distance d to the binding edge and evaluate wealth as
/// c_n -/+ d b_n, where c_n is the wealth at the edge (exactly zero in the
/// binding state).
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "davis/error.hpp"
#include "davis/market.hpp"
#include "davis/numeric.hpp"
#include "davis/utility.hpp"

namespace davis {

struct PrimalSolution {
    double pi_hat = 0.0;
    std::vector<double> X_hat;   ///< optimal terminal wealth per state
    double value = 0.0;          ///< sup E[U(B + pi dS)]
    double foc_residual = 0.0;   ///< |E[U'(X_hat) dS]|
    int iterations = 0;
};

struct DualSolution {
    std::vector<double> density;   ///< Y_n = d(mu)/dP on state n
    double eta = 0.0;              ///< multiplier of the martingale constraint
    double total_mass = 0.0;       ///< y = E[Y]
    double value = 0.0;            ///< E[V(Y)] + E[Y B]
    double kkt_residual = 0.0;     ///< |E[Y dS]|
    std::vector<double> wealth;    ///< I(Y_n) = B_n + eta dS_n
};

struct DualOptions {
    double initial_eta = 0.0;   ///< starting point of the bracket search; must be admissible
};

namespace detail {

enum class Edge { Lower, Upper };

/// Affine wealth a_n + pi b_n on the open interval where it stays positive.
class WealthLine {
public:
    WealthLine(std::span<const double> a, std::span<const double> b) : a_(a.begin(), a.end()), b_(b.begin(), b.end()) {
        lo_ = -std::numeric_limits<double>::infinity();
        hi_ = std::numeric_limits<double>::infinity();
        for (std::size_t n = 0; n < a_.size(); ++n) {
            if (b_[n] > 0.0 && -a_[n] / b_[n] > lo_) {
                lo_ = -a_[n] / b_[n];
                lo_idx_ = n;
            }
            if (b_[n] < 0.0 && a_[n] / -b_[n] < hi_) {
                hi_ = a_[n] / -b_[n];
                hi_idx_ = n;
            }
        }
        if (std::isfinite(lo_)) c_lo_ = edge_wealth(lo_, lo_idx_);
        if (std::isfinite(hi_)) c_hi_ = edge_wealth(hi_, hi_idx_);
    }

    [[nodiscard]] double lower() const { return lo_; }
    [[nodiscard]] double upper() const { return hi_; }
    [[nodiscard]] std::size_t size() const { return a_.size(); }
    [[nodiscard]] bool degenerate() const {
        return std::all_of(b_.begin(), b_.end(), [](double v) { return v == 0.0; });
    }
    [[nodiscard]] std::span<const double> slope() const { return b_; }

    [[nodiscard]] double edge(Edge e) const { return e == Edge::Upper ? hi_ : lo_; }

    /// Wealth at pi = edge -/+ d, evaluated relative to the edge.
    void wealth_from_edge(Edge e, double d, std::vector<double>& out) const {
        out.resize(a_.size());
        if (e == Edge::Upper) {
            for (std::size_t n = 0; n < a_.size(); ++n) out[n] = c_hi_[n] - d * b_[n];
        } else {
            for (std::size_t n = 0; n < a_.size(); ++n) out[n] = c_lo_[n] + d * b_[n];
        }
    }

    [[nodiscard]] double pi_from_edge(Edge e, double d) const { return e == Edge::Upper ? hi_ - d : lo_ + d; }

    void wealth_at(double pi, std::vector<double>& out) const {
        out.resize(a_.size());
        for (std::size_t n = 0; n < a_.size(); ++n) out[n] = a_[n] + pi * b_[n];
    }

private:
    std::vector<double> edge_wealth(double pi, std::size_t binding) const {
        std::vector<double> c(a_.size());
        for (std::size_t n = 0; n < a_.size(); ++n) c[n] = std::max(0.0, a_[n] + pi * b_[n]);
        c[binding] = 0.0;
        return c;
    }

    std::vector<double> a_;
    std::vector<double> b_;
    double lo_;
    double hi_;
    std::size_t lo_idx_ = 0;
    std::size_t hi_idx_ = 0;
    std::vector<double> c_lo_;
    std::vector<double> c_hi_;
};

/// E[U'(w) b]
inline double marginal_gain(const FiniteMarket& m, const Utility& u, std::span<const double> w,
                            std::span<const double> b) {
    double s = 0.0;
    for (std::size_t n = 0; n < w.size(); ++n) {
        if (b[n] != 0.0) s += m.probs[n] * b[n] * u.marginal(w[n]);
    }
    return s;
}

/// E[U''(w) b^2]
inline double marginal_gain_slope(const FiniteMarket& m, const Utility& u, std::span<const double> w,
                                  std::span<const double> b) {
    double s = 0.0;
    for (std::size_t n = 0; n < w.size(); ++n) {
        if (b[n] != 0.0) s += m.probs[n] * b[n] * b[n] * u.curvature(w[n]);
    }
    return s;
}

inline double expected_utility(const FiniteMarket& m, const Utility& u, std::span<const double> w) {
    double s = 0.0;
    for (std::size_t n = 0; n < w.size(); ++n) s += m.probs[n] * u(w[n]);
    return s;
}

/// Edge of the admissible interval on whose side the root of E[U'(a + pi b) b] lies.
inline Edge root_side(const FiniteMarket& m, const Utility& u, const WealthLine& line) {
    std::vector<double> w;
    line.wealth_at(0.5 * (line.lower() + line.upper()), w);
    return marginal_gain(m, u, w, line.slope()) > 0.0 ? Edge::Upper : Edge::Lower;
}

}  // namespace detail

/// Maximize E[U(B + pi dS)] over admissible pi with safeguarded Newton steps
/// in log-distance to the binding edge and bisection fallback.
inline PrimalSolution solve_primal(const FiniteMarket& m, const Utility& u, std::span<const double> endowment) {
    require(endowment.size() == m.size(), ErrorKind::Argument, "endowment length differs from state count");
    require_positive_endowment(endowment);
    require_no_arbitrage(m);
    detail::WealthLine line(endowment, m.dS);
    PrimalSolution sol;
    if (line.degenerate()) {
        sol.pi_hat = 0.0;
        sol.X_hat.assign(endowment.begin(), endowment.end());
        sol.value = detail::expected_utility(m, u, sol.X_hat);
        return sol;
    }
    const detail::Edge side = detail::root_side(m, u, line);
    const double sign = side == detail::Edge::Upper ? 1.0 : -1.0;
    std::vector<double> w;
    // h(t) = sign * E[U'(X) dS] at distance e^t from the edge; increasing in t.
    auto h = [&](double t) {
        line.wealth_from_edge(side, std::exp(t), w);
        return sign * detail::marginal_gain(m, u, w, m.dS);
    };
    auto dh = [&](double t) {
        const double d = std::exp(t);
        line.wealth_from_edge(side, d, w);
        // d pi / dt = -sign * d
        return sign * detail::marginal_gain_slope(m, u, w, m.dS) * (-sign * d);
    };
    double tl = std::log(std::numeric_limits<double>::min());
    double tr = std::log(0.5 * (line.upper() - line.lower()));
    double hl = h(tl);
    double hr = h(tr);
    require(!(hl > 0.0), ErrorKind::Numeric, "primal optimum closer to the edge than double precision resolves");
    if (hr < 0.0) hr = 0.0;   // midpoint is within rounding of the root
    double t = tr;
    double ht = hr;
    for (int it = 0; it < 300 && ht != 0.0; ++it) {
        sol.iterations = it + 1;
        const double slope = dh(t);
        double next = t - ht / slope;
        if (!std::isfinite(next) || next <= tl || next >= tr) next = 0.5 * (tl + tr);
        const double hn = h(next);
        require(!std::isnan(hn), ErrorKind::Numeric, "primal first-order condition is NaN");
        if (hn < 0.0) {
            tl = next;
            hl = hn;
        } else {
            tr = next;
            hr = hn;
        }
        const bool tiny_step = std::abs(next - t) <= 1e-15 * (1.0 + std::abs(t));
        t = next;
        ht = hn;
        if (tiny_step || tr - tl <= 1e-15 * (1.0 + std::abs(t))) break;
    }
    if (std::abs(hl) < std::abs(ht) && std::isfinite(hl)) {
        t = tl;
    }
    if (std::abs(hr) < std::abs(h(t))) t = tr;
    const double d = std::exp(t);
    line.wealth_from_edge(side, d, sol.X_hat);
    sol.pi_hat = line.pi_from_edge(side, d);
    sol.value = detail::expected_utility(m, u, sol.X_hat);
    sol.foc_residual = std::abs(detail::marginal_gain(m, u, sol.X_hat, m.dS));
    return sol;
}

inline PrimalSolution solve_primal(const FiniteMarket& m, const Utility& u) {
    return solve_primal(m, u, m.endowment);
}

/// Minimize E[V(Y)] + E[Y B] over Y >= 0 with E[Y dS] = 0.
///
/// Stationarity gives Y_n = U'(B_n + eta dS_n); the multiplier eta is the root
/// of the decreasing map g(eta) = E[Y(eta) dS], bracketed by geometric
/// expansion from `initial_eta` and refined by TOMS 748 in log-distance to the
/// nearest edge of the admissible interval.
inline DualSolution solve_dual(const FiniteMarket& m, const Utility& u, std::span<const double> endowment,
                               const DualOptions& options = {}) {
    require(endowment.size() == m.size(), ErrorKind::Argument, "endowment length differs from state count");
    require_positive_endowment(endowment);
    require_no_arbitrage(m);
    detail::WealthLine line(endowment, m.dS);
    DualSolution sol;
    auto finish = [&](std::vector<double> wealth, double eta) {
        sol.eta = eta;
        sol.wealth = std::move(wealth);
        sol.density.resize(m.size());
        sol.total_mass = 0.0;
        sol.value = 0.0;
        double g = 0.0;
        for (std::size_t n = 0; n < m.size(); ++n) {
            const double x = sol.wealth[n];
            require(x > 0.0, ErrorKind::Numeric, "dual density is unbounded: implied wealth is not positive");
            const double y = u.marginal(x);
            sol.density[n] = y;
            const double py = m.probs[n] * y;
            sol.total_mass += py;
            sol.value += m.probs[n] * u.conjugate_at_marginal(x) + py * endowment[n];
            g += py * m.dS[n];
        }
        sol.kkt_residual = std::abs(g);
        return sol;
    };
    if (line.degenerate()) return finish(std::vector<double>(endowment.begin(), endowment.end()), 0.0);

    const double eta0 = options.initial_eta;
    require(eta0 > line.lower() && eta0 < line.upper(), ErrorKind::Argument,
            "initial multiplier lies outside the admissible interval");
    std::vector<double> w;
    auto g_at = [&](double eta) {
        line.wealth_at(eta, w);
        return detail::marginal_gain(m, u, w, m.dS);
    };
    const double g0 = g_at(eta0);
    if (g0 == 0.0) {
        line.wealth_at(eta0, w);
        return finish(w, eta0);
    }
    const detail::Edge side = g0 > 0.0 ? detail::Edge::Upper : detail::Edge::Lower;
    const double dir = side == detail::Edge::Upper ? 1.0 : -1.0;
    const double edge = line.edge(side);
    const double width = line.upper() - line.lower();

    // Distances to the edge: far side keeps the sign of g0, near side has the opposite sign.
    double far = std::abs(edge - eta0);
    double near = 0.0;
    auto g_edge = [&](double d) {
        line.wealth_from_edge(side, d, w);
        return detail::marginal_gain(m, u, w, m.dS);
    };
    double step = 1e-3 * width;
    bool bracketed = false;
    for (int k = 0; k < 200 && !bracketed; ++k) {
        const double eta = eta0 + dir * step;
        if (dir * (edge - eta) <= 1e-3 * width) break;
        const double g = g_at(eta);
        if ((g > 0.0) != (g0 > 0.0)) {
            near = std::abs(edge - eta);
            bracketed = true;
        } else {
            far = std::abs(edge - eta);
            step *= 2.0;
        }
    }
    if (!bracketed) {
        double d = far;
        const double d_min = std::numeric_limits<double>::min();
        while (!bracketed) {
            d /= 16.0;
            require(d > d_min, ErrorKind::Numeric,
                    "dual multiplier bracket failed: no sign change down to distance " + std::to_string(d) +
                        " from the edge at " + std::to_string(edge));
            const double g = g_edge(d);
            if ((g > 0.0) != (g0 > 0.0)) {
                near = d;
                bracketed = true;
            } else {
                far = d;
            }
        }
    }
    auto root_fn = [&](double t) { return g_edge(std::exp(t)); };
    const double t_near = std::log(near);
    const double t_far = std::log(far);
    const double t = find_root(root_fn, t_near, t_far, root_fn(t_near), root_fn(t_far));
    std::vector<double> wealth;
    line.wealth_from_edge(side, std::exp(t), wealth);
    return finish(std::move(wealth), line.pi_from_edge(side, std::exp(t)));
}

inline DualSolution solve_dual(const FiniteMarket& m, const Utility& u, const DualOptions& options = {}) {
    return solve_dual(m, u, m.endowment, options);
}

/// Dual minus primal value; nonnegative by weak duality, zero at the optimum.
inline double duality_gap(const PrimalSolution& p, const DualSolution& d) { return d.value - p.value; }

/// sup_pi E[U(B + pi dS)] for an arbitrary endowment on the market's states.
inline double primal_value(const FiniteMarket& m, const Utility& u, std::span<const double> endowment) {
    return solve_primal(m, u, endowment).value;
}

}  // namespace davis

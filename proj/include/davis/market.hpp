// SPDX-License-Identifier: MIT
/// @file market.hpp
/// @brief One-period finite-state markets, the countable CSW family and its
///        truncations, no-arbitrage certification and market tilting.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "davis/error.hpp"
#include "davis/lp.hpp"

namespace davis {

/// One-period market on N states: P, the increment of the traded asset, an
/// endowment B and optionally a claim phi.
struct FiniteMarket {
    std::vector<double> probs;
    std::vector<double> dS;
    std::vector<double> endowment;
    std::optional<std::vector<double>> claim;

    FiniteMarket() = default;

    FiniteMarket(std::vector<double> p, std::vector<double> increments, std::vector<double> b,
                 std::optional<std::vector<double>> phi = std::nullopt)
        : probs(std::move(p)), dS(std::move(increments)), endowment(std::move(b)), claim(std::move(phi)) {
        validate();
    }

    [[nodiscard]] std::size_t size() const noexcept { return probs.size(); }

    void validate() const {
        const std::size_t n = probs.size();
        require(n >= 1, ErrorKind::Model, "market needs at least one state");
        require(dS.size() == n && endowment.size() == n, ErrorKind::Model,
                "probs, dS and endowment must have equal length");
        if (claim) require(claim->size() == n, ErrorKind::Model, "claim length differs from state count");
        double total = 0.0;
        for (double p : probs) {
            require(std::isfinite(p) && p > 0.0, ErrorKind::Model, "probabilities must be strictly positive");
            total += p;
        }
        require(std::abs(total - 1.0) <= 1e-12, ErrorKind::Model, "probabilities must sum to 1");
        for (double v : dS) require(std::isfinite(v), ErrorKind::Model, "dS must be finite");
        for (double v : endowment) require(std::isfinite(v), ErrorKind::Model, "endowment must be finite");
        if (claim) {
            for (double v : *claim) require(std::isfinite(v), ErrorKind::Model, "claim must be finite");
        }
    }

    [[nodiscard]] double expectation(std::span<const double> x) const {
        double s = 0.0;
        for (std::size_t n = 0; n < size(); ++n) s += probs[n] * x[n];
        return s;
    }

    [[nodiscard]] FiniteMarket with_endowment(std::vector<double> b) const {
        FiniteMarket out = *this;
        require(b.size() == size(), ErrorKind::Argument, "endowment length differs from state count");
        out.endowment = std::move(b);
        return out;
    }
};

/// Throws a model error unless min(endowment) > 0.
inline void require_positive_endowment(std::span<const double> b) {
    require(!b.empty() && *std::min_element(b.begin(), b.end()) > 0.0, ErrorKind::Model,
            "endowment must be bounded away from zero");
}

enum class TruncationMode {
    Renormalize,  ///< keep states 0..N and rescale their probabilities
    Cemetery,     ///< keep states 0..N and add one state carrying the tail mass with dS = 0
};

/// Countable one-period market on {0, 1, 2, ...} given by closed-form rules.
struct CountableMarketFamily {
    std::string name;
    std::function<double(std::size_t)> prob_rule;
    std::function<double(std::size_t)> dS_rule;
    std::function<double(std::size_t)> endowment_rule;
    std::function<double(std::size_t)> tail_mass;   ///< sum_{n > N} p_n
    std::vector<std::size_t> truncation_levels;
};

/// The one-period family with p_0 = 3/4, p_n = 2^{-n}/4 and
/// dS_0 = 1, dS_n = (1 - n)/n, endowment 1.
inline CountableMarketFamily csw_family() {
    CountableMarketFamily f;
    f.name = "csw";
    f.prob_rule = [](std::size_t n) { return n == 0 ? 0.75 : std::ldexp(0.25, -static_cast<int>(n)); };
    f.dS_rule = [](std::size_t n) {
        return n == 0 ? 1.0 : (1.0 - static_cast<double>(n)) / static_cast<double>(n);
    };
    f.endowment_rule = [](std::size_t) { return 1.0; };
    f.tail_mass = [](std::size_t N) { return std::ldexp(0.25, -static_cast<int>(N)); };
    f.truncation_levels = {10, 50, 100, 200, 500, 1000};
    return f;
}

inline CountableMarketFamily family_by_name(const std::string& name) {
    if (name == "csw") return csw_family();
    fail(ErrorKind::Config, "unknown market family '" + name + "'");
}

/// Restriction of a countable family to states 0..N.
inline FiniteMarket truncate(const CountableMarketFamily& family, std::size_t N,
                             TruncationMode mode = TruncationMode::Renormalize) {
    require(N >= 2, ErrorKind::Argument, "truncation level must be at least 2");
    std::vector<double> p(N + 1), dS(N + 1), b(N + 1);
    for (std::size_t n = 0; n <= N; ++n) {
        p[n] = family.prob_rule(n);
        dS[n] = family.dS_rule(n);
        b[n] = family.endowment_rule(n);
    }
    if (mode == TruncationMode::Renormalize) {
        const double z = std::accumulate(p.begin(), p.end(), 0.0);
        for (double& q : p) q /= z;
    } else {
        const double tail = family.tail_mass ? family.tail_mass(N)
                                             : 1.0 - std::accumulate(p.begin(), p.end(), 0.0);
        if (tail > 0.0) {
            p.push_back(tail);
            dS.push_back(0.0);
            b.push_back(family.endowment_rule(N + 1));
        }
        const double z = std::accumulate(p.begin(), p.end(), 0.0);
        for (double& q : p) q /= z;
    }
    return FiniteMarket(std::move(p), std::move(dS), std::move(b));
}

/// Probability mass beyond the deepest registered truncation level.
inline double certified_tail_mass(const CountableMarketFamily& family) {
    require(!family.truncation_levels.empty(), ErrorKind::Argument, "family has no truncation levels");
    const std::size_t N = *std::max_element(family.truncation_levels.begin(), family.truncation_levels.end());
    return family.tail_mass(N);
}

struct NoArbitrageResult {
    bool arbitrage_free = false;
    std::vector<double> witness;   ///< strictly positive q with <q, dS> = 0 when arbitrage-free
    double arbitrage = 0.0;        ///< portfolio with pi dS >= 0 and P[pi dS > 0] > 0 otherwise
    double min_weight = 0.0;       ///< smallest witness entry
};

namespace detail {

/// Positive martingale weights obtained by rescaling P separately on {dS > 0} and {dS < 0}.
inline std::vector<double> balanced_witness(const FiniteMarket& m) {
    double up = 0.0;
    double down = 0.0;
    for (std::size_t n = 0; n < m.size(); ++n) {
        if (m.dS[n] > 0.0) up += m.probs[n] * m.dS[n];
        if (m.dS[n] < 0.0) down -= m.probs[n] * m.dS[n];
    }
    std::vector<double> q(m.size());
    double total = 0.0;
    for (std::size_t n = 0; n < m.size(); ++n) {
        double w = m.probs[n];
        if (m.dS[n] > 0.0) w /= up;
        if (m.dS[n] < 0.0) w /= down;
        q[n] = w;
        total += w;
    }
    for (double& v : q) v /= total;
    return q;
}

}  // namespace detail

/// Existence of an equivalent martingale measure.
///
/// Small markets solve the LP  max t  s.t.  q_n >= t, sum q = 1, <q, dS> = 0;
/// markets with more states than the LP limit use the rescaled witness, which
/// exists exactly when dS takes both signs.
inline NoArbitrageResult check_no_arbitrage(const FiniteMarket& m) {
    NoArbitrageResult out;
    const std::size_t N = m.size();
    const bool has_up = std::any_of(m.dS.begin(), m.dS.end(), [](double v) { return v > 0.0; });
    const bool has_down = std::any_of(m.dS.begin(), m.dS.end(), [](double v) { return v < 0.0; });
    if (!has_up && !has_down) {
        out.arbitrage_free = true;
        out.witness = m.probs;
        out.min_weight = *std::min_element(m.probs.begin(), m.probs.end());
        return out;
    }
    if (N + 1 <= LpOptions{}.max_vars) {
        std::vector<double> c(N + 1, 0.0);
        c[N] = -1.0;
        LinearProgram lp(c);
        for (std::size_t n = 0; n < N; ++n) {
            std::vector<double> row(N + 1, 0.0);
            row[n] = 1.0;
            row[N] = -1.0;
            lp.add_row(row, RowSense::GreaterEqual, 0.0);
        }
        std::vector<double> ones(N + 1, 1.0);
        ones[N] = 0.0;
        lp.add_row(ones, RowSense::Equal, 1.0);
        std::vector<double> mart(m.dS);
        mart.push_back(0.0);
        lp.add_row(mart, RowSense::Equal, 0.0);
        const LpSolution sol = solve_lp(lp);
        if (sol.status == LpStatus::Optimal && sol.x[N] > 1e-12) {
            out.arbitrage_free = true;
            out.witness.assign(sol.x.begin(), sol.x.begin() + static_cast<std::ptrdiff_t>(N));
        }
    }
    if (!out.arbitrage_free && has_up && has_down) {
        out.arbitrage_free = true;
        out.witness = detail::balanced_witness(m);
    }
    if (out.arbitrage_free) {
        out.min_weight = *std::min_element(out.witness.begin(), out.witness.end());
    } else {
        out.arbitrage = has_up ? 1.0 : -1.0;
    }
    return out;
}

/// Throws a model error when the market admits arbitrage.
inline void require_no_arbitrage(const FiniteMarket& m) {
    const bool up = std::any_of(m.dS.begin(), m.dS.end(), [](double v) { return v > 0.0; });
    const bool down = std::any_of(m.dS.begin(), m.dS.end(), [](double v) { return v < 0.0; });
    require(up == down, ErrorKind::Model, "market admits arbitrage: dS is one-sided");
}

/// Market with increments scale_n * dS_n.
inline FiniteMarket tilt_market(const FiniteMarket& m, std::span<const double> scale) {
    require(scale.size() == m.size(), ErrorKind::Argument, "scale length differs from state count");
    FiniteMarket out = m;
    for (std::size_t n = 0; n < m.size(); ++n) {
        require(std::isfinite(scale[n]) && scale[n] > 0.0, ErrorKind::Argument, "tilt scale must be positive");
        out.dS[n] = scale[n] * m.dS[n];
    }
    return out;
}

}  // namespace davis

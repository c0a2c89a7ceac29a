// SPDX-License-Identifier: MIT
/// @file oracles.hpp
/// @brief Brute-force reference computations used only by the tests.
///
/// Nothing here calls the library's solvers: maximization is golden-section
/// search, superreplication is vertex enumeration of the martingale polytope,
/// envelopes are dense grids.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

inline double log_u(double x) { return x > 0.0 ? std::log(x) : -std::numeric_limits<double>::infinity(); }

/// x^g / g for x > 0, else -inf (the tests only compare interior values).
inline double power_u(double x, double g) {
    return x > 0.0 ? std::pow(x, g) / g : -std::numeric_limits<double>::infinity();
}

inline std::function<double(double)> utility(bool log, double gamma) {
    if (log) return log_u;
    return [gamma](double x) { return power_u(x, gamma); };
}

inline std::function<double(double)> marginal(bool log, double gamma) {
    if (log) return [](double x) { return 1.0 / x; };
    return [gamma](double x) { return std::pow(x, gamma - 1.0); };
}

/// Maximizer of a unimodal f on [a, b] by golden-section search.
inline double golden_max(const std::function<double(double)>& f, double a, double b, int iters = 300) {
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - r * (b - a);
    double d = a + r * (b - a);
    double fc = f(c);
    double fd = f(d);
    for (int i = 0; i < iters && b - a > 1e-15 * (1.0 + std::abs(a) + std::abs(b)); ++i) {
        if (fc < fd) {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        } else {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        }
    }
    return 0.5 * (a + b);
}

struct Market {
    std::vector<double> p, dS, B;
};

/// Open interval of pi keeping B + pi dS > 0.
inline std::pair<double, double> admissible(const Market& m) {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < m.p.size(); ++n) {
        if (m.dS[n] > 0.0) lo = std::max(lo, -m.B[n] / m.dS[n]);
        if (m.dS[n] < 0.0) hi = std::min(hi, -m.B[n] / m.dS[n]);
    }
    return {lo, hi};
}

inline double expected(const Market& m, const std::function<double(double)>& U, double pi) {
    double s = 0.0;
    for (std::size_t n = 0; n < m.p.size(); ++n) s += m.p[n] * U(m.B[n] + pi * m.dS[n]);
    return s;
}

struct Primal {
    double pi = 0.0;
    double value = 0.0;
};

/// Golden-section maximization of E[U(B + pi dS)] over the admissible interval.
inline Primal primal(const Market& m, const std::function<double(double)>& U) {
    auto [lo, hi] = admissible(m);
    const double w = hi - lo;
    lo += 1e-14 * w;
    hi -= 1e-14 * w;
    auto f = [&](double pi) { return expected(m, U, pi); };
    // Coarse scan keeps golden section away from the steep walls.
    int best = 1;
    double fbest = -std::numeric_limits<double>::infinity();
    const int K = 400;
    for (int k = 1; k < K; ++k) {
        const double v = f(lo + (hi - lo) * k / K);
        if (v > fbest) {
            fbest = v;
            best = k;
        }
    }
    const double a = lo + (hi - lo) * (best - 1) / K;
    const double b = lo + (hi - lo) * (best + 1) / K;
    Primal out;
    out.pi = golden_max(f, a, b);
    out.value = f(out.pi);
    return out;
}

/// Conjugate V(y) = sup_x U(x) - x y in closed form for the oracle families.
inline double conjugate(bool log, double gamma, double y) {
    if (log) return -1.0 - std::log(y);
    const double q = gamma / (gamma - 1.0);
    return std::pow(y, q) * (1.0 - gamma) / gamma;
}

/// Dual value min E[V(Y) + Y B] over Y >= 0 with E[Y dS] = 0 on three states
/// with dS_0 > 0 > dS_2, by nested golden section over (Y_0, Y_1).
inline double dual_three_state(const Market& m, bool log, double gamma) {
    auto objective = [&](double y0, double y1) {
        // E[Y dS] = 0 fixes Y_2.
        const double y2 = -(m.p[0] * y0 * m.dS[0] + m.p[1] * y1 * m.dS[1]) / (m.p[2] * m.dS[2]);
        if (y0 <= 0.0 || y1 <= 0.0 || y2 <= 0.0) return std::numeric_limits<double>::infinity();
        const double y[3] = {y0, y1, y2};
        double s = 0.0;
        for (int n = 0; n < 3; ++n) s += m.p[n] * (conjugate(log, gamma, y[n]) + y[n] * m.B[n]);
        return s;
    };
    auto inner = [&](double y0) {
        // Y_2 > 0 caps Y_1 when dS_1 < 0.
        const double cap = m.dS[1] < 0.0 ? m.p[0] * y0 * m.dS[0] / (m.p[1] * -m.dS[1]) : 1e6;
        const double t = golden_max([&](double v) { return -objective(y0, std::exp(v)); }, std::log(cap) - 40.0,
                                    std::log(cap) - 1e-13, 400);
        return objective(y0, std::exp(t));
    };
    const double t0 = golden_max([&](double v) { return -inner(std::exp(v)); }, -20.0, 14.0, 400);
    return inner(std::exp(t0));
}

/// sup_Q E^Q[psi] over martingale measures by enumerating the polytope's vertices:
/// two-point measures on an up and a down state, and point masses where dS = 0.
inline double superrep_price(const std::vector<double>& dS, const std::vector<double>& psi) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < dS.size(); ++i) {
        if (dS[i] == 0.0) best = std::max(best, psi[i]);
        for (std::size_t j = 0; j < dS.size(); ++j) {
            if (dS[i] > 0.0 && dS[j] < 0.0) {
                const double qi = -dS[j] / (dS[i] - dS[j]);
                best = std::max(best, qi * psi[i] + (1.0 - qi) * psi[j]);
            }
        }
    }
    return best;
}

/// inf_a (B(a) + eps phi(a)) on a uniform grid.
inline double envelope_grid(const std::function<double(double)>& B, const std::function<double(double)>& phi,
                            double eps, double lo, double hi, std::size_t n) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double a = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        best = std::min(best, B(a) + eps * phi(a));
    }
    return best;
}

/// Random arbitrage-free market with N states: dS takes both signs, B > 0.
inline Market random_market(std::mt19937_64& g, std::size_t N) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    Market m;
    m.p.resize(N);
    m.dS.resize(N);
    m.B.resize(N);
    double total = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
        m.p[n] = 0.05 + U(g);
        total += m.p[n];
        m.dS[n] = -1.0 + 2.5 * U(g);
        m.B[n] = 0.5 + 1.5 * U(g);
    }
    for (double& v : m.p) v /= total;
    m.dS[0] = 0.3 + U(g);
    m.dS[N - 1] = -0.3 - U(g);
    return m;
}

}  // namespace oracle

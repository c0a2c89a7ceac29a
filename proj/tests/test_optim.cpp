// SPDX-License-Identifier: MIT
/// @file test_optim.cpp
/// @brief Primal and dual solvers on finite markets, strong duality and KKT checks.

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "davis/market.hpp"
#include "davis/optim.hpp"
#include "oracles.hpp"

using namespace davis;

namespace {

FiniteMarket two_state() { return FiniteMarket({0.5, 0.5}, {2.0, -1.0}, {2.0, 2.0}); }

struct Case {
    bool log;
    double gamma;
    Utility u;
};

std::vector<Case> utilities() {
    return {{true, 0.0, Utility::log()}, {false, 0.5, Utility::power(0.5)}, {false, -1.0, Utility::power(-1.0)}};
}

}  // namespace

TEST(Primal, SymmetricMarket) {
    const FiniteMarket m({0.5, 0.5}, {1.0, -1.0}, {2.0, 2.0});
    const auto s = solve_primal(m, Utility::log());
    EXPECT_NEAR(s.pi_hat, 0.0, 1e-12);
    EXPECT_NEAR(s.value, std::log(2.0), 1e-14);
}

TEST(Primal, TwoStateClosedForm) {
    const auto s = solve_primal(two_state(), Utility::log());
    const auto o = oracle::primal({{0.5, 0.5}, {2.0, -1.0}, {2.0, 2.0}}, oracle::log_u);
    EXPECT_NEAR(s.pi_hat, 0.5, 1e-12);
    EXPECT_NEAR(o.pi, 0.5, 1e-7);
    EXPECT_NEAR(s.X_hat[0], 3.0, 1e-12);
    EXPECT_NEAR(s.X_hat[1], 1.5, 1e-12);
    EXPECT_NEAR(s.value, 0.5 * std::log(4.5), 1e-14);
    EXPECT_NEAR(s.value, o.value, 1e-12);
}

TEST(Primal, CswTwentyMatchesDenseGrid) {
    const FiniteMarket m = truncate(csw_family(), 20);
    const auto s = solve_primal(m, Utility::log());
    const oracle::Market o{m.probs, m.dS, m.endowment};
    const auto [lo, hi] = oracle::admissible(o);
    double best = -1e300;
    // The optimum hugs the upper edge, so the grid is geometric in the distance to it.
    for (int k = 0; k < 200000; ++k) {
        const double pi = hi - (hi - lo) * std::pow(10.0, -14.0 * k / 200000.0);
        best = std::max(best, oracle::expected(o, oracle::log_u, pi));
    }
    EXPECT_NEAR(s.value, best, 1e-8);
    EXPECT_NEAR(s.value, oracle::primal(o, oracle::log_u).value, 1e-10);
}

TEST(Primal, ArbitrageIsModelError) {
    const FiniteMarket m({0.5, 0.5}, {1.0, 2.0}, {1.0, 1.0});
    try {
        (void)solve_primal(m, Utility::log());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Model);
    }
}

TEST(Dual, TwoStateClosedForm) {
    const auto d = solve_dual(two_state(), Utility::log());
    ASSERT_EQ(d.density.size(), 2U);
    EXPECT_NEAR(d.density[0], 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(d.density[1], 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(d.total_mass, 0.5, 1e-12);
    EXPECT_NEAR(d.value, 0.5 * std::log(4.5), 1e-12);
    // Oracle: scan eta for the martingale root by bisection on the KKT map.
    double a = -1.0 + 1e-12, b = 2.0 - 1e-12;
    auto g = [](double eta) { return 0.5 * 2.0 / (2.0 + 2.0 * eta) - 0.5 * 1.0 / (2.0 - eta); };
    for (int i = 0; i < 200; ++i) {
        const double c = 0.5 * (a + b);
        (g(c) > 0.0 ? a : b) = c;
    }
    EXPECT_NEAR(d.eta, 0.5 * (a + b), 1e-10);
}

TEST(Dual, NoTradingMarket) {
    const FiniteMarket m({0.3, 0.7}, {0.0, 0.0}, {1.0, 1.0});
    const auto d = solve_dual(m, Utility::log());
    EXPECT_NEAR(d.density[0], 1.0, 1e-12);
    EXPECT_NEAR(d.density[1], 1.0, 1e-12);
    EXPECT_NEAR(d.value, 0.0, 1e-12);
}

TEST(Dual, ThreeStateMatchesNestedSearch) {
    const oracle::Market o{{0.3, 0.3, 0.4}, {1.0, 0.2, -0.8}, {1.0, 1.5, 0.7}};
    const FiniteMarket m(o.p, o.dS, o.B);
    for (const auto& c : utilities()) {
        const auto d = solve_dual(m, c.u);
        EXPECT_NEAR(d.value, oracle::dual_three_state(o, c.log, c.gamma), 1e-8) << c.u.name();
    }
}

TEST(Dual, TiltedCswLevelsSatisfyStrongDuality) {
    for (std::size_t N : {10U, 100U, 1000U}) {
        const FiniteMarket base = truncate(csw_family(), N);
        std::vector<double> scale(base.size());
        for (std::size_t n = 0; n < scale.size(); ++n) scale[n] = 1.0 + static_cast<double>(n % 2);
        FiniteMarket m = tilt_market(base, scale);
        std::vector<double> B(m.size());
        for (std::size_t n = 0; n < B.size(); ++n) B[n] = 1.0 / scale[n];
        m = m.with_endowment(B);
        const auto p = solve_primal(m, Utility::log());
        const auto d = solve_dual(m, Utility::log());
        EXPECT_GT(d.total_mass, 0.0);
        EXPECT_NEAR(duality_gap(p, d), 0.0, 1e-7) << N;
    }
}

// ---------------------------------------------------------------------------
// properties

TEST(OptimProperty, StrongDualityAndKkt) {
    std::mt19937_64 g(2024);
    for (int t = 0; t < 200; ++t) {
        const auto o = oracle::random_market(g, 30);
        const FiniteMarket m(o.p, o.dS, o.B);
        for (const auto& c : utilities()) {
            const auto p = solve_primal(m, c.u);
            const auto d = solve_dual(m, c.u);
            const double gap = duality_gap(p, d);
            EXPECT_GE(gap, -1e-9);
            EXPECT_LE(gap, 1e-7);
            EXPECT_LT(p.foc_residual, 1e-9);
            EXPECT_LT(d.kkt_residual, 1e-9);
            for (std::size_t n = 0; n < m.size(); ++n) {
                EXPECT_GT(p.X_hat[n], 0.0);
                EXPECT_NEAR(c.u.marginal(p.X_hat[n]), d.density[n], 1e-8 * (1.0 + d.density[n]));
            }
            EXPECT_NEAR(p.value, oracle::primal(o, oracle::utility(c.log, c.gamma)).value,
                        1e-10 * (1.0 + std::abs(p.value)));
        }
    }
}

TEST(OptimProperty, DualDensityIndependentOfStartingMultiplier) {
    std::mt19937_64 g(8);
    const auto o = oracle::random_market(g, 12);
    const FiniteMarket m(o.p, o.dS, o.B);
    const auto [lo, hi] = oracle::admissible(o);
    const auto ref = solve_dual(m, Utility::log());
    std::uniform_real_distribution<double> U(0.02, 0.98);
    for (int r = 0; r < 64; ++r) {
        DualOptions opt;
        opt.initial_eta = lo + (hi - lo) * U(g);
        const auto d = solve_dual(m, Utility::log(), opt);
        for (std::size_t n = 0; n < m.size(); ++n) EXPECT_NEAR(d.density[n], ref.density[n], 1e-9);
    }
}

TEST(OptimProperty, FenchelConsistency) {
    std::mt19937_64 g(99);
    for (int t = 0; t < 50; ++t) {
        const auto o = oracle::random_market(g, 8);
        const FiniteMarket m(o.p, o.dS, o.B);
        const Utility u = Utility::power(0.5);
        const auto p = solve_primal(m, u);
        const auto d = solve_dual(m, u);
        double vb = 0.0, eu = 0.0;
        for (std::size_t n = 0; n < m.size(); ++n) {
            vb += m.probs[n] * (u.conjugate(d.density[n]) + d.density[n] * m.endowment[n]);
            eu += m.probs[n] * u(p.X_hat[n]);
        }
        EXPECT_NEAR(vb - eu, 0.0, 1e-9);
    }
}

TEST(OptimProperty, ValueMonotoneConcaveInCash) {
    std::mt19937_64 g(4);
    const auto o = oracle::random_market(g, 10);
    const FiniteMarket m(o.p, o.dS, o.B);
    const double bmin = *std::min_element(o.B.begin(), o.B.end());
    std::vector<double> values;
    const int K = 41;
    for (int k = 0; k < K; ++k) {
        const double c = -bmin / 2.0 + (1.0 + bmin / 2.0) * k / (K - 1);
        values.push_back(primal_value(m, Utility::log(), [&] {
            std::vector<double> b = o.B;
            for (double& x : b) x += c;
            return b;
        }()));
    }
    for (int k = 1; k < K; ++k) EXPECT_GE(values[k], values[k - 1]);
    for (int k = 1; k + 1 < K; ++k) EXPECT_LE(values[k + 1] - 2.0 * values[k] + values[k - 1], 1e-12);
}

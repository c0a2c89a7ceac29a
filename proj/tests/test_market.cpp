// SPDX-License-Identifier: MIT
/// @file test_market.cpp
/// @brief Finite markets, the countable family, truncation, no-arbitrage and tilting.

#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "davis/market.hpp"
#include "davis/optim.hpp"
#include "oracles.hpp"

using namespace davis;

TEST(Market, RejectsInvalidProbabilities) {
    EXPECT_THROW(FiniteMarket({0.5, 0.6}, {1, -1}, {1, 1}), Error);
    EXPECT_THROW(FiniteMarket({1.0, 0.0}, {1, -1}, {1, 1}), Error);
    EXPECT_THROW(FiniteMarket({0.5, 0.5}, {1}, {1, 1}), Error);
    EXPECT_NO_THROW(FiniteMarket({0.5, 0.5}, {1, -1}, {1, 1}));
}

TEST(Market, TruncateCswAtTwo) {
    const FiniteMarket m = truncate(csw_family(), 2);
    const double z = 0.75 + 0.125 + 0.0625;
    ASSERT_EQ(m.size(), 3U);
    EXPECT_NEAR(m.probs[0], 0.75 / z, 1e-15);
    EXPECT_NEAR(m.probs[1], 0.125 / z, 1e-15);
    EXPECT_NEAR(m.probs[2], 0.0625 / z, 1e-15);
    EXPECT_EQ(m.dS[0], 1.0);
    EXPECT_EQ(m.dS[1], 0.0);
    EXPECT_EQ(m.dS[2], -0.5);
}

TEST(Market, TruncateBelowTwoFails) {
    try {
        (void)truncate(csw_family(), 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Argument);
    }
}

TEST(Market, TailMassCertifiedAtDeepestLevel) {
    const auto fam = csw_family();
    EXPECT_LT(certified_tail_mass(fam), 1e-12);
    // The closed-form tail agrees with one minus the partial sum.
    double partial = 0.0;
    for (std::size_t n = 0; n <= 40; ++n) partial += fam.prob_rule(n);
    EXPECT_NEAR(fam.tail_mass(40), 1.0 - partial, 1e-15);
}

TEST(Market, CemeteryTruncationCarriesTail) {
    const auto fam = csw_family();
    const FiniteMarket m = truncate(fam, 10, TruncationMode::Cemetery);
    ASSERT_EQ(m.size(), 12U);
    EXPECT_EQ(m.dS.back(), 0.0);
    EXPECT_NEAR(m.probs.back(), fam.tail_mass(10), 1e-15);
    EXPECT_NEAR(m.probs[0], 0.75, 1e-15);
}

TEST(Market, TruncationsAreValidMarkets) {
    for (std::size_t N : csw_family().truncation_levels) {
        for (auto mode : {TruncationMode::Renormalize, TruncationMode::Cemetery}) {
            const FiniteMarket m = truncate(csw_family(), N, mode);
            EXPECT_NEAR(std::accumulate(m.probs.begin(), m.probs.end(), 0.0), 1.0, 1e-12);
            EXPECT_TRUE(check_no_arbitrage(m).arbitrage_free);
        }
    }
}

TEST(NoArbitrage, SymmetricWitness) {
    const FiniteMarket m({0.5, 0.5}, {1, -1}, {1, 1});
    const auto r = check_no_arbitrage(m);
    ASSERT_TRUE(r.arbitrage_free);
    EXPECT_NEAR(r.witness[0], 0.5, 1e-12);
    EXPECT_NEAR(r.witness[1], 0.5, 1e-12);
}

TEST(NoArbitrage, OneSidedIncrementIsArbitrage) {
    const FiniteMarket m({0.3, 0.7}, {1, 2}, {1, 1});
    const auto r = check_no_arbitrage(m);
    EXPECT_FALSE(r.arbitrage_free);
    EXPECT_EQ(r.arbitrage, 1.0);
    try {
        require_no_arbitrage(m);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Model);
    }
}

TEST(NoArbitrage, CswFiveAgreesWithSimplexGrid) {
    const FiniteMarket m = truncate(csw_family(), 5);
    EXPECT_TRUE(check_no_arbitrage(m).arbitrage_free);
    // Oracle: a strictly positive q with <q, dS> = 0 exists on a coarse simplex grid
    // (the last coordinate absorbs the martingale constraint).
    bool found = false;
    const int K = 12;
    std::vector<int> c(m.size() - 1, 1);
    std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
        if (found) return;
        if (i + 1 == m.size()) {
            std::vector<double> q(m.size());
            double s = 0.0, mart = 0.0;
            for (std::size_t k = 0; k + 1 < m.size(); ++k) {
                q[k] = static_cast<double>(c[k]) / K;
                s += q[k];
                mart += q[k] * m.dS[k];
            }
            const double last = 1.0 - s;
            if (last > 0.0 && std::abs(mart + last * m.dS.back()) < 0.05) found = true;
            return;
        }
        for (int v = 1; v <= left; ++v) {
            c[i] = v;
            rec(i + 1, left - v);
        }
    };
    rec(0, K - 1);
    EXPECT_TRUE(found);
}

TEST(NoArbitrage, WitnessIsStrictlyPositiveMartingaleMeasure) {
    std::mt19937_64 g(3);
    for (int i = 0; i < 100; ++i) {
        const auto o = oracle::random_market(g, 2 + static_cast<std::size_t>(i % 40));
        const FiniteMarket m(o.p, o.dS, o.B);
        const auto r = check_no_arbitrage(m);
        ASSERT_TRUE(r.arbitrage_free);
        double mart = 0.0, total = 0.0;
        for (std::size_t n = 0; n < m.size(); ++n) {
            EXPECT_GT(r.witness[n], 0.0);
            mart += r.witness[n] * m.dS[n];
            total += r.witness[n];
        }
        EXPECT_NEAR(mart, 0.0, 1e-10);
        EXPECT_NEAR(total, 1.0, 1e-12);
    }
}

TEST(NoArbitrage, LargeMarketUsesBalancedWitness) {
    const FiniteMarket m = truncate(csw_family(), 1000);
    const auto r = check_no_arbitrage(m);
    ASSERT_TRUE(r.arbitrage_free);
    double mart = 0.0;
    for (std::size_t n = 0; n < m.size(); ++n) mart += r.witness[n] * m.dS[n];
    EXPECT_NEAR(mart, 0.0, 1e-12);
    EXPECT_GT(r.min_weight, 0.0);
}

TEST(Tilt, Examples) {
    const FiniteMarket m({0.5, 0.5}, {1, -1}, {1, 1});
    const std::vector<double> ones{1.0, 1.0};
    EXPECT_EQ(tilt_market(m, ones).dS, m.dS);
    const std::vector<double> s{2.0, 1.0};
    EXPECT_EQ(tilt_market(m, s).dS, (std::vector<double>{2.0, -1.0}));
    const std::vector<double> bad{0.0, 1.0};
    try {
        (void)tilt_market(m, bad);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Argument);
    }
}

TEST(Truncation, LogValuesConvergeAtFirstOrderRate) {
    // The optimal position sits at the admissibility edge N/(N-1), so the
    // value approaches its limit like 1/N; successive gaps shrink accordingly.
    std::vector<double> values;
    const std::vector<std::size_t> levels{100, 200, 500, 1000};
    for (std::size_t N : levels) {
        const FiniteMarket m = truncate(csw_family(), N);
        const auto s = solve_primal(m, Utility::log());
        const auto o = oracle::primal({m.probs, m.dS, m.endowment}, oracle::log_u);
        EXPECT_NEAR(s.value, o.value, 1e-10) << N;
        values.push_back(s.value);
    }
    for (std::size_t i = 1; i < values.size(); ++i) EXPECT_LT(values[i], values[i - 1]);
    // Richardson in 1/N: the limits predicted by consecutive pairs agree.
    auto limit = [&](std::size_t i) {
        const double a = 1.0 / static_cast<double>(levels[i]);
        const double b = 1.0 / static_cast<double>(levels[i + 1]);
        return (values[i + 1] * a - values[i] * b) / (a - b);
    };
    EXPECT_NEAR(limit(1), limit(2), 1e-5);
    EXPECT_LT(std::abs(values[3] - values[2]), std::abs(values[2] - values[1]));
}

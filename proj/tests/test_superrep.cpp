// SPDX-License-Identifier: MIT
/// @file test_superrep.cpp
/// @brief Superreplication prices, replicability and least-element certification.

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "davis/superrep.hpp"
#include "oracles.hpp"

using namespace davis;

namespace {

FiniteMarket three_state() { return FiniteMarket({1.0 / 3, 1.0 / 3, 1.0 / 3}, {1.0, 0.0, -1.0}, {1.0, 1.0, 1.0}); }

std::vector<double> affine(const FiniteMarket& m, double x, double pi) {
    std::vector<double> out(m.size());
    for (std::size_t n = 0; n < m.size(); ++n) out[n] = x + pi * m.dS[n];
    return out;
}

}  // namespace

TEST(Superrep, ThreeStateCounterexample) {
    const std::vector<double> psi{-1.0, 0.0, -1.0};
    const auto r = superreplicate(three_state(), psi);
    EXPECT_NEAR(r.price, 0.0, 1e-12);
    EXPECT_EQ(r.unique, Uniqueness::NotUnique);
    EXPECT_FALSE(r.certificate.empty());
}

TEST(Superrep, ReplicableIncrement) {
    const FiniteMarket m = three_state();
    const auto r = superreplicate(m, m.dS);
    EXPECT_NEAR(r.price, 0.0, 1e-12);
    EXPECT_NEAR(r.portfolio, 1.0, 1e-12);
    EXPECT_EQ(r.unique, Uniqueness::Replicable);
}

TEST(Superrep, ConstantClaim) {
    const std::vector<double> psi{2.5, 2.5, 2.5};
    const auto r = superreplicate(three_state(), psi);
    EXPECT_NEAR(r.price, 2.5, 1e-12);
    EXPECT_NEAR(r.portfolio, 0.0, 1e-12);
    EXPECT_EQ(r.unique, Uniqueness::Replicable);
}

TEST(Superrep, FlippedThreeStateIsReplicable) {
    const std::vector<double> psi{-1.0, 0.0, 1.0};
    EXPECT_EQ(superreplicate(three_state(), psi).unique, Uniqueness::Replicable);
}

TEST(Superrep, ConvexClaimIsUniquelySuperreplicable) {
    // psi = max(dS, 0) on (1, 0, -1): the chord 1/2 + dS/2 is the least superreplicating outcome.
    const std::vector<double> psi{1.0, 0.0, 0.0};
    const auto r = superreplicate(three_state(), psi);
    EXPECT_EQ(r.unique, Uniqueness::UniquelySuper);
    EXPECT_NEAR(r.price, 0.5, 1e-12);
    EXPECT_NEAR(r.portfolio, 0.5, 1e-12);
}

TEST(Replicable, Examples) {
    const FiniteMarket m = three_state();
    const auto r = is_replicable(m, affine(m, 3.0, 2.0));
    ASSERT_TRUE(r.replicable);
    EXPECT_NEAR(r.psi0, 3.0, 1e-12);
    EXPECT_NEAR(r.pi, 2.0, 1e-12);
    const std::vector<double> psi{-1.0, 0.0, -1.0};
    EXPECT_FALSE(is_replicable(m, psi).replicable);
    const FiniteMarket two({0.4, 0.6}, {1.0, -2.0}, {1.0, 1.0});
    std::mt19937_64 g(1);
    std::normal_distribution<double> N;
    for (int i = 0; i < 20; ++i) {
        const std::vector<double> any{N(g), N(g)};
        EXPECT_TRUE(is_replicable(two, any).replicable);
    }
}

TEST(LowerEnvelope, ConstantEndowment) {
    const std::vector<double> B{2.0, 2.0, 2.0}, phi{0.3, -1.0, 0.7};
    EXPECT_NEAR(lower_envelope(three_state(), B, phi, 0.0), 2.0, 1e-12);
}

TEST(LowerEnvelope, MatchesVertexEnumeration) {
    const FiniteMarket m({0.2, 0.3, 0.1, 0.4}, {1.0, 0.5, -0.2, -1.0}, {1, 1, 1, 1});
    const std::vector<double> B{1.3, 0.9, 1.1, 1.4}, phi{0.5, -0.4, 1.0, 0.2};
    std::vector<double> neg(4);
    for (int n = 0; n < 4; ++n) neg[n] = -(B[n] + 0.1 * phi[n]);
    EXPECT_NEAR(lower_envelope(m, B, phi, 0.1), -oracle::superrep_price(m.dS, neg), 1e-12);
}

TEST(LowerEnvelope, FunctionFormApproachesInfimum) {
    auto B = [](double a) { return 2.0 + a * a / (1.0 + a * a); };
    auto phi = [](double a) { return std::tanh(a); };
    for (double eps : {1e-2, 1e-3, 1e-4}) {
        const auto r = lower_envelope_fn(B, phi, eps, -50.0, 50.0);
        EXPECT_NEAR(r.value, oracle::envelope_grid(B, phi, eps, -50.0, 50.0, 200001), 1e-6);
        EXPECT_NEAR(r.value, 2.0, 2.0 * eps);
    }
}

// ---------------------------------------------------------------------------
// properties

TEST(SuperrepProperty, PriceEqualsVertexEnumeration) {
    std::mt19937_64 g(31);
    std::normal_distribution<double> N;
    for (int t = 0; t < 200; ++t) {
        const auto o = oracle::random_market(g, 2 + t % 5);
        const FiniteMarket m(o.p, o.dS, o.B);
        std::vector<double> psi(m.size());
        for (double& v : psi) v = N(g);
        const auto r = superreplicate(m, psi);
        EXPECT_NEAR(r.price, oracle::superrep_price(m.dS, psi), 1e-9);
        EXPECT_NEAR(r.price, r.dual_price, 1e-9);
        for (std::size_t n = 0; n < m.size(); ++n) EXPECT_GE(r.superrep_payoff[n], psi[n] - 1e-12);
        if (r.unique == Uniqueness::Replicable) {
            for (std::size_t n = 0; n < m.size(); ++n) EXPECT_NEAR(r.superrep_payoff[n], psi[n], 1e-9);
        }
    }
}

TEST(SuperrepProperty, UniquenessScaleAndTranslationInvariant) {
    std::mt19937_64 g(77);
    std::normal_distribution<double> N;
    std::uniform_real_distribution<double> U(0.1, 5.0);
    int seen_unique = 0, seen_not = 0;
    for (int t = 0; t < 100; ++t) {
        const auto o = oracle::random_market(g, 3 + t % 4);
        FiniteMarket m(o.p, o.dS, o.B);
        // Snap a few increments to zero so all three verdicts occur.
        if (t % 3 == 0) m.dS[1] = 0.0;
        std::vector<double> psi(m.size());
        for (double& v : psi) v = std::round(2.0 * N(g)) / 2.0;
        const Uniqueness base = superreplicate(m, psi).unique;
        seen_unique += base == Uniqueness::UniquelySuper;
        seen_not += base == Uniqueness::NotUnique;
        const double alpha = U(g), x = N(g), pi = N(g);
        std::vector<double> scaled(m.size()), moved(m.size());
        for (std::size_t n = 0; n < m.size(); ++n) {
            scaled[n] = alpha * psi[n];
            moved[n] = psi[n] + x + pi * m.dS[n];
        }
        EXPECT_EQ(superreplicate(m, scaled).unique, base) << t;
        EXPECT_EQ(superreplicate(m, moved).unique, base) << t;
    }
    EXPECT_GT(seen_unique + seen_not, 0);
}

// SPDX-License-Identifier: MIT
/// @file test_utility.cpp
/// @brief Utility family: values, conjugates, marginals and regularity checks.

#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "davis/utility.hpp"
#include "oracles.hpp"

using davis::Conjugate;
using davis::ErrorKind;
using davis::Utility;

namespace {

std::vector<Utility> family() {
    return {Utility::log(), Utility::power(0.5), Utility::power(-1.0), Utility::power(-3.0), Utility::power(0.9)};
}

/// Grid maximization of U(x) - x y, independent of the closed form.
double conjugate_by_grid(const Utility& u, double y) {
    double best = -std::numeric_limits<double>::infinity();
    double arg = 0.0;
    for (int k = 0; k <= 60000; ++k) {
        const double x = std::exp(-30.0 + 60.0 * k / 60000.0);
        const double v = u(x) - x * y;
        if (v > best) {
            best = v;
            arg = x;
        }
    }
    const double t = oracle::golden_max([&](double s) { return u(std::exp(s)) - std::exp(s) * y; },
                                        std::log(arg) - 1e-3, std::log(arg) + 1e-3);
    return u(std::exp(t)) - std::exp(t) * y;
}

}  // namespace

TEST(Utility, LogAtOneIsZero) { EXPECT_DOUBLE_EQ(Utility::log()(1.0), 0.0); }

TEST(Utility, PowerHalfAtFour) {
    // x^g / g = 2 sqrt(4) = 4; checked against the definition
    EXPECT_NEAR(Utility::power(0.5)(4.0), std::pow(4.0, 0.5) / 0.5, 1e-15);
    EXPECT_NEAR(Utility::power(0.5)(4.0), 4.0, 1e-15);
}

TEST(Utility, NegativeArgumentIsMinusInfinity) {
    EXPECT_EQ(Utility::log()(-1.0), -std::numeric_limits<double>::infinity());
    EXPECT_EQ(Utility::power(0.5)(-1.0), -std::numeric_limits<double>::infinity());
}

TEST(Utility, ValueAtZeroIsInfimum) {
    EXPECT_EQ(Utility::log()(0.0), -std::numeric_limits<double>::infinity());
    EXPECT_EQ(Utility::power(-1.0)(0.0), -std::numeric_limits<double>::infinity());
    EXPECT_EQ(Utility::power(0.5)(0.0), 0.0);
}

TEST(Utility, PowerRejectsInvalidGamma) {
    for (double g : {0.0, 1.0, 1.5, std::nan("")}) {
        try {
            (void)Utility::power(g);
            FAIL() << "gamma " << g << " accepted";
        } catch (const davis::Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::Argument);
        }
    }
}

TEST(Utility, ConjugateLogClosedForm) {
    const Conjugate v{Utility::log()};
    EXPECT_DOUBLE_EQ(v(1.0), -1.0);
    for (double y : {0.1, 0.5, 2.0, 7.0}) EXPECT_NEAR(v(y), -1.0 - std::log(y), 1e-15);
}

TEST(Utility, ConjugatePowerHalfAtOne) {
    // max of 2 sqrt(x) - x is 1 at x = 1
    EXPECT_NEAR(Conjugate{Utility::power(0.5)}(1.0), 1.0, 1e-15);
    EXPECT_NEAR(conjugate_by_grid(Utility::power(0.5), 1.0), 1.0, 1e-9);
}

TEST(Utility, ConjugateMatchesGridMaximization) {
    for (const Utility& u : family()) {
        for (double y : {0.3, 1.0, 2.5}) {
            EXPECT_NEAR(u.conjugate(y), conjugate_by_grid(u, y), 1e-8 * (1.0 + std::abs(u.conjugate(y))))
                << u.name() << " y=" << y;
        }
    }
}

TEST(Utility, ConjugateRejectsNonPositive) {
    EXPECT_THROW((void)Utility::log().conjugate(0.0), davis::Error);
    EXPECT_THROW((void)Utility::power(0.5).conjugate(-1.0), davis::Error);
}

TEST(Utility, InverseMarginalExamples) {
    EXPECT_DOUBLE_EQ(Utility::log().inverse_marginal(2.0), 0.5);
    EXPECT_DOUBLE_EQ(Utility::log().inverse_marginal(1.0), 1.0);
    // U'(x) = x^{-1/2} = 1 solved by bisection
    double a = 0.01, b = 100.0;
    for (int i = 0; i < 200; ++i) {
        const double m = 0.5 * (a + b);
        (std::pow(m, -0.5) > 1.0 ? a : b) = m;
    }
    EXPECT_NEAR(Utility::power(0.5).inverse_marginal(1.0), 0.5 * (a + b), 1e-12);
    EXPECT_THROW((void)Utility::log().inverse_marginal(0.0), davis::Error);
}

TEST(Utility, ElasticityReport) {
    const auto log_rep = davis::check_reasonable_elasticity(Utility::log());
    EXPECT_TRUE(log_rep.reasonable);
    EXPECT_EQ(log_rep.closed_form, 0.0);
    EXPECT_EQ(log_rep.grid_points.size(), 6U);
    EXPECT_LT(log_rep.grid_ratios.back(), log_rep.grid_ratios.front());
    EXPECT_NEAR(log_rep.grid_ratios.back(), 1.0 / std::log(1e8), 1e-12);
    for (double g : {0.5, -1.0, 0.9}) {
        const auto rep = davis::check_reasonable_elasticity(Utility::power(g));
        EXPECT_TRUE(rep.reasonable);
        EXPECT_DOUBLE_EQ(rep.closed_form, g);
        for (double r : rep.grid_ratios) EXPECT_NEAR(r, g, 1e-12);
    }
}

// ---------------------------------------------------------------------------
// properties

TEST(UtilityProperty, IncreasingAndMidpointConcave) {
    std::mt19937_64 g(11);
    std::uniform_real_distribution<double> U(-6.0, 6.0);
    for (const Utility& u : family()) {
        for (int i = 0; i < 500; ++i) {
            double a = std::exp(U(g));
            double b = std::exp(U(g));
            if (a == b) continue;
            if (a > b) std::swap(a, b);
            EXPECT_LT(u(a), u(b));
            EXPECT_GE(u(0.5 * (a + b)), 0.5 * (u(a) + u(b)) - 1e-12 * std::abs(u(b)));
        }
    }
}

TEST(UtilityProperty, InadaLimits) {
    for (const Utility& u : family()) {
        double prev_small = 0.0;
        double prev_large = std::numeric_limits<double>::infinity();
        for (int k = 1; k <= 12; ++k) {
            const double small = u.marginal(std::pow(10.0, -k));
            const double large = u.marginal(std::pow(10.0, k));
            EXPECT_GT(small, prev_small);
            EXPECT_LT(large, prev_large);
            prev_small = small;
            prev_large = large;
        }
        EXPECT_GT(u.marginal(1e-300), 1e25);
        EXPECT_LT(u.marginal(1e300), 1e-25);
    }
}

TEST(UtilityProperty, InverseMarginalRoundTrip) {
    for (const Utility& u : family()) {
        for (int k = -30; k <= 30; ++k) {
            const double x = std::pow(10.0, k / 5.0);
            EXPECT_NEAR(u.inverse_marginal(u.marginal(x)), x, 1e-12 * x) << u.name();
        }
    }
}

TEST(UtilityProperty, FenchelInequality) {
    std::mt19937_64 g(5);
    std::uniform_real_distribution<double> U(-5.0, 5.0);
    for (const Utility& u : family()) {
        const Conjugate v{u};
        for (int i = 0; i < 2000; ++i) {
            const double x = std::exp(U(g));
            const double y = std::exp(U(g));
            EXPECT_LE(u(x), v(y) + x * y + 1e-12 * (std::abs(u(x)) + x * y));
        }
    }
}

TEST(UtilityProperty, ConjugateConvexNonIncreasing) {
    for (const Utility& u : family()) {
        const Conjugate v{u};
        for (int k = -20; k < 20; ++k) {
            const double a = std::exp(k / 4.0);
            const double b = std::exp((k + 1) / 4.0);
            EXPECT_GT(v(a), v(b));
            EXPECT_LE(v(0.5 * (a + b)), 0.5 * (v(a) + v(b)));
            EXPECT_LT(v.derivative(a), 0.0);
        }
    }
}

TEST(UtilityProperty, ConjugateAtMarginalIdentity) {
    for (const Utility& u : family()) {
        for (double x : {0.01, 0.3, 1.0, 4.0, 90.0}) {
            EXPECT_NEAR(u.conjugate_at_marginal(x), u.conjugate(u.marginal(x)), 1e-12 * (1.0 + std::abs(u(x))));
        }
    }
}

TEST(UtilityProperty, ConjugateDerivativeMatchesDifferenceQuotient) {
    for (const Utility& u : family()) {
        const Conjugate v{u};
        for (double y : {0.2, 1.0, 3.0}) {
            const double h = 1e-5 * y;
            const double fd = (v(y + h) - v(y - h)) / (2.0 * h);
            EXPECT_NEAR(v.derivative(y), fd, 1e-6 * (1.0 + std::abs(fd))) << u.name();
            EXPECT_NEAR(u(u.inverse_marginal(y)) - y * u.inverse_marginal(y), v(y), 1e-12 * (1.0 + std::abs(v(y))));
        }
    }
}

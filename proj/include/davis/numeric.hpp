// SPDX-License-Identifier: MIT
/// @file numeric.hpp
/// @brief Small numeric kernels: extrapolated difference quotients,
///        bracketed 1-d root finding and minimization.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "davis/error.hpp"

namespace davis {

/// Value of the interpolating polynomial through (h_k, d_k) at h = 0 (Neville).
inline double extrapolate_to_zero(std::span<const double> h, std::span<const double> d) {
    require(h.size() == d.size() && !h.empty(), ErrorKind::Argument, "extrapolation needs matching samples");
    std::vector<double> p(d.begin(), d.end());
    const std::size_t n = h.size();
    for (std::size_t level = 1; level < n; ++level) {
        for (std::size_t i = 0; i + level < n; ++i) {
            const double hi = h[i];
            const double hj = h[i + level];
            p[i] = (hi * p[i + 1] - hj * p[i]) / (hi - hj);
        }
    }
    return p[0];
}

/// Richardson-extrapolated one-sided derivative.
struct OneSidedDerivative {
    double value = 0.0;
    double error = 0.0;              ///< |full extrapolation - extrapolation without the coarsest step|
    std::vector<double> quotients;   ///< raw difference quotients, coarsest step first
};

/// Default stencil for one-sided derivatives.
inline std::vector<double> default_steps(double scale = 1.0) { return {1e-2 * scale, 5e-3 * scale, 2.5e-3 * scale}; }

/// One-sided derivative of f at x0 in direction sign(direction).
///
/// Quotients (f(x0 + s h) - f(x0)) / (s h) are extrapolated to h -> 0 with a
/// polynomial in h. The error estimate compares the full extrapolation with the
/// one that drops the coarsest step.
template <class F>
OneSidedDerivative one_sided_derivative(F&& f, double x0, int direction, std::span<const double> steps,
                                        double f0) {
    require(direction == 1 || direction == -1, ErrorKind::Argument, "direction must be +1 or -1");
    require(!steps.empty(), ErrorKind::Argument, "need at least one step");
    OneSidedDerivative out;
    std::vector<double> hs;
    for (double h : steps) {
        require(h > 0.0, ErrorKind::Argument, "steps must be positive");
        const double signed_h = direction * h;
        out.quotients.push_back((f(x0 + signed_h) - f0) / signed_h);
        hs.push_back(h);
    }
    out.value = extrapolate_to_zero(hs, out.quotients);
    if (hs.size() >= 2) {
        const double reduced = extrapolate_to_zero(std::span(hs).subspan(1), std::span(out.quotients).subspan(1));
        out.error = std::abs(out.value - reduced);
    }
    return out;
}

template <class F>
OneSidedDerivative one_sided_derivative(F&& f, double x0, int direction, std::span<const double> steps) {
    const double f0 = f(x0);
    return one_sided_derivative(f, x0, direction, steps, f0);
}

/// Central difference at two steps h and h/ratio, Richardson-combined (O(h^4)).
template <class F>
double central_derivative(F&& f, double x0, double h, double ratio = 10.0) {
    const auto central = [&](double step) { return (f(x0 + step) - f(x0 - step)) / (2.0 * step); };
    const double coarse = central(h);
    const double fine = central(h / ratio);
    const double r2 = ratio * ratio;
    return (r2 * fine - coarse) / (r2 - 1.0);
}

/// Root of a function with a sign change on [a, b] (TOMS 748).
template <class F>
double find_root(F&& g, double a, double b, double ga, double gb, std::uintmax_t max_iter = 200) {
    require(std::isfinite(ga) && std::isfinite(gb), ErrorKind::Numeric, "root bracket has non-finite values");
    if (ga == 0.0) return a;
    if (gb == 0.0) return b;
    require((ga < 0.0) != (gb < 0.0), ErrorKind::Numeric, "root bracket has no sign change");
    std::uintmax_t iters = max_iter;
    const auto tol = boost::math::tools::eps_tolerance<double>(std::numeric_limits<double>::digits - 2);
    const auto [lo, hi] = boost::math::tools::toms748_solve(g, a, b, ga, gb, tol, iters);
    return 0.5 * (lo + hi);
}

/// Local minimum of f on [a, b] (Brent). Returns (argmin, min).
template <class F>
std::pair<double, double> minimize_on(F&& f, double a, double b) {
    return boost::math::tools::brent_find_minima(f, a, b, std::numeric_limits<double>::digits / 2);
}

struct GlobalMinimum {
    double argmin = 0.0;
    double value = 0.0;
    bool at_boundary = false;   ///< argmin lies within one grid cell of an endpoint
};

/// Grid scan followed by Brent refinement around the best grid point.
template <class F>
GlobalMinimum global_minimize(F&& f, double lo, double hi, std::size_t grid = 4001) {
    require(hi > lo && grid >= 3, ErrorKind::Argument, "bad minimization domain");
    const double step = (hi - lo) / static_cast<double>(grid - 1);
    std::size_t best = 0;
    double best_value = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid; ++i) {
        const double v = f(lo + step * static_cast<double>(i));
        if (v < best_value) {
            best_value = v;
            best = i;
        }
    }
    GlobalMinimum out;
    const double a = lo + step * static_cast<double>(best == 0 ? 0 : best - 1);
    const double b = lo + step * static_cast<double>(std::min(best + 1, grid - 1));
    auto [x, v] = minimize_on(f, a, b);
    if (v <= best_value) {
        out.argmin = x;
        out.value = v;
    } else {
        out.argmin = lo + step * static_cast<double>(best);
        out.value = best_value;
    }
    out.at_boundary = best <= 1 || best + 2 >= grid;
    return out;
}

}  // namespace davis

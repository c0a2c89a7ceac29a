// SPDX-License-Identifier: MIT
/// @file davis.hpp
/// @brief Davis price intervals: irrelevance tests, dual, supergradient and
///        finite-difference methods, the directional-derivative LP, the
///        envelope-slope endpoint formula and the CSW truncation sweep.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "davis/error.hpp"
#include "davis/lp.hpp"
#include "davis/market.hpp"
#include "davis/numeric.hpp"
#include "davis/optim.hpp"
#include "davis/utility.hpp"

namespace davis {

enum class DavisMethod { DualSweep, Supergradient, DerbFormula, FiniteDifference };

inline const char* to_string(DavisMethod m) {
    switch (m) {
        case DavisMethod::DualSweep: return "DualSweep";
        case DavisMethod::Supergradient: return "Supergradient";
        case DavisMethod::DerbFormula: return "DerbFormula";
        case DavisMethod::FiniteDifference: return "FiniteDifference";
    }
    return "?";
}

struct DavisInterval {
    double p_low = 0.0;
    double p_high = 0.0;
    DavisMethod method = DavisMethod::DualSweep;
    double y_B = 0.0;
    std::map<std::string, double> diagnostics;
    std::vector<std::string> flags;

    [[nodiscard]] double width() const { return p_high - p_low; }
    [[nodiscard]] bool has_flag(const std::string& f) const {
        return std::find(flags.begin(), flags.end(), f) != flags.end();
    }
};

// ---------------------------------------------------------------------------
// helpers

namespace detail {

inline std::vector<double> shifted(std::span<const double> B, double x, std::span<const double> phi, double eps) {
    std::vector<double> out(B.size());
    for (std::size_t n = 0; n < B.size(); ++n) out[n] = B[n] + x + (phi.empty() ? 0.0 : eps * phi[n]);
    return out;
}

inline double sup_abs(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

}  // namespace detail

/// Largest perturbation size keeping B + eps phi strictly positive with margin.
inline double default_eps_max(std::span<const double> B, std::span<const double> phi) {
    const double bmin = *std::min_element(B.begin(), B.end());
    return 0.5 * bmin / std::max(detail::sup_abs(phi), 1.0);
}

// ---------------------------------------------------------------------------
// irrelevance

struct IrrelevanceReport {
    bool irrelevant = true;
    double base_value = 0.0;
    std::vector<double> eps_used;
    std::vector<double> excess;        ///< U(B + eps R) - U(B)
    std::vector<std::string> warnings;
};

inline std::vector<double> default_irrelevance_grid() { return {0.1, -0.1, 0.01, -0.01, 1e-3, -1e-3}; }

/// Checks U(B + eps R) <= U(B) + 1e-9 + 1e-6 eps^2 on a small eps grid.
/// Grid points leaving the positive-endowment region are shrunk by 10 until admissible.
inline IrrelevanceReport is_irrelevant(const FiniteMarket& m, const Utility& u, std::span<const double> B,
                                       std::span<const double> R,
                                       std::span<const double> eps_grid = {}) {
    require(B.size() == m.size() && R.size() == m.size(), ErrorKind::Argument, "inputs differ from state count");
    const std::vector<double> grid =
        eps_grid.empty() ? default_irrelevance_grid() : std::vector<double>(eps_grid.begin(), eps_grid.end());
    IrrelevanceReport rep;
    rep.base_value = primal_value(m, u, B);
    for (double eps : grid) {
        double e = eps;
        std::vector<double> b = detail::shifted(B, 0.0, R, e);
        int shrinks = 0;
        while (*std::min_element(b.begin(), b.end()) <= 0.0 && shrinks < 30) {
            e /= 10.0;
            b = detail::shifted(B, 0.0, R, e);
            ++shrinks;
        }
        if (shrinks > 0) {
            rep.warnings.push_back("eps " + std::to_string(eps) + " shrunk to " + std::to_string(e));
        }
        const double diff = primal_value(m, u, b) - rep.base_value;
        rep.eps_used.push_back(e);
        rep.excess.push_back(diff);
        if (diff > 1e-9 + 1e-6 * e * e) rep.irrelevant = false;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// dual method

/// Singleton E[Y phi] / E[Y] from the unique finite-market dual minimizer.
inline DavisInterval davis_interval_finite(const FiniteMarket& m, const Utility& u, std::span<const double> B,
                                           std::span<const double> phi) {
    require(phi.size() == m.size(), ErrorKind::Argument, "claim length differs from state count");
    const DualSolution d = solve_dual(m, u, B);
    double eyphi = 0.0;
    for (std::size_t n = 0; n < m.size(); ++n) eyphi += m.probs[n] * d.density[n] * phi[n];
    DavisInterval out;
    out.method = DavisMethod::DualSweep;
    out.y_B = d.total_mass;
    out.p_low = out.p_high = eyphi / d.total_mass;
    out.diagnostics["E_Yphi"] = eyphi;
    out.diagnostics["kkt_residual"] = d.kkt_residual;
    out.diagnostics["eta"] = d.eta;
    return out;
}

// ---------------------------------------------------------------------------
// directional derivative

struct DirectionalDerivative {
    double value = 0.0;          ///< sup over admissible delta of E[Y (delta dS + phi)]
    double delta = 0.0;          ///< maximizing direction
    double E_Yphi = 0.0;
    double E_YdS = 0.0;
    std::size_t cone_rows = 0;   ///< states with zero optimal wealth
    LpStatus status = LpStatus::Optimal;
    std::vector<double> ray;
};

/// One-period linear control problem for the derivative of eps -> U(B + eps phi) at 0+.
///
/// delta is free; states with zero optimal wealth add phi_n + delta dS_n >= 0.
/// The objective coefficient E[Y dS] is the dual martingale residual and is
/// zeroed below `kkt_tol`.
inline DirectionalDerivative directional_derivative_lp(const FiniteMarket& m, const Utility& u,
                                                       std::span<const double> B, std::span<const double> phi,
                                                       double kkt_tol = 1e-9, double wealth_tol = 1e-14) {
    require(phi.size() == m.size(), ErrorKind::Argument, "claim length differs from state count");
    const PrimalSolution p = solve_primal(m, u, B);
    const DualSolution d = solve_dual(m, u, B);
    DirectionalDerivative out;
    for (std::size_t n = 0; n < m.size(); ++n) {
        out.E_Yphi += m.probs[n] * d.density[n] * phi[n];
        out.E_YdS += m.probs[n] * d.density[n] * m.dS[n];
    }
    const double coef = std::abs(out.E_YdS) <= kkt_tol ? 0.0 : out.E_YdS;
    LinearProgram lp({-coef});
    lp.bounds = {VarBound::Free};
    for (std::size_t n = 0; n < m.size(); ++n) {
        if (p.X_hat[n] <= wealth_tol) {
            lp.add_row({m.dS[n]}, RowSense::GreaterEqual, -phi[n]);
            ++out.cone_rows;
        }
    }
    if (out.cone_rows == 0) {
        if (coef != 0.0) {
            out.status = LpStatus::Unbounded;
            out.ray = {coef > 0.0 ? 1.0 : -1.0};
            out.value = std::numeric_limits<double>::infinity();
            return out;
        }
        out.value = out.E_Yphi;
        return out;
    }
    const LpSolution sol = solve_lp(lp);
    out.status = sol.status;
    if (sol.status == LpStatus::Unbounded) {
        out.ray = sol.ray;
        out.value = std::numeric_limits<double>::infinity();
        return out;
    }
    require(sol.status == LpStatus::Optimal, ErrorKind::Numeric, "directional-derivative cone is empty");
    out.delta = sol.x[0];
    out.value = out.E_Yphi - sol.value;
    return out;
}

// ---------------------------------------------------------------------------
// supergradient method

struct SupergradientOptions {
    std::vector<double> eps_steps;            ///< one-sided stencil for eps; default_steps() if empty
    double x_step = 1e-3;                     ///< central step for d/dx when y_B is not supplied
    std::optional<double> y_B;                ///< dual mass; replaces the d/dx estimate when set
    double tie_factor = 2.0;                  ///< collapse to a point when width < tie_factor * error
};

/// [d+/d eps u, d-/d eps u] / (d/dx u) at (0, 0) for a value function u(eps, x).
template <class F>
DavisInterval interval_via_supergradient(F&& value, const SupergradientOptions& opt = {}) {
    const std::vector<double> steps = opt.eps_steps.empty() ? default_steps() : opt.eps_steps;
    const double u0 = value(0.0, 0.0);
    auto along_eps = [&](double e) { return value(e, 0.0); };
    const OneSidedDerivative plus = one_sided_derivative(along_eps, 0.0, +1, steps, u0);
    const OneSidedDerivative minus = one_sided_derivative(along_eps, 0.0, -1, steps, u0);
    double dx = 0.0;
    if (opt.y_B) {
        dx = *opt.y_B;
    } else {
        dx = central_derivative([&](double x) { return value(0.0, x); }, 0.0, opt.x_step);
    }
    require(dx > 0.0, ErrorKind::Numeric, "marginal value of cash is not positive: " + std::to_string(dx));
    DavisInterval out;
    out.method = DavisMethod::Supergradient;
    out.y_B = dx;
    const double raw_low = plus.value / dx;
    const double raw_high = minus.value / dx;
    const double err = (plus.error + minus.error) / dx;
    out.diagnostics["du_eps_plus"] = plus.value;
    out.diagnostics["du_eps_minus"] = minus.value;
    out.diagnostics["du_x"] = dx;
    out.diagnostics["stencil_error"] = err;
    out.diagnostics["raw_p_low"] = raw_low;
    out.diagnostics["raw_p_high"] = raw_high;
    out.diagnostics["eps_step_max"] = steps.front();
    if (std::abs(raw_high - raw_low) < opt.tie_factor * err) {
        out.flags.push_back("singleton_within_tolerance");
        out.p_low = out.p_high = 0.5 * (raw_low + raw_high);
    } else {
        out.p_low = std::min(raw_low, raw_high);
        out.p_high = std::max(raw_low, raw_high);
    }
    return out;
}

/// Supergradient interval on a finite market with u(eps, x) = U(B + x + eps phi).
inline DavisInterval interval_via_supergradient(const FiniteMarket& m, const Utility& u, std::span<const double> B,
                                                std::span<const double> phi) {
    require(phi.size() == m.size() && B.size() == m.size(), ErrorKind::Argument, "inputs differ from state count");
    const double cap = default_eps_max(B, phi);
    SupergradientOptions opt;
    opt.x_step = std::min(1e-3, 0.5 * cap);
    auto value = [&](double e, double x) { return primal_value(m, u, detail::shifted(B, x, phi, e)); };
    // Strongly curved value functions need a finer stencil; shrink until the extrapolation settles.
    double scale = std::min(1.0, cap / 1e-2);
    DavisInterval out;
    for (int refine = 0; refine < 4; ++refine, scale *= 0.25) {
        opt.eps_steps = default_steps(scale);
        out = interval_via_supergradient(value, opt);
        if (out.diagnostics.at("stencil_error") < 1e-8) break;
    }
    return out;
}

// ---------------------------------------------------------------------------
// finite-difference method

/// Central-difference price (d/d eps U(B + eps phi)) / (d/dx U(B + x)) at 0, steps h and h/10.
inline DavisInterval interval_finite_difference(const FiniteMarket& m, const Utility& u, std::span<const double> B,
                                                std::span<const double> phi, double h = 1e-3) {
    require(phi.size() == m.size() && B.size() == m.size(), ErrorKind::Argument, "inputs differ from state count");
    const double step = std::min(h, default_eps_max(B, phi));
    const double de = central_derivative(
        [&](double e) { return primal_value(m, u, detail::shifted(B, 0.0, phi, e)); }, 0.0, step);
    const double dx = central_derivative(
        [&](double x) { return primal_value(m, u, detail::shifted(B, x, {}, 0.0)); }, 0.0, step);
    require(dx > 0.0, ErrorKind::Numeric, "marginal value of cash is not positive");
    DavisInterval out;
    out.method = DavisMethod::FiniteDifference;
    out.y_B = dx;
    out.p_low = out.p_high = de / dx;
    out.diagnostics["du_eps"] = de;
    out.diagnostics["du_x"] = dx;
    out.diagnostics["step"] = step;
    return out;
}

// ---------------------------------------------------------------------------
// envelope-slope endpoint formula

/// One-sided slopes of a concave envelope eps -> L(eps) at 0.
struct EnvelopeSlopes {
    double plus = 0.0;    ///< L'(0+)
    double minus = 0.0;   ///< L'(0-)
    double value = 0.0;   ///< L(0)
    double plus_error = 0.0;
    double minus_error = 0.0;
    bool plus_fallback = false;    ///< extrapolation rejected, smallest-step quotient used
    bool minus_fallback = false;
};

namespace detail {

/// Richardson value unless it leaves the hull of the quotients by more than
/// their spread; then the smallest-step quotient.
inline double guarded_limit(const OneSidedDerivative& d, bool& fallback) {
    const auto [lo, hi] = std::minmax_element(d.quotients.begin(), d.quotients.end());
    const double spread = *hi - *lo;
    fallback = d.value < *lo - spread - 1e-12 || d.value > *hi + spread + 1e-12;
    return fallback ? d.quotients.back() : d.value;
}

}  // namespace detail

template <class F>
EnvelopeSlopes envelope_slopes(F&& envelope, std::span<const double> steps) {
    EnvelopeSlopes s;
    s.value = envelope(0.0);
    const OneSidedDerivative p = one_sided_derivative(envelope, 0.0, +1, steps, s.value);
    const OneSidedDerivative m = one_sided_derivative(envelope, 0.0, -1, steps, s.value);
    s.plus = detail::guarded_limit(p, s.plus_fallback);
    s.minus = detail::guarded_limit(m, s.minus_fallback);
    s.plus_error = p.error;
    s.minus_error = m.error;
    return s;
}

struct DerbInputs {
    double y_B = 0.0;               ///< total dual mass
    double E_Yphi = 0.0;            ///< regular-part pairing with the claim
    double singular_mass = 0.0;     ///< y_B - E[Y_T]; zero on finite markets
    double slope_plus = 0.0;        ///< envelope slope L'(0+)
    double slope_minus = 0.0;       ///< envelope slope L'(0-)
    bool constant_difference = true;   ///< L(eps) - L(0) is deterministic
};

/// [E[Y phi] + mass L'(0+), E[Y phi] + mass L'(0-)] / y_B.
inline DavisInterval interval_derb(const DerbInputs& in) {
    require(in.y_B > 0.0, ErrorKind::Argument, "dual mass must be positive");
    if (!in.constant_difference && in.singular_mass != 0.0) {
        fail(ErrorKind::Unsupported, "singular pairing with a non-constant envelope difference is not computable");
    }
    DavisInterval out;
    out.method = DavisMethod::DerbFormula;
    out.y_B = in.y_B;
    out.p_low = (in.E_Yphi + in.singular_mass * in.slope_plus) / in.y_B;
    out.p_high = (in.E_Yphi + in.singular_mass * in.slope_minus) / in.y_B;
    out.diagnostics["E_Yphi"] = in.E_Yphi;
    out.diagnostics["singular_mass"] = in.singular_mass;
    out.diagnostics["slope_plus"] = in.slope_plus;
    out.diagnostics["slope_minus"] = in.slope_minus;
    return out;
}

/// Same formula with envelope slopes computed from L on a shrinking grid.
template <class F>
DavisInterval interval_derb(F&& envelope, double y_B, double E_Yphi, double singular_mass,
                            std::span<const double> steps, bool constant_difference = true) {
    const EnvelopeSlopes s = envelope_slopes(envelope, steps);
    DavisInterval out = interval_derb(DerbInputs{y_B, E_Yphi, singular_mass, s.plus, s.minus, constant_difference});
    out.diagnostics["envelope_at_zero"] = s.value;
    return out;
}

// ---------------------------------------------------------------------------
// projection consistency

struct ProjectionCheck {
    double price_B = 0.0;     ///< first component of the two-claim price at q = (1, 0)
    double price_phi = 0.0;   ///< second component
    double davis_price = 0.0;
};

/// Gradient of (q1, q2) -> U(q1 B + q2 phi + x) at (1, 0, 0), divided by d/dx.
inline ProjectionCheck projection_price(const FiniteMarket& m, const Utility& u, std::span<const double> B,
                                        std::span<const double> phi, double h = 1e-3) {
    const double step = std::min(h, default_eps_max(B, phi));
    auto value = [&](double q1, double q2, double x) {
        std::vector<double> w(m.size());
        for (std::size_t n = 0; n < m.size(); ++n) w[n] = q1 * B[n] + q2 * phi[n] + x;
        return primal_value(m, u, w);
    };
    const double g1 = central_derivative([&](double t) { return value(1.0 + t, 0.0, 0.0); }, 0.0, step);
    const double g2 = central_derivative([&](double t) { return value(1.0, t, 0.0); }, 0.0, step);
    const double gx = central_derivative([&](double t) { return value(1.0, 0.0, t); }, 0.0, step);
    require(gx > 0.0, ErrorKind::Numeric, "marginal value of cash is not positive");
    ProjectionCheck out;
    out.price_B = g1 / gx;
    out.price_phi = g2 / gx;
    out.davis_price = davis_interval_finite(m, u, B, phi).p_low;
    return out;
}

// ---------------------------------------------------------------------------
// perturbation cone

/// Directions delta with pi_hat + eps delta admissible for the endowment B + eps phi.
struct PerturbationCone {
    const FiniteMarket* market = nullptr;
    std::vector<double> X_hat;
    std::vector<double> phi;
    double eps = 0.0;

    [[nodiscard]] bool contains(double delta) const {
        for (std::size_t n = 0; n < X_hat.size(); ++n) {
            if (X_hat[n] + eps * (phi[n] + delta * market->dS[n]) < 0.0) return false;
        }
        return true;
    }

    [[nodiscard]] PerturbationCone at(double e) const {
        PerturbationCone c = *this;
        c.eps = e;
        return c;
    }
};

inline PerturbationCone perturbation_cone(const FiniteMarket& m, const Utility& u, std::span<const double> B,
                                          std::span<const double> phi, double eps) {
    require(eps > 0.0, ErrorKind::Argument, "cone size eps must be positive");
    PerturbationCone c;
    c.market = &m;
    c.X_hat = solve_primal(m, u, B).X_hat;
    c.phi.assign(phi.begin(), phi.end());
    c.eps = eps;
    return c;
}

// ---------------------------------------------------------------------------
// CSW sweep

enum class TestFunctionKind { DyadicParity, DyadicBlock, Parity, Constant };

inline const char* to_string(TestFunctionKind k) {
    switch (k) {
        case TestFunctionKind::DyadicParity: return "dyadic_parity";
        case TestFunctionKind::DyadicBlock: return "dyadic_block";
        case TestFunctionKind::Parity: return "parity";
        case TestFunctionKind::Constant: return "constant";
    }
    return "?";
}

/// Bounded test function H >= 1 on the state index.
inline std::function<double(std::size_t)> test_function(TestFunctionKind k) {
    auto level = [](std::size_t n) {
        std::size_t l = 0;
        while (n >>= 1U) ++l;
        return l;
    };
    switch (k) {
        case TestFunctionKind::DyadicParity:
            return [level](std::size_t n) { return 1.0 + static_cast<double>((n + level(n)) % 2); };
        case TestFunctionKind::DyadicBlock:
            return [level](std::size_t n) { return 1.0 + static_cast<double>(level(n) % 2); };
        case TestFunctionKind::Parity: return [](std::size_t n) { return 1.0 + static_cast<double>(n % 2); };
        case TestFunctionKind::Constant: return [](std::size_t) { return 1.0; };
    }
    fail(ErrorKind::Internal, "unknown test function");
}

/// CSW truncation with endowment 1/H and increments dS / H.
inline FiniteMarket tilted_csw(std::size_t N, const std::function<double(std::size_t)>& H,
                               TruncationMode mode = TruncationMode::Renormalize) {
    FiniteMarket base = truncate(csw_family(), N, mode);
    std::vector<double> B(base.size());
    for (std::size_t n = 0; n < base.size(); ++n) {
        const double h = H(n);
        require(h >= 1.0 && std::isfinite(h), ErrorKind::Argument, "test function must satisfy 1 <= H < inf");
        B[n] = 1.0 / h;
    }
    FiniteMarket tilted = tilt_market(base, B);
    tilted.endowment = std::move(B);
    return tilted;
}

struct LevelPairing {
    std::size_t N = 0;
    double y_N = 0.0;        ///< dual mass of the tilted problem
    double pairing_H = 0.0;  ///< <Q^N, H> for the untilted measure Q^N proportional to Q~^N B
};

inline LevelPairing level_pairing(std::size_t N, const std::function<double(std::size_t)>& H,
                                  TruncationMode mode = TruncationMode::Renormalize) {
    const FiniteMarket m = tilted_csw(N, H, mode);
    const DualSolution d = solve_dual(m, Utility::log());
    double qb = 0.0;
    for (std::size_t n = 0; n < m.size(); ++n) qb += m.probs[n] * d.density[n] * m.endowment[n];
    LevelPairing out;
    out.N = N;
    out.y_N = d.total_mass;
    out.pairing_H = d.total_mass / qb;
    return out;
}

struct OscillatingTestFunction {
    bool found = false;
    TestFunctionKind kind = TestFunctionKind::DyadicParity;
    std::function<double(std::size_t)> H;
    std::vector<LevelPairing> pairings;
    double amplitude = 0.0;                                   ///< max - min of pairing_H over levels
    std::vector<std::pair<TestFunctionKind, double>> tried;   ///< candidate and its amplitude
};

inline double pairing_amplitude(const std::vector<LevelPairing>& p) {
    const auto [lo, hi] = std::minmax_element(p.begin(), p.end(), [](const LevelPairing& a, const LevelPairing& b) {
        return a.pairing_H < b.pairing_H;
    });
    return hi->pairing_H - lo->pairing_H;
}

/// First candidate H whose pairings with the level-N dual measures oscillate by more than `min_amplitude`.
inline OscillatingTestFunction find_oscillating_test_function(
    std::span<const std::size_t> levels, double min_amplitude = 0.05,
    std::span<const TestFunctionKind> candidates = {},
    TruncationMode mode = TruncationMode::Renormalize) {
    require(levels.size() >= 2, ErrorKind::Argument, "need at least two truncation levels");
    static const std::vector<TestFunctionKind> kDefault = {TestFunctionKind::DyadicParity,
                                                           TestFunctionKind::DyadicBlock, TestFunctionKind::Parity};
    const std::span<const TestFunctionKind> cands = candidates.empty() ? std::span(kDefault) : candidates;
    OscillatingTestFunction out;
    for (TestFunctionKind k : cands) {
        auto H = test_function(k);
        std::vector<LevelPairing> pairings;
        for (std::size_t N : levels) pairings.push_back(level_pairing(N, H, mode));
        const double amp = pairing_amplitude(pairings);
        out.tried.emplace_back(k, amp);
        if (amp > min_amplitude) {
            out.found = true;
            out.kind = k;
            out.H = H;
            out.pairings = std::move(pairings);
            out.amplitude = amp;
            return out;
        }
        if (!out.H || amp > out.amplitude) {
            out.kind = k;
            out.H = H;
            out.pairings = std::move(pairings);
            out.amplitude = amp;
        }
    }
    return out;
}

struct SweepRow {
    std::size_t N = 0;
    double y_N = 0.0;
    double pairing_H = 0.0;
    double du_plus = 0.0;
    double du_minus = 0.0;
    double gap = 0.0;
    double error = 0.0;               ///< differencing-error bound for the gap
    double concavity_residual = 0.0;  ///< max positive second difference on the x-grid
    std::vector<double> x_grid;
    std::vector<double> u_grid;
};

struct SweepReport {
    TestFunctionKind test_function = TestFunctionKind::DyadicParity;
    bool test_function_found = false;
    std::vector<SweepRow> rows;
    double gap_relative_spread = 0.0;   ///< (max gap - min gap) / max gap
    double pairing_amplitude = 0.0;
};

struct SweepOptions {
    std::vector<double> steps = default_steps();
    std::size_t x_grid_points = 21;
    double x_grid_halfwidth = 2e-2;
    TruncationMode mode = TruncationMode::Renormalize;
    std::optional<TestFunctionKind> test_function;   ///< skip the search when set
};

/// One-sided derivatives of x -> U_N(1/H + x) at 0 on the tilted CSW truncations.
inline SweepReport csw_sweep(std::span<const std::size_t> levels, const SweepOptions& opt = {}) {
    require(levels.size() >= 3, ErrorKind::Argument, "sweep needs at least three levels");
    require(std::is_sorted(levels.begin(), levels.end()) &&
                std::adjacent_find(levels.begin(), levels.end()) == levels.end(),
            ErrorKind::Argument, "sweep levels must be strictly increasing");
    SweepReport rep;
    std::function<double(std::size_t)> H;
    if (opt.test_function) {
        rep.test_function = *opt.test_function;
        rep.test_function_found = true;
        H = test_function(*opt.test_function);
    } else {
        const OscillatingTestFunction found = find_oscillating_test_function(levels, 0.05, {}, opt.mode);
        rep.test_function = found.kind;
        rep.test_function_found = found.found;
        H = found.H;
    }
    const Utility u = Utility::log();
    for (std::size_t N : levels) {
        const FiniteMarket m = tilted_csw(N, H, opt.mode);
        auto value = [&](double x) { return primal_value(m, u, detail::shifted(m.endowment, x, {}, 0.0)); };
        SweepRow row;
        const LevelPairing lp = level_pairing(N, H, opt.mode);
        row.N = N;
        row.y_N = lp.y_N;
        row.pairing_H = lp.pairing_H;
        const double u0 = value(0.0);
        const OneSidedDerivative plus = one_sided_derivative(value, 0.0, +1, opt.steps, u0);
        const OneSidedDerivative minus = one_sided_derivative(value, 0.0, -1, opt.steps, u0);
        row.du_plus = plus.value;
        row.du_minus = minus.value;
        row.gap = minus.value - plus.value;
        row.error = plus.error + minus.error;
        const std::size_t k = opt.x_grid_points;
        for (std::size_t i = 0; i < k; ++i) {
            const double x = -opt.x_grid_halfwidth + 2.0 * opt.x_grid_halfwidth * static_cast<double>(i) /
                                                         static_cast<double>(k - 1);
            row.x_grid.push_back(x);
            row.u_grid.push_back(x == 0.0 ? u0 : value(x));
        }
        for (std::size_t i = 1; i + 1 < k; ++i) {
            const double second = row.u_grid[i - 1] - 2.0 * row.u_grid[i] + row.u_grid[i + 1];
            row.concavity_residual = std::max(row.concavity_residual, second);
        }
        rep.rows.push_back(std::move(row));
    }
    double gmin = rep.rows.front().gap;
    double gmax = gmin;
    std::vector<LevelPairing> pairs;
    for (const SweepRow& r : rep.rows) {
        gmin = std::min(gmin, r.gap);
        gmax = std::max(gmax, r.gap);
        pairs.push_back({r.N, r.y_N, r.pairing_H});
    }
    rep.gap_relative_spread = gmax > 0.0 ? (gmax - gmin) / gmax : 0.0;
    rep.pairing_amplitude = pairing_amplitude(pairs);
    return rep;
}

}  // namespace davis

// SPDX-License-Identifier: MIT
/// @file lp.hpp
/// @brief Dense two-phase simplex for small linear programs.
///
/// Solves   minimize c.x  subject to  a_i.x (<=|>=|=) b_i,  x_j >= 0 or free,
/// and reports the primal solution, row multipliers and certificates of
/// infeasibility or unboundedness. The tableau routine is a template over the
/// scalar type: it runs in double first and, when the double result fails the
/// optimality checks, again in exact rational arithmetic.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "davis/error.hpp"

namespace davis {

enum class RowSense { LessEqual, GreaterEqual, Equal };
enum class VarBound { NonNegative, Free };
enum class LpStatus { Optimal, Infeasible, Unbounded };

inline const char* to_string(LpStatus s) {
    switch (s) {
        case LpStatus::Optimal: return "optimal";
        case LpStatus::Infeasible: return "infeasible";
        case LpStatus::Unbounded: return "unbounded";
    }
    return "unknown";
}

struct LinearProgram {
    std::vector<double> objective;
    std::vector<std::vector<double>> rows;
    std::vector<RowSense> senses;
    std::vector<double> rhs;
    std::vector<VarBound> bounds;   ///< empty means all NonNegative

    explicit LinearProgram(std::vector<double> c, std::vector<VarBound> b = {})
        : objective(std::move(c)), bounds(std::move(b)) {}

    void add_row(std::vector<double> coeffs, RowSense sense, double b) {
        rows.push_back(std::move(coeffs));
        senses.push_back(sense);
        rhs.push_back(b);
    }

    [[nodiscard]] std::size_t num_vars() const { return objective.size(); }
    [[nodiscard]] std::size_t num_rows() const { return rows.size(); }
    [[nodiscard]] VarBound bound(std::size_t j) const {
        return bounds.empty() ? VarBound::NonNegative : bounds[j];
    }
};

/// Result of solve_lp.
///
/// Multipliers follow the Lagrangian c.x - y.(Ax - b): y_i >= 0 on >= rows,
/// y_i <= 0 on <= rows, free on equality rows, so that b.y equals the optimal
/// value. For infeasible problems `farkas` holds y with y.A <= 0 on
/// nonnegative columns, y.A = 0 on free columns and y.b > 0 (row signs as
/// above). For unbounded problems `ray` is a feasible direction with c.ray < 0.
struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> x;
    double value = 0.0;
    std::vector<double> duals;
    double dual_value = 0.0;
    std::vector<double> farkas;
    std::vector<double> ray;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double complementarity_residual = 0.0;
    bool exact = false;
    int iterations = 0;
};

struct LpOptions {
    double tolerance = 1e-9;   ///< acceptance threshold for residual checks
    int max_iterations = 20000;
    std::size_t max_vars = 200;
    bool allow_exact_fallback = true;
};

namespace detail {

using Rational = boost::multiprecision::cpp_rational;

template <class Real>
struct ScalarTraits;

template <>
struct ScalarTraits<double> {
    static double pivot_tol() { return 1e-11; }
    static double cost_tol() { return 1e-11; }
    static double feas_tol() { return 1e-9; }
    static double from(double v) { return v; }
    static double to_double(double v) { return v; }
};

template <>
struct ScalarTraits<Rational> {
    static Rational pivot_tol() { return Rational(0); }
    static Rational cost_tol() { return Rational(0); }
    static Rational feas_tol() { return Rational(0); }
    static Rational from(double v) { return Rational(v); }
    static double to_double(const Rational& v) { return static_cast<double>(v); }
};

/// Standard-form image of a LinearProgram: min c.z, A z = b, z >= 0, b >= 0.
struct StandardForm {
    std::size_t m = 0;
    std::size_t n = 0;                     ///< structural + slack columns
    std::vector<double> a;                 ///< m x n row-major
    std::vector<double> b;
    std::vector<double> c;
    std::vector<double> row_sign;          ///< +1 or -1 applied to each row
    std::vector<std::ptrdiff_t> plus_col;  ///< column of x_j^+
    std::vector<std::ptrdiff_t> minus_col; ///< column of x_j^- (free vars), else -1
};

inline StandardForm to_standard_form(const LinearProgram& lp) {
    StandardForm sf;
    sf.m = lp.num_rows();
    const std::size_t nv = lp.num_vars();
    std::size_t col = 0;
    sf.plus_col.assign(nv, -1);
    sf.minus_col.assign(nv, -1);
    for (std::size_t j = 0; j < nv; ++j) {
        sf.plus_col[j] = static_cast<std::ptrdiff_t>(col++);
        if (lp.bound(j) == VarBound::Free) sf.minus_col[j] = static_cast<std::ptrdiff_t>(col++);
    }
    std::vector<std::ptrdiff_t> slack_col(sf.m, -1);
    for (std::size_t i = 0; i < sf.m; ++i) {
        if (lp.senses[i] != RowSense::Equal) slack_col[i] = static_cast<std::ptrdiff_t>(col++);
    }
    sf.n = col;
    sf.a.assign(sf.m * sf.n, 0.0);
    sf.b.assign(sf.m, 0.0);
    sf.c.assign(sf.n, 0.0);
    sf.row_sign.assign(sf.m, 1.0);
    for (std::size_t j = 0; j < nv; ++j) {
        sf.c[static_cast<std::size_t>(sf.plus_col[j])] = lp.objective[j];
        if (sf.minus_col[j] >= 0) sf.c[static_cast<std::size_t>(sf.minus_col[j])] = -lp.objective[j];
    }
    for (std::size_t i = 0; i < sf.m; ++i) {
        require(lp.rows[i].size() == nv, ErrorKind::Argument, "LP row has wrong length");
        const double sign = lp.rhs[i] < 0.0 ? -1.0 : 1.0;
        sf.row_sign[i] = sign;
        double* row = sf.a.data() + i * sf.n;
        for (std::size_t j = 0; j < nv; ++j) {
            row[sf.plus_col[j]] = sign * lp.rows[i][j];
            if (sf.minus_col[j] >= 0) row[sf.minus_col[j]] = -sign * lp.rows[i][j];
        }
        if (slack_col[i] >= 0) row[slack_col[i]] = sign * (lp.senses[i] == RowSense::LessEqual ? 1.0 : -1.0);
        sf.b[i] = sign * lp.rhs[i];
    }
    return sf;
}

/// Raw simplex outcome in standard-form coordinates.
struct RawResult {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> z;       ///< standard-form primal
    std::vector<double> y;       ///< standard-form row multipliers (or Farkas vector)
    std::vector<double> ray;     ///< standard-form direction
    int iterations = 0;
    bool hit_iteration_cap = false;
};

template <class Real>
class Tableau {
public:
    Tableau(const StandardForm& sf, int max_iterations)
        : m_(sf.m), n_(sf.n), width_(sf.n + sf.m + 1), max_iter_(max_iterations) {
        using T = ScalarTraits<Real>;
        t_.assign((m_ + 1) * width_, Real(0));
        basis_.resize(m_);
        for (std::size_t i = 0; i < m_; ++i) {
            for (std::size_t j = 0; j < n_; ++j) at(i, j) = T::from(sf.a[i * n_ + j]);
            at(i, n_ + i) = Real(1);
            at(i, width_ - 1) = T::from(sf.b[i]);
            basis_[i] = n_ + i;
        }
        cost_.assign(n_ + m_, Real(0));
        for (std::size_t j = 0; j < n_; ++j) cost_[j] = T::from(sf.c[j]);
    }

    RawResult solve() {
        RawResult out;
        // Phase I: minimize the sum of artificials.
        std::vector<Real> phase1(n_ + m_, Real(0));
        for (std::size_t i = 0; i < m_; ++i) phase1[n_ + i] = Real(1);
        load_objective(phase1);
        if (!iterate(n_ + m_, out)) {
            out.hit_iteration_cap = true;
            return out;
        }
        const Real infeas = -at(m_, width_ - 1);
        if (infeas > ScalarTraits<Real>::feas_tol()) {
            out.status = LpStatus::Infeasible;
            out.y.resize(m_);
            for (std::size_t i = 0; i < m_; ++i) {
                out.y[i] = ScalarTraits<Real>::to_double(Real(1) - at(m_, n_ + i));
            }
            return out;
        }
        drive_out_artificials();
        // Phase II.
        load_objective(cost_);
        if (!iterate(n_, out)) {
            out.hit_iteration_cap = true;
            return out;
        }
        if (out.status == LpStatus::Unbounded) return out;
        out.status = LpStatus::Optimal;
        out.z.assign(n_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] < n_) out.z[basis_[i]] = ScalarTraits<Real>::to_double(at(i, width_ - 1));
        }
        out.y.resize(m_);
        for (std::size_t i = 0; i < m_; ++i) out.y[i] = ScalarTraits<Real>::to_double(-at(m_, n_ + i));
        return out;
    }

private:
    Real& at(std::size_t i, std::size_t j) { return t_[i * width_ + j]; }

    void load_objective(const std::vector<Real>& c) {
        for (std::size_t j = 0; j < width_; ++j) at(m_, j) = Real(0);
        for (std::size_t j = 0; j < n_ + m_; ++j) at(m_, j) = c[j];
        for (std::size_t i = 0; i < m_; ++i) {
            const Real cb = c[basis_[i]];
            if (cb == Real(0)) continue;
            for (std::size_t j = 0; j < width_; ++j) at(m_, j) -= cb * at(i, j);
        }
    }

    void pivot(std::size_t r, std::size_t s) {
        const Real inv = Real(1) / at(r, s);
        for (std::size_t j = 0; j < width_; ++j) at(r, j) *= inv;
        at(r, s) = Real(1);
        for (std::size_t i = 0; i <= m_; ++i) {
            if (i == r) continue;
            const Real f = at(i, s);
            if (f == Real(0)) continue;
            for (std::size_t j = 0; j < width_; ++j) at(i, j) -= f * at(r, j);
            at(i, s) = Real(0);
        }
        basis_[r] = s;
    }

    /// Bland's rule over columns [0, allowed). Returns false on iteration cap.
    bool iterate(std::size_t allowed, RawResult& out) {
        const Real ctol = ScalarTraits<Real>::cost_tol();
        const Real ptol = ScalarTraits<Real>::pivot_tol();
        for (;;) {
            if (out.iterations >= max_iter_) return false;
            std::size_t enter = allowed;
            for (std::size_t j = 0; j < allowed; ++j) {
                if (at(m_, j) < -ctol) {
                    enter = j;
                    break;
                }
            }
            if (enter == allowed) return true;
            std::size_t leave = m_;
            Real best_ratio(0);
            for (std::size_t i = 0; i < m_; ++i) {
                const Real a = at(i, enter);
                if (a <= ptol) continue;
                const Real ratio = at(i, width_ - 1) / a;
                if (leave == m_ || ratio < best_ratio || (ratio == best_ratio && basis_[i] < basis_[leave])) {
                    leave = i;
                    best_ratio = ratio;
                }
            }
            if (leave == m_) {
                out.status = LpStatus::Unbounded;
                out.ray.assign(n_, 0.0);
                out.ray[enter] = 1.0;
                for (std::size_t i = 0; i < m_; ++i) {
                    if (basis_[i] < n_) out.ray[basis_[i]] = -ScalarTraits<Real>::to_double(at(i, enter));
                }
                return true;
            }
            pivot(leave, enter);
            ++out.iterations;
        }
    }

    void drive_out_artificials() {
        const Real ptol = ScalarTraits<Real>::pivot_tol();
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] < n_) continue;
            std::size_t best = n_;
            Real best_abs(0);
            for (std::size_t j = 0; j < n_; ++j) {
                const Real v = abs_value(at(i, j));
                if (v > ptol && v > best_abs) {
                    best = j;
                    best_abs = v;
                }
            }
            if (best < n_) pivot(i, best);
        }
    }

    static Real abs_value(const Real& v) { return v < Real(0) ? Real(-v) : v; }

    std::size_t m_;
    std::size_t n_;
    std::size_t width_;
    int max_iter_;
    std::vector<Real> t_;
    std::vector<Real> cost_;
    std::vector<std::size_t> basis_;
};

inline double row_activity(const LinearProgram& lp, std::size_t i, const std::vector<double>& x) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += lp.rows[i][j] * x[j];
    return s;
}

inline LpSolution assemble(const LinearProgram& lp, const StandardForm& sf, const RawResult& raw, bool exact) {
    LpSolution sol;
    sol.status = raw.status;
    sol.exact = exact;
    sol.iterations = raw.iterations;
    const std::size_t nv = lp.num_vars();
    const std::size_t m = lp.num_rows();
    auto fold = [&](const std::vector<double>& z) {
        std::vector<double> x(nv, 0.0);
        for (std::size_t j = 0; j < nv; ++j) {
            x[j] = z[static_cast<std::size_t>(sf.plus_col[j])];
            if (sf.minus_col[j] >= 0) x[j] -= z[static_cast<std::size_t>(sf.minus_col[j])];
        }
        return x;
    };
    if (raw.status == LpStatus::Infeasible) {
        sol.farkas.resize(m);
        for (std::size_t i = 0; i < m; ++i) sol.farkas[i] = sf.row_sign[i] * raw.y[i];
        return sol;
    }
    if (raw.status == LpStatus::Unbounded) {
        sol.ray = fold(raw.ray);
        sol.value = -std::numeric_limits<double>::infinity();
        return sol;
    }
    sol.x = fold(raw.z);
    sol.duals.resize(m);
    for (std::size_t i = 0; i < m; ++i) sol.duals[i] = sf.row_sign[i] * raw.y[i];
    sol.value = 0.0;
    for (std::size_t j = 0; j < nv; ++j) sol.value += lp.objective[j] * sol.x[j];
    sol.dual_value = 0.0;
    for (std::size_t i = 0; i < m; ++i) sol.dual_value += lp.rhs[i] * sol.duals[i];

    double primal_res = 0.0;
    double comp = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double slack = row_activity(lp, i, sol.x) - lp.rhs[i];
        double viol = 0.0;
        double sign_viol = 0.0;
        switch (lp.senses[i]) {
            case RowSense::LessEqual:
                viol = std::max(0.0, slack);
                sign_viol = std::max(0.0, sol.duals[i]);
                break;
            case RowSense::GreaterEqual:
                viol = std::max(0.0, -slack);
                sign_viol = std::max(0.0, -sol.duals[i]);
                break;
            case RowSense::Equal: viol = std::abs(slack); break;
        }
        primal_res = std::max(primal_res, viol);
        sol.dual_residual = std::max(sol.dual_residual, sign_viol);
        comp += std::abs(sol.duals[i] * slack);
    }
    for (std::size_t j = 0; j < nv; ++j) {
        double reduced = lp.objective[j];
        for (std::size_t i = 0; i < m; ++i) reduced -= lp.rows[i][j] * sol.duals[i];
        if (lp.bound(j) == VarBound::Free) {
            sol.dual_residual = std::max(sol.dual_residual, std::abs(reduced));
        } else {
            primal_res = std::max(primal_res, std::max(0.0, -sol.x[j]));
            sol.dual_residual = std::max(sol.dual_residual, std::max(0.0, -reduced));
            comp += std::abs(sol.x[j] * reduced);
        }
    }
    sol.primal_residual = primal_res;
    sol.complementarity_residual = comp;
    return sol;
}

inline bool acceptable(const LpSolution& s, double tol) {
    if (s.status != LpStatus::Optimal) return true;
    const double scale = 1.0 + std::abs(s.value);
    return s.primal_residual <= tol * scale && s.dual_residual <= tol * scale &&
           s.complementarity_residual <= tol * scale && std::abs(s.value - s.dual_value) <= tol * scale;
}

}  // namespace detail

/// Solve a small dense LP; double arithmetic with exact rational fallback.
inline LpSolution solve_lp(const LinearProgram& lp, const LpOptions& options = {}) {
    require(lp.bounds.empty() || lp.bounds.size() == lp.num_vars(), ErrorKind::Argument,
            "LP bounds vector has wrong length");
    require(lp.senses.size() == lp.num_rows() && lp.rhs.size() == lp.num_rows(), ErrorKind::Argument,
            "LP rows, senses and rhs disagree in length");
    require(lp.num_vars() <= options.max_vars, ErrorKind::Argument,
            "LP has " + std::to_string(lp.num_vars()) + " variables, limit is " + std::to_string(options.max_vars));
    const detail::StandardForm sf = detail::to_standard_form(lp);

    detail::Tableau<double> tableau(sf, options.max_iterations);
    const detail::RawResult raw = tableau.solve();
    if (!raw.hit_iteration_cap) {
        LpSolution sol = detail::assemble(lp, sf, raw, false);
        if (detail::acceptable(sol, options.tolerance) || !options.allow_exact_fallback) return sol;
    } else {
        require(options.allow_exact_fallback, ErrorKind::Numeric, "simplex hit the iteration cap");
    }
    detail::Tableau<detail::Rational> exact(sf, options.max_iterations);
    const detail::RawResult raw_exact = exact.solve();
    require(!raw_exact.hit_iteration_cap, ErrorKind::Numeric, "exact simplex hit the iteration cap");
    return detail::assemble(lp, sf, raw_exact, true);
}

}  // namespace davis

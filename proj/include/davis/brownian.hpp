// SPDX-License-Identifier: MIT
/// @file brownian.hpp
/// @brief Monte-Carlo pipelines on two-factor Brownian models: the stopped
///        strict-local-martingale deflator, price intervals with a singular
///        dual part, envelope slopes, the first-order hedging corrector and
///        conditional suprema under measure changes.
///
/// Stopped constructions run in log-time s = -log(1 - t) on [0, 1). Over one
/// step the pair (dB, dB') with B' = int (1-u)^{-1/2} dB is an exact joint
/// Gaussian, so the unbounded integrand never needs sampling at t = 1.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "davis/davis.hpp"
#include "davis/error.hpp"
#include "davis/numeric.hpp"
#include "davis/superrep.hpp"
#include "davis/utility.hpp"

namespace davis {

enum class LambdaSpec { Constant, DSStopped };

/// Integrand of the dual deflator against the untraded factor.
enum class NuSpec {
    Zero,        ///< no W-exposure: the deflator is the minimal one
    DsStrict,    ///< W-leg stopped at E(W') = 1/2 or E(Z') = 2: strict local martingale
    DsLiteral,   ///< W-leg stopped at E(W') = 2 or E(Z') = 1/2: bounded, true martingale
};

inline const char* to_string(LambdaSpec s) { return s == LambdaSpec::Constant ? "constant" : "ds_stopped"; }

inline const char* to_string(NuSpec s) {
    switch (s) {
        case NuSpec::Zero: return "zero";
        case NuSpec::DsStrict: return "ds_strict";
        case NuSpec::DsLiteral: return "ds_literal";
    }
    return "?";
}

struct PathModel {
    double horizon = 1.0;
    std::size_t n_steps = 1000;   ///< regular steps (uniform in t for Constant, in log-time otherwise)
    LambdaSpec lambda_spec = LambdaSpec::DSStopped;
    double lambda = 0.0;          ///< market price of risk for Constant
    double sigma = 1.0;           ///< volatility; prices and deflators do not depend on it
    std::uint64_t seed = 20240601;
    double s_max = 30.0;          ///< log-time covered by the regular grid
    double s_cap = 400.0;         ///< unresolved stopped paths are extended up to this log-time
    std::size_t batch_pairs = 2048;
    bool bridge_correction = true; ///< also stop on level crossings inside a step (Brownian-bridge test)

    void validate() const {
        require(horizon > 0.0 && std::isfinite(horizon), ErrorKind::Config, "horizon must be positive");
        require(n_steps >= 1, ErrorKind::Config, "n_steps must be positive");
        require(sigma > 0.0, ErrorKind::Config, "sigma must be positive");
        require(std::isfinite(lambda), ErrorKind::Config, "lambda must be finite");
        require(s_max > 0.0 && s_cap >= s_max, ErrorKind::Config, "need 0 < s_max <= s_cap");
        require(batch_pairs >= 1, ErrorKind::Config, "batch_pairs must be positive");
    }

    [[nodiscard]] PathModel with_seed(std::uint64_t s) const {
        PathModel m = *this;
        m.seed = s;
        return m;
    }
};

/// Seed of an independent stream derived from `seed`.
inline std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t stream) {
    return seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1));
}

inline constexpr std::array<double, 3> kCheckpoints{0.25, 0.5, 0.75};

struct TimeGrid {
    std::vector<double> t;
    std::vector<double> s;                        ///< -log(1 - t / T)
    std::array<std::size_t, 3> checkpoint_index{};
};

/// Regular grid with the checkpoints 0.25T, 0.5T, 0.75T inserted.
///
/// Constant: uniform in t on [0, T]. DSStopped: uniform in log-time on
/// [0, s_max], i.e. steps proportional to 1 - t, ending short of t = 1.
inline TimeGrid time_grid(const PathModel& m) {
    m.validate();
    TimeGrid g;
    const double T = m.horizon;
    if (m.lambda_spec == LambdaSpec::Constant) {
        for (std::size_t i = 0; i <= m.n_steps; ++i) g.t.push_back(T * static_cast<double>(i) / static_cast<double>(m.n_steps));
        for (double c : kCheckpoints) g.t.push_back(c * T);
        std::sort(g.t.begin(), g.t.end());
        g.t.erase(std::unique(g.t.begin(), g.t.end(), [](double a, double b) { return std::abs(a - b) < 1e-15; }),
                  g.t.end());
        for (double t : g.t) g.s.push_back(t >= T ? std::numeric_limits<double>::infinity() : -std::log1p(-t / T));
    } else {
        const double ds = m.s_max / static_cast<double>(m.n_steps);
        for (std::size_t i = 0; i <= m.n_steps; ++i) g.s.push_back(ds * static_cast<double>(i));
        for (double c : kCheckpoints) g.s.push_back(-std::log1p(-c));
        std::sort(g.s.begin(), g.s.end());
        g.s.erase(std::unique(g.s.begin(), g.s.end(), [](double a, double b) { return std::abs(a - b) < 1e-13; }),
                  g.s.end());
        for (double s : g.s) g.t.push_back(-std::expm1(-s));
    }
    for (std::size_t k = 0; k < kCheckpoints.size(); ++k) {
        const double target = kCheckpoints[k] * T;
        std::size_t best = 0;
        for (std::size_t i = 0; i < g.t.size(); ++i) {
            if (std::abs(g.t[i] - target) < std::abs(g.t[best] - target)) best = i;
        }
        g.checkpoint_index[k] = best;
    }
    return g;
}

// ---------------------------------------------------------------------------
// path engine

namespace detail {

/// Standard normals recorded on the first pass and replayed negated on the antithetic pass.
class AntitheticNormals {
public:
    explicit AntitheticNormals(std::mt19937_64& eng) : eng_(eng) {}

    void start(bool mirrored) {
        mirrored_ = mirrored;
        pos_ = 0;
        if (!mirrored) buf_.clear();
    }

    double operator()() {
        if (!mirrored_) {
            buf_.push_back(nd_(eng_));
            return buf_.back();
        }
        if (pos_ < buf_.size()) return -buf_[pos_++];
        ++pos_;
        return nd_(eng_);
    }

private:
    std::mt19937_64& eng_;
    std::normal_distribution<double> nd_;
    std::vector<double> buf_;
    std::size_t pos_ = 0;
    bool mirrored_ = false;
};

inline std::mt19937_64 batch_engine(std::uint64_t seed, std::uint64_t batch) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32U),
                      static_cast<std::uint32_t>(batch), static_cast<std::uint32_t>(batch >> 32U)};
    return std::mt19937_64(seq);
}

/// Runs fn(batch) for batch = 0..n-1 on up to hardware_concurrency threads.
template <class F>
void for_each_batch(std::size_t n, F&& fn) {
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(n, std::thread::hardware_concurrency()));
    if (workers <= 1) {
        for (std::size_t b = 0; b < n; ++b) fn(b);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t b = w; b < n; b += workers) fn(b);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

/// Increments of (B, B') over log-time [s0, s1]:
/// Var dB' = s1 - s0, Var dB = e^{-s0} - e^{-s1}, Cov = 2 (e^{-s0/2} - e^{-s1/2}).
struct LegIncrement {
    double dB = 0.0;
    double dBp = 0.0;
    double dt = 0.0;       ///< e^{-s0} - e^{-s1}
    double root = 0.0;     ///< int (1-u)^{-1/2} du over the step
};

inline double uniform(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline LegIncrement leg_increment(double s0, double s1, double z1, double z2) {
    LegIncrement inc;
    const double ds = s1 - s0;
    inc.dt = -std::exp(-s0) * std::expm1(-ds);
    inc.root = -2.0 * std::exp(-0.5 * s0) * std::expm1(-0.5 * ds);
    const double sd_p = std::sqrt(ds);
    const double beta = inc.root / sd_p;
    const double resid = std::max(0.0, inc.dt - beta * beta);
    inc.dBp = sd_p * z1;
    inc.dB = beta * z1 + std::sqrt(resid) * z2;
    return inc;
}

/// Two independent legs A, C with E(A') stopped on hitting `low` and E(C') on hitting `high`.
struct PairDynamics {
    double low = 0.5;
    double high = 2.0;
    double active_drift = 0.0;   ///< extra drift of A' and C' per unit log-time while active
    double shift = 0.0;          ///< constant drift -shift dt added to C on the whole remaining horizon
    bool bridge = true;
};

struct PairState {
    double s = 0.0;
    double logA = 0.0;   ///< log E(A')
    double logC = 0.0;   ///< log E(C')
    double A = 0.0;      ///< Brownian value of leg A
    double C = 0.0;
    bool active = true;
    int reason = 0;      ///< 0 none, 1 A hit low, 2 C hit high
    double expA = 1.0;   ///< E(A') at stop (current value while active)
    double expC = 1.0;
    double active_integral = 0.0;   ///< int 1{active} (1-u)^{-1/2} du
    bool unresolved = false;
};

struct PairOutcome {
    PairState state;
    double A_end = 0.0;
    double C_end = 0.0;
    double stop_t = 1.0;
    std::array<double, 3> expA_at{};
    std::array<double, 3> expC_at{};
    std::array<double, 3> A_at{};
    std::array<double, 3> C_at{};
};

/// Advance `st` through the log-time grid (extended with steps `ds_ext` up to
/// `s_cap` while active) and fill terminal and checkpoint values.
/// The first 8 normals are reserved for post-stop increments to checkpoints and t = 1.
inline PairOutcome run_pair(PairState st, std::span<const double> grid, double ds_ext, double s_cap,
                            const PairDynamics& dyn, AntitheticNormals& z, bool record_checkpoints = true) {
    std::array<double, 8> post{};
    for (double& v : post) v = z();
    PairOutcome out;
    std::array<double, 3> cp_s{};
    for (std::size_t k = 0; k < 3; ++k) cp_s[k] = -std::log1p(-kCheckpoints[k]);
    std::array<bool, 3> cp_done{};
    for (std::size_t k = 0; k < 3; ++k) {
        if (cp_s[k] <= st.s + 1e-13) cp_done[k] = true;
    }
    auto record = [&](double s_now) {
        if (!record_checkpoints) return;
        for (std::size_t k = 0; k < 3; ++k) {
            if (!cp_done[k] && std::abs(s_now - cp_s[k]) < 1e-12) {
                out.expA_at[k] = st.expA;
                out.expC_at[k] = st.expC;
                out.A_at[k] = st.A;
                out.C_at[k] = st.C;
                cp_done[k] = true;
            }
        }
    };
    auto step = [&](double s1) {
        const double s0 = st.s;
        const LegIncrement a = leg_increment(s0, s1, z(), z());
        const LegIncrement c = leg_increment(s0, s1, z(), z());
        const double ds = s1 - s0;
        const double drift = st.active ? dyn.active_drift : 0.0;
        const double nA = st.logA + a.dBp + drift * ds - 0.5 * ds;
        const double nC = st.logC + c.dBp + drift * ds - dyn.shift * c.root - 0.5 * ds;
        const double dA = a.dB + drift * a.root;
        const double dC = c.dB + drift * c.root - dyn.shift * c.dt;
        require(std::isfinite(nA) && std::isfinite(nC) && std::isfinite(dA) && std::isfinite(dC), ErrorKind::Numeric,
                "non-finite path value at log-time " + std::to_string(s1) + " with step " + std::to_string(ds));
        const double eA0 = std::exp(st.logA);
        const double eC0 = std::exp(st.logC);
        const double eA1 = std::exp(nA);
        const double eC1 = std::exp(nC);
        // Crossings inside the step are detected on the Brownian bridge of the log-exponential.
        const double uA = uniform(z());
        const double uC = uniform(z());
        double theta = 2.0;
        int reason = 0;
        const double gapA0 = st.logA - std::log(dyn.low);
        const double gapA1 = nA - std::log(dyn.low);
        if (eA0 > dyn.low && (eA1 <= dyn.low || (dyn.bridge && uA < std::exp(-2.0 * gapA0 * gapA1 / ds)))) {
            theta = eA1 <= dyn.low ? (eA0 - dyn.low) / (eA0 - eA1) : 0.5;
            reason = 1;
        }
        const double gapC0 = std::log(dyn.high) - st.logC;
        const double gapC1 = std::log(dyn.high) - nC;
        if (eC0 < dyn.high && (eC1 >= dyn.high || (dyn.bridge && uC < std::exp(-2.0 * gapC0 * gapC1 / ds)))) {
            const double tc = eC1 >= dyn.high ? (dyn.high - eC0) / (eC1 - eC0) : 0.5;
            if (tc < theta) {
                theta = tc;
                reason = 2;
            }
        }
        if (reason != 0) {
            st.active = false;
            st.reason = reason;
            st.expA = reason == 1 ? dyn.low : eA0 + theta * (eA1 - eA0);
            st.expC = reason == 2 ? dyn.high : eC0 + theta * (eC1 - eC0);
            st.logA = std::log(st.expA);
            st.logC = std::log(st.expC);
            st.A += theta * dA;
            st.C += theta * dC;
            st.active_integral += theta * a.root;
            st.s = s0 + theta * ds;
            return;
        }
        st.logA = nA;
        st.logC = nC;
        st.expA = eA1;
        st.expC = eC1;
        st.A += dA;
        st.C += dC;
        st.active_integral += a.root;
        st.s = s1;
        record(s1);
    };
    if (st.active) {
        st.expA = std::exp(st.logA);
        st.expC = std::exp(st.logC);
    }
    record(st.s);
    for (double s1 : grid) {
        if (!st.active) break;
        if (s1 <= st.s) continue;
        step(s1);
    }
    while (st.active && st.s < s_cap) step(std::min(st.s + ds_ext, s_cap));
    if (st.active) st.unresolved = true;
    // Post-stop: independent Brownian increments to the remaining checkpoints and t = 1.
    double t_prev = -std::expm1(-st.s);
    out.stop_t = t_prev;
    double A = st.A;
    double C = st.C;
    for (std::size_t k = 0; k < 3; ++k) {
        if (cp_done[k] || !record_checkpoints) continue;
        const double dt = kCheckpoints[k] - t_prev;
        A += std::sqrt(dt) * post[2 * k];
        C += std::sqrt(dt) * post[2 * k + 1] - dyn.shift * dt;
        t_prev = kCheckpoints[k];
        out.expA_at[k] = st.expA;
        out.expC_at[k] = st.expC;
        out.A_at[k] = A;
        out.C_at[k] = C;
    }
    const double rem = std::exp(-std::max(st.s, -std::log1p(-t_prev)));
    out.A_end = A + std::sqrt(rem) * post[6];
    out.C_end = C + std::sqrt(rem) * post[7] - dyn.shift * rem;
    out.state = st;
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// simulated paths

struct PathRecord {
    double Y_T = 1.0;                  ///< deflator at T relative to its initial value
    double W_T = 0.0;                  ///< untraded factor at T
    double Z_T = 0.0;                  ///< traded factor at T
    std::array<double, 3> Y_mid{};     ///< deflator at 0.25T, 0.5T, 0.75T
    int reason = 0;                    ///< 1: deflator leg hit 1/2 first, 2: other leg hit 2 first
    bool unresolved = false;
    double stop_t = 1.0;
};

struct PathSample {
    double Y0 = 1.0;
    std::vector<PathRecord> paths;     ///< antithetic pairs stored at (2i, 2i+1)
    std::optional<NuSpec> nu;
    LambdaSpec lambda_spec = LambdaSpec::Constant;

    [[nodiscard]] std::size_t pairs() const { return paths.size() / 2; }
};

namespace detail {

inline PathRecord constant_path(const PathModel& m, const TimeGrid& g, AntitheticNormals& z) {
    PathRecord r;
    double Zt = 0.0;
    double expo = 0.0;
    const double lam = m.lambda;
    std::size_t next_cp = 0;
    for (std::size_t i = 1; i < g.t.size(); ++i) {
        const double dt = g.t[i] - g.t[i - 1];
        const double dz = std::sqrt(dt) * z();
        Zt += dz;
        expo += -lam * dz - 0.5 * lam * lam * dt;
        while (next_cp < 3 && g.checkpoint_index[next_cp] == i) r.Y_mid[next_cp++] = std::exp(expo);
    }
    require(std::isfinite(expo), ErrorKind::Numeric, "non-finite deflator exponent");
    r.Y_T = std::exp(expo);
    r.Z_T = Zt;
    r.W_T = std::sqrt(m.horizon) * z();
    return r;
}

inline PathRecord stopped_path(const PathModel& m, const TimeGrid& g, std::optional<NuSpec> nu,
                               AntitheticNormals& z) {
    const double ds_ext = m.s_max / static_cast<double>(m.n_steps);
    PairDynamics dyn;
    dyn.bridge = m.bridge_correction;
    const PairOutcome o = run_pair(PairState{}, std::span(g.s).subspan(1), ds_ext, m.s_cap, dyn, z);
    PathRecord r;
    r.reason = o.state.reason;
    r.unresolved = o.state.unresolved;
    r.stop_t = o.stop_t;
    const double lam = m.lambda;
    auto market_factor = [lam](double Zt, double t) { return std::exp(-lam * Zt - 0.5 * lam * lam * t); };
    if (m.lambda_spec == LambdaSpec::DSStopped) {
        // A = traded driver, C = untraded factor.
        r.Y_T = o.state.expA;
        r.Y_mid = o.expA_at;
        r.Z_T = o.A_end;
        r.W_T = o.C_end;
    } else if (*nu == NuSpec::DsStrict) {
        // A = untraded factor (its exponential is the deflator leg), C = traded factor.
        r.Y_T = market_factor(o.C_end, 1.0) * o.state.expA;
        for (std::size_t k = 0; k < 3; ++k) r.Y_mid[k] = market_factor(o.C_at[k], kCheckpoints[k]) * o.expA_at[k];
        r.W_T = o.A_end;
        r.Z_T = o.C_end;
    } else {
        // DsLiteral: A = traded factor, C = untraded factor (its exponential is the deflator leg).
        r.Y_T = market_factor(o.A_end, 1.0) * o.state.expC;
        for (std::size_t k = 0; k < 3; ++k) r.Y_mid[k] = market_factor(o.A_at[k], kCheckpoints[k]) * o.expC_at[k];
        r.W_T = o.C_end;
        r.Z_T = o.A_end;
        r.reason = o.state.reason == 0 ? 0 : 3 - o.state.reason;
    }
    return r;
}

}  // namespace detail

/// Simulates n_paths (rounded up to antithetic pairs) of the deflator and both factors.
///
/// Deflators: Constant with nu in {none, Zero}: exp(-lambda Z_T - lambda^2 T / 2).
/// DSStopped: E(beta') stopped at the first of E(beta') = 1/2 and E(W') = 2 (T = 1).
/// Constant with DsStrict / DsLiteral: market factor times the stopped W-leg exponential (T = 1).
inline PathSample simulate_paths(const PathModel& m, std::size_t n_paths, std::optional<NuSpec> nu = std::nullopt) {
    m.validate();
    require(n_paths >= 2, ErrorKind::Argument, "need at least one antithetic pair");
    const bool stopped = m.lambda_spec == LambdaSpec::DSStopped || (nu && *nu != NuSpec::Zero);
    if (m.lambda_spec == LambdaSpec::DSStopped) {
        require(!nu || *nu == NuSpec::Zero, ErrorKind::Unsupported,
                "a W-integrand on top of the stopped traded drift is not supported");
    }
    if (stopped) require(m.horizon == 1.0, ErrorKind::Config, "stopped constructions need horizon 1");
    PathModel grid_model = m;
    if (stopped && m.lambda_spec == LambdaSpec::Constant) grid_model.lambda_spec = LambdaSpec::DSStopped;
    const TimeGrid g = time_grid(grid_model);

    const std::size_t pairs = (n_paths + 1) / 2;
    const std::size_t n_batches = (pairs + m.batch_pairs - 1) / m.batch_pairs;
    PathSample out;
    out.nu = nu;
    out.lambda_spec = m.lambda_spec;
    out.paths.resize(2 * pairs);
    detail::for_each_batch(n_batches, [&](std::size_t b) {
        std::mt19937_64 eng = detail::batch_engine(m.seed, b);
        detail::AntitheticNormals z(eng);
        const std::size_t first = b * m.batch_pairs;
        const std::size_t last = std::min(pairs, first + m.batch_pairs);
        for (std::size_t p = first; p < last; ++p) {
            for (int side = 0; side < 2; ++side) {
                z.start(side == 1);
                out.paths[2 * p + static_cast<std::size_t>(side)] =
                    stopped ? detail::stopped_path(m, g, nu, z) : detail::constant_path(m, g, z);
            }
        }
    });
    return out;
}

struct MeanCI {
    double mean = 0.0;
    double half = 0.0;   ///< 95% half-width
};

/// Mean and 95% CI of f over antithetic pair averages.
template <class F>
MeanCI pair_mean_ci(const PathSample& s, F&& f) {
    const std::size_t n = s.pairs();
    require(n >= 1, ErrorKind::Argument, "empty sample");
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = 0.5 * (f(s.paths[2 * i]) + f(s.paths[2 * i + 1]));
        const double d = v - mean;
        mean += d / static_cast<double>(i + 1);
        m2 += d * (v - mean);
    }
    MeanCI out;
    out.mean = mean;
    out.half = n > 1 ? 1.959963984540054 * std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
    return out;
}

struct DeflatorStats {
    double Y0 = 1.0;
    double E_YT = 0.0;
    double ci_halfwidth = 0.0;
    std::size_t n_paths = 0;
    std::array<MeanCI, 3> checkpoints{};   ///< E[Y_t] at 0.25T, 0.5T, 0.75T
    double min_YT = 0.0;
    double freq_first_low = 0.0;           ///< deflator leg stopped at 1/2 first
    double freq_first_high = 0.0;          ///< other leg reached 2 first
    std::size_t n_unresolved = 0;

    [[nodiscard]] double ratio() const { return E_YT / Y0; }
    [[nodiscard]] double ratio_upper() const { return (E_YT + ci_halfwidth) / Y0; }
    [[nodiscard]] double ratio_lower() const { return (E_YT - ci_halfwidth) / Y0; }
};

inline DeflatorStats deflator_stats(const PathSample& s) {
    DeflatorStats d;
    d.Y0 = s.Y0;
    d.n_paths = s.paths.size();
    const MeanCI e = pair_mean_ci(s, [](const PathRecord& r) { return r.Y_T; });
    d.E_YT = e.mean * s.Y0;
    d.ci_halfwidth = e.half * s.Y0;
    for (std::size_t k = 0; k < 3; ++k) {
        d.checkpoints[k] = pair_mean_ci(s, [k](const PathRecord& r) { return r.Y_mid[k]; });
    }
    d.min_YT = std::numeric_limits<double>::infinity();
    for (const PathRecord& r : s.paths) {
        d.min_YT = std::min(d.min_YT, r.Y_T);
        if (r.reason == 1) d.freq_first_low += 1.0;
        if (r.reason == 2) d.freq_first_high += 1.0;
        if (r.unresolved) ++d.n_unresolved;
    }
    d.freq_first_low /= static_cast<double>(d.n_paths);
    d.freq_first_high /= static_cast<double>(d.n_paths);
    return d;
}

/// Log-exponential simulation of the deflator; see simulate_paths for the specifications.
inline DeflatorStats simulate_stochastic_exponential(const PathModel& m, std::size_t n_paths,
                                                     std::optional<NuSpec> nu = std::nullopt) {
    require(n_paths >= 10000, ErrorKind::Config, "deflator statistics need at least 10^4 paths");
    return deflator_stats(simulate_paths(m, n_paths, nu));
}

// ---------------------------------------------------------------------------
// stopped drift

/// lambda_t = -1{t <= stop} / sqrt(1 - t) for one path.
struct StoppedDrift {
    double stop_time = 1.0;
    bool hit_low = false;    ///< E(beta') reached 1/2
    bool hit_high = false;   ///< E(W') reached 2

    [[nodiscard]] bool active(double t) const { return t <= stop_time && t < 1.0; }
    [[nodiscard]] double operator()(double t) const { return active(t) ? -1.0 / std::sqrt(1.0 - t) : 0.0; }
    /// |lambda| <= f(t) = (1 - t)^{-1/2}
    [[nodiscard]] static double bound(double t) { return 1.0 / std::sqrt(1.0 - t); }
};

/// Drift from given first hitting times of E(beta') = 1/2 and E(W') = 2.
inline StoppedDrift stopped_drift_from_hits(std::optional<double> tau, std::optional<double> sigma) {
    StoppedDrift d;
    d.stop_time = std::min(tau.value_or(1.0), sigma.value_or(1.0));
    d.hit_low = tau && (!sigma || *tau <= *sigma);
    d.hit_high = sigma && !d.hit_low;
    return d;
}

/// Simulated drift of path `index` of the DSStopped model.
inline StoppedDrift ds_stopped_drift(const PathModel& m, std::size_t index = 0) {
    require(m.lambda_spec == LambdaSpec::DSStopped, ErrorKind::Config, "model is not DSStopped");
    PathModel one = m;
    one.seed = derived_seed(m.seed, 1000 + index);
    const PathSample s = simulate_paths(one, 2);
    const PathRecord& r = s.paths[0];
    StoppedDrift d;
    d.stop_time = r.stop_t;
    d.hit_low = r.reason == 1;
    d.hit_high = r.reason == 2;
    return d;
}

// ---------------------------------------------------------------------------
// Example 1: constant endowment

struct Example1Result {
    DavisInterval interval;
    double phi_low = 0.0;
    double phi_high = 0.0;
    MeanCI p_low;
    MeanCI p_high;
    MeanCI width_direct;              ///< p_high - p_low on the primary sample
    DeflatorStats independent;        ///< deflator statistics on an independent stream
    double width_closed = 0.0;        ///< (phi_high - phi_low)(1 - E[Y_T]/Y0) from the independent stream
    double width_closed_ci = 0.0;
    double combined_ci = 0.0;
    bool consistent = false;
    bool degenerate = false;
};

/// [p_low, p_high] for phi(W_T) with constant endowment and the log investor's deflator.
inline Example1Result example1_interval(const PathModel& m, const std::function<double(double)>& phi,
                                        std::size_t n_paths, double lo = -50.0, double hi = 50.0) {
    Example1Result out;
    const GlobalMinimum inf = global_minimize(phi, lo, hi);
    const GlobalMinimum sup = global_minimize([&](double a) { return -phi(a); }, lo, hi);
    out.phi_low = inf.value;
    out.phi_high = -sup.value;
    out.degenerate = out.phi_high - out.phi_low < 1e-12;
    const PathSample s = simulate_paths(m, n_paths);
    const double pl = out.phi_low;
    const double ph = out.phi_high;
    const MeanCI a = pair_mean_ci(s, [&](const PathRecord& r) { return r.Y_T * (phi(r.W_T) - pl); });
    const MeanCI b = pair_mean_ci(s, [&](const PathRecord& r) { return r.Y_T * (ph - phi(r.W_T)); });
    out.p_low = {a.mean / s.Y0 + pl, a.half / s.Y0};
    out.p_high = {ph - b.mean / s.Y0, b.half / s.Y0};
    out.width_direct = pair_mean_ci(s, [&](const PathRecord& r) {
        return (ph - r.Y_T * (ph - phi(r.W_T)) / s.Y0) - (r.Y_T * (phi(r.W_T) - pl) / s.Y0 + pl);
    });
    out.independent = deflator_stats(simulate_paths(m.with_seed(derived_seed(m.seed, 1)), n_paths));
    out.width_closed = (ph - pl) * (1.0 - out.independent.ratio());
    out.width_closed_ci = (ph - pl) * out.independent.ci_halfwidth / out.independent.Y0;
    out.combined_ci = std::hypot(out.width_direct.half, out.width_closed_ci);
    out.consistent = std::abs(out.width_direct.mean - out.width_closed) <= out.combined_ci;

    out.interval.method = DavisMethod::DerbFormula;
    out.interval.y_B = s.Y0;
    out.interval.p_low = out.p_low.mean;
    out.interval.p_high = out.p_high.mean;
    out.interval.diagnostics["phi_low"] = pl;
    out.interval.diagnostics["phi_high"] = ph;
    out.interval.diagnostics["p_low_ci"] = out.p_low.half;
    out.interval.diagnostics["p_high_ci"] = out.p_high.half;
    out.interval.diagnostics["width_closed"] = out.width_closed;
    out.interval.diagnostics["combined_ci"] = out.combined_ci;
    if (out.degenerate) out.interval.flags.push_back("constant_claim");
    return out;
}

// ---------------------------------------------------------------------------
// envelopes

struct EnvelopeFunctions {
    std::string name;
    std::function<double(double)> B_fn;
    std::function<double(double)> phi_fn;
    double lo = -50.0;
    double hi = 50.0;
    std::size_t grid = 4001;
};

/// B = 2 + exp(-a^2), phi = tanh: the infimum of B + eps phi escapes to -/+ infinity.
inline EnvelopeFunctions kinked_envelope() {
    return {"kinked", [](double a) { return 2.0 + std::exp(-a * a); }, [](double a) { return std::tanh(a); }};
}

/// B = 2 + a^2 / (1 + a^2), phi = tanh: unique interior minimizer at eps = 0.
inline EnvelopeFunctions smooth_envelope() {
    return {"smooth", [](double a) { return 2.0 + a * a / (1.0 + a * a); }, [](double a) { return std::tanh(a); }};
}

inline double sup_abs_on_grid(const std::function<double(double)>& f, double lo, double hi, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        s = std::max(s, std::abs(f(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1))));
    }
    return s;
}

inline void validate_envelope(const EnvelopeFunctions& env) {
    require(env.B_fn && env.phi_fn, ErrorKind::Config, "envelope functions are missing");
    require(env.hi > env.lo, ErrorKind::Config, "empty envelope domain");
    const GlobalMinimum b = global_minimize(env.B_fn, env.lo, env.hi, env.grid);
    require(b.value > 0.0, ErrorKind::Model, "endowment infimum must be positive");
    require(std::isfinite(sup_abs_on_grid(env.phi_fn, env.lo, env.hi, env.grid)), ErrorKind::Model,
            "claim must be bounded");
}

struct EnvelopeValue {
    double value = 0.0;
    double argmin = 0.0;
    bool enlarged = false;
};

/// inf_a (B(a) + eps phi(a)); a boundary minimizer triggers one enlargement of the domain,
/// and an error if the value still improves at the new boundary.
inline EnvelopeValue envelope_value(const EnvelopeFunctions& env, double eps) {
    const GlobalMinimum g = lower_envelope_fn(env.B_fn, env.phi_fn, eps, env.lo, env.hi, env.grid);
    EnvelopeValue out{g.value, g.argmin, false};
    if (!g.at_boundary) return out;
    const double mid = 0.5 * (env.lo + env.hi);
    const double half = env.hi - env.lo;
    const GlobalMinimum big = lower_envelope_fn(env.B_fn, env.phi_fn, eps, mid - half, mid + half, 2 * env.grid);
    out.enlarged = true;
    const bool improved = big.value < g.value - 1e-12 * (1.0 + std::abs(g.value));
    require(!(improved && big.at_boundary), ErrorKind::Numeric,
            "envelope minimizer escapes the search domain at eps = " + std::to_string(eps));
    if (big.value < out.value) {
        out.value = big.value;
        out.argmin = big.argmin;
    }
    return out;
}

struct EnvelopeDerivatives {
    double plus = 0.0;          ///< L'(0+)
    double minus = 0.0;         ///< L'(0-)
    double value = 0.0;         ///< L(0)
    double plus_error = 0.0;
    double minus_error = 0.0;
    double sup_abs_phi = 0.0;
    bool bound_ok = true;       ///< |L'(0+/-)| <= sup |phi|
    double concavity_residual = 0.0;
    bool concave = true;
    bool enlarged = false;
    bool fallback = false;      ///< a one-sided extrapolation was rejected
};

/// One-sided slopes of eps -> inf_a (B(a) + eps phi(a)) at 0 and a concavity check.
inline EnvelopeDerivatives envelope_derivatives(const EnvelopeFunctions& env,
                                                std::span<const double> steps = {}) {
    validate_envelope(env);
    const std::vector<double> st = steps.empty() ? default_steps() : std::vector<double>(steps.begin(), steps.end());
    EnvelopeDerivatives d;
    bool enlarged = false;
    auto L = [&](double eps) {
        const EnvelopeValue v = envelope_value(env, eps);
        enlarged = enlarged || v.enlarged;
        return v.value;
    };
    const EnvelopeSlopes s = envelope_slopes(L, st);
    d.plus = s.plus;
    d.minus = s.minus;
    d.value = s.value;
    d.plus_error = s.plus_error;
    d.minus_error = s.minus_error;
    d.fallback = s.plus_fallback || s.minus_fallback;
    d.sup_abs_phi = sup_abs_on_grid(env.phi_fn, env.lo, env.hi, env.grid);
    const double slack = 1e-9 + 1e-6 * d.sup_abs_phi;
    d.bound_ok = std::abs(d.plus) <= d.sup_abs_phi + slack && std::abs(d.minus) <= d.sup_abs_phi + slack;
    const double h = st.front();
    std::vector<double> grid_vals;
    for (int k = -4; k <= 4; ++k) grid_vals.push_back(L(0.5 * h * k));
    for (std::size_t i = 1; i + 1 < grid_vals.size(); ++i) {
        d.concavity_residual =
            std::max(d.concavity_residual, grid_vals[i - 1] - 2.0 * grid_vals[i] + grid_vals[i + 1]);
    }
    d.concave = d.concavity_residual <= 1e-10;
    d.enlarged = enlarged;
    return d;
}

// ---------------------------------------------------------------------------
// Example 2: random endowment B(W_T)

struct Example2Result {
    DavisInterval interval;
    EnvelopeDerivatives envelope;
    DeflatorStats stats;
    MeanCI E_Yphi;
    double p_low_ci = 0.0;
    double p_high_ci = 0.0;
    NuSpec nu = NuSpec::DsStrict;
};

/// Endpoint formula with the singular mass Y0 - E[Y_T] weighting the envelope slopes.
inline Example2Result example2_interval(const PathModel& m, const EnvelopeFunctions& env, std::optional<NuSpec> nu,
                                        std::size_t n_paths) {
    require(nu.has_value(), ErrorKind::Config, "example 2 needs the W-integrand of the dual deflator (nu)");
    require(m.lambda_spec == LambdaSpec::Constant, ErrorKind::Config, "example 2 uses a constant market price of risk");
    Example2Result out;
    out.nu = *nu;
    out.envelope = envelope_derivatives(env);
    const PathSample s = simulate_paths(m, n_paths, nu);
    out.stats = deflator_stats(s);
    out.E_Yphi = pair_mean_ci(s, [&](const PathRecord& r) { return r.Y_T * env.phi_fn(r.W_T); });
    const double mass = s.Y0 - out.stats.E_YT;
    out.interval = interval_derb(DerbInputs{s.Y0, out.E_Yphi.mean, mass, out.envelope.plus, out.envelope.minus, true});
    const MeanCI lo = pair_mean_ci(
        s, [&](const PathRecord& r) { return r.Y_T * (env.phi_fn(r.W_T) - out.envelope.plus); });
    const MeanCI hi = pair_mean_ci(
        s, [&](const PathRecord& r) { return r.Y_T * (out.envelope.minus - env.phi_fn(r.W_T)); });
    out.p_low_ci = lo.half / s.Y0;
    out.p_high_ci = hi.half / s.Y0;
    out.interval.diagnostics["p_low_ci"] = out.p_low_ci;
    out.interval.diagnostics["p_high_ci"] = out.p_high_ci;
    out.interval.diagnostics["E_YT"] = out.stats.E_YT;
    out.interval.diagnostics["E_YT_ci"] = out.stats.ci_halfwidth;
    out.interval.flags.push_back(std::string("nu=") + to_string(*nu));
    return out;
}

// ---------------------------------------------------------------------------
// first-order corrector

struct CorrectorRow {
    double eps = 0.0;
    double value = 0.0;            ///< estimate of U(B + eps phi)
    double corrector_value = 0.0;  ///< E[U(scaled base gains + B + eps phi)]
    double residual = 0.0;
    double residual_ci = 0.0;
    double ratio = 0.0;            ///< residual / eps
    double kappa = 0.0;
    double theta = 0.0;
};

struct CorrectorReport {
    double kappa_hat = 0.0;
    double theta_hat = 0.0;
    double base_value = 0.0;
    double slope_plus = 0.0;
    double envelope_at_zero = 0.0;
    std::vector<CorrectorRow> rows;
    bool decreasing = false;
    bool halved = false;
    std::vector<std::string> violations;
};

namespace detail {

/// Gains kappa (R_theta - 1) with R_theta = exp(theta lambda T + theta Z_T - theta^2 T / 2),
/// the terminal value of a constant-proportion strategy per unit of capital.
struct PolicyProblem {
    const Utility* u = nullptr;
    std::vector<double> z;      ///< Z_T per path
    std::vector<double> base;   ///< B(W_T) + eps phi(W_T) per path
    double lambda = 0.0;
    double T = 1.0;

    void gross_return(double theta, std::vector<double>& r) const {
        r.resize(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) r[i] = std::exp(theta * lambda * T + theta * z[i] - 0.5 * theta * theta * T);
    }

    [[nodiscard]] double value(double kappa, const std::vector<double>& r) const {
        double s = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i) s += (*u)(kappa * (r[i] - 1.0) + base[i]);
        return s / static_cast<double>(r.size());
    }

    [[nodiscard]] double slope(double kappa, const std::vector<double>& r) const {
        double s = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i) s += u->marginal(kappa * (r[i] - 1.0) + base[i]) * (r[i] - 1.0);
        return s / static_cast<double>(r.size());
    }

    /// argmax over kappa in [0, kmax] (concave objective).
    [[nodiscard]] double best_kappa(const std::vector<double>& r, double kmax) const {
        const double g0 = slope(0.0, r);
        if (g0 <= 0.0) return 0.0;
        const double top = kmax * (1.0 - 1e-12);
        const double g1 = slope(top, r);
        if (g1 >= 0.0) return top;
        auto g = [&](double k) { return slope(k, r); };
        return find_root(g, 0.0, top, g0, g1);
    }

    /// (value, kappa, theta) maximizing over theta in [lo, hi] and kappa in [0, kmax].
    [[nodiscard]] std::array<double, 3> optimize(double kmax, double lo, double hi) const {
        std::vector<double> r;
        auto neg = [&](double theta) {
            gross_return(theta, r);
            return -value(best_kappa(r, kmax), r);
        };
        const GlobalMinimum g = global_minimize(neg, lo, hi, 25);
        gross_return(g.argmin, r);
        const double k = best_kappa(r, kmax);
        return {value(k, r), k, g.argmin};
    }
};

}  // namespace detail

/// Residual of the scaled base strategy against the re-optimized value, per eps, under common random numbers.
inline CorrectorReport corrector_check(const PathModel& m, const EnvelopeFunctions& env,
                                       std::span<const double> eps_list, std::size_t n_paths,
                                       const Utility& u = Utility::log(), double theta_lo = -3.0,
                                       double theta_hi = 3.0) {
    require(m.lambda_spec == LambdaSpec::Constant, ErrorKind::Config, "corrector check uses a constant market price of risk");
    require(!eps_list.empty(), ErrorKind::Config, "eps_list is empty");
    for (double e : eps_list) require(e > 0.0, ErrorKind::Config, "corrector eps must be positive");
    CorrectorReport rep;
    const EnvelopeDerivatives ed = envelope_derivatives(env);
    rep.slope_plus = ed.plus;
    rep.envelope_at_zero = ed.value;
    const PathSample s = simulate_paths(m, n_paths);
    detail::PolicyProblem prob;
    prob.u = &u;
    prob.lambda = m.lambda;
    prob.T = m.horizon;
    for (const PathRecord& r : s.paths) prob.z.push_back(r.Z_T);
    auto set_base = [&](double eps) {
        prob.base.resize(s.paths.size());
        for (std::size_t i = 0; i < s.paths.size(); ++i) {
            const double w = s.paths[i].W_T;
            prob.base[i] = env.B_fn(w) + eps * env.phi_fn(w);
        }
    };
    set_base(0.0);
    const auto base = prob.optimize(ed.value, theta_lo, theta_hi);
    rep.base_value = base[0];
    rep.kappa_hat = base[1];
    rep.theta_hat = base[2];
    std::vector<double> r_hat;
    prob.gross_return(rep.theta_hat, r_hat);
    for (double eps : eps_list) {
        set_base(eps);
        CorrectorRow row;
        row.eps = eps;
        const double kmax = envelope_value(env, eps).value;
        require(kmax > 0.0, ErrorKind::Model, "eps too large: envelope is not positive");
        const auto best = prob.optimize(kmax, theta_lo, theta_hi);
        row.value = best[0];
        row.kappa = best[1];
        row.theta = best[2];
        const double scale = 1.0 + eps * rep.slope_plus / rep.envelope_at_zero;
        const double kc = scale * rep.kappa_hat;
        row.corrector_value = prob.value(kc, r_hat);
        row.residual = row.value - row.corrector_value;
        row.ratio = row.residual / eps;
        std::vector<double> r_best;
        prob.gross_return(row.theta, r_best);
        const std::size_t pairs = s.pairs();
        double mean = 0.0;
        double m2 = 0.0;
        for (std::size_t p = 0; p < pairs; ++p) {
            double v = 0.0;
            for (std::size_t j = 2 * p; j < 2 * p + 2; ++j) {
                v += 0.5 * (u(row.kappa * (r_best[j] - 1.0) + prob.base[j]) - u(kc * (r_hat[j] - 1.0) + prob.base[j]));
            }
            const double d = v - mean;
            mean += d / static_cast<double>(p + 1);
            m2 += d * (v - mean);
        }
        row.residual_ci = pairs > 1 ? 1.96 * std::sqrt(m2 / static_cast<double>(pairs - 1) / static_cast<double>(pairs)) : 0.0;
        if (row.residual < -row.residual_ci) {
            rep.violations.push_back("eps " + std::to_string(eps) + ": corrector beats the optimized value by " +
                                     std::to_string(-row.residual) + " (CI " + std::to_string(row.residual_ci) + ")");
        }
        rep.rows.push_back(row);
    }
    rep.decreasing = true;
    for (std::size_t i = 1; i < rep.rows.size(); ++i) {
        if (!(rep.rows[i].ratio < rep.rows[i - 1].ratio)) rep.decreasing = false;
    }
    rep.halved = rep.rows.back().ratio < 0.5 * rep.rows.front().ratio;
    return rep;
}

// ---------------------------------------------------------------------------
// conditional suprema under measure changes

struct LemmaRow {
    double t0 = 0.0;
    double gap = 0.0;          ///< sup phi - mean over outer states of max_a E^{Q(a)}[phi(W_T) | F_t0]
    double gap_ci = 0.0;
    double bound = 0.0;        ///< Lipschitz constant times mean C(t0)
    double mean_best_a = 0.0;
};

struct LemmaReport {
    std::vector<LemmaRow> rows;
    bool decreasing = false;
    bool within_bound = false;
};

/// Conditional expectations of phi(W_T) under the measure changes Q(a) that steer W_T towards a,
/// starting from DSStopped states at t0.
inline LemmaReport lemma_conclusion_check(const PathModel& m, const std::function<double(double)>& phi, double sup_phi,
                                          double lipschitz, std::span<const double> t0_list, std::size_t n_outer,
                                          std::size_t n_inner, std::span<const double> a_grid) {
    require(m.lambda_spec == LambdaSpec::DSStopped, ErrorKind::Config, "lemma check runs on the DSStopped model");
    require(!a_grid.empty() && n_outer >= 2 && n_inner >= 2, ErrorKind::Config, "lemma check needs samples");
    const double ds = m.s_max / static_cast<double>(m.n_steps);
    LemmaReport rep;
    for (std::size_t ti = 0; ti < t0_list.size(); ++ti) {
        const double t0 = t0_list[ti];
        require(t0 > 0.0 && t0 < 1.0, ErrorKind::Config, "t0 must lie in (0, 1)");
        const double s0 = -std::log1p(-t0);
        const double rem = 1.0 - t0;
        std::vector<double> outer_s;
        for (double s = ds; s < s0; s += ds) outer_s.push_back(s);
        outer_s.push_back(s0);
        std::vector<double> inner_s;
        for (double s = s0 + ds; s < m.s_max; s += ds) inner_s.push_back(s);
        std::vector<double> best(n_outer), best_a(n_outer), cvals(n_outer);
        detail::for_each_batch(n_outer, [&](std::size_t o) {
            std::mt19937_64 eng = detail::batch_engine(derived_seed(m.seed, 7 + ti), o);
            detail::AntitheticNormals z(eng);
            z.start(false);
            // P-dynamics up to t0; A = traded driver, C = untraded factor.
            detail::PairDynamics pdyn;
            pdyn.bridge = m.bridge_correction;
            const detail::PairOutcome pre = detail::run_pair(detail::PairState{}, outer_s, ds, s0, pdyn, z, false);
            detail::PairState st = pre.state;
            st.unresolved = false;
            if (st.active) st.s = s0;
            const double w0 = st.C;
            const bool far = std::abs(w0) > 1.0 / rem;
            cvals[o] = std::sqrt(2.0 * rem / std::numbers::pi) + 2.0 * std::sqrt(rem) + (far ? std::abs(w0) : 0.0);
            const std::uint64_t inner_seed = derived_seed(m.seed, 100000 + 1000 * ti + o);
            double best_v = -std::numeric_limits<double>::infinity();
            for (double a : a_grid) {
                detail::PairDynamics q;
                q.active_drift = 1.0;
                q.bridge = m.bridge_correction;
                q.shift = ((far ? 0.0 : w0) - a) / rem;
                std::mt19937_64 ie = detail::batch_engine(inner_seed, 0);
                detail::AntitheticNormals iz(ie);
                double acc = 0.0;
                for (std::size_t i = 0; i < n_inner; ++i) {
                    iz.start(i % 2 == 1);
                    detail::PairState start = st;
                    if (!start.active) start.s = s0;
                    const detail::PairOutcome r = detail::run_pair(start, inner_s, ds, m.s_cap, q, iz, false);
                    acc += phi(r.C_end);
                }
                const double v = acc / static_cast<double>(n_inner);
                if (v > best_v) {
                    best_v = v;
                    best_a[o] = a;
                }
            }
            best[o] = best_v;
        });
        LemmaRow row;
        row.t0 = t0;
        double mean = 0.0;
        double sq = 0.0;
        double cmean = 0.0;
        double amean = 0.0;
        for (std::size_t o = 0; o < n_outer; ++o) {
            mean += best[o];
            sq += best[o] * best[o];
            cmean += cvals[o];
            amean += best_a[o];
        }
        const double n = static_cast<double>(n_outer);
        mean /= n;
        row.gap = sup_phi - mean;
        row.gap_ci = 1.96 * std::sqrt(std::max(0.0, sq / n - mean * mean) / (n - 1.0));
        row.bound = lipschitz * cmean / n;
        row.mean_best_a = amean / n;
        rep.rows.push_back(row);
    }
    rep.decreasing = true;
    rep.within_bound = true;
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        if (i > 0 && !(rep.rows[i].gap < rep.rows[i - 1].gap)) rep.decreasing = false;
        if (rep.rows[i].gap > rep.rows[i].bound) rep.within_bound = false;
    }
    return rep;
}

}  // namespace davis

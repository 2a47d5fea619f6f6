#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "bch.hpp"
#include "bits.hpp"

namespace blockwm::theory {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;
using BigFloat = boost::multiprecision::cpp_bin_float_50;

inline void require(bool ok, const char* what) {
    if (!ok) throw ContractViolation(what);
}

inline BigInt binomial(unsigned n, unsigned r) {
    if (r > n) return 0;
    r = std::min(r, n - r);
    BigInt c = 1;
    for (unsigned i = 1; i <= r; ++i) c = c * (n - r + i) / i;
    return c;
}

/// V_q(n,t) = sum_{i<=t} C(n,i) (q-1)^i, exact.
inline BigInt ball_volume(unsigned q, unsigned n, unsigned t) {
    require(q >= 2, "ball_volume: q must be >= 2");
    BigInt v = 0;
    BigInt qpow = 1;
    for (unsigned i = 0; i <= std::min(t, n); ++i) {
        v += binomial(n, i) * qpow;
        qpow *= (q - 1);
    }
    return v;
}

inline BigInt ipow(unsigned base, unsigned e) {
    BigInt r = 1;
    for (unsigned i = 0; i < e; ++i) r *= base;
    return r;
}

/// Single-block false-accept probability of the any-codeword test:
/// q^(k-n) V_q(n,t).
inline Rational fpr_any(unsigned q, unsigned n, unsigned k, unsigned t) {
    require(k <= n, "fpr_any: k must not exceed n");
    return Rational(ball_volume(q, n, t), ipow(q, n - k));
}

/// Designated-codeword single-block false-accept probability V_q(n,t) / q^n.
inline Rational p0(unsigned q, unsigned n, unsigned t) { return Rational(ball_volume(q, n, t), ipow(q, n)); }

inline double to_double(const Rational& r) { return static_cast<double>(BigFloat(r)); }

/// Natural log of a positive rational, accurate far below the double range.
inline double log_of(const Rational& r) {
    require(r > 0, "log_of: argument must be positive");
    return static_cast<double>(boost::multiprecision::log(BigFloat(r)));
}

inline double log_p0(unsigned q, unsigned n, unsigned t) { return log_of(p0(q, n, t)); }

enum class ShiftModel { union_bound, independent };

/// False-accept probability over S offsets: min(1, S p0) (union) or
/// 1 - (1 - p0)^S (independent offsets).
inline double p0_shift(double p0_value, unsigned offsets, ShiftModel model) {
    require(p0_value >= 0.0 && p0_value <= 1.0, "p0_shift: p0 must be a probability");
    require(offsets >= 1, "p0_shift: S must be >= 1");
    if (model == ShiftModel::union_bound) return std::min(1.0, offsets * p0_value);
    if (p0_value == 1.0) return 1.0;
    return -std::expm1(static_cast<double>(offsets) * std::log1p(-p0_value));
}

/// q-ary entropy H_q(x) in base q.
inline double qary_entropy(unsigned q, double x) {
    require(x >= 0.0 && x <= 1.0, "qary_entropy: x must lie in [0,1]");
    const double lq = std::log(static_cast<double>(q));
    double h = 0.0;
    if (x > 0.0) h += x * std::log(static_cast<double>(q - 1)) / lq - x * std::log(x) / lq;
    if (x < 1.0) h -= (1.0 - x) * std::log1p(-x) / lq;
    return h;
}

/// q^(-n (1 - H_q(t/n))), an upper bound on p0 for t/n <= 1 - 1/q.
inline double entropy_bound(unsigned q, unsigned n, unsigned t) {
    require(n >= 1 && t <= n, "entropy_bound: need 0 <= t <= n, n >= 1");
    const double x = static_cast<double>(t) / n;
    return std::pow(static_cast<double>(q), -static_cast<double>(n) * (1.0 - qary_entropy(q, x)));
}

/// D(a || b) in nats.
inline double kl_bernoulli(double a, double b) {
    require(a >= 0.0 && a <= 1.0 && b >= 0.0 && b <= 1.0, "kl_bernoulli: arguments must be probabilities");
    auto term = [](double x, double y) {
        if (x == 0.0) return 0.0;
        if (y == 0.0) return std::numeric_limits<double>::infinity();
        return x * std::log(x / y);
    };
    return term(a, b) + term(1.0 - a, 1.0 - b);
}

/// exp(-M D(θ || p)) for p < θ < 1; nullopt outside that window.
inline std::optional<double> agg_fpr_bound(unsigned blocks, double theta, double p) {
    require(blocks >= 1, "agg_fpr_bound: M must be >= 1");
    if (!(p < theta && theta < 1.0)) return std::nullopt;
    return std::exp(-static_cast<double>(blocks) * kl_bernoulli(theta, p));
}

/// 2^k times the aggregate bound (union over blindly estimated payloads).
inline std::optional<double> blind_fpr_bound(unsigned k, unsigned blocks, double theta, double p) {
    auto agg = agg_fpr_bound(blocks, theta, p);
    if (!agg) return std::nullopt;
    return std::ldexp(*agg, static_cast<int>(k));
}

/// (1 - m) / (m e^δ + (1 - m)).
inline double p_emb(double delta, double mass) {
    require(delta >= 0.0, "p_emb: delta must be non-negative");
    require(mass > 0.0 && mass < 1.0, "p_emb: mass must lie in (0,1)");
    return (1.0 - mass) / (mass * std::exp(delta) + (1.0 - mass));
}

/// Smallest δ with p_emb(δ, m) <= p*: log((1-p*)/p*) - logit(m).
inline double delta_for_target(double p_star, double mass) {
    require(p_star > 0.0 && p_star < 1.0, "delta_for_target: p* must lie in (0,1)");
    require(mass > 0.0 && mass < 1.0, "delta_for_target: mass must lie in (0,1)");
    return std::log((1.0 - p_star) / p_star) - std::log(mass / (1.0 - mass));
}

/// Pr[Bin(n, p_tot) <= t].
inline double p1(unsigned n, unsigned t, double p_tot) {
    require(p_tot >= 0.0 && p_tot <= 1.0, "p1: p_tot must be a probability");
    if (p_tot == 0.0) return 1.0;
    if (t >= n) return 1.0;
    if (p_tot == 1.0) return 0.0;
    double sum = 0.0;
    const double lp = std::log(p_tot), lq = std::log1p(-p_tot);
    for (unsigned i = 0; i <= t; ++i) {
        const double lc = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0);
        sum += std::exp(lc + i * lp + (n - i) * lq);
    }
    return std::min(1.0, sum);
}

/// exp(-M D(θ || p1)) for θ < p1; nullopt outside that window.
inline std::optional<double> fnr_bound(unsigned blocks, double theta, double p1_value) {
    require(blocks >= 1, "fnr_bound: M must be >= 1");
    if (!(theta > 0.0 && theta < p1_value)) return std::nullopt;
    return std::exp(-static_cast<double>(blocks) * kl_bernoulli(theta, p1_value));
}

/// Smallest s_max with s_max >= α n p_ins/del.
inline int s_max_guideline(double alpha, unsigned n, double p_insdel) {
    require(alpha > 0.0, "s_max_guideline: alpha must be positive");
    require(p_insdel >= 0.0 && p_insdel <= 1.0, "s_max_guideline: rate must be a probability");
    const double raw = alpha * n * p_insdel;
    // Absorb float noise such as 1.5 * 31 * 0.2 = 9.3000000000000007.
    return static_cast<int>(std::ceil(raw - 1e-9));
}

struct BoundParams {
    unsigned q = 2;
    CodeParams code{31, 6, 7};
    int s_max = 0;
    unsigned offsets = 1;  // S = 2 s_max + 1
    double theta = 0.5;
    unsigned blocks = 1;  // M
    double delta = 0.0;
    double mass = 0.5;
    double p_att = 0.0;
    double p_tot = 0.0;
    double p0 = 0.0;
    double p0_shift = 0.0;
    double p1 = 0.0;
    double fpr_bound = 0.0;
    double fnr_bound = 0.0;
};

struct SearchTargets {
    double alpha = 1e-3;    // FPR target
    double beta = 1e-2;     // FNR target
    double p_att = 0.0;     // attack-induced symbol error rate
    double mass = 0.5;      // pre-bias green mass m
    double p_insdel = 0.0;  // insertion/deletion rate for the s_max rule
    double safety = 1.5;    // α in s_max >= α n p
    bool blind = true;      // include the 2^k blind-estimation factor
    unsigned max_blocks = 4096;
    std::vector<CodeParams> codes{kNamedCodes.begin(), kNamedCodes.end()};
    std::vector<double> deltas{1.5, 2.0, 2.5, 3.0, 4.0, 6.0};
    std::vector<double> thetas{0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5,
                               0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95};
};

/// Smallest M >= 1 with factor * exp(-M d) <= target, or nullopt.
inline std::optional<unsigned> min_blocks_for(double d, double target, double log_factor, unsigned cap) {
    if (!(d > 0.0)) return std::nullopt;
    const double need = (log_factor - std::log(target)) / d;
    double m = std::max(1.0, std::ceil(need - 1e-12));
    // Step up past rounding so the returned M satisfies the inequality exactly.
    while (m <= cap && log_factor - m * d > std::log(target)) m += 1.0;
    if (m > cap) return std::nullopt;
    return static_cast<unsigned>(m);
}

/// Sweeps shipped codes and the (δ, θ) grids, takes s_max from the
/// guideline, and returns the minimal-M configuration whose aggregate (or
/// blind) FPR bound is <= α and FNR bound is <= β. Ties: smallest n, then
/// smallest δ, then smallest θ.
inline std::optional<BoundParams> param_search(const SearchTargets& tg) {
    std::optional<BoundParams> best;
    auto better = [](const BoundParams& a, const BoundParams& b) {
        if (a.blocks != b.blocks) return a.blocks < b.blocks;
        if (a.code.n != b.code.n) return a.code.n < b.code.n;
        if (a.delta != b.delta) return a.delta < b.delta;
        return a.theta < b.theta;
    };
    for (const auto& cp : tg.codes) {
        const int s_max = std::min(s_max_guideline(tg.safety, static_cast<unsigned>(cp.n), tg.p_insdel), cp.n);
        const auto offsets = static_cast<unsigned>(2 * s_max + 1);
        const double base = to_double(p0(2, static_cast<unsigned>(cp.n), static_cast<unsigned>(cp.t)));
        const double p = p0_shift(base, offsets, ShiftModel::independent);
        const double log_factor = tg.blind ? cp.k * std::log(2.0) : 0.0;
        for (double delta : tg.deltas) {
            const double ptot = std::min(1.0, p_emb(delta, tg.mass) + tg.p_att);
            const double succ = p1(static_cast<unsigned>(cp.n), static_cast<unsigned>(cp.t), ptot);
            for (double theta : tg.thetas) {
                if (!(p < theta && theta < succ)) continue;
                auto mf = min_blocks_for(kl_bernoulli(theta, p), tg.alpha, log_factor, tg.max_blocks);
                auto mn = min_blocks_for(kl_bernoulli(theta, succ), tg.beta, 0.0, tg.max_blocks);
                if (!mf || !mn) continue;
                BoundParams bp;
                bp.code = cp;
                bp.s_max = s_max;
                bp.offsets = offsets;
                bp.theta = theta;
                bp.blocks = std::max(*mf, *mn);
                bp.delta = delta;
                bp.mass = tg.mass;
                bp.p_att = tg.p_att;
                bp.p_tot = ptot;
                bp.p0 = base;
                bp.p0_shift = p;
                bp.p1 = succ;
                bp.fpr_bound = std::exp(log_factor) * *agg_fpr_bound(bp.blocks, theta, p);
                bp.fnr_bound = *fnr_bound(bp.blocks, theta, succ);
                if (!best || better(bp, *best)) best = bp;
            }
        }
    }
    return best;
}

}  // namespace blockwm::theory

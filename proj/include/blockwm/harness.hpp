#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "attacks.hpp"
#include "bch.hpp"
#include "detector.hpp"
#include "generation.hpp"
#include "keying.hpp"
#include "theory.hpp"

namespace blockwm::harness {

inline constexpr int kFormatVersion = 1;

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

/// Wilson score interval for `successes` out of `trials` (95% by default).
inline Interval wilson(std::size_t successes, std::size_t trials, double z = 1.959963984540054) {
    if (trials == 0) return {0.0, 1.0};
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
    const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
    // The closed form hits 0 or 1 exactly at the extremes; pin them against rounding.
    return {successes == 0 ? 0.0 : std::max(0.0, centre - half),
            successes == trials ? 1.0 : std::min(1.0, centre + half)};
}

enum class SourceKind { uniform, controlled_mass };

struct SourceSpec {
    SourceKind kind = SourceKind::controlled_mass;
    std::uint32_t vocab_size = 1024;
    double mass = 0.5;

    std::unique_ptr<LogitSource> make() const {
        if (kind == SourceKind::uniform) return std::make_unique<UniformSource>(vocab_size);
        return std::make_unique<ControlledMassSource>(vocab_size, mass);
    }
};

struct AttackStep {
    AttackKind kind = AttackKind::substitute;
    double rate = 0.0;
};

struct DetectVariant {
    DetectMode mode = DetectMode::both;
    int s_max = 0;
    std::size_t threshold = 1;

    std::string id() const {
        return std::string(to_string(mode)) + "/s" + std::to_string(s_max) + "/t" + std::to_string(threshold);
    }
};

struct ExperimentSpec {
    std::size_t trials = 2000;
    CodeParams code{31, 6, 7};
    double delta = 2.0;
    EmbedScheme scheme = EmbedScheme::soft;
    std::size_t token_count = 200;
    PlanMode plan_mode = PlanMode::payload;
    SourceSpec source;
    std::vector<AttackStep> attacks;
    std::vector<DetectVariant> detect_grid{DetectVariant{}};
    SecretKey key;
    std::uint64_t master_seed = 0;
    unsigned threads = 1;
    /// Test both arms against the trial's embedded payload (the fixed
    /// designated test) instead of a blindly voted one.
    bool known_payload = false;

    void validate() const {
        if (trials < 1) throw ContractViolation("campaign: trials must be >= 1");
        if (detect_grid.empty()) throw ContractViolation("campaign: detect grid is empty");
        for (const auto& a : attacks)
            if (!(a.rate >= 0.0 && a.rate <= 1.0)) throw ContractViolation("campaign: attack rate outside [0,1]");
        for (const auto& d : detect_grid) {
            if (d.threshold < 1) throw ContractViolation("campaign: threshold must be >= 1");
            if (d.s_max < 0 || d.s_max > code.n) throw ContractViolation("campaign: s_max must lie in [0, n]");
        }
    }
};

/// Best-offset outcome of one detection.
struct ArmOutcome {
    std::size_t matched = 0;
    std::size_t blocks = 0;
    bool payload_correct = false;  // recovered payload equals the embedded one
    double latency_ms = 0.0;
};

struct MetricsRow {
    std::string config_id;
    DetectVariant variant;
    std::size_t trials = 0;
    std::size_t tp = 0, fn = 0, fp = 0, tn = 0;
    double tpr = 0.0;
    double fpr = 0.0;
    std::optional<double> precision;
    std::optional<double> f1;
    double match_rate = 0.0;
    double mean_matched_ratio = 0.0;
    double mean_latency_ms = 0.0;
    Interval tpr_ci, fpr_ci, match_ci;
    std::string diagnostic;
};

struct CampaignResult {
    std::vector<MetricsRow> rows;
    /// outcomes[v][i]: variant v, trial i.
    std::vector<std::vector<ArmOutcome>> watermarked;
    std::vector<std::vector<ArmOutcome>> unwatermarked;
};

/// Runs body(i) for i in [0, count) on `threads` workers. Each index is
/// owned by exactly one worker, so results written by index are identical
/// to a serial run.
template <typename Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
    threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < count; i += threads) body(i);
        });
    for (auto& th : pool) th.join();
}

/// Uniform payload from {0,1}^k minus the zero message.
inline Message random_nonzero_message(int k, Rng& rng) {
    Message m(static_cast<std::size_t>(k));
    do {
        for (int i = 0; i < k; ++i) m.set(static_cast<std::size_t>(i), rng.next() & 1U);
    } while (m.is_zero());
    return m;
}

inline TokenSequence apply_attacks(TokenSequence seq, const std::vector<AttackStep>& steps, Rng& rng,
                                   const SecretKey& key, int n) {
    for (const auto& st : steps) {
        AttackSpec spec{st.kind, st.rate, rng.next(), std::nullopt};
        if (st.kind == AttackKind::bitflip) spec.keyed = BitflipKey{key, n};
        seq = attack(seq, spec);
    }
    return seq;
}

namespace detail {
inline ArmOutcome run_detect(const TokenSequence& seq, const DetectConfig& cfg, const Message* payload,
                             const Message* claimed) {
    const auto t0 = std::chrono::steady_clock::now();
    const DetectionReport rep = claimed ? verify(seq, cfg, *claimed) : detect(seq, cfg);
    const auto t1 = std::chrono::steady_clock::now();
    ArmOutcome out;
    out.matched = rep.matched;
    out.blocks = rep.blocks;
    // Payload correctness is judged at the τ = 1 decision; rows re-check
    // the variant's own threshold.
    out.payload_correct = payload && rep.payload && *rep.payload == *payload;
    out.latency_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    return out;
}

inline DetectConfig make_detect_config(const BchCode& code, const ExperimentSpec& spec, const DetectVariant& v) {
    DetectConfig cfg{code, spec.key};
    cfg.s_max = v.s_max;
    cfg.threshold = 1;  // decisions at the variant threshold are taken from the matched count
    cfg.mode = v.mode;
    cfg.diverse = spec.plan_mode == PlanMode::diverse;
    return cfg;
}
}  // namespace detail

inline MetricsRow summarize(const DetectVariant& v, const std::vector<ArmOutcome>& wm,
                            const std::vector<ArmOutcome>& h0, std::size_t threshold) {
    MetricsRow row;
    row.variant = v;
    row.variant.threshold = threshold;
    row.config_id = row.variant.id();
    row.trials = wm.size();
    std::size_t matches = 0;
    double ratio_sum = 0.0, latency_sum = 0.0;
    for (const auto& o : wm) {
        const bool pos = o.blocks > 0 && o.matched >= threshold;
        pos ? ++row.tp : ++row.fn;
        if (pos && o.payload_correct) ++matches;
        ratio_sum += o.blocks ? static_cast<double>(o.matched) / static_cast<double>(o.blocks) : 0.0;
        latency_sum += o.latency_ms;
    }
    for (const auto& o : h0) {
        const bool pos = o.blocks > 0 && o.matched >= threshold;
        pos ? ++row.fp : ++row.tn;
        latency_sum += o.latency_ms;
    }
    const double nw = static_cast<double>(wm.size()), nh = static_cast<double>(h0.size());
    row.tpr = nw > 0 ? static_cast<double>(row.tp) / nw : 0.0;
    row.fpr = nh > 0 ? static_cast<double>(row.fp) / nh : 0.0;
    if (row.tp + row.fp > 0) {
        row.precision = static_cast<double>(row.tp) / static_cast<double>(row.tp + row.fp);
        if (*row.precision + row.tpr > 0) row.f1 = 2 * *row.precision * row.tpr / (*row.precision + row.tpr);
    }
    row.match_rate = nw > 0 ? static_cast<double>(matches) / nw : 0.0;
    row.mean_matched_ratio = nw > 0 ? ratio_sum / nw : 0.0;
    row.mean_latency_ms = (nw + nh) > 0 ? latency_sum / (nw + nh) : 0.0;
    row.tpr_ci = wilson(row.tp, wm.size());
    row.fpr_ci = wilson(row.fp, h0.size());
    row.match_ci = wilson(matches, wm.size());
    return row;
}

/// For every trial: embed a random nonzero payload, sample an unwatermarked
/// text from the same source, attack both, and run every detect variant on
/// both. One row per variant. Per-trial randomness comes from
/// Rng::stream(master_seed, trial), so the tallies do not depend on the
/// thread count.
inline CampaignResult run_campaign(const ExperimentSpec& spec) {
    spec.validate();
    const BchCode code = BchCode::named(spec.code);
    const auto source = spec.source.make();
    const std::size_t nv = spec.detect_grid.size();

    CampaignResult res;
    res.watermarked.assign(nv, std::vector<ArmOutcome>(spec.trials));
    res.unwatermarked.assign(nv, std::vector<ArmOutcome>(spec.trials));

    std::vector<DetectConfig> configs;
    configs.reserve(nv);
    for (const auto& v : spec.detect_grid) configs.push_back(detail::make_detect_config(code, spec, v));

    const bool too_short = spec.token_count < static_cast<std::size_t>(code.n());
    if (!too_short) {
        parallel_for(spec.trials, spec.threads, [&](std::size_t i) {
            Rng rng = Rng::stream(spec.master_seed, i);
            const Message payload = random_nonzero_message(code.k(), rng);
            EmbedConfig ecfg{code, spec.delta, spec.scheme, spec.token_count, rng.next(), spec.plan_mode};
            TokenSequence wm = embed(*source, spec.key, payload, ecfg);
            TokenSequence h0 = sample_unwatermarked(*source, spec.token_count, rng.next());
            wm = apply_attacks(std::move(wm), spec.attacks, rng, spec.key, code.n());
            h0 = apply_attacks(std::move(h0), spec.attacks, rng, spec.key, code.n());
            for (std::size_t v = 0; v < nv; ++v) {
                const Message* claimed = spec.known_payload ? &payload : nullptr;
                res.watermarked[v][i] = detail::run_detect(wm, configs[v], &payload, claimed);
                res.unwatermarked[v][i] = detail::run_detect(h0, configs[v], nullptr, claimed);
            }
        });
    }
    for (std::size_t v = 0; v < nv; ++v) {
        MetricsRow row = summarize(spec.detect_grid[v], res.watermarked[v], res.unwatermarked[v],
                                   spec.detect_grid[v].threshold);
        if (too_short) row.diagnostic = "token_count < n: no complete block";
        res.rows.push_back(std::move(row));
    }
    return res;
}

namespace detail {
inline std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}
inline std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string{}; }
}  // namespace detail

/// Metrics CSV. Latency is wall-clock and therefore only written when
/// requested; without it the output is a pure function of the spec.
inline std::string metrics_csv(const std::vector<MetricsRow>& rows, bool include_latency = false) {
    std::ostringstream os;
    os << "# format_version=" << kFormatVersion << "\n";
    os << "config_id,mode,s_max,threshold,trials,tp,fn,fp,tn,tpr,tpr_lo,tpr_hi,fpr,fpr_lo,fpr_hi,"
          "precision,f1,match_rate,match_lo,match_hi,mean_matched_ratio";
    if (include_latency) os << ",mean_latency_ms";
    os << ",diagnostic\n";
    for (const auto& r : rows) {
        using detail::fmt;
        os << r.config_id << ',' << to_string(r.variant.mode) << ',' << r.variant.s_max << ','
           << r.variant.threshold << ',' << r.trials << ',' << r.tp << ',' << r.fn << ',' << r.fp << ','
           << r.tn << ',' << fmt(r.tpr) << ',' << fmt(r.tpr_ci.lo) << ',' << fmt(r.tpr_ci.hi) << ','
           << fmt(r.fpr) << ',' << fmt(r.fpr_ci.lo) << ',' << fmt(r.fpr_ci.hi) << ',' << fmt(r.precision) << ','
           << fmt(r.f1) << ',' << fmt(r.match_rate) << ',' << fmt(r.match_ci.lo) << ',' << fmt(r.match_ci.hi)
           << ',' << fmt(r.mean_matched_ratio);
        if (include_latency) os << ',' << fmt(r.mean_latency_ms);
        os << ',' << r.diagnostic << '\n';
    }
    return os.str();
}

struct RocPoint {
    std::string config_id;
    std::size_t threshold = 1;
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    DetectVariant variant;
    std::vector<RocPoint> points;  // τ = 1 .. max blocks
    double auc = 0.0;
};

/// Area under the piecewise-linear ROC through (0,0), the points, and (1,1).
inline double roc_auc(std::vector<std::pair<double, double>> pts) {
    pts.emplace_back(0.0, 0.0);
    pts.emplace_back(1.0, 1.0);
    std::sort(pts.begin(), pts.end());
    double area = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i)
        area += (pts[i].first - pts[i - 1].first) * (pts[i].second + pts[i - 1].second) / 2.0;
    return area;
}

/// One campaign, then every threshold τ in 1..max M evaluated on the same
/// detections (the matched count does not depend on τ).
inline std::vector<RocCurve> roc_sweep(const ExperimentSpec& spec) {
    const CampaignResult res = run_campaign(spec);
    std::vector<RocCurve> curves;
    for (std::size_t v = 0; v < spec.detect_grid.size(); ++v) {
        RocCurve c;
        c.variant = spec.detect_grid[v];
        std::size_t max_blocks = 1;
        for (const auto& o : res.watermarked[v]) max_blocks = std::max(max_blocks, o.blocks);
        for (const auto& o : res.unwatermarked[v]) max_blocks = std::max(max_blocks, o.blocks);
        std::vector<std::pair<double, double>> pts;
        for (std::size_t tau = 1; tau <= max_blocks; ++tau) {
            const MetricsRow row = summarize(c.variant, res.watermarked[v], res.unwatermarked[v], tau);
            c.points.push_back({row.config_id, tau, row.fpr, row.tpr});
            pts.emplace_back(row.fpr, row.tpr);
        }
        c.auc = roc_auc(pts);
        curves.push_back(std::move(c));
    }
    return curves;
}

inline std::string roc_csv(const std::vector<RocCurve>& curves) {
    std::ostringstream os;
    os << "# format_version=" << kFormatVersion << "\n";
    os << "mode,s_max,threshold,fpr,tpr,auc\n";
    for (const auto& c : curves)
        for (const auto& p : c.points)
            os << to_string(c.variant.mode) << ',' << c.variant.s_max << ',' << p.threshold << ','
               << detail::fmt(p.fpr) << ',' << detail::fmt(p.tpr) << ',' << detail::fmt(c.auc) << '\n';
    return os.str();
}

struct BerSpec {
    std::vector<double> deltas{0.0, 1.5, 2.0, 2.5, 3.0, 6.0};
    double mass = 0.5;
    std::size_t trials = 50;
    std::size_t token_count = 310;
    CodeParams code{31, 6, 7};
    std::uint32_t vocab_size = 1024;
    SecretKey key;
    std::uint64_t master_seed = 0;
    unsigned threads = 1;
};

struct BerRow {
    double delta = 0.0;
    std::size_t bits = 0;
    std::size_t wm_errors = 0;
    std::size_t h0_errors = 0;
    double ber_wm = 0.0;
    double ber_h0 = 0.0;
    double theory = 0.0;  // p_emb(δ, m)
    double stderr_wm = 0.0;
};

/// Keyed bit errors at nominal alignment against the designated target bits,
/// for soft-embedded and unwatermarked texts from ControlledMassSource(m).
inline std::vector<BerRow> ber_curve(const BerSpec& spec) {
    const BchCode code = BchCode::named(spec.code);
    const ControlledMassSource src(spec.vocab_size, spec.mass);
    const auto n = static_cast<std::size_t>(code.n());
    const std::size_t blocks = spec.token_count / n;
    std::vector<BerRow> rows;
    for (std::size_t di = 0; di < spec.deltas.size(); ++di) {
        const double delta = spec.deltas[di];
        std::vector<std::size_t> wm_err(spec.trials, 0), h0_err(spec.trials, 0);
        parallel_for(spec.trials, spec.threads, [&](std::size_t i) {
            Rng rng = Rng::stream(spec.master_seed ^ splitmix64(di + 1), i);
            const Message payload = random_nonzero_message(code.k(), rng);
            EmbedConfig ecfg{code, delta, EmbedScheme::soft, blocks * n, rng.next(), PlanMode::payload};
            const auto targets = designated_targets(spec.key, payload, code, PlanMode::payload, blocks);
            const auto wm = embed(src, spec.key, payload, ecfg);
            const auto h0 = sample_unwatermarked(src, blocks * n, rng.next());
            const auto bw = extract_bits(wm, spec.key, code.n(), 0);
            const auto bh = extract_bits(h0, spec.key, code.n(), 0);
            for (std::size_t p = 0; p < blocks * n; ++p) {
                const std::uint8_t want = targets[p / n][p % n];
                wm_err[i] += bw.bits[p] != want;
                h0_err[i] += bh.bits[p] != want;
            }
        });
        BerRow row;
        row.delta = delta;
        row.bits = spec.trials * blocks * n;
        for (std::size_t i = 0; i < spec.trials; ++i) {
            row.wm_errors += wm_err[i];
            row.h0_errors += h0_err[i];
        }
        const double nb = static_cast<double>(std::max<std::size_t>(row.bits, 1));
        row.ber_wm = static_cast<double>(row.wm_errors) / nb;
        row.ber_h0 = static_cast<double>(row.h0_errors) / nb;
        row.theory = theory::p_emb(delta, spec.mass);
        row.stderr_wm = std::sqrt(row.theory * (1 - row.theory) / nb);
        rows.push_back(row);
    }
    return rows;
}

inline std::string ber_csv(const std::vector<BerRow>& rows) {
    std::ostringstream os;
    os << "# format_version=" << kFormatVersion << "\n";
    os << "delta,bits,ber_watermarked,ber_unwatermarked,p_emb_theory,stderr\n";
    for (const auto& r : rows)
        os << detail::fmt(r.delta) << ',' << r.bits << ',' << detail::fmt(r.ber_wm) << ',' << detail::fmt(r.ber_h0)
           << ',' << detail::fmt(r.theory) << ',' << detail::fmt(r.stderr_wm) << '\n';
    return os.str();
}

struct BenchSpec {
    std::vector<std::size_t> token_counts{200, 500};
    std::vector<CodeParams> codes{{31, 6, 7}, {63, 7, 15}};
    std::vector<int> s_max_values{0, 1, 3, 5, 10};
    std::size_t reps = 5;
    std::uint32_t vocab_size = 1024;
    SecretKey key;
    std::uint64_t master_seed = 0;
};

struct BenchRow {
    std::size_t token_count = 0;
    CodeParams code{};
    int s_max = 0;
    std::size_t reps = 0;
    double mean_seconds = 0.0;
    double max_seconds = 0.0;
};

/// Wall-clock time of one `both`-mode detection per text.
inline std::vector<BenchRow> latency_bench(const BenchSpec& spec) {
    std::vector<BenchRow> rows;
    const UniformSource src(spec.vocab_size);
    for (std::size_t T : spec.token_counts) {
        for (const auto& cp : spec.codes) {
            const BchCode code = BchCode::named(cp);
            std::vector<TokenSequence> texts;
            for (std::size_t r = 0; r < spec.reps; ++r) {
                Rng rng = Rng::stream(spec.master_seed, r);
                const Message payload = random_nonzero_message(code.k(), rng);
                EmbedConfig ecfg{code, 0.0, EmbedScheme::hard, T, rng.next(), PlanMode::payload};
                texts.push_back(embed(src, spec.key, payload, ecfg));
            }
            for (int s : spec.s_max_values) {
                if (s > code.n()) continue;
                DetectConfig cfg{code, spec.key};
                cfg.s_max = s;
                BenchRow row{T, cp, s, spec.reps, 0.0, 0.0};
                for (const auto& text : texts) {
                    const auto t0 = std::chrono::steady_clock::now();
                    (void)detect(text, cfg);
                    const double sec =
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                    row.mean_seconds += sec;
                    row.max_seconds = std::max(row.max_seconds, sec);
                }
                row.mean_seconds /= static_cast<double>(std::max<std::size_t>(spec.reps, 1));
                rows.push_back(row);
            }
        }
    }
    return rows;
}

inline std::string bench_csv(const std::vector<BenchRow>& rows) {
    std::ostringstream os;
    os << "# format_version=" << kFormatVersion << "\n";
    os << "tokens,n,k,t,s_max,reps,mean_seconds,max_seconds\n";
    for (const auto& r : rows)
        os << r.token_count << ',' << r.code.n << ',' << r.code.k << ',' << r.code.t << ',' << r.s_max << ','
           << r.reps << ',' << detail::fmt(r.mean_seconds) << ',' << detail::fmt(r.max_seconds) << '\n';
    return os.str();
}

}  // namespace blockwm::harness

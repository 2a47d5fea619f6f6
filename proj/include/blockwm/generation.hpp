#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "bch.hpp"
#include "keying.hpp"

namespace blockwm {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Reproducible random stream. Uses mt19937_64 (fully specified by the
/// standard) with hand-written conversions, so draws are bit-identical across
/// standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    /// Independent child stream `stream` of `seed`.
    static Rng stream(std::uint64_t seed, std::uint64_t stream) {
        return Rng(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
    }

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) throw ContractViolation("Rng::below with zero bound");
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t x;
        do x = engine_();
        while (x >= limit);
        return x % bound;
    }

private:
    std::mt19937_64 engine_;
};

struct TokenSequence {
    std::vector<std::uint32_t> tokens;
    std::uint32_t vocab_size = 0;

    std::size_t size() const noexcept { return tokens.size(); }
    bool valid() const noexcept {
        for (auto t : tokens)
            if (t >= vocab_size) return false;
        return true;
    }
    friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

/// What a logit source may see at a generation step. `target_list` is the
/// keyed membership f_j of the current block and `target_bit` the list the
/// embedder is steering toward; both are absent for unwatermarked sampling.
struct StepContext {
    std::size_t step = 0;
    std::span<const std::uint8_t> target_list;
    std::uint8_t target_bit = 0;
    bool watermarked = false;
};

class LogitSource {
public:
    virtual ~LogitSource() = default;
    virtual std::uint32_t vocab_size() const = 0;
    /// Writes vocab_size() finite logits into `out`.
    virtual void logits(const StepContext& ctx, std::span<double> out) const = 0;
};

/// All logits equal.
class UniformSource final : public LogitSource {
public:
    explicit UniformSource(std::uint32_t vocab_size) : vocab_(vocab_size) {
        if (vocab_size < 2) throw ContractViolation("vocabulary must have at least 2 tokens");
    }
    std::uint32_t vocab_size() const override { return vocab_; }
    void logits(const StepContext&, std::span<double> out) const override {
        std::fill(out.begin(), out.end(), 0.0);
    }

private:
    std::uint32_t vocab_;
};

/// Puts pre-bias softmax mass exactly `mass` on the embedder's target list:
/// target tokens get logit log(m (|V|-g) / ((1-m) g)), the rest 0, where g is
/// the target-list size. Without a target list the logits are uniform.
class ControlledMassSource final : public LogitSource {
public:
    ControlledMassSource(std::uint32_t vocab_size, double mass) : vocab_(vocab_size), mass_(mass) {
        if (vocab_size < 2) throw ContractViolation("vocabulary must have at least 2 tokens");
        if (!(mass > 0.0 && mass < 1.0)) throw ContractViolation("green-list mass must lie in (0,1)");
    }
    std::uint32_t vocab_size() const override { return vocab_; }
    double mass() const noexcept { return mass_; }

    void logits(const StepContext& ctx, std::span<double> out) const override {
        std::fill(out.begin(), out.end(), 0.0);
        if (!ctx.watermarked) return;
        std::size_t green = 0;
        for (auto b : ctx.target_list) green += (b == ctx.target_bit);
        if (green == 0 || green == vocab_) return;
        const double boost = std::log(mass_ * static_cast<double>(vocab_ - green) /
                                      ((1.0 - mass_) * static_cast<double>(green)));
        for (std::size_t v = 0; v < out.size(); ++v)
            if (ctx.target_list[v] == ctx.target_bit) out[v] = boost;
    }

private:
    std::uint32_t vocab_;
    double mass_;
};

enum class EmbedScheme { soft, hard };

struct EmbedConfig {
    BchCode code;
    double delta = 2.0;
    EmbedScheme scheme = EmbedScheme::soft;
    std::size_t token_count = 200;
    std::uint64_t rng_seed = 0;
    PlanMode mode = PlanMode::payload;
};

class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {
/// Softmax sample; entries equal to -inf are excluded.
inline std::uint32_t sample_softmax(std::span<const double> logits, Rng& rng) {
    double peak = -std::numeric_limits<double>::infinity();
    for (double l : logits) peak = std::max(peak, l);
    if (!std::isfinite(peak)) throw GenerationError("no token has finite probability");
    double total = 0.0;
    for (double l : logits) total += std::exp(l - peak);
    double u = rng.uniform() * total;
    std::uint32_t last = 0;
    for (std::size_t v = 0; v < logits.size(); ++v) {
        if (logits[v] == -std::numeric_limits<double>::infinity()) continue;
        last = static_cast<std::uint32_t>(v);
        u -= std::exp(logits[v] - peak);
        if (u < 0.0) return last;
    }
    return last;
}

/// Keyed state for one block, built on first touch.
struct BlockState {
    BlockKey key;
    BlockPlan plan;
    VocabPartition partition;
};
}  // namespace detail

/// Generates cfg.token_count watermark-bearing tokens. Token t (0-based)
/// belongs to block j = t / n at position b = t % n and is steered toward
/// the list L_z with z = plan(j).target_bits[b].
inline TokenSequence embed(const LogitSource& src, const SecretKey& key, const Message& payload,
                           const EmbedConfig& cfg) {
    const auto& code = cfg.code;
    if (static_cast<int>(payload.size()) != code.k()) throw ContractViolation("embed: payload length != k");
    if (cfg.delta < 0.0) throw ContractViolation("embed: delta must be non-negative");
    if (cfg.token_count < 1) throw ContractViolation("embed: token_count must be >= 1");

    const auto n = static_cast<std::size_t>(code.n());
    const std::uint32_t vocab = src.vocab_size();
    std::optional<Codeword> cmax;
    if (cfg.mode == PlanMode::diverse) cmax = code.max_weight_codeword();

    Rng rng(cfg.rng_seed);
    TokenSequence out;
    out.vocab_size = vocab;
    out.tokens.reserve(cfg.token_count);
    std::vector<double> logits(vocab);
    std::optional<detail::BlockState> block;

    for (std::size_t t = 0; t < cfg.token_count; ++t) {
        const std::size_t j = t / n;
        const std::size_t b = t % n;
        if (!block || block->key.index != j) {
            auto bk = derive_block_key(key, j, code.k());
            auto plan = plan_block(bk, payload, code, cfg.mode, cmax ? &*cmax : nullptr);
            VocabPartition part(bk, vocab);
            block.emplace(detail::BlockState{std::move(bk), std::move(plan), std::move(part)});
        }
        const std::uint8_t z = block->plan.target_bits[b];
        const auto membership = block->partition.membership();
        StepContext ctx{t, membership, z, true};
        src.logits(ctx, logits);

        if (cfg.scheme == EmbedScheme::hard) {
            if (block->partition.list_size(z) == 0) throw GenerationError("hard embedding: target list is empty");
            for (std::size_t v = 0; v < vocab; ++v)
                if (membership[v] != z) logits[v] = -std::numeric_limits<double>::infinity();
        } else {
            for (std::size_t v = 0; v < vocab; ++v)
                if (membership[v] == z) logits[v] += cfg.delta;
        }
        out.tokens.push_back(detail::sample_softmax(logits, rng));
    }
    return out;
}

/// Plain softmax sampling with no keyed bias.
inline TokenSequence sample_unwatermarked(const LogitSource& src, std::size_t token_count, std::uint64_t rng_seed) {
    Rng rng(rng_seed);
    TokenSequence out;
    out.vocab_size = src.vocab_size();
    out.tokens.reserve(token_count);
    std::vector<double> logits(out.vocab_size);
    for (std::size_t t = 0; t < token_count; ++t) {
        src.logits(StepContext{t, {}, 0, false}, logits);
        out.tokens.push_back(detail::sample_softmax(logits, rng));
    }
    return out;
}

/// Concatenated target bits of blocks [0, blocks) for a payload; what a
/// hard-embedded text reproduces at nominal alignment.
inline std::vector<Codeword> designated_targets(const SecretKey& key, const Message& payload, const BchCode& code,
                                                PlanMode mode, std::size_t blocks) {
    std::vector<Codeword> out;
    out.reserve(blocks);
    std::optional<Codeword> cmax;
    if (mode == PlanMode::diverse) cmax = code.max_weight_codeword();
    for (std::size_t j = 0; j < blocks; ++j)
        out.push_back(plan_block(derive_block_key(key, j, code.k()), payload, code, mode, cmax ? &*cmax : nullptr)
                          .target_bits);
    return out;
}

}  // namespace blockwm

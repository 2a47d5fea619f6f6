#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bch.hpp"
#include "generation.hpp"
#include "keying.hpp"

namespace blockwm {

/// Memoizes keyed token bits f_j(v) and block seeds for one key. Detection
/// evaluates the same (block, token) pairs under many offsets.
class TokenBitCache {
public:
    explicit TokenBitCache(const SecretKey& key) : key_(key) {}

    std::uint8_t bit(std::uint64_t block, std::uint32_t token) {
        const std::uint64_t slot = (block << 32) | token;
        if (auto it = bits_.find(slot); it != bits_.end()) return it->second;
        const std::uint8_t b = token_bit(seed(block), token);
        bits_.emplace(slot, b);
        return b;
    }

    const Digest& seed(std::uint64_t block) {
        auto it = seeds_.find(block);
        if (it == seeds_.end()) it = seeds_.emplace(block, derive_block_key(key_, block, 0).seed).first;
        return it->second;
    }

private:
    SecretKey key_;
    std::unordered_map<std::uint64_t, Digest> seeds_;
    std::unordered_map<std::uint64_t, std::uint8_t> bits_;
};

/// Keyed bit stream of the non-prompt tokens under alignment offset Δ.
///
/// Token idx (0-based after the prompt) lands at stream position p = idx - Δ
/// and is read with the partition of block p / n. Positions p < 0 are
/// dropped, so Δ = +r re-frames a text that had r tokens prepended. With
/// Δ < 0 positions [0, -Δ) have no token and block 0 is incomplete.
struct BitStream {
    std::vector<std::uint8_t> bits;  // bits[i] is stream position start + i
    std::size_t start = 0;
    int offset = 0;

    std::size_t end() const noexcept { return start + bits.size(); }

    /// Indices j whose window [jn, jn + n) is fully covered.
    std::pair<std::size_t, std::size_t> complete_blocks(std::size_t n) const noexcept {
        const std::size_t first = (start + n - 1) / n;
        const std::size_t last = end() / n;
        return {first, std::max(first, last)};
    }

    Word window(std::size_t j, std::size_t n) const {
        Word w(n);
        for (std::size_t i = 0; i < n; ++i) w.set(i, bits[j * n + i - start]);
        return w;
    }
};

inline BitStream extract_bits(const TokenSequence& seq, TokenBitCache& cache, int n, int offset,
                              std::size_t prompt_len = 0) {
    if (n < 1) throw ContractViolation("extract_bits: block length must be positive");
    if (offset > n || offset < -n) throw ContractViolation("extract_bits: |offset| must not exceed n");
    BitStream out;
    out.offset = offset;
    if (seq.tokens.size() <= prompt_len) return out;
    const auto usable = static_cast<std::ptrdiff_t>(seq.tokens.size() - prompt_len);
    out.start = offset < 0 ? static_cast<std::size_t>(-offset) : 0;
    const std::ptrdiff_t first_idx = std::max<std::ptrdiff_t>(0, offset);
    if (first_idx >= usable) return out;
    out.bits.reserve(static_cast<std::size_t>(usable - first_idx));
    for (std::ptrdiff_t idx = first_idx; idx < usable; ++idx) {
        const auto p = static_cast<std::uint64_t>(idx - offset);
        const std::uint32_t tok = seq.tokens[prompt_len + static_cast<std::size_t>(idx)];
        out.bits.push_back(cache.bit(p / static_cast<std::uint64_t>(n), tok));
    }
    return out;
}

inline BitStream extract_bits(const TokenSequence& seq, const SecretKey& key, int n, int offset,
                              std::size_t prompt_len = 0) {
    TokenBitCache cache(key);
    return extract_bits(seq, cache, n, offset, prompt_len);
}

struct BlockDecode {
    std::size_t block = 0;
    std::optional<DecodeResult> decoded;
};

struct VoteResult {
    std::optional<Message> winner;
    std::map<Message, std::size_t> votes;
    std::vector<BlockDecode> blocks;
};

namespace detail {
/// Randomizer cache: r_j only depends on (key, j, k).
class RandomizerCache {
public:
    RandomizerCache(const SecretKey& key, int k) : key_(key), k_(k) {}
    const BlockKey& get(std::size_t j) {
        auto it = keys_.find(j);
        if (it == keys_.end()) it = keys_.emplace(j, derive_block_key(key_, j, k_)).first;
        return it->second;
    }

private:
    SecretKey key_;
    int k_;
    std::map<std::size_t, BlockKey> keys_;
};

inline VoteResult vote(const BitStream& bits, const BchCode& code, RandomizerCache& keys, const Codeword* cmax) {
    VoteResult out;
    const auto n = static_cast<std::size_t>(code.n());
    const auto [first, last] = bits.complete_blocks(n);
    for (std::size_t j = first; j < last; ++j) {
        BlockDecode bd{j, code.safe_decode(bits.window(j, n))};
        if (bd.decoded) {
            const Message& r = keys.get(j).randomizer;
            const Message cand = code.message_of(bd.decoded->codeword) ^ r;
            ++out.votes[cand];
            if (cmax) {
                const Message alt = code.message_of(bd.decoded->codeword ^ *cmax) ^ r;
                if (alt != cand) ++out.votes[alt];
            }
        }
        out.blocks.push_back(std::move(bd));
    }
    // Largest count wins; std::map iterates in ascending message order, so
    // the strict comparison keeps the smallest message on ties.
    std::size_t best = 0;
    for (const auto& [msg, count] : out.votes) {
        if (count > best) {
            best = count;
            out.winner = msg;
        }
    }
    return out;
}
}  // namespace detail

/// Blind payload estimate: majority vote over per-block safe decodes,
/// unmasked by each block's randomizer. In diverse mode a decoded block
/// votes for both payloads its pair could have come from. When c_max is the
/// all-ones word those are u and its complement for every block, so diverse
/// texts identify the payload only up to complement and ties resolve to the
/// smaller of the two.
inline VoteResult stage1_vote(const BitStream& bits, const BchCode& code, const SecretKey& key, bool diverse = false) {
    detail::RandomizerCache keys(key, code.k());
    std::optional<Codeword> cmax;
    if (diverse) cmax = code.max_weight_codeword();
    return detail::vote(bits, code, keys, cmax ? &*cmax : nullptr);
}

enum class DetectMode {
    designated_only,  // nominal alignment only, designated-codeword check
    shift_only,       // offset search, any decodable codeword counts
    both,             // offset search with designated-codeword check
    naive,            // nominal alignment, any decodable codeword counts
};

inline std::string_view to_string(DetectMode m) {
    switch (m) {
        case DetectMode::designated_only: return "designated_only";
        case DetectMode::shift_only: return "shift_only";
        case DetectMode::both: return "both";
        case DetectMode::naive: return "naive";
    }
    return "?";
}

inline DetectMode detect_mode_from_string(std::string_view s) {
    if (s == "designated_only") return DetectMode::designated_only;
    if (s == "shift_only") return DetectMode::shift_only;
    if (s == "both") return DetectMode::both;
    if (s == "naive") return DetectMode::naive;
    throw ContractViolation("unknown detect mode '" + std::string(s) + "'");
}

struct DetectConfig {
    DetectConfig(BchCode c, SecretKey k) : code(std::move(c)), key(k) {}

    BchCode code;
    SecretKey key;
    int s_max = 0;
    /// Minimum matched-block count τ.
    std::size_t threshold = 1;
    /// Optional ratio θ; when set, matched / M must also reach it.
    std::optional<double> min_ratio;
    DetectMode mode = DetectMode::both;
    bool diverse = false;
    std::size_t prompt_len = 0;

    void validate() const {
        if (threshold < 1) throw ContractViolation("detect: threshold must be >= 1");
        if (s_max < 0 || s_max > code.n()) throw ContractViolation("detect: s_max must lie in [0, n]");
        if (min_ratio && !(*min_ratio > 0.0 && *min_ratio <= 1.0))
            throw ContractViolation("detect: ratio threshold must lie in (0, 1]");
    }
};

struct BlockReport {
    std::size_t index = 0;
    bool matched = false;
    std::optional<std::size_t> distance;  // decode distance when the window decoded
};

struct DetectionReport {
    bool is_wm = false;
    std::optional<Message> payload;
    int best_offset = 0;
    std::size_t matched = 0;
    std::size_t blocks = 0;
    double score = 0.0;
    std::vector<BlockReport> per_block;
    /// Set when no offset produced a complete block.
    bool too_short = false;
};

/// Offsets in search order 0, -1, +1, -2, +2, ...
inline std::vector<int> offset_search_order(int s_max) {
    std::vector<int> order{0};
    for (int s = 1; s <= s_max; ++s) {
        order.push_back(-s);
        order.push_back(s);
    }
    return order;
}

namespace detail {
inline DetectionReport run_detector(const TokenSequence& seq, const DetectConfig& cfg,
                                    const Message* known_payload) {
    cfg.validate();
    const auto& code = cfg.code;
    const int n = code.n();
    const bool search = cfg.mode == DetectMode::both || cfg.mode == DetectMode::shift_only;
    const bool designated = cfg.mode == DetectMode::both || cfg.mode == DetectMode::designated_only;
    const std::vector<int> offsets = offset_search_order(search ? cfg.s_max : 0);

    TokenBitCache bits_cache(cfg.key);
    RandomizerCache keys(cfg.key, code.k());
    std::optional<Codeword> cmax;
    if (cfg.diverse) cmax = code.max_weight_codeword();

    DetectionReport best;
    best.too_short = true;
    bool have_best = false;

    for (const int s : offsets) {
        const BitStream stream = extract_bits(seq, bits_cache, n, s, cfg.prompt_len);
        VoteResult votes;
        if (known_payload) {
            const auto [first, last] = stream.complete_blocks(static_cast<std::size_t>(n));
            for (std::size_t j = first; j < last; ++j)
                votes.blocks.push_back({j, code.safe_decode(stream.window(j, static_cast<std::size_t>(n)))});
            votes.winner = *known_payload;
        } else {
            votes = vote(stream, code, keys, cmax ? &*cmax : nullptr);
        }
        const std::size_t m_blocks = votes.blocks.size();
        if (m_blocks == 0) continue;

        DetectionReport rep;
        rep.best_offset = s;
        rep.blocks = m_blocks;
        rep.payload = votes.winner;
        const PlanMode plan_mode = cfg.diverse ? PlanMode::diverse : PlanMode::payload;
        for (const auto& bd : votes.blocks) {
            BlockReport br{bd.block, false, std::nullopt};
            if (bd.decoded) {
                br.distance = bd.decoded->distance;
                if (!designated) {
                    br.matched = true;
                } else if (votes.winner) {
                    const BlockPlan plan = plan_block(keys.get(bd.block), *votes.winner, code, plan_mode,
                                                      cmax ? &*cmax : nullptr);
                    br.matched = plan.accepts(bd.decoded->codeword);
                }
            }
            rep.matched += br.matched;
            rep.per_block.push_back(br);
        }
        // Strict improvement in matched ratio, compared exactly.
        if (!have_best || rep.matched * best.blocks > best.matched * rep.blocks) {
            best = std::move(rep);
            have_best = true;
        }
    }

    if (!have_best) return best;
    best.too_short = false;
    best.score = static_cast<double>(best.matched) / static_cast<double>(best.blocks);
    best.is_wm = best.matched >= cfg.threshold && (!cfg.min_ratio || best.score >= *cfg.min_ratio);
    if (!best.is_wm) best.payload.reset();
    return best;
}
}  // namespace detail

/// Blind detection: per offset, estimate the payload by voting, rebuild each
/// block's designated codeword and count exact decode matches. The offset
/// with the highest matched ratio wins (first in search order on ties), and
/// the text is watermarked iff its matched count reaches the threshold.
inline DetectionReport detect(const TokenSequence& seq, const DetectConfig& cfg) {
    return detail::run_detector(seq, cfg, nullptr);
}

/// Same search with the payload supplied instead of voted: the fixed
/// designated-codeword test.
inline DetectionReport verify(const TokenSequence& seq, const DetectConfig& cfg, const Message& payload) {
    if (static_cast<int>(payload.size()) != cfg.code.k()) throw ContractViolation("verify: payload length != k");
    return detail::run_detector(seq, cfg, &payload);
}

}  // namespace blockwm

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "generation.hpp"
#include "keying.hpp"

namespace blockwm {

enum class AttackKind { substitute, remove, insert, bitflip };

inline std::string_view to_string(AttackKind k) {
    switch (k) {
        case AttackKind::substitute: return "substitute";
        case AttackKind::remove: return "delete";
        case AttackKind::insert: return "insert";
        case AttackKind::bitflip: return "bitflip";
    }
    return "?";
}

inline AttackKind attack_kind_from_string(std::string_view s) {
    if (s == "substitute") return AttackKind::substitute;
    if (s == "delete") return AttackKind::remove;
    if (s == "insert") return AttackKind::insert;
    if (s == "bitflip") return AttackKind::bitflip;
    throw ContractViolation("unknown attack kind '" + std::string(s) + "'");
}

/// Keyed view needed by the bit-flip channel: it flips the keyed bit of a
/// token at nominal alignment, so it must know the key and block length.
struct BitflipKey {
    SecretKey key;
    int block_length = 0;
};

struct AttackSpec {
    AttackKind kind = AttackKind::substitute;
    double rate = 0.0;
    std::uint64_t rng_seed = 0;
    std::optional<BitflipKey> keyed;
};

class AttackConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Per-position Bernoulli(rate) edits:
///  - substitute: replace by a uniform random token;
///  - delete:     drop the token;
///  - insert:     emit a uniform random token after the current one;
///  - bitflip:    replace by a token whose keyed bit (block t / n) differs.
inline TokenSequence attack(const TokenSequence& seq, const AttackSpec& spec) {
    if (!(spec.rate >= 0.0 && spec.rate <= 1.0)) throw AttackConfigError("attack rate must lie in [0,1]");
    if (spec.kind == AttackKind::bitflip && (!spec.keyed || spec.keyed->block_length < 1))
        throw AttackConfigError("bitflip attack requires key material and a block length");
    if (seq.vocab_size < 2) throw AttackConfigError("attack needs a vocabulary of at least 2 tokens");

    Rng rng(spec.rng_seed);
    TokenSequence out;
    out.vocab_size = seq.vocab_size;
    out.tokens.reserve(seq.tokens.size() + seq.tokens.size() / 8 + 1);

    std::optional<BlockKey> bk;
    for (std::size_t t = 0; t < seq.tokens.size(); ++t) {
        const std::uint32_t tok = seq.tokens[t];
        const bool hit = rng.bernoulli(spec.rate);
        switch (spec.kind) {
            case AttackKind::substitute:
                out.tokens.push_back(hit ? static_cast<std::uint32_t>(rng.below(seq.vocab_size)) : tok);
                break;
            case AttackKind::remove:
                if (!hit) out.tokens.push_back(tok);
                break;
            case AttackKind::insert:
                out.tokens.push_back(tok);
                if (hit) out.tokens.push_back(static_cast<std::uint32_t>(rng.below(seq.vocab_size)));
                break;
            case AttackKind::bitflip: {
                if (!hit) {
                    out.tokens.push_back(tok);
                    break;
                }
                const std::uint64_t j = t / static_cast<std::size_t>(spec.keyed->block_length);
                if (!bk || bk->index != j) bk = derive_block_key(spec.keyed->key, j, 0);
                const std::uint8_t want = token_bit(*bk, tok) ^ 1U;
                std::uint32_t repl = tok;
                // Rejection sampling; a balanced partition needs ~2 draws.
                for (int tries = 0; tries < 4096; ++tries) {
                    const auto cand = static_cast<std::uint32_t>(rng.below(seq.vocab_size));
                    if (token_bit(*bk, cand) == want) {
                        repl = cand;
                        break;
                    }
                }
                out.tokens.push_back(repl);
                break;
            }
        }
    }
    return out;
}

/// Prepends r uniform random tokens: every block start moves by +r.
inline TokenSequence insert_prefix(const TokenSequence& seq, std::size_t r, std::uint64_t rng_seed) {
    Rng rng(rng_seed);
    TokenSequence out;
    out.vocab_size = seq.vocab_size;
    out.tokens.reserve(seq.tokens.size() + r);
    for (std::size_t i = 0; i < r; ++i) out.tokens.push_back(static_cast<std::uint32_t>(rng.below(seq.vocab_size)));
    out.tokens.insert(out.tokens.end(), seq.tokens.begin(), seq.tokens.end());
    return out;
}

/// Drops the first r tokens: every block start moves by -r.
inline TokenSequence delete_prefix(const TokenSequence& seq, std::size_t r) {
    TokenSequence out;
    out.vocab_size = seq.vocab_size;
    if (r < seq.tokens.size()) out.tokens.assign(seq.tokens.begin() + static_cast<std::ptrdiff_t>(r), seq.tokens.end());
    return out;
}

}  // namespace blockwm

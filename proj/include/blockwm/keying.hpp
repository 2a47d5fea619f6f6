#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/evp.h>

#include "bch.hpp"
#include "bits.hpp"

namespace blockwm {

using Digest = std::array<std::uint8_t, 32>;

/// Hash used for every keyed derivation. Must be deterministic and produce
/// 32 bytes; SHA-256 is the default.
using HashFunction = Digest (*)(std::span<const std::uint8_t>);

inline Digest sha256(std::span<const std::uint8_t> data) {
    struct CtxDeleter {
        void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
    };
    thread_local std::unique_ptr<EVP_MD_CTX, CtxDeleter> ctx(EVP_MD_CTX_new());
    Digest out{};
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), out.data(), &len) != 1 || len != out.size())
        throw std::runtime_error("SHA-256 evaluation failed");
    return out;
}

// Domain-separation bytes for the four derivations.
inline constexpr std::uint8_t kSeedDomain = 0x01;
inline constexpr std::uint8_t kTokenBitDomain = 0x02;
inline constexpr std::uint8_t kRandomizerDomain = 0x03;
inline constexpr std::uint8_t kDiverseChoiceDomain = 0x04;

class SecretKey {
public:
    SecretKey() = default;
    explicit SecretKey(const Digest& bytes) : bytes_(bytes) {}

    static SecretKey from_bytes(std::span<const std::uint8_t> bytes) {
        if (bytes.size() != 32) throw ContractViolation("secret key must be exactly 32 bytes");
        Digest d{};
        std::copy(bytes.begin(), bytes.end(), d.begin());
        return SecretKey(d);
    }

    /// 64 hex characters; surrounding whitespace is ignored.
    static SecretKey from_hex(std::string_view hex) {
        while (!hex.empty() && std::isspace(static_cast<unsigned char>(hex.front()))) hex.remove_prefix(1);
        while (!hex.empty() && std::isspace(static_cast<unsigned char>(hex.back()))) hex.remove_suffix(1);
        if (hex.size() != 64) throw ContractViolation("key must be 64 hex characters");
        auto nibble = [](char c) -> std::uint8_t {
            if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
            if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
            if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
            throw ContractViolation("key contains a non-hex character");
        };
        Digest d{};
        for (std::size_t i = 0; i < 32; ++i)
            d[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
        return SecretKey(d);
    }

    std::string to_hex() const { return hex_encode(bytes_); }

    const Digest& bytes() const noexcept { return bytes_; }

    static std::string hex_encode(std::span<const std::uint8_t> bytes) {
        static constexpr char kHex[] = "0123456789abcdef";
        std::string s;
        s.reserve(bytes.size() * 2);
        for (auto b : bytes) {
            s.push_back(kHex[b >> 4]);
            s.push_back(kHex[b & 0xF]);
        }
        return s;
    }

    friend bool operator==(const SecretKey&, const SecretKey&) = default;

private:
    Digest bytes_{};
};

/// Keyed material for one block j.
struct BlockKey {
    std::uint64_t index = 0;
    Digest seed{};
    Message randomizer;

    friend bool operator==(const BlockKey&, const BlockKey&) = default;
};

namespace detail {
inline void append_le(std::vector<std::uint8_t>& buf, std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
}  // namespace detail

/// seed_j = H(key || 0x01 || LE64(j)); randomizer = first k bits (LSB-first
/// within each byte) of H(seed_j || 0x03).
inline BlockKey derive_block_key(const SecretKey& key, std::uint64_t j, int k, HashFunction hash = sha256) {
    if (k < 0 || k > 256) throw ContractViolation("randomizer length must be in [0, 256]");
    std::vector<std::uint8_t> buf(key.bytes().begin(), key.bytes().end());
    buf.push_back(kSeedDomain);
    detail::append_le(buf, j, 8);
    BlockKey bk;
    bk.index = j;
    bk.seed = hash(buf);

    std::vector<std::uint8_t> rbuf(bk.seed.begin(), bk.seed.end());
    rbuf.push_back(kRandomizerDomain);
    const Digest r = hash(rbuf);
    bk.randomizer = Message(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) bk.randomizer.set(static_cast<std::size_t>(i), (r[static_cast<std::size_t>(i / 8)] >> (i % 8)) & 1U);
    return bk;
}

/// Keyed partition bit f_j(v): LSB of the first byte of H(seed_j || 0x02 || LE32(v)).
inline std::uint8_t token_bit(const Digest& seed, std::uint32_t token, HashFunction hash = sha256) {
    std::array<std::uint8_t, 37> buf{};
    std::copy(seed.begin(), seed.end(), buf.begin());
    buf[32] = kTokenBitDomain;
    for (int i = 0; i < 4; ++i) buf[33 + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(token >> (8 * i));
    return hash(buf)[0] & 1U;
}

inline std::uint8_t token_bit(const BlockKey& bk, std::uint32_t token, HashFunction hash = sha256) {
    return token_bit(bk.seed, token, hash);
}

/// Materialized partition f_j over [0, vocab_size): entry v is the list
/// (0 or 1) that token v belongs to.
class VocabPartition {
public:
    VocabPartition(const BlockKey& bk, std::uint32_t vocab_size, HashFunction hash = sha256)
        : membership_(vocab_size) {
        for (std::uint32_t v = 0; v < vocab_size; ++v) membership_[v] = token_bit(bk, v, hash);
    }

    std::uint32_t vocab_size() const noexcept { return static_cast<std::uint32_t>(membership_.size()); }
    std::uint8_t bit(std::uint32_t v) const { return membership_.at(v); }
    std::span<const std::uint8_t> membership() const noexcept { return membership_; }

    /// |L_z|
    std::size_t list_size(std::uint8_t z) const noexcept {
        return static_cast<std::size_t>(std::count(membership_.begin(), membership_.end(), z & 1U));
    }

private:
    std::vector<std::uint8_t> membership_;
};

enum class PlanMode { payload, diverse };

/// Designated codeword(s) for one block and the bits actually embedded.
struct BlockPlan {
    Codeword primary;                  // E(payload ^ r_j)
    std::optional<Codeword> partner;   // diverse mode only: primary ^ c_max (or primary if that is zero)
    Codeword target_bits;

    bool accepts(const Codeword& c) const { return c == primary || (partner && c == *partner); }

    friend bool operator==(const BlockPlan&, const BlockPlan&) = default;
};

/// Payload mode embeds E(payload ^ r_j). Diverse mode forms the pair
/// {c1, c1 ^ c_max}, replaces a zero partner by c1, and embeds the element
/// picked by the keyed bit H(seed_j || 0x04).
inline BlockPlan plan_block(const BlockKey& bk, const Message& payload, const BchCode& code, PlanMode mode,
                            const Codeword* max_weight = nullptr, HashFunction hash = sha256) {
    if (static_cast<int>(payload.size()) != code.k()) throw ContractViolation("plan_block: payload length != k");
    if (bk.randomizer.size() != payload.size()) throw ContractViolation("plan_block: block key built for another k");
    BlockPlan plan;
    plan.primary = code.encode(payload ^ bk.randomizer);
    if (mode == PlanMode::payload) {
        plan.target_bits = plan.primary;
        return plan;
    }
    const Codeword cmax = max_weight ? *max_weight : code.max_weight_codeword();
    Codeword c2 = plan.primary ^ cmax;
    if (c2.is_zero()) c2 = plan.primary;
    plan.partner = c2;
    std::vector<std::uint8_t> buf(bk.seed.begin(), bk.seed.end());
    buf.push_back(kDiverseChoiceDomain);
    // A zero primary (payload == r_j) would embed nothing; use the partner.
    const bool pick_partner = plan.primary.is_zero() || (hash(buf)[0] & 1U);
    plan.target_bits = pick_partner ? c2 : plan.primary;
    return plan;
}

inline BlockPlan plan_block(const SecretKey& key, std::uint64_t j, const Message& payload, const BchCode& code,
                            PlanMode mode) {
    return plan_block(derive_block_key(key, j, code.k()), payload, code, mode);
}

}  // namespace blockwm

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bits.hpp"
#include "gf2m.hpp"

namespace blockwm {

struct CodeParams {
    int n;
    int k;
    int t;
    friend bool operator==(const CodeParams&, const CodeParams&) = default;
};

/// The (n,k,t) instances shipped with the library.
inline constexpr std::array<CodeParams, 6> kNamedCodes{{
    {15, 5, 3},
    {31, 6, 7},
    {63, 7, 15},
    {31, 16, 3},
    {63, 45, 3},
    {127, 92, 5},
}};

struct DecodeResult {
    Codeword codeword;
    std::size_t distance;
};

/// Binary narrow-sense primitive BCH code of length n = 2^m - 1 correcting
/// t errors.
///
/// Encoding is systematic: the codeword polynomial is
/// c(x) = msg(x) * x^(n-k) + (msg(x) * x^(n-k) mod g(x)), so message bit i
/// sits at codeword index n-k+i and parity occupies indices 0..n-k-1.
///
/// Decoding is syndrome computation, Berlekamp-Massey and a Chien search,
/// followed by a membership check. It never returns a codeword farther than
/// t from the received word.
class BchCode {
public:
    BchCode(int m, int t) : field_(m), n_(field_.order()), t_(t) {
        if (t < 1 || 2 * t >= n_) throw ContractViolation("BCH designed radius out of range");
        build_generator();
        k_ = n_ - static_cast<int>(generator_.size()) + 1;
        if (k_ < 1) throw ContractViolation("BCH code has no information bits");
    }

    /// Looks up one of the shipped instances by its (n,k,t) triple.
    static BchCode named(int n, int k, int t) {
        int m = 0;
        while ((1 << m) - 1 < n) ++m;
        if ((1 << m) - 1 != n) throw ContractViolation("BCH length must be 2^m - 1");
        BchCode code(m, t);
        if (code.k() != k)
            throw ContractViolation("no BCH(" + std::to_string(n) + "," + std::to_string(k) + "," +
                                    std::to_string(t) + ") code; dimension would be " +
                                    std::to_string(code.k()));
        return code;
    }

    static BchCode named(const CodeParams& p) { return named(p.n, p.k, p.t); }

    int n() const noexcept { return n_; }
    int k() const noexcept { return k_; }
    int t() const noexcept { return t_; }
    /// Design distance 2t+1 (the true minimum distance can be larger).
    int design_distance() const noexcept { return 2 * t_ + 1; }
    CodeParams params() const noexcept { return {n_, k_, t_}; }
    const FieldGF2m& field() const noexcept { return field_; }
    /// g(x) coefficients, index i = coefficient of x^i; degree n-k.
    const std::vector<std::uint8_t>& generator_polynomial() const noexcept { return generator_; }

    Codeword encode(const Message& msg) const {
        if (static_cast<int>(msg.size()) != k_)
            throw ContractViolation("encode: message length " + std::to_string(msg.size()) +
                                    " != k = " + std::to_string(k_));
        const int r = n_ - k_;
        std::vector<std::uint8_t> poly(static_cast<std::size_t>(n_), 0);
        for (int i = 0; i < k_; ++i) poly[static_cast<std::size_t>(r + i)] = msg[static_cast<std::size_t>(i)];
        auto rem = remainder(poly);
        for (int i = 0; i < r; ++i) poly[static_cast<std::size_t>(i)] = rem[static_cast<std::size_t>(i)];
        return Codeword(std::move(poly));
    }

    template <typename Tag>
    bool is_codeword(const Bits<Tag>& word) const {
        if (static_cast<int>(word.size()) != n_) return false;
        auto rem = remainder(word.raw());
        for (auto b : rem)
            if (b) return false;
        return true;
    }

    Message message_of(const Codeword& cw) const {
        if (!is_codeword(cw)) throw ContractViolation("message_of: input is not a codeword");
        Message msg(static_cast<std::size_t>(k_));
        for (int i = 0; i < k_; ++i)
            msg.set(static_cast<std::size_t>(i), cw[static_cast<std::size_t>(n_ - k_ + i)]);
        return msg;
    }

    /// Unique codeword within distance t of `received`, or nullopt.
    template <typename Tag>
    std::optional<DecodeResult> safe_decode(const Bits<Tag>& received) const {
        if (static_cast<int>(received.size()) != n_)
            throw ContractViolation("safe_decode: received length != n");
        return decode_raw(received.raw());
    }

    /// Maximum-weight codeword; ties go to the smallest message integer.
    Codeword max_weight_codeword() const {
        Codeword ones(std::vector<std::uint8_t>(static_cast<std::size_t>(n_), 1));
        if (is_codeword(ones)) return ones;
        if (k_ > 24) throw ContractViolation("max_weight_codeword: exhaustive search too large");
        Codeword best = encode(Message(static_cast<std::size_t>(k_)));
        std::size_t best_w = 0;
        for (std::uint64_t v = 1; v < (std::uint64_t{1} << k_); ++v) {
            auto c = encode(Message::from_uint(v, static_cast<std::size_t>(k_)));
            if (c.weight() > best_w) {
                best_w = c.weight();
                best = std::move(c);
            }
        }
        return best;
    }

private:
    using Elem = FieldGF2m::Element;

    void build_generator() {
        // Product of the minimal polynomials of alpha^1 .. alpha^(2t).
        std::vector<bool> used(static_cast<std::size_t>(n_), false);
        std::vector<std::uint8_t> g{1};
        for (int i = 1; i <= 2 * t_; ++i) {
            if (used[static_cast<std::size_t>(i % n_)]) continue;
            std::vector<Elem> minpoly{1};
            int e = i % n_;
            do {
                used[static_cast<std::size_t>(e)] = true;
                // minpoly *= (x + alpha^e)
                const Elem root = field_.exp(e);
                std::vector<Elem> next(minpoly.size() + 1, 0);
                for (std::size_t d = 0; d < minpoly.size(); ++d) {
                    next[d + 1] ^= minpoly[d];
                    next[d] ^= field_.mul(minpoly[d], root);
                }
                minpoly = std::move(next);
                e = (2 * e) % n_;
            } while (e != i % n_);
            std::vector<std::uint8_t> prod(g.size() + minpoly.size() - 1, 0);
            for (std::size_t a = 0; a < g.size(); ++a) {
                if (!g[a]) continue;
                for (std::size_t b = 0; b < minpoly.size(); ++b) {
                    if (minpoly[b] > 1) throw ContractViolation("minimal polynomial is not binary");
                    prod[a + b] ^= static_cast<std::uint8_t>(minpoly[b]);
                }
            }
            g = std::move(prod);
        }
        generator_ = std::move(g);
    }

    /// poly(x) mod g(x); returns n-k coefficients.
    std::vector<std::uint8_t> remainder(std::vector<std::uint8_t> poly) const {
        const std::size_t deg = generator_.size() - 1;
        for (std::size_t i = poly.size(); i-- > deg;) {
            if (!poly[i]) continue;
            for (std::size_t j = 0; j <= deg; ++j) poly[i - deg + j] ^= generator_[j];
        }
        poly.resize(deg);
        return poly;
    }

    std::optional<DecodeResult> decode_raw(const std::vector<std::uint8_t>& r) const {
        const int two_t = 2 * t_;
        std::vector<Elem> syn(static_cast<std::size_t>(two_t + 1), 0);
        bool all_zero = true;
        for (int i = 1; i <= two_t; ++i) {
            Elem s = 0;
            for (int j = 0; j < n_; ++j)
                if (r[static_cast<std::size_t>(j)]) s ^= field_.exp(i * j);
            syn[static_cast<std::size_t>(i)] = s;
            all_zero = all_zero && s == 0;
        }
        if (all_zero) return DecodeResult{Codeword(r), 0};

        // Berlekamp-Massey: shortest LFSR C(x) generating the syndromes.
        std::vector<Elem> c(static_cast<std::size_t>(two_t + 2), 0), b(c.size(), 0);
        c[0] = 1;
        b[0] = 1;
        int len = 0;
        int shift = 1;
        Elem b_disc = 1;
        for (int step = 0; step < two_t; ++step) {
            Elem d = syn[static_cast<std::size_t>(step + 1)];
            for (int i = 1; i <= len; ++i)
                d ^= field_.mul(c[static_cast<std::size_t>(i)], syn[static_cast<std::size_t>(step + 1 - i)]);
            if (d == 0) {
                ++shift;
                continue;
            }
            const Elem coef = field_.div(d, b_disc);
            if (2 * len <= step) {
                auto prev = c;
                for (std::size_t i = 0; i + static_cast<std::size_t>(shift) < c.size(); ++i)
                    c[i + static_cast<std::size_t>(shift)] ^= field_.mul(coef, b[i]);
                len = step + 1 - len;
                b = std::move(prev);
                b_disc = d;
                shift = 1;
            } else {
                for (std::size_t i = 0; i + static_cast<std::size_t>(shift) < c.size(); ++i)
                    c[i + static_cast<std::size_t>(shift)] ^= field_.mul(coef, b[i]);
                ++shift;
            }
        }
        if (len > t_) return std::nullopt;

        // Chien search: position p is in error iff C(alpha^-p) = 0.
        std::vector<std::uint8_t> corrected = r;
        int roots = 0;
        for (int p = 0; p < n_; ++p) {
            Elem v = 0;
            for (int i = 0; i <= len; ++i)
                v ^= field_.mul(c[static_cast<std::size_t>(i)], field_.exp(-p * i));
            if (v == 0) {
                corrected[static_cast<std::size_t>(p)] ^= 1U;
                ++roots;
            }
        }
        if (roots != len) return std::nullopt;
        Codeword cw(std::move(corrected));
        if (!is_codeword(cw)) return std::nullopt;
        return DecodeResult{std::move(cw), static_cast<std::size_t>(len)};
    }

    FieldGF2m field_;
    int n_;
    int k_ = 0;
    int t_;
    std::vector<std::uint8_t> generator_;
};

}  // namespace blockwm

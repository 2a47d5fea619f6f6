#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace blockwm {

/// Thrown when an operation is called outside its documented contract
/// (wrong lengths, non-codeword input, malformed parameters).
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Fixed-length binary vector. Index i holds the coefficient of x^i when
/// the vector is read as a polynomial over GF(2), and bit i of the value
/// when it is read as an unsigned integer.
///
/// The tag parameter keeps messages, codewords and raw received words
/// from being mixed up by accident; `retag` converts explicitly.
template <typename Tag>
class Bits {
public:
    Bits() = default;
    explicit Bits(std::size_t n) : bits_(n, 0) {}
    Bits(std::initializer_list<int> init) {
        bits_.reserve(init.size());
        for (int b : init) bits_.push_back(static_cast<std::uint8_t>(b & 1));
    }
    explicit Bits(std::vector<std::uint8_t> raw) : bits_(std::move(raw)) {
        for (auto& b : bits_) b &= 1U;
    }

    /// Little-endian integer view: bit i of `value` goes to index i.
    static Bits from_uint(std::uint64_t value, std::size_t n) {
        Bits out(n);
        for (std::size_t i = 0; i < n && i < 64; ++i) out.bits_[i] = (value >> i) & 1U;
        return out;
    }

    /// Parses a string of '0'/'1' characters, index 0 first.
    static Bits from_string(std::string_view s) {
        Bits out(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] != '0' && s[i] != '1')
                throw ContractViolation("bit string may only contain '0' and '1'");
            out.bits_[i] = s[i] == '1';
        }
        return out;
    }

    template <typename Other>
    Bits<Other> retag() const {
        return Bits<Other>(bits_);
    }

    std::size_t size() const noexcept { return bits_.size(); }
    bool empty() const noexcept { return bits_.empty(); }

    std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
    void set(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }
    void flip(std::size_t i) { bits_[i] ^= 1U; }

    const std::vector<std::uint8_t>& raw() const noexcept { return bits_; }

    std::size_t weight() const noexcept {
        return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
    }

    bool is_zero() const noexcept { return weight() == 0; }

    /// Low 64 bits as an unsigned integer.
    std::uint64_t to_uint() const noexcept {
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < bits_.size() && i < 64; ++i)
            v |= static_cast<std::uint64_t>(bits_[i]) << i;
        return v;
    }

    std::string to_string() const {
        std::string s(bits_.size(), '0');
        for (std::size_t i = 0; i < bits_.size(); ++i)
            if (bits_[i]) s[i] = '1';
        return s;
    }

    Bits& operator^=(const Bits& other) {
        if (other.size() != size()) throw ContractViolation("xor of bit vectors with different lengths");
        for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] ^= other.bits_[i];
        return *this;
    }

    friend Bits operator^(Bits a, const Bits& b) { return a ^= b; }

    friend bool operator==(const Bits&, const Bits&) = default;

    /// Orders equal-length vectors as unsigned integers (highest index is the
    /// most significant bit). Shorter vectors sort first.
    friend std::strong_ordering operator<=>(const Bits& a, const Bits& b) {
        if (a.size() != b.size()) return a.size() <=> b.size();
        for (std::size_t i = a.size(); i-- > 0;) {
            if (a.bits_[i] != b.bits_[i]) return a.bits_[i] <=> b.bits_[i];
        }
        return std::strong_ordering::equal;
    }

private:
    std::vector<std::uint8_t> bits_;
};

struct MessageTag {};
struct CodewordTag {};
struct WordTag {};

/// k-bit payload (or randomizer mask).
using Message = Bits<MessageTag>;
/// n-bit member of a code.
using Codeword = Bits<CodewordTag>;
/// Arbitrary n-bit received vector.
using Word = Bits<WordTag>;

template <typename A, typename B>
std::size_t hamming_distance(const Bits<A>& a, const Bits<B>& b) {
    if (a.size() != b.size()) throw ContractViolation("hamming distance of vectors with different lengths");
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] ^ b[i]);
    return d;
}

}  // namespace blockwm

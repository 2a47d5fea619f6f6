#pragma once

#include <cstdint>
#include <vector>

#include "bits.hpp"

namespace blockwm {

/// Default primitive polynomial for GF(2^m), bit i = coefficient of x^i.
inline std::uint32_t default_primitive_polynomial(int m) {
    switch (m) {
        case 4: return 0b10011;           // x^4 + x + 1
        case 5: return 0b100101;          // x^5 + x^2 + 1
        case 6: return 0b1000011;         // x^6 + x + 1
        case 7: return 0b10001001;        // x^7 + x^3 + 1
        case 8: return 0b100011101;       // x^8 + x^4 + x^3 + x^2 + 1
        default: throw ContractViolation("GF(2^m) supported for 4 <= m <= 8");
    }
}

/// GF(2^m) with log/antilog tables. Elements are integers in [0, 2^m),
/// bit i holding the coefficient of alpha^i in the polynomial basis.
class FieldGF2m {
public:
    using Element = std::uint16_t;

    explicit FieldGF2m(int m) : FieldGF2m(m, default_primitive_polynomial(m)) {}

    FieldGF2m(int m, std::uint32_t primitive_polynomial)
        : m_(m), poly_(primitive_polynomial), order_((1 << m) - 1) {
        if (m < 4 || m > 8) throw ContractViolation("GF(2^m) supported for 4 <= m <= 8");
        if ((primitive_polynomial >> m) != 1U)
            throw ContractViolation("primitive polynomial must have degree m");
        antilog_.assign(static_cast<std::size_t>(2 * order_), 0);
        log_.assign(static_cast<std::size_t>(order_ + 1), -1);
        std::uint32_t x = 1;
        for (int i = 0; i < order_; ++i) {
            if (log_[x] != -1) throw ContractViolation("polynomial is not primitive");
            antilog_[static_cast<std::size_t>(i)] = static_cast<Element>(x);
            log_[x] = i;
            x <<= 1;
            if (x & (1U << m)) x ^= primitive_polynomial;
        }
        if (x != 1) throw ContractViolation("polynomial is not primitive");
        // Second period so exp lookups can skip a modulo.
        for (int i = order_; i < 2 * order_; ++i)
            antilog_[static_cast<std::size_t>(i)] = antilog_[static_cast<std::size_t>(i - order_)];
    }

    int m() const noexcept { return m_; }
    /// Multiplicative group order 2^m - 1.
    int order() const noexcept { return order_; }
    std::uint32_t primitive_polynomial() const noexcept { return poly_; }

    /// alpha^e for any integer exponent.
    Element exp(int e) const noexcept {
        e %= order_;
        if (e < 0) e += order_;
        return antilog_[static_cast<std::size_t>(e)];
    }

    /// Discrete log of a nonzero element.
    int log(Element x) const {
        if (x == 0) throw ContractViolation("log of zero");
        return log_[x];
    }

    static Element add(Element a, Element b) noexcept { return static_cast<Element>(a ^ b); }

    Element mul(Element a, Element b) const noexcept {
        if (a == 0 || b == 0) return 0;
        return antilog_[static_cast<std::size_t>(log_[a] + log_[b])];
    }

    Element inv(Element a) const {
        if (a == 0) throw ContractViolation("inverse of zero");
        return antilog_[static_cast<std::size_t>((order_ - log_[a]) % order_)];
    }

    Element div(Element a, Element b) const { return mul(a, inv(b)); }

    Element pow(Element a, int e) const noexcept {
        if (a == 0) return e == 0 ? 1 : 0;
        long long l = static_cast<long long>(log_[a]) * e % order_;
        if (l < 0) l += order_;
        return antilog_[static_cast<std::size_t>(l)];
    }

private:
    int m_;
    std::uint32_t poly_;
    int order_;
    std::vector<Element> antilog_;
    std::vector<int> log_;
};

}  // namespace blockwm

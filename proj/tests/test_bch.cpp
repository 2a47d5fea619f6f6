#include <gtest/gtest.h>

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "blockwm/bch.hpp"
#include "blockwm/gf2m.hpp"

using namespace blockwm;

namespace {

// Test-only oracle for BCH(15,5,3): the code is every multiple m(x) g(x) of
// the textbook generator g(x) = x^10 + x^8 + x^5 + x^4 + x^2 + x + 1 (for
// the field built on x^4 + x + 1), packed into a 15-bit integer.
constexpr std::uint32_t kG15 = 0b10100110111;

std::vector<std::uint32_t> oracle_codewords_15_5() {
    std::vector<std::uint32_t> out;
    for (std::uint32_t m = 0; m < 32; ++m) {
        std::uint32_t c = 0;
        for (int i = 0; i < 5; ++i)
            if (m >> i & 1U) c ^= kG15 << i;
        out.push_back(c);
    }
    return out;
}

std::uint32_t pack(const Word& w) {
    std::uint32_t v = 0;
    for (std::size_t i = 0; i < w.size(); ++i) v |= static_cast<std::uint32_t>(w[i]) << i;
    return v;
}

Word unpack(std::uint32_t v, std::size_t n) { return Word::from_uint(v, n); }

struct Nearest {
    std::uint32_t codeword;
    int distance;
    bool unique;
};

Nearest nearest(std::uint32_t r, const std::vector<std::uint32_t>& code) {
    Nearest best{0, 99, false};
    for (auto c : code) {
        const int d = __builtin_popcount(r ^ c);
        if (d < best.distance) best = {c, d, true};
        else if (d == best.distance) best.unique = false;
    }
    return best;
}

}  // namespace

TEST(FieldGF2m, LogAntilogRoundTripAndInverses) {
    for (int m = 4; m <= 8; ++m) {
        FieldGF2m f(m);
        for (int x = 1; x <= f.order(); ++x) {
            const auto e = static_cast<FieldGF2m::Element>(x);
            EXPECT_EQ(f.exp(f.log(e)), e);
            EXPECT_EQ(f.mul(e, f.inv(e)), 1);
        }
        EXPECT_EQ(f.exp(f.order()), 1);
        EXPECT_EQ(f.exp(-1), f.exp(f.order() - 1));
    }
}

TEST(FieldGF2m, MultiplicationCommutesAndAssociates) {
    FieldGF2m f(5);
    std::mt19937 rng(3);
    for (int i = 0; i < 2000; ++i) {
        const auto a = static_cast<FieldGF2m::Element>(rng() % 32);
        const auto b = static_cast<FieldGF2m::Element>(rng() % 32);
        const auto c = static_cast<FieldGF2m::Element>(rng() % 32);
        EXPECT_EQ(f.mul(a, b), f.mul(b, a));
        EXPECT_EQ(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
        EXPECT_EQ(f.mul(a, FieldGF2m::add(b, c)), FieldGF2m::add(f.mul(a, b), f.mul(a, c)));
    }
}

TEST(FieldGF2m, RejectsNonPrimitivePolynomial) {
    EXPECT_THROW(FieldGF2m(4, 0b11111), ContractViolation);  // x^4+x^3+x^2+x+1 has order 5
    EXPECT_THROW(FieldGF2m(3), ContractViolation);
}

TEST(BchCode, NamedInstancesHaveExpectedDimensions) {
    for (const auto& p : kNamedCodes) {
        const auto code = BchCode::named(p);
        EXPECT_EQ(code.n(), p.n);
        EXPECT_EQ(code.k(), p.k);
        EXPECT_EQ(code.t(), p.t);
        EXPECT_EQ(static_cast<int>(code.generator_polynomial().size()) - 1, p.n - p.k);
    }
    EXPECT_THROW(BchCode::named(31, 7, 7), ContractViolation);
    EXPECT_THROW(BchCode::named(30, 6, 7), ContractViolation);
}

TEST(BchCode, GeneratorMatchesTextbookPolynomial) {
    const auto code = BchCode::named(15, 5, 3);
    std::uint32_t g = 0;
    const auto& gp = code.generator_polynomial();
    for (std::size_t i = 0; i < gp.size(); ++i) g |= static_cast<std::uint32_t>(gp[i]) << i;
    EXPECT_EQ(g, kG15);
}

TEST(BchEncode, ZeroMessageGivesZeroCodeword) {
    const auto code = BchCode::named(15, 5, 3);
    EXPECT_TRUE(code.encode(Message(5)).is_zero());
}

TEST(BchEncode, RejectsWrongLength) {
    const auto code = BchCode::named(15, 5, 3);
    EXPECT_THROW(code.encode(Message(6)), ContractViolation);
}

TEST(BchEncode, CodewordsMatchOracleSetWithMinimumDistanceSeven) {
    const auto code = BchCode::named(15, 5, 3);
    const auto oracle = oracle_codewords_15_5();
    const std::set<std::uint32_t> oracle_set(oracle.begin(), oracle.end());
    std::vector<std::uint32_t> enc;
    for (std::uint64_t m = 0; m < 32; ++m) {
        const auto c = code.encode(Message::from_uint(m, 5));
        EXPECT_TRUE(oracle_set.count(pack(c.retag<WordTag>())));
        enc.push_back(pack(c.retag<WordTag>()));
    }
    int dmin = 99;
    for (std::size_t a = 0; a < enc.size(); ++a)
        for (std::size_t b = a + 1; b < enc.size(); ++b) dmin = std::min(dmin, __builtin_popcount(enc[a] ^ enc[b]));
    EXPECT_EQ(dmin, 7);
}

TEST(BchEncode, IsLinearOn31_6_7) {
    const auto code = BchCode::named(31, 6, 7);
    std::mt19937_64 rng(11);
    for (int i = 0; i < 100; ++i) {
        const auto a = Message::from_uint(rng() % 64, 6), b = Message::from_uint(rng() % 64, 6);
        EXPECT_EQ(code.encode(a ^ b), code.encode(a) ^ code.encode(b));
    }
}

TEST(BchEncode, SystematicSliceHoldsMessage) {
    const auto code = BchCode::named(31, 16, 3);
    const auto m = Message::from_uint(0xBEEF, 16);
    const auto c = code.encode(m);
    for (int i = 0; i < 16; ++i) EXPECT_EQ(c[static_cast<std::size_t>(31 - 16 + i)], m[static_cast<std::size_t>(i)]);
}

TEST(BchMessageOf, RoundTripsEveryMessageOf31_6_7) {
    const auto code = BchCode::named(31, 6, 7);
    for (std::uint64_t v = 0; v < 64; ++v) {
        const auto m = Message::from_uint(v, 6);
        EXPECT_EQ(code.message_of(code.encode(m)), m);
    }
    EXPECT_TRUE(code.message_of(Codeword(31)).is_zero());
}

TEST(BchMessageOf, IsLinearAndRejectsNonCodewords) {
    const auto code = BchCode::named(31, 6, 7);
    const auto a = Message::from_uint(13, 6), b = Message::from_uint(42, 6);
    EXPECT_EQ(code.message_of(code.encode(a) ^ code.encode(b)), a ^ b);
    auto bad = code.encode(a);
    bad.flip(0);
    EXPECT_THROW(code.message_of(bad), ContractViolation);
}

TEST(BchSafeDecode, ZeroErrorCase) {
    for (const auto& p : kNamedCodes) {
        const auto code = BchCode::named(p);
        Message m(static_cast<std::size_t>(p.k));
        m.set(0, true);
        const auto c = code.encode(m);
        const auto r = code.safe_decode(c);
        ASSERT_TRUE(r);
        EXPECT_EQ(r->codeword, c);
        EXPECT_EQ(r->distance, 0U);
    }
}

TEST(BchSafeDecode, ExhaustiveWithinRadiusOn15_5_3) {
    const auto code = BchCode::named(15, 5, 3);
    const auto oracle = oracle_codewords_15_5();
    std::vector<std::uint32_t> patterns;
    for (std::uint32_t e = 0; e < (1U << 15); ++e)
        if (__builtin_popcount(e) <= 3) patterns.push_back(e);
    ASSERT_EQ(patterns.size(), 576U);
    for (auto c : oracle) {
        for (auto e : patterns) {
            const auto r = code.safe_decode(unpack(c ^ e, 15));
            ASSERT_TRUE(r) << "c=" << c << " e=" << e;
            EXPECT_EQ(pack(r->codeword.retag<WordTag>()), c);
            EXPECT_EQ(r->distance, static_cast<std::size_t>(__builtin_popcount(e)));
        }
    }
}

TEST(BchSafeDecode, EveryWordOf15_5_3AgreesWithOracle) {
    const auto code = BchCode::named(15, 5, 3);
    const auto oracle = oracle_codewords_15_5();
    std::size_t refused = 0;
    for (std::uint32_t r = 0; r < (1U << 15); ++r) {
        const auto near = nearest(r, oracle);
        const auto got = code.safe_decode(unpack(r, 15));
        if (near.distance <= 3) {
            ASSERT_TRUE(got);
            EXPECT_EQ(pack(got->codeword.retag<WordTag>()), near.codeword);
        } else {
            EXPECT_FALSE(got) << "r=" << r;
            ++refused;
        }
    }
    EXPECT_EQ(refused, (1U << 15) - 32U * 576U);
}

TEST(BchSafeDecode, RefusesBeyondRadiusOnRandomVectors15_5_3) {
    const auto code = BchCode::named(15, 5, 3);
    const auto oracle = oracle_codewords_15_5();
    std::mt19937 rng(2024);
    int tested = 0;
    while (tested < 10000) {
        const std::uint32_t r = rng() & 0x7FFF;
        if (nearest(r, oracle).distance <= 3) continue;
        ++tested;
        EXPECT_FALSE(code.safe_decode(unpack(r, 15)));
    }
}

namespace {
void sampled_unique_decoding(int n, int k, int t, int samples, std::uint64_t seed) {
    const auto code = BchCode::named(n, k, t);
    std::mt19937_64 rng(seed);
    for (int s = 0; s < samples; ++s) {
        Message m(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) m.set(static_cast<std::size_t>(i), rng() & 1U);
        const auto c = code.encode(m);
        const int w = static_cast<int>(rng() % static_cast<std::uint64_t>(t + 1));
        std::vector<int> pos(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) pos[static_cast<std::size_t>(i)] = i;
        std::shuffle(pos.begin(), pos.end(), rng);
        Word r = c.retag<WordTag>();
        for (int i = 0; i < w; ++i) r.flip(static_cast<std::size_t>(pos[static_cast<std::size_t>(i)]));
        const auto got = code.safe_decode(r);
        ASSERT_TRUE(got);
        ASSERT_EQ(got->codeword, c);
        ASSERT_EQ(got->distance, static_cast<std::size_t>(w));
    }
}
}  // namespace

TEST(BchSafeDecode, SampledUniqueDecoding31_6_7) { sampled_unique_decoding(31, 6, 7, 100000, 7); }
TEST(BchSafeDecode, SampledUniqueDecoding63_7_15) { sampled_unique_decoding(63, 7, 15, 100000, 8); }
TEST(BchSafeDecode, SampledUniqueDecoding127_92_5) { sampled_unique_decoding(127, 92, 5, 5000, 9); }

TEST(BchSafeDecode, NeverReturnsCodewordBeyondRadius) {
    // Random words for the larger codes: whatever comes back must be a
    // codeword at the reported distance, and that distance is <= t.
    for (auto p : {CodeParams{31, 6, 7}, CodeParams{63, 7, 15}, CodeParams{31, 16, 3}}) {
        const auto code = BchCode::named(p);
        std::mt19937_64 rng(static_cast<std::uint64_t>(p.n * 100 + p.t));
        for (int s = 0; s < 20000; ++s) {
            Word r(static_cast<std::size_t>(p.n));
            for (int i = 0; i < p.n; ++i) r.set(static_cast<std::size_t>(i), rng() & 1U);
            if (auto got = code.safe_decode(r)) {
                EXPECT_TRUE(code.is_codeword(got->codeword));
                EXPECT_EQ(hamming_distance(got->codeword, r), got->distance);
                EXPECT_LE(got->distance, static_cast<std::size_t>(p.t));
            }
        }
    }
}

TEST(BchSafeDecode, RejectsWrongLength) {
    const auto code = BchCode::named(15, 5, 3);
    EXPECT_THROW(code.safe_decode(Word(14)), ContractViolation);
}

TEST(BchMaxWeight, MatchesExhaustiveScanOn15_5_3) {
    const auto code = BchCode::named(15, 5, 3);
    int best = 0;
    for (auto c : oracle_codewords_15_5()) best = std::max(best, __builtin_popcount(c));
    const auto c = code.max_weight_codeword();
    EXPECT_EQ(static_cast<int>(c.weight()), best);
    EXPECT_TRUE((c ^ c).is_zero());
}

TEST(BchMaxWeight, AllOnesForShippedCodes) {
    for (const auto& p : kNamedCodes) {
        const auto c = BchCode::named(p).max_weight_codeword();
        EXPECT_EQ(static_cast<int>(c.weight()), p.n);
    }
}

#include <cmath>

#include <gtest/gtest.h>

#include "blockwm/blockwm.hpp"

using namespace blockwm;

namespace {

const SecretKey kKey = SecretKey::from_hex("a3f1c2e4b5d6978812345678deadbeef0badc0ffee11223344556677889900aa");

TokenSequence random_text(std::size_t len, std::uint32_t vocab, std::uint64_t seed) {
    return sample_unwatermarked(UniformSource(vocab), len, seed);
}

}  // namespace

TEST(Attack, ZeroRateIsIdentity) {
    const auto seq = random_text(500, 300, 1);
    for (AttackKind k : {AttackKind::substitute, AttackKind::remove, AttackKind::insert}) {
        EXPECT_EQ(attack(seq, AttackSpec{k, 0.0, 9, std::nullopt}), seq) << to_string(k);
    }
    EXPECT_EQ(attack(seq, AttackSpec{AttackKind::bitflip, 0.0, 9, BitflipKey{kKey, 31}}), seq);
}

TEST(Attack, DeleteRemovesExpectedFraction) {
    const auto seq = random_text(20000, 300, 2);
    const auto out = attack(seq, AttackSpec{AttackKind::remove, 0.1, 3, std::nullopt});
    const double removed = 20000.0 - static_cast<double>(out.tokens.size());
    EXPECT_NEAR(removed, 2000.0, 3 * std::sqrt(20000 * 0.1 * 0.9));
}

TEST(Attack, InsertAddsExpectedFraction) {
    const auto seq = random_text(20000, 300, 2);
    const auto out = attack(seq, AttackSpec{AttackKind::insert, 0.05, 4, std::nullopt});
    const double added = static_cast<double>(out.tokens.size()) - 20000.0;
    EXPECT_NEAR(added, 1000.0, 3 * std::sqrt(20000 * 0.05 * 0.95));
    EXPECT_TRUE(out.valid());
}

TEST(Attack, SubstituteKeepsLengthAndFlipsAboutHalfOfHitBits) {
    const std::size_t L = 31 * 1000;
    const double p = 0.2;
    const auto seq = random_text(L, 1024, 5);
    const auto out = attack(seq, AttackSpec{AttackKind::substitute, p, 6, std::nullopt});
    ASSERT_EQ(out.tokens.size(), L);
    const auto a = extract_bits(seq, kKey, 31, 0);
    const auto b = extract_bits(out, kKey, 31, 0);
    std::size_t flips = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i) flips += a.bits[i] != b.bits[i];
    const double rate = static_cast<double>(flips) / static_cast<double>(L);
    EXPECT_NEAR(rate, p / 2, 3 * std::sqrt(p / 2 * (1 - p / 2) / static_cast<double>(L)) + 0.002);
}

TEST(Attack, BitflipFlipsEveryHitBit) {
    const std::size_t L = 31 * 200;
    const auto seq = random_text(L, 512, 7);
    const auto out = attack(seq, AttackSpec{AttackKind::bitflip, 0.1, 8, BitflipKey{kKey, 31}});
    ASSERT_EQ(out.tokens.size(), L);
    const auto a = extract_bits(seq, kKey, 31, 0);
    const auto b = extract_bits(out, kKey, 31, 0);
    std::size_t flips = 0, changed = 0;
    for (std::size_t i = 0; i < L; ++i) {
        flips += a.bits[i] != b.bits[i];
        changed += seq.tokens[i] != out.tokens[i];
    }
    EXPECT_EQ(flips, changed);
    EXPECT_NEAR(static_cast<double>(flips) / L, 0.1, 3 * std::sqrt(0.09 / L));
}

TEST(Attack, BitflipRequiresKey) {
    const auto seq = random_text(50, 64, 1);
    EXPECT_THROW(attack(seq, AttackSpec{AttackKind::bitflip, 0.1, 1, std::nullopt}), AttackConfigError);
    EXPECT_THROW(attack(seq, AttackSpec{AttackKind::bitflip, 0.1, 1, BitflipKey{kKey, 0}}), AttackConfigError);
}

TEST(Attack, RejectsBadRates) {
    const auto seq = random_text(50, 64, 1);
    EXPECT_THROW(attack(seq, AttackSpec{AttackKind::substitute, 1.5, 1, std::nullopt}), AttackConfigError);
    EXPECT_THROW(attack(seq, AttackSpec{AttackKind::substitute, -0.1, 1, std::nullopt}), AttackConfigError);
    EXPECT_THROW(attack(seq, AttackSpec{AttackKind::substitute, std::nan(""), 1, std::nullopt}), AttackConfigError);
}

TEST(Attack, DeterministicPerSeed) {
    const auto seq = random_text(1000, 128, 11);
    for (AttackKind k : {AttackKind::substitute, AttackKind::remove, AttackKind::insert}) {
        const auto a = attack(seq, AttackSpec{k, 0.1, 5, std::nullopt});
        const auto b = attack(seq, AttackSpec{k, 0.1, 5, std::nullopt});
        const auto c = attack(seq, AttackSpec{k, 0.1, 6, std::nullopt});
        EXPECT_EQ(a, b);
        EXPECT_NE(a, c);
    }
}

TEST(Attack, KindNamesRoundTrip) {
    for (AttackKind k : {AttackKind::substitute, AttackKind::remove, AttackKind::insert, AttackKind::bitflip})
        EXPECT_EQ(attack_kind_from_string(to_string(k)), k);
    EXPECT_EQ(to_string(AttackKind::remove), "delete");
    EXPECT_THROW(attack_kind_from_string("paraphrase"), ContractViolation);
}

TEST(PrefixEdits, InsertPrefixShiftsByR) {
    const auto seq = random_text(100, 64, 3);
    const auto out = insert_prefix(seq, 7, 1);
    ASSERT_EQ(out.tokens.size(), 107u);
    EXPECT_TRUE(std::equal(seq.tokens.begin(), seq.tokens.end(), out.tokens.begin() + 7));
}

TEST(PrefixEdits, DeletePrefixDropsR) {
    const auto seq = random_text(100, 64, 3);
    const auto out = delete_prefix(seq, 9);
    ASSERT_EQ(out.tokens.size(), 91u);
    EXPECT_TRUE(std::equal(out.tokens.begin(), out.tokens.end(), seq.tokens.begin() + 9));
    EXPECT_TRUE(delete_prefix(seq, 500).tokens.empty());
}

#include <gtest/gtest.h>

#include "blockwm/blockwm.hpp"

using namespace blockwm;
using namespace blockwm::harness;

namespace {

ExperimentSpec small_spec(std::size_t trials = 60) {
    ExperimentSpec s;
    s.trials = trials;
    s.code = {31, 6, 7};
    s.delta = 3.0;
    s.token_count = 31 * 6;
    s.source.vocab_size = 256;
    s.key = SecretKey::from_hex("77665544332211009988aabbccddeeff0123456789abcdeffedcba9876543210");
    s.master_seed = 5;
    s.detect_grid = {{DetectMode::both, 2, 1}, {DetectMode::both, 2, 2}, {DetectMode::naive, 0, 1}};
    return s;
}

}  // namespace

TEST(Wilson, KnownIntervals) {
    const Interval a = wilson(5, 10);
    EXPECT_NEAR(a.lo, 0.2366, 1e-4);
    EXPECT_NEAR(a.hi, 0.7634, 1e-4);
    const Interval b = wilson(0, 10);
    EXPECT_DOUBLE_EQ(b.lo, 0.0);
    EXPECT_NEAR(b.hi, 0.2775, 1e-4);
    const Interval c = wilson(10, 10);
    EXPECT_NEAR(c.lo, 0.7225, 1e-4);
    EXPECT_NEAR(c.hi, 1.0, 1e-12);
    const Interval d = wilson(0, 0);
    EXPECT_EQ(d.lo, 0.0);
    EXPECT_EQ(d.hi, 1.0);
}

TEST(Summary, CountsAndRates) {
    const DetectVariant v{DetectMode::both, 1, 2};
    const std::vector<ArmOutcome> wm{{3, 6, true, 0}, {1, 6, true, 0}, {2, 6, false, 0}, {0, 0, false, 0}};
    const std::vector<ArmOutcome> h0{{2, 6, false, 0}, {0, 6, false, 0}};
    const MetricsRow r = summarize(v, wm, h0, 2);
    EXPECT_EQ(r.tp, 2u);
    EXPECT_EQ(r.fn, 2u);
    EXPECT_EQ(r.fp, 1u);
    EXPECT_EQ(r.tn, 1u);
    EXPECT_DOUBLE_EQ(r.tpr, 0.5);
    EXPECT_DOUBLE_EQ(r.fpr, 0.5);
    EXPECT_DOUBLE_EQ(*r.precision, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(r.match_rate, 0.25);
    EXPECT_EQ(r.config_id, "both/s1/t2");
}

TEST(Campaign, DeterministicAndThreadIndependent) {
    auto spec = small_spec(30);
    const auto a = metrics_csv(run_campaign(spec).rows);
    const auto b = metrics_csv(run_campaign(spec).rows);
    spec.threads = 3;
    const auto c = metrics_csv(run_campaign(spec).rows);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, c);
    spec.master_seed = 6;
    EXPECT_NE(a, metrics_csv(run_campaign(spec).rows));
}

TEST(Campaign, HardEmbeddingAlwaysDetected) {
    auto spec = small_spec(40);
    spec.scheme = EmbedScheme::hard;
    const auto res = run_campaign(spec);
    EXPECT_DOUBLE_EQ(res.rows[0].tpr, 1.0);
    EXPECT_DOUBLE_EQ(res.rows[0].match_rate, 1.0);
    EXPECT_DOUBLE_EQ(res.rows[0].mean_matched_ratio, 1.0);
}

TEST(Campaign, ThresholdAndPayloadOrdering) {
    auto spec = small_spec(80);
    spec.delta = 2.0;
    spec.attacks = {{AttackKind::substitute, 0.05}};
    const auto res = run_campaign(spec);
    const auto& t1 = res.rows[0];
    const auto& t2 = res.rows[1];
    EXPECT_LE(t2.fpr, t1.fpr);
    EXPECT_LE(t2.tpr, t1.tpr);
    for (const auto& r : res.rows) {
        EXPECT_LE(r.match_rate, r.tpr);
        EXPECT_EQ(r.tp + r.fn, 80u);
        EXPECT_EQ(r.fp + r.tn, 80u);
        EXPECT_LE(r.tpr_ci.lo, r.tpr);
        EXPECT_GE(r.tpr_ci.hi, r.tpr);
    }
}

TEST(Campaign, TooShortIsDiagnosed) {
    auto spec = small_spec(5);
    spec.token_count = 20;
    const auto res = run_campaign(spec);
    EXPECT_EQ(res.rows[0].tp, 0u);
    EXPECT_EQ(res.rows[0].fp, 0u);
    EXPECT_FALSE(res.rows[0].diagnostic.empty());
}

TEST(Campaign, RejectsBadSpecs) {
    auto spec = small_spec(5);
    spec.detect_grid = {{DetectMode::both, 40, 1}};
    EXPECT_THROW(run_campaign(spec), ContractViolation);
    spec = small_spec(5);
    spec.attacks = {{AttackKind::remove, 2.0}};
    EXPECT_THROW(run_campaign(spec), ContractViolation);
    spec = small_spec(0);
    EXPECT_THROW(run_campaign(spec), ContractViolation);
}

TEST(MetricsCsv, HeaderAndLatencyColumn) {
    const auto rows = run_campaign(small_spec(3)).rows;
    const std::string plain = metrics_csv(rows);
    const std::string timed = metrics_csv(rows, true);
    EXPECT_EQ(plain.rfind("# format_version=1\nconfig_id,", 0), 0u);
    EXPECT_EQ(plain.find("mean_latency_ms"), std::string::npos);
    EXPECT_NE(timed.find("mean_latency_ms"), std::string::npos);
    EXPECT_EQ(std::count(plain.begin(), plain.end(), '\n'), 2 + 3);
}

TEST(Roc, CurvesAreMonotoneAndAucBounded) {
    auto spec = small_spec(60);
    spec.delta = 1.5;
    spec.detect_grid = {{DetectMode::both, 2, 1}};
    const auto curves = roc_sweep(spec);
    ASSERT_EQ(curves.size(), 1u);
    const auto& pts = curves[0].points;
    ASSERT_GE(pts.size(), 6u);
    for (std::size_t i = 1; i < pts.size(); ++i) {
        EXPECT_LE(pts[i].fpr, pts[i - 1].fpr);
        EXPECT_LE(pts[i].tpr, pts[i - 1].tpr);
        EXPECT_EQ(pts[i].threshold, i + 1);
    }
    EXPECT_GE(curves[0].auc, 0.0);
    EXPECT_LE(curves[0].auc, 1.0);
    EXPECT_GT(curves[0].auc, 0.8);
    EXPECT_NE(roc_csv(curves).find("mode,s_max,threshold,fpr,tpr,auc"), std::string::npos);
}

TEST(Roc, AucOfKnownPoints) {
    EXPECT_DOUBLE_EQ(roc_auc({}), 0.5);
    EXPECT_DOUBLE_EQ(roc_auc({{0.0, 1.0}}), 1.0);
    EXPECT_DOUBLE_EQ(roc_auc({{0.5, 0.5}}), 0.5);
    EXPECT_DOUBLE_EQ(roc_auc({{0.2, 0.8}}), 0.2 * 0.4 + 0.8 * 0.9);
}

TEST(Roc, NaiveHugsDiagonalUnderInsertion) {
    auto spec = small_spec(300);
    spec.delta = 6.0;
    spec.token_count = 200;
    spec.attacks = {{AttackKind::insert, 0.10}};
    spec.detect_grid = {{DetectMode::naive, 0, 1}};
    const auto curves = roc_sweep(spec);
    EXPECT_NEAR(curves[0].auc, 0.5, 0.1);
}

TEST(Campaign, KnownPayloadFprFollowsShiftModel) {
    // Hard embedding, τ = 1, T = 200: the designated test on H0 texts
    // fires with probability 1 - (1 - p)^M, p = p0_shift over S offsets.
    for (int s_max : {0, 2}) {
        auto spec = small_spec(2000);
        spec.scheme = EmbedScheme::hard;
        spec.token_count = 200;
        spec.known_payload = true;
        spec.source.vocab_size = 64;
        spec.detect_grid = {{DetectMode::both, s_max, 1}};
        const auto row = run_campaign(spec).rows[0];
        const double p0v = theory::to_double(theory::p0(2, 31, 7));
        const double p = theory::p0_shift(p0v, 2 * s_max + 1, theory::ShiftModel::independent);
        const double expected = 1 - std::pow(1 - p, 6);
        EXPECT_DOUBLE_EQ(row.tpr, 1.0);
        EXPECT_NEAR(row.fpr, expected, 3 * std::sqrt(expected * (1 - expected) / 2000)) << "s_max " << s_max;
    }
}

TEST(Campaign, WilsonIntervalsCoverTheory) {
    // Twenty calibration rows; a 95% interval should miss at most once or twice.
    const double p0v = theory::to_double(theory::p0(2, 31, 7));
    const double expected = 1 - std::pow(1 - p0v, 6);
    int covered = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto spec = small_spec(400);
        spec.scheme = EmbedScheme::hard;
        spec.known_payload = true;
        spec.master_seed = 1000 + seed;
        spec.source.vocab_size = 64;
        spec.detect_grid = {{DetectMode::designated_only, 0, 1}};
        const auto row = run_campaign(spec).rows[0];
        covered += row.fpr_ci.lo <= expected && expected <= row.fpr_ci.hi;
    }
    EXPECT_GE(covered, 19);
}

TEST(Ber, MatchesClosedFormAndNullIsHalf) {
    BerSpec b;
    b.deltas = {0.0, 2.0, 6.0};
    b.trials = 40;
    b.token_count = 31 * 10;
    b.vocab_size = 256;
    b.key = SecretKey::from_hex("77665544332211009988aabbccddeeff0123456789abcdeffedcba9876543210");
    const auto rows = ber_curve(b);
    ASSERT_EQ(rows.size(), 3u);
    for (const auto& r : rows) {
        EXPECT_EQ(r.bits, 40u * 310u);
        EXPECT_GE(r.ber_h0, 0.48);
        EXPECT_LE(r.ber_h0, 0.52);
        EXPECT_NEAR(r.ber_wm, r.theory, 4 * r.stderr_wm + 1e-9) << "delta " << r.delta;
    }
    EXPECT_NE(ber_csv(rows).find("p_emb_theory"), std::string::npos);
}

TEST(Bench, ProducesOneRowPerConfiguration) {
    BenchSpec b;
    b.token_counts = {100};
    b.codes = {{31, 6, 7}};
    b.s_max_values = {0, 2};
    b.reps = 2;
    b.vocab_size = 128;
    const auto rows = latency_bench(b);
    ASSERT_EQ(rows.size(), 2u);
    for (const auto& r : rows) {
        EXPECT_GE(r.max_seconds, r.mean_seconds);
        EXPECT_GE(r.mean_seconds, 0.0);
    }
    EXPECT_NE(bench_csv(rows).find("mean_seconds"), std::string::npos);
}

TEST(Payloads, RandomNonzero) {
    Rng rng(1);
    for (int i = 0; i < 500; ++i) {
        const Message m = random_nonzero_message(5, rng);
        EXPECT_EQ(m.size(), 5u);
        EXPECT_FALSE(m.is_zero());
    }
}

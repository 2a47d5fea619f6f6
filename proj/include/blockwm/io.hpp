#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "attacks.hpp"
#include "detector.hpp"
#include "generation.hpp"
#include "harness.hpp"
#include "keying.hpp"
#include "theory.hpp"

namespace blockwm::io {

using nlohmann::json;

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kFormatVersion = harness::kFormatVersion;

/// One line of the sequence file:
/// {"format_version":1,"tokens":[...],"vocab_size":N,"meta":{...}}
struct SequenceRecord {
    TokenSequence seq;
    json meta = json::object();
};

inline json to_json(const SequenceRecord& r) {
    return json{{"format_version", kFormatVersion},
                {"tokens", r.seq.tokens},
                {"vocab_size", r.seq.vocab_size},
                {"meta", r.meta}};
}

inline SequenceRecord sequence_from_json(const json& j) {
    if (!j.is_object() || !j.contains("tokens") || !j.contains("vocab_size"))
        throw FormatError("sequence record needs 'tokens' and 'vocab_size'");
    if (j.contains("format_version") && j.at("format_version").get<int>() > kFormatVersion)
        throw FormatError("sequence record has a newer format_version");
    SequenceRecord r;
    r.seq.tokens = j.at("tokens").get<std::vector<std::uint32_t>>();
    r.seq.vocab_size = j.at("vocab_size").get<std::uint32_t>();
    if (j.contains("meta")) r.meta = j.at("meta");
    if (!r.seq.valid()) throw FormatError("sequence record has a token id >= vocab_size");
    return r;
}

inline std::vector<SequenceRecord> read_sequences(std::istream& in) {
    std::vector<SequenceRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(sequence_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw FormatError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

inline void write_sequence(std::ostream& out, const SequenceRecord& r) { out << to_json(r).dump() << '\n'; }

inline SecretKey read_key_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open key file " + path);
    std::string line;
    std::getline(in, line);
    return SecretKey::from_hex(line);
}

inline json to_json(const DetectionReport& r) {
    json blocks = json::array();
    for (const auto& b : r.per_block) {
        json jb{{"index", b.index}, {"matched", b.matched}};
        jb["distance"] = b.distance ? json(*b.distance) : json(nullptr);
        blocks.push_back(jb);
    }
    return json{{"format_version", kFormatVersion},
                {"is_wm", r.is_wm},
                {"payload", r.payload ? json(r.payload->to_string()) : json(nullptr)},
                {"best_offset", r.best_offset},
                {"matched", r.matched},
                {"blocks", r.blocks},
                {"score", r.score},
                {"too_short", r.too_short},
                {"per_block", blocks}};
}

inline json code_json(const CodeParams& c) { return json{{"n", c.n}, {"k", c.k}, {"t", c.t}}; }

inline CodeParams code_from_json(const json& j) {
    return CodeParams{j.at("n").get<int>(), j.at("k").get<int>(), j.at("t").get<int>()};
}

inline json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

/// All closed-form quantities for one parameter set.
struct BoundsQuery {
    unsigned q = 2;
    CodeParams code{31, 6, 7};
    int s_max = 10;
    double theta = 0.5;
    unsigned blocks = 6;
    double delta = 2.5;
    double mass = 0.5;
    double p_att = 0.0;
};

inline json bounds_report(const BoundsQuery& bq) {
    using namespace theory;
    const auto n = static_cast<unsigned>(bq.code.n);
    const auto k = static_cast<unsigned>(bq.code.k);
    const auto t = static_cast<unsigned>(bq.code.t);
    const auto S = static_cast<unsigned>(2 * bq.s_max + 1);
    const Rational p0r = p0(bq.q, n, t);
    const double p0d = to_double(p0r);
    const double p_ind = p0_shift(p0d, S, ShiftModel::independent);
    const double p_uni = p0_shift(p0d, S, ShiftModel::union_bound);
    const double pe = p_emb(bq.delta, bq.mass);
    const double ptot = std::min(1.0, pe + bq.p_att);
    const double succ = p1(n, t, ptot);
    const Rational any = fpr_any(bq.q, n, k, t);
    return json{{"format_version", kFormatVersion},
                {"q", bq.q},
                {"code", code_json(bq.code)},
                {"s_max", bq.s_max},
                {"S", S},
                {"theta", bq.theta},
                {"M", bq.blocks},
                {"delta", bq.delta},
                {"m", bq.mass},
                {"p_att", bq.p_att},
                {"ball_volume", ball_volume(bq.q, n, t).str()},
                {"fpr_any", {{"exact", any.str()}, {"value", to_double(any)}}},
                {"p0", {{"exact", p0r.str()}, {"value", p0d}, {"ln", log_of(p0r)}}},
                {"p0_shift_union", p_uni},
                {"p0_shift_independent", p_ind},
                {"entropy_bound", entropy_bound(bq.q, n, t)},
                {"agg_fpr_bound", opt_json(agg_fpr_bound(bq.blocks, bq.theta, p_ind))},
                {"blind_fpr_bound", opt_json(blind_fpr_bound(k, bq.blocks, bq.theta, p_ind))},
                {"p_emb", pe},
                {"p_tot", ptot},
                {"p1", succ},
                {"fnr_bound", opt_json(fnr_bound(bq.blocks, bq.theta, succ))},
                {"delta_for_p_emb", delta_for_target(pe, bq.mass)}};
}

inline json to_json(const theory::BoundParams& bp) {
    return json{{"format_version", kFormatVersion},
                {"code", code_json(bp.code)},
                {"s_max", bp.s_max},
                {"S", bp.offsets},
                {"theta", bp.theta},
                {"M", bp.blocks},
                {"delta", bp.delta},
                {"m", bp.mass},
                {"p_att", bp.p_att},
                {"p_tot", bp.p_tot},
                {"p0", bp.p0},
                {"p0_shift", bp.p0_shift},
                {"p1", bp.p1},
                {"fpr_bound", bp.fpr_bound},
                {"fnr_bound", bp.fnr_bound}};
}

/// Campaign config (JSON object). Every key is optional:
///   trials, code {n,k,t}, delta, scheme "soft"|"hard", tokens,
///   plan_mode "payload"|"diverse", source {kind "uniform"|"controlled", vocab, mass},
///   attacks [{kind, rate}], detect [{mode, s_max, threshold}], key (64 hex), seed, threads,
///   known_payload (bool).
inline harness::ExperimentSpec experiment_from_json(const json& j) {
    harness::ExperimentSpec s;
    if (j.contains("format_version") && j.at("format_version").get<int>() > kFormatVersion)
        throw FormatError("campaign config has a newer format_version");
    s.trials = j.value("trials", s.trials);
    if (j.contains("code")) s.code = code_from_json(j.at("code"));
    s.delta = j.value("delta", s.delta);
    const std::string scheme = j.value("scheme", std::string("soft"));
    if (scheme != "soft" && scheme != "hard") throw FormatError("scheme must be 'soft' or 'hard'");
    s.scheme = scheme == "hard" ? EmbedScheme::hard : EmbedScheme::soft;
    s.token_count = j.value("tokens", s.token_count);
    const std::string plan = j.value("plan_mode", std::string("payload"));
    if (plan != "payload" && plan != "diverse") throw FormatError("plan_mode must be 'payload' or 'diverse'");
    s.plan_mode = plan == "diverse" ? PlanMode::diverse : PlanMode::payload;
    if (j.contains("source")) {
        const auto& src = j.at("source");
        const std::string kind = src.value("kind", std::string("controlled"));
        if (kind != "uniform" && kind != "controlled") throw FormatError("source.kind must be 'uniform' or 'controlled'");
        s.source.kind = kind == "uniform" ? harness::SourceKind::uniform : harness::SourceKind::controlled_mass;
        s.source.vocab_size = src.value("vocab", s.source.vocab_size);
        s.source.mass = src.value("mass", s.source.mass);
    }
    if (j.contains("attacks"))
        for (const auto& a : j.at("attacks"))
            s.attacks.push_back({attack_kind_from_string(a.at("kind").get<std::string>()), a.at("rate").get<double>()});
    if (j.contains("detect")) {
        s.detect_grid.clear();
        for (const auto& d : j.at("detect"))
            s.detect_grid.push_back({detect_mode_from_string(d.value("mode", std::string("both"))),
                                     d.value("s_max", 0), d.value("threshold", std::size_t{1})});
    }
    if (j.contains("key")) s.key = SecretKey::from_hex(j.at("key").get<std::string>());
    s.master_seed = j.value("seed", s.master_seed);
    s.threads = j.value("threads", s.threads);
    s.known_payload = j.value("known_payload", s.known_payload);
    return s;
}

}  // namespace blockwm::io

// Command-line front end: embed, sample-h0, attack, detect, bounds, params,
// campaign, roc, ber, bench.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "blockwm/blockwm.hpp"
#include "blockwm/io.hpp"

using namespace blockwm;
using io::json;

namespace {

struct Output {
    std::ofstream file;
    std::ostream* stream = &std::cout;

    explicit Output(const std::string& path) {
        if (path.empty() || path == "-") return;
        file.open(path);
        if (!file) throw io::FormatError("cannot open output file " + path);
        stream = &file;
    }
    std::ostream& operator*() { return *stream; }
};

std::vector<io::SequenceRecord> read_input(const std::string& path) {
    if (path.empty() || path == "-") return io::read_sequences(std::cin);
    std::ifstream in(path);
    if (!in) throw io::FormatError("cannot open input file " + path);
    return io::read_sequences(in);
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io::FormatError("cannot open config file " + path);
    return json::parse(in);
}

CodeParams parse_code(const std::string& s) {
    CodeParams c{};
    char a = 0, b = 0;
    std::istringstream is(s);
    if (!(is >> c.n >> a >> c.k >> b >> c.t) || a != ',' || b != ',')
        throw ContractViolation("code must be given as n,k,t (e.g. 31,6,7)");
    return c;
}

std::unique_ptr<LogitSource> make_source(const std::string& kind, std::uint32_t vocab, double mass) {
    if (kind == "uniform") return std::make_unique<UniformSource>(vocab);
    if (kind == "controlled") return std::make_unique<ControlledMassSource>(vocab, mass);
    throw ContractViolation("source must be 'uniform' or 'controlled'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Block-wise multi-bit watermarking with BCH codewords"};
    app.require_subcommand(1);

    // Shared options, bound per subcommand.
    std::string key_path, in_path, out_path, code_str = "31,6,7", source_kind = "controlled";
    std::uint32_t vocab = 1024;
    double mass = 0.5;
    std::uint64_t seed = 0;

    // embed
    auto* embed_cmd = app.add_subcommand("embed", "Generate watermarked token sequences");
    std::string payload_str, scheme = "soft", plan = "payload";
    double delta = 2.0;
    std::size_t tokens = 200, count = 1, prompt = 0;
    embed_cmd->add_option("--key", key_path, "Key file (64 hex chars)")->required();
    embed_cmd->add_option("--payload", payload_str, "Payload bits, index 0 first (default: random nonzero)");
    embed_cmd->add_option("--code", code_str, "BCH code n,k,t");
    embed_cmd->add_option("--delta", delta, "Soft-mode logit bias");
    embed_cmd->add_option("--scheme", scheme, "soft | hard")->check(CLI::IsMember({"soft", "hard"}));
    embed_cmd->add_option("--plan", plan, "payload | diverse")->check(CLI::IsMember({"payload", "diverse"}));
    embed_cmd->add_option("--tokens", tokens, "Watermark-bearing tokens per sequence");
    embed_cmd->add_option("--prompt", prompt, "Unwatermarked prompt tokens prepended to each sequence");
    embed_cmd->add_option("--count", count, "Number of sequences");
    embed_cmd->add_option("--source", source_kind, "uniform | controlled");
    embed_cmd->add_option("--vocab", vocab, "Vocabulary size");
    embed_cmd->add_option("--mass", mass, "Pre-bias target-list mass for the controlled source");
    embed_cmd->add_option("--seed", seed, "RNG seed");
    embed_cmd->add_option("-o,--out", out_path, "Output JSON-lines file (default stdout)");

    // sample-h0
    auto* h0_cmd = app.add_subcommand("sample-h0", "Sample unwatermarked token sequences");
    h0_cmd->add_option("--tokens", tokens, "Tokens per sequence");
    h0_cmd->add_option("--count", count, "Number of sequences");
    h0_cmd->add_option("--source", source_kind, "uniform | controlled");
    h0_cmd->add_option("--vocab", vocab, "Vocabulary size");
    h0_cmd->add_option("--mass", mass, "Unused without a key; accepted for symmetry");
    h0_cmd->add_option("--seed", seed, "RNG seed");
    h0_cmd->add_option("-o,--out", out_path, "Output JSON-lines file (default stdout)");

    // attack
    auto* attack_cmd = app.add_subcommand("attack", "Apply a token-level attack channel");
    std::string kind = "substitute";
    double rate = 0.0;
    std::size_t insert_prefix_n = 0, delete_prefix_n = 0;
    attack_cmd->add_option("-i,--in", in_path, "Input JSON-lines file (default stdin)");
    attack_cmd->add_option("-o,--out", out_path, "Output JSON-lines file (default stdout)");
    attack_cmd->add_option("--kind", kind, "substitute | delete | insert | bitflip")
        ->check(CLI::IsMember({"substitute", "delete", "insert", "bitflip"}));
    attack_cmd->add_option("--rate", rate, "Per-token edit probability")->check(CLI::Range(0.0, 1.0));
    attack_cmd->add_option("--seed", seed, "RNG seed");
    attack_cmd->add_option("--key", key_path, "Key file (bitflip only)");
    attack_cmd->add_option("--code", code_str, "BCH code n,k,t (bitflip block length)");
    attack_cmd->add_option("--insert-prefix", insert_prefix_n, "Prepend this many random tokens first");
    attack_cmd->add_option("--delete-prefix", delete_prefix_n, "Drop this many leading tokens first");

    // detect
    auto* detect_cmd = app.add_subcommand("detect", "Detect watermarks; one JSON report per input line");
    int s_max = 5;
    std::size_t threshold = 1;
    std::optional<double> ratio;
    std::string mode = "both";
    bool diverse = false;
    std::optional<std::size_t> prompt_override;
    detect_cmd->add_option("--key", key_path, "Key file (64 hex chars)")->required();
    detect_cmd->add_option("-i,--in", in_path, "Input JSON-lines file (default stdin)");
    detect_cmd->add_option("-o,--out", out_path, "Output file (default stdout)");
    detect_cmd->add_option("--code", code_str, "BCH code n,k,t");
    detect_cmd->add_option("--s-max", s_max, "Offset search budget");
    detect_cmd->add_option("--threshold", threshold, "Minimum matched blocks");
    detect_cmd->add_option("--ratio", ratio, "Optional minimum matched ratio");
    detect_cmd->add_option("--mode", mode, "both | shift_only | designated_only | naive")
        ->check(CLI::IsMember({"both", "shift_only", "designated_only", "naive"}));
    detect_cmd->add_flag("--diverse", diverse, "Texts were embedded with diverse codeword pairs");
    detect_cmd->add_option("--prompt", prompt_override, "Prompt length (default: meta.prompt_len or 0)");

    // bounds
    auto* bounds_cmd = app.add_subcommand("bounds", "Print every closed-form bound as JSON");
    io::BoundsQuery bq;
    bounds_cmd->add_option("--q", bq.q, "Alphabet size");
    bounds_cmd->add_option("--code", code_str, "Code n,k,t");
    bounds_cmd->add_option("--s-max", bq.s_max, "Offset search budget");
    bounds_cmd->add_option("--theta", bq.theta, "Match-ratio threshold");
    bounds_cmd->add_option("--blocks", bq.blocks, "Number of blocks M");
    bounds_cmd->add_option("--delta", bq.delta, "Soft bias");
    bounds_cmd->add_option("--mass", bq.mass, "Pre-bias green mass m");
    bounds_cmd->add_option("--p-att", bq.p_att, "Attack symbol error rate");

    // params
    auto* params_cmd = app.add_subcommand("params", "Search for a minimal-M configuration meeting FPR/FNR targets");
    theory::SearchTargets tg;
    bool agg_only = false;
    params_cmd->add_option("--alpha", tg.alpha, "FPR target");
    params_cmd->add_option("--beta", tg.beta, "FNR target");
    params_cmd->add_option("--p-att", tg.p_att, "Attack symbol error rate");
    params_cmd->add_option("--mass", tg.mass, "Pre-bias green mass m");
    params_cmd->add_option("--p-insdel", tg.p_insdel, "Insertion/deletion rate for the s_max rule");
    params_cmd->add_option("--safety", tg.safety, "Safety factor in s_max >= safety * n * p");
    params_cmd->add_flag("--aggregate-only", agg_only, "Drop the 2^k blind-estimation factor");

    // campaign / roc
    auto* campaign_cmd = app.add_subcommand("campaign", "Run a Monte-Carlo campaign from a JSON config");
    std::string config_path;
    bool with_latency = false;
    campaign_cmd->add_option("--config", config_path, "Campaign JSON config")->required();
    campaign_cmd->add_option("-o,--out", out_path, "Metrics CSV (default stdout)");
    campaign_cmd->add_flag("--latency", with_latency, "Add the (non-deterministic) latency column");
    auto* roc_cmd = app.add_subcommand("roc", "Sweep the block threshold and write ROC points");
    roc_cmd->add_option("--config", config_path, "Campaign JSON config")->required();
    roc_cmd->add_option("-o,--out", out_path, "ROC CSV (default stdout)");

    // ber
    auto* ber_cmd = app.add_subcommand("ber", "Bit error rate versus bias strength");
    harness::BerSpec bs;
    ber_cmd->add_option("--deltas", bs.deltas, "Bias values")->delimiter(',');
    ber_cmd->add_option("--mass", bs.mass, "Pre-bias green mass m");
    ber_cmd->add_option("--trials", bs.trials, "Texts per delta");
    ber_cmd->add_option("--tokens", bs.token_count, "Tokens per text");
    ber_cmd->add_option("--code", code_str, "Code n,k,t");
    ber_cmd->add_option("--vocab", bs.vocab_size, "Vocabulary size");
    ber_cmd->add_option("--seed", bs.master_seed, "Master seed");
    ber_cmd->add_option("--key", key_path, "Key file (default all-zero key)");
    ber_cmd->add_option("-o,--out", out_path, "CSV output (default stdout)");

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "Detection latency table");
    harness::BenchSpec bench;
    std::vector<std::string> bench_codes;
    bench_cmd->add_option("--tokens", bench.token_counts, "Text lengths")->delimiter(',');
    bench_cmd->add_option("--codes", bench_codes, "Codes as n:k:t, comma separated")->delimiter(',');
    bench_cmd->add_option("--s-max", bench.s_max_values, "Offset budgets")->delimiter(',');
    bench_cmd->add_option("--reps", bench.reps, "Texts per cell");
    bench_cmd->add_option("--seed", bench.master_seed, "Master seed");
    bench_cmd->add_option("-o,--out", out_path, "CSV output (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*embed_cmd) {
            const SecretKey key = io::read_key_file(key_path);
            const BchCode code = BchCode::named(parse_code(code_str));
            const auto src = make_source(source_kind, vocab, mass);
            Output out(out_path);
            for (std::size_t i = 0; i < count; ++i) {
                Rng rng = Rng::stream(seed, i);
                const Message payload =
                    payload_str.empty() ? harness::random_nonzero_message(code.k(), rng) : Message::from_string(payload_str);
                EmbedConfig cfg{code, delta, scheme == "hard" ? EmbedScheme::hard : EmbedScheme::soft, tokens,
                                rng.next(), plan == "diverse" ? PlanMode::diverse : PlanMode::payload};
                TokenSequence seq = embed(*src, key, payload, cfg);
                if (prompt > 0) {
                    TokenSequence head = sample_unwatermarked(*src, prompt, rng.next());
                    head.tokens.insert(head.tokens.end(), seq.tokens.begin(), seq.tokens.end());
                    seq = std::move(head);
                }
                io::SequenceRecord rec{seq,
                                       json{{"payload", payload.to_string()},
                                            {"code", io::code_json(code.params())},
                                            {"delta", delta},
                                            {"scheme", scheme},
                                            {"plan", plan},
                                            {"prompt_len", prompt},
                                            {"watermarked", true}}};
                io::write_sequence(*out, rec);
            }
        } else if (*h0_cmd) {
            const auto src = make_source(source_kind, vocab, mass);
            Output out(out_path);
            for (std::size_t i = 0; i < count; ++i) {
                Rng rng = Rng::stream(seed, i);
                io::SequenceRecord rec{sample_unwatermarked(*src, tokens, rng.next()), json{{"watermarked", false}}};
                io::write_sequence(*out, rec);
            }
        } else if (*attack_cmd) {
            auto recs = read_input(in_path);
            AttackSpec spec{attack_kind_from_string(kind), rate, seed, std::nullopt};
            if (!key_path.empty()) spec.keyed = BitflipKey{io::read_key_file(key_path), parse_code(code_str).n};
            Output out(out_path);
            for (std::size_t i = 0; i < recs.size(); ++i) {
                auto& r = recs[i];
                if (insert_prefix_n) r.seq = insert_prefix(r.seq, insert_prefix_n, splitmix64(seed + i));
                if (delete_prefix_n) r.seq = delete_prefix(r.seq, delete_prefix_n);
                spec.rng_seed = splitmix64(seed) ^ i;
                r.seq = attack(r.seq, spec);
                r.meta["attack"].push_back(json{{"kind", kind},
                                               {"rate", rate},
                                               {"insert_prefix", insert_prefix_n},
                                               {"delete_prefix", delete_prefix_n}});
                io::write_sequence(*out, r);
            }
        } else if (*detect_cmd) {
            DetectConfig cfg{BchCode::named(parse_code(code_str)), io::read_key_file(key_path)};
            cfg.s_max = s_max;
            cfg.threshold = threshold;
            cfg.min_ratio = ratio;
            cfg.mode = detect_mode_from_string(mode);
            cfg.diverse = diverse;
            Output out(out_path);
            for (const auto& r : read_input(in_path)) {
                DetectConfig c = cfg;
                c.prompt_len = prompt_override ? *prompt_override : r.meta.value("prompt_len", std::size_t{0});
                *out << io::to_json(detect(r.seq, c)).dump() << '\n';
            }
        } else if (*bounds_cmd) {
            bq.code = parse_code(code_str);
            std::cout << io::bounds_report(bq).dump(2) << '\n';
        } else if (*params_cmd) {
            tg.blind = !agg_only;
            const auto best = theory::param_search(tg);
            std::cout << (best ? io::to_json(*best) : json{{"format_version", io::kFormatVersion}, {"found", false}})
                             .dump(2)
                      << '\n';
        } else if (*campaign_cmd) {
            const auto spec = io::experiment_from_json(read_json_file(config_path));
            Output out(out_path);
            *out << harness::metrics_csv(harness::run_campaign(spec).rows, with_latency);
        } else if (*roc_cmd) {
            const auto spec = io::experiment_from_json(read_json_file(config_path));
            Output out(out_path);
            *out << harness::roc_csv(harness::roc_sweep(spec));
        } else if (*ber_cmd) {
            bs.code = parse_code(code_str);
            if (!key_path.empty()) bs.key = io::read_key_file(key_path);
            Output out(out_path);
            *out << harness::ber_csv(harness::ber_curve(bs));
        } else if (*bench_cmd) {
            if (!bench_codes.empty()) {
                bench.codes.clear();
                for (auto s : bench_codes) {
                    std::replace(s.begin(), s.end(), ':', ',');
                    bench.codes.push_back(parse_code(s));
                }
            }
            Output out(out_path);
            *out << harness::bench_csv(harness::latency_bench(bench));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

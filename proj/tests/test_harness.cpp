#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>

#include <json.hpp>

#include "darag/harness.hpp"
#include "fixture.hpp"
#include "test_util.hpp"

using namespace darag;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Small closed-loop experiment rooted in a scratch directory.
ExperimentConfig small_config(const testutil::TempDir& tmp, const std::string& run_id) {
    save_corpus(fixture::corpus(40, 101), tmp.file("train.jsonl"));
    save_corpus(fixture::corpus(25, 202), tmp.file("test.jsonl"));
    ExperimentConfig cfg;
    cfg.run_id = run_id;
    cfg.output_dir = tmp.file("out");
    cfg.train_corpus = tmp.file("train.jsonl");
    cfg.test_corpus = tmp.file("test.jsonl");
    cfg.seeds = {1};
    cfg.modes = {"darag", "wo_rac", "baseline"};
    cfg.augmentation.n_syn = 10;
    cfg.augmentation.seed = 5;
    cfg.backends.seed = 9;
    cfg.backends.channel = fixture::channel(9);
    cfg.backends.lexicon = fixture::lexicon();
    return cfg;
}

}  // namespace

TEST_CASE("config parsing fills defaults") {
    auto cfg = parse_experiment_config(R"({"train_corpus": "a.jsonl", "test_corpus": "b.jsonl"})");
    CHECK(cfg.run_id == "run");
    CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(cfg.retrieval.k == 5);
    CHECK(cfg.retrieval.embedding_dim == 64);
    CHECK(cfg.load_options.n_best == 5);
    CHECK(cfg.backends.kind == BackendKind::mock);
    CHECK(cfg.backends.decoding.beam_size == 5);
    CHECK(cfg.modes == std::vector<std::string>{"darag", "wo_rac", "wo_aug", "only_synth"});
}

TEST_CASE("config parsing reads nested sections") {
    auto cfg = parse_experiment_config(R"({
        "run_id": "exp1",
        "output_dir": "results",
        "train_corpus": "train.jsonl",
        "test_corpus": "test.jsonl",
        "seeds": [7, 8],
        "n_best": 3,
        "retrieval": {"k": 2, "embedding_dim": 32},
        "augmentation": {"n_syn": 50, "seed": 4, "replica_threshold": 0.5},
        "n_small": 100,
        "modes": ["darag"],
        "backends": {
            "kind": "mock",
            "seed": 11,
            "decoding": {"beam_size": 3},
            "channel": {"substitution_rate": 0.2, "confusion_table": {"a": ["b"]}},
            "lexicon": {"john keats": "PER"}
        }
    })");
    CHECK(cfg.run_id == "exp1");
    CHECK(cfg.run_dir() == (fs::path("results") / "exp1").string());
    CHECK(cfg.seeds == std::vector<std::uint64_t>{7, 8});
    CHECK(cfg.retrieval.k == 2);
    CHECK(cfg.augmentation.n_syn == 50);
    CHECK(cfg.augmentation.replica_threshold == 0.5);
    CHECK(cfg.n_small == 100);
    CHECK(cfg.backends.channel.substitution_rate == 0.2);
    CHECK(cfg.backends.channel.confusion_table.at("a") == std::vector<std::string>{"b"});
    CHECK(cfg.backends.lexicon.at("john keats") == "PER");
}

TEST_CASE("config parsing rejects bad input") {
    CHECK_THROWS_WITH_AS(parse_experiment_config("{nope"), doctest::Contains("malformed"), Error);
    CHECK_THROWS_WITH_AS(parse_experiment_config(R"({"modes": ["weird"]})"),
                         doctest::Contains("unknown ablation mode"), Error);
    CHECK_THROWS_WITH_AS(parse_experiment_config(R"({"seeds": []})"),
                         doctest::Contains("seed list"), Error);
    CHECK_THROWS_WITH_AS(
        parse_experiment_config(R"({"n_best": 5, "backends": {"decoding": {"beam_size": 3}}})"),
        doctest::Contains("beam_size"), Error);
    CHECK_THROWS_WITH_AS(parse_experiment_config(R"({"backends": {"kind": "carrier-pigeon"}})"),
                         doctest::Contains("unknown backend kind"), Error);
}

TEST_CASE("environment overrides endpoints and token only") {
    setenv("DARAG_BEARER_TOKEN", "env-token", 1);
    setenv("DARAG_ENDPOINT_GENERATOR", "http://env-host:9", 1);
    auto cfg = parse_experiment_config(R"({
        "backends": {"bearer_token": "file-token",
                     "endpoints": {"generator": "http://file-host:1",
                                   "embedder": "http://file-host:2"}}
    })");
    unsetenv("DARAG_BEARER_TOKEN");
    unsetenv("DARAG_ENDPOINT_GENERATOR");
    CHECK(cfg.backends.bearer_token == "env-token");
    CHECK(cfg.backends.endpoints.at("generator") == "http://env-host:9");
    CHECK(cfg.backends.endpoints.at("embedder") == "http://file-host:2");
}

TEST_CASE("ablation_for_mode mapping") {
    CHECK(ablation_for_mode("darag").rac_enabled);
    CHECK_FALSE(ablation_for_mode("wo_rac").rac_enabled);
    CHECK_FALSE(ablation_for_mode("wo_aug").aug_source_included);
    CHECK_FALSE(ablation_for_mode("only_synth").real_source_included);
    CHECK_THROWS_AS(ablation_for_mode("nope"), Error);
}

TEST_CASE("sweep_dimension_from_string") {
    CHECK(sweep_dimension_from_string("k") == SweepDimension::k);
    CHECK(sweep_dimension_from_string("n_small") == SweepDimension::n_small);
    CHECK(sweep_dimension_from_string("n_syn") == SweepDimension::n_syn);
    CHECK_THROWS_AS(sweep_dimension_from_string("m"), Error);
}

TEST_CASE("pipeline stages produce their artifacts") {
    testutil::TempDir tmp;
    auto cfg = small_config(tmp, "smoke");

    auto aug = cmd_augment(cfg);
    CHECK(aug.synthetic.size() == 10);
    CHECK(fs::exists(fs::path(cfg.run_dir()) / "synthetic.jsonl"));
    CHECK(fs::exists(fs::path(cfg.run_dir()) / "manifest.json"));

    auto store = cmd_build_store(cfg);
    CHECK(store.size() > 0);
    CHECK(fs::exists(fs::path(cfg.run_dir()) / "store.json"));

    auto stats = cmd_make_sft(cfg, "darag");
    CHECK(stats.pairs == 50);
    CHECK(stats.real_pairs == 40);
    CHECK(stats.synthetic_pairs == 10);
    CHECK(fs::exists(fs::path(cfg.run_dir()) / "sft_darag.jsonl"));
    CHECK(fs::exists(fs::path(cfg.run_dir()) / "sft_darag.jsonl.meta.json"));

    auto outputs = cmd_correct(cfg, "darag");
    CHECK(outputs.size() == 25);
    CHECK(fs::exists(fs::path(cfg.run_dir()) / "corrected_darag.jsonl"));

    auto report = cmd_evaluate(cfg);
    REQUIRE(report.mean.size() == 3);
    CHECK(fs::exists(fs::path(cfg.run_dir()) / "report.json"));
    CHECK(fs::exists(fs::path(cfg.run_dir()) / "report.txt"));
    CHECK(fs::exists(fs::path(cfg.run_dir()) / "eval_darag_seed1.json"));

    double baseline = report.mean[0].second.baseline_wer;
    CHECK(baseline > 0.0);
    for (const auto& [mode, scores] : report.mean) {
        if (mode == "baseline") CHECK(scores.corrected_wer == baseline);
        else CHECK(scores.corrected_wer < baseline);
    }

    // correction helps entity recovery only with retrieval enabled
    auto f1 = [&](const std::string& mode) {
        for (const auto& [m, scores] : report.mean)
            if (m == mode) return scores.entity_scores->f1;
        throw Error("mode missing");
    };
    CHECK(f1("darag") > f1("wo_rac"));
}

TEST_CASE("cmd_evaluate is deterministic across repeated runs") {
    testutil::TempDir tmp;
    auto cfg = small_config(tmp, "det1");
    cmd_augment(cfg);
    cmd_build_store(cfg);
    auto r1 = cmd_evaluate(cfg);

    auto cfg2 = small_config(tmp, "det2");
    cmd_augment(cfg2);
    cmd_build_store(cfg2);
    auto r2 = cmd_evaluate(cfg2);

    auto strip_run_id = [](EvalReport r) {
        r.run_id = "";
        return eval_report_to_json(r);
    };
    CHECK(strip_run_id(r1) == strip_run_id(r2));
}

TEST_CASE("cmd_sweep writes one report per value") {
    testutil::TempDir tmp;
    auto cfg = small_config(tmp, "sweep");
    cmd_augment(cfg);
    cmd_build_store(cfg);
    auto sweep = cmd_sweep(cfg, SweepDimension::k, {1, 5});
    REQUIRE(sweep.reports.size() == 2);
    CHECK(fs::exists(fs::path(cfg.run_dir()) / "sweep_k.json"));
    auto table = render_sweep_table(sweep);
    CHECK(table.find("k=1") != std::string::npos);
    CHECK(table.find("k=5") != std::string::npos);
    CHECK(table.find("darag") != std::string::npos);

    CHECK_THROWS_AS(cmd_sweep(cfg, SweepDimension::k, {}), Error);
    CHECK_THROWS_AS(cmd_sweep(cfg, SweepDimension::k, {2.5}), Error);
    CHECK_THROWS_AS(cmd_sweep(cfg, SweepDimension::k, {0}), Error);
}

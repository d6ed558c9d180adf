#include "darag/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace darag {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string ExperimentConfig::run_dir() const {
    return (fs::path(output_dir) / run_id).string();
}

namespace {

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : fallback;
}

MockErrorChannel channel_from_json(const ordered_json& j) {
    MockErrorChannel ch;
    ch.substitution_rate = j.value("substitution_rate", 0.0);
    ch.deletion_rate = j.value("deletion_rate", 0.0);
    ch.insertion_rate = j.value("insertion_rate", 0.0);
    ch.hard_error_fraction = j.value("hard_error_fraction", 0.25);
    ch.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("confusion_table"))
        for (const auto& [token, confusables] : j["confusion_table"].items())
            ch.confusion_table[token] = confusables.get<std::vector<std::string>>();
    ch.validate();
    return ch;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        throw Error("harness: malformed config: " + std::string(e.what()));
    }
    ExperimentConfig cfg;
    cfg.run_id = j.value("run_id", cfg.run_id);
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    cfg.train_corpus = j.value("train_corpus", std::string{});
    cfg.test_corpus = j.value("test_corpus", std::string{});
    if (j.contains("ood_train_corpus") && !j["ood_train_corpus"].is_null())
        cfg.ood_train_corpus = j["ood_train_corpus"].get<std::string>();
    if (j.contains("synthetic_corpus") && !j["synthetic_corpus"].is_null())
        cfg.synthetic_corpus = j["synthetic_corpus"].get<std::string>();
    if (j.contains("store_path") && !j["store_path"].is_null())
        cfg.store_path = j["store_path"].get<std::string>();
    if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    if (cfg.seeds.empty()) throw Error("harness: seed list must be non-empty");
    cfg.load_options.n_best = j.value("n_best", cfg.load_options.n_best);
    std::string pad = j.value("pad_policy", std::string{"repeat_last"});
    if (pad == "strict")
        cfg.load_options.pad_policy = PadPolicy::strict;
    else if (pad == "repeat_last")
        cfg.load_options.pad_policy = PadPolicy::repeat_last;
    else
        throw Error("harness: unknown pad_policy '" + pad + "'");
    if (j.contains("normalization")) {
        const auto& n = j["normalization"];
        cfg.load_options.normalization.lowercase = n.value("lowercase", true);
        cfg.load_options.normalization.strip_punctuation = n.value("strip_punctuation", true);
        cfg.load_options.normalization.collapse_whitespace = n.value("collapse_whitespace", true);
    }
    if (j.contains("retrieval")) {
        cfg.retrieval.k = j["retrieval"].value("k", cfg.retrieval.k);
        cfg.retrieval.embedding_dim =
            j["retrieval"].value("embedding_dim", cfg.retrieval.embedding_dim);
    }
    cfg.retrieval.validate();
    if (j.contains("augmentation")) {
        const auto& a = j["augmentation"];
        cfg.augmentation.n_syn = a.value("n_syn", std::size_t{0});
        cfg.augmentation.examples_per_prompt =
            a.value("examples_per_prompt", cfg.augmentation.examples_per_prompt);
        cfg.augmentation.transcripts_per_call =
            a.value("transcripts_per_call", cfg.augmentation.transcripts_per_call);
        cfg.augmentation.seed = a.value("seed", std::uint64_t{0});
        cfg.augmentation.ood_mode = a.value("ood_mode", false);
        cfg.augmentation.replication_guard = a.value("replication_guard", true);
        cfg.augmentation.replica_threshold =
            a.value("replica_threshold", cfg.augmentation.replica_threshold);
        cfg.augmentation.validate();
    }
    if (j.contains("n_small") && !j["n_small"].is_null())
        cfg.n_small = j["n_small"].get<std::size_t>();
    if (j.contains("modes")) cfg.modes = j["modes"].get<std::vector<std::string>>();
    for (const auto& mode : cfg.modes) ablation_for_mode(mode);  // validate early
    cfg.include_synthetic_nes = j.value("include_synthetic_nes", true);
    if (j.contains("backends")) {
        const auto& b = j["backends"];
        std::string kind = b.value("kind", std::string{"mock"});
        if (kind == "mock")
            cfg.backends.kind = BackendKind::mock;
        else if (kind == "http")
            cfg.backends.kind = BackendKind::http;
        else
            throw Error("harness: unknown backend kind '" + kind + "'");
        cfg.backends.seed = b.value("seed", std::uint64_t{0});
        if (b.contains("decoding")) {
            const auto& d = b["decoding"];
            cfg.backends.decoding.temperature = d.value("temperature", 0.7);
            cfg.backends.decoding.top_p = d.value("top_p", 1.0);
            cfg.backends.decoding.beam_size = d.value("beam_size", cfg.load_options.n_best);
        } else {
            cfg.backends.decoding.beam_size = cfg.load_options.n_best;
        }
        cfg.backends.timeout_seconds = b.value("timeout_seconds", 30);
        cfg.backends.retry_limit = b.value("retry_limit", 3);
        cfg.backends.backoff_ms = b.value("backoff_ms", 100);
        cfg.backends.bearer_token = b.value("bearer_token", std::string{});
        if (b.contains("endpoints"))
            for (const auto& [name, uri] : b["endpoints"].items())
                cfg.backends.endpoints[name] = uri.get<std::string>();
        if (b.contains("channel")) cfg.backends.channel = channel_from_json(b["channel"]);
        if (b.contains("lexicon"))
            for (const auto& [surface, type] : b["lexicon"].items())
                cfg.backends.lexicon[surface] = type.get<std::string>();
        cfg.backends.copy_attack_generator = b.value("copy_attack_generator", false);
    } else {
        cfg.backends.decoding.beam_size = cfg.load_options.n_best;
    }
    if (cfg.backends.decoding.beam_size != cfg.load_options.n_best)
        throw Error("harness: transcriber beam_size must equal n_best");

    // Environment overrides: endpoints and token only.
    cfg.backends.bearer_token = env_or("DARAG_BEARER_TOKEN", cfg.backends.bearer_token);
    for (const char* svc : {"generator", "synthesizer", "transcriber", "embedder", "corrector"}) {
        std::string var = "DARAG_ENDPOINT_" + to_lower(svc);
        std::transform(var.begin(), var.end(), var.begin(), ::toupper);
        auto val = env_or(var.c_str(), "");
        if (!val.empty()) cfg.backends.endpoints[svc] = val;
    }
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("harness: cannot open config '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_experiment_config(buf.str());
}

AblationMask ablation_for_mode(const std::string& mode) {
    AblationMask mask;
    if (mode == "darag" || mode == "baseline") return mask;
    if (mode == "wo_rac") {
        mask.rac_enabled = false;
        return mask;
    }
    if (mode == "wo_aug") {
        mask.aug_source_included = false;
        return mask;
    }
    if (mode == "only_synth") {
        mask.real_source_included = false;
        return mask;
    }
    throw Error("harness: unknown ablation mode '" + mode + "'");
}

BackendSet make_backends(const ExperimentConfig& config, std::uint64_t seed_salt) {
    const auto& s = config.backends;
    BackendSet set;
    set.tagger = std::make_shared<GazetteerTagger>(
        std::map<std::string, std::string>(s.lexicon.begin(), s.lexicon.end()));
    if (s.kind == BackendKind::mock) {
        std::uint64_t seed = splitmix64(s.seed ^ seed_salt);
        if (s.copy_attack_generator)
            set.generator = std::make_shared<CopyAttackGenerator>();
        else
            set.generator = std::make_shared<MockTextGenerator>(seed);
        set.synthesizer = std::make_shared<MockSpeechSynthesizer>();
        MockErrorChannel channel = s.channel;
        channel.seed = splitmix64(channel.seed ^ seed_salt);
        set.transcriber = std::make_shared<MockTranscriber>(channel, s.decoding.beam_size);
        // The embedder stands in for a fixed pretrained model; it is never
        // salted so stored and query embeddings stay comparable across runs.
        set.embedder = std::make_shared<MockEmbedder>(config.retrieval.embedding_dim, s.seed);
        set.corrector = std::make_shared<OracleCorrector>(s.channel.confusion_table);
        return set;
    }
    auto backend_config = [&](const char* service) {
        BackendConfig c;
        c.kind = BackendKind::http;
        auto it = s.endpoints.find(service);
        if (it == s.endpoints.end())
            throw Error("harness: missing endpoint for service '" + std::string(service) + "'");
        c.endpoint = it->second;
        c.bearer_token = s.bearer_token;
        c.decoding = s.decoding;
        c.timeout_seconds = s.timeout_seconds;
        c.retry_limit = s.retry_limit;
        c.backoff_ms = s.backoff_ms;
        return c;
    };
    set.generator = std::make_shared<HttpTextGenerator>(backend_config("generator"));
    set.synthesizer = std::make_shared<HttpSpeechSynthesizer>(backend_config("synthesizer"));
    set.transcriber = std::make_shared<HttpTranscriber>(backend_config("transcriber"));
    set.embedder = std::make_shared<HttpEmbedder>(backend_config("embedder"),
                                                  config.retrieval.embedding_dim);
    set.corrector = std::make_shared<HttpCorrector>(backend_config("corrector"));
    return set;
}

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("harness: cannot write '" + path + "'");
    out << content;
}

std::string synthetic_path(const ExperimentConfig& config) {
    return config.synthetic_corpus
               ? *config.synthetic_corpus
               : (fs::path(config.run_dir()) / "synthetic.jsonl").string();
}

std::string store_path(const ExperimentConfig& config) {
    return config.store_path ? *config.store_path
                             : (fs::path(config.run_dir()) / "store.json").string();
}

Corpus load_train(const ExperimentConfig& config) {
    Corpus train = load_corpus(config.train_corpus, config.load_options);
    if (config.n_small && *config.n_small < train.size())
        train = subsample_ood(train, *config.n_small, config.augmentation.seed);
    return train;
}

std::optional<Corpus> load_synthetic_if_present(const ExperimentConfig& config) {
    std::string path = synthetic_path(config);
    if (!fs::exists(path)) return std::nullopt;
    return load_corpus(path, config.load_options);
}

}  // namespace

AugmentationResult cmd_augment(const ExperimentConfig& config) {
    fs::create_directories(config.run_dir());
    Corpus source;
    AugmentationPlan plan = config.augmentation;
    BackendSet backends = make_backends(config);
    if (plan.ood_mode) {
        if (!config.ood_train_corpus)
            throw Error("harness: ood_mode requires ood_train_corpus");
        // OOD source: n_small subsample, pseudo-labeled when transcripts are
        // marked pseudo_asr upstream. Here the corpus already carries audio.
        Corpus ood = load_corpus(*config.ood_train_corpus, config.load_options);
        std::size_t n_small = config.n_small.value_or(std::min<std::size_t>(100, ood.size()));
        source = subsample_ood(ood, std::min(n_small, ood.size()), plan.seed);
    } else {
        source = load_train(config);
    }
    if (plan.n_syn == 0) plan.n_syn = source.size();  // the n_syn = n policy
    AugmentationResult result = run_augmentation(source, plan, backends);
    save_corpus(result.synthetic, synthetic_path(config));
    write_file((fs::path(config.run_dir()) / "manifest.json").string(),
               augmentation_manifest_json(plan, result, config.backends.seed));
    return result;
}

Datastore cmd_build_store(const ExperimentConfig& config) {
    fs::create_directories(config.run_dir());
    BackendSet backends = make_backends(config);
    Corpus train = load_train(config);
    std::vector<std::string> train_transcripts;
    for (const auto& rec : train.records) train_transcripts.push_back(rec.utterance.transcript);
    auto entities = extract_entities(train_transcripts, *backends.tagger);
    Datastore store = build_store(entities, *backends.embedder, NeOrigin::train);
    if (config.include_synthetic_nes) {
        if (auto synthetic = load_synthetic_if_present(config)) {
            std::vector<std::string> syn_transcripts;
            for (const auto& rec : synthetic->records)
                syn_transcripts.push_back(rec.utterance.transcript);
            auto syn_entities = extract_entities(syn_transcripts, *backends.tagger);
            store = add_entries(store, syn_entities, *backends.embedder, NeOrigin::synthetic);
        }
    }
    save_store(store, store_path(config));
    return store;
}

namespace {

Corpus training_corpus(const ExperimentConfig& config) {
    Corpus train = load_train(config);
    if (auto synthetic = load_synthetic_if_present(config))
        train = merge_augmented(train, *synthetic);
    return train;
}

Datastore load_or_build_store(const ExperimentConfig& config) {
    std::string path = store_path(config);
    if (fs::exists(path)) return load_store(path);
    return cmd_build_store(config);
}

}  // namespace

SftExportStats cmd_make_sft(const ExperimentConfig& config, const std::string& mode) {
    fs::create_directories(config.run_dir());
    BackendSet backends = make_backends(config);
    Corpus train = training_corpus(config);
    Datastore store = load_or_build_store(config);
    AblationMask mask = ablation_for_mode(mode);
    std::string path = (fs::path(config.run_dir()) / ("sft_" + mode + ".jsonl")).string();
    return export_sft(train, store, *backends.embedder, config.retrieval, mask, path);
}

std::vector<std::string> cmd_correct(const ExperimentConfig& config, const std::string& mode) {
    fs::create_directories(config.run_dir());
    BackendSet backends = make_backends(config);
    Corpus test = load_corpus(config.test_corpus, config.load_options);
    Datastore store = load_or_build_store(config);
    AblationMask mask = ablation_for_mode(mode);
    auto outputs = run_correction(test, store, backends, config.retrieval, mask);
    ordered_json lines;
    std::string content;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        ordered_json j;
        j["id"] = test.records[i].utterance.id;
        j["corrected"] = outputs[i];
        content += j.dump() + "\n";
    }
    write_file((fs::path(config.run_dir()) / ("corrected_" + mode + ".jsonl")).string(), content);
    return outputs;
}

EvalReport cmd_evaluate(const ExperimentConfig& config) {
    fs::create_directories(config.run_dir());
    Corpus test = load_corpus(config.test_corpus, config.load_options);
    Datastore store = load_or_build_store(config);

    std::vector<std::string> refs;
    std::vector<std::string> best_hyps;
    for (const auto& rec : test.records) {
        refs.push_back(rec.utterance.transcript);
        best_hyps.push_back(rec.hypotheses.best());
    }
    double baseline = corpus_wer(refs, best_hyps);

    bool have_lexicon = !config.backends.lexicon.empty();
    std::vector<TypedEntity> gold;
    if (have_lexicon) {
        GazetteerTagger tagger(
            std::map<std::string, std::string>(config.backends.lexicon.begin(),
                                               config.backends.lexicon.end()));
        for (const auto& ref : refs)
            for (auto& [type, surface] : tagger.tag(ref)) gold.push_back({type, surface});
    }

    EvalReport report;
    report.run_id = config.run_id;
    report.seeds = config.seeds;
    for (const auto& mode : config.modes) report.per_seed.emplace_back(mode, std::vector<AblationScores>{});

    for (std::size_t si = 0; si < config.seeds.size(); ++si) {
        BackendSet backends = make_backends(config, config.seeds[si]);
        for (std::size_t mi = 0; mi < config.modes.size(); ++mi) {
            const std::string& mode = config.modes[mi];
            AblationMask mask = ablation_for_mode(mode);
            AblationScores scores;
            scores.baseline_wer = baseline;
            if (mode == "baseline") {
                scores.corrected_wer = baseline;
            } else {
                auto outputs =
                    run_correction(test, store, backends, config.retrieval, mask);
                scores.corrected_wer = corpus_wer(refs, outputs);
                if (have_lexicon) {
                    GazetteerTagger tagger(std::map<std::string, std::string>(
                        config.backends.lexicon.begin(), config.backends.lexicon.end()));
                    std::vector<TypedEntity> pred;
                    for (const auto& out : outputs)
                        for (auto& [type, surface] : tagger.tag(out))
                            pred.push_back({type, surface});
                    scores.entity_scores = entity_f1(gold, pred);
                }
            }
            scores.relative_improvement =
                baseline > 0 ? (baseline - scores.corrected_wer) / baseline : 0.0;
            report.per_seed[mi].second.push_back(scores);

            ordered_json j;
            j["mode"] = mode;
            j["seed"] = config.seeds[si];
            j["baseline_wer"] = scores.baseline_wer;
            j["corrected_wer"] = scores.corrected_wer;
            j["relative_improvement"] = scores.relative_improvement;
            if (scores.entity_scores) j["entity_f1"] = scores.entity_scores->f1;
            write_file((fs::path(config.run_dir()) /
                        ("eval_" + mode + "_seed" + std::to_string(config.seeds[si]) + ".json"))
                           .string(),
                       j.dump(2) + "\n");
        }
    }

    // Arithmetic mean over seeds; per-seed values stay in the JSON report.
    for (const auto& [mode, rows] : report.per_seed) {
        AblationScores mean;
        bool any_f1 = false;
        F1Scores f1_sum;
        for (const auto& row : rows) {
            mean.baseline_wer += row.baseline_wer;
            mean.corrected_wer += row.corrected_wer;
            mean.relative_improvement += row.relative_improvement;
            if (row.entity_scores) {
                any_f1 = true;
                f1_sum.precision += row.entity_scores->precision;
                f1_sum.recall += row.entity_scores->recall;
                f1_sum.f1 += row.entity_scores->f1;
            }
        }
        double count = static_cast<double>(rows.size());
        mean.baseline_wer /= count;
        mean.corrected_wer /= count;
        mean.relative_improvement /= count;
        if (any_f1) {
            f1_sum.precision /= count;
            f1_sum.recall /= count;
            f1_sum.f1 /= count;
            mean.entity_scores = f1_sum;
        }
        report.mean.emplace_back(mode, mean);
    }

    write_file((fs::path(config.run_dir()) / "report.json").string(),
               eval_report_to_json(report));
    write_file((fs::path(config.run_dir()) / "report.txt").string(),
               render_report_table(report));
    return report;
}

SweepDimension sweep_dimension_from_string(const std::string& s) {
    if (s == "k") return SweepDimension::k;
    if (s == "n_small") return SweepDimension::n_small;
    if (s == "n_syn") return SweepDimension::n_syn;
    throw Error("harness: unknown sweep dimension '" + s + "'");
}

namespace {

std::string dimension_name(SweepDimension d) {
    switch (d) {
        case SweepDimension::k: return "k";
        case SweepDimension::n_small: return "n_small";
        case SweepDimension::n_syn: return "n_syn";
    }
    throw Error("harness: bad sweep dimension");
}

}  // namespace

SweepReport cmd_sweep(const ExperimentConfig& config, SweepDimension dimension,
                      const std::vector<double>& values) {
    if (values.empty()) throw Error("harness: sweep needs at least one value");
    for (double v : values) {
        if (v < 0 || v != std::floor(v))
            throw Error("harness: sweep values must be non-negative integers");
        if (dimension == SweepDimension::k && v < 1)
            throw Error("harness: k must be >= 1");
    }
    SweepReport sweep;
    sweep.dimension = dimension;
    sweep.values = values;
    for (double v : values) {
        ExperimentConfig point = config;
        point.run_id = config.run_id + "_" + dimension_name(dimension) + std::to_string(
                           static_cast<long long>(v));
        switch (dimension) {
            case SweepDimension::k:
                point.retrieval.k = static_cast<std::size_t>(v);
                // Reuse the parent run's augmentation artifacts; k only
                // affects retrieval.
                point.synthetic_corpus = synthetic_path(config);
                break;
            case SweepDimension::n_small:
                point.n_small = static_cast<std::size_t>(v);
                break;
            case SweepDimension::n_syn:
                point.augmentation.n_syn = static_cast<std::size_t>(v);
                break;
        }
        if (dimension != SweepDimension::k && point.augmentation.n_syn > 0) cmd_augment(point);
        sweep.reports.push_back(cmd_evaluate(point));
    }
    fs::create_directories(config.run_dir());
    write_file((fs::path(config.run_dir()) /
                ("sweep_" + dimension_name(dimension) + ".json")).string(),
               sweep_report_to_json(sweep));
    write_file((fs::path(config.run_dir()) /
                ("sweep_" + dimension_name(dimension) + ".txt")).string(),
               render_sweep_table(sweep));
    return sweep;
}

std::string sweep_report_to_json(const SweepReport& report) {
    ordered_json j;
    j["dimension"] = dimension_name(report.dimension);
    j["values"] = report.values;
    ordered_json points = ordered_json::array();
    for (const auto& r : report.reports)
        points.push_back(ordered_json::parse(eval_report_to_json(r)));
    j["points"] = points;
    return j.dump(2) + "\n";
}

std::string render_sweep_table(const SweepReport& report) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header{"Mode"};
    for (double v : report.values)
        header.push_back(dimension_name(report.dimension) + "=" +
                         std::to_string(static_cast<long long>(v)));
    rows.push_back(header);
    if (!report.reports.empty()) {
        for (std::size_t mi = 0; mi < report.reports.front().mean.size(); ++mi) {
            std::vector<std::string> row{report.reports.front().mean[mi].first};
            for (const auto& r : report.reports) {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.1f", r.mean[mi].second.corrected_wer * 100.0);
                row.push_back(buf);
            }
            rows.push_back(std::move(row));
        }
    }
    std::vector<std::size_t> widths(rows.front().size(), 0);
    for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
    std::ostringstream out;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            out << rows[r][c] << std::string(widths[c] - rows[r][c].size(), ' ');
            if (c + 1 < rows[r].size()) out << "  ";
        }
        out << '\n';
        if (r == 0) {
            for (std::size_t c = 0; c < widths.size(); ++c) {
                out << std::string(widths[c], '-');
                if (c + 1 < widths.size()) out << "  ";
            }
            out << '\n';
        }
    }
    return out.str();
}

}  // namespace darag

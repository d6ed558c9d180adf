#include "darag/gec.hpp"

#include <fstream>

#include <json.hpp>

namespace darag {

using ordered_json = nlohmann::ordered_json;

GecExample build_example(const HypothesisRecord& record, const Datastore& store,
                         Embedder& embedder, const RetrievalConfig& config,
                         const AblationMask& ablation, const std::optional<std::string>& target) {
    if (record.hypotheses.empty() || record.best().empty())
        throw Error("gec: record '" + record.utterance_id + "' has an empty best hypothesis");
    GecExample example;
    if (ablation.rac_enabled) {
        auto retrieved = retrieve_top_k(store, record.best(), embedder, config);
        for (const auto& scored : retrieved) example.retrieved_nes.push_back(scored.entry.surface);
    }
    std::vector<std::string> others(record.hypotheses.begin() + 1, record.hypotheses.end());
    example.instruction = build_instruction(record.best(), others, example.retrieved_nes);
    example.target = target;
    return example;
}

SftExportStats export_sft(const Corpus& corpus, const Datastore& store, Embedder& embedder,
                          const RetrievalConfig& config, const AblationMask& ablation,
                          const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("gec: cannot write '" + path + "'");
    SftExportStats stats;
    for (const auto& rec : corpus.records) {
        if (!ablation.keeps(rec.utterance.source)) continue;
        GecExample ex = build_example(rec.hypotheses, store, embedder, config, ablation,
                                      rec.utterance.transcript);
        ordered_json j;
        j["instruction"] = ex.instruction;
        j["target"] = *ex.target;
        out << j.dump() << '\n';
        ++stats.pairs;
        if (rec.utterance.source == Source::real)
            ++stats.real_pairs;
        else
            ++stats.synthetic_pairs;
    }
    if (!out) throw Error("gec: write failure on '" + path + "'");

    ordered_json meta;
    meta["pairs"] = stats.pairs;
    meta["real_pairs"] = stats.real_pairs;
    meta["synthetic_pairs"] = stats.synthetic_pairs;
    meta["k"] = config.k;
    meta["n_best"] = corpus.metadata.n_best;
    meta["n"] = corpus.metadata.n;
    meta["n_syn"] = corpus.metadata.n_syn;
    meta["rac_enabled"] = ablation.rac_enabled;
    meta["aug_source_included"] = ablation.aug_source_included;
    meta["real_source_included"] = ablation.real_source_included;
    meta["corpus_hash"] = fnv1a(serialize_corpus(corpus));
    meta["store_entries"] = store.size();
    // Opaque hints for the external adapter fine-tuning stage.
    meta["trainer_hints"] = {{"method", "lora"}, {"rank", 8}};
    std::ofstream meta_out(path + ".meta.json", std::ios::binary);
    if (!meta_out) throw Error("gec: cannot write '" + path + ".meta.json'");
    meta_out << meta.dump(2) << '\n';
    return stats;
}

std::vector<std::string> run_correction(const Corpus& test_corpus, const Datastore& store,
                                        const BackendSet& backends, const RetrievalConfig& config,
                                        const AblationMask& ablation,
                                        double max_failure_fraction) {
    std::vector<std::string> outputs(test_corpus.size());
    std::vector<std::string> failures;
    for (std::size_t i = 0; i < test_corpus.size(); ++i) {
        const auto& rec = test_corpus.records[i];
        try {
            GecExample ex =
                build_example(rec.hypotheses, store, *backends.embedder, config, ablation);
            std::string corrected = backends.corrector->correct(ex.instruction);
            outputs[i] = test_corpus.metadata.normalization.apply(corrected);
        } catch (const std::exception& e) {
            failures.push_back(rec.utterance.id + ": " + e.what());
            outputs[i] = rec.hypotheses.best();  // fall back to the uncorrected hypothesis
        }
    }
    if (!failures.empty()) {
        double fraction = static_cast<double>(failures.size()) /
                          static_cast<double>(test_corpus.size());
        if (fraction > max_failure_fraction)
            throw Error("gec: " + std::to_string(failures.size()) +
                        " corrector failures (first: " + failures.front() + ")");
    }
    return outputs;
}

}  // namespace darag

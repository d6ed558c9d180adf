#pragma once

#include <optional>
#include <string>
#include <vector>

#include "darag/backends.hpp"
#include "darag/corpus.hpp"
#include "darag/instruction.hpp"
#include "darag/ne_store.hpp"

namespace darag {

struct AblationMask {
    bool rac_enabled = true;          // false: empty NE field, no retrieval call
    bool aug_source_included = true;  // false: synthetic records dropped
    bool real_source_included = true; // false: only synthetic records kept

    bool keeps(Source source) const {
        return source == Source::real ? real_source_included : aug_source_included;
    }
};

struct GecExample {
    std::string instruction;
    std::optional<std::string> target;       // present for training examples only
    std::vector<std::string> retrieved_nes;  // surfaces, retrieval order
};

/// Instantiate the correction instruction for one record: best hypothesis,
/// the N-1 other hypotheses one per line, and the top-k retrieved NE
/// surfaces as a comma-separated list (empty field when RAC is ablated).
GecExample build_example(const HypothesisRecord& record, const Datastore& store,
                         Embedder& embedder, const RetrievalConfig& config,
                         const AblationMask& ablation,
                         const std::optional<std::string>& target = std::nullopt);

struct SftExportStats {
    std::size_t pairs = 0;
    std::size_t real_pairs = 0;
    std::size_t synthetic_pairs = 0;
};

/// Write the fine-tuning file: one {"instruction", "target"} JSON object per
/// line, ablation-filtered, plus a sidecar metadata JSON at path + ".meta.json".
SftExportStats export_sft(const Corpus& corpus, const Datastore& store, Embedder& embedder,
                          const RetrievalConfig& config, const AblationMask& ablation,
                          const std::string& path);

/// Build inference-time examples for every test record and run them through
/// the corrector, order preserved, outputs normalized with the corpus policy.
std::vector<std::string> run_correction(const Corpus& test_corpus, const Datastore& store,
                                        const BackendSet& backends, const RetrievalConfig& config,
                                        const AblationMask& ablation,
                                        double max_failure_fraction = 0.0);

}  // namespace darag

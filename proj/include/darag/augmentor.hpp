#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "darag/backends.hpp"
#include "darag/corpus.hpp"
#include "darag/metrics.hpp"

namespace darag {

struct AugmentationPlan {
    std::size_t n_syn = 0;
    std::size_t examples_per_prompt = 5;
    std::size_t transcripts_per_call = 2;  // the generation prompt yields 2
    std::uint64_t seed = 0;
    bool ood_mode = false;
    bool replication_guard = true;
    double replica_threshold = 0.8;
    std::size_t parse_retries = 3;       // fresh example sampling per retry
    std::size_t regeneration_budget = 3; // retries for flagged replicas

    void validate() const;
};

/// Exact instantiation of the generation prompt with the examples joined by
/// newlines in the "{}" placeholder. No other substitution happens; examples
/// containing "{}" are inserted verbatim.
std::string build_generation_prompt(const std::vector<std::string>& examples);

/// Extract the two generated transcripts from a raw model response,
/// tolerating surrounding prose around the outermost JSON object.
std::vector<std::string> parse_generation(const std::string& raw,
                                          const NormalizationPolicy& normalization = {});

struct ProvenanceEntry {
    std::string synthetic_id;
    std::vector<std::string> prompt_example_ids;
    std::string style_utterance_id;
    std::uint64_t generation_seed = 0;
};

struct AugmentationResult {
    Corpus synthetic;
    std::vector<ProvenanceEntry> provenance;
    std::size_t generation_calls = 0;
    std::size_t dropped_replicas = 0;  // shortfall after the retry budget
    std::optional<ReplicationReport> replication;
};

/// Three-step augmentation: sample in-context examples, generate
/// transcripts, voice-clone them conditioned on sampled source utterances,
/// and harvest N-best hypotheses. Deterministic given (plan.seed, backends).
AugmentationResult run_augmentation(const Corpus& source, const AugmentationPlan& plan,
                                    const BackendSet& backends);

/// Label OOD audio with the transcriber's best hypothesis
/// (transcript_provenance = pseudo_asr).
Corpus pseudo_label(const std::vector<std::string>& ood_audio_refs, Transcriber& transcriber,
                    const LoadOptions& options = {});

std::string augmentation_manifest_json(const AugmentationPlan& plan,
                                       const AugmentationResult& result,
                                       std::uint64_t backend_seed);

}  // namespace darag

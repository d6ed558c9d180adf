#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "darag/augmentor.hpp"
#include "darag/backends.hpp"
#include "darag/corpus.hpp"
#include "darag/gec.hpp"
#include "darag/metrics.hpp"
#include "darag/ne_store.hpp"

namespace darag {

struct BackendSettings {
    BackendKind kind = BackendKind::mock;
    std::uint64_t seed = 0;
    DecodingConfig decoding;
    int timeout_seconds = 30;
    int retry_limit = 3;
    int backoff_ms = 100;
    std::string bearer_token;
    std::map<std::string, std::string> endpoints;  // service name -> base URI
    MockErrorChannel channel;
    std::map<std::string, std::string> lexicon;  // NE surface -> type
    bool copy_attack_generator = false;          // test hook for the replication guard
};

struct ExperimentConfig {
    std::string run_id = "run";
    std::string output_dir = "out";
    std::string train_corpus;
    std::string test_corpus;
    std::optional<std::string> ood_train_corpus;
    std::optional<std::string> synthetic_corpus;  // default: <run dir>/synthetic.jsonl
    std::optional<std::string> store_path;        // default: <run dir>/store.json
    std::vector<std::uint64_t> seeds{1, 2, 3};
    LoadOptions load_options;
    RetrievalConfig retrieval;
    AugmentationPlan augmentation;
    std::optional<std::size_t> n_small;  // OOD subsampling before augmentation
    std::vector<std::string> modes{"darag", "wo_rac", "wo_aug", "only_synth"};
    bool include_synthetic_nes = true;
    BackendSettings backends;

    std::string run_dir() const;
};

/// Parse the JSON experiment configuration. DARAG_ENDPOINT_<SERVICE> and
/// DARAG_BEARER_TOKEN environment variables override the endpoint and token
/// fields; nothing else is overridable from the environment.
ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig parse_experiment_config(const std::string& json_text);

AblationMask ablation_for_mode(const std::string& mode);

/// Instantiate the configured backend set (seed_salt perturbs mock seeds for
/// per-run-seed variation; it has no effect on http backends).
BackendSet make_backends(const ExperimentConfig& config, std::uint64_t seed_salt = 0);

/// Run the synthetic augmentation stage and write synthetic.jsonl plus
/// manifest.json under the run directory. Returns the replication summary.
AugmentationResult cmd_augment(const ExperimentConfig& config);

/// Extract NEs from the train (and synthetic, when present) transcripts and
/// persist the datastore.
Datastore cmd_build_store(const ExperimentConfig& config);

/// Export the fine-tuning pairs for one ablation mode.
SftExportStats cmd_make_sft(const ExperimentConfig& config, const std::string& mode);

/// Run correction over the test corpus for one mode and write the outputs.
std::vector<std::string> cmd_correct(const ExperimentConfig& config, const std::string& mode);

/// Full evaluation: baseline WER, per-mode corrected WER and entity F1,
/// aggregated over seeds. Writes report files and the plain-text table.
EvalReport cmd_evaluate(const ExperimentConfig& config);

enum class SweepDimension { k, n_small, n_syn };

SweepDimension sweep_dimension_from_string(const std::string& s);

struct SweepReport {
    SweepDimension dimension;
    std::vector<double> values;
    std::vector<EvalReport> reports;  // one per value, same order
};

/// One evaluation per value, shared seeds, sequential. n_small and n_syn
/// points re-run the augmentation stage; k points reuse the run's artifacts.
SweepReport cmd_sweep(const ExperimentConfig& config, SweepDimension dimension,
                      const std::vector<double>& values);

std::string render_sweep_table(const SweepReport& report);
std::string sweep_report_to_json(const SweepReport& report);

}  // namespace darag

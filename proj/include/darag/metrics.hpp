#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "darag/common.hpp"

namespace darag {

class Embedder;  // backends.hpp

enum class EditOp { match, substitute, insert_op, delete_op };

struct AlignmentStep {
    EditOp op;
    std::optional<std::string> ref_token;
    std::optional<std::string> hyp_token;
};

/// Levenshtein-optimal word alignment. Invariants:
///   S + D + M = len(ref), S + I + M = len(hyp), S + D + I minimal.
struct Alignment {
    std::vector<AlignmentStep> ops;
    std::size_t substitutions = 0;
    std::size_t deletions = 0;
    std::size_t insertions = 0;
    std::size_t matches = 0;

    std::size_t errors() const { return substitutions + deletions + insertions; }
};

/// Minimum-edit alignment with a fixed backtrace tie-break
/// (match > substitute > delete > insert). Empty ref is an error; empty hyp
/// aligns as all deletions.
Alignment align(const std::vector<std::string>& ref, const std::vector<std::string>& hyp);

/// (S + D + I) / len(ref). May exceed 1 with many insertions.
double wer(const std::vector<std::string>& ref, const std::vector<std::string>& hyp);
double wer(const std::string& ref, const std::string& hyp);

/// Pooled WER: sum of errors over sum of reference lengths (not the mean of
/// per-utterance WERs).
double corpus_wer(const std::vector<std::string>& refs, const std::vector<std::string>& hyps);

/// BLEU_1..BLEU_n against a single reference, modified n-gram precision with
/// brevity penalty, no smoothing (a zero n-gram count makes that order 0).
/// b_n is 0 when the candidate is shorter than n tokens.
std::vector<double> bleu_n(const std::vector<std::string>& candidate,
                           const std::vector<std::string>& reference, std::size_t n_max);
std::vector<double> bleu_n(const std::string& candidate, const std::string& reference,
                           std::size_t n_max);

double cosine(const std::vector<double>& u, const std::vector<double>& v);

struct TypedEntity {
    std::string type;
    std::string surface;

    bool operator==(const TypedEntity&) const = default;
};

struct F1Scores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Micro-averaged exact multiset matching of (type, surface) pairs. A true
/// positive consumes one gold instance. Empty denominators yield 0.
F1Scores entity_f1(const std::vector<TypedEntity>& gold, const std::vector<TypedEntity>& pred);

struct ReplicationReport {
    double mean_similarity = 0.0;
    double mean_bleu = 0.0;  // mean over generated of avg(BLEU_1..BLEU_3) vs nearest neighbor
    std::vector<std::size_t> flagged;        // indices with bleu average > threshold
    std::vector<double> per_item_similarity;
    std::vector<double> per_item_bleu;
};

/// Nearest-neighbor replication check: for each generated transcript, find
/// the most cosine-similar training transcript, score BLEU-(1,2,3) against
/// it, and flag likely replicas.
ReplicationReport replication_check(const std::vector<std::string>& generated,
                                    const std::vector<std::string>& training, Embedder& embedder,
                                    double replica_threshold = 0.8);

struct AblationScores {
    double baseline_wer = 0.0;   // hypotheses[0] vs reference
    double corrected_wer = 0.0;
    double relative_improvement = 0.0;  // (baseline - corrected) / baseline
    std::optional<F1Scores> entity_scores;
};

struct EvalReport {
    std::string run_id;
    std::vector<std::uint64_t> seeds;
    // ablation name -> per-seed scores, plus the seed-mean row.
    std::vector<std::pair<std::string, std::vector<AblationScores>>> per_seed;
    std::vector<std::pair<std::string, AblationScores>> mean;
    std::optional<ReplicationReport> replication;
};

std::string eval_report_to_json(const EvalReport& report);
EvalReport eval_report_from_json(const std::string& text);

/// Aligned plain-text table: one row per ablation, WER percentages with one
/// decimal and the relative-improvement percentage alongside.
std::string render_report_table(const EvalReport& report);

}  // namespace darag

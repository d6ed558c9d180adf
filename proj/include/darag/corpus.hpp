#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "darag/common.hpp"

namespace darag {

enum class Source { real, synthetic };
enum class Provenance { human, pseudo_asr };
enum class Split { train, test };
enum class PadPolicy { strict, repeat_last };

std::string to_string(Source s);
std::string to_string(Provenance p);
Source source_from_string(const std::string& s);
Provenance provenance_from_string(const std::string& s);

/// One audio reference plus its ground-truth (or pseudo) transcript.
struct Utterance {
    std::string id;
    std::string audio_ref;  // empty for text-only synthetic records before synthesis
    std::string transcript; // normalized token string
    Source source = Source::real;
    std::string domain_tag;
    Provenance transcript_provenance = Provenance::human;
    std::optional<std::uint64_t> generation_seed;  // required when source == synthetic
};

/// An utterance's ordered N-best list. hypotheses[0] is the best hypothesis.
struct HypothesisRecord {
    std::string utterance_id;
    std::vector<std::string> hypotheses;
    std::vector<double> asr_scores;  // optional; non-increasing when present

    const std::string& best() const { return hypotheses.front(); }
};

struct CorpusRecord {
    Utterance utterance;
    HypothesisRecord hypotheses;
};

struct CorpusMetadata {
    std::string domain_tag;
    std::size_t n = 0;      // count of source == real
    std::size_t n_syn = 0;  // count of source == synthetic
    Split split = Split::train;
    std::size_t n_best = 0;
    NormalizationPolicy normalization;
};

/// Immutable after load; share freely across readers.
struct Corpus {
    std::vector<CorpusRecord> records;
    CorpusMetadata metadata;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }
};

struct LoadOptions {
    std::size_t n_best = 5;
    PadPolicy pad_policy = PadPolicy::repeat_last;
    NormalizationPolicy normalization;
};

/// Parse a line-delimited JSON corpus file, validate invariants, normalize
/// every transcript and hypothesis, and apply the pad policy so that every
/// record carries exactly n_best hypotheses.
Corpus load_corpus(const std::string& path, const LoadOptions& options = {});

/// Build a corpus from in-memory records, running the same validation and
/// normalization as load_corpus.
Corpus make_corpus(std::vector<CorpusRecord> records, const LoadOptions& options = {});

/// Canonical serialization: one compact JSON object per line, fixed key
/// order, UTF-8, \n endings, no BOM. save(load(f)) is byte-stable.
void save_corpus(const Corpus& corpus, const std::string& path);
std::string serialize_corpus(const Corpus& corpus);

/// Append synthetic records to a real base. Base records first, order stable.
Corpus merge_augmented(const Corpus& base, const Corpus& synthetic);

/// Deterministically pick n_small records (original order preserved).
Corpus subsample_ood(const Corpus& corpus, std::size_t n_small, std::uint64_t seed);

}  // namespace darag

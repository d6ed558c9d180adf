#include "darag/corpus.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

namespace darag {

using ordered_json = nlohmann::ordered_json;

std::string to_string(Source s) { return s == Source::real ? "real" : "synthetic"; }
std::string to_string(Provenance p) { return p == Provenance::human ? "human" : "pseudo_asr"; }

Source source_from_string(const std::string& s) {
    if (s == "real") return Source::real;
    if (s == "synthetic") return Source::synthetic;
    throw Error("corpus: unknown source '" + s + "'");
}

Provenance provenance_from_string(const std::string& s) {
    if (s == "human") return Provenance::human;
    if (s == "pseudo_asr") return Provenance::pseudo_asr;
    throw Error("corpus: unknown transcript_provenance '" + s + "'");
}

namespace {

void validate_and_normalize(CorpusRecord& rec, const LoadOptions& options,
                            const std::string& where) {
    auto& utt = rec.utterance;
    auto& hyp = rec.hypotheses;
    if (utt.id.empty()) throw Error("corpus: empty utterance id " + where);
    utt.transcript = options.normalization.apply(utt.transcript);
    if (utt.transcript.empty())
        throw Error("corpus: empty transcript after normalization for id '" + utt.id + "' " + where);
    if (utt.source == Source::synthetic && !utt.generation_seed)
        throw Error("corpus: synthetic record '" + utt.id + "' missing generation_seed " + where);
    hyp.utterance_id = utt.id;
    if (hyp.hypotheses.empty())
        throw Error("corpus: record '" + utt.id + "' has no hypotheses " + where);
    for (auto& h : hyp.hypotheses) h = options.normalization.apply(h);
    if (hyp.hypotheses.size() > options.n_best)
        throw Error("corpus: record '" + utt.id + "' has more than N hypotheses " + where);
    if (hyp.hypotheses.size() < options.n_best) {
        if (options.pad_policy == PadPolicy::strict)
            throw Error("corpus: record '" + utt.id + "' has fewer than N hypotheses " + where);
        while (hyp.hypotheses.size() < options.n_best) {
            hyp.hypotheses.push_back(hyp.hypotheses.back());
            if (!hyp.asr_scores.empty()) hyp.asr_scores.push_back(hyp.asr_scores.back());
        }
    }
    if (!hyp.asr_scores.empty()) {
        if (hyp.asr_scores.size() != hyp.hypotheses.size())
            throw Error("corpus: record '" + utt.id + "' score/hypothesis length mismatch " + where);
        for (std::size_t i = 1; i < hyp.asr_scores.size(); ++i)
            if (hyp.asr_scores[i] > hyp.asr_scores[i - 1])
                throw Error("corpus: record '" + utt.id + "' scores not non-increasing " + where);
    }
}

CorpusRecord record_from_json(const ordered_json& j) {
    CorpusRecord rec;
    rec.utterance.id = j.at("id").get<std::string>();
    rec.utterance.audio_ref = j.value("audio_ref", std::string{});
    rec.utterance.transcript = j.at("transcript").get<std::string>();
    rec.utterance.source = source_from_string(j.value("source", std::string{"real"}));
    rec.utterance.domain_tag = j.value("domain_tag", std::string{});
    rec.utterance.transcript_provenance =
        provenance_from_string(j.value("transcript_provenance", std::string{"human"}));
    if (j.contains("generation_seed") && !j["generation_seed"].is_null())
        rec.utterance.generation_seed = j["generation_seed"].get<std::uint64_t>();
    rec.hypotheses.hypotheses = j.at("hypotheses").get<std::vector<std::string>>();
    if (j.contains("asr_scores") && !j["asr_scores"].is_null())
        rec.hypotheses.asr_scores = j["asr_scores"].get<std::vector<double>>();
    return rec;
}

ordered_json record_to_json(const CorpusRecord& rec) {
    ordered_json j;
    j["id"] = rec.utterance.id;
    j["audio_ref"] = rec.utterance.audio_ref;
    j["transcript"] = rec.utterance.transcript;
    j["source"] = to_string(rec.utterance.source);
    j["domain_tag"] = rec.utterance.domain_tag;
    j["transcript_provenance"] = to_string(rec.utterance.transcript_provenance);
    if (rec.utterance.generation_seed) j["generation_seed"] = *rec.utterance.generation_seed;
    j["hypotheses"] = rec.hypotheses.hypotheses;
    if (!rec.hypotheses.asr_scores.empty()) j["asr_scores"] = rec.hypotheses.asr_scores;
    return j;
}

void refresh_counts(Corpus& corpus) {
    corpus.metadata.n = 0;
    corpus.metadata.n_syn = 0;
    for (const auto& rec : corpus.records) {
        if (rec.utterance.source == Source::real)
            ++corpus.metadata.n;
        else
            ++corpus.metadata.n_syn;
    }
}

}  // namespace

Corpus make_corpus(std::vector<CorpusRecord> records, const LoadOptions& options) {
    Corpus corpus;
    corpus.metadata.n_best = options.n_best;
    corpus.metadata.normalization = options.normalization;
    std::unordered_set<std::string> seen;
    for (auto& rec : records) {
        validate_and_normalize(rec, options, "");
        if (!seen.insert(rec.utterance.id).second)
            throw Error("corpus: duplicate utterance id '" + rec.utterance.id + "'");
    }
    corpus.records = std::move(records);
    if (!corpus.records.empty()) corpus.metadata.domain_tag = corpus.records.front().utterance.domain_tag;
    refresh_counts(corpus);
    return corpus;
}

Corpus load_corpus(const std::string& path, const LoadOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("corpus: cannot open '" + path + "'");
    Corpus corpus;
    corpus.metadata.n_best = options.n_best;
    corpus.metadata.normalization = options.normalization;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::string where = "(line " + std::to_string(line_no) + ")";
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const std::exception& e) {
            throw Error("corpus: malformed JSON " + where + ": " + e.what());
        }
        CorpusRecord rec;
        try {
            rec = record_from_json(j);
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            throw Error("corpus: invalid record " + where + ": " + e.what());
        }
        validate_and_normalize(rec, options, where);
        if (!seen.insert(rec.utterance.id).second)
            throw Error("corpus: duplicate utterance id '" + rec.utterance.id + "' " + where);
        corpus.records.push_back(std::move(rec));
    }
    if (!corpus.records.empty()) corpus.metadata.domain_tag = corpus.records.front().utterance.domain_tag;
    refresh_counts(corpus);
    return corpus;
}

std::string serialize_corpus(const Corpus& corpus) {
    std::string out;
    for (const auto& rec : corpus.records) {
        out += record_to_json(rec).dump();
        out.push_back('\n');
    }
    return out;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("corpus: cannot write '" + path + "'");
    out << serialize_corpus(corpus);
    if (!out) throw Error("corpus: write failure on '" + path + "'");
}

Corpus merge_augmented(const Corpus& base, const Corpus& synthetic) {
    if (!synthetic.empty() && !base.empty() &&
        base.metadata.n_best != synthetic.metadata.n_best)
        throw Error("corpus: N mismatch in merge_augmented");
    if (base.metadata.normalization != synthetic.metadata.normalization && !synthetic.empty() &&
        !base.empty())
        throw Error("corpus: normalization policy mismatch in merge_augmented");
    for (const auto& rec : synthetic.records)
        if (rec.utterance.source != Source::synthetic)
            throw Error("corpus: merge_augmented given non-synthetic record '" +
                        rec.utterance.id + "'");
    std::unordered_set<std::string> ids;
    for (const auto& rec : base.records) ids.insert(rec.utterance.id);
    Corpus merged = base;
    for (const auto& rec : synthetic.records) {
        if (!ids.insert(rec.utterance.id).second)
            throw Error("corpus: id collision on '" + rec.utterance.id + "' in merge_augmented");
        merged.records.push_back(rec);
    }
    refresh_counts(merged);
    return merged;
}

Corpus subsample_ood(const Corpus& corpus, std::size_t n_small, std::uint64_t seed) {
    if (n_small > corpus.size())
        throw Error("corpus: n_small exceeds corpus size in subsample_ood");
    std::mt19937_64 rng(seed);
    auto picked = sample_without_replacement(rng, corpus.size(), n_small);
    Corpus out;
    out.metadata = corpus.metadata;
    for (std::size_t idx : picked) out.records.push_back(corpus.records[idx]);
    refresh_counts(out);
    return out;
}

}  // namespace darag

#include "darag/augmentor.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

namespace darag {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kPromptTemplate =
    "You need to act as a synthetic data generator. I will provide you with some "
    "example transcripts from a speech recognition dataset that I have transcribed "
    "using an ASR model. The transcripts are not related to each other. You need to "
    "first understand the nature of the spoken utterances from the transcripts and "
    "analyze their distinct features, like domain, style, length, etc. Next, with "
    "what you understood, you need to generate 2 short and diverse utterances with "
    "the same properties but diverse content. Each utterance should be a single "
    "sentence. Please include named entities as and when possible, but it is not "
    "necessary. Keep the utterances short and in line with the examples. Your "
    "generated transcripts should be coherent. Here are the example transcripts, "
    "one in each line:{}. Return a JSON with 2 keys named \"First Transcript\" and "
    "\"Second Transcript\" with the values as the generated transcripts.";

}  // namespace

void AugmentationPlan::validate() const {
    if (transcripts_per_call < 1) throw Error("augmentor: transcripts_per_call must be >= 1");
    if (examples_per_prompt < 1) throw Error("augmentor: examples_per_prompt must be >= 1");
    if (replica_threshold <= 0) throw Error("augmentor: replica_threshold must be positive");
}

std::string build_generation_prompt(const std::vector<std::string>& examples) {
    if (examples.empty()) throw Error("augmentor: no in-context examples");
    std::string joined;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        if (i) joined.push_back('\n');
        joined += examples[i];
    }
    std::string prompt = kPromptTemplate;
    auto pos = prompt.find("{}");
    prompt.replace(pos, 2, joined);  // single pass, inserted text never re-scanned
    return prompt;
}

std::vector<std::string> parse_generation(const std::string& raw,
                                          const NormalizationPolicy& normalization) {
    // Scan for the outermost JSON object, tolerating surrounding prose.
    auto start = raw.find('{');
    if (start == std::string::npos) throw Error("augmentor: no JSON object in generation output");
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    std::size_t end = std::string::npos;
    for (std::size_t i = start; i < raw.size(); ++i) {
        char c = raw[i];
        if (in_string) {
            if (escaped)
                escaped = false;
            else if (c == '\\')
                escaped = true;
            else if (c == '"')
                in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}') {
            if (--depth == 0) {
                end = i;
                break;
            }
        }
    }
    if (end == std::string::npos) throw Error("augmentor: unterminated JSON object");
    ordered_json j;
    try {
        j = ordered_json::parse(raw.substr(start, end - start + 1));
    } catch (const std::exception& e) {
        throw Error("augmentor: malformed generation JSON: " + std::string(e.what()));
    }
    if (!j.contains("First Transcript")) throw Error("augmentor: missing First Transcript");
    if (!j.contains("Second Transcript")) throw Error("augmentor: missing Second Transcript");
    std::vector<std::string> out;
    out.push_back(normalization.apply(j["First Transcript"].get<std::string>()));
    out.push_back(normalization.apply(j["Second Transcript"].get<std::string>()));
    for (const auto& t : out)
        if (t.empty()) throw Error("augmentor: empty generated transcript");
    return out;
}

namespace {

struct Candidate {
    std::string transcript;
    std::vector<std::string> prompt_example_ids;
    double similarity = 0.0;
    double bleu = 0.0;
};

}  // namespace

AugmentationResult run_augmentation(const Corpus& source, const AugmentationPlan& plan,
                                    const BackendSet& backends) {
    plan.validate();
    AugmentationResult result;
    result.synthetic.metadata = source.metadata;
    result.synthetic.metadata.n = 0;
    result.synthetic.metadata.n_syn = 0;
    if (plan.n_syn == 0) return result;
    if (source.empty()) throw Error("augmentor: empty source corpus");

    std::vector<std::string> train_transcripts;
    for (const auto& rec : source.records) train_transcripts.push_back(rec.utterance.transcript);
    std::vector<std::vector<double>> train_vecs;
    if (plan.replication_guard) train_vecs = backends.embedder->embed(train_transcripts);

    auto guard_score = [&](Candidate& cand) {
        auto vec = backends.embedder->embed({cand.transcript}).front();
        double best_sim = -2.0;
        std::size_t best_idx = 0;
        for (std::size_t t = 0; t < train_vecs.size(); ++t) {
            double sim = cosine(vec, train_vecs[t]);
            if (sim > best_sim) {
                best_sim = sim;
                best_idx = t;
            }
        }
        auto bleu = bleu_n(cand.transcript, train_transcripts[best_idx], 3);
        cand.similarity = best_sim;
        cand.bleu = (bleu[0] + bleu[1] + bleu[2]) / 3.0;
    };

    std::size_t examples_k = std::min(plan.examples_per_prompt, source.size());
    std::vector<Candidate> accepted;
    std::size_t target = plan.n_syn;
    std::size_t regen_left = plan.n_syn * plan.regeneration_budget;
    std::uint64_t call_index = 0;

    while (accepted.size() < target) {
        // One generation call, with fresh example sampling per parse retry.
        std::vector<std::string> transcripts;
        std::vector<std::string> example_ids;
        bool parsed_ok = false;
        for (std::size_t attempt = 0; attempt < plan.parse_retries && !parsed_ok; ++attempt) {
            std::mt19937_64 rng(derive_seed(plan.seed ^ 0xa11ceULL, call_index));
            auto picks = sample_without_replacement(rng, source.size(), examples_k);
            std::vector<std::string> examples;
            example_ids.clear();
            for (auto idx : picks) {
                examples.push_back(source.records[idx].utterance.transcript);
                example_ids.push_back(source.records[idx].utterance.id);
            }
            std::string raw;
            try {
                raw = backends.generator->generate_text(build_generation_prompt(examples));
            } catch (const std::exception& e) {
                throw Error("augmentor: generation backend failed after " +
                            std::to_string(accepted.size()) + " accepted transcripts: " + e.what());
            }
            ++result.generation_calls;
            ++call_index;
            try {
                transcripts = parse_generation(raw, source.metadata.normalization);
                parsed_ok = true;
            } catch (const Error&) {
                // fresh sampling on the next attempt
            }
        }
        if (!parsed_ok) {
            // All parse retries failed; treat like a dropped slot.
            if (target == 0) break;
            --target;
            ++result.dropped_replicas;
            continue;
        }
        if (transcripts.size() > plan.transcripts_per_call)
            transcripts.resize(plan.transcripts_per_call);
        for (auto& t : transcripts) {
            if (accepted.size() >= target) break;
            Candidate cand;
            cand.transcript = t;
            cand.prompt_example_ids = example_ids;
            if (plan.replication_guard) {
                guard_score(cand);
                if (cand.bleu > plan.replica_threshold) {
                    if (regen_left > 0) {
                        --regen_left;
                    } else {
                        --target;
                        ++result.dropped_replicas;
                    }
                    continue;
                }
            }
            accepted.push_back(std::move(cand));
        }
    }

    // Style-conditioning pool: source utterances with audio present.
    std::vector<std::size_t> style_pool;
    for (std::size_t i = 0; i < source.size(); ++i)
        if (!source.records[i].utterance.audio_ref.empty()) style_pool.push_back(i);
    if (!accepted.empty() && style_pool.empty())
        throw Error("augmentor: no source utterance carries audio for style conditioning");

    LoadOptions options;
    options.n_best = source.metadata.n_best ? source.metadata.n_best : 5;
    options.normalization = source.metadata.normalization;
    std::vector<CorpusRecord> records;
    for (std::size_t i = 0; i < accepted.size(); ++i) {
        const auto& cand = accepted[i];
        char idbuf[32];
        std::snprintf(idbuf, sizeof(idbuf), "syn-%06zu", i);
        std::uint64_t record_seed = derive_seed(plan.seed, std::string(idbuf));
        std::mt19937_64 rng(record_seed ^ 0x5717eULL);
        const auto& style = source.records[style_pool[next_below(rng, style_pool.size())]];

        std::string audio_ref;
        TranscriptionResult transcription;
        try {
            audio_ref = backends.synthesizer->synthesize_speech(cand.transcript,
                                                                style.utterance.audio_ref);
            transcription = backends.transcriber->transcribe(audio_ref);
        } catch (const std::exception& e) {
            throw Error("augmentor: backend failed after " + std::to_string(records.size()) +
                        " synthesized records: " + e.what());
        }

        CorpusRecord rec;
        rec.utterance.id = idbuf;
        rec.utterance.audio_ref = audio_ref;
        rec.utterance.transcript = cand.transcript;
        rec.utterance.source = Source::synthetic;
        rec.utterance.domain_tag = source.metadata.domain_tag;
        rec.utterance.transcript_provenance = Provenance::human;
        rec.utterance.generation_seed = record_seed;
        rec.hypotheses.utterance_id = rec.utterance.id;
        rec.hypotheses.hypotheses = transcription.hypotheses;
        rec.hypotheses.asr_scores = transcription.scores;
        records.push_back(std::move(rec));

        ProvenanceEntry prov;
        prov.synthetic_id = idbuf;
        prov.prompt_example_ids = cand.prompt_example_ids;
        prov.style_utterance_id = style.utterance.id;
        prov.generation_seed = record_seed;
        result.provenance.push_back(std::move(prov));
    }
    result.synthetic = make_corpus(std::move(records), options);
    result.synthetic.metadata.domain_tag = source.metadata.domain_tag;

    if (plan.replication_guard && !accepted.empty()) {
        ReplicationReport rep;
        for (const auto& cand : accepted) {
            rep.per_item_similarity.push_back(cand.similarity);
            rep.per_item_bleu.push_back(cand.bleu);
            rep.mean_similarity += cand.similarity;
            rep.mean_bleu += cand.bleu;
        }
        rep.mean_similarity /= static_cast<double>(accepted.size());
        rep.mean_bleu /= static_cast<double>(accepted.size());
        result.replication = rep;
    }
    return result;
}

Corpus pseudo_label(const std::vector<std::string>& ood_audio_refs, Transcriber& transcriber,
                    const LoadOptions& options) {
    std::vector<CorpusRecord> records;
    std::vector<std::string> failures;
    for (std::size_t i = 0; i < ood_audio_refs.size(); ++i) {
        char idbuf[32];
        std::snprintf(idbuf, sizeof(idbuf), "ood-%06zu", i);
        TranscriptionResult transcription;
        try {
            transcription = transcriber.transcribe(ood_audio_refs[i]);
        } catch (const std::exception& e) {
            failures.push_back(std::string(idbuf) + ": " + e.what());
            continue;
        }
        CorpusRecord rec;
        rec.utterance.id = idbuf;
        rec.utterance.audio_ref = ood_audio_refs[i];
        rec.utterance.transcript = transcription.hypotheses.front();
        rec.utterance.source = Source::real;
        rec.utterance.transcript_provenance = Provenance::pseudo_asr;
        rec.hypotheses.utterance_id = rec.utterance.id;
        rec.hypotheses.hypotheses = transcription.hypotheses;
        rec.hypotheses.asr_scores = transcription.scores;
        records.push_back(std::move(rec));
    }
    if (records.empty() && !ood_audio_refs.empty())
        throw Error("augmentor: pseudo_label failed for every input (" + failures.front() + ")");
    return make_corpus(std::move(records), options);
}

std::string augmentation_manifest_json(const AugmentationPlan& plan,
                                       const AugmentationResult& result,
                                       std::uint64_t backend_seed) {
    ordered_json j;
    j["plan"] = {{"n_syn", plan.n_syn},
                 {"examples_per_prompt", plan.examples_per_prompt},
                 {"transcripts_per_call", plan.transcripts_per_call},
                 {"seed", plan.seed},
                 {"ood_mode", plan.ood_mode},
                 {"replication_guard", plan.replication_guard},
                 {"replica_threshold", plan.replica_threshold}};
    j["backend_seed"] = backend_seed;
    j["generation_calls"] = result.generation_calls;
    j["dropped_replicas"] = result.dropped_replicas;
    if (result.replication) {
        j["replication"] = {{"mean_similarity", result.replication->mean_similarity},
                            {"mean_bleu", result.replication->mean_bleu},
                            {"flagged", result.replication->flagged.size()}};
    }
    ordered_json prov = ordered_json::array();
    for (const auto& p : result.provenance) {
        prov.push_back({{"id", p.synthetic_id},
                        {"prompt_example_ids", p.prompt_example_ids},
                        {"style_utterance_id", p.style_utterance_id},
                        {"generation_seed", p.generation_seed}});
    }
    j["provenance"] = prov;
    return j.dump(2) + "\n";
}

}  // namespace darag

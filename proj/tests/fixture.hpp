#pragma once

// Shared deterministic fixture for the closed-loop correction tests: a
// 200-utterance corpus over a small vocabulary, ten named entities, and a
// 30-entry confusion table covering the NE tokens.

#include <map>
#include <string>
#include <vector>

#include "darag/backends.hpp"
#include "darag/corpus.hpp"

namespace fixture {

inline std::map<std::string, std::string> lexicon() {
    return {
        {"shawn elliott", "PER"},      {"maria gonzalez", "PER"},
        {"john keats", "PER"},         {"microsoft", "ORG"},
        {"shared national credit", "ORG"}, {"goldman sachs", "ORG"},
        {"voxium council", "ORG"},     {"lake district", "LOC"},
        {"new hampshire", "LOC"},      {"azure cloud", "PRODUCT"},
    };
}

inline std::map<std::string, std::vector<std::string>> confusion_table() {
    return {
        // NE tokens
        {"shawn", {"sean", "shaun"}},
        {"elliott", {"elliot", "eliot"}},
        {"maria", {"mario", "marya"}},
        {"gonzalez", {"gonzales", "gonsalez"}},
        {"keats", {"keets", "kates"}},
        {"microsoft", {"microsof", "mycrosoft"}},
        {"shared", {"sharon", "shard"}},
        {"national", {"nation", "natinal"}},
        {"goldman", {"goldmann", "gouldman"}},
        {"sachs", {"sacks", "sax"}},
        {"voxium", {"voxeum", "voxim"}},
        {"council", {"counsel", "consil"}},
        {"hampshire", {"hamshire", "hampsure"}},
        {"district", {"distrect", "districk"}},
        {"azure", {"asure", "azzure"}},
        {"cloud", {"clout", "clowd"}},
        // filler tokens
        {"access", {"possess", "occupy"}},
        {"market", {"markat", "marked"}},
        {"growth", {"grouth", "groth"}},
        {"quarterly", {"quaterly", "quorterly"}},
        {"results", {"resolts", "rezults"}},
        {"demand", {"demond", "dimand"}},
        {"global", {"globle", "gobal"}},
        {"report", {"repot", "rapport"}},
        {"analysts", {"analists", "anelysts"}},
        {"spoke", {"spook", "spoak"}},
        {"funding", {"fonding", "funding's"}},
        {"committee", {"comittee", "commitee"}},
        {"spyware", {"spygware", "spiware"}},
        {"litigation", {"letigation", "litigaton"}},
    };
}

inline darag::MockErrorChannel channel(std::uint64_t seed) {
    darag::MockErrorChannel ch;
    ch.confusion_table = confusion_table();
    ch.substitution_rate = 0.3;
    ch.seed = seed;
    return ch;
}

/// Deterministic reference transcripts: filler phrases around one or two NE
/// mentions each.
inline std::vector<std::string> transcripts(std::size_t count, std::uint64_t seed) {
    static const std::vector<std::string> openings = {
        "the quarterly report shows strong growth",
        "analysts expect rising demand across the global market",
        "the committee spoke about new funding",
        "results from the latest review reached the board",
        "litigation over data access continued this week",
        "the panel reviewed spyware concerns in detail",
    };
    static const std::vector<std::string> closings = {
        "according to early figures",
        "despite weaker market conditions",
        "as the discussion moved forward",
        "before the session closed",
        "with broad support from members",
    };
    std::vector<std::string> nes;
    for (const auto& [surface, type] : lexicon()) nes.push_back(surface);

    std::vector<std::string> out;
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        std::string text = openings[darag::next_below(rng, openings.size())];
        text += " and " + nes[darag::next_below(rng, nes.size())];
        if (darag::next_unit(rng) < 0.5)
            text += " joined " + nes[darag::next_below(rng, nes.size())];
        text += " " + closings[darag::next_below(rng, closings.size())];
        out.push_back(text);
    }
    return out;
}

/// Closed-loop corpus: each utterance carries a mock audio ref holding its
/// transcript and the N-best list produced by the channel.
inline darag::Corpus corpus(std::size_t count, std::uint64_t seed, std::size_t n_best = 5) {
    auto refs = transcripts(count, seed);
    darag::MockTranscriber transcriber(channel(seed), n_best);
    std::vector<darag::CorpusRecord> records;
    for (std::size_t i = 0; i < refs.size(); ++i) {
        darag::CorpusRecord rec;
        rec.utterance.id = "utt-" + std::to_string(i);
        rec.utterance.audio_ref = std::string(darag::kMockAudioPrefix) + refs[i];
        rec.utterance.transcript = refs[i];
        auto result = transcriber.transcribe(rec.utterance.audio_ref);
        rec.hypotheses.hypotheses = result.hypotheses;
        rec.hypotheses.asr_scores = result.scores;
        records.push_back(std::move(rec));
    }
    darag::LoadOptions options;
    options.n_best = n_best;
    return darag::make_corpus(std::move(records), options);
}

}  // namespace fixture

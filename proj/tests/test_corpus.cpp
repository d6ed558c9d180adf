#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "darag/corpus.hpp"
#include "test_util.hpp"

using namespace darag;

namespace {

std::string record_line(const std::string& id, const std::string& transcript,
                        const std::string& source = "real", int n_hyp = 5) {
    std::string hyps = "[";
    for (int i = 0; i < n_hyp; ++i) {
        if (i) hyps += ",";
        hyps += "\"" + transcript + "\"";
    }
    hyps += "]";
    std::string extra = source == "synthetic" ? ",\"generation_seed\":7" : "";
    return "{\"id\":\"" + id + "\",\"audio_ref\":\"\",\"transcript\":\"" + transcript +
           "\",\"source\":\"" + source + "\",\"domain_tag\":\"test\"" + extra +
           ",\"transcript_provenance\":\"human\",\"hypotheses\":" + hyps + "}\n";
}

CorpusRecord simple_record(const std::string& id, const std::string& transcript,
                           Source source = Source::real) {
    CorpusRecord rec;
    rec.utterance.id = id;
    rec.utterance.transcript = transcript;
    rec.utterance.source = source;
    if (source == Source::synthetic) rec.utterance.generation_seed = 1;
    rec.hypotheses.hypotheses = std::vector<std::string>(5, transcript);
    return rec;
}

}  // namespace

TEST_CASE("load_corpus reads valid records") {
    testutil::TempDir tmp;
    auto path = tmp.file("corpus.jsonl");
    testutil::write_file(path, record_line("u1", "hello there") + record_line("u2", "more text") +
                                   record_line("u3", "third line"));
    Corpus c = load_corpus(path);
    CHECK(c.size() == 3);
    CHECK(c.metadata.n == 3);
    CHECK(c.metadata.n_syn == 0);
    CHECK(c.records[0].utterance.transcript == "hello there");
}

TEST_CASE("load_corpus rejects duplicate ids") {
    testutil::TempDir tmp;
    auto path = tmp.file("corpus.jsonl");
    testutil::write_file(path, record_line("u1", "a b") + record_line("u1", "c d"));
    CHECK_THROWS_WITH_AS(load_corpus(path), doctest::Contains("duplicate utterance id"), Error);
}

TEST_CASE("load_corpus reports the malformed line number") {
    testutil::TempDir tmp;
    auto path = tmp.file("corpus.jsonl");
    testutil::write_file(path, record_line("u1", "a b") + "{not json\n");
    CHECK_THROWS_WITH_AS(load_corpus(path), doctest::Contains("line 2"), Error);
}

TEST_CASE("pad policy repeat_last fills short beams") {
    testutil::TempDir tmp;
    auto path = tmp.file("corpus.jsonl");
    testutil::write_file(path, record_line("u1", "a b", "real", 4));
    Corpus c = load_corpus(path);
    REQUIRE(c.records[0].hypotheses.hypotheses.size() == 5);
    CHECK(c.records[0].hypotheses.hypotheses[4] == c.records[0].hypotheses.hypotheses[3]);

    LoadOptions strict;
    strict.pad_policy = PadPolicy::strict;
    CHECK_THROWS_AS(load_corpus(path, strict), Error);
}

TEST_CASE("normalization is applied uniformly") {
    testutil::TempDir tmp;
    auto path = tmp.file("corpus.jsonl");
    testutil::write_file(path, record_line("u1", "Hello,   World!"));
    Corpus c = load_corpus(path);
    CHECK(c.records[0].utterance.transcript == "hello world");
    CHECK(c.records[0].hypotheses.hypotheses[0] == "hello world");
}

TEST_CASE("synthetic records need a generation seed") {
    CorpusRecord rec = simple_record("s1", "a b", Source::synthetic);
    rec.utterance.generation_seed.reset();
    CHECK_THROWS_WITH_AS(make_corpus({rec}, {}), doctest::Contains("generation_seed"), Error);
}

TEST_CASE("merge_augmented sizes and counts") {
    std::vector<CorpusRecord> base_recs, syn_recs;
    for (int i = 0; i < 10; ++i) base_recs.push_back(simple_record("r" + std::to_string(i), "x y"));
    for (int i = 0; i < 10; ++i)
        syn_recs.push_back(simple_record("s" + std::to_string(i), "x y", Source::synthetic));
    Corpus base = make_corpus(base_recs, {});
    Corpus syn = make_corpus(syn_recs, {});
    Corpus merged = merge_augmented(base, syn);
    CHECK(merged.size() == 20);
    CHECK(merged.metadata.n == 10);
    CHECK(merged.metadata.n_syn == 10);
    // base records first, stable order
    CHECK(merged.records[0].utterance.id == "r0");
    CHECK(merged.records[10].utterance.id == "s0");
}

TEST_CASE("merge_augmented with empty synthetic is the identity") {
    Corpus base = make_corpus({simple_record("r0", "x")}, {});
    Corpus merged = merge_augmented(base, Corpus{});
    CHECK(serialize_corpus(merged) == serialize_corpus(base));
}

TEST_CASE("merge_augmented rejects real records in the synthetic corpus") {
    Corpus base = make_corpus({simple_record("r0", "x")}, {});
    Corpus bad = make_corpus({simple_record("r1", "y", Source::real)}, {});
    CHECK_THROWS_WITH_AS(merge_augmented(base, bad), doctest::Contains("non-synthetic"), Error);
}

TEST_CASE("merge_augmented rejects id collisions") {
    Corpus base = make_corpus({simple_record("r0", "x")}, {});
    Corpus syn = make_corpus({simple_record("r0", "y", Source::synthetic)}, {});
    CHECK_THROWS_WITH_AS(merge_augmented(base, syn), doctest::Contains("collision"), Error);
}

TEST_CASE("merge_augmented is associative on record multisets") {
    std::vector<CorpusRecord> a, b, c;
    for (int i = 0; i < 3; ++i) a.push_back(simple_record("a" + std::to_string(i), "x"));
    for (int i = 0; i < 3; ++i)
        b.push_back(simple_record("b" + std::to_string(i), "x", Source::synthetic));
    for (int i = 0; i < 3; ++i)
        c.push_back(simple_record("c" + std::to_string(i), "x", Source::synthetic));
    Corpus ca = make_corpus(a, {});
    Corpus cb = make_corpus(b, {});
    Corpus cc = make_corpus(c, {});
    Corpus left = merge_augmented(merge_augmented(ca, cb), cc);
    Corpus right = merge_augmented(ca, merge_augmented(cb, cc));
    auto ids = [](const Corpus& x) {
        std::multiset<std::string> s;
        for (const auto& r : x.records) s.insert(r.utterance.id);
        return s;
    };
    CHECK(ids(left) == ids(right));
}

TEST_CASE("subsample_ood is deterministic and bounded") {
    std::vector<CorpusRecord> recs;
    for (int i = 0; i < 1000; ++i) recs.push_back(simple_record("u" + std::to_string(i), "x y"));
    Corpus c = make_corpus(recs, {});

    Corpus s1 = subsample_ood(c, 100, 7);
    Corpus s2 = subsample_ood(c, 100, 7);
    CHECK(s1.size() == 100);
    CHECK(serialize_corpus(s1) == serialize_corpus(s2));

    Corpus all = subsample_ood(c, c.size(), 3);
    CHECK(serialize_corpus(all) == serialize_corpus(c));

    Corpus none = subsample_ood(c, 0, 3);
    CHECK(none.empty());

    CHECK_THROWS_AS(subsample_ood(c, c.size() + 1, 3), Error);
}

TEST_CASE("canonical serialization round-trips byte-identically") {
    testutil::TempDir tmp;
    std::mt19937_64 rng(99);
    std::vector<CorpusRecord> recs;
    for (int i = 0; i < 20; ++i) {
        auto rec = simple_record("u" + std::to_string(i),
                                 i % 2 ? "alpha beta gamma" : "delta epsilon",
                                 i % 3 ? Source::real : Source::synthetic);
        if (i % 4 == 0) rec.hypotheses.asr_scores = {0.5, 0.4, 0.3, 0.2, 0.1};
        recs.push_back(rec);
    }
    Corpus c = make_corpus(recs, {});
    auto path = tmp.file("c.jsonl");
    save_corpus(c, path);
    Corpus loaded = load_corpus(path);
    auto path2 = tmp.file("c2.jsonl");
    save_corpus(loaded, path2);
    CHECK(testutil::read_file(path) == testutil::read_file(path2));
}

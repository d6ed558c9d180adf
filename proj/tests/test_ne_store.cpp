#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "darag/metrics.hpp"
#include "darag/ne_store.hpp"
#include "test_util.hpp"

using namespace darag;

namespace {

/// Test embedder with preset vectors per exact text, optionally scaled.
class FixedEmbedder : public Embedder {
  public:
    FixedEmbedder(std::map<std::string, std::vector<double>> table, std::size_t dim,
                  double scale = 1.0)
        : table_(std::move(table)), dim_(dim), scale_(scale) {}

    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override {
        std::vector<std::vector<double>> out;
        for (const auto& t : texts) {
            auto vec = table_.at(t);
            for (auto& x : vec) x *= scale_;
            out.push_back(std::move(vec));
        }
        return out;
    }
    std::size_t dimension() const override { return dim_; }

  private:
    std::map<std::string, std::vector<double>> table_;
    std::size_t dim_;
    double scale_;
};

std::vector<std::string> retrieved_surfaces(const std::vector<ScoredEntry>& entries) {
    std::vector<std::string> out;
    for (const auto& e : entries) out.push_back(e.entry.surface);
    return out;
}

}  // namespace

TEST_CASE("extract_entities with a gazetteer tagger") {
    GazetteerTagger tagger(std::map<std::string, std::string>{{"microsoft", "ORG"}});
    SUBCASE("hit") {
        auto entities = extract_entities({"microsoft fired back"}, tagger);
        REQUIRE(entities.size() == 1);
        CHECK(entities[0].first == "ORG");
        CHECK(entities[0].second == "microsoft");
    }
    SUBCASE("no hits") { CHECK(extract_entities({"nothing to see"}, tagger).empty()); }
    SUBCASE("empty input") { CHECK(extract_entities({}, tagger).empty()); }
}

TEST_CASE("build_store deduplicates case-insensitively") {
    MockEmbedder embedder(16, 3);
    std::vector<std::pair<std::string, std::string>> entities{
        {"ORG", "microsoft"}, {"PER", "john keats"}, {"ORG", "Microsoft"},
        {"LOC", "lake district"}, {"ORG", "goldman sachs"}};
    auto store = build_store(entities, embedder);
    CHECK(store.size() == 4);
    // idempotent
    std::vector<std::pair<std::string, std::string>> again;
    for (const auto& e : store.entries) again.emplace_back(e.ne_type, e.surface);
    auto rebuilt = build_store(again, embedder);
    CHECK(rebuilt.size() == store.size());

    CHECK(build_store({}, embedder).size() == 0);
}

TEST_CASE("retrieve_top_k orders by similarity with insertion tie-breaks") {
    double inv = 1.0 / std::sqrt(2.0);
    FixedEmbedder embedder({{"A", {1, 0}}, {"B", {0, 1}}, {"C", {inv, inv}}, {"q", {1, 0}}}, 2);
    Datastore store;
    store.dimension = 2;
    store.entries = {{"A", "T", {1, 0}, NeOrigin::train, 0},
                     {"B", "T", {0, 1}, NeOrigin::train, 1},
                     {"C", "T", {inv, inv}, NeOrigin::train, 2}};
    RetrievalConfig config;
    config.k = 2;
    config.embedding_dim = 2;

    auto top = retrieve_top_k(store, "q", embedder, config);
    REQUIRE(top.size() == 2);
    CHECK(top[0].entry.surface == "A");
    CHECK(top[0].similarity == doctest::Approx(1.0));
    CHECK(top[1].entry.surface == "C");
    CHECK(top[1].similarity == doctest::Approx(inv));

    config.k = 10;  // k >= d returns everything, fully sorted
    auto all = retrieve_top_k(store, "q", embedder, config);
    CHECK(retrieved_surfaces(all) == std::vector<std::string>{"A", "C", "B"});

    CHECK_THROWS_WITH_AS(retrieve_top_k(store, "", embedder, config),
                         doctest::Contains("empty query"), Error);
}

TEST_CASE("retrieval matches the exhaustive-scan oracle") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 60; ++trial) {
        std::size_t d = 1 + next_below(rng, 200);
        std::size_t dim = 2 + next_below(rng, 15);
        Datastore store;
        store.dimension = dim;
        for (std::size_t i = 0; i < d; ++i) {
            std::vector<double> v(dim);
            bool nonzero = false;
            for (auto& x : v) {
                x = next_unit(rng) * 2.0 - 1.0;
                if (x != 0.0) nonzero = true;
            }
            if (!nonzero) v[0] = 1.0;
            store.entries.push_back({"e" + std::to_string(i), "T", v, NeOrigin::train, i});
        }
        std::vector<double> qv(dim);
        for (auto& x : qv) x = next_unit(rng) * 2.0 - 1.0;
        qv[0] += 1.0;
        FixedEmbedder embedder({{"q", qv}}, dim);
        RetrievalConfig config;
        config.k = 1 + next_below(rng, d + 3);
        config.embedding_dim = dim;

        auto got = retrieve_top_k(store, "q", embedder, config);

        // oracle: full scan, stable sort on (similarity desc, insert_index asc), truncate
        std::vector<std::pair<double, std::size_t>> scan;
        for (std::size_t i = 0; i < d; ++i)
            scan.emplace_back(cosine(qv, store.entries[i].embedding), i);
        std::sort(scan.begin(), scan.end(), [](auto& a, auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        scan.resize(std::min<std::size_t>(config.k, d));
        REQUIRE(got.size() == scan.size());
        for (std::size_t i = 0; i < got.size(); ++i)
            CHECK(got[i].entry.insert_index == scan[i].second);
    }
}

TEST_CASE("retrieval order is invariant under positive scaling") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t d = 2 + next_below(rng, 30);
        std::size_t dim = 4;
        std::map<std::string, std::vector<double>> table;
        Datastore store, scaled_store;
        store.dimension = scaled_store.dimension = dim;
        double c = 0.01 + next_unit(rng) * 50.0;
        for (std::size_t i = 0; i < d; ++i) {
            std::vector<double> v(dim);
            for (auto& x : v) x = next_unit(rng) * 2.0 - 1.0;
            v[0] += 1.5;
            auto scaled = v;
            for (auto& x : scaled) x *= c;
            store.entries.push_back({"e" + std::to_string(i), "T", v, NeOrigin::train, i});
            scaled_store.entries.push_back(
                {"e" + std::to_string(i), "T", scaled, NeOrigin::train, i});
        }
        std::vector<double> qv{1.0, 0.2, -0.3, 0.4};
        FixedEmbedder embedder({{"q", qv}}, dim);
        FixedEmbedder scaled_embedder({{"q", qv}}, dim, c);
        RetrievalConfig config;
        config.k = 5;
        config.embedding_dim = dim;
        auto a = retrieve_top_k(store, "q", embedder, config);
        auto b = retrieve_top_k(scaled_store, "q", scaled_embedder, config);
        CHECK(retrieved_surfaces(a) == retrieved_surfaces(b));
    }
}

TEST_CASE("add_entries extends without disturbing existing entries") {
    MockEmbedder embedder(16, 3);
    std::vector<std::pair<std::string, std::string>> base;
    for (int i = 0; i < 10; ++i) base.emplace_back("ORG", "org number " + std::to_string(i));
    auto store = build_store(base, embedder);
    REQUIRE(store.size() == 10);

    auto extended = add_entries(store,
                                {{"PER", "new person one"},
                                 {"PER", "new person two"},
                                 {"PER", "new person three"}},
                                embedder, NeOrigin::synthetic);
    CHECK(extended.size() == 13);
    for (std::size_t i = 0; i < 10; ++i)
        CHECK(extended.entries[i].insert_index == store.entries[i].insert_index);
    CHECK(extended.entries[12].origin == NeOrigin::synthetic);

    // duplicate: d unchanged
    auto dup = add_entries(extended, {{"ORG", "Org Number 3"}}, embedder, NeOrigin::runtime_added);
    CHECK(dup.size() == 13);

    // add to empty store equals build_store
    Datastore empty;
    empty.dimension = 16;
    auto from_empty = add_entries(empty, base, embedder, NeOrigin::train);
    CHECK(from_empty.size() == store.size());

    // monotone d: retrieval never returns fewer results after adding
    RetrievalConfig config;
    config.k = 12;
    config.embedding_dim = 16;
    auto before = retrieve_top_k(store, "new person", embedder, config);
    auto after = retrieve_top_k(extended, "new person", embedder, config);
    CHECK(after.size() >= before.size());
}

TEST_CASE("store persists through save/load") {
    testutil::TempDir tmp;
    MockEmbedder embedder(8, 9);
    auto store = build_store({{"ORG", "microsoft"}, {"PER", "john keats"}}, embedder);
    auto path = tmp.file("store.json");
    save_store(store, path);
    auto loaded = load_store(path);
    REQUIRE(loaded.size() == store.size());
    CHECK(loaded.dimension == store.dimension);
    for (std::size_t i = 0; i < store.size(); ++i) {
        CHECK(loaded.entries[i].surface == store.entries[i].surface);
        CHECK(loaded.entries[i].embedding == store.entries[i].embedding);
        CHECK(loaded.entries[i].insert_index == store.entries[i].insert_index);
    }
    CHECK_THROWS_AS(load_store(tmp.file("missing.json")), Error);
}

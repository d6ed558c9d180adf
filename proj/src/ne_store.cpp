#include "darag/ne_store.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "darag/metrics.hpp"

namespace darag {

using ordered_json = nlohmann::ordered_json;

std::string to_string(NeOrigin origin) {
    switch (origin) {
        case NeOrigin::train: return "train";
        case NeOrigin::synthetic: return "synthetic";
        case NeOrigin::runtime_added: return "runtime_added";
    }
    throw Error("ne_store: bad origin");
}

NeOrigin ne_origin_from_string(const std::string& s) {
    if (s == "train") return NeOrigin::train;
    if (s == "synthetic") return NeOrigin::synthetic;
    if (s == "runtime_added") return NeOrigin::runtime_added;
    throw Error("ne_store: unknown origin '" + s + "'");
}

std::vector<std::pair<std::string, std::string>> extract_entities(
    const std::vector<std::string>& transcripts, NerTagger& tagger) {
    std::vector<std::pair<std::string, std::string>> out;
    NormalizationPolicy policy;
    for (std::size_t i = 0; i < transcripts.size(); ++i) {
        std::vector<std::pair<std::string, std::string>> spans;
        try {
            spans = tagger.tag(transcripts[i]);
        } catch (const std::exception& e) {
            throw Error("ne_store: tagger failed on transcript " + std::to_string(i) + ": " +
                        e.what());
        }
        for (auto& [type, surface] : spans) out.emplace_back(type, policy.apply(surface));
    }
    return out;
}

namespace {

std::pair<std::string, std::string> dedup_key(const std::string& surface,
                                              const std::string& type) {
    return {to_lower(surface), type};
}

void append_entries(Datastore& store,
                    const std::vector<std::pair<std::string, std::string>>& entities,
                    Embedder& embedder, NeOrigin origin) {
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& e : store.entries) seen.insert(dedup_key(e.surface, e.ne_type));

    std::vector<std::pair<std::string, std::string>> novel;  // (type, surface)
    for (const auto& [type, surface] : entities) {
        if (surface.empty()) throw Error("ne_store: empty entity surface");
        if (seen.insert(dedup_key(surface, type)).second) novel.emplace_back(type, surface);
    }
    if (novel.empty()) return;

    std::vector<std::string> surfaces;
    for (const auto& [type, surface] : novel) surfaces.push_back(surface);
    auto vectors = embedder.embed(surfaces);
    std::uint64_t next_index = store.entries.empty() ? 0 : store.entries.back().insert_index + 1;
    for (std::size_t i = 0; i < novel.size(); ++i) {
        if (vectors[i].size() != store.dimension)
            throw Error("ne_store: embedding dimension mismatch");
        NeEntry entry;
        entry.surface = novel[i].second;
        entry.ne_type = novel[i].first;
        entry.embedding = std::move(vectors[i]);
        entry.origin = origin;
        entry.insert_index = next_index++;
        store.entries.push_back(std::move(entry));
    }
}

}  // namespace

Datastore build_store(const std::vector<std::pair<std::string, std::string>>& entities,
                      Embedder& embedder, NeOrigin origin) {
    Datastore store;
    store.dimension = embedder.dimension();
    append_entries(store, entities, embedder, origin);
    return store;
}

Datastore add_entries(const Datastore& store,
                      const std::vector<std::pair<std::string, std::string>>& entities,
                      Embedder& embedder, NeOrigin origin) {
    Datastore out = store;
    if (out.dimension == 0) out.dimension = embedder.dimension();
    append_entries(out, entities, embedder, origin);
    return out;
}

std::vector<ScoredEntry> retrieve_top_k(const Datastore& store,
                                        const std::string& best_hypothesis, Embedder& embedder,
                                        const RetrievalConfig& config) {
    config.validate();
    if (best_hypothesis.empty()) throw Error("ne_store: empty query hypothesis");
    if (store.entries.empty()) return {};
    if (store.dimension != embedder.dimension())
        throw Error("ne_store: store/embedder dimension mismatch");
    auto query = embedder.embed({best_hypothesis}).front();

    std::vector<ScoredEntry> scored;
    scored.reserve(store.entries.size());
    for (const auto& entry : store.entries)
        scored.push_back({entry, cosine(query, entry.embedding)});
    std::sort(scored.begin(), scored.end(), [](const ScoredEntry& a, const ScoredEntry& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.entry.insert_index < b.entry.insert_index;
    });
    if (scored.size() > config.k) scored.resize(config.k);
    return scored;
}

void save_store(const Datastore& store, const std::string& path) {
    ordered_json j;
    j["version"] = 1;
    j["dimension"] = store.dimension;
    ordered_json entries = ordered_json::array();
    for (const auto& e : store.entries) {
        ordered_json je;
        je["surface"] = e.surface;
        je["type"] = e.ne_type;
        je["origin"] = to_string(e.origin);
        je["insert_index"] = e.insert_index;
        je["embedding"] = e.embedding;
        entries.push_back(std::move(je));
    }
    j["entries"] = entries;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("ne_store: cannot write '" + path + "'");
    out << j.dump() << '\n';
}

Datastore load_store(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("ne_store: cannot open '" + path + "'");
    ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error("ne_store: malformed store file: " + std::string(e.what()));
    }
    if (j.value("version", 0) != 1) throw Error("ne_store: unsupported store version");
    Datastore store;
    store.dimension = j.at("dimension").get<std::size_t>();
    for (const auto& je : j.at("entries")) {
        NeEntry e;
        e.surface = je.at("surface").get<std::string>();
        e.ne_type = je.at("type").get<std::string>();
        e.origin = ne_origin_from_string(je.at("origin").get<std::string>());
        e.insert_index = je.at("insert_index").get<std::uint64_t>();
        e.embedding = je.at("embedding").get<std::vector<double>>();
        if (e.embedding.size() != store.dimension)
            throw Error("ne_store: entry dimension mismatch in store file");
        store.entries.push_back(std::move(e));
    }
    return store;
}

}  // namespace darag

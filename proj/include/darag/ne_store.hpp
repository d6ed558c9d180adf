#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "darag/backends.hpp"
#include "darag/common.hpp"

namespace darag {

enum class NeOrigin { train, synthetic, runtime_added };

std::string to_string(NeOrigin origin);
NeOrigin ne_origin_from_string(const std::string& s);

struct NeEntry {
    std::string surface;
    std::string ne_type;
    std::vector<double> embedding;
    NeOrigin origin = NeOrigin::train;
    std::uint64_t insert_index = 0;
};

struct RetrievalConfig {
    std::size_t k = 5;
    std::size_t embedding_dim = 64;

    void validate() const {
        if (k < 1) throw Error("ne_store: k must be >= 1");
        if (embedding_dim < 1) throw Error("ne_store: embedding_dim must be >= 1");
    }
};

/// Flat exact-scan NE datastore. Entries are deduplicated case-insensitively
/// on (surface, type); insert_index records arrival order and breaks
/// similarity ties. Readers may share a store; add_entries builds a new one.
struct Datastore {
    std::size_t dimension = 0;
    std::vector<NeEntry> entries;

    std::size_t size() const { return entries.size(); }
};

struct ScoredEntry {
    NeEntry entry;
    double similarity = 0.0;
};

/// Run the tagger over every transcript (real and synthetic alike) and
/// collect all emitted (type, surface) spans.
std::vector<std::pair<std::string, std::string>> extract_entities(
    const std::vector<std::string>& transcripts, NerTagger& tagger);

Datastore build_store(const std::vector<std::pair<std::string, std::string>>& entities,
                      Embedder& embedder, NeOrigin origin = NeOrigin::train);

/// Exact top-k by cosine similarity to the best hypothesis, descending, ties
/// broken by ascending insert_index. Returns min(k, store size) entries.
std::vector<ScoredEntry> retrieve_top_k(const Datastore& store,
                                        const std::string& best_hypothesis, Embedder& embedder,
                                        const RetrievalConfig& config);

/// Append new entries (dedup against existing); existing insert_index values
/// are unchanged.
Datastore add_entries(const Datastore& store,
                      const std::vector<std::pair<std::string, std::string>>& entities,
                      Embedder& embedder, NeOrigin origin);

void save_store(const Datastore& store, const std::string& path);
Datastore load_store(const std::string& path);

}  // namespace darag

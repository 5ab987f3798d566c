#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fop/corpus.hpp"
#include "fop/lm.hpp"

namespace fop {

struct IndexEntry {
    Encoding encoding;
    PastFuturePair pair;
};

struct Neighbor {
    const IndexEntry* entry = nullptr;
    double similarity = 0.0;
};

struct RetrievalResult {
    const PastFuturePair* selected_pair = nullptr;
    std::size_t control_count = 0;
    double similarity = 0.0;
    // First system utterance of the selected future.
    Utterance reference_response;
};

// Encoded past/future pairs with kNN lookup. Exact mode scans all entries;
// approximate mode (opt-in inverted lists over a seeded k-means clustering)
// probes only the closest clusters.
class PastFutureIndex {
public:
    static constexpr std::size_t kDefaultK = 10;

    // Splits every conversation and encodes each past. Conversations that
    // produce no pair (fewer than two turns) are counted, not fatal; an empty
    // result is an error.
    static PastFutureIndex build(const Corpus& corpus, const ContextEncoder& encoder);

    const std::vector<IndexEntry>& entries() const { return entries_; }
    std::size_t skipped_conversations() const { return skipped_; }
    const ContextEncoder& encoder() const;
    std::size_t k_default() const { return k_default_; }

    // Top-k by cosine, descending; ties by (source id, split index). k larger
    // than the index returns everything.
    std::vector<Neighbor> knn(const Encoding& query, std::size_t k) const;
    std::vector<Neighbor> knn_exact(const Encoding& query, std::size_t k) const;

    // Builds the inverted lists; subsequent knn() calls probe `num_probes`
    // clusters instead of scanning.
    void build_clusters(std::size_t num_clusters, std::size_t num_probes, std::uint64_t seed);
    bool approximate() const { return !centroids_.empty(); }

    // Single-file persistence (clustering state is rebuilt, not saved).
    void save(const std::string& path) const;
    static PastFutureIndex load(const std::string& path, const ContextEncoder& encoder);

private:
    std::vector<IndexEntry> entries_;
    std::size_t skipped_ = 0;
    std::size_t k_default_ = kDefaultK;
    const ContextEncoder* encoder_ = nullptr;

    std::vector<std::vector<double>> centroids_;
    std::vector<std::vector<std::size_t>> cluster_members_;
    std::size_t num_probes_ = 0;

    std::vector<Neighbor> rank_candidates(const Encoding& query,
                                          const std::vector<std::size_t>& candidates,
                                          std::size_t k) const;
};

// Among the neighbors, the pair whose future stem-matches the most control
// words; ties fall back to similarity, then (source id, split index).
RetrievalResult select_future(const std::vector<Neighbor>& neighbors, const ControlWordSet& w);

// Retrieve-then-copy responder: the first system utterance of the selected
// future, re-queried fresh for every call.
Utterance fop_retrieval_respond(std::span<const Utterance> context, const ControlWordSet& w,
                                const PastFutureIndex& index,
                                std::optional<std::size_t> k = std::nullopt);

}  // namespace fop

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace fop {

// Word-embedding lookup table. Vectors are L2-normalized at load so cosine
// between stored entries reduces to a dot product.
struct EmbeddingTable {
    std::size_t dim = 0;
    std::unordered_map<std::string, std::vector<double>> entries;

    // Case-insensitive lookup; nullptr when the token has no embedding.
    const std::vector<double>* find(std::string_view token) const;
    bool contains(std::string_view token) const { return find(token) != nullptr; }
    std::size_t size() const { return entries.size(); }
};

// Plain-text format: "token v1 v2 ... vd" per line, d fixed by the first
// line. Errors name the offending line. `limit` keeps only the first entries.
EmbeddingTable load_embeddings(const std::string& path,
                               std::optional<std::size_t> limit = std::nullopt);

// Standard cosine similarity; a zero vector compares as 0 to everything.
double cosine(const std::vector<double>& a, const std::vector<double>& b);

// Top-k tokens by cosine to w's vector, excluding w, descending, ties
// broken lexicographically.
std::vector<std::pair<std::string, double>> most_similar(std::string_view w,
                                                         const EmbeddingTable& table,
                                                         std::size_t k);

}  // namespace fop

#include "fop/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "fop/random.hpp"

namespace fop {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        sum += diff * diff;
    }
    return sum;
}

bool entry_order(const IndexEntry& a, const IndexEntry& b) {
    if (a.pair.source_id != b.pair.source_id) return a.pair.source_id < b.pair.source_id;
    return a.pair.split_index < b.pair.split_index;
}

bool neighbor_before(const Neighbor& a, const Neighbor& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return entry_order(*a.entry, *b.entry);
}

}  // namespace

PastFutureIndex PastFutureIndex::build(const Corpus& corpus, const ContextEncoder& encoder) {
    PastFutureIndex index;
    index.encoder_ = &encoder;
    for (const Conversation& conversation : corpus.conversations) {
        std::vector<PastFuturePair> pairs = split_past_future(conversation);
        if (pairs.empty()) {
            ++index.skipped_;
            continue;
        }
        for (PastFuturePair& pair : pairs) {
            IndexEntry entry;
            entry.encoding = encoder.encode(pair.past);
            entry.pair = std::move(pair);
            index.entries_.push_back(std::move(entry));
        }
    }
    if (index.entries_.empty()) {
        throw std::runtime_error("build_index: no past/future pairs in corpus");
    }
    std::sort(index.entries_.begin(), index.entries_.end(), entry_order);
    return index;
}

const ContextEncoder& PastFutureIndex::encoder() const {
    if (encoder_ == nullptr) {
        throw std::logic_error("PastFutureIndex has no encoder attached");
    }
    return *encoder_;
}

std::vector<Neighbor> PastFutureIndex::rank_candidates(
    const Encoding& query, const std::vector<std::size_t>& candidates, std::size_t k) const {
    std::vector<Neighbor> neighbors;
    neighbors.reserve(candidates.size());
    for (std::size_t idx : candidates) {
        const IndexEntry& entry = entries_[idx];
        double similarity = 0.0;
        if (!query.is_zero && !entry.encoding.is_zero) {
            similarity = dot(query.values, entry.encoding.values);
        }
        neighbors.push_back({&entry, similarity});
    }
    std::sort(neighbors.begin(), neighbors.end(), neighbor_before);
    if (neighbors.size() > k) neighbors.resize(k);
    return neighbors;
}

std::vector<Neighbor> PastFutureIndex::knn_exact(const Encoding& query, std::size_t k) const {
    if (k < 1) throw std::invalid_argument("knn: k must be >= 1");
    std::vector<std::size_t> all(entries_.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return rank_candidates(query, all, k);
}

std::vector<Neighbor> PastFutureIndex::knn(const Encoding& query, std::size_t k) const {
    if (!approximate()) return knn_exact(query, k);
    if (k < 1) throw std::invalid_argument("knn: k must be >= 1");

    std::vector<std::pair<double, std::size_t>> by_distance;
    by_distance.reserve(centroids_.size());
    for (std::size_t c = 0; c < centroids_.size(); ++c) {
        by_distance.emplace_back(squared_distance(query.values, centroids_[c]), c);
    }
    std::sort(by_distance.begin(), by_distance.end());

    std::vector<std::size_t> candidates;
    for (std::size_t p = 0; p < std::min(num_probes_, by_distance.size()); ++p) {
        const auto& members = cluster_members_[by_distance[p].second];
        candidates.insert(candidates.end(), members.begin(), members.end());
    }
    if (candidates.empty()) return knn_exact(query, k);
    return rank_candidates(query, candidates, k);
}

void PastFutureIndex::build_clusters(std::size_t num_clusters, std::size_t num_probes,
                                     std::uint64_t seed) {
    if (num_clusters < 1 || num_probes < 1) {
        throw std::invalid_argument("build_clusters: clusters and probes must be >= 1");
    }
    num_clusters = std::min(num_clusters, entries_.size());
    const std::size_t dim = entries_.front().encoding.values.size();
    Rng rng(seed);

    // k-means++ seeding over the encodings.
    std::vector<std::vector<double>> centroids;
    centroids.reserve(num_clusters);
    centroids.push_back(entries_[uniform_index(rng, entries_.size())].encoding.values);
    std::vector<double> best_dist(entries_.size(), std::numeric_limits<double>::max());
    while (centroids.size() < num_clusters) {
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            best_dist[i] = std::min(best_dist[i], squared_distance(entries_[i].encoding.values,
                                                                   centroids.back()));
        }
        const std::size_t next = categorical(rng, best_dist);
        centroids.push_back(entries_[next].encoding.values);
    }

    std::vector<std::size_t> assignment(entries_.size(), 0);
    for (int iteration = 0; iteration < 10; ++iteration) {
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            double best = std::numeric_limits<double>::max();
            std::size_t arg = 0;
            for (std::size_t c = 0; c < centroids.size(); ++c) {
                const double d = squared_distance(entries_[i].encoding.values, centroids[c]);
                if (d < best) {
                    best = d;
                    arg = c;
                }
            }
            assignment[i] = arg;
        }
        std::vector<std::vector<double>> sums(centroids.size(), std::vector<double>(dim, 0.0));
        std::vector<std::size_t> counts(centroids.size(), 0);
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            const auto& v = entries_[i].encoding.values;
            auto& sum = sums[assignment[i]];
            for (std::size_t d = 0; d < dim; ++d) sum[d] += v[d];
            ++counts[assignment[i]];
        }
        for (std::size_t c = 0; c < centroids.size(); ++c) {
            if (counts[c] == 0) continue;
            for (std::size_t d = 0; d < dim; ++d) {
                centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
            }
        }
    }

    centroids_ = std::move(centroids);
    cluster_members_.assign(centroids_.size(), {});
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        cluster_members_[assignment[i]].push_back(i);
    }
    num_probes_ = num_probes;
}

void PastFutureIndex::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open index file for writing: " + path);
    nlohmann::json header;
    header["format"] = "fop-index-v1";
    header["entries"] = entries_.size();
    header["k_default"] = k_default_;
    out << header.dump() << '\n';

    auto utterances_json = [](const std::vector<Utterance>& utterances) {
        nlohmann::json arr = nlohmann::json::array();
        for (const Utterance& u : utterances) {
            arr.push_back({{"speaker", std::string(speaker_label(u.speaker))}, {"text", u.text}});
        }
        return arr;
    };
    for (const IndexEntry& entry : entries_) {
        nlohmann::json record;
        record["id"] = entry.pair.source_id;
        record["split"] = entry.pair.split_index;
        record["zero"] = entry.encoding.is_zero;
        record["encoding"] = entry.encoding.values;
        record["past"] = utterances_json(entry.pair.past);
        record["future"] = utterances_json(entry.pair.future);
        out << record.dump() << '\n';
    }
    if (!out) throw std::runtime_error("failed writing index file: " + path);
}

PastFutureIndex PastFutureIndex::load(const std::string& path, const ContextEncoder& encoder) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open index file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty index file: " + path);
    nlohmann::json header = nlohmann::json::parse(line, nullptr, false);
    if (header.is_discarded() || header.value("format", "") != "fop-index-v1") {
        throw std::runtime_error("unrecognized index file format: " + path);
    }

    auto utterances_from = [](const nlohmann::json& arr) {
        std::vector<Utterance> utterances;
        for (const nlohmann::json& u : arr) {
            utterances.push_back(make_utterance(parse_speaker(u.at("speaker").get<std::string>()),
                                                u.at("text").get<std::string>()));
        }
        return utterances;
    };

    PastFutureIndex index;
    index.encoder_ = &encoder;
    index.k_default_ = header.value("k_default", kDefaultK);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json record = nlohmann::json::parse(line);
        IndexEntry entry;
        entry.pair.source_id = record.at("id").get<std::string>();
        entry.pair.split_index = record.at("split").get<std::size_t>();
        entry.encoding.is_zero = record.at("zero").get<bool>();
        entry.encoding.values = record.at("encoding").get<std::vector<double>>();
        entry.pair.past = utterances_from(record.at("past"));
        entry.pair.future = utterances_from(record.at("future"));
        index.entries_.push_back(std::move(entry));
    }
    if (index.entries_.empty()) {
        throw std::runtime_error("index file holds no entries: " + path);
    }
    return index;
}

RetrievalResult select_future(const std::vector<Neighbor>& neighbors, const ControlWordSet& w) {
    if (neighbors.empty()) {
        throw std::invalid_argument("select_future: no neighbors");
    }
    const Neighbor* best = nullptr;
    std::size_t best_count = 0;
    std::vector<std::string> future_tokens;
    for (const Neighbor& neighbor : neighbors) {
        future_tokens.clear();
        for (const Utterance& utterance : neighbor.entry->pair.future) {
            future_tokens.insert(future_tokens.end(), utterance.tokens.begin(),
                                 utterance.tokens.end());
        }
        const std::size_t count = stem_match_count(future_tokens, w);
        if (best == nullptr || count > best_count ||
            (count == best_count && neighbor_before(neighbor, *best))) {
            best = &neighbor;
            best_count = count;
        }
    }

    RetrievalResult result;
    result.selected_pair = &best->entry->pair;
    result.control_count = best_count;
    result.similarity = best->similarity;
    for (const Utterance& utterance : best->entry->pair.future) {
        if (utterance.speaker == Speaker::System) {
            result.reference_response = utterance;
            break;
        }
    }
    return result;
}

Utterance fop_retrieval_respond(std::span<const Utterance> context, const ControlWordSet& w,
                                const PastFutureIndex& index, std::optional<std::size_t> k) {
    const Encoding query = index.encoder().encode(context);
    const std::vector<Neighbor> neighbors = index.knn(query, k.value_or(index.k_default()));
    return select_future(neighbors, w).reference_response;
}

}  // namespace fop

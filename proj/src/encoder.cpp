#include "fop/encoder.hpp"

#include <cmath>

namespace fop {

BagOfEmbeddingsEncoder::BagOfEmbeddingsEncoder(const EmbeddingTable& table, const Corpus& corpus)
    : table_(&table) {
    const double n_docs = static_cast<double>(corpus.num_documents());
    default_idf_ = std::log(1.0 + n_docs) + 1.0;
    idf_.reserve(corpus.document_frequency.size());
    for (const auto& [token, df] : corpus.document_frequency) {
        idf_[token] = std::log((1.0 + n_docs) / (1.0 + static_cast<double>(df))) + 1.0;
    }
}

Encoding BagOfEmbeddingsEncoder::encode(std::span<const Utterance> prefix) const {
    // Accumulation follows first-occurrence order so encodings are
    // bit-reproducible regardless of hash-map iteration order.
    std::unordered_map<std::string, double> tf;
    std::vector<const std::string*> occurrence_order;
    for (const Utterance& utterance : prefix) {
        for (const std::string& token : utterance.tokens) {
            auto [it, inserted] = tf.try_emplace(token, 0.0);
            it->second += 1.0;
            if (inserted) occurrence_order.push_back(&it->first);
        }
    }

    Encoding encoding;
    encoding.values.assign(table_->dim, 0.0);
    bool any = false;
    for (const std::string* token : occurrence_order) {
        const std::vector<double>* vec = table_->find(*token);
        if (vec == nullptr) continue;
        auto idf_it = idf_.find(*token);
        const double idf = idf_it == idf_.end() ? default_idf_ : idf_it->second;
        const double weight = tf.find(*token)->second * idf;
        for (std::size_t d = 0; d < encoding.values.size(); ++d) {
            encoding.values[d] += weight * (*vec)[d];
        }
        any = true;
    }

    double norm_sq = 0.0;
    for (double x : encoding.values) norm_sq += x * x;
    if (!any || norm_sq <= 0.0) {
        encoding.values.assign(table_->dim, 0.0);
        encoding.is_zero = true;
        return encoding;
    }
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (double& x : encoding.values) x *= inv;
    return encoding;
}

Encoding encode_context(std::span<const Utterance> prefix, const EmbeddingTable& table,
                        const Corpus& corpus) {
    return BagOfEmbeddingsEncoder(table, corpus).encode(prefix);
}

}  // namespace fop

#pragma once

#include <span>
#include <string>
#include <unordered_map>

#include "fop/corpus.hpp"
#include "fop/embeddings.hpp"
#include "fop/lm.hpp"

namespace fop {

// Reference ContextEncoder: tf-idf-weighted mean of word embeddings,
// L2-normalized. tf counts tokens within the prefix; idf comes from corpus
// document frequencies (ln((1+N)/(1+df)) + 1). Tokens without embeddings
// contribute nothing; an all-OOV prefix encodes to the flagged zero vector.
class BagOfEmbeddingsEncoder final : public ContextEncoder {
public:
    // Keeps a pointer to `table`, which must outlive the encoder; idf weights
    // are copied out of `corpus` at construction.
    BagOfEmbeddingsEncoder(const EmbeddingTable& table, const Corpus& corpus);

    std::size_t dim() const override { return table_->dim; }
    Encoding encode(std::span<const Utterance> prefix) const override;

private:
    const EmbeddingTable* table_;
    std::unordered_map<std::string, double> idf_;
    double default_idf_;
};

Encoding encode_context(std::span<const Utterance> prefix, const EmbeddingTable& table,
                        const Corpus& corpus);

}  // namespace fop

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "fop/corpus.hpp"
#include "fop/lm.hpp"

namespace fop {

// Interpolated n-gram model with add-k smoothing:
//   P_1(t)        = (c_1(t) + k) / (T_1 + kV)
//   P_n(t | ctx)  = λ · (c_n(ctx,t) + k) / (c_n(ctx) + kV) + (1 − λ) · P_{n−1}(t | ctx')
// with λ = c_n(ctx) / (c_n(ctx) + 1). next_logits returns log-probabilities,
// so softmax is the identity on the underlying distribution.
class NgramModel final : public LanguageModel {
public:
    static constexpr double kAddK = 0.01;

    NgramModel(Vocabulary vocabulary, std::size_t order);

    const Vocabulary& vocabulary() const override { return vocabulary_; }
    LogitVector next_logits(std::span<const TokenId> context) const override;
    double token_logprob(std::span<const TokenId> context, TokenId token) const override;

    std::size_t order() const { return order_; }

    // Counts one occurrence of `target` after `context` (context length picks
    // the level). Call finalize() after the last observation.
    void observe(std::span<const TokenId> context, TokenId target);
    void finalize();

    void save(const std::string& path) const;
    static NgramModel load(const std::string& path);

private:
    struct ContextEntry {
        double total = 0.0;
        std::unordered_map<TokenId, double> continuations;
    };
    struct KeyHash {
        std::size_t operator()(const std::vector<TokenId>& key) const;
    };
    using Level = std::unordered_map<std::vector<TokenId>, ContextEntry, KeyHash>;

    const ContextEntry* level_entry(std::size_t length,
                                    std::span<const TokenId> context) const;

    Vocabulary vocabulary_;
    std::size_t order_;
    // levels_[l] maps contexts of exactly l tokens; levels_[0] holds the
    // single empty-context (unigram) entry.
    std::vector<Level> levels_;
    std::vector<double> unigram_probs_;
};

// Counts n-grams within each conversation's serialized token stream.
// With `target_side` set, only positions whose target token belongs to that
// side's utterances (words plus closing <eou>) are counted; this trains the
// self-play user simulator.
NgramModel train_ngram(const Corpus& corpus, std::size_t order,
                       std::optional<Speaker> target_side = std::nullopt);

}  // namespace fop

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fop/corpus.hpp"

namespace fop {

using TokenId = std::uint32_t;

// Word-level vocabulary with fixed reserved slots. Corpus tokens follow the
// reserved block in sorted order, so construction is deterministic.
struct Vocabulary {
    static constexpr TokenId kUnk = 0;
    static constexpr TokenId kEou = 1;
    static constexpr TokenId kSys = 2;
    static constexpr TokenId kUsr = 3;
    static constexpr std::size_t kReservedCount = 4;

    std::vector<std::string> tokens;
    std::unordered_map<std::string, TokenId> index;

    static Vocabulary from_corpus(const Corpus& corpus);
    static Vocabulary from_tokens(std::vector<std::string> corpus_tokens);

    std::size_t size() const { return tokens.size(); }
    // kUnk for out-of-vocabulary tokens.
    TokenId id(std::string_view token) const;
    const std::string& token(TokenId id) const { return tokens.at(id); }
    bool is_reserved(TokenId id) const { return id < kReservedCount; }
};

struct LogitVector {
    std::vector<double> values;
};

class LanguageModel {
public:
    virtual ~LanguageModel() = default;

    virtual const Vocabulary& vocabulary() const = 0;
    // Unnormalized next-token scores given the serialized context.
    virtual LogitVector next_logits(std::span<const TokenId> context) const = 0;
    // log P(token | context). The default normalizes next_logits; models with
    // a cheaper direct path may override, but must agree within 1e-9.
    virtual double token_logprob(std::span<const TokenId> context, TokenId token) const;

    // Mean per-token negative log-likelihood of `response` given `context`.
    double sequence_nll(std::span<const TokenId> context,
                        std::span<const TokenId> response) const;
};

struct Encoding {
    std::vector<double> values;
    // Set when no token carried information (e.g. all out of vocabulary);
    // values are then all zero rather than unit-norm.
    bool is_zero = false;
};

class ContextEncoder {
public:
    virtual ~ContextEncoder() = default;

    virtual std::size_t dim() const = 0;
    // L2-normalized encoding of a conversation prefix.
    virtual Encoding encode(std::span<const Utterance> prefix) const = 0;
};

// <sys> tokens <eou> <usr> tokens <eou> ... ; unknown words map to <unk>.
std::vector<TokenId> serialize_context(std::span<const Utterance> utterances,
                                       const Vocabulary& vocabulary);

// serialize_context plus the role marker opening the next utterance.
std::vector<TokenId> generation_prompt(std::span<const Utterance> utterances,
                                       const Vocabulary& vocabulary, Speaker next_speaker);

// exp(mean per-token NLL) over all system-side tokens of the corpus,
// including each system utterance's closing <eou>.
double perplexity(const LanguageModel& lm, const Corpus& corpus);

}  // namespace fop

#include "fop/lm.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace fop {

Vocabulary Vocabulary::from_corpus(const Corpus& corpus) {
    std::set<std::string> unique;
    for (const Conversation& conversation : corpus.conversations) {
        for (const Utterance& utterance : conversation.utterances) {
            unique.insert(utterance.tokens.begin(), utterance.tokens.end());
        }
    }
    return from_tokens(std::vector<std::string>(unique.begin(), unique.end()));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> corpus_tokens) {
    std::sort(corpus_tokens.begin(), corpus_tokens.end());
    corpus_tokens.erase(std::unique(corpus_tokens.begin(), corpus_tokens.end()),
                        corpus_tokens.end());

    Vocabulary vocabulary;
    vocabulary.tokens = {"<unk>", "<eou>", "<sys>", "<usr>"};
    vocabulary.tokens.insert(vocabulary.tokens.end(),
                             std::make_move_iterator(corpus_tokens.begin()),
                             std::make_move_iterator(corpus_tokens.end()));
    vocabulary.index.reserve(vocabulary.tokens.size());
    for (TokenId i = 0; i < vocabulary.tokens.size(); ++i) {
        if (!vocabulary.index.emplace(vocabulary.tokens[i], i).second) {
            throw std::invalid_argument("vocabulary token collides with reserved token: " +
                                        vocabulary.tokens[i]);
        }
    }
    return vocabulary;
}

TokenId Vocabulary::id(std::string_view token) const {
    auto it = index.find(std::string(token));
    return it == index.end() ? kUnk : it->second;
}

double LanguageModel::token_logprob(std::span<const TokenId> context, TokenId token) const {
    const LogitVector logits = next_logits(context);
    const std::vector<double>& values = logits.values;
    const double max_logit = *std::max_element(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += std::exp(v - max_logit);
    return values.at(token) - (max_logit + std::log(sum));
}

double LanguageModel::sequence_nll(std::span<const TokenId> context,
                                   std::span<const TokenId> response) const {
    if (response.empty()) return 0.0;
    std::vector<TokenId> prefix(context.begin(), context.end());
    prefix.reserve(context.size() + response.size());
    double total = 0.0;
    for (TokenId token : response) {
        total -= token_logprob(prefix, token);
        prefix.push_back(token);
    }
    return total / static_cast<double>(response.size());
}

std::vector<TokenId> serialize_context(std::span<const Utterance> utterances,
                                       const Vocabulary& vocabulary) {
    std::vector<TokenId> ids;
    for (const Utterance& utterance : utterances) {
        ids.push_back(utterance.speaker == Speaker::System ? Vocabulary::kSys
                                                           : Vocabulary::kUsr);
        for (const std::string& token : utterance.tokens) {
            ids.push_back(vocabulary.id(token));
        }
        ids.push_back(Vocabulary::kEou);
    }
    return ids;
}

std::vector<TokenId> generation_prompt(std::span<const Utterance> utterances,
                                       const Vocabulary& vocabulary, Speaker next_speaker) {
    std::vector<TokenId> ids = serialize_context(utterances, vocabulary);
    ids.push_back(next_speaker == Speaker::System ? Vocabulary::kSys : Vocabulary::kUsr);
    return ids;
}

double perplexity(const LanguageModel& lm, const Corpus& corpus) {
    const Vocabulary& vocabulary = lm.vocabulary();
    double total_nll = 0.0;
    std::size_t total_tokens = 0;
    for (const Conversation& conversation : corpus.conversations) {
        std::vector<TokenId> prefix;
        for (const Utterance& utterance : conversation.utterances) {
            const bool scored = utterance.speaker == Speaker::System;
            prefix.push_back(utterance.speaker == Speaker::System ? Vocabulary::kSys
                                                                  : Vocabulary::kUsr);
            std::vector<TokenId> body;
            body.reserve(utterance.tokens.size() + 1);
            for (const std::string& token : utterance.tokens) {
                body.push_back(vocabulary.id(token));
            }
            body.push_back(Vocabulary::kEou);
            for (TokenId token : body) {
                if (scored) {
                    total_nll -= lm.token_logprob(prefix, token);
                    ++total_tokens;
                }
                prefix.push_back(token);
            }
        }
    }
    if (total_tokens == 0) {
        throw std::runtime_error("perplexity: no system-side tokens to score");
    }
    return std::exp(total_nll / static_cast<double>(total_tokens));
}

}  // namespace fop

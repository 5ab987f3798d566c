#include "fop/ngram.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fop {

namespace {

constexpr std::string_view kMagic = "fop-ngram-v1";

thread_local std::vector<TokenId> scratch_key;
thread_local std::vector<std::pair<TokenId, double>> scratch_updates;

}  // namespace

std::size_t NgramModel::KeyHash::operator()(const std::vector<TokenId>& key) const {
    std::size_t h = 1469598103934665603ull;
    for (TokenId id : key) {
        h ^= id;
        h *= 1099511628211ull;
    }
    return h;
}

NgramModel::NgramModel(Vocabulary vocabulary, std::size_t order)
    : vocabulary_(std::move(vocabulary)), order_(order), levels_(order) {
    if (order_ < 2 || order_ > 5) {
        throw std::invalid_argument("ngram order must be in [2, 5]");
    }
}

void NgramModel::observe(std::span<const TokenId> context, TokenId target) {
    if (context.size() >= order_) {
        throw std::invalid_argument("observe: context longer than order-1");
    }
    scratch_key.assign(context.begin(), context.end());
    ContextEntry& entry = levels_[context.size()][scratch_key];
    entry.total += 1.0;
    entry.continuations[target] += 1.0;
}

void NgramModel::finalize() {
    const std::size_t v = vocabulary_.size();
    const double denom_smoothing = kAddK * static_cast<double>(v);
    unigram_probs_.assign(v, 0.0);

    const ContextEntry* unigrams = level_entry(0, {});
    const double total = unigrams == nullptr ? 0.0 : unigrams->total;
    const double denom = total + denom_smoothing;
    for (std::size_t t = 0; t < v; ++t) {
        double count = 0.0;
        if (unigrams != nullptr) {
            auto it = unigrams->continuations.find(static_cast<TokenId>(t));
            if (it != unigrams->continuations.end()) count = it->second;
        }
        unigram_probs_[t] = (count + kAddK) / denom;
    }
}

const NgramModel::ContextEntry* NgramModel::level_entry(
    std::size_t length, std::span<const TokenId> context) const {
    scratch_key.assign(context.end() - static_cast<long>(length), context.end());
    const Level& level = levels_[length];
    auto it = level.find(scratch_key);
    return it == level.end() ? nullptr : &it->second;
}

LogitVector NgramModel::next_logits(std::span<const TokenId> context) const {
    if (unigram_probs_.empty()) {
        throw std::logic_error("NgramModel::finalize was not called");
    }
    const std::size_t v = vocabulary_.size();
    LogitVector logits;
    logits.values = unigram_probs_;
    std::vector<double>& values = logits.values;

    const double smoothing = kAddK * static_cast<double>(v);
    const std::size_t max_len = std::min(order_ - 1, context.size());
    for (std::size_t length = 1; length <= max_len; ++length) {
        const ContextEntry* entry = level_entry(length, context);
        if (entry == nullptr) continue;
        const double lambda = entry->total / (entry->total + 1.0);
        const double one_minus = 1.0 - lambda;
        const double denom = entry->total + smoothing;
        const double unseen = lambda * (kAddK / denom);
        // Seen continuations use pre-update values so every entry matches the
        // scalar token_logprob recursion bit for bit.
        scratch_updates.clear();
        for (const auto& [token, count] : entry->continuations) {
            scratch_updates.emplace_back(
                token, lambda * ((count + kAddK) / denom) + one_minus * values[token]);
        }
        for (double& value : values) {
            value = unseen + one_minus * value;
        }
        for (const auto& [token, value] : scratch_updates) {
            values[token] = value;
        }
    }
    for (double& value : values) {
        value = std::log(value);
    }
    return logits;
}

double NgramModel::token_logprob(std::span<const TokenId> context, TokenId token) const {
    if (unigram_probs_.empty()) {
        throw std::logic_error("NgramModel::finalize was not called");
    }
    double p = unigram_probs_.at(token);
    const double smoothing = kAddK * static_cast<double>(vocabulary_.size());
    const std::size_t max_len = std::min(order_ - 1, context.size());
    for (std::size_t length = 1; length <= max_len; ++length) {
        const ContextEntry* entry = level_entry(length, context);
        if (entry == nullptr) continue;
        const double lambda = entry->total / (entry->total + 1.0);
        const double denom = entry->total + smoothing;
        auto it = entry->continuations.find(token);
        const double count = it == entry->continuations.end() ? 0.0 : it->second;
        p = lambda * ((count + kAddK) / denom) + (1.0 - lambda) * p;
    }
    return std::log(p);
}

void NgramModel::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open model file for writing: " + path);
    out << kMagic << '\n';
    out << "order " << order_ << '\n';
    out << "vocab " << vocabulary_.size() << '\n';
    for (const std::string& token : vocabulary_.tokens) {
        out << token << '\n';
    }
    for (std::size_t length = 0; length < levels_.size(); ++length) {
        const Level& level = levels_[length];
        std::vector<const std::pair<const std::vector<TokenId>, ContextEntry>*> entries;
        entries.reserve(level.size());
        for (const auto& entry : level) entries.push_back(&entry);
        std::sort(entries.begin(), entries.end(),
                  [](const auto* a, const auto* b) { return a->first < b->first; });

        out << "level " << length << ' ' << entries.size() << '\n';
        for (const auto* entry : entries) {
            for (TokenId id : entry->first) out << id << ' ';
            std::vector<std::pair<TokenId, double>> continuations(
                entry->second.continuations.begin(), entry->second.continuations.end());
            std::sort(continuations.begin(), continuations.end());
            out << continuations.size();
            for (const auto& [token, count] : continuations) {
                out << ' ' << token << ' ' << static_cast<long long>(count);
            }
            out << '\n';
        }
    }
    if (!out) throw std::runtime_error("failed writing model file: " + path);
}

NgramModel NgramModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    std::string magic;
    if (!std::getline(in, magic) || magic != kMagic) {
        throw std::runtime_error("unrecognized model file format: " + path);
    }
    std::string keyword;
    std::size_t order = 0;
    std::size_t vocab_size = 0;
    in >> keyword >> order;
    if (keyword != "order") throw std::runtime_error("model file missing order: " + path);
    in >> keyword >> vocab_size;
    if (keyword != "vocab") throw std::runtime_error("model file missing vocab: " + path);
    in.ignore();

    std::vector<std::string> tokens;
    tokens.reserve(vocab_size);
    for (std::size_t i = 0; i < vocab_size; ++i) {
        std::string token;
        if (!std::getline(in, token)) {
            throw std::runtime_error("model file truncated in vocabulary: " + path);
        }
        tokens.push_back(std::move(token));
    }
    if (tokens.size() < Vocabulary::kReservedCount) {
        throw std::runtime_error("model vocabulary too small: " + path);
    }
    Vocabulary vocabulary;
    vocabulary.tokens = std::move(tokens);
    for (TokenId i = 0; i < vocabulary.tokens.size(); ++i) {
        vocabulary.index.emplace(vocabulary.tokens[i], i);
    }

    NgramModel model(std::move(vocabulary), order);
    for (std::size_t expected = 0; expected < order; ++expected) {
        std::size_t length = 0;
        std::size_t num_entries = 0;
        in >> keyword >> length >> num_entries;
        if (keyword != "level" || length != expected) {
            throw std::runtime_error("model file missing level " + std::to_string(expected) +
                                     ": " + path);
        }
        for (std::size_t e = 0; e < num_entries; ++e) {
            std::vector<TokenId> key(length);
            for (TokenId& id : key) in >> id;
            std::size_t pairs = 0;
            in >> pairs;
            ContextEntry entry;
            for (std::size_t p = 0; p < pairs; ++p) {
                TokenId token = 0;
                long long count = 0;
                in >> token >> count;
                entry.continuations[token] = static_cast<double>(count);
                entry.total += static_cast<double>(count);
            }
            if (!in) throw std::runtime_error("model file truncated in counts: " + path);
            model.levels_[length].emplace(std::move(key), std::move(entry));
        }
    }
    model.finalize();
    return model;
}

NgramModel train_ngram(const Corpus& corpus, std::size_t order,
                       std::optional<Speaker> target_side) {
    if (corpus.conversations.empty()) {
        throw std::runtime_error("train_ngram: empty corpus");
    }
    NgramModel model(Vocabulary::from_corpus(corpus), order);
    const Vocabulary& vocabulary = model.vocabulary();

    std::vector<TokenId> ids;
    std::vector<char> counted;
    for (const Conversation& conversation : corpus.conversations) {
        ids.clear();
        counted.clear();
        for (const Utterance& utterance : conversation.utterances) {
            const bool on_side = !target_side || utterance.speaker == *target_side;
            ids.push_back(utterance.speaker == Speaker::System ? Vocabulary::kSys
                                                               : Vocabulary::kUsr);
            counted.push_back(!target_side);
            for (const std::string& token : utterance.tokens) {
                ids.push_back(vocabulary.id(token));
                counted.push_back(on_side);
            }
            ids.push_back(Vocabulary::kEou);
            counted.push_back(on_side);
        }
        for (std::size_t n = 1; n <= order; ++n) {
            if (ids.size() + 1 < n) continue;
            for (std::size_t i = n - 1; i < ids.size(); ++i) {
                if (!counted[i]) continue;
                model.observe(std::span<const TokenId>(ids).subspan(i - (n - 1), n - 1),
                              ids[i]);
            }
        }
    }
    model.finalize();
    return model;
}

}  // namespace fop

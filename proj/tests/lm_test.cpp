#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fop/corpus.hpp"
#include "fop/lm.hpp"
#include "fop/ngram.hpp"
#include "test_util.hpp"

using namespace fop;
using namespace fop::testing;

namespace {

Corpus tiny_corpus() {
    return make_corpus({
        make_conversation("c1", {{Speaker::System, "a b a"}, {Speaker::User, "b b"}}),
        make_conversation("c2", {{Speaker::System, "a c"}, {Speaker::User, "c a"}}),
    });
}

// Independent interpolated add-k evaluator over explicit n-gram count maps.
struct OracleLm {
    std::size_t order;
    double k = NgramModel::kAddK;
    std::size_t vocab_size = 0;
    // counts[len][context tokens][target]
    std::vector<std::map<std::vector<TokenId>, std::map<TokenId, double>>> counts;

    explicit OracleLm(const Corpus& corpus, std::size_t order_, const Vocabulary& vocabulary)
        : order(order_), vocab_size(vocabulary.size()), counts(order_) {
        for (const auto& conv : corpus.conversations) {
            const std::vector<TokenId> stream = serialize_context(conv.utterances, vocabulary);
            for (std::size_t i = 0; i < stream.size(); ++i) {
                for (std::size_t len = 0; len < order; ++len) {
                    if (i < len) continue;
                    std::vector<TokenId> context(stream.begin() + (i - len), stream.begin() + i);
                    counts[len][context][stream[i]] += 1.0;
                }
            }
        }
    }

    double prob(std::span<const TokenId> context, TokenId target) const {
        double p = 0.0;
        for (std::size_t len = 0; len < order; ++len) {
            const std::size_t take = std::min(len, context.size());
            std::vector<TokenId> key(context.end() - take, context.end());
            double level_p;
            double total = 0.0;
            double hit = 0.0;
            auto it = counts[len].find(key);
            if (it != counts[len].end()) {
                for (const auto& [tok, c] : it->second) total += c;
                auto jt = it->second.find(target);
                if (jt != it->second.end()) hit = jt->second;
            }
            level_p = (hit + k) / (total + k * double(vocab_size));
            if (len == 0) {
                p = level_p;
            } else {
                const double lambda = total / (total + 1.0);
                p = lambda * level_p + (1.0 - lambda) * p;
            }
        }
        return p;
    }
};

}  // namespace

TEST_CASE("vocabulary reserves special ids and sorts corpus tokens") {
    const Corpus corpus = tiny_corpus();
    const Vocabulary vocab = Vocabulary::from_corpus(corpus);
    CHECK(vocab.token(Vocabulary::kUnk) == "<unk>");
    CHECK(vocab.token(Vocabulary::kEou) == "<eou>");
    CHECK(vocab.token(Vocabulary::kSys) == "<sys>");
    CHECK(vocab.token(Vocabulary::kUsr) == "<usr>");
    REQUIRE(vocab.size() == Vocabulary::kReservedCount + 3);
    CHECK(vocab.token(4) == "a");
    CHECK(vocab.token(5) == "b");
    CHECK(vocab.token(6) == "c");
    CHECK(vocab.id("b") == 5);
    CHECK(vocab.id("zebra") == Vocabulary::kUnk);
    CHECK(vocab.is_reserved(Vocabulary::kSys));
    CHECK_FALSE(vocab.is_reserved(4));
}

TEST_CASE("serialize_context emits role markers and <eou> terminators") {
    const Corpus corpus = tiny_corpus();
    const Vocabulary vocab = Vocabulary::from_corpus(corpus);
    const auto& conv = corpus.conversations[0];
    const std::vector<TokenId> ids = serialize_context(conv.utterances, vocab);
    const std::vector<TokenId> expected = {
        Vocabulary::kSys, vocab.id("a"), vocab.id("b"), vocab.id("a"), Vocabulary::kEou,
        Vocabulary::kUsr, vocab.id("b"), vocab.id("b"), Vocabulary::kEou};
    CHECK(ids == expected);

    const std::vector<TokenId> prompt =
        generation_prompt(conv.utterances, vocab, Speaker::System);
    REQUIRE(prompt.size() == ids.size() + 1);
    CHECK(prompt.back() == Vocabulary::kSys);
    CHECK(generation_prompt({}, vocab, Speaker::User) ==
          std::vector<TokenId>{Vocabulary::kUsr});
}

TEST_CASE("ngram logits match the independent interpolated add-k oracle") {
    const Corpus corpus = tiny_corpus();
    const Vocabulary vocab = Vocabulary::from_corpus(corpus);
    for (std::size_t order : {std::size_t(2), std::size_t(3), std::size_t(4)}) {
        CAPTURE(order);
        const NgramModel model = train_ngram(corpus, order);
        const OracleLm oracle(corpus, order, vocab);
        const std::vector<std::vector<TokenId>> contexts = {
            {},
            {Vocabulary::kSys},
            {Vocabulary::kSys, vocab.id("a")},
            {vocab.id("a"), vocab.id("b")},
            {vocab.id("c"), vocab.id("c")},  // unseen context falls to lower orders
            {vocab.id("b"), vocab.id("b"), vocab.id("a")},
        };
        for (const auto& context : contexts) {
            const LogitVector logits = model.next_logits(context);
            REQUIRE(logits.values.size() == vocab.size());
            double mass = 0.0;
            for (TokenId t = 0; t < logits.values.size(); ++t) {
                const double oracle_p = oracle.prob(context, t);
                CHECK(logits.values[t] ==
                      doctest::Approx(std::log(oracle_p)).epsilon(1e-9));
                CHECK(model.token_logprob(context, t) ==
                      doctest::Approx(logits.values[t]).epsilon(1e-9));
                mass += std::exp(logits.values[t]);
            }
            // next_logits returns genuine log-probabilities.
            CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("side-restricted training only counts that side's targets") {
    // "solo" appears only in user utterances; a system-side model must give it
    // the smoothing-floor unigram mass (count zero) while the full model does not.
    const Corpus corpus = make_corpus({
        make_conversation("c1", {{Speaker::System, "a b"}, {Speaker::User, "solo solo"}}),
        make_conversation("c2", {{Speaker::System, "b a"}, {Speaker::User, "solo"}}),
    });
    const Vocabulary vocab = Vocabulary::from_corpus(corpus);
    const NgramModel system_lm = train_ngram(corpus, 2, Speaker::System);
    const NgramModel full_lm = train_ngram(corpus, 2);
    const TokenId solo = vocab.id("solo");
    const TokenId a = vocab.id("a");
    // Empty context falls back to the unigram level.
    CHECK(system_lm.token_logprob({}, solo) < system_lm.token_logprob({}, a) - 1.0);
    CHECK(full_lm.token_logprob({}, solo) > full_lm.token_logprob({}, a));
    // The user model keeps user words and drops system-only mass.
    const NgramModel user_lm = train_ngram(corpus, 2, Speaker::User);
    CHECK(user_lm.token_logprob({}, solo) > user_lm.token_logprob({}, a));

    CHECK_THROWS_AS(train_ngram(corpus, 1), std::invalid_argument);
    CHECK_THROWS_AS(train_ngram(corpus, 6), std::invalid_argument);
}

TEST_CASE("sequence_nll averages per-token logprobs") {
    const Corpus corpus = tiny_corpus();
    const NgramModel model = train_ngram(corpus, 2);
    const Vocabulary& vocab = model.vocabulary();
    const std::vector<TokenId> context = {Vocabulary::kSys};
    const std::vector<TokenId> response = {vocab.id("a"), vocab.id("b"), Vocabulary::kEou};
    double expected = 0.0;
    std::vector<TokenId> running(context);
    for (TokenId t : response) {
        expected -= model.token_logprob(running, t);
        running.push_back(t);
    }
    expected /= double(response.size());
    CHECK(model.sequence_nll(context, response) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(model.sequence_nll(context, {}) == 0.0);
}

TEST_CASE("perplexity exponentiates the mean system-side token nll") {
    const Corpus corpus = tiny_corpus();
    const NgramModel model = train_ngram(corpus, 2);
    const Vocabulary& vocab = model.vocabulary();
    double total_nll = 0.0;
    std::size_t total_tokens = 0;
    for (const auto& conv : corpus.conversations) {
        std::vector<Utterance> prefix;
        for (const auto& utterance : conv.utterances) {
            if (utterance.speaker == Speaker::System) {
                const std::vector<TokenId> prompt =
                    generation_prompt(prefix, vocab, Speaker::System);
                std::vector<TokenId> ids;
                for (const auto& token : utterance.tokens) ids.push_back(vocab.id(token));
                ids.push_back(Vocabulary::kEou);
                total_nll += model.sequence_nll(prompt, ids) * double(ids.size());
                total_tokens += ids.size();
            }
            prefix.push_back(utterance);
        }
    }
    const double expected = std::exp(total_nll / double(total_tokens));
    CHECK(perplexity(model, corpus) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("ngram save/load round-trips logits exactly") {
    TempDir dir("lm");
    const Corpus corpus = tiny_corpus();
    const NgramModel model = train_ngram(corpus, 3);
    model.save(dir.file("model.bin").string());
    const NgramModel loaded = NgramModel::load(dir.file("model.bin").string());
    CHECK(loaded.order() == model.order());
    CHECK(loaded.vocabulary().tokens == model.vocabulary().tokens);
    const std::vector<TokenId> context = {Vocabulary::kSys, model.vocabulary().id("a")};
    const LogitVector a = model.next_logits(context);
    const LogitVector b = loaded.next_logits(context);
    REQUIRE(a.values.size() == b.values.size());
    for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(a.values[i] == b.values[i]);
}

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "fop/decode.hpp"
#include "fop/lm.hpp"
#include "fop/ngram.hpp"
#include "fop/random.hpp"
#include "fop/stemmer.hpp"
#include "test_util.hpp"

using namespace fop;
using namespace fop::testing;

namespace {

Vocabulary word_vocab(std::vector<std::string> words) {
    return Vocabulary::from_tokens(std::move(words));
}

EmbeddingTable table_of(std::vector<std::pair<std::string, std::vector<double>>> rows) {
    EmbeddingTable table;
    table.dim = rows.empty() ? 0 : rows[0].second.size();
    for (auto& [word, vec] : rows) {
        double norm = 0.0;
        for (double v : vec) norm += v * v;
        norm = std::sqrt(norm);
        if (norm > 0.0)
            for (double& v : vec) v /= norm;
        table.entries[word] = std::move(vec);
    }
    return table;
}

Utterance reference_of(const std::string& text) {
    return make_utterance(Speaker::System, text);
}

}  // namespace

TEST_CASE("named profiles pin their decoding parameters") {
    CHECK(DecoderConfig::profile("abcd").lambda == 15.0);
    CHECK(DecoderConfig::profile("multiwoz").lambda == 15.0);
    CHECK(DecoderConfig::profile("taskmaster").lambda == 10.0);
    const DecoderConfig synthetic = DecoderConfig::profile("synthetic");
    CHECK(synthetic.lambda == 3.5);
    CHECK(synthetic.beam_width == 1);
    CHECK(synthetic.retrieval_k == 60);
    CHECK_THROWS_AS(DecoderConfig::profile("inventive"), std::invalid_argument);
    CHECK(DecoderConfig{}.window == 4);
    CHECK(DecoderConfig{}.candidates == 10);
    CHECK(DecoderConfig{}.beam_width == 4);
}

TEST_CASE("boost formula reproduces hand-computed values") {
    const Vocabulary vocab = word_vocab({"anchor", "offside", "probe", "quiet"});
    // anchor/offside are the window words; probe has cosine 0.8 to offside.
    const EmbeddingTable table = table_of({
        {"anchor", {1.0, 0.0, 0.0}},
        {"offside", {0.0, 1.0, 0.0}},
        {"probe", {0.0, 0.8, 0.6}},
    });
    WindowState window = WindowState::from_reference(reference_of("anchor offside"), 4);
    BoostCache cache(vocab, table, false);
    LogitVector logits;
    logits.values.assign(vocab.size(), 0.0);

    SUBCASE("exact-match word at offset zero gains exactly lambda") {
        LogitVector boosted = logits;
        boost_logits_inplace(boosted, window, cache, 15.0);
        CHECK(boosted.values[vocab.id("anchor")] == doctest::Approx(15.0).epsilon(1e-9));
        // offset 1 halves the exact-match boost of the second window word
        CHECK(boosted.values[vocab.id("offside")] == doctest::Approx(7.5).epsilon(1e-9));
        // cos 0.8 at offset 1: 15 * 0.5 * 0.64 = 4.8
        CHECK(boosted.values[vocab.id("probe")] == doctest::Approx(4.8).epsilon(1e-9));
        // no embedding: no boost
        CHECK(boosted.values[vocab.id("quiet")] == 0.0);
        for (TokenId t = 0; t < boosted.values.size(); ++t)
            CHECK(boosted.values[t] >= logits.values[t]);
    }

    SUBCASE("lambda zero is the exact identity") {
        LogitVector boosted = logits;
        for (std::size_t i = 0; i < boosted.values.size(); ++i)
            boosted.values[i] = -double(i) * 0.37;
        const LogitVector before = boosted;
        boost_logits_inplace(boosted, window, cache, 0.0);
        CHECK(boosted.values == before.values);
    }

    SUBCASE("empty window is the exact identity") {
        WindowState spent = window;
        spent.cursor = spent.reference_words.size();
        LogitVector boosted = logits;
        boosted.values[2] = 3.25;
        const LogitVector before = boosted;
        boost_logits_inplace(boosted, spent, cache, 15.0);
        CHECK(boosted.values == before.values);
    }

    SUBCASE("stateless wrapper agrees with the cached path") {
        const LogitVector a = boost_logits(logits, window, vocab, table, 15.0);
        LogitVector b = logits;
        boost_logits_inplace(b, window, cache, 15.0);
        CHECK(a.values == b.values);
    }
}

TEST_CASE("window decay weights are exactly 1, 1/2, 1/4, 1/8") {
    const Vocabulary vocab = word_vocab({"w0", "w1", "w2", "w3", "w4"});
    const EmbeddingTable table = table_of({
        {"w0", {1, 0, 0, 0, 0}},
        {"w1", {0, 1, 0, 0, 0}},
        {"w2", {0, 0, 1, 0, 0}},
        {"w3", {0, 0, 0, 1, 0}},
        {"w4", {0, 0, 0, 0, 1}},
    });
    WindowState window = WindowState::from_reference(reference_of("w0 w1 w2 w3 w4"), 4);
    CHECK(window.active_size() == 4);
    BoostCache cache(vocab, table, false);
    LogitVector logits;
    logits.values.assign(vocab.size(), 0.0);
    boost_logits_inplace(logits, window, cache, 1.0);
    CHECK(logits.values[vocab.id("w0")] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(logits.values[vocab.id("w1")] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(logits.values[vocab.id("w2")] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(logits.values[vocab.id("w3")] == doctest::Approx(0.125).epsilon(1e-12));
    // w4 sits beyond the q=4 window
    CHECK(logits.values[vocab.id("w4")] == 0.0);
}

TEST_CASE("window advances past the matched word, by stem, smallest offset first") {
    WindowState window = WindowState::from_reference(reference_of("ship the boxes today now"), 3);
    CHECK(window.cursor == 0);
    CHECK(window.active_size() == 3);

    window.advance("unrelated");
    CHECK(window.cursor == 0);

    // "boxes" stems to "box": matches offset 2, cursor lands after it.
    window.advance("box");
    CHECK(window.cursor == 3);
    CHECK(window.active_size() == 2);  // clipped at the reference end

    window.advance("today");
    CHECK(window.cursor == 4);
    window.advance("nothing");
    CHECK_FALSE(window.exhausted());
    window.advance("now");
    CHECK(window.cursor == 5);
    CHECK(window.exhausted());
    CHECK(window.active_size() == 0);

    SUBCASE("q=1 only ever exposes the cursor word") {
        WindowState narrow = WindowState::from_reference(reference_of("alpha beta"), 1);
        CHECK(narrow.active_size() == 1);
        narrow.advance("beta");  // not visible at offset 0
        CHECK(narrow.cursor == 0);
        narrow.advance("alpha");
        CHECK(narrow.cursor == 1);
    }

    SUBCASE("duplicate stems match at their smallest active offset") {
        WindowState dup = WindowState::from_reference(reference_of("go go go stop"), 4);
        dup.advance("go");
        CHECK(dup.cursor == 1);
        dup.advance("go");
        CHECK(dup.cursor == 2);
    }

    SUBCASE("free-function variant leaves the original untouched") {
        const WindowState start = WindowState::from_reference(reference_of("a b"), 4);
        const WindowState moved = advance_window(start, "b");
        CHECK(start.cursor == 0);
        CHECK(moved.cursor == 2);
    }

    CHECK_THROWS_AS(WindowState::from_reference(reference_of("a"), 0), std::invalid_argument);
}

TEST_CASE("window replay matches a straight-line trace oracle") {
    Rng rng(99);
    const std::vector<std::string> lexicon = {"red", "blue", "green", "gold", "iron", "clay"};
    for (std::size_t trial = 0; trial < 300; ++trial) {
        std::string ref_text;
        const std::size_t ref_len = 1 + uniform_index(rng, 6);
        std::vector<std::string> ref_words;
        for (std::size_t i = 0; i < ref_len; ++i) {
            ref_words.push_back(lexicon[uniform_index(rng, lexicon.size())]);
            ref_text += ref_words.back() + " ";
        }
        const std::size_t q = 1 + uniform_index(rng, 4);
        WindowState window = WindowState::from_reference(reference_of(ref_text), q);

        std::size_t oracle_cursor = 0;
        for (std::size_t step = 0; step < 15; ++step) {
            const std::string token = lexicon[uniform_index(rng, lexicon.size())];
            const std::size_t before = window.cursor;
            window.advance(token);

            // Straight-line oracle: scan the active span for the first stem hit.
            std::size_t expected = oracle_cursor;
            for (std::size_t o = 0; o < q && oracle_cursor + o < ref_words.size(); ++o) {
                if (porter_stem(ref_words[oracle_cursor + o]) == porter_stem(token)) {
                    expected = oracle_cursor + o + 1;
                    break;
                }
            }
            oracle_cursor = expected;
            CHECK(window.cursor == expected);
            CHECK(window.cursor >= before);  // cursor is monotone
        }
    }
}

TEST_CASE("sampling respects temperature, top-k truncation, and bans") {
    const std::vector<double> logits = {0.0, -0.1, -0.2, -15.0};
    Rng rng(3);

    SUBCASE("top_k 1 is deterministic argmax") {
        for (int i = 0; i < 20; ++i)
            CHECK(sample_from_logits(logits, 1.0, 1, rng, {}) == 0);
        const std::vector<double> tied = {0.5, 0.5, -1.0};
        for (int i = 0; i < 20; ++i)
            CHECK(sample_from_logits(tied, 1.0, 1, rng, {}) == 0);  // tie keeps lower index
    }

    SUBCASE("banned ids never come out") {
        const std::vector<TokenId> banned = {0, 1};
        for (int i = 0; i < 200; ++i) {
            const TokenId t = sample_from_logits(logits, 1.0, 0, rng, banned);
            CHECK(t >= 2);
        }
    }

    SUBCASE("draw frequencies approximate the softmax") {
        std::map<TokenId, int> counts;
        const int n = 20000;
        for (int i = 0; i < n; ++i) ++counts[sample_from_logits(logits, 1.0, 0, rng, {})];
        double z = 0.0;
        for (double l : logits) z += std::exp(l);
        for (TokenId t = 0; t < 3; ++t) {
            const double expected = std::exp(logits[t]) / z;
            CHECK(double(counts[t]) / n == doctest::Approx(expected).epsilon(0.08));
        }
        CHECK(counts[3] <= 3);
    }

    SUBCASE("low temperature sharpens toward the argmax") {
        // Temperature 0.01 turns the 0.1 logit gap into 10, so p(argmax) > 0.9999.
        int argmax_hits = 0;
        for (int i = 0; i < 500; ++i)
            if (sample_from_logits(logits, 0.01, 0, rng, {}) == 0) ++argmax_hits;
        CHECK(argmax_hits >= 490);
    }
}

TEST_CASE("reranking picks max control count, then min loss, then earliest") {
    SUBCASE("hand cases") {
        std::vector<GenerationCandidate> candidates(4);
        candidates[0] = {{}, "a", 1, 0.2};
        candidates[1] = {{}, "b", 2, 9.0};
        candidates[2] = {{}, "c", 2, 1.5};
        candidates[3] = {{}, "d", 2, 1.5};
        CHECK(rerank_index(candidates) == 2);
        CHECK(rerank(candidates).text == "c");
        candidates[3].loss = 1.0;
        CHECK(rerank_index(candidates) == 3);
        std::vector<GenerationCandidate> empty;
        CHECK_THROWS_AS(rerank_index(empty), std::invalid_argument);
    }

    SUBCASE("random sets agree with an exhaustive oracle") {
        Rng rng(41);
        for (std::size_t trial = 0; trial < 300; ++trial) {
            std::vector<GenerationCandidate> candidates(1 + uniform_index(rng, 8));
            for (auto& candidate : candidates) {
                candidate.control_count = uniform_index(rng, 4);
                candidate.loss = double(uniform_index(rng, 5)) * 0.5;
            }
            std::size_t best = 0;
            for (std::size_t i = 1; i < candidates.size(); ++i) {
                const auto& a = candidates[i];
                const auto& b = candidates[best];
                if (a.control_count > b.control_count ||
                    (a.control_count == b.control_count && a.loss < b.loss))
                    best = i;
            }
            CHECK(rerank_index(candidates) == best);
        }
    }
}

TEST_CASE("response sampling bans <eou> on the first step and honors max_tokens") {
    // Corpus dominated by instant stops: "a" then end. The first sampled token
    // cannot be <eou>, so every response carries at least one word.
    const Corpus corpus = make_corpus({
        make_conversation("c1", {{Speaker::System, "a"}, {Speaker::User, "b"}}),
        make_conversation("c2", {{Speaker::System, "a"}, {Speaker::User, "b"}}),
    });
    const NgramModel lm = train_ngram(corpus, 2);
    DecoderConfig cfg = DecoderConfig::profile("synthetic");
    cfg.top_k = 0;
    const std::vector<TokenId> prompt = generation_prompt({}, lm.vocabulary(), Speaker::System);
    Rng rng(7);
    for (int i = 0; i < 50; ++i) {
        const auto tokens = sample_response_tokens(prompt, lm, cfg, nullptr, nullptr, rng);
        CHECK(!tokens.empty());
        CHECK(tokens.size() <= cfg.max_tokens);
        for (TokenId t : tokens) CHECK(t >= Vocabulary::kReservedCount);
    }

    SUBCASE("max_tokens caps the length when <eou> never fires") {
        DecoderConfig tight = cfg;
        tight.max_tokens = 3;
        Rng capped(11);
        for (int i = 0; i < 20; ++i) {
            const auto tokens = sample_response_tokens(prompt, lm, tight, nullptr, nullptr, capped);
            CHECK(!tokens.empty());
            CHECK(tokens.size() <= 3);
        }
    }
}

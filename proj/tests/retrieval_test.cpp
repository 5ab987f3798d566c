#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "fop/encoder.hpp"
#include "fop/random.hpp"
#include "fop/retrieval.hpp"
#include "fop/synthetic.hpp"
#include "test_util.hpp"

using namespace fop;
using namespace fop::testing;

namespace {

struct Fixture {
    Corpus corpus;
    EmbeddingTable table;
    std::unique_ptr<BagOfEmbeddingsEncoder> encoder;
    std::unique_ptr<PastFutureIndex> index;

    explicit Fixture(std::size_t samples) {
        Rng rng(17);
        corpus = generate_synthetic_corpus(5, samples, rng);
        table = synthetic_embeddings(10);
        encoder = std::make_unique<BagOfEmbeddingsEncoder>(table, corpus);
        index = std::make_unique<PastFutureIndex>(PastFutureIndex::build(corpus, *encoder));
    }
};

// O(n*d) scan replicating the documented ordering contract.
std::vector<const IndexEntry*> brute_force_knn(const PastFutureIndex& index,
                                               const Encoding& query, std::size_t k) {
    struct Row {
        double sim;
        const IndexEntry* entry;
    };
    std::vector<Row> rows;
    for (const auto& entry : index.entries()) {
        double dot = 0.0;
        for (std::size_t i = 0; i < query.values.size(); ++i)
            dot += query.values[i] * entry.encoding.values[i];
        rows.push_back({query.is_zero || entry.encoding.is_zero ? 0.0 : dot, &entry});
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        if (a.sim != b.sim) return a.sim > b.sim;
        if (a.entry->pair.source_id != b.entry->pair.source_id)
            return a.entry->pair.source_id < b.entry->pair.source_id;
        return a.entry->pair.split_index < b.entry->pair.split_index;
    });
    std::vector<const IndexEntry*> out;
    for (std::size_t i = 0; i < std::min(k, rows.size()); ++i) out.push_back(rows[i].entry);
    return out;
}

}  // namespace

TEST_CASE("index build covers every user-to-system split") {
    const Fixture fx(40);
    std::size_t expected = 0;
    for (const auto& conv : fx.corpus.conversations)
        expected += split_past_future(conv).size();
    CHECK(fx.index->entries().size() == expected);
    CHECK(fx.index->skipped_conversations() == 0);
    CHECK_FALSE(fx.index->approximate());
    for (const auto& entry : fx.index->entries()) {
        CHECK_FALSE(entry.pair.future.empty());
        CHECK(entry.pair.future.front().speaker == Speaker::System);
    }
}

TEST_CASE("exact knn equals the brute-force scan including tie order") {
    const Fixture fx(60);
    Rng rng(5);
    for (std::size_t q = 0; q < 50; ++q) {
        const auto& conv = fx.corpus.conversations[uniform_index(rng, fx.corpus.conversations.size())];
        const std::size_t take = 1 + uniform_index(rng, conv.utterances.size());
        const Encoding query = fx.encoder->encode(
            std::span<const Utterance>(conv.utterances.data(), take));
        for (std::size_t k : {std::size_t(1), std::size_t(10), std::size_t(40)}) {
            const auto got = fx.index->knn(query, k);
            const auto want = brute_force_knn(*fx.index, query, k);
            REQUIRE(got.size() == want.size());
            for (std::size_t i = 0; i < got.size(); ++i) {
                CHECK(got[i].entry == want[i]);
            }
        }
    }
    CHECK(fx.index->knn(fx.encoder->encode(fx.corpus.conversations[0].utterances),
                        fx.index->entries().size() + 50)
              .size() == fx.index->entries().size());
    CHECK_THROWS_AS(fx.index->knn(Encoding{{0.0}, true}, 0), std::invalid_argument);
}

TEST_CASE("approximate knn stays close to exact") {
    const Fixture fx(120);
    std::vector<Encoding> queries;
    Rng rng(9);
    for (std::size_t q = 0; q < 60; ++q) {
        const auto& conv = fx.corpus.conversations[uniform_index(rng, fx.corpus.conversations.size())];
        const std::size_t take = 1 + uniform_index(rng, conv.utterances.size());
        queries.push_back(
            fx.encoder->encode(std::span<const Utterance>(conv.utterances.data(), take)));
    }
    std::vector<std::vector<const IndexEntry*>> exact;
    for (const auto& query : queries) exact.push_back(brute_force_knn(*fx.index, query, 10));

    fx.index->build_clusters(16, 6, 123);
    CHECK(fx.index->approximate());
    std::size_t hits = 0;
    for (std::size_t q = 0; q < queries.size(); ++q) {
        const auto got = fx.index->knn(queries[q], 10);
        std::set<const IndexEntry*> got_set;
        for (const auto& neighbor : got) got_set.insert(neighbor.entry);
        for (const auto* entry : exact[q])
            if (got_set.count(entry)) ++hits;
    }
    const double recall = double(hits) / double(queries.size() * 10);
    CHECK(recall >= 0.9);
}

TEST_CASE("index save/load round-trips entries and rankings") {
    TempDir dir("index");
    const Fixture fx(30);
    fx.index->save(dir.file("index.bin").string());
    const PastFutureIndex loaded =
        PastFutureIndex::load(dir.file("index.bin").string(), *fx.encoder);
    REQUIRE(loaded.entries().size() == fx.index->entries().size());
    const Encoding query = fx.encoder->encode(fx.corpus.conversations[3].utterances);
    const auto a = fx.index->knn(query, 12);
    const auto b = loaded.knn(query, 12);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].entry->pair.source_id == b[i].entry->pair.source_id);
        CHECK(a[i].entry->pair.split_index == b[i].entry->pair.split_index);
        CHECK(a[i].similarity == doctest::Approx(b[i].similarity).epsilon(1e-12));
    }
}

namespace {

IndexEntry make_entry(std::string id, std::size_t split, std::vector<std::string> future_texts) {
    IndexEntry entry;
    entry.pair.source_id = std::move(id);
    entry.pair.split_index = split;
    for (std::size_t i = 0; i < future_texts.size(); ++i) {
        entry.pair.future.push_back(make_utterance(
            i % 2 == 0 ? Speaker::System : Speaker::User, future_texts[i]));
    }
    return entry;
}

}  // namespace

TEST_CASE("select_future maximizes control-word count, then similarity, then id") {
    const ControlWordSet w = make_control_word_set({"alpha", "beta", "gamma"});
    const IndexEntry two_low = make_entry("a", 0, {"alpha waits", "x", "beta arrives"});
    const IndexEntry one_high = make_entry("b", 1, {"alpha only"});
    const IndexEntry two_high = make_entry("c", 2, {"gamma first", "y", "beta later"});

    std::vector<Neighbor> neighbors = {{&one_high, 0.99}, {&two_low, 0.50}, {&two_high, 0.70}};
    const RetrievalResult result = select_future(neighbors, w);
    CHECK(result.selected_pair == &two_high.pair);  // count 2 beats count 1; sim 0.70 beats 0.50
    CHECK(result.control_count == 2);
    CHECK(result.similarity == 0.70);
    CHECK(result.reference_response.text == "gamma first");

    SUBCASE("similarity tie falls back to source id then split") {
        const IndexEntry twin = make_entry("a", 9, {"gamma also", "z", "beta too"});
        std::vector<Neighbor> tied = {{&two_high, 0.70}, {&twin, 0.70}};
        CHECK(select_future(tied, w).selected_pair == &twin.pair);  // id "a" < "c"
        const IndexEntry sibling = make_entry("a", 2, {"beta gamma"});
        std::vector<Neighbor> split_tie = {{&twin, 0.70}, {&sibling, 0.70}};
        CHECK(select_future(split_tie, w).selected_pair == &sibling.pair);  // split 2 < 9
    }

    SUBCASE("count spans the whole future but the reference is its first system turn") {
        const IndexEntry user_heavy = make_entry("u", 0, {"nothing here", "alpha beta gamma"});
        std::vector<Neighbor> mixed = {{&user_heavy, 0.1}, {&one_high, 0.9}};
        const RetrievalResult picked = select_future(mixed, w);
        CHECK(picked.selected_pair == &user_heavy.pair);
        CHECK(picked.control_count == 3);
        CHECK(picked.reference_response.text == "nothing here");
    }

    SUBCASE("empty neighbor list is an error") {
        std::vector<Neighbor> none;
        CHECK_THROWS_AS(select_future(none, w), std::invalid_argument);
    }
}

TEST_CASE("retrieve-then-copy returns the continuation of the best matching past") {
    const Fixture fx(50);
    // Use a training conversation's own past as the query: its stored encoding
    // matches exactly, and W drawn from its future forces its own selection.
    const Conversation& conv = fx.corpus.conversations[7];
    const auto pairs = split_past_future(conv);
    REQUIRE(pairs.size() >= 2);
    const auto& pair = pairs[1];

    std::vector<std::string> future_words;
    for (const auto& utterance : pair.future)
        if (utterance.speaker == Speaker::System)
            for (const auto& token : utterance.tokens) future_words.push_back(token);
    REQUIRE(future_words.size() >= 4);
    const ControlWordSet w = make_control_word_set(
        {future_words[0], future_words[1], future_words[2], future_words[3]});

    const Utterance response = fop_retrieval_respond(pair.past, w, *fx.index, 25);
    CHECK(response.speaker == Speaker::System);
    CHECK(response.text == pair.future.front().text);
}

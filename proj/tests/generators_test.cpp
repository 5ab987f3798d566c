#include <doctest.h>

#include <algorithm>
#include <memory>
#include <string>
#include <vector>

#include "fop/encoder.hpp"
#include "fop/generators.hpp"
#include "fop/ngram.hpp"
#include "fop/retrieval.hpp"
#include "fop/synthetic.hpp"
#include "fop/text.hpp"
#include "test_util.hpp"

using namespace fop;
using namespace fop::testing;

namespace {

struct Fixture {
    Corpus corpus;
    EmbeddingTable table;
    NgramModel lm;
    std::unique_ptr<BagOfEmbeddingsEncoder> encoder;
    std::unique_ptr<PastFutureIndex> index;
    DecoderConfig cfg = DecoderConfig::profile("synthetic");

    Fixture()
        : corpus([] {
              Rng rng(13);
              return generate_synthetic_corpus(5, 80, rng);
          }()),
          table(synthetic_embeddings(10)),
          lm(train_ngram(corpus, 3, Speaker::System)) {
        encoder = std::make_unique<BagOfEmbeddingsEncoder>(table, corpus);
        index = std::make_unique<PastFutureIndex>(PastFutureIndex::build(corpus, *encoder));
    }

    GeneratorResources resources() const { return {&lm, &table, index.get()}; }

    std::vector<Utterance> context() const {
        // Prefix of a held-in conversation through its first user utterance.
        const auto& utterances = corpus.conversations[2].utterances;
        std::size_t take = 0;
        while (take < utterances.size() && utterances[take].speaker != Speaker::User) ++take;
        return std::vector<Utterance>(utterances.begin(), utterances.begin() + take + 1);
    }

    std::string slot_word(std::size_t flow, std::size_t slot, std::size_t value) const {
        return synthetic_slot_value(flow, slot, value);
    }

    // First value of the slot that made it into the LM vocabulary; boosting
    // can only surface words the model can emit.
    std::string vocab_slot_word(std::size_t flow, std::size_t slot) const {
        for (std::size_t value = 0; value < kSyntheticSlotValues; ++value) {
            const std::string word = synthetic_slot_value(flow, slot, value);
            if (lm.vocabulary().id(word) != Vocabulary::kUnk) return word;
        }
        return synthetic_slot_value(flow, slot, 0);
    }
};

}  // namespace

TEST_CASE("method names round-trip") {
    CHECK(all_methods().size() == 8);
    for (Method method : all_methods()) {
        CHECK(parse_method(method_name(method)) == method);
    }
    CHECK(parse_method("fop_guided") == Method::FopGuided);
    CHECK_THROWS_AS(parse_method("unheard_of"), std::invalid_argument);
}

TEST_CASE("w_first dumps every control word once, then stays silent") {
    const ControlWordSet w = make_control_word_set({"gamma", "alpha", "beta"});
    GeneratorSession session;
    const Utterance first = baseline_w_first(w, session);
    CHECK(first.text == "gamma alpha beta");  // given order, not sorted
    CHECK(session.w_first_fired);
    const Utterance second = baseline_w_first(w, session);
    CHECK(second.tokens.empty());
    CHECK(second.text.empty());
}

TEST_CASE("plain sampling is seed-deterministic") {
    const Fixture fx;
    const auto context = fx.context();
    Rng a(21), b(21), c(22);
    const Utterance ua = baseline_plain(context, fx.lm, fx.cfg, a);
    const Utterance ub = baseline_plain(context, fx.lm, fx.cfg, b);
    const Utterance uc = baseline_plain(context, fx.lm, fx.cfg, c);
    CHECK(ua.text == ub.text);
    CHECK(!ua.tokens.empty());
    CHECK(ua.text != uc.text);  // a different stream almost surely diverges
}

TEST_CASE("prompt baseline degenerates to plain on empty W and shifts the start otherwise") {
    // Order-4 model: a control word two slots before <sys> still sits inside
    // the context window when the dialogue context is empty.
    std::vector<Conversation> conversations;
    for (int i = 0; i < 3; ++i)
        conversations.push_back(make_conversation(
            "l" + std::to_string(i), {{Speaker::User, "ask left"}, {Speaker::System, "right away"}}));
    for (int i = 0; i < 5; ++i)
        conversations.push_back(make_conversation(
            "b" + std::to_string(i),
            {{Speaker::User, "ask other"}, {Speaker::System, "balanced thing"}}));
    const Corpus corpus = make_corpus(std::move(conversations));
    const NgramModel lm = train_ngram(corpus, 4);
    DecoderConfig cfg;
    cfg.top_k = 1;  // deterministic argmax sampling
    cfg.max_tokens = 4;

    const ControlWordSet empty_w = make_control_word_set({});
    Rng a(5), b(5);
    CHECK(baseline_prompt({}, empty_w, lm, cfg, a).text == baseline_plain({}, lm, cfg, b).text);

    const ControlWordSet left = make_control_word_set({"left"});
    Rng c(5), d(5);
    const Utterance prompted = baseline_prompt({}, left, lm, cfg, c);
    const Utterance plain = baseline_plain({}, lm, cfg, d);
    CHECK(plain.tokens.front() == "balanced");
    CHECK(prompted.tokens.front() == "right");
}

TEST_CASE("directed beam baseline") {
    const Fixture fx;
    const auto context = fx.context();
    BoostCache cache(fx.lm.vocabulary(), fx.table, false);

    SUBCASE("beam width 1 with a huge boost emits the first control word immediately") {
        DecoderConfig cfg = fx.cfg;
        cfg.beam_width = 1;
        cfg.lambda = 50.0;
        const ControlWordSet w = make_control_word_set({fx.vocab_slot_word(0, 4)});
        GeneratorSession session;
        Rng rng(1);
        const Utterance response = baseline_dbs(context, w, cfg, fx.lm, cache, session, rng);
        REQUIRE(!response.tokens.empty());
        CHECK(response.tokens.front() == w.words[0]);
        CHECK(session.dbs_done.count(0) == 1);
    }

    SUBCASE("control word order is honored, so reversing it changes the output") {
        DecoderConfig cfg = fx.cfg;
        cfg.beam_width = 1;
        cfg.lambda = 50.0;
        const std::string first = fx.slot_word(1, 0, 3);
        const std::string second = fx.slot_word(1, 1, 8);
        GeneratorSession forward_session, reverse_session;
        Rng r1(1), r2(1);
        const Utterance forward = baseline_dbs(
            context, make_control_word_set({first, second}), cfg, fx.lm, cache,
            forward_session, r1);
        const Utterance reverse = baseline_dbs(
            context, make_control_word_set({second, first}), cfg, fx.lm, cache,
            reverse_session, r2);
        REQUIRE(!forward.tokens.empty());
        REQUIRE(!reverse.tokens.empty());
        CHECK(forward.tokens.front() == first);
        CHECK(reverse.tokens.front() == second);
        CHECK(forward.text != reverse.text);
    }

    SUBCASE("with every control word done it reduces to plain beam search") {
        DecoderConfig cfg = fx.cfg;
        cfg.beam_width = 4;
        const ControlWordSet w = make_control_word_set(
            {fx.slot_word(2, 0, 0), fx.slot_word(2, 1, 1)});
        GeneratorSession done_session;
        done_session.dbs_done = {0, 1};
        Rng r1(1);
        const Utterance done = baseline_dbs(context, w, cfg, fx.lm, cache, done_session, r1);

        // An out-of-vocabulary control word has no embedding, so its boost
        // profile is identically zero: the beam is unconstrained.
        const ControlWordSet inert = make_control_word_set({"zzzzqqq"});
        GeneratorSession inert_session;
        Rng r2(1);
        const Utterance unboosted =
            baseline_dbs(context, inert, cfg, fx.lm, cache, inert_session, r2);
        CHECK(done.text == unboosted.text);
        CHECK(done_session.dbs_done == std::unordered_set<std::size_t>{0, 1});
    }

    SUBCASE("the whole response is deterministic") {
        GeneratorSession s1, s2;
        Rng r1(1), r2(99);  // rng is unused by the beam
        const ControlWordSet w = make_control_word_set({fx.slot_word(0, 0, 5)});
        const Utterance a = baseline_dbs(context, w, fx.cfg, fx.lm, cache, s1, r1);
        const Utterance b = baseline_dbs(context, w, fx.cfg, fx.lm, cache, s2, r2);
        CHECK(a.text == b.text);
    }
}

TEST_CASE("edit-sampler baseline keeps every control word in order") {
    const Fixture fx;
    const auto context = fx.context();
    const ControlWordSet w = make_control_word_set(
        {fx.slot_word(0, 0, 1), fx.slot_word(0, 2, 7), fx.slot_word(0, 5, 4)});
    Rng rng(31);
    const Utterance response = baseline_cgmh(context, w, fx.lm, fx.cfg, rng, 60);
    REQUIRE(!response.tokens.empty());
    // W must survive as a subsequence: locked tokens are never edited.
    std::size_t cursor = 0;
    for (const auto& token : response.tokens) {
        if (cursor < w.words.size() && token == w.words[cursor]) ++cursor;
    }
    CHECK(cursor == w.words.size());

    Rng again(31);
    CHECK(baseline_cgmh(context, w, fx.lm, fx.cfg, again, 60).text == response.text);

    // Zero edit steps leave the locked initialization untouched.
    Rng zero(31);
    CHECK(baseline_cgmh(context, w, fx.lm, fx.cfg, zero, 0).text ==
          join_tokens(w.words));
}

TEST_CASE("guided decoding with lambda 0 and one candidate equals plain sampling") {
    const Fixture fx;
    const auto context = fx.context();
    DecoderConfig cfg = fx.cfg;
    cfg.lambda = 0.0;
    cfg.candidates = 1;
    const ControlWordSet w = make_control_word_set({fx.slot_word(2, 3, 9)});
    BoostCache cache(fx.lm.vocabulary(), fx.table, false);

    Rng guided_rng(77), plain_rng(77);
    const Utterance guided =
        fop_guided_respond(context, w, *fx.index, cfg, fx.lm, cache, guided_rng);
    const Utterance plain = baseline_plain(context, fx.lm, cfg, plain_rng);
    CHECK(guided.text == plain.text);
    CHECK(guided.tokens == plain.tokens);
}

TEST_CASE("guided decoding boosts its retrieved reference into the output") {
    const Fixture fx;
    const auto context = fx.context();
    DecoderConfig cfg = fx.cfg;
    cfg.lambda = 40.0;  // strong pull toward the reference words
    const Utterance reference = fop_retrieval_respond(context, {}, *fx.index, cfg.retrieval_k);
    REQUIRE(!reference.tokens.empty());

    BoostCache cache(fx.lm.vocabulary(), fx.table, false);
    const ControlWordSet w = make_control_word_set({reference.tokens.front()});
    Rng rng(3);
    const Utterance guided = fop_guided_respond(context, w, *fx.index, cfg, fx.lm, cache, rng);
    CHECK(std::find(guided.tokens.begin(), guided.tokens.end(), w.words[0]) !=
          guided.tokens.end());
}

TEST_CASE("make_generator validates resources and dispatches") {
    const Fixture fx;
    const GeneratorResources all = fx.resources();
    const GeneratorResources none;

    CHECK(make_generator(Method::WFirst, fx.cfg, none) != nullptr);
    CHECK_THROWS_AS(make_generator(Method::Plain, fx.cfg, none), std::invalid_argument);
    CHECK_THROWS_AS(make_generator(Method::FopGuided, fx.cfg,
                                   GeneratorResources{&fx.lm, &fx.table, nullptr}),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_generator(Method::Dbs, fx.cfg,
                                   GeneratorResources{&fx.lm, nullptr, nullptr}),
                    std::invalid_argument);

    const auto context = fx.context();
    const ControlWordSet w = make_control_word_set({fx.slot_word(2, 0, 4)});

    SUBCASE("the retrieval generator matches the free function") {
        const auto generator = make_generator(Method::FopRetrieval, fx.cfg, all);
        GeneratorSession session;
        Rng rng(8);
        const Utterance via_generator = generator->respond(context, w, session, rng);
        const Utterance direct = fop_retrieval_respond(context, w, *fx.index, fx.cfg.retrieval_k);
        CHECK(via_generator.text == direct.text);
    }

    SUBCASE("the plain generator matches the free function") {
        const auto generator = make_generator(Method::Plain, fx.cfg, all);
        GeneratorSession session;
        Rng r1(9), r2(9);
        CHECK(generator->respond(context, w, session, r1).text ==
              baseline_plain(context, fx.lm, fx.cfg, r2).text);
    }

    SUBCASE("the no-window variant forces q to 1") {
        const auto generator = make_generator(Method::FopGuidedNoWindow, fx.cfg, all);
        GeneratorSession session;
        Rng rng(10);
        const Utterance response = generator->respond(context, w, session, rng);
        CHECK(!response.tokens.empty());

        DecoderConfig narrow = fx.cfg;
        narrow.window = 1;
        BoostCache cache(fx.lm.vocabulary(), fx.table, false);
        Rng same(10);
        const Utterance direct =
            fop_guided_respond(context, w, *fx.index, narrow, fx.lm, cache, same);
        CHECK(response.text == direct.text);
    }
}

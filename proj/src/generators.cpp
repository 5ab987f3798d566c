#include "fop/generators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fop/stemmer.hpp"
#include "fop/text.hpp"

namespace fop {

namespace {

constexpr std::array<Method, 8> kAllMethods = {
    Method::WFirst,       Method::Plain,     Method::Prompt,    Method::Dbs,
    Method::Cgmh,         Method::FopRetrieval, Method::FopGuided, Method::FopGuidedNoWindow,
};

Utterance system_utterance(const std::vector<std::string>& tokens) {
    return make_utterance(Speaker::System, join_tokens(tokens));
}

std::vector<std::string> tokens_from_ids(std::span<const TokenId> ids,
                                         const Vocabulary& vocabulary) {
    std::vector<std::string> tokens;
    tokens.reserve(ids.size());
    for (TokenId id : ids) tokens.push_back(vocabulary.token(id));
    return tokens;
}

double logsumexp(std::span<const double> values) {
    const double max_value = *std::max_element(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += std::exp(v - max_value);
    return max_value + std::log(sum);
}

}  // namespace

std::string_view method_name(Method method) {
    switch (method) {
        case Method::WFirst: return "w_first";
        case Method::Plain: return "plain";
        case Method::Prompt: return "prompt";
        case Method::Dbs: return "dbs";
        case Method::Cgmh: return "cgmh";
        case Method::FopRetrieval: return "fop_retrieval";
        case Method::FopGuided: return "fop_guided";
        case Method::FopGuidedNoWindow: return "fop_guided_no_window";
    }
    throw std::logic_error("unreachable method");
}

Method parse_method(std::string_view name) {
    for (Method method : kAllMethods) {
        if (method_name(method) == name) return method;
    }
    throw std::invalid_argument("unknown method: " + std::string(name));
}

std::span<const Method> all_methods() { return kAllMethods; }

Utterance baseline_w_first(const ControlWordSet& w, GeneratorSession& session) {
    if (session.w_first_fired) return make_utterance(Speaker::System, "");
    session.w_first_fired = true;
    return make_utterance(Speaker::System, join_tokens(w.words));
}

Utterance baseline_plain(std::span<const Utterance> context, const LanguageModel& lm,
                         const DecoderConfig& cfg, Rng& rng) {
    const std::vector<TokenId> prompt =
        generation_prompt(context, lm.vocabulary(), Speaker::System);
    Rng child = spawn_child(rng);
    const std::vector<TokenId> generated =
        sample_response_tokens(prompt, lm, cfg, nullptr, nullptr, child);
    return system_utterance(tokens_from_ids(generated, lm.vocabulary()));
}

Utterance baseline_prompt(std::span<const Utterance> context, const ControlWordSet& w,
                          const LanguageModel& lm, const DecoderConfig& cfg, Rng& rng) {
    const Vocabulary& vocabulary = lm.vocabulary();
    std::vector<TokenId> prompt;
    if (!w.words.empty()) {
        for (const std::string& word : w.words) prompt.push_back(vocabulary.id(word));
        prompt.push_back(Vocabulary::kEou);
    }
    const std::vector<TokenId> context_ids =
        generation_prompt(context, vocabulary, Speaker::System);
    prompt.insert(prompt.end(), context_ids.begin(), context_ids.end());

    Rng child = spawn_child(rng);
    const std::vector<TokenId> generated =
        sample_response_tokens(prompt, lm, cfg, nullptr, nullptr, child);
    return system_utterance(tokens_from_ids(generated, lm.vocabulary()));
}

Utterance baseline_dbs(std::span<const Utterance> context, const ControlWordSet& w,
                       const DecoderConfig& cfg, const LanguageModel& lm, BoostCache& cache,
                       GeneratorSession& session, Rng& rng) {
    (void)rng;
    const Vocabulary& vocabulary = lm.vocabulary();
    const std::vector<TokenId> prompt =
        generation_prompt(context, vocabulary, Speaker::System);

    // Control words still to produce, in the given order.
    std::vector<std::size_t> targets;
    for (std::size_t i = 0; i < w.words.size(); ++i) {
        if (session.dbs_done.count(i) == 0) targets.push_back(i);
    }

    struct Beam {
        std::vector<TokenId> tokens;
        double logprob = 0.0;
        std::size_t matched = 0;
        bool done = false;
    };
    struct PoolEntry {
        Beam beam;
        std::size_t sequence = 0;
    };
    auto pool_before = [](const PoolEntry& a, const PoolEntry& b) {
        if (a.beam.matched != b.beam.matched) return a.beam.matched > b.beam.matched;
        if (a.beam.logprob != b.beam.logprob) return a.beam.logprob > b.beam.logprob;
        return a.sequence < b.sequence;
    };

    std::vector<Beam> beams(1);
    for (std::size_t step = 0; step < cfg.max_tokens; ++step) {
        if (std::all_of(beams.begin(), beams.end(), [](const Beam& b) { return b.done; })) break;

        std::vector<PoolEntry> pool;
        std::size_t sequence = 0;
        for (Beam& beam : beams) {
            if (beam.done) {
                pool.push_back({std::move(beam), sequence++});
                continue;
            }
            std::vector<TokenId> full = prompt;
            full.insert(full.end(), beam.tokens.begin(), beam.tokens.end());
            const LogitVector logits = lm.next_logits(full);
            const double lse = logsumexp(logits.values);

            std::vector<double> boosted = logits.values;
            const std::string* target_word = nullptr;
            const std::string* target_stem = nullptr;
            if (beam.matched < targets.size()) {
                target_word = &w.words[targets[beam.matched]];
                target_stem = &w.stems[targets[beam.matched]];
                const std::vector<double>& profile = cache.profile(*target_word);
                for (std::size_t i = 0; i < boosted.size(); ++i) {
                    boosted[i] += cfg.lambda * profile[i];
                }
            }
            boosted[Vocabulary::kUnk] = -std::numeric_limits<double>::infinity();
            boosted[Vocabulary::kSys] = -std::numeric_limits<double>::infinity();
            boosted[Vocabulary::kUsr] = -std::numeric_limits<double>::infinity();
            if (beam.tokens.empty()) {
                boosted[Vocabulary::kEou] = -std::numeric_limits<double>::infinity();
            }

            std::vector<TokenId> order(boosted.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<TokenId>(i);
            const std::size_t expansions = std::min(cfg.beam_width, order.size());
            std::partial_sort(order.begin(), order.begin() + static_cast<long>(expansions),
                              order.end(), [&](TokenId a, TokenId b) {
                                  if (boosted[a] != boosted[b]) return boosted[a] > boosted[b];
                                  return a < b;
                              });
            for (std::size_t e = 0; e < expansions; ++e) {
                const TokenId token = order[e];
                if (std::isinf(boosted[token])) break;
                Beam next = beam;
                next.logprob += logits.values[token] - lse;
                if (token == Vocabulary::kEou) {
                    next.done = true;
                } else {
                    next.tokens.push_back(token);
                    if (target_stem != nullptr &&
                        porter_stem(vocabulary.token(token)) == *target_stem) {
                        ++next.matched;
                    }
                }
                pool.push_back({std::move(next), sequence++});
            }
        }

        std::sort(pool.begin(), pool.end(), pool_before);
        if (pool.size() > cfg.beam_width) pool.resize(cfg.beam_width);
        beams.clear();
        for (PoolEntry& entry : pool) beams.push_back(std::move(entry.beam));
    }

    const Beam* winner = &beams.front();
    for (const Beam& beam : beams) {
        if (beam.matched > winner->matched ||
            (beam.matched == winner->matched && beam.logprob > winner->logprob)) {
            winner = &beam;
        }
    }
    for (std::size_t i = 0; i < winner->matched && i < targets.size(); ++i) {
        session.dbs_done.insert(targets[i]);
    }
    return system_utterance(tokens_from_ids(winner->tokens, vocabulary));
}

Utterance baseline_cgmh(std::span<const Utterance> context, const ControlWordSet& w,
                        const LanguageModel& lm, const DecoderConfig& cfg, Rng& rng,
                        std::size_t steps) {
    const Vocabulary& vocabulary = lm.vocabulary();
    const std::vector<TokenId> prompt =
        generation_prompt(context, vocabulary, Speaker::System);

    struct Sentence {
        std::vector<TokenId> ids;
        std::vector<std::string> words;
        std::vector<char> locked;
    };
    Sentence sentence;
    for (const std::string& word : w.words) {
        sentence.ids.push_back(vocabulary.id(word));
        sentence.words.push_back(word);
        sentence.locked.push_back(1);
    }

    auto sentence_logprob = [&](const std::vector<TokenId>& ids) {
        std::vector<TokenId> full = prompt;
        double total = 0.0;
        for (TokenId id : ids) {
            total += lm.token_logprob(full, id);
            full.push_back(id);
        }
        return total;
    };

    const std::vector<TokenId> banned = {Vocabulary::kUnk, Vocabulary::kEou, Vocabulary::kSys,
                                         Vocabulary::kUsr};
    auto propose_token = [&](std::size_t left_length, Rng& r) {
        std::vector<TokenId> full = prompt;
        full.insert(full.end(), sentence.ids.begin(),
                    sentence.ids.begin() + static_cast<long>(left_length));
        const LogitVector logits = lm.next_logits(full);
        return sample_from_logits(logits.values, 1.0, 0, r, banned);
    };

    Rng child = spawn_child(rng);
    double current_logprob = sentence_logprob(sentence.ids);
    for (std::size_t step = 0; step < steps; ++step) {
        const std::size_t action = uniform_index(child, 3);
        Sentence proposal = sentence;
        if (action == 0) {
            // Insert before a slot in [0, len]; skipped at the length cap.
            const std::size_t slot = uniform_index(child, sentence.ids.size() + 1);
            if (sentence.ids.size() >= cfg.max_tokens) continue;
            const TokenId token = propose_token(slot, child);
            proposal.ids.insert(proposal.ids.begin() + static_cast<long>(slot), token);
            proposal.words.insert(proposal.words.begin() + static_cast<long>(slot),
                                  vocabulary.token(token));
            proposal.locked.insert(proposal.locked.begin() + static_cast<long>(slot), 0);
        } else if (sentence.ids.empty()) {
            continue;
        } else if (action == 1) {
            const std::size_t position = uniform_index(child, sentence.ids.size());
            if (sentence.locked[position]) continue;
            proposal.ids.erase(proposal.ids.begin() + static_cast<long>(position));
            proposal.words.erase(proposal.words.begin() + static_cast<long>(position));
            proposal.locked.erase(proposal.locked.begin() + static_cast<long>(position));
        } else {
            const std::size_t position = uniform_index(child, sentence.ids.size());
            if (sentence.locked[position]) continue;
            const TokenId token = propose_token(position, child);
            proposal.ids[position] = token;
            proposal.words[position] = vocabulary.token(token);
        }

        const double proposal_logprob = sentence_logprob(proposal.ids);
        const double u = uniform01(child);
        if (std::log(u) < proposal_logprob - current_logprob) {
            sentence = std::move(proposal);
            current_logprob = proposal_logprob;
        }
    }
    return make_utterance(Speaker::System, join_tokens(sentence.words));
}

Utterance fop_guided_respond(std::span<const Utterance> context, const ControlWordSet& w,
                             const PastFutureIndex& index, const DecoderConfig& cfg,
                             const LanguageModel& lm, BoostCache& cache, Rng& rng) {
    const Utterance reference = fop_retrieval_respond(context, w, index, cfg.retrieval_k);
    std::vector<GenerationCandidate> candidates;
    candidates.reserve(cfg.candidates);
    for (std::size_t n = 0; n < cfg.candidates; ++n) {
        Rng child = spawn_child(rng);
        candidates.push_back(generate_candidate(context, reference, w, cfg, lm, cache, child));
    }
    return make_utterance(Speaker::System, rerank(candidates).text);
}

namespace {

class MethodGenerator final : public Generator {
public:
    MethodGenerator(Method method, DecoderConfig cfg, GeneratorResources resources)
        : method_(method), cfg_(cfg), resources_(resources) {
        if (method == Method::FopGuidedNoWindow) cfg_.window = 1;
    }

    std::string_view name() const override { return method_name(method_); }

    Utterance respond(std::span<const Utterance> context, const ControlWordSet& w,
                      GeneratorSession& session, Rng& rng) const override {
        switch (method_) {
            case Method::WFirst:
                return baseline_w_first(w, session);
            case Method::Plain:
                return baseline_plain(context, *resources_.lm, cfg_, rng);
            case Method::Prompt:
                return baseline_prompt(context, w, *resources_.lm, cfg_, rng);
            case Method::Dbs:
                return baseline_dbs(context, w, cfg_, *resources_.lm, boost_cache(session),
                                    session, rng);
            case Method::Cgmh:
                return baseline_cgmh(context, w, *resources_.lm, cfg_, rng, cfg_.edit_steps);
            case Method::FopRetrieval:
                return fop_retrieval_respond(context, w, *resources_.index, cfg_.retrieval_k);
            case Method::FopGuided:
            case Method::FopGuidedNoWindow:
                return fop_guided_respond(context, w, *resources_.index, cfg_, *resources_.lm,
                                          boost_cache(session), rng);
        }
        throw std::logic_error("unreachable method");
    }

private:
    BoostCache& boost_cache(GeneratorSession& session) const {
        if (!session.boost_cache) {
            session.boost_cache = std::make_unique<BoostCache>(
                resources_.lm->vocabulary(), *resources_.table, cfg_.boost_dissimilar,
                cfg_.similar_expansion);
        }
        return *session.boost_cache;
    }

    Method method_;
    DecoderConfig cfg_;
    GeneratorResources resources_;
};

}  // namespace

std::unique_ptr<Generator> make_generator(Method method, const DecoderConfig& cfg,
                                          const GeneratorResources& resources) {
    const bool needs_lm = method != Method::WFirst && method != Method::FopRetrieval;
    const bool needs_table =
        method == Method::Dbs || method == Method::FopGuided || method == Method::FopGuidedNoWindow;
    const bool needs_index = method == Method::FopRetrieval || method == Method::FopGuided ||
                             method == Method::FopGuidedNoWindow;
    if (needs_lm && resources.lm == nullptr) {
        throw std::invalid_argument(std::string(method_name(method)) +
                                    " requires a language model");
    }
    if (needs_table && resources.table == nullptr) {
        throw std::invalid_argument(std::string(method_name(method)) +
                                    " requires an embedding table");
    }
    if (needs_index && resources.index == nullptr) {
        throw std::invalid_argument(std::string(method_name(method)) +
                                    " requires a retrieval index");
    }
    return std::make_unique<MethodGenerator>(method, cfg, resources);
}

}  // namespace fop

#pragma once

#include <memory>
#include <span>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "fop/corpus.hpp"
#include "fop/decode.hpp"
#include "fop/embeddings.hpp"
#include "fop/lm.hpp"
#include "fop/random.hpp"
#include "fop/retrieval.hpp"

namespace fop {

enum class Method {
    WFirst,
    Plain,
    Prompt,
    Dbs,
    Cgmh,
    FopRetrieval,
    FopGuided,
    FopGuidedNoWindow,
};

std::string_view method_name(Method method);
Method parse_method(std::string_view name);
std::span<const Method> all_methods();

// Per-rollout mutable state owned by the caller. Generators themselves stay
// stateless between calls.
struct GeneratorSession {
    // First-turn flag for the dump-everything-up-front baseline.
    bool w_first_fired = false;
    // Control-word indices already produced by the guided beam baseline.
    std::unordered_set<std::size_t> dbs_done;
    // Lazily built per-word boost profiles, reused across turns.
    std::unique_ptr<BoostCache> boost_cache;
};

class Generator {
public:
    virtual ~Generator() = default;

    virtual std::string_view name() const = 0;
    virtual Utterance respond(std::span<const Utterance> context, const ControlWordSet& w,
                              GeneratorSession& session, Rng& rng) const = 0;
};

struct GeneratorResources {
    const LanguageModel* lm = nullptr;
    const EmbeddingTable* table = nullptr;
    const PastFutureIndex* index = nullptr;
};

// Validates that the method's required resources are present.
std::unique_ptr<Generator> make_generator(Method method, const DecoderConfig& cfg,
                                          const GeneratorResources& resources);

// All control words joined in order on the session's first call, the empty
// utterance afterwards.
Utterance baseline_w_first(const ControlWordSet& w, GeneratorSession& session);

// Unconstrained sampling from the model.
Utterance baseline_plain(std::span<const Utterance> context, const LanguageModel& lm,
                         const DecoderConfig& cfg, Rng& rng);

// Plain sampling with the control words (plus an utterance separator)
// prepended to the context; empty W degenerates to baseline_plain.
Utterance baseline_prompt(std::span<const Utterance> context, const ControlWordSet& w,
                          const LanguageModel& lm, const DecoderConfig& cfg, Rng& rng);

// Deterministic beam search boosted toward the first not-yet-produced control
// word (no window, no decay); produced words persist in the session. The rng
// parameter is unused and kept for interface uniformity.
Utterance baseline_dbs(std::span<const Utterance> context, const ControlWordSet& w,
                       const DecoderConfig& cfg, const LanguageModel& lm, BoostCache& cache,
                       GeneratorSession& session, Rng& rng);

// Metropolis-Hastings word editing (insert/delete/replace) starting from the
// joined control words, which stay immutable; acceptance ratio is the
// model's sentence probability given the context.
Utterance baseline_cgmh(std::span<const Utterance> context, const ControlWordSet& w,
                        const LanguageModel& lm, const DecoderConfig& cfg, Rng& rng,
                        std::size_t steps);

// Retrieve the reference response, sample N guided candidates on independent
// rng streams, and rerank. Only this method reranks.
Utterance fop_guided_respond(std::span<const Utterance> context, const ControlWordSet& w,
                             const PastFutureIndex& index, const DecoderConfig& cfg,
                             const LanguageModel& lm, BoostCache& cache, Rng& rng);

}  // namespace fop

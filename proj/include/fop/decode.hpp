#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fop/corpus.hpp"
#include "fop/embeddings.hpp"
#include "fop/lm.hpp"
#include "fop/random.hpp"

namespace fop {

struct DecoderConfig {
    // Boost strength λ applied to (windowed) reference-word similarity.
    double lambda = 15.0;
    // Sliding window size q; 1 disables lookahead (no-window ablation).
    std::size_t window = 4;
    // Candidate generations N fed to reranking.
    std::size_t candidates = 10;
    std::size_t max_tokens = 24;
    // Sampling truncation; 0 keeps the full distribution.
    std::size_t top_k = 40;
    double temperature = 1.0;
    // Extra embedding-neighbors per reference word that receive the full
    // (cos = 1) contribution; 0 leaves the continuous formula alone.
    std::size_t similar_expansion = 0;
    // Audit flag: reproduces the printed min(0,cos)² variant, which boosts
    // only dissimilar tokens. Off by default; kept for comparison runs.
    bool boost_dissimilar = false;
    // Deterministic beam-search width for the guided beam baseline.
    std::size_t beam_width = 4;
    // Metropolis-Hastings edit steps for the edit-sampler baseline.
    std::size_t edit_steps = 100;
    std::size_t retrieval_k = 10;

    // Named presets: "abcd" / "multiwoz" (λ=15), "taskmaster" (λ=10), and
    // "synthetic" tuned on the shipped synthetic corpus.
    static DecoderConfig profile(std::string_view name);
};

// Sliding window over the reference response driving guided decoding.
struct WindowState {
    std::vector<std::string> reference_words;
    std::vector<std::string> reference_stems;
    std::size_t cursor = 0;
    std::size_t q = 4;

    static WindowState from_reference(const Utterance& reference, std::size_t q);

    bool exhausted() const { return cursor >= reference_words.size(); }
    // Words at offsets [0, q) from the cursor, clipped at the end.
    std::size_t active_size() const;
    // Stem-match against the active window; on a match at offset o the window
    // restarts after the matched word (cursor += o + 1), smallest o first.
    void advance(std::string_view generated_token);
};

WindowState advance_window(WindowState window, std::string_view generated_token);

// Per-word boost profiles over the vocabulary: clipped squared cosine of
// every vocabulary token to a reference word, with the word itself forced to
// cosine 1 and tokens lacking embeddings at 0. Profiles are cached per word.
class BoostCache {
public:
    BoostCache(const Vocabulary& vocabulary, const EmbeddingTable& table,
               bool boost_dissimilar, std::size_t similar_expansion = 0);

    const std::vector<double>& profile(const std::string& word);
    const Vocabulary& vocabulary() const { return *vocabulary_; }

private:
    const Vocabulary* vocabulary_;
    const EmbeddingTable* table_;
    bool boost_dissimilar_;
    std::size_t similar_expansion_;
    std::unordered_map<std::string, std::vector<double>> profiles_;
};

// l'_i = l_i + max over active window words w_j at offset o_j of
//        λ · 2^(−o_j) · clip(cos(γ(t_i), γ(w_j)))²
// where clip = max(0,·) normally, min(0,·) under the audit flag.
void boost_logits_inplace(LogitVector& logits, const WindowState& window, BoostCache& cache,
                          double lambda);
LogitVector boost_logits(const LogitVector& logits, const WindowState& window,
                         const Vocabulary& vocabulary, const EmbeddingTable& table,
                         double lambda, bool boost_dissimilar = false);

// Temperature scaling, then top-k truncation (ties keep the lower index),
// then one categorical draw. Banned ids never come out.
TokenId sample_from_logits(std::span<const double> logits, double temperature, std::size_t top_k,
                           Rng& rng, std::span<const TokenId> banned);

struct GenerationCandidate {
    std::vector<std::string> tokens;
    std::string text;
    std::size_t control_count = 0;
    // Mean per-token NLL of the tokens under the unmodified model.
    double loss = 0.0;
};

// The sampling loop every stochastic generator runs: boost (when window and
// cache are given) → temperature/top-k → one draw per step, stopping at <eou>
// (banned on the first step) or max_tokens. Returns word ids without <eou>.
// Null window/cache means plain sampling with identical rng consumption.
std::vector<TokenId> sample_response_tokens(std::span<const TokenId> prompt,
                                            const LanguageModel& lm, const DecoderConfig& cfg,
                                            WindowState* window, BoostCache* cache, Rng& rng);

// Samples one response: boost → temperature/top-k → sample → window advance,
// until <eou> (banned at the first step) or max_tokens.
GenerationCandidate generate_candidate(std::span<const Utterance> context,
                                       const Utterance& reference, const ControlWordSet& w,
                                       const DecoderConfig& cfg, const LanguageModel& lm,
                                       BoostCache& cache, Rng& rng);
GenerationCandidate generate_candidate(std::span<const Utterance> context,
                                       const Utterance& reference, const ControlWordSet& w,
                                       const DecoderConfig& cfg, const LanguageModel& lm,
                                       const EmbeddingTable& table, Rng& rng);

// Highest control_count, then lowest loss, then earliest generation order.
std::size_t rerank_index(std::span<const GenerationCandidate> candidates);
const GenerationCandidate& rerank(std::span<const GenerationCandidate> candidates);

}  // namespace fop

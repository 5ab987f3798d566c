#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "fop/corpus.hpp"
#include "fop/generators.hpp"
#include "fop/ngram.hpp"
#include "fop/random.hpp"

namespace fop {

// One simulated continuation: the generator plays the system side, an n-gram
// user model plays the user side, strictly alternating starting with System.
struct RolloutRecord {
    std::uint64_t seed = 0;
    Method method = Method::Plain;
    ControlWordSet w;
    // Starting prefix (through the source dialogue's first user turn).
    std::vector<Utterance> context;
    // 2 * turns utterances on success; shorter when failed is set.
    std::vector<Utterance> generated;
    // A generator exception aborts the remaining rounds; the record keeps
    // whatever was produced so aggregate denominators stay honest.
    bool failed = false;
    std::string error;
};

// N-gram model over user-side continuations given full serialized context.
NgramModel train_user_model(const Corpus& corpus, std::size_t order);

// Runs `turns` generator/user rounds on top of `context`. The user side
// samples with the same decoder settings (temperature, top_k, max_tokens)
// but no boosting; an empty user response becomes an empty utterance and the
// rollout continues. Session state persists across the rollout's turns.
// turns must be >= 1.
RolloutRecord rollout(std::span<const Utterance> context, const ControlWordSet& w,
                      const Generator& generator, const LanguageModel& user_model,
                      const DecoderConfig& cfg, std::size_t turns, Rng& rng);

// Aggregated cell result. The serialized report carries exactly the
// documented keys {dataset, method, num_control_words, lt_success_rate,
// precision, recall, f1, perplexity, n_items, seed}; lambda and
// failed_rollouts travel in the experiment summary instead.
struct MetricsReport {
    std::string dataset;
    std::string method;
    std::size_t num_control_words = 0;
    double lt_success_rate = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double perplexity = 0.0;
    std::size_t n_items = 0;
    std::uint64_t seed = 0;
    std::optional<double> lambda;
    std::size_t failed_rollouts = 0;
};

std::string report_json(const MetricsReport& report);

struct ExperimentSpec {
    std::string name = "experiment";
    std::filesystem::path train_corpus;
    std::filesystem::path test_corpus;
    // Embedding file path, or "synthetic" for the built-in table.
    std::string embeddings = "synthetic";
    std::vector<Method> methods;
    std::vector<std::size_t> control_word_counts;
    std::vector<double> lambda_grid = {0.0, 5.0, 10.0, 15.0, 20.0, 25.0};
    // When set, boost-sensitive methods (dbs and the guided variants) run
    // once per grid value; otherwise every method runs at the profile's λ.
    bool lambda_sweep = false;
    std::size_t rollout_turns = 10;
    std::vector<std::uint64_t> seeds = {1};
    std::filesystem::path output_dir = "reports";
    std::string profile = "synthetic";
    std::size_t lm_order = 3;
    // 0 means every test conversation.
    std::size_t max_examples = 0;
    std::size_t embedding_dim = 10;
    // Also write per-cell rollout transcripts ({cell}_rollouts.jsonl) plus a
    // control-word sidecar ({cell}_words.json) scoreable by the evaluator.
    bool dump_rollouts = false;

    // Decoder overrides applied on top of the named profile.
    std::optional<double> lambda;
    std::optional<std::size_t> retrieval_k;
    std::optional<std::size_t> top_k;
    std::optional<std::size_t> candidates;
    std::optional<std::size_t> max_tokens;
    std::optional<double> temperature;
    std::optional<std::size_t> edit_steps;
    std::optional<std::size_t> beam_width;

    DecoderConfig decoder_config() const;
};

// Flat key = value file; [section] headers group keys but carry no meaning,
// '#' starts a comment, lists are comma-separated. Unknown keys fail.
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);

struct ExperimentResult {
    std::vector<MetricsReport> reports;
    std::vector<std::filesystem::path> report_files;
    std::filesystem::path summary_file;
    std::filesystem::path table_file;
};

// For each (method, |W|, seed) cell: one rollout per test conversation
// (scored with long-term success over the generated turns) and one
// teacher-forced pass over the true responses (scored with prf1 and
// perplexity). Writes one JSON report per cell plus summary.json and
// table.txt under spec.output_dir. Re-running a spec is byte-identical.
// Missing corpora or embeddings fail before any rollout runs.
ExperimentResult run_experiment(const ExperimentSpec& spec, std::ostream* progress = nullptr);

}  // namespace fop

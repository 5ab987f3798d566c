#include "fop/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string_view>
#include <utility>

#include <json.hpp>

#include "fop/decode.hpp"
#include "fop/embeddings.hpp"
#include "fop/encoder.hpp"
#include "fop/metrics.hpp"
#include "fop/retrieval.hpp"
#include "fop/synthetic.hpp"
#include "fop/text.hpp"

namespace fop {

namespace {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string trim(std::string_view s) {
    constexpr std::string_view ws = " \t\r\n";
    const auto begin = s.find_first_not_of(ws);
    if (begin == std::string_view::npos) return {};
    const auto end = s.find_last_not_of(ws);
    return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string> split_list(std::string_view value) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= value.size()) {
        const auto comma = value.find(',', start);
        const auto len = comma == std::string_view::npos ? std::string_view::npos : comma - start;
        std::string part = trim(value.substr(start, len));
        if (!part.empty()) parts.push_back(std::move(part));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return parts;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
    throw std::invalid_argument("experiment spec: bad value for " + key + ": '" + value + "'");
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t idx = 0;
        const double v = std::stod(value, &idx);
        if (idx != value.size()) bad_value(key, value);
        return v;
    } catch (const std::invalid_argument&) {
        bad_value(key, value);
    } catch (const std::out_of_range&) {
        bad_value(key, value);
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t idx = 0;
        const unsigned long long v = std::stoull(value, &idx);
        if (idx != value.size()) bad_value(key, value);
        return v;
    } catch (const std::invalid_argument&) {
        bad_value(key, value);
    } catch (const std::out_of_range&) {
        bad_value(key, value);
    }
}

std::size_t parse_size(const std::string& key, const std::string& value) {
    return static_cast<std::size_t>(parse_u64(key, value));
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    bad_value(key, value);
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string format_double(const char* fmt, double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

bool lambda_sensitive(Method method) {
    return method == Method::Dbs || method == Method::FopGuided ||
           method == Method::FopGuidedNoWindow;
}

Utterance sample_user_reply(std::span<const Utterance> context, const LanguageModel& user_model,
                            const DecoderConfig& cfg, Rng& rng) {
    const Vocabulary& vocabulary = user_model.vocabulary();
    const std::vector<TokenId> prompt = generation_prompt(context, vocabulary, Speaker::User);
    Rng child = spawn_child(rng);
    const std::vector<TokenId> ids =
        sample_response_tokens(prompt, user_model, cfg, nullptr, nullptr, child);
    std::vector<std::string> tokens;
    tokens.reserve(ids.size());
    for (TokenId id : ids) tokens.push_back(vocabulary.token(id));
    return make_utterance(Speaker::User, join_tokens(tokens));
}

// Rollout start: everything through the source dialogue's first user turn.
std::vector<Utterance> starting_context(const Conversation& conversation) {
    std::vector<Utterance> context;
    for (const Utterance& utterance : conversation.utterances) {
        context.push_back(utterance);
        if (utterance.speaker == Speaker::User) return context;
    }
    return {};
}

}  // namespace

NgramModel train_user_model(const Corpus& corpus, std::size_t order) {
    return train_ngram(corpus, order, Speaker::User);
}

RolloutRecord rollout(std::span<const Utterance> context, const ControlWordSet& w,
                      const Generator& generator, const LanguageModel& user_model,
                      const DecoderConfig& cfg, std::size_t turns, Rng& rng) {
    if (turns < 1) throw std::invalid_argument("rollout: turns must be >= 1");

    RolloutRecord record;
    record.method = parse_method(generator.name());
    record.w = w;
    record.context.assign(context.begin(), context.end());

    GeneratorSession session;
    std::vector<Utterance> full(context.begin(), context.end());
    for (std::size_t turn = 0; turn < turns; ++turn) {
        Utterance response;
        try {
            response = generator.respond(full, w, session, rng);
        } catch (const std::exception& error) {
            record.failed = true;
            record.error = error.what();
            break;
        }
        full.push_back(response);
        record.generated.push_back(std::move(response));

        Utterance reply = sample_user_reply(full, user_model, cfg, rng);
        full.push_back(reply);
        record.generated.push_back(std::move(reply));
    }
    return record;
}

std::string report_json(const MetricsReport& report) {
    ordered_json j;
    j["dataset"] = report.dataset;
    j["method"] = report.method;
    j["num_control_words"] = report.num_control_words;
    j["lt_success_rate"] = report.lt_success_rate;
    j["precision"] = report.precision;
    j["recall"] = report.recall;
    j["f1"] = report.f1;
    j["perplexity"] = report.perplexity;
    j["n_items"] = report.n_items;
    j["seed"] = report.seed;
    return j.dump(2) + "\n";
}

DecoderConfig ExperimentSpec::decoder_config() const {
    DecoderConfig cfg = DecoderConfig::profile(profile);
    if (lambda) cfg.lambda = *lambda;
    if (retrieval_k) cfg.retrieval_k = *retrieval_k;
    if (top_k) cfg.top_k = *top_k;
    if (candidates) cfg.candidates = *candidates;
    if (max_tokens) cfg.max_tokens = *max_tokens;
    if (temperature) cfg.temperature = *temperature;
    if (edit_steps) cfg.edit_steps = *edit_steps;
    if (beam_width) cfg.beam_width = *beam_width;
    return cfg;
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open experiment spec: " + path.string());

    ExperimentSpec spec;
    spec.name = path.stem().string();
    const auto resolve = [&path](const std::string& value) {
        fs::path p = value;
        return p.is_absolute() ? p : path.parent_path() / p;
    };

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string text = trim(line);
        if (text.empty()) continue;
        if (text.front() == '[' && text.back() == ']') continue;

        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("experiment spec line " + std::to_string(line_no) +
                                        ": expected key = value");
        const std::string key = trim(text.substr(0, eq));
        const std::string value = trim(text.substr(eq + 1));

        if (key == "name") {
            spec.name = value;
        } else if (key == "train_corpus") {
            spec.train_corpus = resolve(value);
        } else if (key == "test_corpus") {
            spec.test_corpus = resolve(value);
        } else if (key == "embeddings") {
            spec.embeddings = value == "synthetic" ? value : resolve(value).string();
        } else if (key == "methods") {
            spec.methods.clear();
            for (const std::string& name : split_list(value))
                spec.methods.push_back(parse_method(name));
        } else if (key == "control_word_counts") {
            spec.control_word_counts.clear();
            for (const std::string& item : split_list(value))
                spec.control_word_counts.push_back(parse_size(key, item));
        } else if (key == "lambda_grid") {
            spec.lambda_grid.clear();
            for (const std::string& item : split_list(value))
                spec.lambda_grid.push_back(parse_double(key, item));
        } else if (key == "lambda_sweep") {
            spec.lambda_sweep = parse_bool(key, value);
        } else if (key == "rollout_turns") {
            spec.rollout_turns = parse_size(key, value);
        } else if (key == "seeds") {
            spec.seeds.clear();
            for (const std::string& item : split_list(value))
                spec.seeds.push_back(parse_u64(key, item));
        } else if (key == "output_dir") {
            spec.output_dir = resolve(value);
        } else if (key == "profile") {
            spec.profile = value;
        } else if (key == "lm_order") {
            spec.lm_order = parse_size(key, value);
        } else if (key == "max_examples") {
            spec.max_examples = parse_size(key, value);
        } else if (key == "embedding_dim") {
            spec.embedding_dim = parse_size(key, value);
        } else if (key == "dump_rollouts") {
            spec.dump_rollouts = parse_bool(key, value);
        } else if (key == "lambda") {
            spec.lambda = parse_double(key, value);
        } else if (key == "retrieval_k") {
            spec.retrieval_k = parse_size(key, value);
        } else if (key == "top_k") {
            spec.top_k = parse_size(key, value);
        } else if (key == "candidates") {
            spec.candidates = parse_size(key, value);
        } else if (key == "max_tokens") {
            spec.max_tokens = parse_size(key, value);
        } else if (key == "temperature") {
            spec.temperature = parse_double(key, value);
        } else if (key == "edit_steps") {
            spec.edit_steps = parse_size(key, value);
        } else if (key == "beam_width") {
            spec.beam_width = parse_size(key, value);
        } else {
            throw std::invalid_argument("experiment spec: unknown key: " + key);
        }
    }

    if (spec.train_corpus.empty())
        throw std::invalid_argument("experiment spec: train_corpus is required");
    if (spec.test_corpus.empty())
        throw std::invalid_argument("experiment spec: test_corpus is required");
    if (spec.methods.empty())
        throw std::invalid_argument("experiment spec: methods is required");
    if (spec.control_word_counts.empty())
        throw std::invalid_argument("experiment spec: control_word_counts is required");
    if (spec.seeds.empty()) throw std::invalid_argument("experiment spec: seeds must be non-empty");
    if (spec.rollout_turns < 1)
        throw std::invalid_argument("experiment spec: rollout_turns must be >= 1");
    if (spec.lm_order < 1) throw std::invalid_argument("experiment spec: lm_order must be >= 1");
    return spec;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, std::ostream* progress) {
    if (spec.methods.empty()) throw std::invalid_argument("run_experiment: no methods");
    if (spec.control_word_counts.empty())
        throw std::invalid_argument("run_experiment: no control word counts");
    if (spec.seeds.empty()) throw std::invalid_argument("run_experiment: no seeds");
    if (spec.rollout_turns < 1)
        throw std::invalid_argument("run_experiment: rollout_turns must be >= 1");

    // Every resource comes up before the first rollout so a missing file or
    // an unbuildable model fails the whole run immediately.
    const Corpus train = ingest_jsonl(spec.train_corpus.string());
    const Corpus test = ingest_jsonl(spec.test_corpus.string());
    if (test.conversations.empty()) throw std::runtime_error("run_experiment: empty test corpus");
    const EmbeddingTable table = spec.embeddings == "synthetic"
                                     ? synthetic_embeddings(spec.embedding_dim)
                                     : load_embeddings(spec.embeddings);

    const DecoderConfig base_cfg = spec.decoder_config();
    const NgramModel system_lm = train_ngram(train, spec.lm_order, Speaker::System);
    const NgramModel user_lm = train_user_model(train, spec.lm_order);
    const BagOfEmbeddingsEncoder encoder(table, train);
    const PastFutureIndex index = PastFutureIndex::build(train, encoder);
    const GeneratorResources resources{&system_lm, &table, &index};

    struct Cell {
        Method method = Method::Plain;
        std::size_t count = 0;
        std::uint64_t seed = 0;
        std::optional<double> lambda;
        bool swept = false;
    };
    std::vector<Cell> cells;
    for (Method method : spec.methods) {
        for (std::size_t count : spec.control_word_counts) {
            for (std::uint64_t seed : spec.seeds) {
                if (spec.lambda_sweep && lambda_sensitive(method)) {
                    for (double lambda : spec.lambda_grid)
                        cells.push_back({method, count, seed, lambda, true});
                } else if (lambda_sensitive(method)) {
                    cells.push_back({method, count, seed, base_cfg.lambda, false});
                } else {
                    cells.push_back({method, count, seed, std::nullopt, false});
                }
            }
        }
    }

    // Generator construction validates per-method resources up front.
    std::vector<std::unique_ptr<Generator>> generators;
    generators.reserve(cells.size());
    for (const Cell& cell : cells) {
        DecoderConfig cfg = base_cfg;
        if (cell.lambda) cfg.lambda = *cell.lambda;
        generators.push_back(make_generator(cell.method, cfg, resources));
    }

    std::size_t n_examples = test.conversations.size();
    if (spec.max_examples > 0) n_examples = std::min(n_examples, spec.max_examples);

    std::vector<std::vector<Utterance>> contexts;
    contexts.reserve(n_examples);
    for (std::size_t i = 0; i < n_examples; ++i)
        contexts.push_back(starting_context(test.conversations[i]));

    // Control words depend only on (conversation, count): shared across cells.
    std::vector<std::vector<ControlWordSet>> word_sets(spec.control_word_counts.size());
    for (std::size_t ci = 0; ci < spec.control_word_counts.size(); ++ci) {
        word_sets[ci].reserve(n_examples);
        for (std::size_t i = 0; i < n_examples; ++i)
            word_sets[ci].push_back(select_control_words(
                test.conversations[i], test, spec.control_word_counts[ci], Speaker::System));
    }

    fs::create_directories(spec.output_dir);

    ExperimentResult result;
    result.reports.reserve(cells.size());
    result.report_files.reserve(cells.size());

    for (std::size_t cell_index = 0; cell_index < cells.size(); ++cell_index) {
        const Cell& cell = cells[cell_index];
        const Generator& generator = *generators[cell_index];
        DecoderConfig cfg = base_cfg;
        if (cell.lambda) cfg.lambda = *cell.lambda;

        std::string stem = std::string(method_name(cell.method)) + "_w" +
                           std::to_string(cell.count) + "_seed" + std::to_string(cell.seed);
        if (cell.swept) stem += "_lambda" + format_double("%g", *cell.lambda);

        const auto started = std::chrono::steady_clock::now();
        Rng cell_rng(fnv1a64(stem) ^ (cell.seed * 0x9E3779B97F4A7C15ULL));

        const std::size_t count_index =
            static_cast<std::size_t>(std::find(spec.control_word_counts.begin(),
                                               spec.control_word_counts.end(), cell.count) -
                                     spec.control_word_counts.begin());

        double success_sum = 0.0;
        std::size_t failed = 0;
        std::vector<PrfItem> items;
        double nll_sum = 0.0;
        std::size_t token_count = 0;
        std::vector<Conversation> transcripts;
        ordered_json transcript_words = ordered_json::object();

        for (std::size_t i = 0; i < n_examples; ++i) {
            const ControlWordSet& w = word_sets[count_index][i];
            Rng rollout_rng = spawn_child(cell_rng);
            Rng teacher_rng = spawn_child(cell_rng);

            RolloutRecord record =
                rollout(contexts[i], w, generator, user_lm, cfg, spec.rollout_turns, rollout_rng);
            record.seed = cell.seed;
            if (record.failed) ++failed;
            if (!w.words.empty()) success_sum += long_term_success(record.generated, w).rate;

            if (spec.dump_rollouts) {
                Conversation transcript;
                transcript.id = test.conversations[i].id;
                transcript.utterances = record.context;
                transcript.utterances.insert(transcript.utterances.end(),
                                             record.generated.begin(), record.generated.end());
                transcripts.push_back(std::move(transcript));
                transcript_words[test.conversations[i].id] = w.words;
            }

            // Teacher-forced pass over the true dialogue for placement and
            // fluency: every system turn is regenerated from the true prefix.
            GeneratorSession session;
            std::vector<Utterance> prefix;
            const Conversation& conversation = test.conversations[i];
            prefix.reserve(conversation.utterances.size());
            std::size_t turn_index = 0;
            for (const Utterance& utterance : conversation.utterances) {
                if (utterance.speaker == Speaker::System) {
                    ++turn_index;
                    Utterance generated;
                    try {
                        generated = generator.respond(prefix, w, session, teacher_rng);
                    } catch (const std::exception&) {
                        generated = make_utterance(Speaker::System, "");
                    }

                    const Vocabulary& vocabulary = system_lm.vocabulary();
                    std::vector<TokenId> response_ids;
                    response_ids.reserve(generated.tokens.size() + 1);
                    for (const std::string& token : generated.tokens)
                        response_ids.push_back(vocabulary.id(token));
                    response_ids.push_back(Vocabulary::kEou);
                    const std::vector<TokenId> prompt =
                        generation_prompt(prefix, vocabulary, Speaker::System);
                    nll_sum += system_lm.sequence_nll(prompt, response_ids) *
                               static_cast<double>(response_ids.size());
                    token_count += response_ids.size();

                    items.push_back(
                        {w, std::move(generated.tokens), utterance.tokens, turn_index, i});
                }
                prefix.push_back(utterance);
            }
        }

        const PRF1Result pr = prf1(items);
        MetricsReport report;
        report.dataset = spec.name;
        report.method = std::string(method_name(cell.method));
        report.num_control_words = cell.count;
        report.lt_success_rate = success_sum / static_cast<double>(n_examples);
        report.precision = pr.p;
        report.recall = pr.r;
        report.f1 = pr.f1;
        report.perplexity =
            token_count == 0 ? 0.0 : std::exp(nll_sum / static_cast<double>(token_count));
        report.n_items = n_examples;
        report.seed = cell.seed;
        report.lambda = cell.lambda;
        report.failed_rollouts = failed;

        const fs::path file = spec.output_dir / (stem + ".json");
        std::ofstream out(file, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write report: " + file.string());
        out << report_json(report);
        out.close();

        if (spec.dump_rollouts) {
            write_jsonl(transcripts, (spec.output_dir / (stem + "_rollouts.jsonl")).string());
            std::ofstream words_out(spec.output_dir / (stem + "_words.json"), std::ios::binary);
            if (!words_out)
                throw std::runtime_error("cannot write control-word sidecar for " + stem);
            words_out << transcript_words.dump(2) << "\n";
        }

        if (progress != nullptr) {
            const double elapsed =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
            char line[200];
            std::snprintf(line, sizeof line,
                          "[%zu/%zu] %-22s |W|=%zu seed=%llu%s%s  s=%.4f f1=%.4f ppl=%.2f (%.1fs)\n",
                          cell_index + 1, cells.size(), report.method.c_str(), cell.count,
                          static_cast<unsigned long long>(cell.seed),
                          cell.lambda ? (" lambda=" + format_double("%g", *cell.lambda)).c_str()
                                      : "",
                          failed > 0 ? " [failures]" : "", report.lt_success_rate, report.f1,
                          report.perplexity, elapsed);
            *progress << line << std::flush;
        }

        result.reports.push_back(std::move(report));
        result.report_files.push_back(file);
    }

    ordered_json summary;
    summary["experiment"] = spec.name;
    summary["train_corpus"] = spec.train_corpus.string();
    summary["test_corpus"] = spec.test_corpus.string();
    summary["embeddings"] = spec.embeddings;
    summary["profile"] = spec.profile;
    summary["lm_order"] = spec.lm_order;
    summary["rollout_turns"] = spec.rollout_turns;
    summary["n_examples"] = n_examples;
    summary["reports"] = ordered_json::array();
    for (std::size_t i = 0; i < result.reports.size(); ++i) {
        const MetricsReport& report = result.reports[i];
        ordered_json entry;
        entry["file"] = result.report_files[i].filename().string();
        entry["dataset"] = report.dataset;
        entry["method"] = report.method;
        entry["num_control_words"] = report.num_control_words;
        if (report.lambda) entry["lambda"] = *report.lambda;
        entry["lt_success_rate"] = report.lt_success_rate;
        entry["precision"] = report.precision;
        entry["recall"] = report.recall;
        entry["f1"] = report.f1;
        entry["perplexity"] = report.perplexity;
        entry["n_items"] = report.n_items;
        entry["failed_rollouts"] = report.failed_rollouts;
        entry["seed"] = report.seed;
        summary["reports"].push_back(std::move(entry));
    }
    result.summary_file = spec.output_dir / "summary.json";
    {
        std::ofstream out(result.summary_file, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write summary: " + result.summary_file.string());
        out << summary.dump(2) << "\n";
    }

    result.table_file = spec.output_dir / "table.txt";
    {
        std::ofstream out(result.table_file, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write table: " + result.table_file.string());
        char line[220];
        std::snprintf(line, sizeof line, "%-16s %-22s %4s %6s %8s %9s %10s %8s %8s %12s %6s %7s\n",
                      "dataset", "method", "|W|", "seed", "lambda", "success", "precision",
                      "recall", "f1", "perplexity", "items", "failed");
        out << line;
        for (const MetricsReport& report : result.reports) {
            const std::string lambda_text =
                report.lambda ? format_double("%g", *report.lambda) : "-";
            std::snprintf(line, sizeof line,
                          "%-16s %-22s %4zu %6llu %8s %9.4f %10.4f %8.4f %8.4f %12.2f %6zu %7zu\n",
                          report.dataset.c_str(), report.method.c_str(), report.num_control_words,
                          static_cast<unsigned long long>(report.seed), lambda_text.c_str(),
                          report.lt_success_rate, report.precision, report.recall, report.f1,
                          report.perplexity, report.n_items, report.failed_rollouts);
            out << line;
        }
    }
    return result;
}

}  // namespace fop

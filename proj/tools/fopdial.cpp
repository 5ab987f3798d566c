#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fop/corpus.hpp"
#include "fop/decode.hpp"
#include "fop/embeddings.hpp"
#include "fop/encoder.hpp"
#include "fop/generators.hpp"
#include "fop/harness.hpp"
#include "fop/metrics.hpp"
#include "fop/ngram.hpp"
#include "fop/random.hpp"
#include "fop/retrieval.hpp"
#include "fop/stemmer.hpp"
#include "fop/synthetic.hpp"
#include "fop/text.hpp"

namespace {

using namespace fop;
using ordered_json = nlohmann::ordered_json;

struct GlobalOptions {
    std::uint64_t seed = 1;
    bool json = false;
    std::string output;
};

struct DecoderFlags {
    std::string profile = "synthetic";
    std::optional<double> lambda;
    std::optional<std::size_t> window;
    std::optional<std::size_t> candidates;
    std::optional<std::size_t> max_tokens;
    std::optional<std::size_t> top_k;
    std::optional<double> temperature;
    std::optional<std::size_t> retrieval_k;
    std::optional<std::size_t> beam_width;
    std::optional<std::size_t> edit_steps;

    void attach(CLI::App& cmd) {
        cmd.add_option("--profile", profile, "decoder preset name")->capture_default_str();
        cmd.add_option("--lambda", lambda, "boost strength");
        cmd.add_option("--window", window, "sliding window size q");
        cmd.add_option("--candidates", candidates, "candidates per rerank");
        cmd.add_option("--max-tokens", max_tokens, "per-response token cap");
        cmd.add_option("--top-k", top_k, "sampling truncation (0 = full)");
        cmd.add_option("--temperature", temperature, "sampling temperature");
        cmd.add_option("--retrieval-k", retrieval_k, "nearest neighbors per query");
        cmd.add_option("--beam-width", beam_width, "beam width for the beam baseline");
        cmd.add_option("--edit-steps", edit_steps, "edit steps for the editing baseline");
    }

    DecoderConfig build() const {
        DecoderConfig cfg = DecoderConfig::profile(profile);
        if (lambda) cfg.lambda = *lambda;
        if (window) cfg.window = *window;
        if (candidates) cfg.candidates = *candidates;
        if (max_tokens) cfg.max_tokens = *max_tokens;
        if (top_k) cfg.top_k = *top_k;
        if (temperature) cfg.temperature = *temperature;
        if (retrieval_k) cfg.retrieval_k = *retrieval_k;
        if (beam_width) cfg.beam_width = *beam_width;
        if (edit_steps) cfg.edit_steps = *edit_steps;
        return cfg;
    }
};

struct ResourceFlags {
    std::string corpus;
    std::string embeddings = "synthetic";
    std::size_t embedding_dim = 10;
    std::size_t order = 3;
    std::string lm_path;
    std::string index_path;

    void attach(CLI::App& cmd) {
        cmd.add_option("--corpus", corpus, "training corpus JSONL")->required();
        cmd.add_option("--embeddings", embeddings, "embedding file, or 'synthetic'")
            ->capture_default_str();
        cmd.add_option("--embedding-dim", embedding_dim, "dimension of synthetic embeddings")
            ->capture_default_str();
        cmd.add_option("--order", order, "n-gram order when training on the fly")
            ->capture_default_str();
        cmd.add_option("--lm", lm_path, "pre-trained model file (skips training)");
        cmd.add_option("--index", index_path, "prebuilt index file (skips building)");
    }
};

// Heap-allocated so the encoder's and index's internal pointers stay valid.
struct Resources {
    Corpus corpus;
    EmbeddingTable table;
    std::unique_ptr<NgramModel> lm;
    std::unique_ptr<BagOfEmbeddingsEncoder> encoder;
    std::unique_ptr<PastFutureIndex> index;

    GeneratorResources view() const { return {lm.get(), &table, index.get()}; }
};

EmbeddingTable load_table(const std::string& spec, std::size_t dim) {
    return spec == "synthetic" ? synthetic_embeddings(dim) : load_embeddings(spec);
}

std::unique_ptr<Resources> load_resources(const ResourceFlags& flags) {
    auto resources = std::make_unique<Resources>();
    resources->corpus = ingest_jsonl(flags.corpus);
    if (resources->corpus.conversations.empty())
        throw std::runtime_error("corpus is empty: " + flags.corpus);
    resources->table = load_table(flags.embeddings, flags.embedding_dim);
    resources->lm = std::make_unique<NgramModel>(
        flags.lm_path.empty() ? train_ngram(resources->corpus, flags.order, Speaker::System)
                              : NgramModel::load(flags.lm_path));
    resources->encoder =
        std::make_unique<BagOfEmbeddingsEncoder>(resources->table, resources->corpus);
    resources->index = std::make_unique<PastFutureIndex>(
        flags.index_path.empty() ? PastFutureIndex::build(resources->corpus, *resources->encoder)
                                 : PastFutureIndex::load(flags.index_path, *resources->encoder));
    return resources;
}

std::optional<Speaker> parse_side(const std::string& side) {
    if (side == "both") return std::nullopt;
    if (side == "system") return Speaker::System;
    if (side == "user") return Speaker::User;
    throw std::invalid_argument("unknown side: " + side + " (expected both|system|user)");
}

ControlWordSet control_words_for(const std::vector<std::string>& words,
                                 const Conversation& conversation, const Corpus& idf_corpus,
                                 std::size_t num_words) {
    if (!words.empty()) {
        std::vector<std::string> cleaned;
        for (const std::string& word : words) {
            for (std::string& token : tokenize(word)) cleaned.push_back(std::move(token));
        }
        if (cleaned.empty()) throw std::invalid_argument("control word list is empty");
        return make_control_word_set(std::move(cleaned));
    }
    return select_control_words(conversation, idf_corpus, num_words, Speaker::System);
}

double response_loss(const NgramModel& lm, std::span<const Utterance> context,
                     const Utterance& response) {
    if (response.tokens.empty()) return 0.0;
    const Vocabulary& vocabulary = lm.vocabulary();
    const std::vector<TokenId> prompt = generation_prompt(context, vocabulary, Speaker::System);
    std::vector<TokenId> ids;
    ids.reserve(response.tokens.size());
    for (const std::string& token : response.tokens) ids.push_back(vocabulary.id(token));
    return lm.sequence_nll(prompt, ids);
}

bool uses_retrieval(Method method) {
    return method == Method::FopRetrieval || method == Method::FopGuided ||
           method == Method::FopGuidedNoWindow;
}

std::string highlight_matches(const Utterance& response, const ControlWordSet& w) {
    std::unordered_set<std::string> stems(w.stems.begin(), w.stems.end());
    std::string out;
    for (std::size_t i = 0; i < response.tokens.size(); ++i) {
        if (i > 0) out += ' ';
        const std::string& token = response.tokens[i];
        if (stems.count(porter_stem(token)) != 0) {
            out += '[';
            out += token;
            out += ']';
        } else {
            out += token;
        }
    }
    return out;
}

void write_text_file(const std::string& path, const std::string& payload) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out << payload;
}

void emit(const GlobalOptions& global, const ordered_json& payload,
          const std::string& human_line) {
    const std::string text = global.json ? payload.dump(2) + "\n" : human_line + "\n";
    std::cout << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"constrained long-term dialogue generation toolkit"};
    app.fallthrough();
    app.require_subcommand(1);
    app.set_config("--config", "", "flat key = value config with [subcommand] sections");

    GlobalOptions global;
    CLI::Option* seed_option =
        app.add_option("--seed", global.seed, "rng seed")->capture_default_str();
    app.add_flag("--json", global.json, "machine-readable output");
    app.add_option("--output", global.output, "output path override");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "normalize a dialogue JSONL file");
    std::string ingest_input;
    ingest->add_option("--input", ingest_input, "JSONL file to ingest")->required();
    ingest->callback([&] {
        const Corpus corpus = ingest_jsonl(ingest_input);
        std::size_t utterances = 0;
        for (const Conversation& conversation : corpus.conversations)
            utterances += conversation.utterances.size();
        const std::string out = global.output.empty() ? "corpus.jsonl" : global.output;
        write_jsonl(corpus.conversations, out);
        ordered_json payload;
        payload["conversations"] = corpus.conversations.size();
        payload["utterances"] = utterances;
        payload["output"] = out;
        emit(global, payload,
             "ingested " + std::to_string(corpus.conversations.size()) + " conversations (" +
                 std::to_string(utterances) + " utterances) -> " + out);
    });

    // synthesize
    auto* synthesize = app.add_subcommand("synthesize", "generate the synthetic corpus");
    std::size_t syn_flows = 5;
    std::size_t syn_samples = 2000;
    std::size_t syn_dim = 10;
    std::string syn_embeddings_out;
    synthesize->add_option("--flows", syn_flows, "number of support flows (1-5)")
        ->capture_default_str();
    synthesize->add_option("--samples", syn_samples, "number of dialogues")->capture_default_str();
    synthesize->add_option("--embeddings-out", syn_embeddings_out,
                           "also write the synthetic embedding table here");
    synthesize->add_option("--embedding-dim", syn_dim, "synthetic embedding dimension")
        ->capture_default_str();
    synthesize->callback([&] {
        Rng rng(global.seed);
        const Corpus corpus = generate_synthetic_corpus(syn_flows, syn_samples, rng);
        const std::string out = global.output.empty() ? "synthetic.jsonl" : global.output;
        write_jsonl(corpus.conversations, out);
        if (!syn_embeddings_out.empty()) {
            const EmbeddingTable table = synthetic_embeddings(syn_dim);
            std::string text;
            for (const std::string& word : synthetic_vocabulary()) {
                text += word;
                for (double component : table.entries.at(word)) {
                    char buf[32];
                    std::snprintf(buf, sizeof buf, " %.17g", component);
                    text += buf;
                }
                text += '\n';
            }
            write_text_file(syn_embeddings_out, text);
        }
        ordered_json payload;
        payload["conversations"] = corpus.conversations.size();
        payload["flows"] = syn_flows;
        payload["output"] = out;
        if (!syn_embeddings_out.empty()) payload["embeddings"] = syn_embeddings_out;
        emit(global, payload,
             "synthesized " + std::to_string(corpus.conversations.size()) + " dialogues across " +
                 std::to_string(syn_flows) + " flows -> " + out);
    });

    // train-lm
    auto* train_lm = app.add_subcommand("train-lm", "train and save an n-gram model");
    std::string train_corpus_path;
    std::size_t train_order = 3;
    std::string train_side = "both";
    train_lm->add_option("--corpus", train_corpus_path, "training corpus JSONL")->required();
    train_lm->add_option("--order", train_order, "n-gram order")->capture_default_str();
    train_lm->add_option("--side", train_side, "target side: both|system|user")
        ->capture_default_str();
    train_lm->callback([&] {
        const Corpus corpus = ingest_jsonl(train_corpus_path);
        if (corpus.conversations.empty())
            throw std::runtime_error("corpus is empty: " + train_corpus_path);
        const NgramModel model = train_ngram(corpus, train_order, parse_side(train_side));
        const std::string out = global.output.empty() ? "lm.bin" : global.output;
        model.save(out);
        ordered_json payload;
        payload["order"] = train_order;
        payload["side"] = train_side;
        payload["vocabulary"] = model.vocabulary().size();
        payload["output"] = out;
        emit(global, payload,
             "trained order-" + std::to_string(train_order) + " lm (side=" + train_side +
                 ", vocabulary=" + std::to_string(model.vocabulary().size()) + ") -> " + out);
    });

    // build-index
    auto* build_index = app.add_subcommand("build-index", "encode past/future pairs and save");
    std::string bi_corpus;
    std::string bi_embeddings = "synthetic";
    std::size_t bi_dim = 10;
    build_index->add_option("--corpus", bi_corpus, "corpus JSONL")->required();
    build_index->add_option("--embeddings", bi_embeddings, "embedding file, or 'synthetic'")
        ->capture_default_str();
    build_index->add_option("--embedding-dim", bi_dim, "dimension of synthetic embeddings")
        ->capture_default_str();
    build_index->callback([&] {
        const Corpus corpus = ingest_jsonl(bi_corpus);
        if (corpus.conversations.empty()) throw std::runtime_error("corpus is empty: " + bi_corpus);
        const EmbeddingTable table = load_table(bi_embeddings, bi_dim);
        const BagOfEmbeddingsEncoder encoder(table, corpus);
        const PastFutureIndex index = PastFutureIndex::build(corpus, encoder);
        const std::string out = global.output.empty() ? "index.bin" : global.output;
        index.save(out);
        ordered_json payload;
        payload["pairs"] = index.entries().size();
        payload["conversations"] = corpus.conversations.size();
        payload["skipped"] = index.skipped_conversations();
        payload["output"] = out;
        emit(global, payload,
             "indexed " + std::to_string(index.entries().size()) + " pairs from " +
                 std::to_string(corpus.conversations.size()) + " conversations (skipped " +
                 std::to_string(index.skipped_conversations()) + ") -> " + out);
    });

    // generate
    auto* generate = app.add_subcommand("generate", "produce one system response");
    ResourceFlags gen_resources;
    DecoderFlags gen_decoder;
    std::string gen_context_path;
    std::string gen_method = "fop_guided";
    std::vector<std::string> gen_words;
    std::size_t gen_num_words = 9;
    gen_resources.attach(*generate);
    gen_decoder.attach(*generate);
    generate->add_option("--context", gen_context_path, "conversation JSONL; first entry is the context")
        ->required();
    generate->add_option("--method", gen_method, "generation method")->capture_default_str();
    generate->add_option("--words", gen_words, "explicit control words (comma separated)")
        ->delimiter(',');
    generate->add_option("--num-words", gen_num_words,
                         "control words to select from the context dialogue when --words is absent")
        ->capture_default_str();
    generate->callback([&] {
        const Method method = parse_method(gen_method);
        const auto resources = load_resources(gen_resources);
        const Corpus context_corpus = ingest_jsonl(gen_context_path);
        if (context_corpus.conversations.empty())
            throw std::runtime_error("context file has no conversations: " + gen_context_path);
        const Conversation& conversation = context_corpus.conversations.front();
        const ControlWordSet w =
            control_words_for(gen_words, conversation, resources->corpus, gen_num_words);
        const DecoderConfig cfg = gen_decoder.build();
        const auto generator = make_generator(method, cfg, resources->view());

        Rng rng(global.seed);
        GeneratorSession session;
        const Utterance response =
            generator->respond(conversation.utterances, w, session, rng);

        ordered_json payload;
        payload["response"] = response.text;
        payload["control_count"] = stem_match_count(response.tokens, w);
        payload["loss"] = response_loss(*resources->lm, conversation.utterances, response);
        if (uses_retrieval(method)) {
            const Encoding query = resources->encoder->encode(conversation.utterances);
            const RetrievalResult selected =
                select_future(resources->index->knn(query, cfg.retrieval_k), w);
            payload["reference"] = selected.reference_response.text;
        }
        if (!global.output.empty())
            write_text_file(global.output,
                            global.json ? payload.dump(2) + "\n" : response.text + "\n");
        emit(global, payload, response.text);
    });

    // simulate
    auto* simulate = app.add_subcommand("simulate", "run a full rollout experiment");
    std::string sim_spec_path;
    simulate->add_option("--spec", sim_spec_path, "experiment spec file")->required();
    simulate->callback([&] {
        ExperimentSpec spec = load_experiment_spec(sim_spec_path);
        if (!global.output.empty()) spec.output_dir = global.output;
        if (seed_option->count() > 0) spec.seeds = {global.seed};
        const ExperimentResult result = run_experiment(spec, &std::cerr);
        ordered_json payload;
        payload["reports"] = result.report_files.size();
        payload["summary"] = result.summary_file.string();
        payload["table"] = result.table_file.string();
        emit(global, payload,
             "wrote " + std::to_string(result.report_files.size()) + " reports + summary -> " +
                 spec.output_dir.string());
    });

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "score transcripts against control words");
    std::string eval_transcripts;
    std::string eval_words_path;
    std::string eval_reference;
    std::string eval_corpus;
    std::size_t eval_order = 3;
    std::string eval_label = "external";
    std::string eval_dataset;
    std::size_t eval_soft_tolerance = 0;
    evaluate->add_option("--transcripts", eval_transcripts, "transcript JSONL to score")
        ->required();
    evaluate->add_option("--words", eval_words_path,
                         "control-word sidecar JSON: {conversation id: [words...]}")
        ->required();
    evaluate->add_option("--reference", eval_reference,
                         "ground-truth JSONL (same ids) enabling the placement metrics");
    evaluate->add_option("--corpus", eval_corpus,
                         "training corpus JSONL enabling perplexity (trains an n-gram model)");
    evaluate->add_option("--order", eval_order, "n-gram order for --corpus")->capture_default_str();
    evaluate->add_option("--label", eval_label, "method name recorded in the report")
        ->capture_default_str();
    evaluate->add_option("--dataset", eval_dataset, "dataset name (default: transcript file stem)");
    evaluate->add_option("--soft-tolerance", eval_soft_tolerance,
                         "turn window for the soft placement variant (0 = strict)")
        ->capture_default_str();
    evaluate->callback([&] {
        const Corpus transcripts = ingest_jsonl(eval_transcripts);
        if (transcripts.conversations.empty())
            throw std::runtime_error("no transcripts in: " + eval_transcripts);

        std::ifstream sidecar(eval_words_path);
        if (!sidecar) throw std::runtime_error("cannot open control words: " + eval_words_path);
        const nlohmann::json words_json = nlohmann::json::parse(sidecar);
        if (!words_json.is_object())
            throw std::runtime_error("control-word sidecar must be a JSON object keyed by id");

        std::unordered_map<std::string, ControlWordSet> words;
        for (const auto& [id, list] : words_json.items()) {
            std::vector<std::string> cleaned;
            for (const auto& entry : list) {
                for (std::string& token : tokenize(entry.get<std::string>()))
                    cleaned.push_back(std::move(token));
            }
            if (cleaned.empty())
                throw std::runtime_error("empty control word list for conversation: " + id);
            words.emplace(id, make_control_word_set(std::move(cleaned)));
        }

        const auto words_of = [&words](const Conversation& conversation) -> const ControlWordSet& {
            const auto it = words.find(conversation.id);
            if (it == words.end())
                throw std::runtime_error("no control words for conversation: " + conversation.id);
            return it->second;
        };

        double success_sum = 0.0;
        std::size_t max_words = 0;
        for (const Conversation& conversation : transcripts.conversations) {
            const ControlWordSet& w = words_of(conversation);
            max_words = std::max(max_words, w.words.size());
            success_sum += long_term_success(conversation.utterances, w).rate;
        }

        MetricsReport report;
        report.dataset = eval_dataset.empty()
                             ? std::filesystem::path(eval_transcripts).stem().string()
                             : eval_dataset;
        report.method = eval_label;
        report.num_control_words = max_words;
        report.lt_success_rate =
            success_sum / static_cast<double>(transcripts.conversations.size());
        report.n_items = transcripts.conversations.size();
        report.seed = global.seed;

        if (!eval_reference.empty()) {
            const Corpus reference = ingest_jsonl(eval_reference);
            std::unordered_map<std::string, const Conversation*> by_id;
            for (const Conversation& conversation : reference.conversations)
                by_id.emplace(conversation.id, &conversation);

            const auto system_turns = [](const Conversation& conversation) {
                std::vector<const Utterance*> turns;
                for (const Utterance& utterance : conversation.utterances)
                    if (utterance.speaker == Speaker::System) turns.push_back(&utterance);
                return turns;
            };

            std::vector<PrfItem> items;
            for (std::size_t g = 0; g < transcripts.conversations.size(); ++g) {
                const Conversation& transcript = transcripts.conversations[g];
                const auto ref_it = by_id.find(transcript.id);
                if (ref_it == by_id.end())
                    throw std::runtime_error("no reference conversation for id: " + transcript.id);
                const ControlWordSet& w = words_of(transcript);
                const auto generated = system_turns(transcript);
                const auto truth = system_turns(*ref_it->second);
                const std::size_t rounds = std::max(generated.size(), truth.size());
                for (std::size_t t = 0; t < rounds; ++t) {
                    PrfItem item;
                    item.words = w;
                    if (t < generated.size()) item.generated_tokens = generated[t]->tokens;
                    if (t < truth.size()) item.truth_tokens = truth[t]->tokens;
                    item.turn_index = t + 1;
                    item.group = g;
                    items.push_back(std::move(item));
                }
            }
            const PRF1Result pr = eval_soft_tolerance > 0
                                      ? soft_prf1(items, eval_soft_tolerance)
                                      : prf1(items);
            report.precision = pr.p;
            report.recall = pr.r;
            report.f1 = pr.f1;
        }

        if (!eval_corpus.empty()) {
            const Corpus train = ingest_jsonl(eval_corpus);
            if (train.conversations.empty())
                throw std::runtime_error("corpus is empty: " + eval_corpus);
            const NgramModel lm = train_ngram(train, eval_order, Speaker::System);
            const Vocabulary& vocabulary = lm.vocabulary();
            double nll_sum = 0.0;
            std::size_t tokens = 0;
            for (const Conversation& transcript : transcripts.conversations) {
                std::vector<Utterance> prefix;
                prefix.reserve(transcript.utterances.size());
                for (const Utterance& utterance : transcript.utterances) {
                    if (utterance.speaker == Speaker::System) {
                        std::vector<TokenId> ids;
                        ids.reserve(utterance.tokens.size() + 1);
                        for (const std::string& token : utterance.tokens)
                            ids.push_back(vocabulary.id(token));
                        ids.push_back(Vocabulary::kEou);
                        const std::vector<TokenId> prompt =
                            generation_prompt(prefix, vocabulary, Speaker::System);
                        nll_sum += lm.sequence_nll(prompt, ids) * static_cast<double>(ids.size());
                        tokens += ids.size();
                    }
                    prefix.push_back(utterance);
                }
            }
            report.perplexity =
                tokens == 0 ? 0.0 : std::exp(nll_sum / static_cast<double>(tokens));
        }

        const std::string payload = report_json(report);
        if (!global.output.empty()) write_text_file(global.output, payload);
        if (global.json) {
            std::cout << payload;
        } else {
            char line[200];
            std::snprintf(line, sizeof line,
                          "long-term success: %.4f over %zu transcripts (|W| up to %zu)\n",
                          report.lt_success_rate, report.n_items, report.num_control_words);
            std::cout << line;
            if (!eval_reference.empty()) {
                std::snprintf(line, sizeof line, "placement: p=%.4f r=%.4f f1=%.4f\n",
                              report.precision, report.recall, report.f1);
                std::cout << line;
            }
            if (!eval_corpus.empty()) {
                std::snprintf(line, sizeof line, "perplexity: %.4f\n", report.perplexity);
                std::cout << line;
            }
        }
    });

    // chat
    auto* chat = app.add_subcommand("chat", "interactive session against a generator");
    ResourceFlags chat_resources;
    DecoderFlags chat_decoder;
    std::string chat_method = "fop_guided";
    std::vector<std::string> chat_words;
    std::string chat_context_path;
    chat_resources.attach(*chat);
    chat_decoder.attach(*chat);
    chat->add_option("--method", chat_method, "generation method")->capture_default_str();
    chat->add_option("--words", chat_words, "control words (comma separated)")
        ->delimiter(',')
        ->required();
    chat->add_option("--context", chat_context_path,
                     "optional JSONL; first conversation seeds the history");
    chat->callback([&] {
        const Method method = parse_method(chat_method);
        const auto resources = load_resources(chat_resources);
        ControlWordSet w = control_words_for(chat_words, Conversation{}, resources->corpus, 0);
        const DecoderConfig cfg = chat_decoder.build();
        const auto generator = make_generator(method, cfg, resources->view());

        std::vector<Utterance> history;
        if (!chat_context_path.empty()) {
            const Corpus seed_corpus = ingest_jsonl(chat_context_path);
            if (seed_corpus.conversations.empty())
                throw std::runtime_error("context file has no conversations: " + chat_context_path);
            history = seed_corpus.conversations.front().utterances;
        }

        std::cout << "method: " << method_name(method) << " | control words:";
        for (const std::string& word : w.words) std::cout << ' ' << word;
        std::cout << "\ntype user turns; matched control words appear in brackets; ctrl-d or /quit ends.\n";

        Rng rng(global.seed);
        GeneratorSession session;
        std::string line;
        while (true) {
            std::cout << "user> " << std::flush;
            if (!std::getline(std::cin, line)) {
                std::cout << "\n";
                break;
            }
            if (line == "/quit") break;
            history.push_back(make_utterance(Speaker::User, line));
            const Utterance response = generator->respond(history, w, session, rng);
            history.push_back(response);
            std::cout << "system> " << highlight_matches(response, w) << "\n";
        }

        const SuccessRateResult success = long_term_success(history, w);
        std::cout << "-- session summary --\n";
        for (const Utterance& utterance : history) {
            std::cout << (utterance.speaker == Speaker::System ? "system: " : "user:   ")
                      << utterance.text << "\n";
        }
        char summary[120];
        std::snprintf(summary, sizeof summary, "long-term success: %zu/%zu = %.4f\n",
                      success.n_w, success.total, success.rate);
        std::cout << summary;
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

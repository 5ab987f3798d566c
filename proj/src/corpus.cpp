#include "fop/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <unordered_set>
#include <utility>

#include <json.hpp>

#include "fop/stemmer.hpp"
#include "fop/text.hpp"

namespace fop {

namespace {

[[noreturn]] void line_error(std::size_t line, const std::string& what) {
    throw std::runtime_error("line " + std::to_string(line) + ": " + what);
}

}  // namespace

std::string_view speaker_label(Speaker speaker) {
    return speaker == Speaker::System ? "system" : "user";
}

Speaker parse_speaker(std::string_view label) {
    std::string folded(label);
    for (char& c : folded) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (folded == "system") return Speaker::System;
    if (folded == "user") return Speaker::User;
    throw std::invalid_argument("unknown speaker label: " + std::string(label));
}

Utterance make_utterance(Speaker speaker, std::string_view text) {
    Utterance utterance;
    utterance.speaker = speaker;
    utterance.text = std::string(text);
    utterance.tokens = tokenize(text);
    return utterance;
}

std::size_t Conversation::turns() const {
    return static_cast<std::size_t>(
        std::count_if(utterances.begin(), utterances.end(),
                      [](const Utterance& u) { return u.speaker == Speaker::System; }));
}

void rebuild_document_frequency(Corpus& corpus) {
    corpus.document_frequency.clear();
    for (const Conversation& conversation : corpus.conversations) {
        std::unordered_set<std::string> seen;
        for (const Utterance& utterance : conversation.utterances) {
            for (const std::string& token : utterance.tokens) {
                seen.insert(token);
            }
        }
        for (const std::string& token : seen) {
            ++corpus.document_frequency[token];
        }
    }
}

ControlWordSet make_control_word_set(std::vector<std::string> words) {
    ControlWordSet set;
    set.stems.reserve(words.size());
    for (const std::string& word : words) {
        set.stems.push_back(porter_stem(word));
    }
    set.words = std::move(words);
    return set;
}

Corpus ingest_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open corpus file: " + path);

    Corpus corpus;
    std::unordered_set<std::string> seen_ids;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;

        nlohmann::json record = nlohmann::json::parse(raw, nullptr, false);
        if (record.is_discarded()) line_error(line_no, "malformed JSON");
        if (!record.is_object() || !record.contains("id") || !record["id"].is_string()) {
            line_error(line_no, "missing string field \"id\"");
        }
        if (!record.contains("utterances") || !record["utterances"].is_array() ||
            record["utterances"].empty()) {
            line_error(line_no, "missing non-empty array field \"utterances\"");
        }

        Conversation conversation;
        conversation.id = record["id"].get<std::string>();
        if (!seen_ids.insert(conversation.id).second) {
            line_error(line_no, "duplicate conversation id \"" + conversation.id + "\"");
        }

        for (const nlohmann::json& entry : record["utterances"]) {
            if (!entry.is_object() || !entry.contains("speaker") || !entry["speaker"].is_string() ||
                !entry.contains("text") || !entry["text"].is_string()) {
                line_error(line_no, "utterance requires string fields \"speaker\" and \"text\"");
            }
            Speaker speaker;
            try {
                speaker = parse_speaker(entry["speaker"].get<std::string>());
            } catch (const std::invalid_argument& e) {
                line_error(line_no, e.what());
            }
            const std::string text = entry["text"].get<std::string>();
            if (!conversation.utterances.empty() &&
                conversation.utterances.back().speaker == speaker) {
                Utterance& previous = conversation.utterances.back();
                previous = make_utterance(speaker, previous.text + " " + text);
            } else {
                conversation.utterances.push_back(make_utterance(speaker, text));
            }
        }
        corpus.conversations.push_back(std::move(conversation));
    }

    rebuild_document_frequency(corpus);
    return corpus;
}

void write_jsonl(std::span<const Conversation> conversations, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    for (const Conversation& conversation : conversations) {
        nlohmann::json record;
        record["id"] = conversation.id;
        nlohmann::json turns = nlohmann::json::array();
        for (const Utterance& utterance : conversation.utterances) {
            turns.push_back({{"speaker", std::string(speaker_label(utterance.speaker))},
                             {"text", utterance.text}});
        }
        record["utterances"] = std::move(turns);
        out << record.dump() << '\n';
    }
    if (!out) throw std::runtime_error("failed writing " + path);
}

std::vector<PastFuturePair> split_past_future(const Conversation& conversation) {
    std::vector<PastFuturePair> pairs;
    const auto& utterances = conversation.utterances;
    std::size_t completed_turns = 0;
    for (std::size_t i = 1; i < utterances.size(); ++i) {
        if (utterances[i - 1].speaker == Speaker::User) ++completed_turns;
        if (utterances[i].speaker == Speaker::System &&
            utterances[i - 1].speaker == Speaker::User) {
            PastFuturePair pair;
            pair.source_id = conversation.id;
            pair.split_index = completed_turns;
            pair.past.assign(utterances.begin(), utterances.begin() + static_cast<long>(i));
            pair.future.assign(utterances.begin() + static_cast<long>(i), utterances.end());
            pairs.push_back(std::move(pair));
        }
    }
    return pairs;
}

ControlWordSet select_control_words(const Conversation& conversation, const Corpus& corpus,
                                    std::size_t m, Speaker side) {
    if (m < 1) throw std::invalid_argument("select_control_words: M must be >= 1");

    struct TokenStats {
        std::size_t tf = 0;
        std::size_t first_position = std::numeric_limits<std::size_t>::max();
    };
    std::unordered_map<std::string, TokenStats> stats;
    std::size_t position = 0;
    for (const Utterance& utterance : conversation.utterances) {
        for (const std::string& token : utterance.tokens) {
            if (utterance.speaker == side && !is_stopword(token)) {
                TokenStats& entry = stats[token];
                ++entry.tf;
                entry.first_position = std::min(entry.first_position, position);
            }
            ++position;
        }
    }

    const double n_docs = static_cast<double>(corpus.num_documents());
    struct Ranked {
        double score;
        std::size_t first_position;
        std::string token;
    };
    std::vector<Ranked> ranked;
    ranked.reserve(stats.size());
    for (const auto& [token, entry] : stats) {
        auto df_it = corpus.document_frequency.find(token);
        const double df = df_it == corpus.document_frequency.end()
                              ? 0.0
                              : static_cast<double>(df_it->second);
        const double idf = std::log((1.0 + n_docs) / (1.0 + df)) + 1.0;
        ranked.push_back({static_cast<double>(entry.tf) * idf, entry.first_position, token});
    }
    std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.first_position != b.first_position) return a.first_position < b.first_position;
        return a.token < b.token;
    });

    std::vector<std::string> words;
    words.reserve(std::min(m, ranked.size()));
    for (const Ranked& entry : ranked) {
        if (words.size() == m) break;
        words.push_back(entry.token);
    }
    ControlWordSet set = make_control_word_set(std::move(words));
    set.truncated = set.words.size() < m;
    return set;
}

std::size_t stem_match_count(std::span<const std::string> tokens, const ControlWordSet& words) {
    if (words.stems.empty()) return 0;
    std::unordered_set<std::string> token_stems;
    token_stems.reserve(tokens.size());
    for (const std::string& token : tokens) {
        token_stems.insert(porter_stem(token));
    }
    std::size_t count = 0;
    for (const std::string& stem : words.stems) {
        if (token_stems.count(stem) != 0) ++count;
    }
    return count;
}

}  // namespace fop

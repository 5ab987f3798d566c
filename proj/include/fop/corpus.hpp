#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fop {

enum class Speaker { System, User };

std::string_view speaker_label(Speaker speaker);
// Case-insensitive; throws std::invalid_argument on anything but
// "system"/"user".
Speaker parse_speaker(std::string_view label);

struct Utterance {
    Speaker speaker = Speaker::System;
    std::string text;
    std::vector<std::string> tokens;
};

Utterance make_utterance(Speaker speaker, std::string_view text);

struct Conversation {
    std::string id;
    std::vector<Utterance> utterances;

    // Number of dialogue turns = number of system utterances.
    std::size_t turns() const;
};

struct Corpus {
    std::vector<Conversation> conversations;
    // Token -> number of conversations containing it.
    std::unordered_map<std::string, std::size_t> document_frequency;

    std::size_t num_documents() const { return conversations.size(); }
};

// Recomputes document_frequency from conversations.
void rebuild_document_frequency(Corpus& corpus);

struct ControlWordSet {
    std::vector<std::string> words;
    std::vector<std::string> stems;
    // Set when fewer eligible tokens existed than were requested.
    bool truncated = false;

    std::size_t size() const { return words.size(); }
};

ControlWordSet make_control_word_set(std::vector<std::string> words);

struct PastFuturePair {
    std::string source_id;
    // Number of completed (system, user) turns in `past`.
    std::size_t split_index = 0;
    std::vector<Utterance> past;
    std::vector<Utterance> future;
};

// One conversation per line: {"id": ..., "utterances": [{"speaker", "text"}]}.
// Consecutive same-speaker turns are merged. Errors name the offending line.
Corpus ingest_jsonl(const std::string& path);

void write_jsonl(std::span<const Conversation> conversations, const std::string& path);

// One pair per (user -> system) boundary; past ends with a user utterance,
// future starts with a system one. Fewer than two turns yields no pairs.
std::vector<PastFuturePair> split_past_future(const Conversation& conversation);

// Top-M tf-idf tokens of `side` utterances of c. tf is the raw count within
// those utterances; idf = ln((1+N)/(1+df)) + 1 over corpus conversations.
// Stopwords are excluded; ties break by first occurrence in c, then
// lexicographically. Shortage returns fewer words with truncated set.
ControlWordSet select_control_words(const Conversation& conversation, const Corpus& corpus,
                                    std::size_t m, Speaker side);

// Number of control words whose stem matches the stem of at least one token;
// each control word counts at most once.
std::size_t stem_match_count(std::span<const std::string> tokens, const ControlWordSet& words);

}  // namespace fop

#include "fop/text.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

namespace fop {

namespace {

bool is_token_char(unsigned char c) {
    return std::isalnum(c) != 0;
}

}  // namespace

std::string lowercase(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
    });
    return out;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        if (is_token_char(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        tokens.push_back(std::move(current));
    }
    return tokens;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

const std::vector<std::string>& stopword_list() {
    static const std::vector<std::string> kStopwords = {
        "a",     "about", "after", "again",  "all",   "also",  "am",    "an",
        "and",   "any",   "are",   "as",     "at",    "be",    "been",  "but",
        "by",    "can",   "could", "did",    "do",    "does",  "for",   "from",
        "get",   "got",   "had",   "has",    "have",  "he",    "her",   "here",
        "him",   "his",   "how",   "i",      "if",    "in",    "into",  "is",
        "it",    "its",   "just",  "let",    "like",  "may",   "me",    "might",
        "more",  "most",  "my",    "no",     "not",   "now",   "of",    "off",
        "ok",    "okay",  "on",    "one",    "only",  "or",    "other", "our",
        "out",   "over",  "please", "shall", "she",   "should", "so",   "some",
        "such",  "than",  "thank", "thanks", "that",  "the",   "their", "them",
        "then",  "there", "these", "they",   "this",  "to",    "too",   "up",
        "us",    "was",   "we",    "well",   "were",  "what",  "when",  "which",
        "will",  "with",  "would", "you",
    };
    return kStopwords;
}

bool is_stopword(const std::string& token) {
    static const std::unordered_set<std::string> kSet(stopword_list().begin(),
                                                      stopword_list().end());
    return kSet.count(token) > 0;
}

}  // namespace fop

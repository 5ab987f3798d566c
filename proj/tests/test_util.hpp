#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "fop/corpus.hpp"

namespace fop::testing {

// Self-deleting unique directory under the system temp root.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        static std::atomic<std::uint64_t> counter{0};
        static const std::uint64_t run_token = std::random_device{}();
        const auto base = std::filesystem::temp_directory_path();
        path = base / ("fop_" + tag + "_" + std::to_string(run_token) + "_" +
                       std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path file(const std::string& name) const { return path / name; }
};

inline void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Conversation from alternating (speaker, text) pairs.
inline Conversation make_conversation(std::string id,
                                      std::vector<std::pair<Speaker, std::string>> turns) {
    Conversation conv;
    conv.id = std::move(id);
    for (auto& [speaker, text] : turns) {
        conv.utterances.push_back(make_utterance(speaker, text));
    }
    return conv;
}

inline Corpus make_corpus(std::vector<Conversation> conversations) {
    Corpus corpus;
    corpus.conversations = std::move(conversations);
    rebuild_document_frequency(corpus);
    return corpus;
}

}  // namespace fop::testing

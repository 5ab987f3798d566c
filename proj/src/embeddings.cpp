#include "fop/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fop/text.hpp"

namespace fop {

namespace {

[[noreturn]] void line_error(std::size_t line, const std::string& what) {
    throw std::runtime_error("line " + std::to_string(line) + ": " + what);
}

void l2_normalize(std::vector<double>& v) {
    double norm_sq = 0.0;
    for (double x : v) norm_sq += x * x;
    if (norm_sq <= 0.0) return;
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (double& x : v) x *= inv;
}

}  // namespace

const std::vector<double>* EmbeddingTable::find(std::string_view token) const {
    auto it = entries.find(lowercase(token));
    return it == entries.end() ? nullptr : &it->second;
}

EmbeddingTable load_embeddings(const std::string& path, std::optional<std::size_t> limit) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open embedding file: " + path);

    EmbeddingTable table;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (limit && table.entries.size() >= *limit) break;

        std::istringstream fields(raw);
        std::string token;
        fields >> token;
        std::vector<double> vec;
        std::string component;
        while (fields >> component) {
            std::size_t consumed = 0;
            double value = 0.0;
            try {
                value = std::stod(component, &consumed);
            } catch (const std::exception&) {
                line_error(line_no, "non-numeric component \"" + component + "\"");
            }
            if (consumed != component.size()) {
                line_error(line_no, "non-numeric component \"" + component + "\"");
            }
            if (!std::isfinite(value)) {
                line_error(line_no, "non-finite component \"" + component + "\"");
            }
            vec.push_back(value);
        }
        if (vec.empty()) line_error(line_no, "no vector components");
        if (table.dim == 0) {
            table.dim = vec.size();
        } else if (vec.size() != table.dim) {
            line_error(line_no, "expected " + std::to_string(table.dim) + " components, got " +
                                    std::to_string(vec.size()));
        }
        l2_normalize(vec);
        table.entries[lowercase(token)] = std::move(vec);
    }
    return table;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("cosine: dimension mismatch");
    }
    double dot = 0.0;
    double norm_a = 0.0;
    double norm_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        norm_a += a[i] * a[i];
        norm_b += b[i] * b[i];
    }
    if (norm_a <= 0.0 || norm_b <= 0.0) return 0.0;
    return dot / (std::sqrt(norm_a) * std::sqrt(norm_b));
}

std::vector<std::pair<std::string, double>> most_similar(std::string_view w,
                                                         const EmbeddingTable& table,
                                                         std::size_t k) {
    if (table.entries.empty()) {
        throw std::runtime_error("most_similar: embedding table is empty");
    }
    const std::string query = lowercase(w);
    const std::vector<double>* anchor = table.find(query);
    if (anchor == nullptr) {
        throw std::runtime_error("most_similar: token not in table: " + query);
    }

    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(table.entries.size());
    for (const auto& [token, vec] : table.entries) {
        if (token == query) continue;
        scored.emplace_back(token, cosine(*anchor, vec));
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (scored.size() > k) scored.resize(k);
    return scored;
}

}  // namespace fop

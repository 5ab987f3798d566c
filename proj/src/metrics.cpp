#include "fop/metrics.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include "fop/stemmer.hpp"

namespace fop {

namespace {

std::unordered_set<std::string> stem_set(std::span<const std::string> tokens) {
    std::unordered_set<std::string> stems;
    stems.reserve(tokens.size());
    for (const std::string& token : tokens) stems.insert(porter_stem(token));
    return stems;
}

void finish_ratios(PRF1Result& result, std::size_t correct_predicted,
                   std::size_t correct_actual) {
    result.p = result.predicted == 0
                   ? 0.0
                   : static_cast<double>(correct_predicted) / static_cast<double>(result.predicted);
    result.r = result.actual == 0
                   ? 0.0
                   : static_cast<double>(correct_actual) / static_cast<double>(result.actual);
    result.f1 = result.p + result.r == 0.0 ? 0.0
                                           : 2.0 * result.p * result.r / (result.p + result.r);
}

}  // namespace

SuccessRateResult long_term_success(std::span<const Utterance> utterances,
                                    const ControlWordSet& w) {
    if (w.words.empty()) {
        throw std::invalid_argument("long_term_success: empty control word set");
    }
    std::vector<std::string> system_tokens;
    for (const Utterance& utterance : utterances) {
        if (utterance.speaker != Speaker::System) continue;
        system_tokens.insert(system_tokens.end(), utterance.tokens.begin(),
                             utterance.tokens.end());
    }
    SuccessRateResult result;
    result.n_w = stem_match_count(system_tokens, w);
    result.total = w.words.size();
    result.rate = static_cast<double>(result.n_w) / static_cast<double>(result.total);
    return result;
}

PRF1Result prf1(std::span<const PrfItem> items) {
    PRF1Result result;
    std::size_t correct = 0;
    for (const PrfItem& item : items) {
        const std::unordered_set<std::string> generated = stem_set(item.generated_tokens);
        const std::unordered_set<std::string> truth = stem_set(item.truth_tokens);
        for (const std::string& stem : item.words.stems) {
            const bool in_generated = generated.count(stem) != 0;
            const bool in_truth = truth.count(stem) != 0;
            if (in_generated) ++result.predicted;
            if (in_truth) ++result.actual;
            if (in_generated && in_truth) ++correct;
        }
    }
    result.correct = correct;
    finish_ratios(result, correct, correct);
    return result;
}

PRF1Result soft_prf1(std::span<const PrfItem> items, std::size_t tolerance) {
    std::vector<std::unordered_set<std::string>> generated_stems;
    std::vector<std::unordered_set<std::string>> truth_stems;
    generated_stems.reserve(items.size());
    truth_stems.reserve(items.size());
    for (const PrfItem& item : items) {
        generated_stems.push_back(stem_set(item.generated_tokens));
        truth_stems.push_back(stem_set(item.truth_tokens));
    }

    auto in_window = [&](std::size_t a, std::size_t b) {
        if (items[a].group != items[b].group) return false;
        const std::size_t lo = std::min(items[a].turn_index, items[b].turn_index);
        const std::size_t hi = std::max(items[a].turn_index, items[b].turn_index);
        return hi - lo <= tolerance;
    };

    PRF1Result result;
    std::size_t correct_predicted = 0;
    std::size_t correct_actual = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
        for (const std::string& stem : items[i].words.stems) {
            if (generated_stems[i].count(stem) != 0) {
                ++result.predicted;
                for (std::size_t j = 0; j < items.size(); ++j) {
                    if (in_window(i, j) && truth_stems[j].count(stem) != 0) {
                        ++correct_predicted;
                        break;
                    }
                }
            }
            if (truth_stems[i].count(stem) != 0) {
                ++result.actual;
                for (std::size_t j = 0; j < items.size(); ++j) {
                    if (in_window(i, j) && generated_stems[j].count(stem) != 0) {
                        ++correct_actual;
                        break;
                    }
                }
            }
        }
    }
    result.correct = correct_predicted;
    finish_ratios(result, correct_predicted, correct_actual);
    return result;
}

double macro_f1(std::span<const PRF1Result> per_dataset) {
    if (per_dataset.empty()) return 0.0;
    double sum = 0.0;
    for (const PRF1Result& result : per_dataset) sum += result.f1;
    return sum / static_cast<double>(per_dataset.size());
}

}  // namespace fop

#pragma once

#include <span>
#include <vector>

#include "fop/corpus.hpp"

namespace fop {

struct SuccessRateResult {
    std::size_t n_w = 0;
    std::size_t total = 0;
    double rate = 0.0;
};

// Fraction of control words stem-matched across the SYSTEM utterances of a
// rollout; user turns never count. Throws on |W| = 0.
SuccessRateResult long_term_success(std::span<const Utterance> utterances,
                                    const ControlWordSet& w);

// One evaluation position: a generated response produced from the true
// history prefix, with the ground-truth response it replaces.
struct PrfItem {
    ControlWordSet words;
    std::vector<std::string> generated_tokens;
    std::vector<std::string> truth_tokens;
    // System-turn position inside the conversation, for the soft window.
    std::size_t turn_index = 0;
    // Conversation index within the evaluation set.
    std::size_t group = 0;
};

struct PRF1Result {
    std::size_t correct = 0;
    std::size_t predicted = 0;
    std::size_t actual = 0;
    double p = 0.0;
    double r = 0.0;
    double f1 = 0.0;
};

// Corpus-level (micro) precision/recall/F1 of control-word placement:
// per item, predicted = control words stem-present in the generated response,
// actual = control words stem-present in the true response, correct = their
// intersection; counts are summed over items before the ratios.
PRF1Result prf1(std::span<const PrfItem> items);

// Windowed variant: a predicted word is correct when some true system
// response within ±tolerance turns (same conversation) contains it, and an
// actual word is recalled when some generated response within the window
// contains it. tolerance = 0 reduces exactly to prf1; the reported correct
// count is the precision-side tally.
PRF1Result soft_prf1(std::span<const PrfItem> items, std::size_t tolerance);

// Unweighted mean of per-dataset f1.
double macro_f1(std::span<const PRF1Result> per_dataset);

}  // namespace fop

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fop/corpus.hpp"
#include "fop/embeddings.hpp"
#include "fop/random.hpp"

namespace fop {

// Desk-scale task-oriented corpus generator. Dialogues follow a fixed flow
// grammar (agent greeting -> issue -> verification -> resolution -> closing)
// over five support flows. Nine slot values per dialogue appear exactly once
// each, inside one customer (system-side) turn, introduced by a fixed carrier
// phrase, so ground-truth control words and their turns are known exactly.
inline constexpr std::size_t kSyntheticFlows = 5;
inline constexpr std::size_t kSyntheticSlots = 9;
// Correlated slot tuples shared by every corpus drawn from the grammar:
// bundle b fills slot j with value index (b + 5j + 3) mod 20, so any
// unmutated slot value identifies the bundle.
inline constexpr std::size_t kSyntheticBundles = 12;
inline constexpr std::size_t kSyntheticSlotValues = 20;
// Per-slot chance that a dialogue deviates from its bundle's value.
inline constexpr double kSyntheticMutationProb = 0.10;
// Per-gap chance of a rare hesitation token between template words.
inline constexpr double kSyntheticFillerProb = 0.12;
inline constexpr std::size_t kSyntheticFillerWords = 40;

// Dialogue i uses flow i % flows and bundle (i / flows) % kSyntheticBundles;
// the rng only draws template variants, slot mutations, and fillers, so
// corpora with different seeds share the same bundle structure.
// flows must lie in [1, kSyntheticFlows], samples >= 1.
Corpus generate_synthetic_corpus(std::size_t flows, std::size_t samples, Rng& rng);

std::string synthetic_flow_name(std::size_t flow);

// The pseudo-word filling (flow, slot, value); distinct for every triple and
// a Porter fixed point up to an injective remap.
std::string synthetic_slot_value(std::size_t flow, std::size_t slot, std::size_t value);

// Value index bundle b assigns to slot j.
std::size_t synthetic_bundle_value(std::size_t bundle, std::size_t slot);

// Every token any generated dialogue can contain, sorted and unique.
std::vector<std::string> synthetic_vocabulary();

// Deterministic embeddings covering synthetic_vocabulary(): values of the
// same slot share a group direction (pairwise cosine near 0.5); every other
// word gets its own quasi-orthogonal direction.
EmbeddingTable synthetic_embeddings(std::size_t dim = 10);

}  // namespace fop

#pragma once

#include "senti/corpus.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace senti::synthetic {

// Long-range dependency task. Every text holds the three marker tokens exactly
// once; the label is fixed by the marker in the first position, which sits at
// least `min_distance` tokens before the end. The other two markers and the
// filler words are placed uniformly, so bag-of-words features carry no signal.
struct LongRangeOptions {
    int min_distance = 40;
    int max_distance = 49;
    int filler_vocabulary = 20;
};

std::vector<RawRecord> long_range(std::size_t count, std::uint64_t seed, const LongRangeOptions& options = {});

// The marker word whose first-position occurrence selects `label`.
std::string long_range_marker(Label label);

// Keyword-separable task: each text mixes filler words with one keyword that
// determines its class. `per_class` examples for each of the three classes.
std::vector<RawRecord> keyword_separable(std::size_t per_class, std::uint64_t seed);

}  // namespace senti::synthetic

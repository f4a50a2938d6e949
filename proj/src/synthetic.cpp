#include "senti/synthetic.hpp"

#include "senti/random.hpp"

#include <array>

namespace senti::synthetic {

namespace {

std::string join(const std::vector<std::string>& words) {
    std::string out;
    for (const auto& w : words) {
        if (!out.empty()) out += ' ';
        out += w;
    }
    return out;
}

}  // namespace

std::string long_range_marker(Label label) {
    static const std::array<std::string, kNumClasses> kMarkers{"alpha", "beta", "gamma"};
    return kMarkers[label_index(label)];
}

std::vector<RawRecord> long_range(std::size_t count, std::uint64_t seed, const LongRangeOptions& options) {
    Rng rng(seed);
    std::vector<RawRecord> records;
    records.reserve(count);
    for (std::size_t n = 0; n < count; ++n) {
        const Label label = label_from_index(static_cast<int>(n % kNumClasses));
        const auto span = static_cast<std::uint64_t>(options.max_distance - options.min_distance + 1);
        // Tokens after the first: `distance` of them, so the key is exactly that far from the end.
        const int distance = options.min_distance + static_cast<int>(rng.below(span));
        std::vector<std::string> words;
        words.reserve(static_cast<std::size_t>(distance) + 1);
        words.push_back(long_range_marker(label));
        for (int k = 0; k < distance; ++k) {
            words.push_back("w" + std::to_string(rng.below(static_cast<std::uint64_t>(options.filler_vocabulary))));
        }
        // The other two markers go to distinct filler positions.
        std::uint64_t taken = 0;
        for (int c = 0; c < kNumClasses; ++c) {
            if (c == label_index(label)) continue;
            std::uint64_t pos = 1 + rng.below(static_cast<std::uint64_t>(distance));
            while (pos == taken) pos = 1 + rng.below(static_cast<std::uint64_t>(distance));
            taken = pos;
            words[pos] = long_range_marker(label_from_index(c));
        }
        records.push_back({join(words), label});
    }
    return records;
}

std::vector<RawRecord> keyword_separable(std::size_t per_class, std::uint64_t seed) {
    static const std::array<std::string, kNumClasses> kKeywords{"terrible", "okay", "wonderful"};
    static const std::array<std::string, 8> kFiller{"the", "movie", "was", "really", "plot", "actors", "today",
                                                    "story"};
    Rng rng(seed);
    std::vector<RawRecord> records;
    for (std::size_t n = 0; n < per_class; ++n) {
        for (int c = 0; c < kNumClasses; ++c) {
            const auto length = 3 + rng.below(5);
            std::vector<std::string> words;
            for (std::uint64_t k = 0; k < length; ++k) words.push_back(kFiller[rng.below(kFiller.size())]);
            words.insert(words.begin() + static_cast<std::ptrdiff_t>(rng.below(words.size() + 1)), kKeywords[c]);
            records.push_back({join(words), label_from_index(c)});
        }
    }
    return records;
}

}  // namespace senti::synthetic

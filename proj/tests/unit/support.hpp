#pragma once

#include "senti/corpus.hpp"
#include "senti/embedding.hpp"
#include "senti/linalg.hpp"
#include "senti/nnet.hpp"
#include "senti/random.hpp"
#include "senti/synthetic.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unistd.h>
#include <vector>

namespace senti::testing {

// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("senti-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline double relative_error(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

inline Vector random_vector(Rng& rng, Eigen::Index n, double scale = 1.0) {
    Vector v(n);
    for (Eigen::Index k = 0; k < n; ++k) v(k) = rng.uniform(-scale, scale);
    return v;
}

inline Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
    Matrix m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.uniform(-scale, scale);
    }
    return m;
}

// Every tensor filled uniformly in [-scale, scale].
template <class Params>
void randomize(Params& params, Rng& rng, double scale) {
    for (auto t : params.tensors()) {
        for (double& x : t.values) x = rng.uniform(-scale, scale);
    }
}

// A vocabulary with `tokens` distinct entries t0, t1, ... of decreasing frequency.
inline Vocabulary synthetic_vocab(int tokens) {
    std::vector<std::vector<std::string>> corpus(1);
    for (int t = 0; t < tokens; ++t) {
        for (int k = 0; k < tokens - t; ++k) corpus[0].push_back("t" + std::to_string(1000 + t));
    }
    return Vocabulary::build(corpus, 1);
}

inline EmbeddingMatrix random_embedding_for(const Vocabulary& vocab, int dim, Rng& rng, double scale = 0.5) {
    return random_embedding(vocab, dim, scale, rng);
}

// A sequence of `length` non-pad indices drawn from [1, rows).
inline std::vector<std::int32_t> random_tokens(Rng& rng, std::size_t length, std::size_t rows) {
    std::vector<std::int32_t> out(length);
    for (auto& x : out) x = static_cast<std::int32_t>(1 + rng.below(rows - 1));
    return out;
}

inline Label random_label(Rng& rng) { return label_from_index(static_cast<int>(rng.below(kNumClasses))); }

// Random printable text mixing ASCII, CJK, full-width punctuation, URLs,
// topics, mentions and odd whitespace.
inline std::string random_noisy_text(Rng& rng, std::size_t pieces) {
    static const std::vector<std::string> alphabet = {
        "a", "b", "z", "Q", "7", " ", "  ", "\t", "\n", "!", "?", ".", ",", "'", "\"", "-", "_", "(", ")",
        "#", "@", "http://", "https://", "www.", "/", ":", "很", "好", "不", "，", "。", "！", "？", "、",
        "【", "】", "《", "》", "＃", "＠", "　", " ", "é", "ß", "😀", "…", "—", "t.cn/x", "~", "%",
    };
    std::string out;
    for (std::size_t k = 0; k < pieces; ++k) out += alphabet[rng.below(alphabet.size())];
    return out;
}

struct EncodedCorpus {
    Vocabulary vocab;
    std::vector<EncodedExample> examples;
};

// Cleans, whitespace-tokenizes and encodes `records` against a vocabulary built from them.
inline EncodedCorpus encode_records(std::span<const RawRecord> records, int min_count, int maxlen) {
    std::vector<std::vector<std::string>> tokens;
    for (const auto& r : records) tokens.push_back(tokenize(clean_text(r.text), TokenizerMode::whitespace));
    EncodedCorpus out{Vocabulary::build(tokens, min_count), {}};
    for (std::size_t k = 0; k < records.size(); ++k) {
        out.examples.push_back(encode_example(tokens[k], records[k].label, out.vocab, maxlen));
    }
    return out;
}

// The 30-example keyword-separable corpus used by the overfit checks.
inline EncodedCorpus keyword_toy(int maxlen = 12) {
    return encode_records(synthetic::keyword_separable(10, 7), 1, maxlen);
}

}  // namespace senti::testing

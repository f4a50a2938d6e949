#pragma once

#include "senti/binary_io.hpp"
#include "senti/corpus.hpp"
#include "senti/linalg.hpp"
#include "senti/random.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace senti {

struct EmbeddingConfig {
    int dim = 100;
    int window = 7;
    int min_count = 10;
    int iterations = 10;
    int negatives = 5;
    double learning_rate = 0.025;
    std::uint64_t seed = 1;
    // Per-center window drawn uniformly from [1, window]; false uses `window` as is.
    bool dynamic_window = true;

    void validate() const;
};

// (|V|+2) x dim word vectors. Row 0 (padding) is all zero.
struct EmbeddingMatrix {
    RowMatrix rows;
    Digest vocab_fingerprint{};

    int dim() const { return static_cast<int>(rows.cols()); }
    std::size_t row_count() const { return static_cast<std::size_t>(rows.rows()); }
    // Throws NumericError on non-finite entries, Error on a nonzero pad row.
    void validate() const;
};

using Corpus = std::vector<std::vector<std::int32_t>>;

// Visits (center, context) pairs of the skip-gram window in corpus order.
// Padding and unknown indices are dropped from each sentence before windowing.
void for_each_pair(std::span<const std::vector<std::int32_t>> corpus, int window, bool dynamic,
                   Rng& rng, const std::function<void(std::int32_t, std::int32_t)>& visit);

std::vector<std::pair<std::int32_t, std::int32_t>> generate_pairs(
    std::span<const std::vector<std::int32_t>> corpus, int window, std::uint64_t seed,
    bool dynamic = true);

struct SgnsGradient {
    double loss = 0.0;
    Vector center;
    Vector context;
    std::vector<Vector> negatives;
};

// Loss and gradients of
//   -log sigmoid(context . center) - sum_n log sigmoid(-negative_n . center)
// with respect to every vector involved.
SgnsGradient sgns_gradient(const Eigen::Ref<const Vector>& center,
                           const Eigen::Ref<const Vector>& context,
                           std::span<const Vector> negatives);

// Draws token indices (never pad or unk) with probability proportional to frequency^0.75.
class NegativeSampler {
public:
    static constexpr double kPower = 0.75;

    explicit NegativeSampler(const Vocabulary& vocab);

    std::int32_t sample(Rng& rng) const;
    // Probability of drawing `index`.
    double probability(std::int32_t index) const;

private:
    std::vector<double> cumulative_;  // over corpus-token indices, last entry 1
};

EmbeddingMatrix train_skipgram(std::span<const std::vector<std::int32_t>> corpus,
                               const EmbeddingConfig& config, const Vocabulary& vocab);

// Uniform in [-scale, scale] for token rows, zero pad row, fingerprint of `vocab`.
EmbeddingMatrix random_embedding(const Vocabulary& vocab, int dim, double scale, Rng& rng);

// Binary format: "SENTI-EMB\0", u32 version, u32 rows, u32 dim, 32-byte vocab
// fingerprint, then rows*dim little-endian float32 values in row-major order.
inline constexpr std::uint32_t kEmbeddingFormatVersion = 1;

std::vector<std::uint8_t> serialize_embeddings(const EmbeddingMatrix& matrix);
EmbeddingMatrix parse_embeddings(std::span<const std::uint8_t> bytes,
                                 const std::optional<Digest>& expected_vocab = std::nullopt);
void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& matrix);
EmbeddingMatrix load_embeddings(const std::filesystem::path& path,
                                const std::optional<Digest>& expected_vocab = std::nullopt);

}  // namespace senti

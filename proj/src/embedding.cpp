#include "senti/embedding.hpp"

#include "senti/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace senti {

namespace {

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// log(sigmoid(x)), stable for large |x|.
double log_sigmoid(double x) {
    return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

std::vector<std::int32_t> content_tokens(std::span<const std::int32_t> sentence) {
    std::vector<std::int32_t> out;
    out.reserve(sentence.size());
    for (auto idx : sentence) {
        if (idx >= Vocabulary::num_reserved) out.push_back(idx);
    }
    return out;
}

template <class OnCenter, class OnPair>
void walk_pairs(std::span<const std::vector<std::int32_t>> corpus, int window, bool dynamic, Rng& rng,
                OnCenter&& on_center, OnPair&& on_pair) {
    for (const auto& raw : corpus) {
        const auto sentence = content_tokens(raw);
        const auto n = static_cast<std::ptrdiff_t>(sentence.size());
        for (std::ptrdiff_t p = 0; p < n; ++p) {
            const auto w = dynamic ? static_cast<std::ptrdiff_t>(1 + rng.below(static_cast<std::uint64_t>(window)))
                                   : static_cast<std::ptrdiff_t>(window);
            on_center();
            for (std::ptrdiff_t q = std::max<std::ptrdiff_t>(0, p - w); q <= std::min(n - 1, p + w); ++q) {
                if (q != p) on_pair(sentence[static_cast<std::size_t>(p)], sentence[static_cast<std::size_t>(q)]);
            }
        }
    }
}

std::size_t count_centers(std::span<const std::vector<std::int32_t>> corpus) {
    std::size_t total = 0;
    for (const auto& s : corpus) {
        for (auto idx : s) total += idx >= Vocabulary::num_reserved ? 1 : 0;
    }
    return total;
}

}  // namespace

void EmbeddingConfig::validate() const {
    if (dim < 1) throw Error("embedding dim must be >= 1");
    if (window < 1) throw Error("embedding window must be >= 1");
    if (iterations < 1) throw Error("embedding iterations must be >= 1");
    if (negatives < 0) throw Error("embedding negatives must be >= 0");
    if (min_count < 1) throw Error("embedding min_count must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw Error("embedding learning_rate must be positive");
    }
}

void EmbeddingMatrix::validate() const {
    if (!rows.allFinite()) throw NumericError("embedding matrix has non-finite entries");
    if (rows.rows() < Vocabulary::num_reserved) throw Error("embedding matrix lacks reserved rows");
    if (!rows.row(Vocabulary::pad_index).isZero(0.0)) throw Error("embedding pad row must be zero");
}

void for_each_pair(std::span<const std::vector<std::int32_t>> corpus, int window, bool dynamic,
                   Rng& rng, const std::function<void(std::int32_t, std::int32_t)>& visit) {
    if (window < 1) throw Error("window must be >= 1");
    walk_pairs(corpus, window, dynamic, rng, [] {}, visit);
}

std::vector<std::pair<std::int32_t, std::int32_t>> generate_pairs(
    std::span<const std::vector<std::int32_t>> corpus, int window, std::uint64_t seed, bool dynamic) {
    std::vector<std::pair<std::int32_t, std::int32_t>> pairs;
    Rng rng = Rng::derive(seed, streams::embedding_windows);
    for_each_pair(corpus, window, dynamic, rng,
                  [&](std::int32_t c, std::int32_t x) { pairs.emplace_back(c, x); });
    return pairs;
}

SgnsGradient sgns_gradient(const Eigen::Ref<const Vector>& center, const Eigen::Ref<const Vector>& context,
                           std::span<const Vector> negatives) {
    if (center.size() != context.size()) throw Error("sgns vectors must share a dimension");
    SgnsGradient g;
    const double pos_score = context.dot(center);
    const double pos_coef = sigmoid(pos_score) - 1.0;
    g.loss = -log_sigmoid(pos_score);
    g.center = pos_coef * context;
    g.context = pos_coef * center;
    g.negatives.reserve(negatives.size());
    for (const auto& neg : negatives) {
        if (neg.size() != center.size()) throw Error("sgns vectors must share a dimension");
        const double score = neg.dot(center);
        const double coef = sigmoid(score);
        g.loss -= log_sigmoid(-score);
        g.center += coef * neg;
        g.negatives.push_back(coef * center);
    }
    return g;
}

NegativeSampler::NegativeSampler(const Vocabulary& vocab) {
    const auto n = vocab.token_count();
    if (n == 0) throw Error("negative sampler needs at least one token");
    cumulative_.resize(n);
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        total += std::pow(static_cast<double>(
                              vocab.frequency_at(static_cast<std::int32_t>(k) + Vocabulary::num_reserved)),
                          kPower);
        cumulative_[k] = total;
    }
    for (double& c : cumulative_) c /= total;
    cumulative_.back() = 1.0;
}

std::int32_t NegativeSampler::sample(Rng& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    const auto k = std::min<std::ptrdiff_t>(it - cumulative_.begin(),
                                            static_cast<std::ptrdiff_t>(cumulative_.size()) - 1);
    return static_cast<std::int32_t>(k) + Vocabulary::num_reserved;
}

double NegativeSampler::probability(std::int32_t index) const {
    const auto k = index - Vocabulary::num_reserved;
    if (k < 0 || static_cast<std::size_t>(k) >= cumulative_.size()) return 0.0;
    return cumulative_[static_cast<std::size_t>(k)] - (k == 0 ? 0.0 : cumulative_[static_cast<std::size_t>(k) - 1]);
}

EmbeddingMatrix train_skipgram(std::span<const std::vector<std::int32_t>> corpus,
                               const EmbeddingConfig& config, const Vocabulary& vocab) {
    config.validate();
    if (vocab.token_count() < 2) {
        throw Error("vocabulary too small for embedding training (needs >= 2 corpus tokens)");
    }
    const auto rows = static_cast<Eigen::Index>(vocab.size());
    const int dim = config.dim;
    for (const auto& s : corpus) {
        for (auto idx : s) {
            if (idx < 0 || idx >= rows) throw Error("corpus index outside the vocabulary");
        }
    }

    Rng init_rng = Rng::derive(config.seed, streams::embedding_init);
    RowMatrix input = RowMatrix::Zero(rows, dim);
    for (Eigen::Index r = Vocabulary::num_reserved; r < rows; ++r) {
        for (int c = 0; c < dim; ++c) input(r, c) = init_rng.uniform(-0.5, 0.5) / dim;
    }
    RowMatrix output = RowMatrix::Zero(rows, dim);

    NegativeSampler sampler(vocab);
    Rng window_rng = Rng::derive(config.seed, streams::embedding_windows);
    Rng negative_rng = Rng::derive(config.seed, streams::embedding_negatives);

    const double total_centers =
        static_cast<double>(count_centers(corpus)) * static_cast<double>(config.iterations);
    double centers_done = 0.0;
    double lr = config.learning_rate;
    std::size_t step = 0;

    Vector center_grad(dim);
    std::vector<std::int32_t> targets;
    std::vector<double> coefs;

    for (int iteration = 0; iteration < config.iterations; ++iteration) {
        walk_pairs(
            corpus, config.window, config.dynamic_window, window_rng,
            [&] {
                lr = config.learning_rate * (1.0 - 0.9 * centers_done / std::max(1.0, total_centers));
                centers_done += 1.0;
            },
            [&](std::int32_t center, std::int32_t context) {
                ++step;
                targets.assign(1, context);
                for (int k = 0; k < config.negatives; ++k) {
                    const auto neg = sampler.sample(negative_rng);
                    if (neg != context) targets.push_back(neg);
                }
                // Coefficients from the current parameters, then apply every update:
                // this is one exact gradient step on the pair's loss.
                auto v = input.row(center);
                coefs.resize(targets.size());
                double loss = 0.0;
                for (std::size_t t = 0; t < targets.size(); ++t) {
                    const double score = output.row(targets[t]).dot(v);
                    if (t == 0) {
                        coefs[t] = sigmoid(score) - 1.0;
                        loss -= log_sigmoid(score);
                    } else {
                        coefs[t] = sigmoid(score);
                        loss -= log_sigmoid(-score);
                    }
                }
                if (!std::isfinite(loss)) {
                    throw NumericError("non-finite skip-gram loss at iteration " + std::to_string(iteration) +
                                       ", step " + std::to_string(step));
                }
                center_grad.setZero();
                for (std::size_t t = 0; t < targets.size(); ++t) {
                    center_grad += coefs[t] * output.row(targets[t]).transpose();
                }
                for (std::size_t t = 0; t < targets.size(); ++t) {
                    output.row(targets[t]) -= (lr * coefs[t]) * v;
                }
                v -= lr * center_grad.transpose();
            });
    }

    // The unknown token never takes part in pairs; give it the centroid of the real tokens.
    input.row(Vocabulary::unk_index) =
        input.bottomRows(rows - Vocabulary::num_reserved).colwise().mean();
    input.row(Vocabulary::pad_index).setZero();

    EmbeddingMatrix result{std::move(input), vocab.fingerprint()};
    result.validate();
    return result;
}

EmbeddingMatrix random_embedding(const Vocabulary& vocab, int dim, double scale, Rng& rng) {
    if (dim < 1) throw Error("embedding dim must be >= 1");
    const auto rows = static_cast<Eigen::Index>(vocab.size());
    RowMatrix m = RowMatrix::Zero(rows, dim);
    for (Eigen::Index r = 1; r < rows; ++r) {
        for (int c = 0; c < dim; ++c) m(r, c) = rng.uniform(-scale, scale);
    }
    return EmbeddingMatrix{std::move(m), vocab.fingerprint()};
}

namespace {
constexpr std::string_view kEmbeddingMagic{"SENTI-EMB\0", 10};
}

std::vector<std::uint8_t> serialize_embeddings(const EmbeddingMatrix& matrix) {
    matrix.validate();
    ByteWriter w;
    w.raw(kEmbeddingMagic);
    w.u32(kEmbeddingFormatVersion);
    w.u32(static_cast<std::uint32_t>(matrix.rows.rows()));
    w.u32(static_cast<std::uint32_t>(matrix.rows.cols()));
    w.digest(matrix.vocab_fingerprint);
    for (double x : flat(matrix.rows)) w.f32(static_cast<float>(x));
    return w.take();
}

EmbeddingMatrix parse_embeddings(std::span<const std::uint8_t> bytes, const std::optional<Digest>& expected_vocab) {
    ByteReader r(bytes);
    r.expect(kEmbeddingMagic, "embedding");
    const auto version = r.u32();
    if (version != kEmbeddingFormatVersion) {
        throw UnsupportedVersionError("unsupported embedding file version " + std::to_string(version));
    }
    const auto rows = r.u32();
    const auto dim = r.u32();
    EmbeddingMatrix m;
    m.vocab_fingerprint = r.digest();
    if (static_cast<std::uint64_t>(rows) * dim * 4 != r.remaining()) {
        throw FormatError("embedding payload size does not match header (" + std::to_string(rows) + " x " +
                          std::to_string(dim) + ")");
    }
    if (expected_vocab && *expected_vocab != m.vocab_fingerprint) {
        throw FormatError("embedding vocabulary fingerprint mismatch");
    }
    m.rows.resize(rows, dim);
    for (double& x : flat(m.rows)) x = static_cast<double>(r.f32());
    m.validate();
    return m;
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& matrix) {
    write_file_bytes(path, serialize_embeddings(matrix));
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path, const std::optional<Digest>& expected_vocab) {
    return parse_embeddings(read_file_bytes(path), expected_vocab);
}

}  // namespace senti

#pragma once

#include "senti/corpus.hpp"
#include "senti/embedding.hpp"
#include "senti/eval.hpp"
#include "senti/nnet.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace senti {

enum class OptimizerKind { sgd, adam };

std::string_view optimizer_name(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view name);

struct TrainConfig {
    int epochs = 4;
    int batch_size = 32;
    OptimizerKind optimizer = OptimizerKind::adam;
    // Unset means the optimizer default: 1e-3 for Adam, 0.1 for SGD.
    std::optional<double> learning_rate;
    std::uint64_t seed = 1;
    bool shuffle = true;
    std::optional<double> clip_norm = 5.0;
    bool train_embedding = true;

    double effective_learning_rate() const;
    void validate() const;
};

struct AdamHyper {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamMoments {
    std::vector<double> first;
    std::vector<double> second;

    explicit AdamMoments(std::size_t n = 0) : first(n, 0.0), second(n, 0.0) {}
};

// One bias-corrected Adam update; `step` counts from 1.
void adam_update(std::span<double> param, std::span<const double> grad, AdamMoments& moments,
                 std::int64_t step, const AdamHyper& hyper);

// Scales every tensor so the global L2 norm is at most `max_norm`.
// Returns the norm before clipping.
double clip_global_norm(std::span<const std::span<double>> tensors, double max_norm);

// Example order for one epoch: identity without shuffling, otherwise a
// permutation drawn from `rng`.
std::vector<std::size_t> epoch_order(std::size_t n, bool shuffle, Rng& rng);

struct EpochStats {
    double mean_loss = 0.0;
    double accuracy = 0.0;
    double seconds = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    std::int64_t steps = 0;
    std::optional<MetricsReport> evaluation;
};

template <class Params>
struct TrainResult {
    Params params;
    EmbeddingMatrix embedding;
    TrainReport report;
};

// Mini-batch training with gradients averaged over each batch in example order.
// When `eval_set` is non-empty, the report carries metrics on it after the last epoch.
template <class Params>
TrainResult<Params> train(std::span<const EncodedExample> train_set, const TrainConfig& config, Params params,
                          EmbeddingMatrix embedding, std::span<const EncodedExample> eval_set = {},
                          Averaging averaging = Averaging::macro);

template <class Params>
std::vector<Label> predict_all(const Params& params, const EmbeddingMatrix& embedding,
                               std::span<const EncodedExample> examples);

template <class Params>
MetricsReport evaluate(const Params& params, const EmbeddingMatrix& embedding,
                       std::span<const EncodedExample> examples, Averaging averaging = Averaging::macro);

}  // namespace senti

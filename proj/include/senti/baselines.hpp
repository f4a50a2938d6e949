#pragma once

#include "senti/corpus.hpp"
#include "senti/linalg.hpp"
#include "senti/train.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace senti {

// Sorted (feature index, value) pairs.
using SparseVector = std::vector<std::pair<std::int32_t, double>>;

enum class TfidfNorm { l2, none };

// Smoothed TF-IDF over the vocabulary index space:
//   idf_t = ln((1 + N) / (1 + df_t)) + 1
//   tf    = raw count, or 1 + ln(count) when sublinear_tf
// Padding is never a feature.
struct TfidfModel {
    std::size_t num_features = 0;
    std::size_t num_documents = 0;
    Vector idf;
    bool sublinear_tf = false;
    TfidfNorm norm = TfidfNorm::l2;
};

TfidfModel tfidf_fit(std::span<const std::vector<std::int32_t>> documents, std::size_t num_features,
                     bool sublinear_tf = false, TfidfNorm norm = TfidfNorm::l2);
SparseVector tfidf_transform(const TfidfModel& model, std::span<const std::int32_t> document);

// Multinomial naive Bayes with additive smoothing over token counts.
struct NaiveBayesModel {
    Vector log_prior;      // per class; -inf for classes absent from training
    Matrix log_likelihood;  // classes x features
    double alpha = 1.0;
};

NaiveBayesModel nb_fit(std::span<const EncodedExample> examples, std::size_t num_features, double alpha = 1.0);
// log P(class) + sum_t count_t * log P(t | class), per class.
Vector nb_log_joint(const NaiveBayesModel& model, std::span<const std::int32_t> document);
Vector nb_posterior(const NaiveBayesModel& model, std::span<const std::int32_t> document);
// argmax of the joint; ties go to the lowest class index.
Label nb_predict(const NaiveBayesModel& model, std::span<const std::int32_t> document);

struct LogisticConfig {
    double l2 = 1e-4;
    double learning_rate = 1.0;
    int iterations = 300;
};

// Softmax regression on sparse features.
struct LogisticModel {
    Matrix weights;  // classes x features
    Vector bias;
    double l2 = 0.0;
};

struct LogisticObjective {
    double value = 0.0;
    Matrix grad_weights;
    Vector grad_bias;
};

// Mean cross-entropy plus (l2 / 2) * ||weights||^2, and its gradient.
LogisticObjective logreg_objective(const LogisticModel& model, std::span<const SparseVector> features,
                                   std::span<const Label> labels);
Vector logreg_probabilities(const LogisticModel& model, const SparseVector& features);
Label logreg_predict(const LogisticModel& model, const SparseVector& features);
// Full-batch gradient descent from zero weights. `trace`, when given, receives
// the objective before every step.
LogisticModel logreg_fit(std::span<const SparseVector> features, std::span<const Label> labels,
                         std::size_t num_features, const LogisticConfig& config,
                         std::vector<double>* trace = nullptr);

// The recurrent classifier pipeline with the vanilla RNN cell in place of the LSTM.
TrainResult<RnnParams> rnn_classifier_train(std::span<const EncodedExample> train_set, const TrainConfig& config,
                                            int hidden, EmbeddingMatrix embedding,
                                            std::span<const EncodedExample> eval_set = {},
                                            Averaging averaging = Averaging::macro);
TrainResult<LstmParams> lstm_classifier_train(std::span<const EncodedExample> train_set, const TrainConfig& config,
                                              int hidden, EmbeddingMatrix embedding,
                                              std::span<const EncodedExample> eval_set = {},
                                              Averaging averaging = Averaging::macro);

}  // namespace senti

#include "senti/baselines.hpp"

#include "senti/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace senti {

namespace {

std::map<std::int32_t, std::int64_t> count_tokens(std::span<const std::int32_t> document, std::size_t num_features) {
    std::map<std::int32_t, std::int64_t> counts;
    for (auto idx : document) {
        if (idx == Vocabulary::pad_index) continue;
        if (idx < 0 || static_cast<std::size_t>(idx) >= num_features) {
            throw Error("token index " + std::to_string(idx) + " outside the feature space");
        }
        ++counts[idx];
    }
    return counts;
}

Label argmax_lowest(const Vector& scores) {
    int best = 0;
    for (int k = 1; k < scores.size(); ++k) {
        if (scores[k] > scores[best]) best = k;
    }
    return label_from_index(best);
}

}  // namespace

TfidfModel tfidf_fit(std::span<const std::vector<std::int32_t>> documents, std::size_t num_features,
                     bool sublinear_tf, TfidfNorm norm) {
    TfidfModel model;
    model.num_features = num_features;
    model.num_documents = documents.size();
    model.sublinear_tf = sublinear_tf;
    model.norm = norm;
    std::vector<std::int64_t> df(num_features, 0);
    for (const auto& doc : documents) {
        for (const auto& [idx, n] : count_tokens(doc, num_features)) ++df[static_cast<std::size_t>(idx)];
    }
    model.idf.resize(static_cast<Eigen::Index>(num_features));
    const double n_docs = static_cast<double>(documents.size());
    for (std::size_t t = 0; t < num_features; ++t) {
        model.idf[static_cast<Eigen::Index>(t)] = std::log((1.0 + n_docs) / (1.0 + static_cast<double>(df[t]))) + 1.0;
    }
    return model;
}

SparseVector tfidf_transform(const TfidfModel& model, std::span<const std::int32_t> document) {
    SparseVector out;
    double sq = 0.0;
    for (const auto& [idx, n] : count_tokens(document, model.num_features)) {
        const double tf = model.sublinear_tf ? 1.0 + std::log(static_cast<double>(n)) : static_cast<double>(n);
        const double value = tf * model.idf[idx];
        out.emplace_back(idx, value);
        sq += value * value;
    }
    if (model.norm == TfidfNorm::l2 && sq > 0.0) {
        const double inv = 1.0 / std::sqrt(sq);
        for (auto& entry : out) entry.second *= inv;
    }
    return out;
}

NaiveBayesModel nb_fit(std::span<const EncodedExample> examples, std::size_t num_features, double alpha) {
    if (!(alpha > 0.0)) throw Error("naive Bayes alpha must be positive");
    if (examples.empty()) throw Error("naive Bayes needs at least one training example");
    Matrix counts = Matrix::Zero(kNumClasses, static_cast<Eigen::Index>(num_features));
    std::array<double, kNumClasses> docs{};
    for (const auto& ex : examples) {
        const int c = label_index(ex.label);
        docs[c] += 1.0;
        for (const auto& [idx, n] : count_tokens(ex.indices, num_features)) {
            counts(c, idx) += static_cast<double>(n);
        }
    }
    NaiveBayesModel model;
    model.alpha = alpha;
    model.log_prior.resize(kNumClasses);
    model.log_likelihood.resize(kNumClasses, static_cast<Eigen::Index>(num_features));
    const double n = static_cast<double>(examples.size());
    for (int c = 0; c < kNumClasses; ++c) {
        model.log_prior[c] = docs[c] > 0 ? std::log(docs[c] / n) : -std::numeric_limits<double>::infinity();
        const double denom = counts.row(c).sum() + alpha * static_cast<double>(num_features);
        for (Eigen::Index t = 0; t < counts.cols(); ++t) {
            model.log_likelihood(c, t) = std::log((counts(c, t) + alpha) / denom);
        }
    }
    return model;
}

Vector nb_log_joint(const NaiveBayesModel& model, std::span<const std::int32_t> document) {
    Vector joint = model.log_prior;
    const auto counts = count_tokens(document, static_cast<std::size_t>(model.log_likelihood.cols()));
    for (int c = 0; c < kNumClasses; ++c) {
        if (!std::isfinite(joint[c])) continue;
        for (const auto& [idx, n] : counts) joint[c] += static_cast<double>(n) * model.log_likelihood(c, idx);
    }
    return joint;
}

Vector nb_posterior(const NaiveBayesModel& model, std::span<const std::int32_t> document) {
    const Vector joint = nb_log_joint(model, document);
    const double m = joint.maxCoeff();
    Vector p = (joint.array() - m).exp();
    return p / p.sum();
}

Label nb_predict(const NaiveBayesModel& model, std::span<const std::int32_t> document) {
    return argmax_lowest(nb_log_joint(model, document));
}

namespace {

Vector logits_of(const LogisticModel& model, const SparseVector& x) {
    Vector z = model.bias;
    for (const auto& [idx, value] : x) z += value * model.weights.col(idx);
    return z;
}

}  // namespace

Vector logreg_probabilities(const LogisticModel& model, const SparseVector& features) {
    return softmax(logits_of(model, features));
}

Label logreg_predict(const LogisticModel& model, const SparseVector& features) {
    return argmax_lowest(logits_of(model, features));
}

LogisticObjective logreg_objective(const LogisticModel& model, std::span<const SparseVector> features,
                                   std::span<const Label> labels) {
    if (features.size() != labels.size()) throw Error("logistic regression: features and labels differ in count");
    if (features.empty()) throw Error("logistic regression needs at least one example");
    LogisticObjective obj;
    obj.grad_weights = Matrix::Zero(model.weights.rows(), model.weights.cols());
    obj.grad_bias = Vector::Zero(model.bias.size());
    const double inv_n = 1.0 / static_cast<double>(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
        const Vector z = logits_of(model, features[i]);
        obj.value += cross_entropy(z, labels[i]) * inv_n;
        Vector d = softmax(z);
        d[label_index(labels[i])] -= 1.0;
        d *= inv_n;
        obj.grad_bias += d;
        for (const auto& [idx, value] : features[i]) obj.grad_weights.col(idx) += value * d;
    }
    obj.value += 0.5 * model.l2 * model.weights.squaredNorm();
    obj.grad_weights += model.l2 * model.weights;
    return obj;
}

LogisticModel logreg_fit(std::span<const SparseVector> features, std::span<const Label> labels,
                         std::size_t num_features, const LogisticConfig& config, std::vector<double>* trace) {
    if (config.l2 < 0.0) throw Error("l2 penalty must be nonnegative");
    if (!(config.learning_rate > 0.0)) throw Error("logistic learning_rate must be positive");
    LogisticModel model;
    model.weights = Matrix::Zero(kNumClasses, static_cast<Eigen::Index>(num_features));
    model.bias = Vector::Zero(kNumClasses);
    model.l2 = config.l2;
    for (int it = 0; it < config.iterations; ++it) {
        const auto obj = logreg_objective(model, features, labels);
        if (!std::isfinite(obj.value)) {
            throw NumericError("non-finite logistic objective at iteration " + std::to_string(it));
        }
        if (trace) trace->push_back(obj.value);
        model.weights -= config.learning_rate * obj.grad_weights;
        model.bias -= config.learning_rate * obj.grad_bias;
    }
    return model;
}

TrainResult<RnnParams> rnn_classifier_train(std::span<const EncodedExample> train_set, const TrainConfig& config,
                                            int hidden, EmbeddingMatrix embedding,
                                            std::span<const EncodedExample> eval_set, Averaging averaging) {
    Rng rng = Rng::derive(config.seed, streams::model_init);
    auto params = RnnParams::initialized(hidden, embedding.dim(), rng);
    return train(train_set, config, std::move(params), std::move(embedding), eval_set, averaging);
}

TrainResult<LstmParams> lstm_classifier_train(std::span<const EncodedExample> train_set, const TrainConfig& config,
                                              int hidden, EmbeddingMatrix embedding,
                                              std::span<const EncodedExample> eval_set, Averaging averaging) {
    Rng rng = Rng::derive(config.seed, streams::model_init);
    auto params = LstmParams::initialized(hidden, embedding.dim(), rng);
    return train(train_set, config, std::move(params), std::move(embedding), eval_set, averaging);
}

}  // namespace senti

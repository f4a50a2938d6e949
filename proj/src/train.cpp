#include "senti/train.hpp"

#include "senti/error.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

namespace senti {

std::string_view optimizer_name(OptimizerKind kind) { return kind == OptimizerKind::adam ? "adam" : "sgd"; }

OptimizerKind parse_optimizer(std::string_view name) {
    if (name == "adam") return OptimizerKind::adam;
    if (name == "sgd") return OptimizerKind::sgd;
    throw Error("unknown optimizer '" + std::string(name) + "'");
}

double TrainConfig::effective_learning_rate() const {
    if (learning_rate) return *learning_rate;
    return optimizer == OptimizerKind::adam ? 1e-3 : 0.1;
}

void TrainConfig::validate() const {
    if (epochs < 1) throw Error("epochs must be >= 1");
    if (batch_size < 1) throw Error("batch_size must be >= 1");
    const double lr = effective_learning_rate();
    if (!(lr > 0.0) || !std::isfinite(lr)) throw Error("learning_rate must be positive");
    if (clip_norm && !(*clip_norm > 0.0)) throw Error("clip_norm must be positive");
}

void adam_update(std::span<double> param, std::span<const double> grad, AdamMoments& moments, std::int64_t step,
                 const AdamHyper& hyper) {
    if (param.size() != grad.size() || moments.first.size() != param.size() ||
        moments.second.size() != param.size()) {
        throw Error("adam_update: parameter, gradient and moment sizes differ");
    }
    if (step < 1) throw Error("adam_update: step counts from 1");
    const double correction1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(step));
    const double correction2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(step));
    for (std::size_t k = 0; k < param.size(); ++k) {
        double& m = moments.first[k];
        double& v = moments.second[k];
        m = hyper.beta1 * m + (1.0 - hyper.beta1) * grad[k];
        v = hyper.beta2 * v + (1.0 - hyper.beta2) * grad[k] * grad[k];
        const double m_hat = m / correction1;
        const double v_hat = v / correction2;
        param[k] -= hyper.learning_rate * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
    }
}

double clip_global_norm(std::span<const std::span<double>> tensors, double max_norm) {
    double sq = 0.0;
    for (auto t : tensors) {
        for (double x : t) sq += x * x;
    }
    const double norm = std::sqrt(sq);
    if (norm > max_norm) {
        const double scale = max_norm / norm;
        for (auto t : tensors) {
            for (double& x : t) x *= scale;
        }
    }
    return norm;
}

std::vector<std::size_t> epoch_order(std::size_t n, bool shuffle, Rng& rng) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (shuffle) rng.shuffle(std::span<std::size_t>(order));
    return order;
}

namespace {

template <class Params>
void accumulate(Gradients<Params>& total, const Gradients<Params>& g) {
    auto dst = total.params.tensors();
    const auto src = g.params.tensors();
    for (std::size_t t = 0; t < dst.size(); ++t) {
        for (std::size_t k = 0; k < dst[t].values.size(); ++k) dst[t].values[k] += src[t].values[k];
    }
    for (const auto& [row, grad] : g.embedding_rows) {
        auto [it, inserted] = total.embedding_rows.try_emplace(row, grad);
        if (!inserted) it->second += grad;
    }
    total.loss += g.loss;
}

template <class Params>
void scale(Gradients<Params>& g, double factor) {
    for (auto t : g.params.tensors()) {
        for (double& x : t.values) x *= factor;
    }
    for (auto& [row, grad] : g.embedding_rows) grad *= factor;
}

template <class Params>
Gradients<Params> zero_gradients(const Params& params) {
    Gradients<Params> g;
    g.params = Params::zeros(params.hidden, params.input, params.classes);
    return g;
}

template <class Params>
Label argmax_label(const Vector& probabilities) {
    Eigen::Index best = 0;
    probabilities.maxCoeff(&best);
    return label_from_index(static_cast<int>(best));
}

}  // namespace

template <class Params>
TrainResult<Params> train(std::span<const EncodedExample> train_set, const TrainConfig& config, Params params,
                          EmbeddingMatrix embedding, std::span<const EncodedExample> eval_set, Averaging averaging) {
    config.validate();
    params.check_shapes();
    if (train_set.empty()) throw Error("training set is empty");
    if (embedding.dim() != params.input) throw Error("embedding dim does not match the model input size");

    const double lr = config.effective_learning_rate();
    const AdamHyper hyper{lr};

    std::vector<AdamMoments> param_moments;
    for (const auto& t : params.tensors()) param_moments.emplace_back(t.values.size());
    AdamMoments embedding_moments(config.train_embedding && config.optimizer == OptimizerKind::adam
                                      ? static_cast<std::size_t>(embedding.rows.size())
                                      : 0);
    RowMatrix dense_embedding_grad;

    Rng shuffle_rng = Rng::derive(config.seed, streams::shuffle);
    TrainReport report;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        const auto order = epoch_order(train_set.size(), config.shuffle, shuffle_rng);
        double loss_sum = 0.0;
        std::size_t correct = 0;

        for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
            Gradients<Params> batch = zero_gradients(params);
            try {
                for (std::size_t k = begin; k < end; ++k) {
                    const EncodedExample& ex = train_set[order[k]];
                    const auto trace = forward(params, embedding, ex.indices);
                    if (argmax_label<Params>(trace.probabilities) == ex.label) ++correct;
                    accumulate(batch, backward(trace, params, ex.label));
                }
            } catch (const NumericError& e) {
                throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(epoch + 1) + ", step " +
                                   std::to_string(report.steps + 1));
            }
            ++report.steps;
            if (!std::isfinite(batch.loss)) {
                throw NumericError("non-finite training loss at epoch " + std::to_string(epoch + 1) + ", step " +
                                   std::to_string(report.steps));
            }
            loss_sum += batch.loss;
            scale(batch, 1.0 / static_cast<double>(end - begin));
            if (!config.train_embedding) batch.embedding_rows.clear();

            if (config.clip_norm) {
                std::vector<std::span<double>> views;
                for (auto t : batch.params.tensors()) views.push_back(t.values);
                for (auto& [row, grad] : batch.embedding_rows) views.push_back(flat(grad));
                clip_global_norm(views, *config.clip_norm);
            }

            auto targets = params.tensors();
            const auto grads = batch.params.tensors();
            for (std::size_t t = 0; t < targets.size(); ++t) {
                if (config.optimizer == OptimizerKind::adam) {
                    adam_update(targets[t].values, grads[t].values, param_moments[t], report.steps, hyper);
                } else {
                    for (std::size_t k = 0; k < targets[t].values.size(); ++k) {
                        targets[t].values[k] -= lr * grads[t].values[k];
                    }
                }
            }
            if (config.train_embedding) {
                if (config.optimizer == OptimizerKind::adam) {
                    dense_embedding_grad.setZero(embedding.rows.rows(), embedding.rows.cols());
                    for (const auto& [row, grad] : batch.embedding_rows) {
                        dense_embedding_grad.row(row) = grad.transpose();
                    }
                    adam_update(flat(embedding.rows), flat(dense_embedding_grad), embedding_moments, report.steps,
                                hyper);
                } else {
                    for (const auto& [row, grad] : batch.embedding_rows) {
                        embedding.rows.row(row) -= lr * grad.transpose();
                    }
                }
            }
        }

        EpochStats stats;
        stats.mean_loss = loss_sum / static_cast<double>(train_set.size());
        stats.accuracy = static_cast<double>(correct) / static_cast<double>(train_set.size());
        stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        report.epochs.push_back(stats);
    }

    if (!eval_set.empty()) report.evaluation = evaluate(params, embedding, eval_set, averaging);
    return {std::move(params), std::move(embedding), std::move(report)};
}

template <class Params>
std::vector<Label> predict_all(const Params& params, const EmbeddingMatrix& embedding,
                               std::span<const EncodedExample> examples) {
    std::vector<Label> out;
    out.reserve(examples.size());
    for (const auto& ex : examples) out.push_back(predict(params, embedding, ex.indices));
    return out;
}

template <class Params>
MetricsReport evaluate(const Params& params, const EmbeddingMatrix& embedding,
                       std::span<const EncodedExample> examples, Averaging averaging) {
    std::vector<Label> actual;
    actual.reserve(examples.size());
    for (const auto& ex : examples) actual.push_back(ex.label);
    const auto predicted = predict_all(params, embedding, examples);
    return metrics(confusion(actual, predicted), averaging);
}

template TrainResult<LstmParams> train(std::span<const EncodedExample>, const TrainConfig&, LstmParams,
                                       EmbeddingMatrix, std::span<const EncodedExample>, Averaging);
template TrainResult<RnnParams> train(std::span<const EncodedExample>, const TrainConfig&, RnnParams,
                                      EmbeddingMatrix, std::span<const EncodedExample>, Averaging);
template std::vector<Label> predict_all(const LstmParams&, const EmbeddingMatrix&, std::span<const EncodedExample>);
template std::vector<Label> predict_all(const RnnParams&, const EmbeddingMatrix&, std::span<const EncodedExample>);
template MetricsReport evaluate(const LstmParams&, const EmbeddingMatrix&, std::span<const EncodedExample>,
                                Averaging);
template MetricsReport evaluate(const RnnParams&, const EmbeddingMatrix&, std::span<const EncodedExample>,
                                Averaging);

}  // namespace senti

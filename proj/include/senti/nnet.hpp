#pragma once

#include "senti/corpus.hpp"
#include "senti/embedding.hpp"
#include "senti/linalg.hpp"
#include "senti/random.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace senti {

enum class CellKind { lstm, rnn };

std::string_view cell_kind_name(CellKind kind);
CellKind parse_cell_kind(std::string_view name);

inline constexpr int kDefaultHidden = 50;

// A named view over one parameter tensor's storage (column-major).
struct TensorRef {
    std::string_view name;
    std::span<double> values;
    Eigen::Index rows;
    Eigen::Index cols;
};

struct ConstTensorRef {
    std::string_view name;
    std::span<const double> values;
    Eigen::Index rows;
    Eigen::Index cols;
};

// Gate weights act on the concatenation [h_{t-1}; x_t], so each is
// hidden x (hidden + input). The head maps the final hidden state to class logits.
struct LstmParams {
    int hidden = 0;
    int input = 0;
    int classes = kNumClasses;
    Matrix w_forget, w_input, w_candidate, w_output;
    Vector b_forget, b_input, b_candidate, b_output;
    Matrix head_w;
    Vector head_b;

    static constexpr CellKind kind = CellKind::lstm;

    static LstmParams zeros(int hidden, int input, int classes = kNumClasses);
    // Gate matrices uniform in +-1/sqrt(hidden + input), forget bias 1, everything else zero.
    static LstmParams initialized(int hidden, int input, Rng& rng, int classes = kNumClasses);

    // Tensors in storage order: W_f, b_f, W_i, b_i, W_c, b_c, W_o, b_o, head_W, head_b.
    std::vector<TensorRef> tensors();
    std::vector<ConstTensorRef> tensors() const;
    void check_shapes() const;
};

// Vanilla recurrence h_t = tanh(W [h_{t-1}; x_t] + b) with the same head.
struct RnnParams {
    int hidden = 0;
    int input = 0;
    int classes = kNumClasses;
    Matrix w;
    Vector b;
    Matrix head_w;
    Vector head_b;

    static constexpr CellKind kind = CellKind::rnn;

    static RnnParams zeros(int hidden, int input, int classes = kNumClasses);
    static RnnParams initialized(int hidden, int input, Rng& rng, int classes = kNumClasses);

    // Tensors in storage order: W, b, head_W, head_b.
    std::vector<TensorRef> tensors();
    std::vector<ConstTensorRef> tensors() const;
    void check_shapes() const;
};

struct LstmState {
    Vector h;
    Vector c;

    static LstmState zeros(int hidden) { return {Vector::Zero(hidden), Vector::Zero(hidden)}; }
};

struct LstmStepCache {
    Vector z;  // [h_{t-1}; x_t]
    Vector pre_forget, pre_input, pre_candidate, pre_output;
    Vector forget, input, candidate, output;
    Vector c_prev, c, tanh_c, h;
};

struct RnnStepCache {
    Vector z;
    Vector pre;
    Vector h;
};

std::pair<LstmState, LstmStepCache> lstm_step(const LstmParams& params, const LstmState& state,
                                              const Eigen::Ref<const Vector>& x);
std::pair<Vector, RnnStepCache> rnn_step(const RnnParams& params, const Eigen::Ref<const Vector>& h,
                                         const Eigen::Ref<const Vector>& x);

template <class Cache>
struct ForwardTrace {
    std::vector<Cache> steps;           // one per non-pad timestep
    std::vector<std::int32_t> tokens;   // the non-pad indices, in order
    Vector final_h;
    Vector logits;
    Vector probabilities;
};

using LstmTrace = ForwardTrace<LstmStepCache>;
using RnnTrace = ForwardTrace<RnnStepCache>;

// Padding timesteps are skipped (the state is carried through unchanged); the
// head reads h after the last non-pad token. Throws on an all-pad sequence.
LstmTrace forward(const LstmParams& params, const EmbeddingMatrix& embedding,
                  std::span<const std::int32_t> indices);
RnnTrace forward(const RnnParams& params, const EmbeddingMatrix& embedding,
                 std::span<const std::int32_t> indices);

Vector softmax(const Eigen::Ref<const Vector>& logits);
// -log softmax(logits)[label] via log-sum-exp.
double cross_entropy(const Eigen::Ref<const Vector>& logits, Label label);
// -log p[label] for a probability vector.
double loss(const Eigen::Ref<const Vector>& probabilities, Label label);

template <class Params>
struct Gradients {
    Params params;                               // same shapes as the model
    std::map<std::int32_t, Vector> embedding_rows;  // only rows the sequence touched
    double loss = 0.0;
};

using LstmGradients = Gradients<LstmParams>;
using RnnGradients = Gradients<RnnParams>;

// Backpropagation through time for one example.
LstmGradients backward(const LstmTrace& trace, const LstmParams& params, Label label);
RnnGradients backward(const RnnTrace& trace, const RnnParams& params, Label label);

template <class Params>
Label predict(const Params& params, const EmbeddingMatrix& embedding, std::span<const std::int32_t> indices) {
    const auto trace = forward(params, embedding, indices);
    Eigen::Index best = 0;
    trace.probabilities.maxCoeff(&best);
    return label_from_index(static_cast<int>(best));
}

}  // namespace senti

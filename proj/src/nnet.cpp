#include "senti/nnet.hpp"

#include "senti/error.hpp"

#include <cmath>
#include <string>

namespace senti {

namespace {

Vector logistic(const Vector& a) {
    Vector out(a.size());
    for (Eigen::Index k = 0; k < a.size(); ++k) {
        const double x = a[k];
        if (x >= 0) {
            out[k] = 1.0 / (1.0 + std::exp(-x));
        } else {
            const double e = std::exp(x);
            out[k] = e / (1.0 + e);
        }
    }
    return out;
}

Vector concat(const Eigen::Ref<const Vector>& h, const Eigen::Ref<const Vector>& x) {
    Vector z(h.size() + x.size());
    z << h, x;
    return z;
}

void require_finite(const Eigen::Ref<const Vector>& v, const char* what) {
    if (!v.allFinite()) throw NumericError(std::string("non-finite ") + what);
}

void require_size(Eigen::Index got, int want, const char* what) {
    if (got != want) {
        throw Error(std::string(what) + " has size " + std::to_string(got) + ", expected " +
                    std::to_string(want));
    }
}

void check_matrix(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const char* name) {
    if (m.rows() != rows || m.cols() != cols) {
        throw Error(std::string("parameter ") + name + " has shape " + std::to_string(m.rows()) + "x" +
                    std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
    }
}

void check_vector(const Vector& v, Eigen::Index size, const char* name) {
    if (v.size() != size) {
        throw Error(std::string("parameter ") + name + " has size " + std::to_string(v.size()) + ", expected " +
                    std::to_string(size));
    }
}

void fill_uniform(Matrix& m, double bound, Rng& rng) {
    for (double& x : flat(m)) x = rng.uniform(-bound, bound);
}

template <class M>
TensorRef ref(std::string_view name, M& m) {
    return {name, flat(m), m.rows(), m.cols()};
}

template <class M>
ConstTensorRef cref(std::string_view name, const M& m) {
    return {name, flat(m), m.rows(), m.cols()};
}

// Embeds the non-pad tokens; shared by both cell types.
std::vector<std::int32_t> content_indices(const EmbeddingMatrix& embedding, std::span<const std::int32_t> indices) {
    std::vector<std::int32_t> tokens;
    tokens.reserve(indices.size());
    for (auto idx : indices) {
        if (idx == Vocabulary::pad_index) continue;
        if (idx < 0 || static_cast<std::size_t>(idx) >= embedding.row_count()) {
            throw Error("token index " + std::to_string(idx) + " outside the embedding matrix");
        }
        tokens.push_back(idx);
    }
    if (tokens.empty()) throw Error("empty sequence after masking");
    return tokens;
}

Vector head_backward(const Vector& probabilities, const Vector& final_h, const Matrix& head_w, Label label,
                     Matrix& d_head_w, Vector& d_head_b) {
    Vector d_logits = probabilities;
    d_logits[label_index(label)] -= 1.0;
    d_head_w.noalias() = d_logits * final_h.transpose();
    d_head_b = d_logits;
    return head_w.transpose() * d_logits;
}

void add_row_gradient(std::map<std::int32_t, Vector>& rows, std::int32_t index, const Eigen::Ref<const Vector>& g) {
    auto [it, inserted] = rows.try_emplace(index, g);
    if (!inserted) it->second += g;
}

}  // namespace

std::string_view cell_kind_name(CellKind kind) { return kind == CellKind::lstm ? "lstm" : "rnn"; }

CellKind parse_cell_kind(std::string_view name) {
    if (name == "lstm") return CellKind::lstm;
    if (name == "rnn") return CellKind::rnn;
    throw Error("unknown model kind '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Parameters

LstmParams LstmParams::zeros(int hidden, int input, int classes) {
    if (hidden < 1 || input < 1 || classes < 1) throw Error("LSTM dimensions must be >= 1");
    LstmParams p;
    p.hidden = hidden;
    p.input = input;
    p.classes = classes;
    const int cols = hidden + input;
    for (Matrix* w : {&p.w_forget, &p.w_input, &p.w_candidate, &p.w_output}) *w = Matrix::Zero(hidden, cols);
    for (Vector* b : {&p.b_forget, &p.b_input, &p.b_candidate, &p.b_output}) *b = Vector::Zero(hidden);
    p.head_w = Matrix::Zero(classes, hidden);
    p.head_b = Vector::Zero(classes);
    return p;
}

LstmParams LstmParams::initialized(int hidden, int input, Rng& rng, int classes) {
    LstmParams p = zeros(hidden, input, classes);
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden + input));
    for (Matrix* w : {&p.w_forget, &p.w_input, &p.w_candidate, &p.w_output}) fill_uniform(*w, bound, rng);
    p.b_forget.setOnes();
    return p;
}

std::vector<TensorRef> LstmParams::tensors() {
    return {ref("W_f", w_forget),    ref("b_f", b_forget), ref("W_i", w_input),  ref("b_i", b_input),
            ref("W_c", w_candidate), ref("b_c", b_candidate), ref("W_o", w_output), ref("b_o", b_output),
            ref("head_W", head_w),   ref("head_b", head_b)};
}

std::vector<ConstTensorRef> LstmParams::tensors() const {
    return {cref("W_f", w_forget),    cref("b_f", b_forget), cref("W_i", w_input),  cref("b_i", b_input),
            cref("W_c", w_candidate), cref("b_c", b_candidate), cref("W_o", w_output), cref("b_o", b_output),
            cref("head_W", head_w),   cref("head_b", head_b)};
}

void LstmParams::check_shapes() const {
    const Eigen::Index cols = hidden + input;
    check_matrix(w_forget, hidden, cols, "W_f");
    check_matrix(w_input, hidden, cols, "W_i");
    check_matrix(w_candidate, hidden, cols, "W_c");
    check_matrix(w_output, hidden, cols, "W_o");
    check_vector(b_forget, hidden, "b_f");
    check_vector(b_input, hidden, "b_i");
    check_vector(b_candidate, hidden, "b_c");
    check_vector(b_output, hidden, "b_o");
    check_matrix(head_w, classes, hidden, "head_W");
    check_vector(head_b, classes, "head_b");
}

RnnParams RnnParams::zeros(int hidden, int input, int classes) {
    if (hidden < 1 || input < 1 || classes < 1) throw Error("RNN dimensions must be >= 1");
    RnnParams p;
    p.hidden = hidden;
    p.input = input;
    p.classes = classes;
    p.w = Matrix::Zero(hidden, hidden + input);
    p.b = Vector::Zero(hidden);
    p.head_w = Matrix::Zero(classes, hidden);
    p.head_b = Vector::Zero(classes);
    return p;
}

RnnParams RnnParams::initialized(int hidden, int input, Rng& rng, int classes) {
    RnnParams p = zeros(hidden, input, classes);
    fill_uniform(p.w, 1.0 / std::sqrt(static_cast<double>(hidden + input)), rng);
    return p;
}

std::vector<TensorRef> RnnParams::tensors() {
    return {ref("W", w), ref("b", b), ref("head_W", head_w), ref("head_b", head_b)};
}

std::vector<ConstTensorRef> RnnParams::tensors() const {
    return {cref("W", w), cref("b", b), cref("head_W", head_w), cref("head_b", head_b)};
}

void RnnParams::check_shapes() const {
    check_matrix(w, hidden, hidden + input, "W");
    check_vector(b, hidden, "b");
    check_matrix(head_w, classes, hidden, "head_W");
    check_vector(head_b, classes, "head_b");
}

// ---------------------------------------------------------------------------
// Cells

std::pair<LstmState, LstmStepCache> lstm_step(const LstmParams& params, const LstmState& state,
                                              const Eigen::Ref<const Vector>& x) {
    require_size(state.h.size(), params.hidden, "hidden state h");
    require_size(state.c.size(), params.hidden, "cell state c");
    require_size(x.size(), params.input, "input x");
    require_finite(state.h, "hidden state");
    require_finite(state.c, "cell state");
    require_finite(x, "input");

    LstmStepCache cache;
    cache.z = concat(state.h, x);
    cache.pre_forget = params.w_forget * cache.z + params.b_forget;
    cache.pre_input = params.w_input * cache.z + params.b_input;
    cache.pre_candidate = params.w_candidate * cache.z + params.b_candidate;
    cache.pre_output = params.w_output * cache.z + params.b_output;

    cache.forget = logistic(cache.pre_forget);
    cache.input = logistic(cache.pre_input);
    cache.candidate = cache.pre_candidate.array().tanh();
    cache.output = logistic(cache.pre_output);

    cache.c_prev = state.c;
    cache.c = cache.forget.cwiseProduct(state.c) + cache.input.cwiseProduct(cache.candidate);
    cache.tanh_c = cache.c.array().tanh();
    cache.h = cache.output.cwiseProduct(cache.tanh_c);

    LstmState next{cache.h, cache.c};
    return {std::move(next), std::move(cache)};
}

std::pair<Vector, RnnStepCache> rnn_step(const RnnParams& params, const Eigen::Ref<const Vector>& h,
                                         const Eigen::Ref<const Vector>& x) {
    require_size(h.size(), params.hidden, "hidden state h");
    require_size(x.size(), params.input, "input x");
    require_finite(h, "hidden state");
    require_finite(x, "input");

    RnnStepCache cache;
    cache.z = concat(h, x);
    cache.pre = params.w * cache.z + params.b;
    cache.h = cache.pre.array().tanh();
    Vector next = cache.h;
    return {std::move(next), std::move(cache)};
}

// ---------------------------------------------------------------------------
// Forward

Vector softmax(const Eigen::Ref<const Vector>& logits) {
    const double m = logits.maxCoeff();
    Vector e = (logits.array() - m).exp();
    return e / e.sum();
}

double cross_entropy(const Eigen::Ref<const Vector>& logits, Label label) {
    const double m = logits.maxCoeff();
    const double lse = m + std::log((logits.array() - m).exp().sum());
    return lse - logits[label_index(label)];
}

double loss(const Eigen::Ref<const Vector>& probabilities, Label label) {
    return -std::log(probabilities[label_index(label)]);
}

LstmTrace forward(const LstmParams& params, const EmbeddingMatrix& embedding, std::span<const std::int32_t> indices) {
    params.check_shapes();
    if (embedding.dim() != params.input) throw Error("embedding dim does not match the model input size");
    LstmTrace trace;
    trace.tokens = content_indices(embedding, indices);
    trace.steps.reserve(trace.tokens.size());
    LstmState state = LstmState::zeros(params.hidden);
    for (auto idx : trace.tokens) {
        auto [next, cache] = lstm_step(params, state, embedding.rows.row(idx).transpose());
        state = std::move(next);
        trace.steps.push_back(std::move(cache));
    }
    trace.final_h = state.h;
    trace.logits = params.head_w * trace.final_h + params.head_b;
    trace.probabilities = softmax(trace.logits);
    return trace;
}

RnnTrace forward(const RnnParams& params, const EmbeddingMatrix& embedding, std::span<const std::int32_t> indices) {
    params.check_shapes();
    if (embedding.dim() != params.input) throw Error("embedding dim does not match the model input size");
    RnnTrace trace;
    trace.tokens = content_indices(embedding, indices);
    trace.steps.reserve(trace.tokens.size());
    Vector h = Vector::Zero(params.hidden);
    for (auto idx : trace.tokens) {
        auto [next, cache] = rnn_step(params, h, embedding.rows.row(idx).transpose());
        h = std::move(next);
        trace.steps.push_back(std::move(cache));
    }
    trace.final_h = h;
    trace.logits = params.head_w * trace.final_h + params.head_b;
    trace.probabilities = softmax(trace.logits);
    return trace;
}

// ---------------------------------------------------------------------------
// Backward

LstmGradients backward(const LstmTrace& trace, const LstmParams& params, Label label) {
    params.check_shapes();
    if (trace.steps.size() != trace.tokens.size()) throw Error("trace steps and tokens disagree");
    const int H = params.hidden;

    LstmGradients g;
    g.params = LstmParams::zeros(params.hidden, params.input, params.classes);
    g.loss = cross_entropy(trace.logits, label);

    Vector dh = head_backward(trace.probabilities, trace.final_h, params.head_w, label, g.params.head_w,
                              g.params.head_b);
    Vector dc = Vector::Zero(H);
    Vector da_f(H), da_i(H), da_c(H), da_o(H), dz(H + params.input);

    for (std::size_t t = trace.steps.size(); t-- > 0;) {
        const LstmStepCache& s = trace.steps[t];
        // h = o * tanh(c)
        const Vector d_out = dh.cwiseProduct(s.tanh_c);
        dc += dh.cwiseProduct(s.output).cwiseProduct((1.0 - s.tanh_c.array().square()).matrix());
        // c = f * c_prev + i * candidate
        const Vector d_forget = dc.cwiseProduct(s.c_prev);
        const Vector d_input = dc.cwiseProduct(s.candidate);
        const Vector d_candidate = dc.cwiseProduct(s.input);
        const Vector dc_prev = dc.cwiseProduct(s.forget);

        da_f = d_forget.array() * s.forget.array() * (1.0 - s.forget.array());
        da_i = d_input.array() * s.input.array() * (1.0 - s.input.array());
        da_c = d_candidate.array() * (1.0 - s.candidate.array().square());
        da_o = d_out.array() * s.output.array() * (1.0 - s.output.array());

        g.params.w_forget.noalias() += da_f * s.z.transpose();
        g.params.w_input.noalias() += da_i * s.z.transpose();
        g.params.w_candidate.noalias() += da_c * s.z.transpose();
        g.params.w_output.noalias() += da_o * s.z.transpose();
        g.params.b_forget += da_f;
        g.params.b_input += da_i;
        g.params.b_candidate += da_c;
        g.params.b_output += da_o;

        dz.noalias() = params.w_forget.transpose() * da_f;
        dz.noalias() += params.w_input.transpose() * da_i;
        dz.noalias() += params.w_candidate.transpose() * da_c;
        dz.noalias() += params.w_output.transpose() * da_o;

        add_row_gradient(g.embedding_rows, trace.tokens[t], dz.tail(params.input));
        dh = dz.head(H);
        dc = dc_prev;
    }
    return g;
}

RnnGradients backward(const RnnTrace& trace, const RnnParams& params, Label label) {
    params.check_shapes();
    if (trace.steps.size() != trace.tokens.size()) throw Error("trace steps and tokens disagree");
    const int H = params.hidden;

    RnnGradients g;
    g.params = RnnParams::zeros(params.hidden, params.input, params.classes);
    g.loss = cross_entropy(trace.logits, label);

    Vector dh = head_backward(trace.probabilities, trace.final_h, params.head_w, label, g.params.head_w,
                              g.params.head_b);
    Vector da(H), dz(H + params.input);
    for (std::size_t t = trace.steps.size(); t-- > 0;) {
        const RnnStepCache& s = trace.steps[t];
        da = dh.array() * (1.0 - s.h.array().square());
        g.params.w.noalias() += da * s.z.transpose();
        g.params.b += da;
        dz.noalias() = params.w.transpose() * da;
        add_row_gradient(g.embedding_rows, trace.tokens[t], dz.tail(params.input));
        dh = dz.head(H);
    }
    return g;
}

}  // namespace senti

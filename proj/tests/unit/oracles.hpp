#pragma once

// Independent reference computations used by the unit and acceptance tests.

#include "senti/eval.hpp"
#include "senti/nnet.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <string>
#include <vector>

namespace senti::testing {

inline double scalar_sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

struct ScalarLstmStep {
    std::vector<double> f, i, g, o, c, h;
};

// Gate equations evaluated one unit at a time from the [h; x] layout.
inline ScalarLstmStep scalar_lstm_step(const LstmParams& p, const Vector& h, const Vector& c, const Vector& x) {
    const int H = p.hidden;
    const int I = p.input;
    ScalarLstmStep out;
    out.f.resize(H);
    out.i.resize(H);
    out.g.resize(H);
    out.o.resize(H);
    out.c.resize(H);
    out.h.resize(H);
    for (int r = 0; r < H; ++r) {
        double af = p.b_forget(r), ai = p.b_input(r), ag = p.b_candidate(r), ao = p.b_output(r);
        for (int k = 0; k < H; ++k) {
            af += p.w_forget(r, k) * h(k);
            ai += p.w_input(r, k) * h(k);
            ag += p.w_candidate(r, k) * h(k);
            ao += p.w_output(r, k) * h(k);
        }
        for (int k = 0; k < I; ++k) {
            af += p.w_forget(r, H + k) * x(k);
            ai += p.w_input(r, H + k) * x(k);
            ag += p.w_candidate(r, H + k) * x(k);
            ao += p.w_output(r, H + k) * x(k);
        }
        out.f[r] = scalar_sigmoid(af);
        out.i[r] = scalar_sigmoid(ai);
        out.g[r] = std::tanh(ag);
        out.o[r] = scalar_sigmoid(ao);
        out.c[r] = out.f[r] * c(r) + out.i[r] * out.g[r];
        out.h[r] = out.o[r] * std::tanh(out.c[r]);
    }
    return out;
}

inline std::vector<double> scalar_rnn_step(const RnnParams& p, const Vector& h, const Vector& x) {
    std::vector<double> out(p.hidden);
    for (int r = 0; r < p.hidden; ++r) {
        double a = p.b(r);
        for (int k = 0; k < p.hidden; ++k) a += p.w(r, k) * h(k);
        for (int k = 0; k < p.input; ++k) a += p.w(r, p.hidden + k) * x(k);
        out[r] = std::tanh(a);
    }
    return out;
}

inline std::vector<double> scalar_head(const Matrix& w, const Vector& b, const Vector& h) {
    std::vector<double> logits(static_cast<std::size_t>(w.rows()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
        double z = b(r);
        for (Eigen::Index k = 0; k < w.cols(); ++k) z += w(r, k) * h(k);
        logits[static_cast<std::size_t>(r)] = z;
    }
    const double m = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double& z : logits) total += (z = std::exp(z - m));
    for (double& z : logits) z /= total;
    return logits;
}

inline std::vector<double> scalar_lstm_forward(const LstmParams& p, const EmbeddingMatrix& emb,
                                               std::span<const std::int32_t> seq) {
    Vector h = Vector::Zero(p.hidden);
    Vector c = Vector::Zero(p.hidden);
    for (auto idx : seq) {
        if (idx == Vocabulary::pad_index) continue;
        const Vector x = emb.rows.row(idx).transpose();
        const auto s = scalar_lstm_step(p, h, c, x);
        for (int r = 0; r < p.hidden; ++r) {
            h(r) = s.h[r];
            c(r) = s.c[r];
        }
    }
    return scalar_head(p.head_w, p.head_b, h);
}

inline std::vector<double> scalar_rnn_forward(const RnnParams& p, const EmbeddingMatrix& emb,
                                              std::span<const std::int32_t> seq) {
    Vector h = Vector::Zero(p.hidden);
    for (auto idx : seq) {
        if (idx == Vocabulary::pad_index) continue;
        const Vector x = emb.rows.row(idx).transpose();
        const auto next = scalar_rnn_step(p, h, x);
        for (int r = 0; r < p.hidden; ++r) h(r) = next[r];
    }
    return scalar_head(p.head_w, p.head_b, h);
}

// Gates in (0, 1), candidate and hidden output in (-1, 1).
inline bool lstm_cache_in_range(const LstmStepCache& s) {
    auto open01 = [](const Vector& v) { return v.minCoeff() > 0.0 && v.maxCoeff() < 1.0; };
    auto open11 = [](const Vector& v) { return v.minCoeff() > -1.0 && v.maxCoeff() < 1.0; };
    return open01(s.forget) && open01(s.input) && open01(s.output) && open11(s.candidate) && open11(s.h);
}

// Relative error of an analytic tensor against its numeric counterpart,
// ||a - n|| / max(||a||, ||n||, 1e-8).
inline double tensor_relative_error(std::span<const double> analytic, std::span<const double> numeric) {
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t k = 0; k < analytic.size(); ++k) {
        diff += (analytic[k] - numeric[k]) * (analytic[k] - numeric[k]);
        na += analytic[k] * analytic[k];
        nn += numeric[k] * numeric[k];
    }
    return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), 1e-8});
}

struct GradientCheckReport {
    double max_relative_error = 0.0;
    std::string worst_tensor;
    std::size_t tensors_checked = 0;
    std::size_t embedding_rows_checked = 0;
    bool rows_match = true;  // analytic rows are exactly the distinct non-pad tokens
};

template <class Params>
GradientCheckReport gradient_check(Params params, EmbeddingMatrix emb, std::span<const std::int32_t> seq, Label y,
                                   double h = 1e-4) {
    const auto analytic = backward(forward(params, emb, seq), params, y);
    auto objective = [&] { return cross_entropy(forward(params, emb, seq).logits, y); };
    GradientCheckReport report;
    auto record = [&](const std::string& name, std::span<const double> a, std::span<const double> n) {
        const double err = tensor_relative_error(a, n);
        ++report.tensors_checked;
        if (err >= report.max_relative_error) {
            report.max_relative_error = err;
            report.worst_tensor = name;
        }
    };

    const auto grads = analytic.params.tensors();
    auto targets = params.tensors();
    for (std::size_t t = 0; t < targets.size(); ++t) {
        std::vector<double> numeric(targets[t].values.size());
        for (std::size_t k = 0; k < numeric.size(); ++k) {
            double& x = targets[t].values[k];
            const double saved = x;
            x = saved + h;
            const double up = objective();
            x = saved - h;
            const double down = objective();
            x = saved;
            numeric[k] = (up - down) / (2.0 * h);
        }
        record(std::string(targets[t].name), grads[t].values, numeric);
    }

    std::set<std::int32_t> touched;
    for (auto idx : seq) {
        if (idx != Vocabulary::pad_index) touched.insert(idx);
    }
    report.rows_match = touched.size() == analytic.embedding_rows.size();
    for (auto row : touched) {
        const auto it = analytic.embedding_rows.find(row);
        if (it == analytic.embedding_rows.end()) {
            report.rows_match = false;
            continue;
        }
        std::vector<double> numeric(static_cast<std::size_t>(emb.dim()));
        for (int k = 0; k < emb.dim(); ++k) {
            double& x = emb.rows(row, k);
            const double saved = x;
            x = saved + h;
            const double up = objective();
            x = saved - h;
            const double down = objective();
            x = saved;
            numeric[static_cast<std::size_t>(k)] = (up - down) / (2.0 * h);
        }
        record("embedding row " + std::to_string(row), flat(it->second), numeric);
        ++report.embedding_rows_checked;
    }
    return report;
}

inline GradientCheckReport lstm_gradient_check(const LstmParams& p, const EmbeddingMatrix& emb,
                                               std::span<const std::int32_t> seq, Label y) {
    return gradient_check(p, emb, seq, y);
}

inline GradientCheckReport rnn_gradient_check(const RnnParams& p, const EmbeddingMatrix& emb,
                                              std::span<const std::int32_t> seq, Label y) {
    return gradient_check(p, emb, seq, y);
}

// Metrics recomputed from the raw counts, class by class, without the
// one-vs-rest helper.
struct BruteForceMetrics {
    double accuracy = 0.0;
    std::array<double, 3> precision{}, recall{}, f1{}, support{};
    double macro_p = 0, macro_r = 0, macro_f = 0;
    double micro_p = 0, micro_r = 0, micro_f = 0;
    double weighted_p = 0, weighted_r = 0, weighted_f = 0;
};

inline BruteForceMetrics brute_force_metrics(const ConfusionMatrix3& cm) {
    BruteForceMetrics m;
    double total = 0.0, correct = 0.0;
    for (int a = 0; a < 3; ++a) {
        for (int p = 0; p < 3; ++p) {
            const double n = static_cast<double>(cm.counts[a][p]);
            total += n;
            if (a == p) correct += n;
        }
    }
    m.accuracy = correct / total;
    double tp_sum = 0, fp_sum = 0, fn_sum = 0;
    for (int k = 0; k < 3; ++k) {
        double tp = 0, predicted = 0, actual = 0;
        for (int a = 0; a < 3; ++a) {
            for (int p = 0; p < 3; ++p) {
                const double n = static_cast<double>(cm.counts[a][p]);
                if (a == k && p == k) tp += n;
                if (p == k) predicted += n;
                if (a == k) actual += n;
            }
        }
        tp_sum += tp;
        fp_sum += predicted - tp;
        fn_sum += actual - tp;
        const double prec = predicted > 0 ? tp / predicted : 0.0;
        const double rec = actual > 0 ? tp / actual : 0.0;
        m.precision[k] = prec;
        m.recall[k] = rec;
        m.f1[k] = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
        m.support[k] = actual;
    }
    for (int k = 0; k < 3; ++k) {
        m.macro_p += m.precision[k] / 3;
        m.macro_r += m.recall[k] / 3;
        m.macro_f += m.f1[k] / 3;
        m.weighted_p += m.precision[k] * m.support[k] / total;
        m.weighted_r += m.recall[k] * m.support[k] / total;
        m.weighted_f += m.f1[k] * m.support[k] / total;
    }
    m.micro_p = tp_sum + fp_sum > 0 ? tp_sum / (tp_sum + fp_sum) : 0.0;
    m.micro_r = tp_sum + fn_sum > 0 ? tp_sum / (tp_sum + fn_sum) : 0.0;
    m.micro_f = m.micro_p + m.micro_r > 0 ? 2 * m.micro_p * m.micro_r / (m.micro_p + m.micro_r) : 0.0;
    return m;
}

inline ConfusionMatrix3 random_confusion(Rng& rng, std::uint64_t max_count) {
    ConfusionMatrix3 cm;
    do {
        for (auto& row : cm.counts) {
            for (auto& c : row) {
                // Sprinkle zeros so empty rows and columns occur.
                c = rng.below(4) == 0 ? 0 : rng.below(max_count + 1);
            }
        }
    } while (cm.total() == 0);
    return cm;
}

}  // namespace senti::testing

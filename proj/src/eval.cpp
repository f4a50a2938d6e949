#include "senti/eval.hpp"

#include "senti/error.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace senti {

std::uint64_t ConfusionMatrix3::total() const {
    std::uint64_t n = 0;
    for (const auto& row : counts) {
        for (auto c : row) n += c;
    }
    return n;
}

std::uint64_t ConfusionMatrix3::trace() const {
    std::uint64_t n = 0;
    for (int k = 0; k < kNumClasses; ++k) n += counts[k][k];
    return n;
}

ConfusionMatrix3 confusion(std::span<const Label> actual, std::span<const Label> predicted) {
    if (actual.size() != predicted.size()) {
        throw Error("confusion: " + std::to_string(actual.size()) + " actual labels vs " +
                    std::to_string(predicted.size()) + " predictions");
    }
    ConfusionMatrix3 cm;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        ++cm.counts[label_index(actual[i])][label_index(predicted[i])];
    }
    return cm;
}

BinaryCounts per_class_binary(const ConfusionMatrix3& cm, Label label) {
    const int k = label_index(label);
    BinaryCounts b;
    b.tp = cm.counts[k][k];
    for (int j = 0; j < kNumClasses; ++j) {
        if (j == k) continue;
        b.fp += cm.counts[j][k];
        b.fn += cm.counts[k][j];
    }
    b.tn = cm.total() - b.tp - b.fp - b.fn;
    return b;
}

std::string_view averaging_name(Averaging averaging) {
    switch (averaging) {
    case Averaging::macro: return "macro";
    case Averaging::micro: return "micro";
    case Averaging::weighted: return "weighted";
    }
    return "?";
}

Averaging parse_averaging(std::string_view name) {
    if (name == "macro") return Averaging::macro;
    if (name == "micro") return Averaging::micro;
    if (name == "weighted") return Averaging::weighted;
    throw Error("unknown averaging scheme '" + std::string(name) + "'");
}

const PrfTriple& MetricsReport::aggregate(Averaging which) const {
    switch (which) {
    case Averaging::macro: return macro;
    case Averaging::micro: return micro;
    case Averaging::weighted: return weighted;
    }
    return macro;
}

const PrfTriple& MetricsReport::headline() const { return aggregate(averaging); }

namespace {

double ratio(std::uint64_t num, std::uint64_t den, bool& undefined) {
    if (den == 0) {
        undefined = true;
        return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r, bool& undefined) {
    if (p + r == 0.0) {
        undefined = true;
        return 0.0;
    }
    return 2.0 * p * r / (p + r);
}

}  // namespace

MetricsReport metrics(const ConfusionMatrix3& cm, Averaging averaging) {
    const std::uint64_t total = cm.total();
    if (total == 0) throw Error("metrics of an empty confusion matrix");

    MetricsReport rep;
    rep.averaging = averaging;
    rep.confusion = cm;
    rep.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);

    BinaryCounts pooled;
    for (int k = 0; k < kNumClasses; ++k) {
        const BinaryCounts b = per_class_binary(cm, label_from_index(k));
        pooled.tp += b.tp;
        pooled.fp += b.fp;
        pooled.fn += b.fn;
        ClassMetrics& m = rep.per_class[k];
        m.support = b.tp + b.fn;
        m.prf.precision = ratio(b.tp, b.tp + b.fp, m.precision_undefined);
        m.prf.recall = ratio(b.tp, b.tp + b.fn, m.recall_undefined);
        m.prf.f1 = harmonic(m.prf.precision, m.prf.recall, m.f1_undefined);

        rep.macro.precision += m.prf.precision / kNumClasses;
        rep.macro.recall += m.prf.recall / kNumClasses;
        rep.macro.f1 += m.prf.f1 / kNumClasses;

        const double w = static_cast<double>(m.support) / static_cast<double>(total);
        rep.weighted.precision += w * m.prf.precision;
        rep.weighted.recall += w * m.prf.recall;
        rep.weighted.f1 += w * m.prf.f1;
    }
    bool unused = false;
    rep.micro.precision = ratio(pooled.tp, pooled.tp + pooled.fp, unused);
    rep.micro.recall = ratio(pooled.tp, pooled.tp + pooled.fn, unused);
    rep.micro.f1 = harmonic(rep.micro.precision, rep.micro.recall, unused);
    return rep;
}

namespace {

nlohmann::json prf_json(const PrfTriple& t) {
    return {{"precision", t.precision}, {"recall", t.recall}, {"f1", t.f1}};
}

}  // namespace

nlohmann::json to_json(const MetricsReport& report) {
    nlohmann::json j;
    j["accuracy"] = report.accuracy;
    j["averaging"] = averaging_name(report.averaging);
    j["headline"] = prf_json(report.headline());
    j["macro"] = prf_json(report.macro);
    j["micro"] = prf_json(report.micro);
    j["weighted"] = prf_json(report.weighted);
    nlohmann::json classes = nlohmann::json::object();
    for (int k = 0; k < kNumClasses; ++k) {
        const auto& m = report.per_class[k];
        auto c = prf_json(m.prf);
        c["support"] = m.support;
        nlohmann::json flags = nlohmann::json::array();
        if (m.precision_undefined) flags.push_back("precision_zero_division");
        if (m.recall_undefined) flags.push_back("recall_zero_division");
        if (m.f1_undefined) flags.push_back("f1_zero_division");
        c["flags"] = flags;
        classes[std::string(label_name(label_from_index(k)))] = c;
    }
    j["per_class"] = classes;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : report.confusion.counts) rows.push_back(row);
    j["confusion"] = {{"rows", "actual"}, {"columns", "predicted"}, {"counts", rows}};
    return j;
}

std::string format_table(std::span<const ModelRow> rows, Averaging averaging) {
    static constexpr const char* kHeaders[] = {"Model", "Accuracy (%)", "Precision (%)", "Recall (%)",
                                               "F1 Score (%)"};
    std::vector<std::array<std::string, 5>> cells;
    auto pct = [](double x) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", 100.0 * x);
        return std::string(buf);
    };
    for (const auto& row : rows) {
        const PrfTriple& t = row.metrics.aggregate(averaging);
        cells.push_back({row.model, pct(row.metrics.accuracy), pct(t.precision), pct(t.recall), pct(t.f1)});
    }
    std::array<std::size_t, 5> width{};
    for (int c = 0; c < 5; ++c) {
        width[c] = std::string_view(kHeaders[c]).size();
        for (const auto& r : cells) width[c] = std::max(width[c], r[c].size());
    }
    std::ostringstream out;
    auto emit = [&](const std::array<std::string, 5>& r) {
        for (int c = 0; c < 5; ++c) {
            if (c == 0) {
                out << r[c] << std::string(width[c] - r[c].size(), ' ');
            } else {
                out << "  " << std::string(width[c] - r[c].size(), ' ') << r[c];
            }
        }
        out << '\n';
    };
    emit({kHeaders[0], kHeaders[1], kHeaders[2], kHeaders[3], kHeaders[4]});
    std::size_t line = width[0];
    for (int c = 1; c < 5; ++c) line += 2 + width[c];
    out << std::string(line, '-') << '\n';
    for (const auto& r : cells) emit(r);
    out << "Precision/Recall/F1: " << averaging_name(averaging) << " average over 3 classes\n";
    return out.str();
}

nlohmann::json table_json(std::span<const ModelRow> rows, Averaging averaging) {
    nlohmann::json j;
    j["averaging"] = averaging_name(averaging);
    j["columns"] = {"accuracy", "precision", "recall", "f1"};
    nlohmann::json models = nlohmann::json::array();
    for (const auto& row : rows) {
        const PrfTriple& t = row.metrics.aggregate(averaging);
        models.push_back({{"model", row.model},
                          {"accuracy", row.metrics.accuracy},
                          {"precision", t.precision},
                          {"recall", t.recall},
                          {"f1", t.f1},
                          {"averaging", averaging_name(averaging)},
                          {"detail", to_json(row.metrics)}});
    }
    j["models"] = models;
    return j;
}

}  // namespace senti

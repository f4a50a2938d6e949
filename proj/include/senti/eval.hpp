#pragma once

#include "senti/corpus.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace senti {

// Rows are the actual class, columns the predicted class.
struct ConfusionMatrix3 {
    std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};

    std::uint64_t total() const;
    std::uint64_t trace() const;
};

ConfusionMatrix3 confusion(std::span<const Label> actual, std::span<const Label> predicted);

struct BinaryCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;
};

// One-vs-rest reduction for class k.
BinaryCounts per_class_binary(const ConfusionMatrix3& cm, Label k);

enum class Averaging { macro, micro, weighted };

std::string_view averaging_name(Averaging averaging);
Averaging parse_averaging(std::string_view name);

struct PrfTriple {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct ClassMetrics {
    PrfTriple prf;
    std::uint64_t support = 0;
    // Set when the corresponding denominator was zero and the metric defaulted to 0.
    bool precision_undefined = false;
    bool recall_undefined = false;
    bool f1_undefined = false;
};

struct MetricsReport {
    double accuracy = 0.0;
    std::array<ClassMetrics, kNumClasses> per_class{};
    PrfTriple macro;
    PrfTriple micro;
    PrfTriple weighted;
    Averaging averaging = Averaging::macro;  // which triple headline() returns
    ConfusionMatrix3 confusion;

    const PrfTriple& headline() const;
    const PrfTriple& aggregate(Averaging which) const;
};

// Precision, recall and F1 per class from the one-vs-rest counts, plus the
// three aggregates. A zero denominator yields 0 and sets the class flag.
MetricsReport metrics(const ConfusionMatrix3& cm, Averaging averaging = Averaging::macro);

nlohmann::json to_json(const MetricsReport& report);

// One row of a comparison table.
struct ModelRow {
    std::string model;
    MetricsReport metrics;
};

// Aligned text table: Model, Accuracy, Precision, Recall, F1 Score, in percent
// with two decimals, followed by a line naming the averaging scheme.
std::string format_table(std::span<const ModelRow> rows, Averaging averaging);
nlohmann::json table_json(std::span<const ModelRow> rows, Averaging averaging);

}  // namespace senti

#include "senti/error.hpp"
#include "senti/eval.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace senti;
using namespace senti::testing;

namespace {

constexpr Label N = Label::negative;
constexpr Label U = Label::neutral;
constexpr Label P = Label::positive;

ConfusionMatrix3 from_counts(std::array<std::array<std::uint64_t, 3>, 3> counts) {
    ConfusionMatrix3 cm;
    cm.counts = counts;
    return cm;
}

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("confusion counts") {
    const std::vector<Label> actual{N, N, U, P};
    const std::vector<Label> predicted{N, U, U, P};
    const auto cm = confusion(actual, predicted);
    CHECK(cm.counts[0][0] == 1);
    CHECK(cm.counts[0][1] == 1);
    CHECK(cm.counts[1][1] == 1);
    CHECK(cm.counts[2][2] == 1);
    CHECK(cm.total() == 4);
    CHECK(cm.trace() == 3);

    const auto perfect = confusion(actual, actual);
    CHECK(perfect.counts[0][0] == 2);
    CHECK(perfect.counts[1][1] == 1);
    CHECK(perfect.counts[2][2] == 1);
    CHECK(perfect.trace() == perfect.total());

    const auto empty = confusion({}, {});
    CHECK(empty.total() == 0);

    CHECK_THROWS_AS(confusion(actual, std::vector<Label>{N}), Error);
}

TEST_CASE("confusion matches a direct count on random labels") {
    Rng rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Label> a(rng.below(50)), p(a.size());
        for (auto& x : a) x = random_label(rng);
        for (auto& x : p) x = random_label(rng);
        const auto cm = confusion(a, p);
        CHECK(cm.total() == a.size());
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) {
                std::uint64_t n = 0;
                for (std::size_t i = 0; i < a.size(); ++i) {
                    n += label_index(a[i]) == r && label_index(p[i]) == c;
                }
                CHECK(cm.counts[r][c] == n);
            }
        }
    }
}

TEST_CASE("one-vs-rest counts") {
    const auto ones = from_counts({{{1, 1, 1}, {1, 1, 1}, {1, 1, 1}}});
    for (Label k : {N, U, P}) {
        const auto b = per_class_binary(ones, k);
        CHECK(b.tp == 1);
        CHECK(b.fp == 2);
        CHECK(b.fn == 2);
        CHECK(b.tn == 4);
    }
    const auto diag = from_counts({{{3, 0, 0}, {0, 5, 0}, {0, 0, 2}}});
    for (Label k : {N, U, P}) {
        const auto b = per_class_binary(diag, k);
        CHECK(b.fp == 0);
        CHECK(b.fn == 0);
    }
    const auto single = confusion(std::vector<Label>{U}, std::vector<Label>{U});
    const auto b = per_class_binary(single, U);
    CHECK(b.tp == 1);
    CHECK(b.tn == 0);

    Rng rng(2);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto cm = random_confusion(rng, 50);
        for (Label k : {N, U, P}) {
            const auto c = per_class_binary(cm, k);
            CHECK(c.tp + c.fp + c.fn + c.tn == cm.total());
        }
    }
}

TEST_CASE("binary tuple folded into two classes") {
    // TP=50, FN=5 on class 0; FP=5, TN=40 on class 1; class 2 unused.
    const auto cm = from_counts({{{50, 5, 0}, {5, 40, 0}, {0, 0, 0}}});
    const auto m = metrics(cm);
    CHECK(m.accuracy == doctest::Approx(0.90).epsilon(1e-15));
    const auto& c0 = m.per_class[0].prf;
    CHECK(c0.precision == doctest::Approx(50.0 / 55.0).epsilon(1e-15));
    CHECK(c0.recall == doctest::Approx(50.0 / 55.0).epsilon(1e-15));
    CHECK(c0.f1 == doctest::Approx(50.0 / 55.0).epsilon(1e-15));
    CHECK(c0.precision == doctest::Approx(0.9091).epsilon(1e-4));
    const auto b = per_class_binary(cm, N);
    CHECK(b.tp == 50);
    CHECK(b.tn == 40);
    CHECK(b.fp == 5);
    CHECK(b.fn == 5);

    // The unused class is flagged rather than turned into NaN.
    CHECK(m.per_class[2].precision_undefined);
    CHECK(m.per_class[2].recall_undefined);
    CHECK(m.per_class[2].f1_undefined);
    CHECK(m.per_class[2].prf.f1 == 0.0);
    CHECK_FALSE(m.per_class[0].precision_undefined);
}

TEST_CASE("perfect predictions give 1.0 everywhere") {
    const auto m = metrics(from_counts({{{3, 0, 0}, {0, 5, 0}, {0, 0, 2}}}));
    CHECK(m.accuracy == 1.0);
    for (const auto& c : m.per_class) {
        CHECK(c.prf.precision == 1.0);
        CHECK(c.prf.recall == 1.0);
        CHECK(c.prf.f1 == 1.0);
    }
    for (auto avg : {Averaging::macro, Averaging::micro, Averaging::weighted}) {
        const auto& t = m.aggregate(avg);
        CHECK(t.precision == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(t.recall == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(t.f1 == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("empty matrix is an error") {
    CHECK_THROWS_AS(metrics(ConfusionMatrix3{}), Error);
}

TEST_CASE("zero-denominator flags") {
    // Class 1 is never predicted and never occurs.
    const auto m = metrics(from_counts({{{4, 0, 1}, {0, 0, 0}, {2, 0, 3}}}));
    CHECK(m.per_class[1].precision_undefined);
    CHECK(m.per_class[1].recall_undefined);
    CHECK(m.per_class[1].f1_undefined);
    // Class 2 is predicted but never correct: P = R = 0, so F1 is flagged.
    const auto w = metrics(from_counts({{{4, 0, 1}, {0, 2, 0}, {0, 0, 0}}}));
    CHECK_FALSE(w.per_class[2].precision_undefined);
    CHECK(w.per_class[2].prf.precision == 0.0);
    CHECK(w.per_class[2].recall_undefined);
    CHECK(w.per_class[2].f1_undefined);

    const auto j = to_json(w);
    CHECK(j["per_class"]["positive"]["flags"] ==
          nlohmann::json::array({"recall_zero_division", "f1_zero_division"}));
    CHECK(j["per_class"]["negative"]["flags"].empty());
}

TEST_CASE("metrics equal the brute-force recomputation") {
    Rng rng(123);
    for (int trial = 0; trial < 2000; ++trial) {
        const auto cm = random_confusion(rng, trial % 2 ? 5 : 1000);
        const auto m = metrics(cm);
        const auto ref = brute_force_metrics(cm);
        CHECK(std::abs(m.accuracy - ref.accuracy) <= 1e-12);
        for (int k = 0; k < 3; ++k) {
            CHECK(std::abs(m.per_class[k].prf.precision - ref.precision[k]) <= 1e-12);
            CHECK(std::abs(m.per_class[k].prf.recall - ref.recall[k]) <= 1e-12);
            CHECK(std::abs(m.per_class[k].prf.f1 - ref.f1[k]) <= 1e-12);
            CHECK(static_cast<double>(m.per_class[k].support) == ref.support[k]);
        }
        CHECK(std::abs(m.macro.f1 - ref.macro_f) <= 1e-12);
        CHECK(std::abs(m.weighted.f1 - ref.weighted_f) <= 1e-12);
        CHECK(std::abs(m.micro.f1 - ref.micro_f) <= 1e-12);
    }
}

TEST_CASE("ratios stay in the unit interval and micro equals accuracy") {
    Rng rng(99);
    for (int trial = 0; trial < 10000; ++trial) {
        const auto cm = random_confusion(rng, 1 + rng.below(200));
        const auto m = metrics(cm, Averaging::micro);
        bool ok = in_unit(m.accuracy);
        for (const auto& c : m.per_class) ok = ok && in_unit(c.prf.precision) && in_unit(c.prf.recall) && in_unit(c.prf.f1);
        for (const auto* t : {&m.macro, &m.micro, &m.weighted}) {
            ok = ok && in_unit(t->precision) && in_unit(t->recall) && in_unit(t->f1);
        }
        CHECK(ok);
        CHECK(m.micro.precision == m.accuracy);
        CHECK(m.micro.recall == m.accuracy);
        CHECK(&m.headline() == &m.micro);
    }
}

TEST_CASE("relabeling permutes per-class metrics") {
    const std::array<std::array<int, 3>, 6> perms{
        {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
    Rng rng(31);
    for (int trial = 0; trial < 500; ++trial) {
        const auto cm = random_confusion(rng, 40);
        const auto& pi = perms[rng.below(perms.size())];
        ConfusionMatrix3 moved;
        for (int a = 0; a < 3; ++a) {
            for (int p = 0; p < 3; ++p) moved.counts[pi[a]][pi[p]] = cm.counts[a][p];
        }
        const auto m = metrics(cm);
        const auto mm = metrics(moved);
        CHECK(m.accuracy == mm.accuracy);
        CHECK(m.macro.f1 == doctest::Approx(mm.macro.f1).epsilon(1e-14));
        CHECK(m.macro.precision == doctest::Approx(mm.macro.precision).epsilon(1e-14));
        CHECK(m.macro.recall == doctest::Approx(mm.macro.recall).epsilon(1e-14));
        for (int k = 0; k < 3; ++k) {
            CHECK(m.per_class[k].prf.f1 == mm.per_class[pi[k]].prf.f1);
            CHECK(m.per_class[k].prf.precision == mm.per_class[pi[k]].prf.precision);
            CHECK(m.per_class[k].support == mm.per_class[pi[k]].support);
        }
    }
}

TEST_CASE("averaging names") {
    CHECK(parse_averaging("macro") == Averaging::macro);
    CHECK(parse_averaging("micro") == Averaging::micro);
    CHECK(parse_averaging("weighted") == Averaging::weighted);
    CHECK(averaging_name(Averaging::weighted) == "weighted");
    CHECK_THROWS_AS(parse_averaging("samples"), Error);
}

TEST_CASE("table layout and json") {
    const auto a = metrics(from_counts({{{50, 5, 0}, {5, 40, 0}, {0, 0, 0}}}));
    const auto b = metrics(from_counts({{{3, 0, 0}, {0, 5, 0}, {0, 0, 2}}}));
    const std::vector<ModelRow> rows{{"LSTM", b}, {"Naive Bayes", a}};
    const auto text = format_table(rows, Averaging::macro);
    // Naive Bayes macro precision: (50/55 + 40/45 + 0) / 3 = 0.5993.
    CHECK(text ==
          "Model        Accuracy (%)  Precision (%)  Recall (%)  F1 Score (%)\n"
          "------------------------------------------------------------------\n"
          "LSTM               100.00         100.00      100.00        100.00\n"
          "Naive Bayes         90.00          59.93       59.93         59.93\n"
          "Precision/Recall/F1: macro average over 3 classes\n");

    const auto j = table_json(rows, Averaging::weighted);
    CHECK(j["averaging"] == "weighted");
    REQUIRE(j["models"].size() == 2);
    CHECK(j["models"][1]["model"] == "Naive Bayes");
    CHECK(j["models"][1]["accuracy"].get<double>() == doctest::Approx(0.9));
    CHECK(j["models"][1]["averaging"] == "weighted");
    CHECK(j["models"][1]["f1"].get<double>() == a.weighted.f1);

    const auto d = to_json(a);
    CHECK(d["averaging"] == "macro");
    CHECK(d["confusion"]["rows"] == "actual");
    CHECK(d["confusion"]["counts"][0] == nlohmann::json::array({50, 5, 0}));
    CHECK(d["per_class"]["negative"]["support"] == 55);
}

}

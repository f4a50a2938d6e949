#pragma once

#include "senti/baselines.hpp"
#include "senti/bundle.hpp"
#include "senti/corpus.hpp"
#include "senti/embedding.hpp"
#include "senti/eval.hpp"
#include "senti/train.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace senti {

enum class ModelKind { lstm, rnn, naive_bayes, logreg };

std::string_view model_kind_name(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

enum class OutputFormat { text, json };

// Every knob of a run. Keys of the JSON form are the field names below; the
// embedding learning rate is `embedding_learning_rate`, the logistic baseline
// fields carry a `logreg_` prefix, and `clip_norm` null disables clipping.
struct RunConfig {
    std::uint64_t seed = 1;

    // Embeddings.
    int dim = 100;
    int window = 7;
    int min_count = 10;
    int iterations = 10;
    int negatives = 5;
    double embedding_learning_rate = 0.025;
    bool dynamic_window = true;

    // Classifier training.
    int epochs = 4;
    int batch_size = 32;
    OptimizerKind optimizer = OptimizerKind::adam;
    std::optional<double> learning_rate;
    bool shuffle = true;
    std::optional<double> clip_norm = 5.0;
    bool train_embedding = true;
    int hidden = kDefaultHidden;

    // Data.
    int maxlen = 100;
    std::string tokenizer = "auto";  // auto, whitespace, character, presegmented
    double test_fraction = 0.2;
    std::string input;
    std::string test_input;  // optional fixed test set; disables the split
    std::string output_dir = "senti-out";

    // Reporting and model choice.
    Averaging averaging = Averaging::macro;
    OutputFormat format = OutputFormat::text;
    ModelKind model = ModelKind::lstm;

    // Baselines.
    double nb_alpha = 1.0;
    double logreg_l2 = 1e-4;
    int logreg_iterations = 300;
    double logreg_learning_rate = 1.0;

    EmbeddingConfig embedding_config() const;
    TrainConfig train_config() const;
    LogisticConfig logistic_config() const;

    void validate() const;
    nlohmann::json to_json() const;
    // Applies the keys present in `j`; unknown keys and ill-typed values throw.
    void apply(const nlohmann::json& j);

    static std::vector<std::string> keys();
    // Converts a command-line string to the JSON value `key` expects.
    static nlohmann::json flag_value(std::string_view key, const std::string& text);
};

// Name of the variable that overrides the output directory.
inline constexpr const char* kOutputDirEnv = "SENTI_OUTPUT_DIR";

// Layers defaults, the config file, the environment override and the flag
// overrides, in increasing precedence.
RunConfig resolve_config(const std::optional<std::filesystem::path>& config_file, const nlohmann::json& flags);

// Picks character tokenization when CJK ideographs and kana make up most of the
// letters of the corpus, whitespace otherwise.
TokenizerMode detect_tokenizer(std::span<const RawRecord> records);

using Logger = std::function<void(const std::string&)>;

struct CommandOutput {
    nlohmann::json json;
    std::string text;

    std::string render(OutputFormat format) const;
};

struct PreparedData {
    Vocabulary vocab;
    TokenizerMode tokenizer = TokenizerMode::whitespace;
    int maxlen = 100;
    std::vector<EncodedExample> train;
    std::vector<EncodedExample> test;
};

// Paths inside the output directory.
struct Layout {
    std::filesystem::path root;

    std::filesystem::path data() const { return root / "data"; }
    std::filesystem::path vocab() const { return data() / "vocab.tsv"; }
    std::filesystem::path train_set() const { return data() / "train.tsv"; }
    std::filesystem::path test_set() const { return data() / "test.tsv"; }
    std::filesystem::path stats() const { return data() / "stats.json"; }
    std::filesystem::path embedding() const { return data() / "embedding.bin"; }
    std::filesystem::path checkpoint(ModelKind kind) const { return root / "checkpoints" / model_kind_name(kind); }
    std::filesystem::path report_json() const { return root / "report.json"; }
    std::filesystem::path report_text() const { return root / "report.txt"; }
    std::filesystem::path run_manifest() const { return root / "run.json"; }
    std::filesystem::path train_report(ModelKind kind) const {
        return root / ("train-" + std::string(model_kind_name(kind)) + ".json");
    }
};

// Cleans, tokenizes, splits, builds the vocabulary from the training side and
// writes the data artifacts. Throws "no records" for a header-only CSV.
CommandOutput cmd_preprocess(const RunConfig& config, const Logger& log = {});
CommandOutput cmd_train_embeddings(const RunConfig& config, const Logger& log = {});
CommandOutput cmd_train(const RunConfig& config, const Logger& log = {});

struct EvaluateOptions {
    std::optional<std::filesystem::path> checkpoint;  // default: the configured model's checkpoint
    std::optional<std::filesystem::path> data;        // labelled CSV; default: the prepared split
    std::string split = "test";                       // train or test, when `data` is unset
};

CommandOutput cmd_evaluate(const RunConfig& config, const EvaluateOptions& options, const Logger& log = {});
CommandOutput cmd_predict(const RunConfig& config, const std::optional<std::filesystem::path>& checkpoint,
                          std::string_view text);
CommandOutput cmd_compare(const RunConfig& config, const Logger& log = {});

// Reusable pieces.
PreparedData load_prepared(const Layout& layout);
EncodedExample encode_text(std::string_view raw, Label label, const Vocabulary& vocab, TokenizerMode tokenizer,
                           int maxlen);

}  // namespace senti

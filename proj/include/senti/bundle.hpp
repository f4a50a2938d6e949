#pragma once

#include "senti/baselines.hpp"
#include "senti/binary_io.hpp"
#include "senti/corpus.hpp"
#include "senti/embedding.hpp"
#include "senti/nnet.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace senti {

inline constexpr std::uint32_t kModelFormatVersion = 1;
inline constexpr int kBundleVersion = 1;

// Recurrent model file: magic ("SENTI-LSTM\0" or "SENTI-RNN\0"), u32 version,
// u32 hidden, input, classes, maxlen, 32-byte SHA-256 of the embedding file,
// every tensor as row-major little-endian float32 in tensors() order, and a
// trailing CRC-32 of all preceding bytes.
template <class Params>
struct ModelFile {
    Params params;
    int maxlen = 0;
    Digest embedding_checksum{};
};

std::vector<std::uint8_t> serialize_model(const LstmParams& params, int maxlen, const Digest& embedding_checksum);
std::vector<std::uint8_t> serialize_model(const RnnParams& params, int maxlen, const Digest& embedding_checksum);
ModelFile<LstmParams> parse_lstm_model(std::span<const std::uint8_t> bytes);
ModelFile<RnnParams> parse_rnn_model(std::span<const std::uint8_t> bytes);

// TF-IDF features plus the softmax regression trained on them.
struct LogisticBaseline {
    TfidfModel tfidf;
    LogisticModel model;
};

std::vector<std::uint8_t> serialize_naive_bayes(const NaiveBayesModel& model);
NaiveBayesModel parse_naive_bayes(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> serialize_logistic(const LogisticBaseline& baseline);
LogisticBaseline parse_logistic(std::span<const std::uint8_t> bytes);

// Rounds every parameter to float precision so the in-memory model equals what
// a checkpoint stores.
void round_to_stored_precision(LstmParams& params);
void round_to_stored_precision(RnnParams& params);
void round_to_stored_precision(EmbeddingMatrix& embedding);
void round_to_stored_precision(NaiveBayesModel& model);
void round_to_stored_precision(LogisticBaseline& baseline);

using BundleModel = std::variant<LstmParams, RnnParams, NaiveBayesModel, LogisticBaseline>;

std::string_view model_kind_tag(const BundleModel& model);

// A checkpoint directory: model.bin, vocab.tsv, manifest.json, and embedding.bin
// for the recurrent models. The manifest records versions, the run seed, the
// configuration echo and SHA-256 checksums of every file.
struct Bundle {
    BundleModel model;
    std::optional<EmbeddingMatrix> embedding;
    Vocabulary vocab;
    int maxlen = 100;
    TokenizerMode tokenizer = TokenizerMode::whitespace;
    std::uint64_t seed = 0;
    nlohmann::json config = nlohmann::json::object();
};

void checkpoint(const std::filesystem::path& dir, const Bundle& bundle);
// Verifies every checksum and cross-reference; throws FormatError on mismatch and
// UnsupportedVersionError on unknown format versions.
Bundle restore(const std::filesystem::path& dir);

// Class probabilities for an already encoded sequence, whatever the model kind.
Vector bundle_probabilities(const Bundle& bundle, std::span<const std::int32_t> indices);

}  // namespace senti

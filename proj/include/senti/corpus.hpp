#pragma once

#include "senti/binary_io.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace senti {

enum class Label : std::uint8_t { negative = 0, neutral = 1, positive = 2 };

inline constexpr int kNumClasses = 3;

inline int label_index(Label label) { return static_cast<int>(label); }
Label label_from_index(int index);
std::string_view label_name(Label label);
// Accepts "0", "1", "2" and "negative", "neutral", "positive".
std::optional<Label> parse_label(std::string_view text);

struct RawRecord {
    std::string text;
    Label label = Label::neutral;
};

// Text cleaning for social-media comments, applied in this order:
//   1. URLs (http://, https://, www.) up to the next whitespace or non-ASCII character
//   2. #topic# spans
//   3. @username mentions, ending at whitespace, punctuation or end of text
//   4. punctuation (Unicode P* categories, ASCII punctuation, full-width forms),
//      replaced by a space
//   5. whitespace runs collapsed to one ASCII space, ends trimmed
// The result is a fixed point: clean_text(clean_text(x)) == clean_text(x).
std::string clean_text(std::string_view raw);

// Character classes used by clean_text; exposed for the tests.
bool is_punctuation(char32_t cp);
bool is_whitespace(char32_t cp);

enum class TokenizerMode {
    whitespace,    // split on whitespace runs
    character,     // one token per Unicode scalar, whitespace dropped
    presegmented,  // text already segmented upstream, tokens joined by spaces
};

std::string_view tokenizer_mode_name(TokenizerMode mode);
TokenizerMode parse_tokenizer_mode(std::string_view name);

std::vector<std::string> tokenize(std::string_view cleaned, TokenizerMode mode);

// Token <-> index bijection over tokens seen at least `min_count` times.
// Index 0 is padding and index 1 is the unknown token; corpus tokens start at 2,
// ordered by descending frequency with ties broken by byte-wise token order.
class Vocabulary {
public:
    static constexpr std::int32_t pad_index = 0;
    static constexpr std::int32_t unk_index = 1;
    static constexpr std::int32_t num_reserved = 2;

    Vocabulary() = default;

    static Vocabulary build(std::span<const std::vector<std::string>> corpus, int min_count);

    // Index of `token`, or unk_index when absent.
    std::int32_t index_of(std::string_view token) const;
    bool contains(std::string_view token) const;
    // Throws for reserved or out-of-range indices.
    const std::string& token_at(std::int32_t index) const;
    std::int64_t frequency_at(std::int32_t index) const;

    // Number of indices including the two reserved ones.
    std::size_t size() const { return tokens_.size() + num_reserved; }
    std::size_t token_count() const { return tokens_.size(); }
    int min_count() const { return min_count_; }

    // Line format: header `#senti-vocab v1 min_count=<k>`, then
    // `index<TAB>token<TAB>frequency` for every corpus token, sorted by index.
    std::string serialize() const;
    static Vocabulary parse(std::string_view text);
    void save(const std::filesystem::path& path) const;
    static Vocabulary load(const std::filesystem::path& path);

    // SHA-256 of serialize(); binds embeddings and models to this vocabulary.
    Digest fingerprint() const { return sha256(serialize()); }

    bool operator==(const Vocabulary& other) const {
        return min_count_ == other.min_count_ && tokens_ == other.tokens_ &&
               frequencies_ == other.frequencies_;
    }

private:
    void add(std::string token, std::int64_t frequency);

    std::vector<std::string> tokens_;
    std::vector<std::int64_t> frequencies_;
    std::unordered_map<std::string, std::int32_t> index_;
    int min_count_ = 1;
};

inline Vocabulary build_vocabulary(std::span<const std::vector<std::string>> corpus, int min_count) {
    return Vocabulary::build(corpus, min_count);
}

struct EncodedExample {
    std::vector<std::int32_t> indices;  // exactly maxlen entries
    Label label = Label::neutral;
    int original_length = 0;            // token count before padding, capped at maxlen
};

// Maps tokens to indices (unknown -> unk_index), keeps the first `maxlen`
// tokens and right-pads with pad_index.
std::vector<std::int32_t> encode(std::span<const std::string> tokens, const Vocabulary& vocab,
                                 int maxlen);
EncodedExample encode_example(std::span<const std::string> tokens, Label label,
                              const Vocabulary& vocab, int maxlen);

// Dataset CSV: UTF-8, header `label,text`, RFC 4180 quoting.
std::vector<RawRecord> parse_dataset(std::istream& in);
std::vector<RawRecord> load_dataset(const std::filesystem::path& path);
std::string format_dataset(std::span<const RawRecord> records);
void save_dataset(const std::filesystem::path& path, std::span<const RawRecord> records);

struct Split {
    std::vector<RawRecord> train;
    std::vector<RawRecord> test;
};

// Per class, round(n_c * test_fraction) examples (clamped to [1, n_c - 1]) go to
// the test side. Both sides keep input order. Classes absent from the input are
// skipped; a class with a single example cannot be stratified and is an error.
Split stratified_split(std::span<const RawRecord> records, double test_fraction, std::uint64_t seed);

// Which input positions stratified_split sends to the test side, ascending.
std::vector<std::size_t> stratified_test_positions(std::span<const RawRecord> records,
                                                   double test_fraction, std::uint64_t seed);

std::array<std::size_t, kNumClasses> class_counts(std::span<const RawRecord> records);
std::array<std::size_t, kNumClasses> class_counts(std::span<const EncodedExample> examples);

// Encoded dataset file: header `#senti-encoded v1 maxlen=<n> vocab=<sha256 hex>`,
// then one `label<TAB>original_length<TAB>i0 i1 ... i{maxlen-1}` line per example.
std::string serialize_encoded(std::span<const EncodedExample> examples, int maxlen,
                              const Digest& vocab_fingerprint);
struct EncodedDataset {
    int maxlen = 0;
    Digest vocab_fingerprint{};
    std::vector<EncodedExample> examples;
};
EncodedDataset parse_encoded(std::string_view text);

// Non-pad prefix of an encoded example.
std::span<const std::int32_t> unpadded(const EncodedExample& example);

}  // namespace senti

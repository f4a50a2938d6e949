#include "senti/corpus.hpp"

#include "senti/error.hpp"
#include "senti/random.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

namespace senti {

namespace {

constexpr char32_t kReplacement = 0xFFFD;

std::u32string decode_utf8(std::string_view text) {
    std::u32string out;
    out.reserve(text.size());
    const auto* s = reinterpret_cast<const std::uint8_t*>(text.data());
    const auto length = static_cast<std::int32_t>(text.size());
    std::int32_t i = 0;
    while (i < length) {
        UChar32 c;
        U8_NEXT(s, i, length, c);
        out.push_back(c < 0 ? kReplacement : static_cast<char32_t>(c));
    }
    return out;
}

bool valid_utf8(std::string_view text) {
    const auto* s = reinterpret_cast<const std::uint8_t*>(text.data());
    const auto length = static_cast<std::int32_t>(text.size());
    std::int32_t i = 0;
    while (i < length) {
        UChar32 c;
        U8_NEXT(s, i, length, c);
        if (c < 0) return false;
    }
    return true;
}

void append_utf8(std::string& out, char32_t cp) {
    std::uint8_t buf[U8_MAX_LENGTH];
    std::int32_t n = 0;
    U8_APPEND_UNSAFE(buf, n, static_cast<UChar32>(cp));
    out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
}

std::string encode_utf8(std::u32string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char32_t cp : text) append_utf8(out, cp);
    return out;
}

bool is_ascii_alnum(char32_t cp) {
    return (cp >= U'0' && cp <= U'9') || (cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z');
}

char32_t ascii_lower(char32_t cp) { return (cp >= U'A' && cp <= U'Z') ? cp + 32 : cp; }

bool starts_with_ci(std::u32string_view text, std::size_t pos, std::u32string_view prefix) {
    if (text.size() - pos < prefix.size()) return false;
    for (std::size_t k = 0; k < prefix.size(); ++k) {
        if (ascii_lower(text[pos + k]) != prefix[k]) return false;
    }
    return true;
}

bool is_url_char(char32_t cp) { return cp > 0x20 && cp < 0x7f; }

std::u32string strip_urls(std::u32string_view text) {
    std::u32string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        const bool boundary = i == 0 || !is_ascii_alnum(text[i - 1]);
        if (boundary && (starts_with_ci(text, i, U"http://") || starts_with_ci(text, i, U"https://") ||
                         starts_with_ci(text, i, U"www."))) {
            while (i < text.size() && is_url_char(text[i])) ++i;
            out.push_back(U' ');
            continue;
        }
        out.push_back(text[i++]);
    }
    return out;
}

bool is_hash(char32_t cp) { return cp == U'#' || cp == 0xFF03; }
bool is_at(char32_t cp) { return cp == U'@' || cp == 0xFF20; }

std::u32string strip_topics(std::u32string_view text) {
    std::u32string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (is_hash(text[i])) {
            std::size_t close = i + 1;
            while (close < text.size() && !is_hash(text[close])) ++close;
            if (close < text.size()) {
                out.push_back(U' ');
                i = close + 1;
                continue;
            }
        }
        out.push_back(text[i++]);
    }
    return out;
}

std::u32string strip_mentions(std::u32string_view text) {
    std::u32string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (is_at(text[i])) {
            ++i;
            while (i < text.size() && !is_whitespace(text[i]) && !is_punctuation(text[i])) ++i;
            out.push_back(U' ');
            continue;
        }
        out.push_back(text[i++]);
    }
    return out;
}

}  // namespace

Label label_from_index(int index) {
    if (index < 0 || index >= kNumClasses) {
        throw Error("label index out of range: " + std::to_string(index));
    }
    return static_cast<Label>(index);
}

std::string_view label_name(Label label) {
    switch (label) {
    case Label::negative: return "negative";
    case Label::neutral: return "neutral";
    case Label::positive: return "positive";
    }
    return "?";
}

std::optional<Label> parse_label(std::string_view text) {
    if (text == "0" || text == "negative") return Label::negative;
    if (text == "1" || text == "neutral") return Label::neutral;
    if (text == "2" || text == "positive") return Label::positive;
    return std::nullopt;
}

bool is_punctuation(char32_t cp) {
    if (cp < 0x80) {
        return (cp >= 0x21 && cp <= 0x2f) || (cp >= 0x3a && cp <= 0x40) ||
               (cp >= 0x5b && cp <= 0x60) || (cp >= 0x7b && cp <= 0x7e);
    }
    // Full-width forms of the ASCII punctuation block.
    if ((cp >= 0xFF01 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) ||
        (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65)) {
        return true;
    }
    return u_ispunct(static_cast<UChar32>(cp)) != 0;
}

bool is_whitespace(char32_t cp) {
    const auto c = static_cast<UChar32>(cp);
    return u_isUWhiteSpace(c) || u_charType(c) == U_CONTROL_CHAR;
}

std::string clean_text(std::string_view raw) {
    std::u32string text = decode_utf8(raw);
    text = strip_urls(text);
    text = strip_topics(text);
    text = strip_mentions(text);

    std::u32string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char32_t cp : text) {
        if (is_whitespace(cp) || is_punctuation(cp)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(U' ');
        pending_space = false;
        out.push_back(cp);
    }
    return encode_utf8(out);
}

std::string_view tokenizer_mode_name(TokenizerMode mode) {
    switch (mode) {
    case TokenizerMode::whitespace: return "whitespace";
    case TokenizerMode::character: return "character";
    case TokenizerMode::presegmented: return "presegmented";
    }
    return "?";
}

TokenizerMode parse_tokenizer_mode(std::string_view name) {
    if (name == "whitespace") return TokenizerMode::whitespace;
    if (name == "character") return TokenizerMode::character;
    if (name == "presegmented") return TokenizerMode::presegmented;
    throw Error("unknown tokenizer mode '" + std::string(name) + "'");
}

std::vector<std::string> tokenize(std::string_view cleaned, TokenizerMode mode) {
    std::vector<std::string> tokens;
    const std::u32string text = decode_utf8(cleaned);
    if (mode == TokenizerMode::character) {
        for (char32_t cp : text) {
            if (is_whitespace(cp)) continue;
            std::string tok;
            append_utf8(tok, cp);
            tokens.push_back(std::move(tok));
        }
        return tokens;
    }
    // whitespace and presegmented split identically; they differ only in what
    // the caller promises about where the separators came from.
    std::string current;
    for (char32_t cp : text) {
        if (is_whitespace(cp)) {
            if (!current.empty()) tokens.push_back(std::move(current));
            current.clear();
        } else {
            append_utf8(current, cp);
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

// ---------------------------------------------------------------------------
// Vocabulary

void Vocabulary::add(std::string token, std::int64_t frequency) {
    const auto index = static_cast<std::int32_t>(tokens_.size()) + num_reserved;
    if (!index_.emplace(token, index).second) {
        throw FormatError("duplicate vocabulary token '" + token + "'");
    }
    tokens_.push_back(std::move(token));
    frequencies_.push_back(frequency);
}

Vocabulary Vocabulary::build(std::span<const std::vector<std::string>> corpus, int min_count) {
    if (min_count < 1) throw Error("min_count must be >= 1");
    std::unordered_map<std::string, std::int64_t> counts;
    for (const auto& doc : corpus) {
        for (const auto& tok : doc) ++counts[tok];
    }
    std::vector<std::pair<std::string, std::int64_t>> kept;
    for (auto& [tok, n] : counts) {
        if (n >= min_count) kept.emplace_back(tok, n);
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    Vocabulary vocab;
    vocab.min_count_ = min_count;
    for (auto& [tok, n] : kept) vocab.add(std::move(tok), n);
    return vocab;
}

std::int32_t Vocabulary::index_of(std::string_view token) const {
    auto it = index_.find(std::string(token));
    return it == index_.end() ? unk_index : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
    return index_.find(std::string(token)) != index_.end();
}

const std::string& Vocabulary::token_at(std::int32_t index) const {
    if (index < num_reserved || static_cast<std::size_t>(index) >= size()) {
        throw Error("vocabulary index " + std::to_string(index) + " is not a corpus token");
    }
    return tokens_[static_cast<std::size_t>(index - num_reserved)];
}

std::int64_t Vocabulary::frequency_at(std::int32_t index) const {
    if (index < num_reserved || static_cast<std::size_t>(index) >= size()) return 0;
    return frequencies_[static_cast<std::size_t>(index - num_reserved)];
}

std::string Vocabulary::serialize() const {
    std::string out = "#senti-vocab v1 min_count=" + std::to_string(min_count_) + "\n";
    for (std::size_t k = 0; k < tokens_.size(); ++k) {
        const auto& tok = tokens_[k];
        if (tok.empty() || tok.find_first_of("\t\n\r") != std::string::npos) {
            throw Error("vocabulary token cannot be stored: contains a tab or newline");
        }
        out += std::to_string(k + num_reserved);
        out += '\t';
        out += tok;
        out += '\t';
        out += std::to_string(frequencies_[k]);
        out += '\n';
    }
    return out;
}

namespace {

template <class Int>
Int parse_int(std::string_view text, std::size_t line, std::string_view what) {
    Int value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ParseError(line, "invalid " + std::string(what) + " '" + std::string(text) + "'");
    }
    return value;
}

std::vector<std::string_view> split_on(std::string_view text, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        auto pos = text.find(sep, start);
        if (pos == std::string_view::npos) {
            parts.push_back(text.substr(start));
            return parts;
        }
        parts.push_back(text.substr(start, pos - start));
        start = pos + 1;
    }
}

std::vector<std::string_view> lines_of(std::string_view text) {
    std::vector<std::string_view> lines = split_on(text, '\n');
    if (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

}  // namespace

Vocabulary Vocabulary::parse(std::string_view text) {
    auto lines = lines_of(text);
    constexpr std::string_view kHeader = "#senti-vocab v1 min_count=";
    if (lines.empty() || !lines[0].starts_with(kHeader)) {
        throw FormatError("vocabulary file lacks '#senti-vocab v1' header");
    }
    Vocabulary vocab;
    vocab.min_count_ = parse_int<int>(lines[0].substr(kHeader.size()), 0, "min_count");
    for (std::size_t n = 1; n < lines.size(); ++n) {
        auto fields = split_on(lines[n], '\t');
        if (fields.size() != 3) throw ParseError(n, "vocabulary line needs 3 tab-separated fields");
        const auto index = parse_int<std::int32_t>(fields[0], n, "index");
        if (index != static_cast<std::int32_t>(vocab.size())) {
            throw ParseError(n, "vocabulary indices must be contiguous from 2");
        }
        const auto freq = parse_int<std::int64_t>(fields[2], n, "frequency");
        if (freq < vocab.min_count_) throw ParseError(n, "token frequency below min_count");
        vocab.add(std::string(fields[1]), freq);
    }
    return vocab;
}

void Vocabulary::save(const std::filesystem::path& path) const { write_file_text(path, serialize()); }

Vocabulary Vocabulary::load(const std::filesystem::path& path) { return parse(read_file_text(path)); }

// ---------------------------------------------------------------------------
// Encoding

std::vector<std::int32_t> encode(std::span<const std::string> tokens, const Vocabulary& vocab,
                                 int maxlen) {
    if (maxlen < 1) throw Error("maxlen must be >= 1");
    std::vector<std::int32_t> out(static_cast<std::size_t>(maxlen), Vocabulary::pad_index);
    const std::size_t n = std::min(tokens.size(), out.size());
    for (std::size_t k = 0; k < n; ++k) out[k] = vocab.index_of(tokens[k]);
    return out;
}

EncodedExample encode_example(std::span<const std::string> tokens, Label label,
                              const Vocabulary& vocab, int maxlen) {
    EncodedExample ex;
    ex.indices = encode(tokens, vocab, maxlen);
    ex.label = label;
    ex.original_length = static_cast<int>(std::min<std::size_t>(tokens.size(), maxlen));
    return ex;
}

std::span<const std::int32_t> unpadded(const EncodedExample& example) {
    return std::span<const std::int32_t>(example.indices)
        .first(static_cast<std::size_t>(example.original_length));
}

// ---------------------------------------------------------------------------
// Dataset CSV

namespace {

// RFC 4180 record reader over an in-memory buffer.
class CsvReader {
public:
    explicit CsvReader(std::string_view data) : data_(data) {
        if (data_.starts_with("\xEF\xBB\xBF")) data_.remove_prefix(3);
    }

    bool at_end() const { return pos_ >= data_.size(); }

    // Reads one record; `row` labels errors.
    std::vector<std::string> next(std::size_t row) {
        std::vector<std::string> fields;
        std::string field;
        while (true) {
            if (pos_ < data_.size() && data_[pos_] == '"') {
                ++pos_;
                while (true) {
                    if (pos_ >= data_.size()) throw ParseError(row, "unterminated quoted field");
                    const char c = data_[pos_++];
                    if (c == '"') {
                        if (pos_ < data_.size() && data_[pos_] == '"') {
                            field.push_back('"');
                            ++pos_;
                        } else {
                            break;
                        }
                    } else {
                        field.push_back(c);
                    }
                }
                if (pos_ < data_.size() && data_[pos_] != ',' && data_[pos_] != '\n' &&
                    data_[pos_] != '\r') {
                    throw ParseError(row, "unexpected character after closing quote");
                }
            } else {
                while (pos_ < data_.size() && data_[pos_] != ',' && data_[pos_] != '\n' &&
                       data_[pos_] != '\r') {
                    if (data_[pos_] == '"') throw ParseError(row, "stray quote in unquoted field");
                    field.push_back(data_[pos_++]);
                }
            }
            fields.push_back(std::move(field));
            field.clear();
            if (pos_ >= data_.size()) return fields;
            const char sep = data_[pos_++];
            if (sep == ',') continue;
            if (sep == '\r' && pos_ < data_.size() && data_[pos_] == '\n') ++pos_;
            return fields;
        }
    }

    // Skips blank lines between records.
    void skip_blank_lines() {
        while (pos_ < data_.size() && (data_[pos_] == '\n' || data_[pos_] == '\r')) ++pos_;
    }

private:
    std::string_view data_;
    std::size_t pos_ = 0;
};

bool needs_quoting(std::string_view text) {
    return text.empty() || text.find_first_of(",\"\r\n") != std::string_view::npos ||
           text.front() == ' ' || text.back() == ' ';
}

}  // namespace

std::vector<RawRecord> parse_dataset(std::istream& in) {
    const std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    CsvReader reader(data);
    reader.skip_blank_lines();
    if (reader.at_end()) throw ParseError(0, "dataset is empty (missing header)");
    auto header = reader.next(0);
    if (header.size() != 2 || header[0] != "label" || header[1] != "text") {
        throw ParseError(0, "dataset header must be 'label,text'");
    }
    std::vector<RawRecord> records;
    std::size_t row = 0;
    while (true) {
        reader.skip_blank_lines();
        if (reader.at_end()) break;
        ++row;
        auto fields = reader.next(row);
        if (fields.size() != 2) {
            throw ParseError(row, "expected 2 fields, found " + std::to_string(fields.size()));
        }
        auto label = parse_label(fields[0]);
        if (!label) throw ParseError(row, "unknown label '" + fields[0] + "'");
        if (!valid_utf8(fields[1])) throw ParseError(row, "text is not valid UTF-8");
        records.push_back(RawRecord{std::move(fields[1]), *label});
    }
    return records;
}

std::vector<RawRecord> load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open dataset " + path.string());
    return parse_dataset(in);
}

std::string format_dataset(std::span<const RawRecord> records) {
    std::string out = "label,text\n";
    for (const auto& r : records) {
        out += std::to_string(label_index(r.label));
        out += ',';
        if (needs_quoting(r.text)) {
            out += '"';
            for (char c : r.text) {
                if (c == '"') out += '"';
                out += c;
            }
            out += '"';
        } else {
            out += r.text;
        }
        out += '\n';
    }
    return out;
}

void save_dataset(const std::filesystem::path& path, std::span<const RawRecord> records) {
    write_file_text(path, format_dataset(records));
}

// ---------------------------------------------------------------------------
// Splitting

std::vector<std::size_t> stratified_test_positions(std::span<const RawRecord> records,
                                                   double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw Error("test_fraction must lie strictly between 0 and 1");
    }
    std::array<std::vector<std::size_t>, kNumClasses> by_class;
    for (std::size_t k = 0; k < records.size(); ++k) {
        by_class[label_index(records[k].label)].push_back(k);
    }
    Rng rng = Rng::derive(seed, streams::split);
    std::vector<std::size_t> test;
    for (int c = 0; c < kNumClasses; ++c) {
        auto& members = by_class[c];
        if (members.empty()) continue;
        if (members.size() < 2) {
            throw Error("cannot stratify: class '" + std::string(label_name(label_from_index(c))) +
                        "' has fewer than 2 examples");
        }
        const auto n = static_cast<long long>(members.size());
        long long n_test = std::llround(static_cast<double>(n) * test_fraction);
        n_test = std::clamp(n_test, 1LL, n - 1);
        rng.shuffle(std::span<std::size_t>(members));
        test.insert(test.end(), members.begin(), members.begin() + n_test);
    }
    std::sort(test.begin(), test.end());
    return test;
}

Split stratified_split(std::span<const RawRecord> records, double test_fraction, std::uint64_t seed) {
    const auto test_positions = stratified_test_positions(records, test_fraction, seed);
    Split split;
    std::size_t next = 0;
    for (std::size_t k = 0; k < records.size(); ++k) {
        if (next < test_positions.size() && test_positions[next] == k) {
            split.test.push_back(records[k]);
            ++next;
        } else {
            split.train.push_back(records[k]);
        }
    }
    return split;
}

std::array<std::size_t, kNumClasses> class_counts(std::span<const RawRecord> records) {
    std::array<std::size_t, kNumClasses> counts{};
    for (const auto& r : records) ++counts[label_index(r.label)];
    return counts;
}

std::array<std::size_t, kNumClasses> class_counts(std::span<const EncodedExample> examples) {
    std::array<std::size_t, kNumClasses> counts{};
    for (const auto& e : examples) ++counts[label_index(e.label)];
    return counts;
}

// ---------------------------------------------------------------------------
// Encoded dataset file

std::string serialize_encoded(std::span<const EncodedExample> examples, int maxlen,
                              const Digest& vocab_fingerprint) {
    std::ostringstream out;
    out << "#senti-encoded v1 maxlen=" << maxlen << " vocab=" << to_hex(vocab_fingerprint) << '\n';
    for (const auto& ex : examples) {
        if (ex.indices.size() != static_cast<std::size_t>(maxlen)) {
            throw Error("encoded example length differs from maxlen");
        }
        out << label_index(ex.label) << '\t' << ex.original_length << '\t';
        for (std::size_t k = 0; k < ex.indices.size(); ++k) {
            if (k) out << ' ';
            out << ex.indices[k];
        }
        out << '\n';
    }
    return out.str();
}

EncodedDataset parse_encoded(std::string_view text) {
    auto lines = lines_of(text);
    constexpr std::string_view kHeader = "#senti-encoded v1 maxlen=";
    if (lines.empty() || !lines[0].starts_with(kHeader)) {
        throw FormatError("encoded dataset lacks '#senti-encoded v1' header");
    }
    auto rest = lines[0].substr(kHeader.size());
    auto space = rest.find(" vocab=");
    if (space == std::string_view::npos) throw FormatError("encoded dataset header lacks vocab=");
    EncodedDataset ds;
    ds.maxlen = parse_int<int>(rest.substr(0, space), 0, "maxlen");
    if (ds.maxlen < 1) throw FormatError("encoded dataset maxlen must be >= 1");
    ds.vocab_fingerprint = digest_from_hex(rest.substr(space + 7));
    for (std::size_t n = 1; n < lines.size(); ++n) {
        auto fields = split_on(lines[n], '\t');
        if (fields.size() != 3) throw ParseError(n, "encoded line needs 3 tab-separated fields");
        EncodedExample ex;
        ex.label = label_from_index(parse_int<int>(fields[0], n, "label"));
        ex.original_length = parse_int<int>(fields[1], n, "original_length");
        for (auto part : split_on(fields[2], ' ')) {
            ex.indices.push_back(parse_int<std::int32_t>(part, n, "index"));
        }
        if (ex.indices.size() != static_cast<std::size_t>(ds.maxlen) || ex.original_length < 0 ||
            ex.original_length > ds.maxlen) {
            throw ParseError(n, "encoded example inconsistent with maxlen");
        }
        ds.examples.push_back(std::move(ex));
    }
    return ds;
}

}  // namespace senti

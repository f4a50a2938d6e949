#include "senti/pipeline.hpp"

#include "senti/error.hpp"

#include <unicode/uchar.h>
#include <unicode/uscript.h>
#include <unicode/utf8.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace senti {

using nlohmann::json;

std::string_view model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::lstm: return "lstm";
        case ModelKind::rnn: return "rnn";
        case ModelKind::naive_bayes: return "naive_bayes";
        case ModelKind::logreg: return "logreg";
    }
    return "lstm";
}

ModelKind parse_model_kind(std::string_view name) {
    for (auto kind : {ModelKind::lstm, ModelKind::rnn, ModelKind::naive_bayes, ModelKind::logreg}) {
        if (name == model_kind_name(kind)) return kind;
    }
    throw Error("unknown model '" + std::string(name) + "' (expected lstm, rnn, naive_bayes or logreg)");
}

namespace {

std::string_view format_name(OutputFormat format) { return format == OutputFormat::json ? "json" : "text"; }

OutputFormat parse_format(std::string_view name) {
    if (name == "text") return OutputFormat::text;
    if (name == "json") return OutputFormat::json;
    throw Error("unknown format '" + std::string(name) + "' (expected text or json)");
}

enum class FieldKind { integer, unsigned_integer, real, optional_real, boolean, text };

struct Field {
    const char* name;
    FieldKind kind;
};

constexpr Field kFields[] = {
    {"seed", FieldKind::unsigned_integer},
    {"dim", FieldKind::integer},
    {"window", FieldKind::integer},
    {"min_count", FieldKind::integer},
    {"iterations", FieldKind::integer},
    {"negatives", FieldKind::integer},
    {"embedding_learning_rate", FieldKind::real},
    {"dynamic_window", FieldKind::boolean},
    {"epochs", FieldKind::integer},
    {"batch_size", FieldKind::integer},
    {"optimizer", FieldKind::text},
    {"learning_rate", FieldKind::optional_real},
    {"shuffle", FieldKind::boolean},
    {"clip_norm", FieldKind::optional_real},
    {"train_embedding", FieldKind::boolean},
    {"hidden", FieldKind::integer},
    {"maxlen", FieldKind::integer},
    {"tokenizer", FieldKind::text},
    {"test_fraction", FieldKind::real},
    {"input", FieldKind::text},
    {"test_input", FieldKind::text},
    {"output_dir", FieldKind::text},
    {"averaging", FieldKind::text},
    {"format", FieldKind::text},
    {"model", FieldKind::text},
    {"nb_alpha", FieldKind::real},
    {"logreg_l2", FieldKind::real},
    {"logreg_iterations", FieldKind::integer},
    {"logreg_learning_rate", FieldKind::real},
};

const Field* find_field(std::string_view key) {
    for (const auto& f : kFields) {
        if (key == f.name) return &f;
    }
    return nullptr;
}

[[noreturn]] void bad_type(std::string_view key, std::string_view expected) {
    throw Error("config key '" + std::string(key) + "' must be " + std::string(expected));
}

int as_int(const json& v, std::string_view key) {
    if (!v.is_number_integer()) bad_type(key, "an integer");
    const auto x = v.get<std::int64_t>();
    if (x < INT32_MIN || x > INT32_MAX) bad_type(key, "a 32-bit integer");
    return static_cast<int>(x);
}

std::uint64_t as_unsigned(const json& v, std::string_view key) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    bad_type(key, "a non-negative integer");
}

double as_real(const json& v, std::string_view key) {
    if (!v.is_number()) bad_type(key, "a number");
    return v.get<double>();
}

std::optional<double> as_optional_real(const json& v, std::string_view key) {
    if (v.is_null()) return std::nullopt;
    return as_real(v, key);
}

bool as_bool(const json& v, std::string_view key) {
    if (!v.is_boolean()) bad_type(key, "true or false");
    return v.get<bool>();
}

std::string as_text(const json& v, std::string_view key) {
    if (!v.is_string()) bad_type(key, "a string");
    return v.get<std::string>();
}

json optional_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

void emit(const Logger& log, const std::string& line) {
    if (log) log(line);
}

std::string fixed(double x, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

}  // namespace

EmbeddingConfig RunConfig::embedding_config() const {
    EmbeddingConfig c;
    c.dim = dim;
    c.window = window;
    c.min_count = min_count;
    c.iterations = iterations;
    c.negatives = negatives;
    c.learning_rate = embedding_learning_rate;
    c.seed = seed;
    c.dynamic_window = dynamic_window;
    return c;
}

TrainConfig RunConfig::train_config() const {
    TrainConfig c;
    c.epochs = epochs;
    c.batch_size = batch_size;
    c.optimizer = optimizer;
    c.learning_rate = learning_rate;
    c.seed = seed;
    c.shuffle = shuffle;
    c.clip_norm = clip_norm;
    c.train_embedding = train_embedding;
    return c;
}

LogisticConfig RunConfig::logistic_config() const {
    return {logreg_l2, logreg_learning_rate, logreg_iterations};
}

void RunConfig::validate() const {
    embedding_config().validate();
    train_config().validate();
    if (hidden < 1) throw Error("hidden must be >= 1");
    if (maxlen < 1) throw Error("maxlen must be >= 1");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw Error("test_fraction must lie in (0, 1)");
    if (tokenizer != "auto") parse_tokenizer_mode(tokenizer);
    if (!(nb_alpha > 0.0)) throw Error("nb_alpha must be positive");
    if (!(logreg_l2 >= 0.0)) throw Error("logreg_l2 must be non-negative");
    if (!(logreg_learning_rate > 0.0)) throw Error("logreg_learning_rate must be positive");
    if (logreg_iterations < 0) throw Error("logreg_iterations must be >= 0");
    if (output_dir.empty()) throw Error("output_dir must not be empty");
}

json RunConfig::to_json() const {
    json j = json::object();
    j["seed"] = seed;
    j["dim"] = dim;
    j["window"] = window;
    j["min_count"] = min_count;
    j["iterations"] = iterations;
    j["negatives"] = negatives;
    j["embedding_learning_rate"] = embedding_learning_rate;
    j["dynamic_window"] = dynamic_window;
    j["epochs"] = epochs;
    j["batch_size"] = batch_size;
    j["optimizer"] = std::string(optimizer_name(optimizer));
    j["learning_rate"] = optional_json(learning_rate);
    j["shuffle"] = shuffle;
    j["clip_norm"] = optional_json(clip_norm);
    j["train_embedding"] = train_embedding;
    j["hidden"] = hidden;
    j["maxlen"] = maxlen;
    j["tokenizer"] = tokenizer;
    j["test_fraction"] = test_fraction;
    j["input"] = input;
    j["test_input"] = test_input;
    j["output_dir"] = output_dir;
    j["averaging"] = std::string(averaging_name(averaging));
    j["format"] = std::string(format_name(format));
    j["model"] = std::string(model_kind_name(model));
    j["nb_alpha"] = nb_alpha;
    j["logreg_l2"] = logreg_l2;
    j["logreg_iterations"] = logreg_iterations;
    j["logreg_learning_rate"] = logreg_learning_rate;
    return j;
}

void RunConfig::apply(const json& j) {
    if (!j.is_object()) throw Error("config must be a JSON object");
    for (const auto& [key, v] : j.items()) {
        if (!find_field(key)) throw Error("unknown config key '" + key + "'");
        if (key == "seed") seed = as_unsigned(v, key);
        else if (key == "dim") dim = as_int(v, key);
        else if (key == "window") window = as_int(v, key);
        else if (key == "min_count") min_count = as_int(v, key);
        else if (key == "iterations") iterations = as_int(v, key);
        else if (key == "negatives") negatives = as_int(v, key);
        else if (key == "embedding_learning_rate") embedding_learning_rate = as_real(v, key);
        else if (key == "dynamic_window") dynamic_window = as_bool(v, key);
        else if (key == "epochs") epochs = as_int(v, key);
        else if (key == "batch_size") batch_size = as_int(v, key);
        else if (key == "optimizer") optimizer = parse_optimizer(as_text(v, key));
        else if (key == "learning_rate") learning_rate = as_optional_real(v, key);
        else if (key == "shuffle") shuffle = as_bool(v, key);
        else if (key == "clip_norm") clip_norm = as_optional_real(v, key);
        else if (key == "train_embedding") train_embedding = as_bool(v, key);
        else if (key == "hidden") hidden = as_int(v, key);
        else if (key == "maxlen") maxlen = as_int(v, key);
        else if (key == "tokenizer") tokenizer = as_text(v, key);
        else if (key == "test_fraction") test_fraction = as_real(v, key);
        else if (key == "input") input = as_text(v, key);
        else if (key == "test_input") test_input = as_text(v, key);
        else if (key == "output_dir") output_dir = as_text(v, key);
        else if (key == "averaging") averaging = parse_averaging(as_text(v, key));
        else if (key == "format") format = parse_format(as_text(v, key));
        else if (key == "model") model = parse_model_kind(as_text(v, key));
        else if (key == "nb_alpha") nb_alpha = as_real(v, key);
        else if (key == "logreg_l2") logreg_l2 = as_real(v, key);
        else if (key == "logreg_iterations") logreg_iterations = as_int(v, key);
        else if (key == "logreg_learning_rate") logreg_learning_rate = as_real(v, key);
    }
}

std::vector<std::string> RunConfig::keys() {
    std::vector<std::string> out;
    for (const auto& f : kFields) out.emplace_back(f.name);
    return out;
}

json RunConfig::flag_value(std::string_view key, const std::string& text) {
    const Field* field = find_field(key);
    if (!field) throw Error("unknown config key '" + std::string(key) + "'");
    if (field->kind == FieldKind::text) return text;
    if (field->kind == FieldKind::optional_real && (text == "none" || text == "null")) return nullptr;
    try {
        return json::parse(text);
    } catch (const json::exception&) {
        throw Error("invalid value '" + text + "' for --" + std::string(key));
    }
}

RunConfig resolve_config(const std::optional<std::filesystem::path>& config_file, const json& flags) {
    RunConfig config;
    if (config_file) {
        json file;
        try {
            file = json::parse(read_file_text(*config_file));
        } catch (const json::exception& e) {
            throw Error("cannot parse config file " + config_file->string() + ": " + e.what());
        }
        config.apply(file);
    }
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) config.output_dir = env;
    config.apply(flags);
    config.validate();
    return config;
}

TokenizerMode detect_tokenizer(std::span<const RawRecord> records) {
    std::size_t letters = 0;
    std::size_t cjk = 0;
    for (const auto& r : records) {
        const auto* s = reinterpret_cast<const std::uint8_t*>(r.text.data());
        const auto n = static_cast<std::int32_t>(r.text.size());
        std::int32_t i = 0;
        while (i < n) {
            UChar32 c;
            U8_NEXT(s, i, n, c);
            if (c < 0 || !u_isalpha(c)) continue;
            ++letters;
            UErrorCode status = U_ZERO_ERROR;
            const UScriptCode script = uscript_getScript(c, &status);
            if (U_SUCCESS(status) &&
                (script == USCRIPT_HAN || script == USCRIPT_HIRAGANA || script == USCRIPT_KATAKANA)) {
                ++cjk;
            }
        }
    }
    return 2 * cjk > letters ? TokenizerMode::character : TokenizerMode::whitespace;
}

std::string CommandOutput::render(OutputFormat format) const {
    if (format == OutputFormat::json) return json.dump(2) + "\n";
    return text;
}

EncodedExample encode_text(std::string_view raw, Label label, const Vocabulary& vocab, TokenizerMode tokenizer,
                           int maxlen) {
    const auto tokens = tokenize(clean_text(raw), tokenizer);
    return encode_example(tokens, label, vocab, maxlen);
}

namespace {

json class_count_json(const std::array<std::size_t, kNumClasses>& counts) {
    json j = json::object();
    std::size_t total = 0;
    for (int k = 0; k < kNumClasses; ++k) {
        j[std::string(label_name(label_from_index(k)))] = counts[static_cast<std::size_t>(k)];
        total += counts[static_cast<std::size_t>(k)];
    }
    j["total"] = total;
    return j;
}

// The configuration as recorded in artifacts. Where the run writes and how it
// prints do not change any result, so two runs into different directories match.
json artifact_config(const RunConfig& config) {
    json j = config.to_json();
    j.erase("output_dir");
    j.erase("format");
    return j;
}

void write_run_manifest(const Layout& layout, std::string_view command, const RunConfig& config) {
    json j;
    j["command"] = std::string(command);
    j["config"] = artifact_config(config);
    write_file_text(layout.run_manifest(), j.dump(2) + "\n");
}

std::vector<RawRecord> load_records(const std::string& path, std::string_view what) {
    auto records = load_dataset(path);
    if (records.empty()) throw Error("no records in " + std::string(what) + " " + path);
    return records;
}

std::vector<std::vector<std::int32_t>> unpadded_corpus(std::span<const EncodedExample> examples) {
    std::vector<std::vector<std::int32_t>> out;
    out.reserve(examples.size());
    for (const auto& ex : examples) {
        const auto u = unpadded(ex);
        out.emplace_back(u.begin(), u.end());
    }
    return out;
}

std::vector<Label> labels_of(std::span<const EncodedExample> examples) {
    std::vector<Label> out;
    out.reserve(examples.size());
    for (const auto& ex : examples) out.push_back(ex.label);
    return out;
}

Label argmax(const Vector& probabilities) {
    Eigen::Index best = 0;
    probabilities.maxCoeff(&best);
    return label_from_index(static_cast<int>(best));
}

MetricsReport evaluate_bundle(const Bundle& bundle, std::span<const EncodedExample> examples, Averaging averaging) {
    if (examples.empty()) throw Error("evaluation set is empty");
    std::vector<Label> predicted;
    predicted.reserve(examples.size());
    for (const auto& ex : examples) predicted.push_back(argmax(bundle_probabilities(bundle, ex.indices)));
    return metrics(confusion(labels_of(examples), predicted), averaging);
}

PreparedData prepare(const RunConfig& config, const Logger& log) {
    if (!config.input.empty()) cmd_preprocess(config, log);
    const Layout layout{config.output_dir};
    if (!std::filesystem::exists(layout.stats())) {
        throw Error("no prepared data in " + layout.data().string() + " (run preprocess or pass --input)");
    }
    return load_prepared(layout);
}

// Retrains when the run names an input, otherwise reuses a compatible embedding file.
EmbeddingMatrix obtain_embedding(const RunConfig& config, const PreparedData& data, const Logger& log) {
    const Layout layout{config.output_dir};
    if (config.input.empty() && std::filesystem::exists(layout.embedding())) {
        auto embedding = load_embeddings(layout.embedding(), data.vocab.fingerprint());
        if (embedding.dim() != config.dim) {
            throw Error("existing embedding has dim " + std::to_string(embedding.dim()) + " but dim is " +
                        std::to_string(config.dim) + " (rerun train-embeddings)");
        }
        emit(log, "reusing " + layout.embedding().string());
        return embedding;
    }
    emit(log, "training embeddings: dim " + std::to_string(config.dim) + ", " + std::to_string(config.iterations) +
                  " iterations");
    const auto corpus = unpadded_corpus(data.train);
    auto embedding = train_skipgram(corpus, config.embedding_config(), data.vocab);
    round_to_stored_precision(embedding);
    save_embeddings(layout.embedding(), embedding);
    return embedding;
}

std::string_view display_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::lstm: return "LSTM";
        case ModelKind::rnn: return "RNN";
        case ModelKind::naive_bayes: return "Naive Bayes";
        case ModelKind::logreg: return "Logistic Regression";
    }
    return "LSTM";
}

struct TrainedModel {
    Bundle bundle;
    json history = json::array();
};

template <class Params>
json history_json(const TrainReport& report, ModelKind kind, const Logger& log) {
    json out = json::array();
    for (std::size_t e = 0; e < report.epochs.size(); ++e) {
        const auto& s = report.epochs[e];
        emit(log, std::string(model_kind_name(kind)) + " epoch " + std::to_string(e + 1) + "/" +
                      std::to_string(report.epochs.size()) + ": loss " + fixed(s.mean_loss, 4) + ", train accuracy " +
                      fixed(100.0 * s.accuracy, 2) + "%, " + fixed(s.seconds, 1) + " s");
        out.push_back({{"epoch", e + 1}, {"mean_loss", s.mean_loss}, {"accuracy", s.accuracy}});
    }
    return out;
}

TrainedModel train_model(ModelKind kind, const RunConfig& config, const PreparedData& data,
                         const EmbeddingMatrix& embedding, const Logger& log) {
    if (data.train.empty()) throw Error("training set is empty");
    TrainedModel out;
    out.bundle.vocab = data.vocab;
    out.bundle.maxlen = data.maxlen;
    out.bundle.tokenizer = data.tokenizer;
    out.bundle.seed = config.seed;
    out.bundle.config = artifact_config(config);
    emit(log, "training " + std::string(model_kind_name(kind)) + " on " + std::to_string(data.train.size()) +
                  " examples");

    switch (kind) {
        case ModelKind::lstm: {
            auto result = lstm_classifier_train(data.train, config.train_config(), config.hidden, embedding);
            out.history = history_json<LstmParams>(result.report, kind, log);
            round_to_stored_precision(result.params);
            round_to_stored_precision(result.embedding);
            out.bundle.model = std::move(result.params);
            out.bundle.embedding = std::move(result.embedding);
            break;
        }
        case ModelKind::rnn: {
            auto result = rnn_classifier_train(data.train, config.train_config(), config.hidden, embedding);
            out.history = history_json<RnnParams>(result.report, kind, log);
            round_to_stored_precision(result.params);
            round_to_stored_precision(result.embedding);
            out.bundle.model = std::move(result.params);
            out.bundle.embedding = std::move(result.embedding);
            break;
        }
        case ModelKind::naive_bayes: {
            auto model = nb_fit(data.train, data.vocab.size(), config.nb_alpha);
            round_to_stored_precision(model);
            out.bundle.model = std::move(model);
            break;
        }
        case ModelKind::logreg: {
            const auto docs = unpadded_corpus(data.train);
            LogisticBaseline baseline;
            baseline.tfidf = tfidf_fit(docs, data.vocab.size());
            std::vector<SparseVector> features;
            features.reserve(docs.size());
            for (const auto& d : docs) features.push_back(tfidf_transform(baseline.tfidf, d));
            baseline.model =
                logreg_fit(features, labels_of(data.train), data.vocab.size(), config.logistic_config());
            round_to_stored_precision(baseline);
            out.bundle.model = std::move(baseline);
            break;
        }
    }
    return out;
}

std::string metrics_text(std::string_view title, const MetricsReport& report, Averaging averaging) {
    std::ostringstream os;
    const ModelRow row{std::string(title), report};
    os << format_table(std::span<const ModelRow>(&row, 1), averaging);
    os << "\nConfusion matrix (rows actual, columns predicted)\n";
    os << "           negative   neutral  positive\n";
    for (int a = 0; a < kNumClasses; ++a) {
        char line[96];
        const auto& c = report.confusion.counts[static_cast<std::size_t>(a)];
        std::snprintf(line, sizeof line, "%-9s %9llu %9llu %9llu\n",
                      std::string(label_name(label_from_index(a))).c_str(), static_cast<unsigned long long>(c[0]),
                      static_cast<unsigned long long>(c[1]), static_cast<unsigned long long>(c[2]));
        os << line;
    }
    return os.str();
}

std::filesystem::path checkpoint_path(const RunConfig& config, const std::optional<std::filesystem::path>& given) {
    return given ? *given : Layout{config.output_dir}.checkpoint(config.model);
}

}  // namespace

PreparedData load_prepared(const Layout& layout) {
    json stats;
    try {
        stats = json::parse(read_file_text(layout.stats()));
    } catch (const json::exception& e) {
        throw FormatError("invalid " + layout.stats().string() + ": " + e.what());
    }
    PreparedData data;
    data.vocab = Vocabulary::load(layout.vocab());
    const auto fingerprint = data.vocab.fingerprint();
    try {
        data.tokenizer = parse_tokenizer_mode(stats.at("tokenizer").get<std::string>());
        data.maxlen = stats.at("maxlen").get<int>();
    } catch (const json::exception& e) {
        throw FormatError("incomplete " + layout.stats().string() + ": " + e.what());
    }
    for (auto [path, target] : {std::pair{layout.train_set(), &data.train}, std::pair{layout.test_set(), &data.test}}) {
        auto encoded = parse_encoded(read_file_text(path));
        if (encoded.vocab_fingerprint != fingerprint) {
            throw FormatError(path.string() + " was encoded with a different vocabulary");
        }
        if (encoded.maxlen != data.maxlen) throw FormatError(path.string() + " disagrees with stats.json on maxlen");
        *target = std::move(encoded.examples);
    }
    return data;
}

CommandOutput cmd_preprocess(const RunConfig& config, const Logger& log) {
    config.validate();
    if (config.input.empty()) throw Error("no input dataset (set --input)");
    const Layout layout{config.output_dir};

    auto records = load_dataset(config.input);
    if (records.empty()) throw Error("no records in " + config.input);
    std::vector<RawRecord> train_records;
    std::vector<RawRecord> test_records;
    if (!config.test_input.empty()) {
        train_records = records;
        test_records = load_records(config.test_input, "test input");
    } else {
        auto split = stratified_split(records, config.test_fraction, config.seed);
        train_records = std::move(split.train);
        test_records = std::move(split.test);
    }

    std::vector<RawRecord> all = train_records;
    all.insert(all.end(), test_records.begin(), test_records.end());
    const TokenizerMode mode = config.tokenizer == "auto" ? detect_tokenizer(all) : parse_tokenizer_mode(config.tokenizer);

    auto tokenize_all = [&](std::span<const RawRecord> rs) {
        std::vector<std::vector<std::string>> out;
        out.reserve(rs.size());
        for (const auto& r : rs) out.push_back(tokenize(clean_text(r.text), mode));
        return out;
    };
    const auto train_tokens = tokenize_all(train_records);
    const auto test_tokens = tokenize_all(test_records);
    const Vocabulary vocab = Vocabulary::build(train_tokens, config.min_count);

    std::size_t dropped = 0;
    std::size_t truncated = 0;
    std::size_t token_total = 0;
    auto encode_all = [&](std::span<const RawRecord> rs, const std::vector<std::vector<std::string>>& tokens) {
        std::vector<EncodedExample> out;
        for (std::size_t k = 0; k < rs.size(); ++k) {
            // A text with nothing left after cleaning has no timesteps to classify.
            if (tokens[k].empty()) {
                ++dropped;
                continue;
            }
            if (tokens[k].size() > static_cast<std::size_t>(config.maxlen)) ++truncated;
            token_total += tokens[k].size();
            out.push_back(encode_example(tokens[k], rs[k].label, vocab, config.maxlen));
        }
        return out;
    };
    const auto train = encode_all(train_records, train_tokens);
    const auto test = encode_all(test_records, test_tokens);

    const auto all_counts = class_counts(std::span<const RawRecord>(all));
    json stats;
    stats["records"] = class_count_json(all_counts);
    stats["train"] = class_count_json(class_counts(std::span<const EncodedExample>(train)));
    stats["test"] = class_count_json(class_counts(std::span<const EncodedExample>(test)));
    stats["dropped_empty"] = dropped;
    stats["truncated"] = truncated;
    stats["mean_tokens"] = train.size() + test.size() == 0
                               ? 0.0
                               : static_cast<double>(token_total) / static_cast<double>(train.size() + test.size());
    stats["vocabulary_size"] = vocab.token_count();
    stats["min_count"] = config.min_count;
    stats["maxlen"] = config.maxlen;
    stats["tokenizer"] = std::string(tokenizer_mode_name(mode));
    stats["split"] = config.test_input.empty() ? json{{"stratified", true}, {"test_fraction", config.test_fraction}}
                                               : json{{"stratified", false}, {"test_input", config.test_input}};
    stats["seed"] = config.seed;

    const auto fingerprint = vocab.fingerprint();
    vocab.save(layout.vocab());
    write_file_text(layout.train_set(), serialize_encoded(train, config.maxlen, fingerprint));
    write_file_text(layout.test_set(), serialize_encoded(test, config.maxlen, fingerprint));
    write_file_text(layout.stats(), stats.dump(2) + "\n");
    write_run_manifest(layout, "preprocess", config);

    std::ostringstream os;
    const std::size_t total = all.size();
    os << "records: " << total << "\n";
    for (int k = 0; k < kNumClasses; ++k) {
        const auto n = all_counts[static_cast<std::size_t>(k)];
        char line[96];
        std::snprintf(line, sizeof line, "  %-9s %8zu  (%.2f%%)\n", std::string(label_name(label_from_index(k))).c_str(),
                      n, 100.0 * static_cast<double>(n) / static_cast<double>(total));
        os << line;
    }
    os << "train: " << train.size() << ", test: " << test.size() << ", dropped (empty after cleaning): " << dropped
       << "\n";
    os << "vocabulary: " << vocab.token_count() << " tokens (min_count " << config.min_count << ")\n";
    os << "tokenizer: " << tokenizer_mode_name(mode) << ", maxlen " << config.maxlen << " (" << truncated
       << " truncated)\n";
    emit(log, "wrote " + layout.data().string());
    return {stats, os.str()};
}

CommandOutput cmd_train_embeddings(const RunConfig& config, const Logger& log) {
    config.validate();
    const PreparedData data = prepare(config, log);
    const Layout layout{config.output_dir};
    emit(log, "training embeddings: dim " + std::to_string(config.dim) + ", " + std::to_string(config.iterations) +
                  " iterations");
    auto embedding = train_skipgram(unpadded_corpus(data.train), config.embedding_config(), data.vocab);
    round_to_stored_precision(embedding);
    save_embeddings(layout.embedding(), embedding);
    write_run_manifest(layout, "train-embeddings", config);

    json j;
    j["path"] = layout.embedding().string();
    j["rows"] = embedding.row_count();
    j["dim"] = embedding.dim();
    j["sha256"] = to_hex(sha256(read_file_bytes(layout.embedding())));
    std::ostringstream os;
    os << "embedding: " << embedding.row_count() << " x " << embedding.dim() << " -> " << layout.embedding().string()
       << "\n";
    return {j, os.str()};
}

CommandOutput cmd_train(const RunConfig& config, const Logger& log) {
    config.validate();
    const PreparedData data = prepare(config, log);
    const Layout layout{config.output_dir};
    std::optional<EmbeddingMatrix> embedding;
    if (config.model == ModelKind::lstm || config.model == ModelKind::rnn) {
        embedding = obtain_embedding(config, data, log);
    }
    const auto trained = train_model(config.model, config, data, embedding ? *embedding : EmbeddingMatrix{}, log);
    const auto dir = layout.checkpoint(config.model);
    checkpoint(dir, trained.bundle);

    json j;
    j["model"] = std::string(model_kind_name(config.model));
    j["checkpoint"] = dir.string();
    j["epochs"] = trained.history;
    std::string text = std::string(display_name(config.model)) + " checkpoint -> " + dir.string() + "\n";
    if (!data.test.empty()) {
        const auto report = evaluate_bundle(trained.bundle, data.test, config.averaging);
        j["evaluation"] = to_json(report);
        text += metrics_text(display_name(config.model), report, config.averaging);
    }
    write_file_text(layout.train_report(config.model), j.dump(2) + "\n");
    write_run_manifest(layout, "train", config);
    return {j, text};
}

CommandOutput cmd_evaluate(const RunConfig& config, const EvaluateOptions& options, const Logger& log) {
    const auto dir = checkpoint_path(config, options.checkpoint);
    const Bundle bundle = restore(dir);
    std::vector<EncodedExample> examples;
    std::string source;
    if (options.data) {
        std::size_t dropped = 0;
        for (const auto& r : load_records(options.data->string(), "dataset")) {
            auto ex = encode_text(r.text, r.label, bundle.vocab, bundle.tokenizer, bundle.maxlen);
            if (ex.original_length == 0) {
                ++dropped;
                continue;
            }
            examples.push_back(std::move(ex));
        }
        if (dropped) emit(log, "skipped " + std::to_string(dropped) + " records that are empty after cleaning");
        source = options.data->string();
    } else {
        if (options.split != "train" && options.split != "test") {
            throw Error("split must be train or test, not '" + options.split + "'");
        }
        auto data = load_prepared(Layout{config.output_dir});
        if (data.vocab.fingerprint() != bundle.vocab.fingerprint()) {
            throw Error("prepared data and checkpoint use different vocabularies");
        }
        examples = options.split == "train" ? std::move(data.train) : std::move(data.test);
        source = options.split + " split";
    }
    const auto report = evaluate_bundle(bundle, examples, config.averaging);
    json j = to_json(report);
    j["checkpoint"] = dir.string();
    j["model"] = std::string(model_kind_tag(bundle.model));
    j["source"] = source;
    j["examples"] = examples.size();
    const auto kind = parse_model_kind(model_kind_tag(bundle.model));
    return {j, metrics_text(display_name(kind), report, config.averaging)};
}

CommandOutput cmd_predict(const RunConfig& config, const std::optional<std::filesystem::path>& checkpoint,
                          std::string_view text) {
    const Bundle bundle = restore(checkpoint_path(config, checkpoint));
    const auto ex = encode_text(text, Label::neutral, bundle.vocab, bundle.tokenizer, bundle.maxlen);
    if (ex.original_length == 0) throw Error("text is empty after cleaning");
    const Vector p = bundle_probabilities(bundle, ex.indices);
    const Label label = argmax(p);

    json j;
    j["label"] = std::string(label_name(label));
    j["probabilities"] = json::object();
    std::ostringstream os;
    os << label_name(label) << "\n";
    for (int k = 0; k < kNumClasses; ++k) {
        const std::string name(label_name(label_from_index(k)));
        j["probabilities"][name] = p(k);
        char line[64];
        std::snprintf(line, sizeof line, "  %-9s %.4f\n", name.c_str(), p(k));
        os << line;
    }
    return {j, os.str()};
}

CommandOutput cmd_compare(const RunConfig& config, const Logger& log) {
    config.validate();
    const PreparedData data = prepare(config, log);
    if (data.test.empty()) throw Error("comparison needs a non-empty test set");
    const Layout layout{config.output_dir};
    const EmbeddingMatrix embedding = obtain_embedding(config, data, log);

    std::vector<ModelRow> rows;
    json training = json::object();
    for (auto kind : {ModelKind::lstm, ModelKind::rnn, ModelKind::naive_bayes, ModelKind::logreg}) {
        const auto trained = train_model(kind, config, data, embedding, log);
        checkpoint(layout.checkpoint(kind), trained.bundle);
        rows.push_back({std::string(display_name(kind)), evaluate_bundle(trained.bundle, data.test, config.averaging)});
        training[std::string(model_kind_name(kind))] = trained.history;
        emit(log, std::string(display_name(kind)) + " test accuracy " + fixed(100.0 * rows.back().metrics.accuracy, 2) +
                      "%");
    }

    json report;
    report["table"] = table_json(rows, config.averaging);
    report["models"] = json::object();
    for (const auto& row : rows) report["models"][row.model] = to_json(row.metrics);
    report["training"] = training;
    report["train_examples"] = data.train.size();
    report["test_examples"] = data.test.size();
    report["seed"] = config.seed;
    report["config"] = artifact_config(config);
    const std::string table = format_table(rows, config.averaging);
    write_file_text(layout.report_json(), report.dump(2) + "\n");
    write_file_text(layout.report_text(), table);
    write_run_manifest(layout, "compare", config);
    return {report, table};
}

}  // namespace senti

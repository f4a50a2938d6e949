#include "senti/bundle.hpp"

#include "senti/error.hpp"

#include <cmath>

namespace senti {

namespace {

constexpr std::string_view kLstmMagic{"SENTI-LSTM\0", 11};
constexpr std::string_view kRnnMagic{"SENTI-RNN\0", 10};
constexpr std::string_view kNaiveBayesMagic{"SENTI-NB\0", 9};
constexpr std::string_view kLogisticMagic{"SENTI-LOGREG\0", 13};

constexpr const char* kModelFile = "model.bin";
constexpr const char* kEmbeddingFile = "embedding.bin";
constexpr const char* kVocabFile = "vocab.tsv";
constexpr const char* kManifestFile = "manifest.json";

void write_tensor(ByteWriter& w, std::span<const double> values, Eigen::Index rows, Eigen::Index cols) {
    // Column-major storage out, row-major order on disk.
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) w.f32(static_cast<float>(values[static_cast<std::size_t>(c * rows + r)]));
    }
}

void read_tensor(ByteReader& r, std::span<double> values, Eigen::Index rows, Eigen::Index cols) {
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index c = 0; c < cols; ++c) values[static_cast<std::size_t>(c * rows + i)] = r.f32();
    }
}

template <class M>
void write_matrix(ByteWriter& w, const M& m) {
    write_tensor(w, flat(m), m.rows(), m.cols());
}

template <class M>
void read_matrix(ByteReader& r, M& m) {
    read_tensor(r, flat(m), m.rows(), m.cols());
}

void append_crc(ByteWriter& w) { w.u32(crc32(w.bytes())); }

// Checks the trailing CRC and returns the payload without it.
std::span<const std::uint8_t> verify_crc(std::span<const std::uint8_t> bytes, std::string_view what) {
    if (bytes.size() < 4) throw FormatError(std::string(what) + " file is truncated");
    const auto body = bytes.first(bytes.size() - 4);
    ByteReader tail(bytes.last(4));
    if (tail.u32() != crc32(body)) throw FormatError(std::string(what) + " file failed its CRC check");
    return body;
}

void check_version(std::uint32_t version, std::string_view what) {
    if (version != kModelFormatVersion) {
        throw UnsupportedVersionError("unsupported " + std::string(what) + " format version " +
                                      std::to_string(version));
    }
}

template <class Params>
std::vector<std::uint8_t> serialize_recurrent(std::string_view magic, const Params& params, int maxlen,
                                              const Digest& embedding_checksum) {
    params.check_shapes();
    for (const auto& t : params.tensors()) {
        for (double x : t.values) {
            if (!std::isfinite(x)) throw NumericError("model tensor " + std::string(t.name) + " is not finite");
        }
    }
    ByteWriter w;
    w.raw(magic);
    w.u32(kModelFormatVersion);
    w.u32(static_cast<std::uint32_t>(params.hidden));
    w.u32(static_cast<std::uint32_t>(params.input));
    w.u32(static_cast<std::uint32_t>(params.classes));
    w.u32(static_cast<std::uint32_t>(maxlen));
    w.digest(embedding_checksum);
    for (const auto& t : params.tensors()) write_tensor(w, t.values, t.rows, t.cols);
    append_crc(w);
    return w.take();
}

template <class Params>
ModelFile<Params> parse_recurrent(std::string_view magic, std::span<const std::uint8_t> bytes, std::string_view what) {
    const auto body = verify_crc(bytes, what);
    ByteReader r(body);
    r.expect(magic, what);
    check_version(r.u32(), what);
    const auto hidden = static_cast<int>(r.u32());
    const auto input = static_cast<int>(r.u32());
    const auto classes = static_cast<int>(r.u32());
    ModelFile<Params> file;
    file.maxlen = static_cast<int>(r.u32());
    file.embedding_checksum = r.digest();
    if (hidden < 1 || input < 1 || classes < 1 || hidden > (1 << 16) || input > (1 << 16) || classes > 1024) {
        throw FormatError(std::string(what) + " file has implausible dimensions");
    }
    file.params = Params::zeros(hidden, input, classes);
    for (auto t : file.params.tensors()) read_tensor(r, t.values, t.rows, t.cols);
    if (r.remaining() != 0) throw FormatError(std::string(what) + " file has trailing bytes");
    return file;
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const LstmParams& params, int maxlen, const Digest& embedding_checksum) {
    return serialize_recurrent(kLstmMagic, params, maxlen, embedding_checksum);
}

std::vector<std::uint8_t> serialize_model(const RnnParams& params, int maxlen, const Digest& embedding_checksum) {
    return serialize_recurrent(kRnnMagic, params, maxlen, embedding_checksum);
}

ModelFile<LstmParams> parse_lstm_model(std::span<const std::uint8_t> bytes) {
    return parse_recurrent<LstmParams>(kLstmMagic, bytes, "LSTM model");
}

ModelFile<RnnParams> parse_rnn_model(std::span<const std::uint8_t> bytes) {
    return parse_recurrent<RnnParams>(kRnnMagic, bytes, "RNN model");
}

std::vector<std::uint8_t> serialize_naive_bayes(const NaiveBayesModel& model) {
    ByteWriter w;
    w.raw(kNaiveBayesMagic);
    w.u32(kModelFormatVersion);
    w.u32(static_cast<std::uint32_t>(model.log_likelihood.rows()));
    w.u32(static_cast<std::uint32_t>(model.log_likelihood.cols()));
    w.f32(static_cast<float>(model.alpha));
    write_matrix(w, model.log_prior);
    write_matrix(w, model.log_likelihood);
    append_crc(w);
    return w.take();
}

NaiveBayesModel parse_naive_bayes(std::span<const std::uint8_t> bytes) {
    const auto body = verify_crc(bytes, "naive Bayes model");
    ByteReader r(body);
    r.expect(kNaiveBayesMagic, "naive Bayes model");
    check_version(r.u32(), "naive Bayes model");
    const auto classes = r.u32();
    const auto features = r.u32();
    if (classes != kNumClasses) throw FormatError("naive Bayes model must have 3 classes");
    if (static_cast<std::uint64_t>(classes) * (features + 1) * 4 + 4 != r.remaining()) {
        throw FormatError("naive Bayes payload size does not match header");
    }
    NaiveBayesModel m;
    m.alpha = r.f32();
    m.log_prior.resize(classes);
    m.log_likelihood.resize(classes, features);
    read_matrix(r, m.log_prior);
    read_matrix(r, m.log_likelihood);
    return m;
}

std::vector<std::uint8_t> serialize_logistic(const LogisticBaseline& baseline) {
    const auto& m = baseline.model;
    ByteWriter w;
    w.raw(kLogisticMagic);
    w.u32(kModelFormatVersion);
    w.u32(static_cast<std::uint32_t>(m.weights.rows()));
    w.u32(static_cast<std::uint32_t>(m.weights.cols()));
    w.u32(static_cast<std::uint32_t>(baseline.tfidf.num_documents));
    w.u32(baseline.tfidf.sublinear_tf ? 1 : 0);
    w.u32(baseline.tfidf.norm == TfidfNorm::l2 ? 1 : 0);
    w.f32(static_cast<float>(m.l2));
    write_matrix(w, baseline.tfidf.idf);
    write_matrix(w, m.weights);
    write_matrix(w, m.bias);
    append_crc(w);
    return w.take();
}

LogisticBaseline parse_logistic(std::span<const std::uint8_t> bytes) {
    const auto body = verify_crc(bytes, "logistic model");
    ByteReader r(body);
    r.expect(kLogisticMagic, "logistic model");
    check_version(r.u32(), "logistic model");
    const auto classes = r.u32();
    const auto features = r.u32();
    if (classes != kNumClasses) throw FormatError("logistic model must have 3 classes");
    LogisticBaseline b;
    b.tfidf.num_features = features;
    b.tfidf.num_documents = r.u32();
    b.tfidf.sublinear_tf = r.u32() != 0;
    b.tfidf.norm = r.u32() != 0 ? TfidfNorm::l2 : TfidfNorm::none;
    b.model.l2 = r.f32();
    if ((static_cast<std::uint64_t>(features) * (classes + 1) + classes) * 4 != r.remaining()) {
        throw FormatError("logistic payload size does not match header");
    }
    b.tfidf.idf.resize(features);
    b.model.weights.resize(classes, features);
    b.model.bias.resize(classes);
    read_matrix(r, b.tfidf.idf);
    read_matrix(r, b.model.weights);
    read_matrix(r, b.model.bias);
    return b;
}

void round_to_stored_precision(LstmParams& params) {
    for (auto t : params.tensors()) {
        for (double& x : t.values) x = static_cast<double>(static_cast<float>(x));
    }
}

void round_to_stored_precision(RnnParams& params) {
    for (auto t : params.tensors()) {
        for (double& x : t.values) x = static_cast<double>(static_cast<float>(x));
    }
}

void round_to_stored_precision(EmbeddingMatrix& embedding) { round_to_float(embedding.rows); }

void round_to_stored_precision(NaiveBayesModel& model) {
    round_to_float(model.log_prior);
    round_to_float(model.log_likelihood);
    model.alpha = static_cast<double>(static_cast<float>(model.alpha));
}

void round_to_stored_precision(LogisticBaseline& baseline) {
    round_to_float(baseline.tfidf.idf);
    round_to_float(baseline.model.weights);
    round_to_float(baseline.model.bias);
    baseline.model.l2 = static_cast<double>(static_cast<float>(baseline.model.l2));
}

std::string_view model_kind_tag(const BundleModel& model) {
    struct Tag {
        std::string_view operator()(const LstmParams&) const { return "lstm"; }
        std::string_view operator()(const RnnParams&) const { return "rnn"; }
        std::string_view operator()(const NaiveBayesModel&) const { return "naive_bayes"; }
        std::string_view operator()(const LogisticBaseline&) const { return "logreg"; }
    };
    return std::visit(Tag{}, model);
}

void checkpoint(const std::filesystem::path& dir, const Bundle& bundle) {
    const std::string vocab_text = bundle.vocab.serialize();
    const Digest vocab_digest = sha256(vocab_text);

    std::optional<std::vector<std::uint8_t>> embedding_bytes;
    Digest embedding_digest{};
    const bool recurrent = std::holds_alternative<LstmParams>(bundle.model) ||
                           std::holds_alternative<RnnParams>(bundle.model);
    if (recurrent) {
        if (!bundle.embedding) throw Error("recurrent checkpoints need an embedding matrix");
        if (bundle.embedding->vocab_fingerprint != vocab_digest) {
            throw FormatError("embedding was built for a different vocabulary");
        }
        embedding_bytes = serialize_embeddings(*bundle.embedding);
        embedding_digest = sha256(*embedding_bytes);
    }

    std::vector<std::uint8_t> model_bytes;
    if (const auto* lstm = std::get_if<LstmParams>(&bundle.model)) {
        model_bytes = serialize_model(*lstm, bundle.maxlen, embedding_digest);
    } else if (const auto* rnn = std::get_if<RnnParams>(&bundle.model)) {
        model_bytes = serialize_model(*rnn, bundle.maxlen, embedding_digest);
    } else if (const auto* nb = std::get_if<NaiveBayesModel>(&bundle.model)) {
        model_bytes = serialize_naive_bayes(*nb);
    } else {
        model_bytes = serialize_logistic(std::get<LogisticBaseline>(bundle.model));
    }

    nlohmann::json manifest;
    manifest["format"] = "senti-bundle";
    manifest["bundle_version"] = kBundleVersion;
    manifest["model_kind"] = std::string(model_kind_tag(bundle.model));
    manifest["model_format_version"] = kModelFormatVersion;
    manifest["maxlen"] = bundle.maxlen;
    manifest["tokenizer"] = std::string(tokenizer_mode_name(bundle.tokenizer));
    manifest["seed"] = bundle.seed;
    manifest["config"] = bundle.config;
    manifest["files"] = {{"model", kModelFile}, {"vocab", kVocabFile}};
    manifest["checksums"] = {{"model", to_hex(sha256(model_bytes))}, {"vocab", to_hex(vocab_digest)}};
    if (recurrent) {
        manifest["embedding_format_version"] = kEmbeddingFormatVersion;
        manifest["files"]["embedding"] = kEmbeddingFile;
        manifest["checksums"]["embedding"] = to_hex(embedding_digest);
    }

    std::filesystem::create_directories(dir);
    write_file_text(dir / kVocabFile, vocab_text);
    if (embedding_bytes) write_file_bytes(dir / kEmbeddingFile, *embedding_bytes);
    write_file_bytes(dir / kModelFile, model_bytes);
    write_file_text(dir / kManifestFile, manifest.dump(2) + "\n");
}

Bundle restore(const std::filesystem::path& dir) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_file_text(dir / kManifestFile));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("invalid bundle manifest: " + std::string(e.what()));
    }
    try {
        if (manifest.at("format") != "senti-bundle") throw FormatError("not a senti bundle manifest");
        const int version = manifest.at("bundle_version").get<int>();
        if (version != kBundleVersion) {
            throw UnsupportedVersionError("unsupported bundle version " + std::to_string(version));
        }
        const auto& checksums = manifest.at("checksums");

        const std::string vocab_text = read_file_text(dir / kVocabFile);
        const Digest vocab_digest = sha256(vocab_text);
        if (to_hex(vocab_digest) != checksums.at("vocab").get<std::string>()) {
            throw FormatError("vocabulary file does not match the checkpoint (fingerprint mismatch)");
        }
        Bundle bundle;
        bundle.vocab = Vocabulary::parse(vocab_text);
        if (bundle.vocab.fingerprint() != vocab_digest) {
            throw FormatError("vocabulary file is not in canonical form");
        }
        bundle.maxlen = manifest.at("maxlen").get<int>();
        bundle.tokenizer = parse_tokenizer_mode(manifest.at("tokenizer").get<std::string>());
        bundle.seed = manifest.at("seed").get<std::uint64_t>();
        bundle.config = manifest.at("config");

        const auto model_bytes = read_file_bytes(dir / kModelFile);
        if (to_hex(sha256(model_bytes)) != checksums.at("model").get<std::string>()) {
            throw FormatError("model file does not match the checkpoint manifest");
        }
        const std::string kind = manifest.at("model_kind").get<std::string>();

        Digest embedding_digest{};
        if (kind == "lstm" || kind == "rnn") {
            const auto embedding_bytes = read_file_bytes(dir / kEmbeddingFile);
            embedding_digest = sha256(embedding_bytes);
            if (to_hex(embedding_digest) != checksums.at("embedding").get<std::string>()) {
                throw FormatError("embedding file does not match the checkpoint manifest");
            }
            bundle.embedding = parse_embeddings(embedding_bytes, vocab_digest);
        }

        auto check_recurrent = [&](int maxlen, const Digest& referenced, int input) {
            if (referenced != embedding_digest) throw FormatError("model was trained with a different embedding file");
            if (maxlen != bundle.maxlen) throw FormatError("model maxlen disagrees with the manifest");
            if (input != bundle.embedding->dim()) throw FormatError("model input size disagrees with the embedding");
        };
        if (kind == "lstm") {
            auto file = parse_lstm_model(model_bytes);
            check_recurrent(file.maxlen, file.embedding_checksum, file.params.input);
            bundle.model = std::move(file.params);
        } else if (kind == "rnn") {
            auto file = parse_rnn_model(model_bytes);
            check_recurrent(file.maxlen, file.embedding_checksum, file.params.input);
            bundle.model = std::move(file.params);
        } else if (kind == "naive_bayes") {
            bundle.model = parse_naive_bayes(model_bytes);
        } else if (kind == "logreg") {
            bundle.model = parse_logistic(model_bytes);
        } else {
            throw FormatError("unknown model kind '" + kind + "' in manifest");
        }
        return bundle;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("incomplete bundle manifest: " + std::string(e.what()));
    }
}

Vector bundle_probabilities(const Bundle& bundle, std::span<const std::int32_t> indices) {
    if (const auto* lstm = std::get_if<LstmParams>(&bundle.model)) {
        return forward(*lstm, *bundle.embedding, indices).probabilities;
    }
    if (const auto* rnn = std::get_if<RnnParams>(&bundle.model)) {
        return forward(*rnn, *bundle.embedding, indices).probabilities;
    }
    if (const auto* nb = std::get_if<NaiveBayesModel>(&bundle.model)) {
        return nb_posterior(*nb, indices);
    }
    const auto& lr = std::get<LogisticBaseline>(bundle.model);
    return logreg_probabilities(lr.model, tfidf_transform(lr.tfidf, indices));
}

}  // namespace senti

#include "senti/embedding.hpp"
#include "senti/error.hpp"
#include "support.hpp"

#include <doctest.h>

#include <set>

using namespace senti;
using senti::testing::TempDir;

namespace {

double sgns_loss(const Vector& center, const Vector& context, const std::vector<Vector>& negatives) {
    auto log_sig = [](double x) { return -std::log(1.0 + std::exp(-x)); };
    double loss = -log_sig(context.dot(center));
    for (const auto& n : negatives) loss -= log_sig(-n.dot(center));
    return loss;
}

// Central differences of sgns_loss with respect to one vector, perturbed in place.
Vector numeric_gradient(Vector& target, const std::function<double()>& f, double h = 1e-4) {
    Vector g(target.size());
    for (Eigen::Index k = 0; k < target.size(); ++k) {
        const double saved = target(k);
        target(k) = saved + h;
        const double up = f();
        target(k) = saved - h;
        const double down = f();
        target(k) = saved;
        g(k) = (up - down) / (2.0 * h);
    }
    return g;
}

double vector_relative_error(const Vector& a, const Vector& b) {
    return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-8});
}

std::vector<std::vector<std::int32_t>> index_corpus(const Vocabulary& vocab,
                                                     const std::vector<std::vector<std::string>>& text) {
    std::vector<std::vector<std::int32_t>> out;
    for (const auto& s : text) {
        std::vector<std::int32_t> idx;
        for (const auto& t : s) idx.push_back(vocab.index_of(t));
        out.push_back(idx);
    }
    return out;
}

double cosine(const EmbeddingMatrix& m, std::int32_t a, std::int32_t b) {
    const auto ra = m.rows.row(a);
    const auto rb = m.rows.row(b);
    return ra.dot(rb) / (ra.norm() * rb.norm());
}

}  // namespace

TEST_SUITE("embedding") {

TEST_CASE("config invariants") {
    EmbeddingConfig c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.dim == 100);
    CHECK(c.window == 7);
    CHECK(c.min_count == 10);
    CHECK(c.iterations == 10);
    CHECK(c.negatives == 5);
    c.iterations = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.dim = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.negatives = -1;
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("generate_pairs small cases") {
    const std::vector<std::vector<std::int32_t>> abc = {{2, 3, 4}};
    const auto pairs = generate_pairs(abc, 1, 42);
    const std::multiset<std::pair<std::int32_t, std::int32_t>> got(pairs.begin(), pairs.end());
    const std::multiset<std::pair<std::int32_t, std::int32_t>> want = {{2, 3}, {3, 2}, {3, 4}, {4, 3}};
    CHECK(got == want);

    const std::vector<std::vector<std::int32_t>> single = {{5}};
    CHECK(generate_pairs(single, 7, 1).empty());
    CHECK(generate_pairs({}, 7, 1).empty());

    // Pad and unk are dropped before windowing, so 2 and 3 become adjacent.
    const std::vector<std::vector<std::int32_t>> gaps = {{2, 1, 0, 3}};
    const auto g = generate_pairs(gaps, 1, 3, false);
    CHECK(std::multiset<std::pair<std::int32_t, std::int32_t>>(g.begin(), g.end()) ==
          std::multiset<std::pair<std::int32_t, std::int32_t>>{{2, 3}, {3, 2}});
}

TEST_CASE("generate_pairs equals brute-force enumeration with replayed windows") {
    Rng gen(123);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::vector<std::int32_t>> corpus(1 + gen.below(4));
        for (auto& s : corpus) {
            s.resize(gen.below(9));
            for (auto& x : s) x = static_cast<std::int32_t>(gen.below(12));  // includes pad and unk
        }
        corpus[0] = {7, 8, 9, 10, 11};  // the five-token sentence, window 7
        const int window = trial == 0 ? 7 : 1 + static_cast<int>(gen.below(7));
        const std::uint64_t seed = gen.next();
        const auto pairs = generate_pairs(corpus, window, seed);

        Rng replay = Rng::derive(seed, streams::embedding_windows);
        std::vector<std::pair<std::int32_t, std::int32_t>> expected;
        for (const auto& raw : corpus) {
            std::vector<std::int32_t> s;
            for (auto x : raw) {
                if (x != Vocabulary::pad_index && x != Vocabulary::unk_index) s.push_back(x);
            }
            for (std::size_t p = 0; p < s.size(); ++p) {
                const auto w = static_cast<std::size_t>(1 + replay.below(static_cast<std::uint64_t>(window)));
                for (std::size_t q = 0; q < s.size(); ++q) {
                    const std::size_t dist = p > q ? p - q : q - p;
                    if (q != p && dist <= w) expected.emplace_back(s[p], s[q]);
                }
            }
        }
        CHECK(pairs == expected);
        for (const auto& [c, x] : pairs) {
            CHECK(c >= Vocabulary::num_reserved);
            CHECK(x >= Vocabulary::num_reserved);
        }
    }
}

TEST_CASE("sgns_gradient closed forms") {
    Rng rng(8);
    SUBCASE("zero center gives sigmoid(0) coefficients") {
        const Vector center = Vector::Zero(4);
        const Vector context = testing::random_vector(rng, 4);
        const std::vector<Vector> negs = {testing::random_vector(rng, 4), testing::random_vector(rng, 4)};
        const auto g = sgns_gradient(center, context, negs);
        const Vector expected = -0.5 * context + 0.5 * negs[0] + 0.5 * negs[1];
        CHECK((g.center - expected).norm() < 1e-15);
        CHECK(g.context.isZero(0.0));
        CHECK(g.loss == doctest::Approx(3.0 * std::log(2.0)).epsilon(1e-15));
    }
    SUBCASE("all zero vectors") {
        const Vector z = Vector::Zero(3);
        const std::vector<Vector> negs = {z};
        const auto g = sgns_gradient(z, z, negs);
        CHECK(g.center.isZero(0.0));
        CHECK(g.loss == doctest::Approx(2.0 * std::log(2.0)));
    }
    SUBCASE("no negatives leaves only the positive pair") {
        const Vector c = testing::random_vector(rng, 5);
        const Vector x = testing::random_vector(rng, 5);
        const auto g = sgns_gradient(c, x, {});
        const double coef = 1.0 / (1.0 + std::exp(-x.dot(c))) - 1.0;
        CHECK((g.center - coef * x).norm() < 1e-15);
        CHECK((g.context - coef * c).norm() < 1e-15);
        CHECK(g.negatives.empty());
    }
    const Vector a = Vector::Zero(3);
    const Vector b = Vector::Zero(4);
    CHECK_THROWS_AS(sgns_gradient(a, b, {}), Error);
}

TEST_CASE("sgns_gradient matches central finite differences") {
    Rng rng(2718);
    for (int trial = 0; trial < 25; ++trial) {
        Vector center = testing::random_vector(rng, 8);
        Vector context = testing::random_vector(rng, 8);
        std::vector<Vector> negs;
        for (int k = 0; k < 5; ++k) negs.push_back(testing::random_vector(rng, 8));
        const auto g = sgns_gradient(center, context, negs);
        auto f = [&] { return sgns_loss(center, context, negs); };
        CHECK(g.loss == doctest::Approx(f()).epsilon(1e-12));
        CHECK(vector_relative_error(g.center, numeric_gradient(center, f)) < 1e-5);
        CHECK(vector_relative_error(g.context, numeric_gradient(context, f)) < 1e-5);
        for (std::size_t k = 0; k < negs.size(); ++k) {
            CHECK(vector_relative_error(g.negatives[k], numeric_gradient(negs[k], f)) < 1e-5);
        }
    }
}

TEST_CASE("negative sampler follows unigram^0.75 (chi-square)") {
    std::vector<std::vector<std::string>> corpus(1);
    const std::vector<int> freqs = {500, 300, 120, 80, 60, 40, 25, 10, 5, 3, 2, 1};
    for (std::size_t t = 0; t < freqs.size(); ++t) {
        for (int k = 0; k < freqs[t]; ++k) corpus[0].push_back("w" + std::to_string(100 + t));
    }
    const auto vocab = Vocabulary::build(corpus, 1);
    const NegativeSampler sampler(vocab);

    double total = 0.0;
    for (int f : freqs) total += std::pow(f, 0.75);
    for (std::size_t t = 0; t < freqs.size(); ++t) {
        const auto idx = vocab.index_of("w" + std::to_string(100 + t));
        CHECK(sampler.probability(idx) == doctest::Approx(std::pow(freqs[t], 0.75) / total).epsilon(1e-12));
    }
    CHECK(sampler.probability(Vocabulary::pad_index) == 0.0);
    CHECK(sampler.probability(Vocabulary::unk_index) == 0.0);

    Rng rng(99);
    const int draws = 1000000;
    std::vector<long> counts(vocab.size(), 0);
    for (int k = 0; k < draws; ++k) ++counts[static_cast<std::size_t>(sampler.sample(rng))];
    CHECK(counts[0] == 0);
    CHECK(counts[1] == 0);
    double chi2 = 0.0;
    for (std::size_t idx = 2; idx < vocab.size(); ++idx) {
        const double expected = draws * sampler.probability(static_cast<std::int32_t>(idx));
        chi2 += (counts[idx] - expected) * (counts[idx] - expected) / expected;
    }
    // 11 degrees of freedom; the 0.999 quantile is 31.26.
    CHECK(chi2 < 31.26);
}

TEST_CASE("train_skipgram learns co-occurrence and keeps invariants") {
    std::vector<std::vector<std::string>> text;
    Rng rng(4);
    const std::vector<std::string> fillers = {"f0", "f1", "f2", "f3", "f4", "f5"};
    for (int k = 0; k < 300; ++k) {
        text.push_back({fillers[rng.below(6)], "x", "y", fillers[rng.below(6)]});
        text.push_back({fillers[rng.below(6)], "z", "q", fillers[rng.below(6)]});
    }
    const auto vocab = Vocabulary::build(text, 1);
    const auto corpus = index_corpus(vocab, text);
    EmbeddingConfig config;
    config.dim = 16;
    config.window = 1;
    config.min_count = 1;
    config.seed = 17;
    const auto m = train_skipgram(corpus, config, vocab);

    CHECK(m.row_count() == vocab.size());
    CHECK(m.dim() == 16);
    CHECK(m.vocab_fingerprint == vocab.fingerprint());
    CHECK(m.rows.allFinite());
    CHECK(m.rows.row(Vocabulary::pad_index).isZero(0.0));
    const auto x = vocab.index_of("x");
    CHECK(cosine(m, x, vocab.index_of("y")) > cosine(m, x, vocab.index_of("z")));

    // Unknown never occurs as a center, so its row is the mean of the token rows.
    const Eigen::RowVectorXd mean =
        m.rows.bottomRows(static_cast<Eigen::Index>(vocab.token_count())).colwise().mean();
    CHECK((m.rows.row(Vocabulary::unk_index) - mean).norm() < 1e-12);

    const auto again = train_skipgram(corpus, config, vocab);
    CHECK(again.rows == m.rows);
    config.seed = 18;
    CHECK_FALSE(train_skipgram(corpus, config, vocab).rows == m.rows);
}

TEST_CASE("train_skipgram rejects degenerate inputs") {
    const std::vector<std::vector<std::string>> one = {{"only", "only"}};
    const auto vocab = Vocabulary::build(one, 1);
    EmbeddingConfig config;
    config.min_count = 1;
    CHECK_THROWS_AS(train_skipgram(std::vector<std::vector<std::int32_t>>{{2, 2}}, config, vocab), Error);
    config.iterations = 0;
    const auto two = testing::synthetic_vocab(3);
    CHECK_THROWS_AS(train_skipgram(std::vector<std::vector<std::int32_t>>{{2, 3}}, config, two), Error);

    config = {};
    config.min_count = 1;
    config.learning_rate = 1e300;
    config.dim = 4;
    std::vector<std::vector<std::int32_t>> corpus(50, std::vector<std::int32_t>{2, 3, 4, 2, 3, 4});
    try {
        train_skipgram(corpus, config, two);
        FAIL("expected a numeric error");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("iteration") != std::string::npos);
    }
}

TEST_CASE("embedding file round trip and rejection") {
    TempDir dir;
    Rng rng(6);
    const auto vocab = testing::synthetic_vocab(8);
    auto m = random_embedding(vocab, 4, 1.0, rng);
    REQUIRE(m.row_count() == 10);
    round_to_float(m.rows);
    save_embeddings(dir / "e.bin", m);
    const auto back = load_embeddings(dir / "e.bin", vocab.fingerprint());
    CHECK(back.rows == m.rows);
    CHECK(back.vocab_fingerprint == m.vocab_fingerprint);

    auto bytes = read_file_bytes(dir / "e.bin");
    CHECK(bytes.size() == 10 + 4 + 4 + 4 + 32 + 10 * 4 * 4);
    CHECK(std::string(bytes.begin(), bytes.begin() + 10) == std::string("SENTI-EMB\0", 10));

    SUBCASE("truncated") {
        bytes.pop_back();
        CHECK_THROWS_AS(parse_embeddings(bytes), FormatError);
    }
    SUBCASE("extra bytes") {
        bytes.push_back(0);
        CHECK_THROWS_AS(parse_embeddings(bytes), FormatError);
    }
    SUBCASE("bad magic") {
        bytes[0] = 'X';
        CHECK_THROWS_AS(parse_embeddings(bytes), FormatError);
    }
    SUBCASE("unknown version") {
        bytes[10] = 2;
        CHECK_THROWS_AS(parse_embeddings(bytes), UnsupportedVersionError);
    }
    SUBCASE("vocabulary mismatch") {
        const auto other = testing::synthetic_vocab(9);
        CHECK_THROWS_AS(parse_embeddings(bytes, other.fingerprint()), FormatError);
    }
    SUBCASE("NaN refused") {
        m.rows(3, 1) = std::nan("");
        CHECK_THROWS_AS(serialize_embeddings(m), NumericError);
        CHECK_THROWS_AS(save_embeddings(dir / "nan.bin", m), NumericError);
        CHECK_FALSE(std::filesystem::exists(dir / "nan.bin"));
    }
    SUBCASE("nonzero pad row refused") {
        m.rows(0, 0) = 1.0;
        CHECK_THROWS_AS(serialize_embeddings(m), Error);
    }
}

}  // TEST_SUITE

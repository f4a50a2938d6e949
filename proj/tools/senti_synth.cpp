// Writes the synthetic labelled corpora used by the acceptance runs.
#include "senti/corpus.hpp"
#include "senti/synthetic.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Generate synthetic labelled CSV corpora"};
    app.require_subcommand(1);

    std::string output;
    std::uint64_t seed = 1;

    auto* long_range = app.add_subcommand("long-range", "Label fixed by a marker far before the end of the text");
    std::size_t count = 2000;
    senti::synthetic::LongRangeOptions options;
    long_range->add_option("--count", count, "Number of records")->check(CLI::PositiveNumber);
    long_range->add_option("--min-distance", options.min_distance, "Smallest marker distance from the end");
    long_range->add_option("--max-distance", options.max_distance, "Largest marker distance from the end");
    long_range->add_option("--filler", options.filler_vocabulary, "Number of distinct filler words");
    long_range->add_option("--seed", seed, "Generator seed");
    long_range->add_option("--output", output, "CSV path")->required();

    auto* keyword = app.add_subcommand("keyword", "Label fixed by a single keyword");
    std::size_t per_class = 10;
    keyword->add_option("--per-class", per_class, "Records per class")->check(CLI::PositiveNumber);
    keyword->add_option("--seed", seed, "Generator seed");
    keyword->add_option("--output", output, "CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*long_range) {
            if (options.min_distance < 1 || options.max_distance < options.min_distance) {
                throw std::runtime_error("need 1 <= min-distance <= max-distance");
            }
            senti::save_dataset(output, senti::synthetic::long_range(count, seed, options));
        } else {
            senti::save_dataset(output, senti::synthetic::keyword_separable(per_class, seed));
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

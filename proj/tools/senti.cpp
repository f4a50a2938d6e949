#include "senti/error.hpp"
#include "senti/pipeline.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <iterator>
#include <map>
#include <string>

namespace {

std::string dashed(std::string key) {
    std::replace(key.begin(), key.end(), '_', '-');
    return key;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Three-class sentiment classification: preprocessing, embeddings, LSTM and baselines"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_file;
    app.add_option("--config", config_file, "JSON configuration file")->check(CLI::ExistingFile);

    // One string slot per configuration key; typed conversion happens in the library.
    std::map<std::string, std::string> flag_text;
    std::map<std::string, CLI::Option*> flag_options;
    for (const auto& key : senti::RunConfig::keys()) {
        std::string names = "--" + key;
        if (key.find('_') != std::string::npos) names += ",--" + dashed(key);
        flag_options[key] = app.add_option(names, flag_text[key], "Overrides config key '" + key + "'");
    }

    auto* preprocess = app.add_subcommand("preprocess", "Clean, tokenize, split and encode a labelled CSV");
    auto* train_embeddings = app.add_subcommand("train-embeddings", "Train skip-gram embeddings on the training split");
    auto* train = app.add_subcommand("train", "Train one classifier and checkpoint it");
    auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on a labelled dataset");
    auto* predict = app.add_subcommand("predict", "Classify one text from the argument or standard input");
    auto* compare = app.add_subcommand("compare", "Train LSTM, RNN, naive Bayes and logistic regression on one split");

    senti::EvaluateOptions eval_options;
    std::string eval_checkpoint;
    std::string eval_data;
    evaluate->add_option("--checkpoint", eval_checkpoint, "Checkpoint directory");
    evaluate->add_option("--data", eval_data, "Labelled CSV to score instead of the prepared split");
    evaluate->add_option("--split", eval_options.split, "Prepared split to score: train or test")
        ->check(CLI::IsMember({"train", "test"}));

    std::string predict_checkpoint;
    std::string predict_text;
    bool have_text = false;
    predict->add_option("--checkpoint", predict_checkpoint, "Checkpoint directory");
    predict->add_option("text", predict_text, "Text to classify; read from standard input when omitted")
        ->each([&](const std::string&) { have_text = true; });

    CLI11_PARSE(app, argc, argv);

    const senti::Logger log = [](const std::string& line) { std::cerr << line << "\n"; };
    try {
        nlohmann::json flags = nlohmann::json::object();
        for (const auto& [key, opt] : flag_options) {
            if (opt->count() > 0) flags[key] = senti::RunConfig::flag_value(key, flag_text[key]);
        }
        std::optional<std::filesystem::path> config_path;
        if (!config_file.empty()) config_path = config_file;
        const senti::RunConfig config = senti::resolve_config(config_path, flags);

        senti::CommandOutput out;
        if (*preprocess) {
            out = senti::cmd_preprocess(config, log);
        } else if (*train_embeddings) {
            out = senti::cmd_train_embeddings(config, log);
        } else if (*train) {
            out = senti::cmd_train(config, log);
        } else if (*evaluate) {
            if (!eval_checkpoint.empty()) eval_options.checkpoint = eval_checkpoint;
            if (!eval_data.empty()) eval_options.data = eval_data;
            out = senti::cmd_evaluate(config, eval_options, log);
        } else if (*predict) {
            if (!have_text) {
                predict_text.assign(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
            }
            std::optional<std::filesystem::path> checkpoint;
            if (!predict_checkpoint.empty()) checkpoint = predict_checkpoint;
            out = senti::cmd_predict(config, checkpoint, predict_text);
        } else if (*compare) {
            out = senti::cmd_compare(config, log);
        }
        std::cout << out.render(config.format);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

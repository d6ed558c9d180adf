#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "darag/harness.hpp"

namespace {

darag::ExperimentConfig load_config_or_die(const std::string& path) {
    return darag::load_experiment_config(path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DARAG toolkit: synthetic augmentation, NE retrieval, GEC dataset export and evaluation"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("-c,--config", config_path, "Experiment config JSON")->required();

    auto* augment = app.add_subcommand("augment", "Generate the synthetic corpus and manifest");
    auto* build_store = app.add_subcommand("build-store", "Extract NEs and build the datastore");

    auto* retrieve = app.add_subcommand("retrieve", "Debug: top-k retrieval for a single query");
    std::string query;
    retrieve->add_option("query", query, "Best-hypothesis text")->required();

    auto* make_sft = app.add_subcommand("make-sft", "Export instruction-response pairs");
    std::string sft_mode = "darag";
    make_sft->add_option("--mode", sft_mode, "Ablation mode (darag|wo_rac|wo_aug|only_synth)");

    auto* correct = app.add_subcommand("correct", "Run correction over the test corpus");
    std::string correct_mode = "darag";
    correct->add_option("--mode", correct_mode, "Ablation mode");

    auto* evaluate = app.add_subcommand("evaluate", "Evaluate baseline and ablations");

    auto* sweep = app.add_subcommand("sweep", "Hyperparameter sweep");
    std::string dimension;
    std::vector<double> values;
    sweep->add_option("--dimension", dimension, "k | n_small | n_syn")->required();
    sweep->add_option("--values", values, "Sweep values (comma separated)")
        ->required()
        ->delimiter(',');

    auto* report = app.add_subcommand("report", "Render a saved report.json as a table");
    std::string report_path;
    report->add_option("path", report_path, "Path to report.json")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        darag::ExperimentConfig config = load_config_or_die(config_path);
        if (augment->parsed()) {
            auto result = darag::cmd_augment(config);
            std::cout << "synthetic records: " << result.synthetic.size() << "\n"
                      << "generation calls: " << result.generation_calls << "\n"
                      << "dropped replicas: " << result.dropped_replicas << "\n";
            if (result.replication)
                std::cout << "replication check: mean similarity "
                          << result.replication->mean_similarity << ", mean BLEU "
                          << result.replication->mean_bleu << "\n";
        } else if (build_store->parsed()) {
            auto store = darag::cmd_build_store(config);
            std::cout << "datastore entries: " << store.size() << "\n";
        } else if (retrieve->parsed()) {
            auto backends = darag::make_backends(config);
            auto store = darag::cmd_build_store(config);
            auto results =
                darag::retrieve_top_k(store, query, *backends.embedder, config.retrieval);
            for (const auto& r : results)
                std::printf("%.4f  %-12s %s\n", r.similarity, r.entry.ne_type.c_str(),
                            r.entry.surface.c_str());
        } else if (make_sft->parsed()) {
            auto stats = darag::cmd_make_sft(config, sft_mode);
            std::cout << "pairs: " << stats.pairs << " (real " << stats.real_pairs
                      << ", synthetic " << stats.synthetic_pairs << ")\n";
        } else if (correct->parsed()) {
            auto outputs = darag::cmd_correct(config, correct_mode);
            std::cout << "corrected " << outputs.size() << " utterances\n";
        } else if (evaluate->parsed()) {
            auto eval = darag::cmd_evaluate(config);
            std::cout << darag::render_report_table(eval);
        } else if (sweep->parsed()) {
            auto dim = darag::sweep_dimension_from_string(dimension);
            auto result = darag::cmd_sweep(config, dim, values);
            std::cout << darag::render_sweep_table(result);
        } else if (report->parsed()) {
            std::ifstream in(report_path, std::ios::binary);
            if (!in) throw darag::Error("cannot open '" + report_path + "'");
            std::stringstream buf;
            buf << in.rdbuf();
            std::cout << darag::render_report_table(darag::eval_report_from_json(buf.str()));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

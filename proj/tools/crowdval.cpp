// crowdval: hyperparameter selection for learning from crowds.
//
// Subcommands:
//   simulate  generate synthetic crowd-labeled datasets and variants
//   study     run the search/train/estimate/select/test loop for one dataset
//   report    aggregate completed studies into comparison tables

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "crowdval/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Hyperparameter selection for learning from crowds"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_dir;

    auto* simulate = app.add_subcommand("simulate", "Generate synthetic crowd-labeled data");
    simulate->add_option("--config", config_path, "Simulation config (JSON)")->required();
    simulate->add_option("--out", output_dir, "Override the config's output directory");

    std::uint64_t seed = 0;
    int folds = 0;
    int budget = 0;
    int test_seeds = 0;
    int parallelism = -1;
    auto* study = app.add_subcommand("study", "Run one hyperparameter study");
    study->add_option("--config", config_path, "Study config (JSON)")->required();
    auto* seed_opt = study->add_option("--seed", seed, "Override the study seed");
    auto* folds_opt = study->add_option("--folds", folds, "Override the number of folds K");
    auto* budget_opt = study->add_option("--budget", budget, "Override the candidate budget");
    auto* test_seeds_opt =
        study->add_option("--test-seeds", test_seeds, "Override the number of test seeds R");
    auto* parallelism_opt =
        study->add_option("--parallelism", parallelism, "Worker threads (0 = hardware)");
    study->add_option("--out", output_dir, "Override the config's output directory");

    std::vector<std::string> study_dirs;
    auto* report = app.add_subcommand("report", "Aggregate completed studies");
    report->add_option("studies", study_dirs, "Study output directories")->required();
    report->add_option("--out", output_dir, "Output directory for the aggregate tables")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) {
            const auto outputs = crowdval::cmd_simulate(
                config_path,
                output_dir.empty() ? std::nullopt : std::optional<std::string>(output_dir));
            std::cout << "wrote dataset to " << outputs.output_dir.string() << " ("
                      << outputs.crowd_label_files.size() << " variant files)\n";
        } else if (study->parsed()) {
            crowdval::StudyOverrides overrides;
            if (*seed_opt) {
                overrides.seed = seed;
            }
            if (*folds_opt) {
                overrides.folds = folds;
            }
            if (*budget_opt) {
                overrides.budget = budget;
            }
            if (*test_seeds_opt) {
                overrides.test_seeds = test_seeds;
            }
            if (*parallelism_opt) {
                overrides.parallelism = parallelism;
            }
            if (!output_dir.empty()) {
                overrides.output_dir = output_dir;
            }
            const auto files = crowdval::cmd_study(config_path, overrides);
            std::cout << "study complete: " << files.output_dir.string() << "\n";
            for (const auto& [criterion, outcome] : files.result.test_outcomes) {
                std::cout << "  " << crowdval::criterion_name(criterion)
                          << " -> candidate " << files.result.winners.at(criterion)
                          << ", test loss " << crowdval::format_double(outcome.loss_mean)
                          << " +- " << crowdval::format_double(outcome.loss_se) << "\n";
            }
            if (!files.result.failures.empty()) {
                std::cout << "  " << files.result.failures.size()
                          << " (candidate, fold) tasks failed and were excluded\n";
            }
        } else if (report->parsed()) {
            std::vector<crowdval::fs::path> dirs(study_dirs.begin(), study_dirs.end());
            crowdval::cmd_report(dirs, output_dir);
            std::cout << "wrote aggregate tables to " << output_dir << "\n";
        }
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 0;
}

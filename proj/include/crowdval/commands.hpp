#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "crowdval/io.hpp"
#include "crowdval/simulate.hpp"
#include "crowdval/study.hpp"

namespace crowdval {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config helpers
// ---------------------------------------------------------------------------

namespace cmd_detail {

template <typename T>
T require(const Json& json, const std::string& key, const std::string& context) {
    if (!json.contains(key)) {
        throw ConfigError(context + ": missing field '" + key + "'");
    }
    try {
        return json.at(key).get<T>();
    } catch (const std::exception&) {
        throw ConfigError(context + ": field '" + key + "' has the wrong type");
    }
}

template <typename T>
T optional_field(const Json& json, const std::string& key, T fallback,
                 const std::string& context) {
    if (!json.contains(key)) {
        return fallback;
    }
    try {
        return json.at(key).get<T>();
    } catch (const std::exception&) {
        throw ConfigError(context + ": field '" + key + "' has the wrong type");
    }
}

}  // namespace cmd_detail

/// Command-line values that take precedence over the config file.
/// Environment variables are never consulted.
struct StudyOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> folds;
    std::optional<int> budget;
    std::optional<int> test_seeds;
    std::optional<int> parallelism;
    std::optional<std::string> output_dir;
};

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateOutputs {
    fs::path output_dir;
    std::vector<fs::path> crowd_label_files;
};

inline SimulateOutputs cmd_simulate(const fs::path& config_path,
                                    const std::optional<std::string>& output_override = {}) {
    const std::string context = config_path.string();
    const Json config = load_json_file(config_path);

    const int train_n = cmd_detail::require<int>(config, "train_instances", context);
    const int test_n = cmd_detail::require<int>(config, "test_instances", context);
    const int classes = cmd_detail::require<int>(config, "classes", context);
    const int dims = cmd_detail::require<int>(config, "dims", context);
    const double separation = cmd_detail::require<double>(config, "separation", context);
    const auto diagonals =
        cmd_detail::require<std::vector<double>>(config, "worker_diagonals", context);
    const double coverage = cmd_detail::optional_field<double>(config, "coverage", 1.0, context);
    const auto seed = cmd_detail::optional_field<std::uint64_t>(config, "seed", 0, context);
    const auto variant_names = cmd_detail::optional_field<std::vector<std::string>>(
        config, "variants", {"full"}, context);
    const std::string out_dir = output_override
                                    ? *output_override
                                    : cmd_detail::require<std::string>(config, "output_dir",
                                                                       context);
    if (train_n < classes || test_n < 1 || classes < 2 || dims < 1) {
        throw ConfigError(context + ": need train_instances >= classes >= 2, test_instances >= 1, dims >= 1");
    }
    if (diagonals.empty()) {
        throw ConfigError(context + ": 'worker_diagonals' must name at least one worker");
    }
    for (double d : diagonals) {
        if (!(d >= 0.0 && d <= 1.0)) {
            throw ConfigError(context + ": worker diagonal " + format_double(d) +
                              " outside [0, 1]");
        }
    }

    // One deterministic stream for both splits: first train_n rows train,
    // the rest test.
    const Dataset all = gaussian_blobs(train_n + test_n, classes, dims, separation, seed);
    Dataset train;
    train.num_instances = train_n;
    train.num_features = dims;
    train.features.assign(all.features.begin(),
                          all.features.begin() + static_cast<std::ptrdiff_t>(train_n) * dims);
    train.true_labels = std::vector<int>(all.true_labels->begin(),
                                         all.true_labels->begin() + train_n);
    Dataset test;
    test.num_instances = test_n;
    test.num_features = dims;
    test.features.assign(all.features.begin() + static_cast<std::ptrdiff_t>(train_n) * dims,
                         all.features.end());
    test.true_labels = std::vector<int>(all.true_labels->begin() + train_n,
                                        all.true_labels->end());

    std::vector<ConfusionMatrix> confusions;
    confusions.reserve(diagonals.size());
    for (double d : diagonals) {
        confusions.push_back(ConfusionMatrix::with_diagonal(classes, d));
    }
    const CrowdLabelSet base = simulate_crowd(train, confusions, coverage, mix64(seed, 1));

    SimulateOutputs outputs;
    outputs.output_dir = fs::path(out_dir);
    write_features_csv(outputs.output_dir / "features.csv", train);
    write_true_labels_csv(outputs.output_dir / "true_labels.csv", *train.true_labels);
    write_features_csv(outputs.output_dir / "test_features.csv", test);
    write_true_labels_csv(outputs.output_dir / "test_labels.csv", *test.true_labels);
    write_crowd_labels_csv(outputs.output_dir / "crowd_labels.csv", base);
    for (const auto& name : variant_names) {
        const VariantKind kind = variant_from_name(name);
        const CrowdLabelSet variant =
            make_variant(base, &*train.true_labels, kind, mix64(seed, 2));
        const fs::path path = outputs.output_dir / ("crowd_labels_" + name + ".csv");
        write_crowd_labels_csv(path, variant);
        outputs.crowd_label_files.push_back(path);
    }
    return outputs;
}

// ---------------------------------------------------------------------------
// study
// ---------------------------------------------------------------------------

struct StudyFiles {
    fs::path output_dir;
    StudyResult result;
    std::string dataset_id;
    LearnerKind learner;
};

namespace cmd_detail {

inline Dataset load_study_dataset(const Json& dataset_json, const std::string& context,
                                  bool with_crowd, int* num_classes_io) {
    const std::string features_key = with_crowd ? "features" : "test_features";
    const std::string labels_key = with_crowd ? "true_labels" : "test_labels";
    const RawFeatures raw =
        read_features_csv(require<std::string>(dataset_json, features_key, context));

    Dataset data;
    data.num_instances = raw.num_instances;
    data.num_features = raw.num_features;
    data.features = raw.values;

    int num_classes = *num_classes_io;
    std::optional<std::vector<int>> truth;
    if (dataset_json.contains(labels_key)) {
        truth = read_true_labels_csv(
            require<std::string>(dataset_json, labels_key, context), data.num_instances);
        for (int label : *truth) {
            num_classes = std::max(num_classes, label + 1);
        }
    } else if (!with_crowd) {
        throw ConfigError(context + ": missing field '" + labels_key + "'");
    }

    if (with_crowd) {
        const RawCrowdLabels raw_labels =
            read_crowd_labels_csv(require<std::string>(dataset_json, "crowd_labels", context));
        if (raw_labels.max_instance >= data.num_instances) {
            throw ConfigError(context + ": crowd labels reference instance " +
                              std::to_string(raw_labels.max_instance) + " beyond the " +
                              std::to_string(data.num_instances) + " feature rows");
        }
        num_classes = std::max(num_classes, raw_labels.max_class + 1);
        num_classes = std::max(num_classes, 2);
        const int num_workers = std::max(raw_labels.max_worker + 1, 1);
        data.crowd_labels = assemble_crowd_labels(raw_labels, data.num_instances, num_workers,
                                                  num_classes, context);
    } else {
        num_classes = std::max(num_classes, 2);
        data.crowd_labels = CrowdLabelSet(data.num_instances, 1, num_classes);
    }
    data.true_labels = truth;
    *num_classes_io = num_classes;
    data.validate();
    return data;
}

}  // namespace cmd_detail

/// Runs the full study loop declared by the config file and writes
/// risk_table.csv, winners.csv, and report files into the output directory.
inline StudyFiles cmd_study(const fs::path& config_path, const StudyOverrides& overrides = {}) {
    const std::string context = config_path.string();
    const Json config = load_json_file(config_path);
    if (!config.contains("dataset")) {
        throw ConfigError(context + ": missing field 'dataset'");
    }
    const Json& dataset_json = config.at("dataset");

    StudyConfig study;
    study.learner =
        learner_from_name(cmd_detail::require<std::string>(config, "learner", context));
    if (config.contains("search_space_path")) {
        study.space = parse_search_space(
            load_json_file(cmd_detail::require<std::string>(config, "search_space_path", context)),
            context);
    } else if (config.contains("search_space")) {
        study.space = parse_search_space(config.at("search_space"), context);
    } else {
        study.space = learner_search_space(study.learner);
    }
    study.seed = overrides.seed.value_or(
        cmd_detail::optional_field<std::uint64_t>(config, "seed", 0, context));
    study.folds =
        overrides.folds.value_or(cmd_detail::optional_field<int>(config, "folds", 5, context));
    study.budget =
        overrides.budget.value_or(cmd_detail::optional_field<int>(config, "budget", 51, context));
    study.test_seeds = overrides.test_seeds.value_or(
        cmd_detail::optional_field<int>(config, "test_seeds", 5, context));
    study.parallelism = overrides.parallelism.value_or(
        cmd_detail::optional_field<int>(config, "parallelism", 0, context));
    study.equal_p = cmd_detail::optional_field<double>(config, "equal_p", 0.8, context);
    if (config.contains("def_data")) {
        study.def_data = parse_candidate_values(config.at("def_data"), context + ": def_data");
    }

    int num_classes = cmd_detail::optional_field<int>(config, "classes", 0, context);
    const Dataset train = cmd_detail::load_study_dataset(dataset_json, context, true, &num_classes);
    Dataset test = cmd_detail::load_study_dataset(dataset_json, context, false, &num_classes);
    // Class count is shared; reload-free fix-up when test labels widened it.
    if (test.crowd_labels.num_classes() != num_classes) {
        test.crowd_labels = CrowdLabelSet(test.num_instances, 1, num_classes);
    }
    if (train.crowd_labels.num_classes() != num_classes) {
        throw ConfigError(context + ": test labels name class " + std::to_string(num_classes - 1) +
                          " never seen in the training data");
    }

    StudyFiles out;
    out.learner = study.learner;
    out.dataset_id = cmd_detail::optional_field<std::string>(
        config, "dataset_id", cmd_detail::require<std::string>(dataset_json, "crowd_labels", context),
        context);
    out.output_dir = overrides.output_dir.value_or(
        cmd_detail::require<std::string>(config, "output_dir", context));
    out.result = run_study(study, train, test);
    const StudyResult& result = out.result;

    // risk_table.csv: evaluated candidates only; failed ones are listed in
    // the summary with their reasons.
    {
        std::ofstream file = open_output(out.output_dir / "risk_table.csv");
        file << "candidate_id,origin";
        for (CriterionId id : result.table.column_ids) {
            file << ',' << criterion_name(id);
        }
        file << '\n';
        for (std::size_t row = 0; row < result.evaluated.size(); ++row) {
            const int candidate = result.evaluated[row];
            file << candidate << ','
                 << result.candidates[static_cast<std::size_t>(candidate)].origin_string();
            for (std::size_t j = 0; j < result.table.columns.size(); ++j) {
                file << ',' << format_double(result.table.columns[j][row]);
            }
            file << '\n';
        }
    }
    {
        std::ofstream file = open_output(out.output_dir / "winners.csv");
        file << "criterion,candidate_id,test_loss_mean,test_loss_se\n";
        for (CriterionId id : kAllCriteria) {
            auto it = result.winners.find(id);
            if (it == result.winners.end()) {
                continue;
            }
            const TestOutcome& outcome = result.test_outcomes.at(id);
            file << criterion_name(id) << ',' << it->second << ','
                 << format_double(outcome.loss_mean) << ',' << format_double(outcome.loss_se)
                 << '\n';
        }
    }
    {
        Json summary;
        summary["dataset_id"] = out.dataset_id;
        summary["learner"] = learner_name(study.learner);
        summary["seed"] = study.seed;
        summary["folds"] = study.folds;
        summary["budget"] = study.budget;
        summary["test_seeds"] = study.test_seeds;
        summary["equal_p"] = study.equal_p;
        Json winners = Json::object();
        for (const auto& [criterion, candidate] : result.winners) {
            Json entry;
            entry["candidate_id"] = candidate;
            entry["test_loss_mean"] = result.test_outcomes.at(criterion).loss_mean;
            entry["test_loss_se"] = result.test_outcomes.at(criterion).loss_se;
            winners[criterion_name(criterion)] = entry;
        }
        summary["winners"] = winners;
        Json failures = Json::array();
        for (const auto& failure : result.failures) {
            Json entry;
            entry["candidate_id"] = failure.candidate;
            entry["fold"] = failure.fold;
            entry["reason"] = failure.reason;
            failures.push_back(entry);
        }
        summary["failures"] = failures;
        Json candidates = Json::array();
        for (std::size_t i = 0; i < result.candidates.size(); ++i) {
            Json entry;
            entry["candidate_id"] = static_cast<int>(i);
            entry["origin"] = result.candidates[i].origin_string();
            Json values = Json::object();
            for (const auto& [name, value] : result.candidates[i].values) {
                values[name] = param_value_to_string(value);
            }
            entry["values"] = values;
            candidates.push_back(entry);
        }
        summary["candidates"] = candidates;

        std::ofstream file = open_output(out.output_dir / "report" / "summary.json");
        file << summary.dump(2) << '\n';
    }
    {
        // Per-study loss reductions against this study's def winner.
        std::ofstream file = open_output(out.output_dir / "report" / "reductions_vs_def.csv");
        file << "criterion,absolute_pp,relative_pct\n";
        const double def_loss = result.test_outcomes.at(CriterionId::Def).loss_mean;
        for (CriterionId id : kAllCriteria) {
            auto it = result.test_outcomes.find(id);
            if (it == result.test_outcomes.end() || !(def_loss > 0.0)) {
                continue;
            }
            const LossReduction reduction = loss_reduction(def_loss, it->second.loss_mean);
            file << criterion_name(id) << ',' << format_double(reduction.absolute_pp) << ','
                 << format_double(reduction.relative_pct) << '\n';
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

struct LoadedStudy {
    std::string dataset_id;
    std::string learner;
    std::map<CriterionId, double> losses;  // test_loss_mean per criterion
};

inline LoadedStudy load_study_summary(const fs::path& study_dir) {
    const Json summary = load_json_file(study_dir / "report" / "summary.json");
    const std::string context = study_dir.string();
    LoadedStudy out;
    out.dataset_id = cmd_detail::require<std::string>(summary, "dataset_id", context);
    out.learner = cmd_detail::require<std::string>(summary, "learner", context);
    if (!summary.contains("winners")) {
        throw ConfigError(context + ": summary has no winners");
    }
    for (const auto& [name, entry] : summary.at("winners").items()) {
        out.losses[criterion_from_name(name)] =
            cmd_detail::require<double>(entry, "test_loss_mean", context);
    }
    return out;
}

/// Aggregates completed studies into comparison tables. Studies exposing
/// the full criterion set are ranked against each other; majority-vote
/// baseline studies additionally provide the mv[def] reference losses.
inline void cmd_report(const std::vector<fs::path>& study_dirs, const fs::path& out_dir) {
    if (study_dirs.empty()) {
        throw ConfigError("cmd_report: need at least one completed study");
    }
    std::vector<LoadedStudy> studies;
    studies.reserve(study_dirs.size());
    for (const auto& dir : study_dirs) {
        studies.push_back(load_study_summary(dir));
    }

    // mv[def] baseline per dataset.
    std::map<std::string, double> mv_def_loss;
    for (const auto& study : studies) {
        if (study.learner == learner_name(LearnerKind::MvTwoStage) &&
            study.losses.count(CriterionId::Def)) {
            mv_def_loss[study.dataset_id] = study.losses.at(CriterionId::Def);
        }
    }

    // Comparison set: studies carrying the ensemble column (hence all seven
    // members); their criterion sets must agree exactly.
    std::vector<const LoadedStudy*> included;
    for (const auto& study : studies) {
        if (study.losses.count(CriterionId::Ens)) {
            included.push_back(&study);
        }
    }
    if (included.empty()) {
        throw ConfigError("cmd_report: no study exposes the full criterion set");
    }
    std::vector<CriterionId> criteria;
    for (CriterionId id : kAllCriteria) {
        if (included.front()->losses.count(id)) {
            criteria.push_back(id);
        }
    }
    for (const auto* study : included) {
        if (study->losses.size() != criteria.size()) {
            throw ConfigError("cmd_report: schema mismatch, studies expose different criteria");
        }
        for (CriterionId id : criteria) {
            if (!study->losses.count(id)) {
                throw ConfigError("cmd_report: schema mismatch, studies expose different criteria");
            }
        }
    }

    std::vector<std::vector<double>> losses(criteria.size(),
                                            std::vector<double>(included.size()));
    for (std::size_t j = 0; j < criteria.size(); ++j) {
        for (std::size_t e = 0; e < included.size(); ++e) {
            losses[j][e] = included[e]->losses.at(criteria[j]);
        }
    }

    {
        const std::vector<MeanRank> ranks = mean_rank(losses);
        std::ofstream file = open_output(out_dir / "mean_ranks.csv");
        file << "criterion,mean_rank,se\n";
        for (std::size_t j = 0; j < criteria.size(); ++j) {
            file << criterion_name(criteria[j]) << ',' << format_double(ranks[j].mean) << ','
                 << format_double(ranks[j].standard_error) << '\n';
        }
    }
    {
        std::ofstream file = open_output(out_dir / "reductions_vs_def.csv");
        file << "criterion,absolute_pp_mean,absolute_pp_se,relative_pct_mean,relative_pct_se\n";
        for (std::size_t j = 0; j < criteria.size(); ++j) {
            std::vector<double> abs_pp;
            std::vector<double> rel_pct;
            for (std::size_t e = 0; e < included.size(); ++e) {
                const double def_loss = included[e]->losses.at(CriterionId::Def);
                if (!(def_loss > 0.0)) {
                    continue;
                }
                const LossReduction r = loss_reduction(def_loss, losses[j][e]);
                abs_pp.push_back(r.absolute_pp);
                rel_pct.push_back(r.relative_pct);
            }
            if (abs_pp.empty()) {
                continue;
            }
            const MeanRank abs_stats = mean_and_se(abs_pp);
            const MeanRank rel_stats = mean_and_se(rel_pct);
            file << criterion_name(criteria[j]) << ',' << format_double(abs_stats.mean) << ','
                 << format_double(abs_stats.standard_error) << ','
                 << format_double(rel_stats.mean) << ','
                 << format_double(rel_stats.standard_error) << '\n';
        }
    }
    {
        std::ofstream file = open_output(out_dir / "reductions_vs_mv_def.csv");
        file << "criterion,absolute_pp_mean,absolute_pp_se,relative_pct_mean,relative_pct_se\n";
        for (std::size_t j = 0; j < criteria.size(); ++j) {
            std::vector<double> abs_pp;
            std::vector<double> rel_pct;
            for (std::size_t e = 0; e < included.size(); ++e) {
                auto it = mv_def_loss.find(included[e]->dataset_id);
                if (it == mv_def_loss.end() || !(it->second > 0.0)) {
                    continue;
                }
                const LossReduction r = loss_reduction(it->second, losses[j][e]);
                abs_pp.push_back(r.absolute_pp);
                rel_pct.push_back(r.relative_pct);
            }
            if (abs_pp.empty()) {
                continue;
            }
            const MeanRank abs_stats = mean_and_se(abs_pp);
            const MeanRank rel_stats = mean_and_se(rel_pct);
            file << criterion_name(criteria[j]) << ',' << format_double(abs_stats.mean) << ','
                 << format_double(abs_stats.standard_error) << ','
                 << format_double(rel_stats.mean) << ','
                 << format_double(rel_stats.standard_error) << '\n';
        }
    }
    {
        const std::vector<std::vector<double>> wins = win_rate_matrix(losses);
        std::ofstream file = open_output(out_dir / "win_rate.csv");
        file << "criterion";
        for (CriterionId id : criteria) {
            file << ',' << criterion_name(id);
        }
        file << '\n';
        for (std::size_t i = 0; i < criteria.size(); ++i) {
            file << criterion_name(criteria[i]);
            for (std::size_t j = 0; j < criteria.size(); ++j) {
                file << ',' << (i == j ? "N/A" : format_double(wins[i][j]));
            }
            file << '\n';
        }
    }
    {
        std::ofstream file = open_output(out_dir / "kendall_tau.csv");
        file << "criterion";
        for (CriterionId id : criteria) {
            file << ',' << criterion_name(id);
        }
        file << '\n';
        for (std::size_t i = 0; i < criteria.size(); ++i) {
            file << criterion_name(criteria[i]);
            for (std::size_t j = 0; j < criteria.size(); ++j) {
                if (i == j) {
                    file << ",N/A";
                    continue;
                }
                try {
                    file << ',' << format_double(kendall_tau_b(losses[i], losses[j]));
                } catch (const Error&) {
                    file << ",N/A";  // undefined for all-tied or single-study input
                }
            }
            file << '\n';
        }
    }
    {
        Json summary;
        summary["included_studies"] = Json::array();
        for (std::size_t e = 0; e < included.size(); ++e) {
            summary["included_studies"].push_back(included[e]->dataset_id + ":" +
                                                  included[e]->learner);
        }
        Json names = Json::array();
        for (CriterionId id : criteria) {
            names.push_back(criterion_name(id));
        }
        summary["criteria"] = names;
        summary["mv_def_baselines"] = mv_def_loss;
        std::ofstream file = open_output(out_dir / "summary.json");
        file << summary.dump(2) << '\n';
    }
}

}  // namespace crowdval

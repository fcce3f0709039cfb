#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "crowdval/criteria.hpp"
#include "crowdval/lfc.hpp"
#include "crowdval/report.hpp"
#include "crowdval/risk.hpp"

namespace crowdval {

// ---------------------------------------------------------------------------
// Study engine: the full search -> train -> estimate -> select -> test loop.
// ---------------------------------------------------------------------------
// Work is a queue of (candidate, fold) tasks executed by a small thread
// pool; every task writes only its own slot, so results are identical at
// any parallelism level. Per-task seeds derive from (seed, candidate, fold).

struct StudyConfig {
    LearnerKind learner = LearnerKind::ConfusionOneStage;
    SearchSpace space;
    int folds = 5;
    int budget = 51;
    int test_seeds = 5;
    std::uint64_t seed = 0;
    int parallelism = 0;  // 0 = hardware concurrency
    double equal_p = 0.8;
    std::optional<HpcCandidate> def_data;

    void validate() const {
        if (folds < 1 || budget < 1 || test_seeds < 1) {
            throw ConfigError("study config: folds, budget, and test_seeds must be positive");
        }
    }
};

struct CandidateFailure {
    int candidate = 0;
    int fold = 0;
    std::string reason;
};

struct TestOutcome {
    int candidate = 0;
    double loss_mean = 0.0;
    double loss_se = 0.0;
};

struct StudyResult {
    std::vector<HpcCandidate> candidates;
    SplitPlan split_plan;
    std::vector<int> evaluated;  // original indices of candidates with complete bundles
    RiskTable table;             // rows follow `evaluated`
    std::map<CriterionId, int> winners;  // original candidate indices
    std::map<CriterionId, TestOutcome> test_outcomes;
    std::vector<CandidateFailure> failures;
};

namespace study_detail {

inline void parallel_for(int num_tasks, int parallelism, const std::function<void(int)>& body) {
    int threads = parallelism > 0 ? parallelism
                                  : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, num_tasks));
    if (threads == 1) {
        for (int t = 0; t < num_tasks; ++t) {
            body(t);
        }
        return;
    }
    std::atomic<int> next{0};
    std::atomic<bool> abort{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        while (!abort.load(std::memory_order_relaxed)) {
            const int task = next.fetch_add(1);
            if (task >= num_tasks) {
                return;
            }
            try {
                body(task);
            } catch (...) {
                {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) {
                        error = std::current_exception();
                    }
                }
                abort.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back(worker);
    }
    for (auto& thread : pool) {
        thread.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

/// Predictions of one trained model on one fold's validation instances.
inline FoldPredictions predict_fold(const TrainedModel& model, const Dataset& data,
                                    const std::vector<int>& validation) {
    FoldPredictions out;
    const bool crowd = model.has_crowd_model();
    if (crowd) {
        out.crowd_probs.emplace();
        out.perf = PerformanceEstimate::learned();
    }
    for (int instance : validation) {
        const auto x = data.row(instance);
        out.data_probs.emplace(instance, model.f(x));
        if (crowd) {
            for (const auto& label : data.crowd_labels.labels_of(instance)) {
                out.crowd_probs->emplace(pair_key(instance, label.worker),
                                         model.g(x, label.worker));
                out.perf->set_learned(instance, label.worker, model.h(x, label.worker));
            }
        }
    }
    return out;
}

inline double test_loss(const TrainedModel& model, const Dataset& test) {
    if (!test.true_labels) {
        throw MissingSideInformationError("test set has no true labels");
    }
    double loss = 0.0;
    for (int i = 0; i < test.num_instances; ++i) {
        const ClassLabel truth((*test.true_labels)[static_cast<std::size_t>(i)],
                               test.crowd_labels.num_classes());
        loss += zero_one_loss(truth, model.f(test.row(i)));
    }
    return loss / static_cast<double>(test.num_instances);
}

}  // namespace study_detail

inline StudyResult run_study(const StudyConfig& config, const Dataset& train_data,
                             const Dataset& test_data) {
    config.validate();
    train_data.validate();
    test_data.validate();
    if (!test_data.true_labels) {
        throw ConfigError("run_study: the test set needs true labels");
    }

    StudyResult result;
    result.candidates = sample_candidates(config.space, config.budget);
    result.split_plan = kfold_split(train_data.num_instances, config.folds, config.seed);

    const int num_candidates = static_cast<int>(result.candidates.size());
    const int num_folds = config.folds;
    const int num_tasks = num_candidates * num_folds;

    std::vector<std::optional<FoldPredictions>> predictions(
        static_cast<std::size_t>(num_tasks));
    std::vector<std::optional<CandidateFailure>> failures(static_cast<std::size_t>(num_tasks));

    study_detail::parallel_for(num_tasks, config.parallelism, [&](int task) {
        const int candidate = task / num_folds;
        const int fold = task % num_folds;
        const LearnerSpec spec{config.learner,
                               result.candidates[static_cast<std::size_t>(candidate)]};
        const std::uint64_t task_seed = mix64(config.seed, static_cast<std::uint64_t>(candidate),
                                              static_cast<std::uint64_t>(fold));
        try {
            const TrainedModel model =
                train(spec, train_data,
                      result.split_plan.folds[static_cast<std::size_t>(fold)].train_indices,
                      task_seed);
            predictions[static_cast<std::size_t>(task)] = study_detail::predict_fold(
                model, train_data,
                result.split_plan.folds[static_cast<std::size_t>(fold)].validation_indices);
        } catch (const DivergenceError& err) {
            failures[static_cast<std::size_t>(task)] =
                CandidateFailure{candidate, fold, err.what()};
        }
    });

    // Assemble bundles for candidates whose every fold succeeded.
    std::vector<EvaluationBundle> bundles;
    std::vector<HpcCandidate> evaluated_candidates;
    for (int candidate = 0; candidate < num_candidates; ++candidate) {
        bool ok = true;
        for (int fold = 0; fold < num_folds; ++fold) {
            const auto& failure = failures[static_cast<std::size_t>(candidate * num_folds + fold)];
            if (failure) {
                result.failures.push_back(*failure);
                ok = false;
            }
        }
        if (!ok) {
            continue;
        }
        EvaluationBundle bundle;
        bundle.split_plan = &result.split_plan;
        bundle.crowd_labels = &train_data.crowd_labels;
        bundle.true_labels = train_data.true_labels ? &*train_data.true_labels : nullptr;
        for (int fold = 0; fold < num_folds; ++fold) {
            bundle.fold_predictions.push_back(
                std::move(*predictions[static_cast<std::size_t>(candidate * num_folds + fold)]));
        }
        bundles.push_back(std::move(bundle));
        evaluated_candidates.push_back(result.candidates[static_cast<std::size_t>(candidate)]);
        result.evaluated.push_back(candidate);
    }
    if (bundles.empty()) {
        throw ConfigError("run_study: every candidate failed to train");
    }

    CriteriaEvaluation evaluation = evaluate_all_criteria(
        std::move(evaluated_candidates), bundles, result.candidates.front(),
        config.def_data ? &*config.def_data : nullptr, config.equal_p);
    result.table = std::move(evaluation.table);
    for (const auto& [criterion, row] : evaluation.winners) {
        result.winners[criterion] = result.evaluated[static_cast<std::size_t>(row)];
    }

    // Test each distinct winner on the held-out set with fresh seeds; the
    // criteria often agree, so cache by candidate index.
    std::vector<int> winner_candidates;
    for (const auto& [criterion, candidate] : result.winners) {
        if (std::find(winner_candidates.begin(), winner_candidates.end(), candidate) ==
            winner_candidates.end()) {
            winner_candidates.push_back(candidate);
        }
    }
    std::sort(winner_candidates.begin(), winner_candidates.end());
    const int num_test_tasks = static_cast<int>(winner_candidates.size()) * config.test_seeds;
    std::vector<double> test_losses(static_cast<std::size_t>(num_test_tasks), 0.0);
    std::vector<int> full_indices(static_cast<std::size_t>(train_data.num_instances));
    for (int i = 0; i < train_data.num_instances; ++i) {
        full_indices[static_cast<std::size_t>(i)] = i;
    }
    study_detail::parallel_for(num_test_tasks, config.parallelism, [&](int task) {
        const int which = task / config.test_seeds;
        const int rep = task % config.test_seeds;
        const int candidate = winner_candidates[static_cast<std::size_t>(which)];
        const LearnerSpec spec{config.learner,
                               result.candidates[static_cast<std::size_t>(candidate)]};
        const std::uint64_t task_seed =
            mix64(config.seed, 0x74657374ULL + static_cast<std::uint64_t>(candidate),
                  static_cast<std::uint64_t>(rep));
        const TrainedModel model = train(spec, train_data, full_indices, task_seed);
        test_losses[static_cast<std::size_t>(task)] = study_detail::test_loss(model, test_data);
    });
    std::map<int, TestOutcome> by_candidate;
    for (std::size_t which = 0; which < winner_candidates.size(); ++which) {
        std::vector<double> losses(
            test_losses.begin() + static_cast<std::ptrdiff_t>(which) * config.test_seeds,
            test_losses.begin() + static_cast<std::ptrdiff_t>(which + 1) * config.test_seeds);
        const MeanRank stats = mean_and_se(losses);
        by_candidate[winner_candidates[which]] =
            TestOutcome{winner_candidates[which], stats.mean, stats.standard_error};
    }
    for (const auto& [criterion, candidate] : result.winners) {
        result.test_outcomes[criterion] = by_candidate.at(candidate);
    }
    return result;
}

}  // namespace crowdval

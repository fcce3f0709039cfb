#pragma once

#include <optional>
#include <unordered_map>
#include <vector>

#include "crowdval/core.hpp"
#include "crowdval/hpo.hpp"
#include "crowdval/posterior.hpp"

namespace crowdval {

// ---------------------------------------------------------------------------
// Prediction carriers
// ---------------------------------------------------------------------------

/// Model outputs for one fold's validation instances: class probabilities
/// per instance, optionally per-(instance, worker) crowd-label probabilities
/// and a learned performance table.
struct FoldPredictions {
    std::unordered_map<int, ProbabilityVector> data_probs;
    std::optional<std::unordered_map<std::uint64_t, ProbabilityVector>> crowd_probs;
    std::optional<PerformanceEstimate> perf;

    const ProbabilityVector& data_prob(int instance) const {
        auto it = data_probs.find(instance);
        if (it == data_probs.end()) {
            throw InvalidInputError("FoldPredictions: no prediction for instance " +
                                    std::to_string(instance));
        }
        return it->second;
    }

    const ProbabilityVector& crowd_prob(int instance, int worker) const {
        if (!crowd_probs) {
            throw MissingSideInformationError("FoldPredictions: crowd predictions unavailable");
        }
        auto it = crowd_probs->find(pair_key(instance, worker));
        if (it == crowd_probs->end()) {
            throw InvalidInputError("FoldPredictions: no crowd prediction for instance " +
                                    std::to_string(instance) + ", worker " +
                                    std::to_string(worker));
        }
        return it->second;
    }
};

/// Everything one empirical-risk evaluation needs for one candidate.
struct EvaluationBundle {
    const SplitPlan* split_plan = nullptr;
    std::vector<FoldPredictions> fold_predictions;  // one per fold
    const CrowdLabelSet* crowd_labels = nullptr;
    const std::vector<int>* true_labels = nullptr;  // optional side information

    void check() const {
        if (split_plan == nullptr || crowd_labels == nullptr) {
            throw InvalidInputError("EvaluationBundle: missing split plan or crowd labels");
        }
        if (fold_predictions.size() != split_plan->folds.size()) {
            throw InvalidInputError("EvaluationBundle: one FoldPredictions per fold required");
        }
    }
};

// ---------------------------------------------------------------------------
// Risk estimators
// ---------------------------------------------------------------------------
// Every estimator weights folds by 1/K regardless of fold size; the per-fold
// normalizers absorb instance counts and label weights.

/// Mean zero-one loss against the true labels, fold-averaged.
inline double true_risk(const EvaluationBundle& bundle) {
    bundle.check();
    if (bundle.true_labels == nullptr) {
        throw MissingSideInformationError("true_risk: true labels unavailable");
    }
    const int num_classes = bundle.crowd_labels->num_classes();
    const double k = static_cast<double>(bundle.split_plan->folds.size());
    double risk = 0.0;
    for (std::size_t fold = 0; fold < bundle.split_plan->folds.size(); ++fold) {
        const auto& validation = bundle.split_plan->folds[fold].validation_indices;
        if (validation.empty()) {
            throw DegenerateFoldError("true_risk: empty validation fold");
        }
        const auto& predictions = bundle.fold_predictions[fold];
        double fold_loss = 0.0;
        for (int instance : validation) {
            const ClassLabel truth((*bundle.true_labels)[static_cast<std::size_t>(instance)],
                                   num_classes);
            fold_loss += zero_one_loss(truth, predictions.data_prob(instance));
        }
        risk += fold_loss / (k * static_cast<double>(validation.size()));
    }
    return risk;
}

/// Indicator risk of the default-configuration criterion: 0 iff the
/// candidate equals the default field-by-field.
inline double naive_default_risk(const HpcCandidate& candidate, const HpcCandidate& default_hpc) {
    return candidate.same_values(default_hpc) ? 0.0 : 1.0;
}

enum class PerfMode { Equal, Learned };

namespace detail {

inline const PerformanceEstimate& fold_perf(const FoldPredictions& predictions, PerfMode mode,
                                            const PerformanceEstimate& equal_estimate) {
    if (mode == PerfMode::Equal) {
        return equal_estimate;
    }
    if (!predictions.perf) {
        throw MissingSideInformationError("risk: learned performance estimates unavailable");
    }
    return *predictions.perf;
}

}  // namespace detail

/// Risk of the data classifier against aggregated validation labels.
/// Instances without observed labels contribute weight zero.
inline double aggregation_risk(const EvaluationBundle& bundle, PerfMode perf_mode,
                               WeightScheme weight_scheme, double equal_p = 0.8) {
    bundle.check();
    const int num_classes = bundle.crowd_labels->num_classes();
    const PerformanceEstimate equal_estimate = PerformanceEstimate::equal(equal_p);
    const double k = static_cast<double>(bundle.split_plan->folds.size());
    double risk = 0.0;
    for (std::size_t fold = 0; fold < bundle.split_plan->folds.size(); ++fold) {
        const auto& validation = bundle.split_plan->folds[fold].validation_indices;
        const auto& predictions = bundle.fold_predictions[fold];
        const PerformanceEstimate& perf =
            detail::fold_perf(predictions, perf_mode, equal_estimate);

        double fold_sum = 0.0;
        double normalizer = 0.0;
        for (int instance : validation) {
            const auto& labels = bundle.crowd_labels->labels_of(instance);
            if (labels.empty()) {
                continue;
            }
            const ProbabilityVector posterior =
                posterior_class_probs(labels, perf, num_classes);
            const int aggregated = posterior.argmax();
            const double weight =
                weight_scheme == WeightScheme::Uniform ? 1.0 : posterior[aggregated];
            const double loss =
                zero_one_loss(ClassLabel(aggregated, num_classes), predictions.data_prob(instance));
            fold_sum += weight * loss;
            normalizer += weight;
        }
        if (normalizer <= 0.0) {
            throw DegenerateFoldError("aggregation_risk: fold " + std::to_string(fold) +
                                      " has zero total weight");
        }
        risk += fold_sum / (k * normalizer);
    }
    return risk;
}

/// Label weighting for the crowd-level risk. Uniform ignores performance
/// estimates entirely, which is why the equal and learned variants collapse
/// into one criterion there.
enum class CrowdWeighting { Uniform, ConfidenceEqual, ConfidenceLearned };

/// Risk of the crowdworker classifier against the raw crowd labels.
inline double crowd_risk(const EvaluationBundle& bundle, CrowdWeighting weighting,
                         double equal_p = 0.8) {
    bundle.check();
    const int num_classes = bundle.crowd_labels->num_classes();
    const PerformanceEstimate equal_estimate = PerformanceEstimate::equal(equal_p);
    const double k = static_cast<double>(bundle.split_plan->folds.size());
    double risk = 0.0;
    for (std::size_t fold = 0; fold < bundle.split_plan->folds.size(); ++fold) {
        const auto& validation = bundle.split_plan->folds[fold].validation_indices;
        const auto& predictions = bundle.fold_predictions[fold];

        double fold_sum = 0.0;
        double normalizer = 0.0;
        for (int instance : validation) {
            const auto& labels = bundle.crowd_labels->labels_of(instance);
            if (labels.empty()) {
                continue;
            }
            std::optional<ProbabilityVector> posterior;
            if (weighting != CrowdWeighting::Uniform) {
                const PerformanceEstimate& perf = detail::fold_perf(
                    predictions,
                    weighting == CrowdWeighting::ConfidenceEqual ? PerfMode::Equal
                                                                 : PerfMode::Learned,
                    equal_estimate);
                posterior = posterior_class_probs(labels, perf, num_classes);
            }
            for (const auto& label : labels) {
                const double weight = posterior ? (*posterior)[label.label] : 1.0;
                const double loss = zero_one_loss(ClassLabel(label.label, num_classes),
                                                  predictions.crowd_prob(instance, label.worker));
                fold_sum += weight * loss;
                normalizer += weight;
            }
        }
        if (normalizer <= 0.0) {
            throw DegenerateFoldError("crowd_risk: fold " + std::to_string(fold) +
                                      " has zero total weight");
        }
        risk += fold_sum / (k * normalizer);
    }
    return risk;
}

/// Signed deviation of an estimate from the true empirical risk.
inline double risk_deviation(double estimated, double true_risk_value) {
    return estimated - true_risk_value;
}

}  // namespace crowdval

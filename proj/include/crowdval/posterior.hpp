#pragma once

#include <cmath>
#include <vector>

#include "crowdval/core.hpp"

namespace crowdval {

// Posterior true-label probabilities from crowd labels under a uniform class
// prior and a per-label Bernoulli accuracy model: a label matching class c
// contributes its accuracy a, any other class (1 - a) / (C - 1). Products are
// accumulated as log sums so long evidence chains cannot underflow.

/// Accuracies are clamped away from {0, 1} before taking logs; the vote
/// weight ln(a (C-1) / (1 - a)) diverges at the endpoints.
constexpr double kAccuracyClamp = 1e-6;

inline double clamp_accuracy(double a) {
    if (a < kAccuracyClamp) {
        return kAccuracyClamp;
    }
    if (a > 1.0 - kAccuracyClamp) {
        return 1.0 - kAccuracyClamp;
    }
    return a;
}

namespace detail {

inline void check_posterior_inputs(const std::vector<CrowdLabel>& instance_labels,
                                   const PerformanceEstimate& perf, int num_classes) {
    if (num_classes < 2) {
        throw InvalidInputError("posterior: need at least 2 classes");
    }
    if (instance_labels.empty()) {
        throw EmptyEvidenceError("posterior: instance has no observed labels");
    }
    if (perf.mode() == PerformanceEstimate::Mode::Equal &&
        !(perf.equal_p() > 1.0 / num_classes)) {
        throw InvalidInputError("posterior: equal performance p must exceed 1/C");
    }
    for (const auto& label : instance_labels) {
        if (label.label < 0 || label.label >= num_classes) {
            throw InvalidInputError("posterior: label class out of range");
        }
    }
}

/// Log-odds weight of one vote against a uniform error split. The same
/// expression feeds the posterior and the weighted-vote score, so classes
/// with identical vote structure stay bitwise tied in both.
inline double vote_log_weight(double accuracy, int num_classes) {
    const double a = clamp_accuracy(accuracy);
    return std::log(a) - std::log((1.0 - a) / (num_classes - 1));
}

/// Unnormalized log posterior per class, decomposed as a class-independent
/// base plus per-vote increments. Equal-performance ties then resolve
/// exactly: classes with equal vote counts accumulate identical sums.
inline std::vector<double> log_posterior(const std::vector<CrowdLabel>& instance_labels,
                                         const PerformanceEstimate& perf, int num_classes) {
    std::vector<double> logp(static_cast<std::size_t>(num_classes), 0.0);
    double base = 0.0;
    for (const auto& label : instance_labels) {
        const double a = clamp_accuracy(perf.accuracy(label.instance, label.worker));
        base += std::log((1.0 - a) / (num_classes - 1));
        logp[static_cast<std::size_t>(label.label)] += vote_log_weight(a, num_classes);
    }
    for (double& v : logp) {
        v += base;
    }
    return logp;
}

inline ProbabilityVector normalize_log(std::vector<double> logp) {
    double max_log = logp[0];
    for (double v : logp) {
        max_log = std::max(max_log, v);
    }
    double sum = 0.0;
    for (double& v : logp) {
        v = std::exp(v - max_log);
        sum += v;
    }
    for (double& v : logp) {
        v /= sum;
    }
    return ProbabilityVector(std::move(logp));
}

}  // namespace detail

/// Posterior over the C classes given one instance's observed labels.
inline ProbabilityVector posterior_class_probs(const std::vector<CrowdLabel>& instance_labels,
                                               const PerformanceEstimate& perf, int num_classes) {
    detail::check_posterior_inputs(instance_labels, perf, num_classes);
    return detail::normalize_log(detail::log_posterior(instance_labels, perf, num_classes));
}

/// MAP aggregation of one instance's labels. Under equal performances this
/// is the plain majority vote; under learned performances it is the weighted
/// majority vote of weighted_vote_score.
inline ClassLabel aggregate_label(const std::vector<CrowdLabel>& instance_labels,
                                  const PerformanceEstimate& perf, int num_classes) {
    const ProbabilityVector posterior = posterior_class_probs(instance_labels, perf, num_classes);
    return ClassLabel(posterior.argmax(), num_classes);
}

/// Per-class sums of the log-odds vote weights ln(a (C-1) / (1 - a)).
/// Requires learned performances; the argmax equals aggregate_label.
inline std::vector<double> weighted_vote_score(const std::vector<CrowdLabel>& instance_labels,
                                               const PerformanceEstimate& perf_learned,
                                               int num_classes) {
    if (perf_learned.mode() != PerformanceEstimate::Mode::Learned) {
        throw InvalidInputError("weighted_vote_score: learned performances required");
    }
    detail::check_posterior_inputs(instance_labels, perf_learned, num_classes);
    std::vector<double> scores(static_cast<std::size_t>(num_classes), 0.0);
    for (const auto& label : instance_labels) {
        scores[static_cast<std::size_t>(label.label)] += detail::vote_log_weight(
            perf_learned.accuracy(label.instance, label.worker), num_classes);
    }
    return scores;
}

enum class WeightScheme { Uniform, Confidence };

/// Weight of one instance's aggregated label in the aggregation-level risk:
/// 1 under uniform weighting, the posterior maximum under confidence
/// weighting.
inline double aggregation_weight(const std::vector<CrowdLabel>& instance_labels,
                                 const PerformanceEstimate& perf, int num_classes,
                                 WeightScheme scheme) {
    if (scheme == WeightScheme::Uniform) {
        return 1.0;
    }
    const ProbabilityVector posterior = posterior_class_probs(instance_labels, perf, num_classes);
    return posterior[posterior.argmax()];
}

/// Weight of one worker's label in the crowd-level risk: 1 under uniform
/// weighting, the posterior probability of the class that worker assigned
/// under confidence weighting.
inline double crowd_weight(const std::vector<CrowdLabel>& instance_labels, int worker,
                           const PerformanceEstimate& perf, int num_classes, WeightScheme scheme) {
    const CrowdLabel* found = nullptr;
    for (const auto& label : instance_labels) {
        if (label.worker == worker) {
            found = &label;
            break;
        }
    }
    if (found == nullptr) {
        throw InvalidInputError("crowd_weight: worker has no observed label for this instance");
    }
    if (scheme == WeightScheme::Uniform) {
        return 1.0;
    }
    const ProbabilityVector posterior = posterior_class_probs(instance_labels, perf, num_classes);
    return posterior[found->label];
}

// ---------------------------------------------------------------------------
// Constructive counterexamples (test support)
// ---------------------------------------------------------------------------
// The production path uses a uniform prior and the Bernoulli accuracy model.
// These generators construct the inputs that would break the richer models:
// a prior biased enough to force any class, and full per-worker confusion
// estimates doing the same. The property suite uses them to verify the
// hazards the simplifications avoid.

/// Unnormalized per-class evidence products under the Bernoulli model, in
/// plain probability space (test-scale evidence only).
inline std::vector<double> bernoulli_likelihoods(const std::vector<CrowdLabel>& instance_labels,
                                                 const PerformanceEstimate& perf,
                                                 int num_classes) {
    detail::check_posterior_inputs(instance_labels, perf, num_classes);
    std::vector<double> lik(static_cast<std::size_t>(num_classes), 1.0);
    for (const auto& label : instance_labels) {
        const double a = clamp_accuracy(perf.accuracy(label.instance, label.worker));
        for (int c = 0; c < num_classes; ++c) {
            lik[static_cast<std::size_t>(c)] *= (c == label.label) ? a : (1.0 - a) / (num_classes - 1);
        }
    }
    return lik;
}

/// MAP under a general (possibly non-uniform) prior and the Bernoulli
/// likelihoods; the generic Bayes route the counterexamples attack.
inline int map_with_prior(const ProbabilityVector& prior,
                          const std::vector<CrowdLabel>& instance_labels,
                          const PerformanceEstimate& perf, int num_classes) {
    std::vector<double> lik = bernoulli_likelihoods(instance_labels, perf, num_classes);
    for (int c = 0; c < num_classes; ++c) {
        lik[static_cast<std::size_t>(c)] *= prior[c];
    }
    return argmax_tiebreak(lik);
}

/// A prior with enough mass on target_class that the MAP lands there no
/// matter what the labels say: mass epsilon + (1 - epsilon)/2 on the target
/// with epsilon = l_max / (l_max + l_target), rest spread uniformly.
inline ProbabilityVector prop1_counterexample(int num_classes,
                                              const std::vector<CrowdLabel>& instance_labels,
                                              int target_class,
                                              const PerformanceEstimate& perf) {
    const std::vector<double> lik = bernoulli_likelihoods(instance_labels, perf, num_classes);
    double l_max = 0.0;
    for (int c = 0; c < num_classes; ++c) {
        if (c != target_class) {
            l_max = std::max(l_max, lik[static_cast<std::size_t>(c)]);
        }
    }
    const double l_target = lik[static_cast<std::size_t>(target_class)];
    const double epsilon = l_max / (l_max + l_target);
    const double target_mass = epsilon + (1.0 - epsilon) * 0.5;
    std::vector<double> prior(static_cast<std::size_t>(num_classes),
                              (1.0 - target_mass) / (num_classes - 1));
    prior[static_cast<std::size_t>(target_class)] = target_mass;
    return ProbabilityVector(std::move(prior));
}

/// Per-worker full confusion estimates biased so that, under a uniform
/// prior, the MAP lands on target_class regardless of the observed labels:
/// row target_class concentrates on whatever the worker voted.
struct ConfusionEstimates {
    // confusion[w][c][k] = estimated Pr(worker w assigns k | true class c);
    // only workers appearing in the instance's label list are filled.
    std::unordered_map<int, std::vector<std::vector<double>>> per_worker;
};

inline ConfusionEstimates prop2_counterexample(int num_classes,
                                               const std::vector<CrowdLabel>& instance_labels,
                                               int target_class) {
    if (instance_labels.empty()) {
        throw EmptyEvidenceError("prop2_counterexample: no observed labels");
    }
    ConfusionEstimates out;
    for (const auto& label : instance_labels) {
        auto& confusion = out.per_worker[label.worker];
        confusion.assign(static_cast<std::size_t>(num_classes),
                         std::vector<double>(static_cast<std::size_t>(num_classes),
                                             1.0 / num_classes));
        auto& target_row = confusion[static_cast<std::size_t>(target_class)];
        const double peak = 0.9;
        for (int k = 0; k < num_classes; ++k) {
            target_row[static_cast<std::size_t>(k)] =
                (k == label.label) ? peak : (1.0 - peak) / (num_classes - 1);
        }
    }
    return out;
}

/// MAP under a uniform prior and full per-worker confusion estimates; the
/// route prop2_counterexample attacks.
inline int map_with_confusions(const std::vector<CrowdLabel>& instance_labels,
                               const ConfusionEstimates& estimates, int num_classes) {
    if (instance_labels.empty()) {
        throw EmptyEvidenceError("map_with_confusions: no observed labels");
    }
    std::vector<double> logp(static_cast<std::size_t>(num_classes), 0.0);
    for (const auto& label : instance_labels) {
        const auto& confusion = estimates.per_worker.at(label.worker);
        for (int c = 0; c < num_classes; ++c) {
            logp[static_cast<std::size_t>(c)] +=
                std::log(confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(label.label)]);
        }
    }
    return argmax_tiebreak(logp);
}

}  // namespace crowdval

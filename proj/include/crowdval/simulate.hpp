#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "crowdval/core.hpp"
#include "crowdval/lfc.hpp"
#include "crowdval/posterior.hpp"

namespace crowdval {

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

/// Class-balanced isotropic Gaussian clusters (unit variance) whose centers
/// are `separation` apart: adjacent points on a circle for D >= 2, a line
/// for D = 1. Classes interleave across instances so contiguous splits stay
/// balanced.
inline Dataset gaussian_blobs(int n, int num_classes, int num_features, double separation,
                              std::uint64_t seed) {
    if (n < num_classes || num_classes < 2 || num_features < 1) {
        throw InvalidInputError("gaussian_blobs: need n >= C >= 2 and D >= 1");
    }
    std::vector<std::vector<double>> centers(static_cast<std::size_t>(num_classes),
                                             std::vector<double>(static_cast<std::size_t>(num_features), 0.0));
    if (num_features == 1) {
        for (int c = 0; c < num_classes; ++c) {
            centers[static_cast<std::size_t>(c)][0] = separation * c;
        }
    } else {
        const double pi = 3.14159265358979323846;
        const double radius = separation / (2.0 * std::sin(pi / num_classes));
        for (int c = 0; c < num_classes; ++c) {
            const double angle = 2.0 * pi * c / num_classes;
            centers[static_cast<std::size_t>(c)][0] = radius * std::cos(angle);
            centers[static_cast<std::size_t>(c)][1] = radius * std::sin(angle);
        }
    }

    Dataset data;
    data.num_instances = n;
    data.num_features = num_features;
    data.features.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(num_features));
    data.true_labels = std::vector<int>(static_cast<std::size_t>(n));
    data.crowd_labels = CrowdLabelSet(n, 1, num_classes);

    Rng rng(mix64(seed, 0x626c6f62ULL));
    for (int i = 0; i < n; ++i) {
        const int c = i % num_classes;
        (*data.true_labels)[static_cast<std::size_t>(i)] = c;
        for (int d = 0; d < num_features; ++d) {
            data.features[static_cast<std::size_t>(i) * static_cast<std::size_t>(num_features) +
                          static_cast<std::size_t>(d)] =
                centers[static_cast<std::size_t>(c)][static_cast<std::size_t>(d)] +
                rng.next_gaussian();
        }
    }
    return data;
}

/// Draws one label per (instance, worker) pair with probability `coverage`,
/// sampled from row y_n of that worker's confusion matrix.
inline CrowdLabelSet simulate_crowd(const Dataset& data,
                                    const std::vector<ConfusionMatrix>& worker_confusions,
                                    double coverage, std::uint64_t seed) {
    if (!data.true_labels) {
        throw InvalidInputError("simulate_crowd: dataset has no true labels");
    }
    if (worker_confusions.empty()) {
        throw InvalidInputError("simulate_crowd: need at least one worker");
    }
    if (!(coverage > 0.0 && coverage <= 1.0)) {
        throw InvalidInputError("simulate_crowd: coverage must lie in (0, 1]");
    }
    const int C = worker_confusions.front().num_classes;
    for (const auto& q : worker_confusions) {
        if (q.num_classes != C) {
            throw InvalidInputError("simulate_crowd: confusion matrices disagree on C");
        }
    }
    const int M = static_cast<int>(worker_confusions.size());
    CrowdLabelSet labels(data.num_instances, M, C);
    Rng rng(mix64(seed, 0x63726f77ULL));
    for (int i = 0; i < data.num_instances; ++i) {
        const int truth = (*data.true_labels)[static_cast<std::size_t>(i)];
        for (int m = 0; m < M; ++m) {
            if (coverage < 1.0 && rng.next_double() >= coverage) {
                continue;
            }
            const double u = rng.next_double();
            double cumulative = 0.0;
            int drawn = C - 1;
            for (int k = 0; k < C; ++k) {
                cumulative += worker_confusions[static_cast<std::size_t>(m)].at(truth, k);
                if (u < cumulative) {
                    drawn = k;
                    break;
                }
            }
            labels.add(i, m, drawn);
        }
    }
    return labels;
}

// ---------------------------------------------------------------------------
// Noisy-label variants
// ---------------------------------------------------------------------------

enum class VariantKind { Worst1, Worst2, WorstV, Rand1, Rand2, RandV, Full };

inline std::string variant_name(VariantKind kind) {
    switch (kind) {
        case VariantKind::Worst1:
            return "worst-1";
        case VariantKind::Worst2:
            return "worst-2";
        case VariantKind::WorstV:
            return "worst-v";
        case VariantKind::Rand1:
            return "rand-1";
        case VariantKind::Rand2:
            return "rand-2";
        case VariantKind::RandV:
            return "rand-v";
        case VariantKind::Full:
            return "full";
    }
    return "?";
}

inline VariantKind variant_from_name(const std::string& name) {
    for (VariantKind kind : {VariantKind::Worst1, VariantKind::Worst2, VariantKind::WorstV,
                             VariantKind::Rand1, VariantKind::Rand2, VariantKind::RandV,
                             VariantKind::Full}) {
        if (variant_name(kind) == name) {
            return kind;
        }
    }
    throw InvalidInputError("unknown variant: " + name);
}

/// Subsamples labels per instance. Worst-k keeps up to k labels preferring
/// incorrect ones; rand-k keeps up to k uniformly; the V suffix draws the
/// kept count uniformly from [1, available]. Worker ids stay stable, so
/// some workers may end up with no labels.
inline CrowdLabelSet make_variant(const CrowdLabelSet& labels, const std::vector<int>* true_labels,
                                  VariantKind kind, std::uint64_t seed) {
    if (kind == VariantKind::Full) {
        return labels;
    }
    const bool worst = kind == VariantKind::Worst1 || kind == VariantKind::Worst2 ||
                       kind == VariantKind::WorstV;
    if (worst && true_labels == nullptr) {
        throw InvalidInputError("make_variant: worst-* variants require true labels");
    }
    const bool variable = kind == VariantKind::WorstV || kind == VariantKind::RandV;
    const int cap = (kind == VariantKind::Worst1 || kind == VariantKind::Rand1) ? 1 : 2;

    CrowdLabelSet out(labels.num_instances(), labels.num_workers(), labels.num_classes());
    for (int i = 0; i < labels.num_instances(); ++i) {
        const auto& available = labels.labels_of(i);
        if (available.empty()) {
            continue;
        }
        Rng rng(mix64(seed, 0x76617269ULL, static_cast<std::uint64_t>(i)));
        const int keep = variable
                             ? 1 + static_cast<int>(rng.next_below(available.size()))
                             : std::min<int>(cap, static_cast<int>(available.size()));

        std::vector<CrowdLabel> pool;
        if (worst) {
            std::vector<CrowdLabel> incorrect;
            std::vector<CrowdLabel> correct;
            const int truth = (*true_labels)[static_cast<std::size_t>(i)];
            for (const auto& label : available) {
                (label.label == truth ? correct : incorrect).push_back(label);
            }
            rng.shuffle(incorrect);
            rng.shuffle(correct);
            pool = std::move(incorrect);
            pool.insert(pool.end(), correct.begin(), correct.end());
        } else {
            pool = available;
            rng.shuffle(pool);
        }
        for (int j = 0; j < keep; ++j) {
            out.add(pool[static_cast<std::size_t>(j)].instance,
                    pool[static_cast<std::size_t>(j)].worker,
                    pool[static_cast<std::size_t>(j)].label);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Noise summaries
// ---------------------------------------------------------------------------

/// Fraction of observed labels that disagree with the true class.
inline double label_noise(const CrowdLabelSet& labels, const std::vector<int>& true_labels) {
    std::int64_t total = 0;
    std::int64_t wrong = 0;
    for (int i = 0; i < labels.num_instances(); ++i) {
        for (const auto& label : labels.labels_of(i)) {
            ++total;
            if (label.label != true_labels[static_cast<std::size_t>(i)]) {
                ++wrong;
            }
        }
    }
    if (total == 0) {
        throw EmptyEvidenceError("label_noise: no observed labels");
    }
    return static_cast<double>(wrong) / static_cast<double>(total);
}

/// Fraction of labeled instances whose majority-vote aggregate disagrees
/// with the true class.
inline double aggregation_noise(const CrowdLabelSet& labels, const std::vector<int>& true_labels) {
    const PerformanceEstimate equal = PerformanceEstimate::equal(0.8);
    std::int64_t total = 0;
    std::int64_t wrong = 0;
    for (int i = 0; i < labels.num_instances(); ++i) {
        if (!labels.has_labels(i)) {
            continue;
        }
        ++total;
        const ClassLabel aggregated =
            aggregate_label(labels.labels_of(i), equal, labels.num_classes());
        if (aggregated.index() != true_labels[static_cast<std::size_t>(i)]) {
            ++wrong;
        }
    }
    if (total == 0) {
        throw EmptyEvidenceError("aggregation_noise: no labeled instances");
    }
    return static_cast<double>(wrong) / static_cast<double>(total);
}

}  // namespace crowdval

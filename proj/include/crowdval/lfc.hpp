#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "crowdval/core.hpp"
#include "crowdval/hpo.hpp"
#include "crowdval/posterior.hpp"

namespace crowdval {

// ---------------------------------------------------------------------------
// Confusion matrices and inference linkage
// ---------------------------------------------------------------------------

/// Row-stochastic C x C matrix: row c is the distribution of assigned labels
/// given true class c.
struct ConfusionMatrix {
    int num_classes = 0;
    std::vector<double> entries;  // row-major

    ConfusionMatrix() = default;

    ConfusionMatrix(int C, std::vector<double> values)
        : num_classes(C), entries(std::move(values)) {
        validate();
    }

    static ConfusionMatrix identity(int C) {
        std::vector<double> e(static_cast<std::size_t>(C) * static_cast<std::size_t>(C), 0.0);
        for (int c = 0; c < C; ++c) {
            e[static_cast<std::size_t>(c) * static_cast<std::size_t>(C) +
              static_cast<std::size_t>(c)] = 1.0;
        }
        return ConfusionMatrix(C, std::move(e));
    }

    /// `diag` on the diagonal, the remainder spread evenly off-diagonal.
    static ConfusionMatrix with_diagonal(int C, double diag) {
        if (!(diag >= 0.0 && diag <= 1.0)) {
            throw InvalidInputError("ConfusionMatrix::with_diagonal: diag outside [0, 1]");
        }
        std::vector<double> e(static_cast<std::size_t>(C) * static_cast<std::size_t>(C),
                              (1.0 - diag) / (C - 1));
        for (int c = 0; c < C; ++c) {
            e[static_cast<std::size_t>(c) * static_cast<std::size_t>(C) +
              static_cast<std::size_t>(c)] = diag;
        }
        return ConfusionMatrix(C, std::move(e));
    }

    double at(int row, int col) const {
        return entries[static_cast<std::size_t>(row) * static_cast<std::size_t>(num_classes) +
                       static_cast<std::size_t>(col)];
    }

    ProbabilityVector row(int r) const {
        std::vector<double> out(entries.begin() + static_cast<std::ptrdiff_t>(r) * num_classes,
                                entries.begin() + static_cast<std::ptrdiff_t>(r + 1) * num_classes);
        return ProbabilityVector(std::move(out));
    }

    void validate() const {
        if (num_classes < 2 ||
            entries.size() !=
                static_cast<std::size_t>(num_classes) * static_cast<std::size_t>(num_classes)) {
            throw InvalidInputError("ConfusionMatrix: bad dimensions");
        }
        for (int r = 0; r < num_classes; ++r) {
            double sum = 0.0;
            for (int c = 0; c < num_classes; ++c) {
                const double v = at(r, c);
                if (!(v >= 0.0)) {
                    throw InvalidInputError("ConfusionMatrix: negative entry");
                }
                sum += v;
            }
            if (std::abs(sum - 1.0) > kSimplexTolerance) {
                throw InvalidInputError("ConfusionMatrix: row " + std::to_string(r) +
                                        " does not sum to 1");
            }
        }
    }
};

/// Crowd-label distribution implied by a confusion matrix: g = Q^T f.
inline ProbabilityVector link_crowd_probs(const ConfusionMatrix& q, const ProbabilityVector& f) {
    if (q.num_classes != f.size()) {
        throw InvalidInputError("link_crowd_probs: dimension mismatch");
    }
    const int C = q.num_classes;
    std::vector<double> g(static_cast<std::size_t>(C), 0.0);
    for (int c = 0; c < C; ++c) {
        const double fc = f[c];
        for (int k = 0; k < C; ++k) {
            g[static_cast<std::size_t>(k)] += fc * q.at(c, k);
        }
    }
    return ProbabilityVector(std::move(g));
}

/// Labeling accuracy implied by a confusion matrix: sum_c f_c Q_cc.
inline double link_accuracy(const ConfusionMatrix& q, const ProbabilityVector& f) {
    if (q.num_classes != f.size()) {
        throw InvalidInputError("link_accuracy: dimension mismatch");
    }
    double h = 0.0;
    for (int c = 0; c < q.num_classes; ++c) {
        h += f[c] * q.at(c, c);
    }
    return h;
}

/// Agreement between predicted true-label and crowd-label distributions,
/// the accuracy proxy for models without explicit confusion matrices.
inline double marginal_alignment(const ProbabilityVector& f, const ProbabilityVector& g) {
    if (f.size() != g.size()) {
        throw InvalidInputError("marginal_alignment: dimension mismatch");
    }
    double dot = 0.0;
    for (int c = 0; c < f.size(); ++c) {
        dot += f[c] * g[c];
    }
    return dot;
}

/// Renormalizes the C entries belonging to one worker out of a C*M union
/// output (workers indexed from 0).
inline ProbabilityVector normalize_union_slice(const std::vector<double>& union_probs, int worker,
                                               int num_classes) {
    const std::size_t begin = static_cast<std::size_t>(worker) * static_cast<std::size_t>(num_classes);
    if (num_classes < 2 || worker < 0 || begin + static_cast<std::size_t>(num_classes) > union_probs.size()) {
        throw InvalidInputError("normalize_union_slice: slice out of range");
    }
    std::vector<double> slice(union_probs.begin() + static_cast<std::ptrdiff_t>(begin),
                              union_probs.begin() +
                                  static_cast<std::ptrdiff_t>(begin + static_cast<std::size_t>(num_classes)));
    double sum = 0.0;
    for (double v : slice) {
        if (!(v >= 0.0)) {
            throw InvalidInputError("normalize_union_slice: negative entry");
        }
        sum += v;
    }
    if (sum <= 0.0) {
        throw DegenerateSliceError("normalize_union_slice: zero-sum slice for worker " +
                                   std::to_string(worker));
    }
    for (double& v : slice) {
        v /= sum;
    }
    return ProbabilityVector(std::move(slice));
}

// ---------------------------------------------------------------------------
// Dawid-Skene EM
// ---------------------------------------------------------------------------

struct DawidSkeneOptions {
    int max_iters = 100;
    double tol = 1e-7;
    // Laplace smoothing on confusion rows and the class prior keeps sparse
    // worker/class counts away from zero-probability lock-in.
    double smoothing = 1.0;
    bool record_history = false;
};

struct DawidSkeneIteration {
    std::vector<std::vector<double>> posteriors;
    std::vector<ConfusionMatrix> confusions;
    std::vector<double> class_prior;
    double objective = 0.0;  // smoothed log posterior, non-decreasing by EM
};

struct DawidSkeneResult {
    std::vector<ProbabilityVector> posteriors;   // one per instance
    std::vector<ConfusionMatrix> confusions;     // one per worker
    ProbabilityVector class_prior{std::vector<double>{0.5, 0.5}};
    int iterations = 0;
    std::vector<double> objectives;              // one per iteration
    std::vector<DawidSkeneIteration> history;    // filled when requested
};

/// EM over per-instance label lists (each non-empty). Initialization is the
/// soft majority-vote count; M-step rows get add-`smoothing` counts. The
/// tracked objective is the smoothed log posterior, which EM never
/// decreases; the raw likelihood alone is not guaranteed monotone once
/// smoothing pulls the M-step off the maximum-likelihood estimate.
inline DawidSkeneResult dawid_skene(const std::vector<std::vector<CrowdLabel>>& instances,
                                    int num_workers, int num_classes,
                                    const DawidSkeneOptions& options = {}) {
    if (num_classes < 2 || num_workers < 1) {
        throw InvalidInputError("dawid_skene: bad dimensions");
    }
    const std::size_t n = instances.size();
    if (n == 0) {
        throw InvalidInputError("dawid_skene: no instances");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (instances[i].empty()) {
            throw EmptyEvidenceError("dawid_skene: instance " + std::to_string(i) +
                                     " has no labels");
        }
    }
    const std::size_t C = static_cast<std::size_t>(num_classes);
    const std::size_t M = static_cast<std::size_t>(num_workers);
    const double alpha = options.smoothing;

    // Soft majority-vote initialization.
    std::vector<std::vector<double>> post(n, std::vector<double>(C, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& label : instances[i]) {
            post[i][static_cast<std::size_t>(label.label)] += 1.0;
        }
        const double total = static_cast<double>(instances[i].size());
        for (double& v : post[i]) {
            v /= total;
        }
    }

    std::vector<double> prior(C, 1.0 / num_classes);
    std::vector<std::vector<double>> conf(M, std::vector<double>(C * C, 1.0 / num_classes));
    DawidSkeneResult result;

    for (int iter = 0; iter < options.max_iters; ++iter) {
        // M-step: smoothed counts for the prior and per-worker confusions.
        double prior_norm = static_cast<double>(n) + alpha * num_classes;
        for (std::size_t c = 0; c < C; ++c) {
            double count = alpha;
            for (std::size_t i = 0; i < n; ++i) {
                count += post[i][c];
            }
            prior[c] = count / prior_norm;
        }
        for (std::size_t m = 0; m < M; ++m) {
            std::fill(conf[m].begin(), conf[m].end(), alpha);
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (const auto& label : instances[i]) {
                auto& matrix = conf[static_cast<std::size_t>(label.worker)];
                for (std::size_t c = 0; c < C; ++c) {
                    matrix[c * C + static_cast<std::size_t>(label.label)] += post[i][c];
                }
            }
        }
        for (std::size_t m = 0; m < M; ++m) {
            for (std::size_t c = 0; c < C; ++c) {
                double row_sum = 0.0;
                for (std::size_t k = 0; k < C; ++k) {
                    row_sum += conf[m][c * C + k];
                }
                for (std::size_t k = 0; k < C; ++k) {
                    conf[m][c * C + k] /= row_sum;
                }
            }
        }

        // E-step in log space, plus the smoothed objective.
        double objective = 0.0;
        double max_change = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> logp(C);
            for (std::size_t c = 0; c < C; ++c) {
                double lp = std::log(prior[c]);
                for (const auto& label : instances[i]) {
                    lp += std::log(conf[static_cast<std::size_t>(label.worker)]
                                       [c * C + static_cast<std::size_t>(label.label)]);
                }
                logp[c] = lp;
            }
            double max_log = logp[0];
            for (double v : logp) {
                max_log = std::max(max_log, v);
            }
            double sum = 0.0;
            for (std::size_t c = 0; c < C; ++c) {
                logp[c] = std::exp(logp[c] - max_log);
                sum += logp[c];
            }
            objective += max_log + std::log(sum);
            for (std::size_t c = 0; c < C; ++c) {
                const double updated = logp[c] / sum;
                max_change = std::max(max_change, std::abs(updated - post[i][c]));
                post[i][c] = updated;
            }
        }
        for (std::size_t c = 0; c < C; ++c) {
            objective += alpha * std::log(prior[c]);
        }
        for (std::size_t m = 0; m < M; ++m) {
            for (double v : conf[m]) {
                objective += alpha * std::log(v);
            }
        }
        result.objectives.push_back(objective);
        result.iterations = iter + 1;
        if (options.record_history) {
            DawidSkeneIteration snapshot;
            snapshot.posteriors = post;
            snapshot.class_prior = prior;
            snapshot.objective = objective;
            for (std::size_t m = 0; m < M; ++m) {
                snapshot.confusions.emplace_back(num_classes, conf[m]);
            }
            result.history.push_back(std::move(snapshot));
        }
        if (max_change < options.tol) {
            break;
        }
    }

    result.posteriors.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        result.posteriors.emplace_back(ProbabilityVector::normalized(post[i]));
    }
    result.confusions.reserve(M);
    for (std::size_t m = 0; m < M; ++m) {
        result.confusions.emplace_back(num_classes, conf[m]);
    }
    result.class_prior = ProbabilityVector::normalized(prior);
    return result;
}

/// Convenience overload over a full label set; every instance must carry at
/// least one label.
inline DawidSkeneResult dawid_skene(const CrowdLabelSet& labels,
                                    const DawidSkeneOptions& options = {}) {
    std::vector<std::vector<CrowdLabel>> instances;
    instances.reserve(static_cast<std::size_t>(labels.num_instances()));
    for (int i = 0; i < labels.num_instances(); ++i) {
        instances.push_back(labels.labels_of(i));
    }
    return dawid_skene(instances, labels.num_workers(), labels.num_classes(), options);
}

// ---------------------------------------------------------------------------
// Linear classifier
// ---------------------------------------------------------------------------

/// Multinomial logistic model with bias, trained by seeded mini-batch
/// gradient descent. The dropout hyperparameter is accepted for interface
/// parity but has no effect on a linear model.
struct TrainConfig {
    double learning_rate = 1e-3;
    int epochs = 30;
    int batch_size = 32;
    double weight_decay = 1e-6;
    double dropout = 0.0;  // no-op
    std::uint64_t seed = 0;

    std::string describe() const {
        return "learning_rate=" + std::to_string(learning_rate) +
               ", epochs=" + std::to_string(epochs) + ", batch_size=" +
               std::to_string(batch_size) + ", weight_decay=" + std::to_string(weight_decay);
    }
};

class LinearClassifier {
public:
    LinearClassifier() = default;

    LinearClassifier(int num_classes, int num_features)
        : num_classes_(num_classes),
          num_features_(num_features),
          weights_(static_cast<std::size_t>(num_classes) *
                       static_cast<std::size_t>(num_features + 1),
                   0.0) {}

    int num_classes() const { return num_classes_; }
    int num_features() const { return num_features_; }
    std::vector<double>& weights() { return weights_; }
    const std::vector<double>& weights() const { return weights_; }

    void logits(std::span<const double> x, std::vector<double>& out) const {
        out.assign(static_cast<std::size_t>(num_classes_), 0.0);
        const std::size_t stride = static_cast<std::size_t>(num_features_ + 1);
        for (int c = 0; c < num_classes_; ++c) {
            const double* row = weights_.data() + static_cast<std::size_t>(c) * stride;
            double u = row[static_cast<std::size_t>(num_features_)];  // bias
            for (int d = 0; d < num_features_; ++d) {
                u += row[static_cast<std::size_t>(d)] * x[static_cast<std::size_t>(d)];
            }
            out[static_cast<std::size_t>(c)] = u;
        }
    }

    ProbabilityVector predict(std::span<const double> x) const {
        std::vector<double> u;
        logits(x, u);
        softmax_inplace(u);
        return ProbabilityVector(std::move(u));
    }

    static void softmax_inplace(std::vector<double>& u) {
        double max_u = u[0];
        for (double v : u) {
            max_u = std::max(max_u, v);
        }
        double sum = 0.0;
        for (double& v : u) {
            v = std::exp(v - max_u);
            sum += v;
        }
        for (double& v : u) {
            v /= sum;
        }
    }

private:
    int num_classes_ = 0;
    int num_features_ = 0;
    std::vector<double> weights_;
};

namespace detail {

inline void check_finite(const std::vector<double>& values, const TrainConfig& config) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw DivergenceError("training diverged (non-finite parameters) with " +
                                  config.describe());
        }
    }
}

inline std::vector<int> epoch_order(std::size_t n, Rng& rng) {
    std::vector<int> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = static_cast<int>(i);
    }
    rng.shuffle(order);
    return order;
}

}  // namespace detail

/// Fits a multinomial logistic classifier on hard labels.
inline LinearClassifier fit_classifier(const Dataset& data, const std::vector<int>& indices,
                                       const std::vector<int>& labels, int num_classes,
                                       const TrainConfig& config) {
    if (indices.size() != labels.size() || indices.empty()) {
        throw InvalidInputError("fit_classifier: indices and labels must align and be non-empty");
    }
    const int D = data.num_features;
    LinearClassifier model(num_classes, D);
    Rng rng(mix64(config.seed, 0x66697463ULL));
    for (double& w : model.weights()) {
        w = 0.01 * rng.next_gaussian();
    }

    const std::size_t stride = static_cast<std::size_t>(D + 1);
    std::vector<double> grad(model.weights().size());
    std::vector<double> probs;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const std::vector<int> order = detail::epoch_order(indices.size(), rng);
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t b = start; b < end; ++b) {
                const int idx = indices[static_cast<std::size_t>(order[b])];
                const int y = labels[static_cast<std::size_t>(order[b])];
                const auto x = data.row(idx);
                model.logits(x, probs);
                LinearClassifier::softmax_inplace(probs);
                for (int c = 0; c < num_classes; ++c) {
                    const double delta =
                        probs[static_cast<std::size_t>(c)] - (c == y ? 1.0 : 0.0);
                    double* row = grad.data() + static_cast<std::size_t>(c) * stride;
                    for (int d = 0; d < D; ++d) {
                        row[static_cast<std::size_t>(d)] += delta * x[static_cast<std::size_t>(d)];
                    }
                    row[static_cast<std::size_t>(D)] += delta;
                }
            }
            const double scale = config.learning_rate / static_cast<double>(end - start);
            for (std::size_t i = 0; i < grad.size(); ++i) {
                model.weights()[i] -=
                    scale * grad[i] + config.learning_rate * config.weight_decay * model.weights()[i];
            }
        }
        detail::check_finite(model.weights(), config);
    }
    return model;
}

// ---------------------------------------------------------------------------
// One-stage learner with per-worker confusion matrices
// ---------------------------------------------------------------------------

/// Joint parameters: classifier weights followed by per-worker confusion
/// logits (rows become confusion rows via softmax). Kept as one flat vector
/// so the loss gradient can be checked against finite differences.
struct JointConfusionModel {
    int num_classes = 0;
    int num_features = 0;
    int num_workers = 0;
    std::vector<double> params;

    JointConfusionModel() = default;

    JointConfusionModel(int C, int D, int M, double diag_logit_bonus)
        : num_classes(C), num_features(D), num_workers(M) {
        const std::size_t w_size =
            static_cast<std::size_t>(C) * static_cast<std::size_t>(D + 1);
        const std::size_t b_size = static_cast<std::size_t>(M) * static_cast<std::size_t>(C) *
                                   static_cast<std::size_t>(C);
        params.assign(w_size + b_size, 0.0);
        // Near-diagonal start: workers are assumed better than chance until
        // the data says otherwise.
        for (int m = 0; m < M; ++m) {
            for (int c = 0; c < C; ++c) {
                params[w_size + confusion_offset(m, c, c)] = diag_logit_bonus;
            }
        }
    }

    std::size_t classifier_size() const {
        return static_cast<std::size_t>(num_classes) * static_cast<std::size_t>(num_features + 1);
    }

    std::size_t confusion_offset(int worker, int row, int col) const {
        return (static_cast<std::size_t>(worker) * static_cast<std::size_t>(num_classes) +
                static_cast<std::size_t>(row)) *
                   static_cast<std::size_t>(num_classes) +
               static_cast<std::size_t>(col);
    }

    void class_logits(std::span<const double> x, std::vector<double>& out) const {
        out.assign(static_cast<std::size_t>(num_classes), 0.0);
        const std::size_t stride = static_cast<std::size_t>(num_features + 1);
        for (int c = 0; c < num_classes; ++c) {
            const double* row = params.data() + static_cast<std::size_t>(c) * stride;
            double u = row[static_cast<std::size_t>(num_features)];
            for (int d = 0; d < num_features; ++d) {
                u += row[static_cast<std::size_t>(d)] * x[static_cast<std::size_t>(d)];
            }
            out[static_cast<std::size_t>(c)] = u;
        }
    }

    ProbabilityVector predict_f(std::span<const double> x) const {
        std::vector<double> u;
        class_logits(x, u);
        LinearClassifier::softmax_inplace(u);
        return ProbabilityVector(std::move(u));
    }

    ConfusionMatrix worker_confusion(int worker) const {
        const std::size_t base = classifier_size();
        std::vector<double> rows(static_cast<std::size_t>(num_classes) *
                                 static_cast<std::size_t>(num_classes));
        for (int c = 0; c < num_classes; ++c) {
            std::vector<double> row(static_cast<std::size_t>(num_classes));
            for (int k = 0; k < num_classes; ++k) {
                row[static_cast<std::size_t>(k)] = params[base + confusion_offset(worker, c, k)];
            }
            LinearClassifier::softmax_inplace(row);
            for (int k = 0; k < num_classes; ++k) {
                rows[static_cast<std::size_t>(c) * static_cast<std::size_t>(num_classes) +
                     static_cast<std::size_t>(k)] = row[static_cast<std::size_t>(k)];
            }
        }
        return ConfusionMatrix(num_classes, std::move(rows));
    }
};

/// Mean negative log-likelihood of the observed labels under g = Q^T f plus
/// an L2 penalty on the classifier weights. Fills `grad` (same layout as
/// params) when non-null. The per-term factor 1/T uses T = number of label
/// terms in `batch`.
inline double joint_confusion_loss(const JointConfusionModel& model, const Dataset& data,
                                   const std::vector<int>& batch, double weight_decay,
                                   std::vector<double>* grad) {
    const int C = model.num_classes;
    const std::size_t w_size = model.classifier_size();
    if (grad != nullptr) {
        grad->assign(model.params.size(), 0.0);
    }
    std::size_t num_terms = 0;
    for (int idx : batch) {
        num_terms += data.crowd_labels.labels_of(idx).size();
    }
    if (num_terms == 0) {
        throw InvalidInputError("joint_confusion_loss: batch has no observed labels");
    }
    const double inv_terms = 1.0 / static_cast<double>(num_terms);

    double loss = 0.0;
    std::vector<double> f;
    std::vector<double> q(static_cast<std::size_t>(C) * static_cast<std::size_t>(C));
    std::vector<double> df(static_cast<std::size_t>(C));
    for (int idx : batch) {
        const auto& labels = data.crowd_labels.labels_of(idx);
        if (labels.empty()) {
            continue;
        }
        const auto x = data.row(idx);
        model.class_logits(x, f);
        LinearClassifier::softmax_inplace(f);
        std::fill(df.begin(), df.end(), 0.0);

        for (const auto& label : labels) {
            // Row-wise softmax of this worker's confusion logits.
            for (int c = 0; c < C; ++c) {
                double max_b = -1e300;
                for (int k = 0; k < C; ++k) {
                    max_b = std::max(max_b,
                                     model.params[w_size + model.confusion_offset(label.worker, c, k)]);
                }
                double sum = 0.0;
                for (int k = 0; k < C; ++k) {
                    const double e = std::exp(
                        model.params[w_size + model.confusion_offset(label.worker, c, k)] - max_b);
                    q[static_cast<std::size_t>(c) * static_cast<std::size_t>(C) +
                      static_cast<std::size_t>(k)] = e;
                    sum += e;
                }
                for (int k = 0; k < C; ++k) {
                    q[static_cast<std::size_t>(c) * static_cast<std::size_t>(C) +
                      static_cast<std::size_t>(k)] /= sum;
                }
            }
            const int z = label.label;
            double g_z = 0.0;
            for (int c = 0; c < C; ++c) {
                g_z += f[static_cast<std::size_t>(c)] *
                       q[static_cast<std::size_t>(c) * static_cast<std::size_t>(C) +
                         static_cast<std::size_t>(z)];
            }
            g_z = std::max(g_z, 1e-300);
            loss -= inv_terms * std::log(g_z);

            if (grad != nullptr) {
                const double inv_gz = inv_terms / g_z;
                for (int c = 0; c < C; ++c) {
                    const double q_cz = q[static_cast<std::size_t>(c) * static_cast<std::size_t>(C) +
                                          static_cast<std::size_t>(z)];
                    // d(-ln g_z)/d f_c accumulated across this instance's labels.
                    df[static_cast<std::size_t>(c)] -= inv_gz * q_cz;
                    // d(-ln g_z)/d B[c][k] = -(f_c/g_z) q_ck (delta_kz - q_cz)
                    const double coeff = -inv_gz * f[static_cast<std::size_t>(c)];
                    for (int k = 0; k < C; ++k) {
                        const double q_ck =
                            q[static_cast<std::size_t>(c) * static_cast<std::size_t>(C) +
                              static_cast<std::size_t>(k)];
                        (*grad)[w_size + model.confusion_offset(label.worker, c, k)] +=
                            coeff * q_ck * ((k == z ? 1.0 : 0.0) - q_cz);
                    }
                }
            }
        }

        if (grad != nullptr) {
            // Backprop the accumulated df through the softmax into W.
            double dot = 0.0;
            for (int c = 0; c < C; ++c) {
                dot += df[static_cast<std::size_t>(c)] * f[static_cast<std::size_t>(c)];
            }
            const std::size_t stride = static_cast<std::size_t>(model.num_features + 1);
            for (int c = 0; c < C; ++c) {
                const double du = f[static_cast<std::size_t>(c)] *
                                  (df[static_cast<std::size_t>(c)] - dot);
                double* row = grad->data() + static_cast<std::size_t>(c) * stride;
                for (int d = 0; d < model.num_features; ++d) {
                    row[static_cast<std::size_t>(d)] += du * x[static_cast<std::size_t>(d)];
                }
                row[static_cast<std::size_t>(model.num_features)] += du;
            }
        }
    }

    for (std::size_t i = 0; i < w_size; ++i) {
        loss += 0.5 * weight_decay * model.params[i] * model.params[i];
        if (grad != nullptr) {
            (*grad)[i] += weight_decay * model.params[i];
        }
    }
    return loss;
}

// ---------------------------------------------------------------------------
// Learner interface
// ---------------------------------------------------------------------------

enum class LearnerKind { MvTwoStage, DawidSkeneTwoStage, ConfusionOneStage };

inline std::string learner_name(LearnerKind kind) {
    switch (kind) {
        case LearnerKind::MvTwoStage:
            return "mv_two_stage";
        case LearnerKind::DawidSkeneTwoStage:
            return "dawid_skene_two_stage";
        case LearnerKind::ConfusionOneStage:
            return "confusion_one_stage";
    }
    return "?";
}

inline LearnerKind learner_from_name(const std::string& name) {
    for (LearnerKind kind : {LearnerKind::MvTwoStage, LearnerKind::DawidSkeneTwoStage,
                             LearnerKind::ConfusionOneStage}) {
        if (learner_name(kind) == name) {
            return kind;
        }
    }
    throw InvalidInputError("unknown learner: " + name);
}

struct LearnerSpec {
    LearnerKind kind = LearnerKind::MvTwoStage;
    HpcCandidate hyperparameters;
};

/// Shared hyperparameter space of the desk-scale learners. Optimizer and
/// scheduler are declared but fixed; dropout is a documented no-op on
/// linear models. The default is a deliberately quick-start preset (the
/// smallest epoch budget at a conservative rate): tuned configurations are
/// supposed to beat it, which is exactly what the selection criteria probe.
inline SearchSpace learner_search_space(LearnerKind /*kind*/) {
    SearchSpace space;
    space.params = {
        {"epochs", ParamSpec::UniformCategorical{{5.0, 30.0, 50.0}}},
        {"batch_size", ParamSpec::UniformCategorical{{16.0, 32.0, 64.0}}},
        {"learning_rate", ParamSpec::LogUniformReal{1e-4, 1e-1}},
        {"weight_decay", ParamSpec::LogUniformReal{1e-6, 1e-3}},
        {"dropout", ParamSpec::UniformReal{0.0, 0.5}},
        {"optimizer", ParamSpec::Fixed{std::string("gd")}},
        {"scheduler", ParamSpec::Fixed{std::string("constant")}},
    };
    space.default_candidate.values = {
        {"epochs", 5.0},         {"batch_size", 32.0},
        {"learning_rate", 1e-3}, {"weight_decay", 1e-6},
        {"dropout", 0.0},        {"optimizer", std::string("gd")},
        {"scheduler", std::string("constant")},
    };
    space.validate();
    return space;
}

inline TrainConfig train_config_from(const HpcCandidate& hpc, std::uint64_t seed) {
    TrainConfig config;
    config.learning_rate = hpc.number("learning_rate");
    config.epochs = static_cast<int>(hpc.number("epochs"));
    config.batch_size = static_cast<int>(hpc.number("batch_size"));
    config.weight_decay = hpc.number("weight_decay");
    config.dropout = hpc.number("dropout");
    config.seed = seed;
    if (config.epochs < 1 || config.batch_size < 1 || !(config.learning_rate > 0.0)) {
        throw InvalidInputError("train_config_from: invalid hyperparameters: " + hpc.describe());
    }
    return config;
}

/// A trained model exposing the three inference interfaces. Two-stage
/// majority voting has no crowdworker model, so g and h are unavailable.
class TrainedModel {
public:
    TrainedModel(LearnerKind kind, LinearClassifier classifier,
                 std::vector<ConfusionMatrix> worker_confusions)
        : kind_(kind),
          classifier_(std::move(classifier)),
          worker_confusions_(std::move(worker_confusions)) {}

    LearnerKind kind() const { return kind_; }

    ProbabilityVector f(std::span<const double> x) const { return classifier_.predict(x); }

    bool has_crowd_model() const { return !worker_confusions_.empty(); }
    bool has_performance_model() const { return !worker_confusions_.empty(); }

    ProbabilityVector g(std::span<const double> x, int worker) const {
        return link_crowd_probs(confusion_of(worker), f(x));
    }

    double h(std::span<const double> x, int worker) const {
        return link_accuracy(confusion_of(worker), f(x));
    }

    const LinearClassifier& classifier() const { return classifier_; }
    const std::vector<ConfusionMatrix>& worker_confusions() const { return worker_confusions_; }

private:
    const ConfusionMatrix& confusion_of(int worker) const {
        if (worker_confusions_.empty()) {
            throw MissingSideInformationError("TrainedModel: no crowdworker model");
        }
        return worker_confusions_.at(static_cast<std::size_t>(worker));
    }

    LearnerKind kind_;
    LinearClassifier classifier_;
    std::vector<ConfusionMatrix> worker_confusions_;
};

/// Diagonal logit head start for the one-stage confusion matrices.
constexpr double kConfusionInitBonus = 2.0;

/// Trains one learner on the given fold; deterministic for a fixed seed.
inline TrainedModel train(const LearnerSpec& spec, const Dataset& data,
                          const std::vector<int>& train_indices, std::uint64_t seed) {
    if (train_indices.empty()) {
        throw DegenerateFoldError("train: empty training fold");
    }
    const int C = data.crowd_labels.num_classes();
    const int M = data.crowd_labels.num_workers();
    const TrainConfig config = train_config_from(spec.hyperparameters, seed);

    // Instances without observed labels carry no training signal.
    std::vector<int> labeled;
    labeled.reserve(train_indices.size());
    for (int idx : train_indices) {
        if (data.crowd_labels.has_labels(idx)) {
            labeled.push_back(idx);
        }
    }
    if (labeled.empty()) {
        throw DegenerateFoldError("train: no labeled instances in training fold");
    }

    if (spec.kind == LearnerKind::MvTwoStage) {
        const PerformanceEstimate equal = PerformanceEstimate::equal(0.8);
        std::vector<int> targets;
        targets.reserve(labeled.size());
        for (int idx : labeled) {
            targets.push_back(
                aggregate_label(data.crowd_labels.labels_of(idx), equal, C).index());
        }
        return TrainedModel(spec.kind, fit_classifier(data, labeled, targets, C, config), {});
    }

    if (spec.kind == LearnerKind::DawidSkeneTwoStage) {
        std::vector<std::vector<CrowdLabel>> instances;
        instances.reserve(labeled.size());
        for (int idx : labeled) {
            instances.push_back(data.crowd_labels.labels_of(idx));
        }
        const DawidSkeneResult ds = dawid_skene(instances, M, C);
        std::vector<int> targets;
        targets.reserve(labeled.size());
        for (std::size_t i = 0; i < labeled.size(); ++i) {
            targets.push_back(ds.posteriors[i].argmax());
        }
        return TrainedModel(spec.kind, fit_classifier(data, labeled, targets, C, config),
                            ds.confusions);
    }

    // ConfusionOneStage: joint gradient descent on classifier weights and
    // per-worker confusion logits through g = Q^T f.
    JointConfusionModel model(C, data.num_features, M, kConfusionInitBonus);
    Rng rng(mix64(config.seed, 0x6a6f696eULL));
    for (std::size_t i = 0; i < model.classifier_size(); ++i) {
        model.params[i] = 0.01 * rng.next_gaussian();
    }

    std::vector<double> grad;
    std::vector<int> batch;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const std::vector<int> order = detail::epoch_order(labeled.size(), rng);
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            batch.clear();
            for (std::size_t b = start; b < end; ++b) {
                batch.push_back(labeled[static_cast<std::size_t>(order[b])]);
            }
            const double loss =
                joint_confusion_loss(model, data, batch, config.weight_decay, &grad);
            if (!std::isfinite(loss)) {
                throw DivergenceError("training diverged (non-finite loss) with " +
                                      config.describe());
            }
            for (std::size_t i = 0; i < model.params.size(); ++i) {
                model.params[i] -= config.learning_rate * grad[i];
            }
        }
        detail::check_finite(model.params, config);
    }

    LinearClassifier classifier(C, data.num_features);
    std::copy(model.params.begin(),
              model.params.begin() + static_cast<std::ptrdiff_t>(model.classifier_size()),
              classifier.weights().begin());
    std::vector<ConfusionMatrix> confusions;
    confusions.reserve(static_cast<std::size_t>(M));
    for (int m = 0; m < M; ++m) {
        confusions.push_back(model.worker_confusion(m));
    }
    return TrainedModel(spec.kind, std::move(classifier), std::move(confusions));
}

}  // namespace crowdval

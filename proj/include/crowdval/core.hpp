#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace crowdval {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInputError : public Error {
public:
    using Error::Error;
};

/// An instance has no observed labels; callers decide the exclusion policy.
class EmptyEvidenceError : public Error {
public:
    using Error::Error;
};

class MissingEstimateError : public Error {
public:
    using Error::Error;
};

class MissingSideInformationError : public Error {
public:
    using Error::Error;
};

/// A fold whose weight normalizer is zero cannot contribute its 1/K share.
class DegenerateFoldError : public Error {
public:
    using Error::Error;
};

class UnsupportedDimensionError : public Error {
public:
    using Error::Error;
};

class DegenerateSliceError : public Error {
public:
    using Error::Error;
};

class UndefinedCorrelationError : public Error {
public:
    using Error::Error;
};

class DivergenceError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Basic numeric helpers
// ---------------------------------------------------------------------------

/// Smallest index attaining the maximum. Ties always break to the lowest
/// index so that every argmax in the library is deterministic.
inline int argmax_tiebreak(std::span<const double> values) {
    if (values.empty()) {
        throw InvalidInputError("argmax_tiebreak: empty input");
    }
    int best = 0;
    for (int i = 1; i < static_cast<int>(values.size()); ++i) {
        if (values[i] > values[best]) {
            best = i;
        }
    }
    return best;
}

inline int argmax_tiebreak(const std::vector<double>& values) {
    return argmax_tiebreak(std::span<const double>(values));
}

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

constexpr double kSimplexTolerance = 1e-9;

/// A point on the C-simplex. Entries are validated on construction;
/// use normalized() when the caller wants explicit rescaling first.
class ProbabilityVector {
public:
    ProbabilityVector() = default;

    explicit ProbabilityVector(std::vector<double> probs) : probs_(std::move(probs)) {
        validate();
    }

    /// Rescales a non-negative vector to sum 1, then validates.
    static ProbabilityVector normalized(std::vector<double> values) {
        double sum = 0.0;
        for (double v : values) {
            if (!(v >= 0.0)) {
                throw InvalidInputError("ProbabilityVector: negative or NaN entry");
            }
            sum += v;
        }
        if (sum <= 0.0) {
            throw InvalidInputError("ProbabilityVector: cannot normalize a zero vector");
        }
        for (double& v : values) {
            v /= sum;
        }
        return ProbabilityVector(std::move(values));
    }

    static ProbabilityVector one_hot(int index, int num_classes) {
        if (num_classes < 2 || index < 0 || index >= num_classes) {
            throw InvalidInputError("ProbabilityVector::one_hot: index out of range");
        }
        std::vector<double> v(static_cast<std::size_t>(num_classes), 0.0);
        v[static_cast<std::size_t>(index)] = 1.0;
        return ProbabilityVector(std::move(v));
    }

    static ProbabilityVector uniform(int num_classes) {
        if (num_classes < 2) {
            throw InvalidInputError("ProbabilityVector::uniform: need at least 2 classes");
        }
        return ProbabilityVector(
            std::vector<double>(static_cast<std::size_t>(num_classes), 1.0 / num_classes));
    }

    int size() const { return static_cast<int>(probs_.size()); }
    double operator[](int i) const { return probs_[static_cast<std::size_t>(i)]; }
    const std::vector<double>& probs() const { return probs_; }
    std::span<const double> span() const { return probs_; }

    int argmax() const { return argmax_tiebreak(probs_); }

    bool operator==(const ProbabilityVector& other) const = default;

private:
    void validate() const {
        if (probs_.size() < 2) {
            throw InvalidInputError("ProbabilityVector: need at least 2 entries");
        }
        double sum = 0.0;
        for (double v : probs_) {
            if (!(v >= 0.0)) {
                throw InvalidInputError("ProbabilityVector: negative or NaN entry");
            }
            sum += v;
        }
        if (std::abs(sum - 1.0) > kSimplexTolerance) {
            throw InvalidInputError("ProbabilityVector: entries sum to " + std::to_string(sum) +
                                    ", expected 1 within 1e-9");
        }
    }

    std::vector<double> probs_;
};

/// One of C classes, carrying C so one-hot views are well defined.
class ClassLabel {
public:
    ClassLabel(int index, int num_classes) : index_(index), num_classes_(num_classes) {
        if (num_classes < 2 || index < 0 || index >= num_classes) {
            throw InvalidInputError("ClassLabel: index " + std::to_string(index) +
                                    " out of range for C=" + std::to_string(num_classes));
        }
    }

    int index() const { return index_; }
    int num_classes() const { return num_classes_; }
    ProbabilityVector one_hot() const { return ProbabilityVector::one_hot(index_, num_classes_); }

    bool operator==(const ClassLabel& other) const = default;

private:
    int index_;
    int num_classes_;
};

/// Zero-one loss under the deterministic argmax: 0 iff both argmax indices
/// agree, 1 otherwise.
inline double zero_one_loss(const ProbabilityVector& y, const ProbabilityVector& y_hat) {
    if (y.size() != y_hat.size()) {
        throw InvalidInputError("zero_one_loss: dimension mismatch");
    }
    return y.argmax() == y_hat.argmax() ? 0.0 : 1.0;
}

inline double zero_one_loss(const ClassLabel& y, const ProbabilityVector& y_hat) {
    if (y.num_classes() != y_hat.size()) {
        throw InvalidInputError("zero_one_loss: dimension mismatch");
    }
    return y.index() == y_hat.argmax() ? 0.0 : 1.0;
}

/// One observed label: crowdworker `worker` assigned class `label` to
/// instance `instance`.
struct CrowdLabel {
    int instance = 0;
    int worker = 0;
    int label = 0;

    bool operator==(const CrowdLabel& other) const = default;
};

inline std::uint64_t pair_key(int instance, int worker) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(instance)) << 32) |
           static_cast<std::uint32_t>(worker);
}

/// Sparse N x M assignment of class labels. Unobserved pairs are simply
/// absent; at most one label per (instance, worker) pair.
class CrowdLabelSet {
public:
    CrowdLabelSet(int num_instances, int num_workers, int num_classes)
        : num_instances_(num_instances),
          num_workers_(num_workers),
          num_classes_(num_classes),
          per_instance_(static_cast<std::size_t>(num_instances)) {
        if (num_instances < 0 || num_workers < 1 || num_classes < 2) {
            throw InvalidInputError("CrowdLabelSet: invalid dimensions");
        }
    }

    void add(int instance, int worker, int label) {
        if (instance < 0 || instance >= num_instances_ || worker < 0 || worker >= num_workers_ ||
            label < 0 || label >= num_classes_) {
            throw InvalidInputError("CrowdLabelSet::add: index out of range");
        }
        auto& labels = per_instance_[static_cast<std::size_t>(instance)];
        for (const auto& existing : labels) {
            if (existing.worker == worker) {
                throw InvalidInputError("CrowdLabelSet::add: duplicate label for instance " +
                                        std::to_string(instance) + ", worker " +
                                        std::to_string(worker));
            }
        }
        labels.push_back(CrowdLabel{instance, worker, label});
        ++num_labels_;
    }

    int num_instances() const { return num_instances_; }
    int num_workers() const { return num_workers_; }
    int num_classes() const { return num_classes_; }
    std::int64_t num_labels() const { return num_labels_; }

    /// Observed labels of one instance, in insertion order.
    const std::vector<CrowdLabel>& labels_of(int instance) const {
        return per_instance_.at(static_cast<std::size_t>(instance));
    }

    bool has_labels(int instance) const { return !labels_of(instance).empty(); }

    /// All labels in (instance, insertion) order.
    std::vector<CrowdLabel> all_labels() const {
        std::vector<CrowdLabel> out;
        out.reserve(static_cast<std::size_t>(num_labels_));
        for (const auto& labels : per_instance_) {
            out.insert(out.end(), labels.begin(), labels.end());
        }
        return out;
    }

private:
    int num_instances_;
    int num_workers_;
    int num_classes_;
    std::int64_t num_labels_ = 0;
    std::vector<std::vector<CrowdLabel>> per_instance_;
};

/// Row-major N x D feature matrix plus crowd labels; true labels are present
/// only for upper-baseline criteria and test sets.
struct Dataset {
    int num_instances = 0;
    int num_features = 0;
    std::vector<double> features;  // row-major, num_instances * num_features
    CrowdLabelSet crowd_labels{0, 1, 2};
    std::optional<std::vector<int>> true_labels;

    std::span<const double> row(int instance) const {
        return std::span<const double>(features)
            .subspan(static_cast<std::size_t>(instance) * static_cast<std::size_t>(num_features),
                     static_cast<std::size_t>(num_features));
    }

    void validate() const {
        if (num_instances < 0 || num_features < 1) {
            throw InvalidInputError("Dataset: invalid dimensions");
        }
        if (features.size() !=
            static_cast<std::size_t>(num_instances) * static_cast<std::size_t>(num_features)) {
            throw InvalidInputError("Dataset: feature matrix size mismatch");
        }
        if (crowd_labels.num_instances() != num_instances) {
            throw InvalidInputError("Dataset: crowd label instance count mismatch");
        }
        if (true_labels && static_cast<int>(true_labels->size()) != num_instances) {
            throw InvalidInputError("Dataset: true label count mismatch");
        }
    }
};

/// K disjoint (train, validation) partitions of [0, n).
struct SplitPlan {
    struct Fold {
        std::vector<int> train_indices;
        std::vector<int> validation_indices;
    };

    std::vector<Fold> folds;

    int num_folds() const { return static_cast<int>(folds.size()); }

    /// Checks union/disjointness of every fold against [0, n).
    void validate(int n) const {
        if (folds.empty()) {
            throw InvalidInputError("SplitPlan: need at least one fold");
        }
        for (const auto& fold : folds) {
            std::vector<char> seen(static_cast<std::size_t>(n), 0);
            auto mark = [&](const std::vector<int>& indices) {
                for (int i : indices) {
                    if (i < 0 || i >= n) {
                        throw InvalidInputError("SplitPlan: index out of range");
                    }
                    if (seen[static_cast<std::size_t>(i)]++) {
                        throw InvalidInputError("SplitPlan: train and validation overlap");
                    }
                }
            };
            mark(fold.train_indices);
            mark(fold.validation_indices);
            for (char s : seen) {
                if (!s) {
                    throw InvalidInputError("SplitPlan: fold does not cover all indices");
                }
            }
        }
    }
};

/// Crowdworker performance assumption feeding the posterior: one shared
/// above-chance accuracy, or a learned per-(instance, worker) table.
class PerformanceEstimate {
public:
    enum class Mode { Equal, Learned };

    static PerformanceEstimate equal(double p) {
        if (!(p > 0.0 && p <= 1.0)) {
            throw InvalidInputError("PerformanceEstimate::equal: p must lie in (0, 1]");
        }
        PerformanceEstimate est;
        est.mode_ = Mode::Equal;
        est.equal_p_ = p;
        return est;
    }

    static PerformanceEstimate learned() {
        PerformanceEstimate est;
        est.mode_ = Mode::Learned;
        return est;
    }

    Mode mode() const { return mode_; }
    double equal_p() const { return equal_p_; }

    void set_learned(int instance, int worker, double accuracy) {
        if (mode_ != Mode::Learned) {
            throw InvalidInputError("PerformanceEstimate: not in learned mode");
        }
        if (!(accuracy >= 0.0 && accuracy <= 1.0)) {
            throw InvalidInputError("PerformanceEstimate: learned accuracy outside [0, 1]");
        }
        table_[pair_key(instance, worker)] = accuracy;
    }

    /// Accuracy estimate for one observed (instance, worker) pair. In Equal
    /// mode the pair is ignored and the common p is returned.
    double accuracy(int instance, int worker) const {
        if (mode_ == Mode::Equal) {
            return equal_p_;
        }
        auto it = table_.find(pair_key(instance, worker));
        if (it == table_.end()) {
            throw MissingEstimateError("PerformanceEstimate: no learned value for instance " +
                                       std::to_string(instance) + ", worker " +
                                       std::to_string(worker));
        }
        return it->second;
    }

private:
    Mode mode_ = Mode::Equal;
    double equal_p_ = 0.8;
    std::unordered_map<std::uint64_t, double> table_;
};

// ---------------------------------------------------------------------------
// Deterministic RNG helpers
// ---------------------------------------------------------------------------
// std::shuffle and the standard distributions are implementation-defined, so
// everything that must reproduce bit-for-bit across platforms goes through
// these instead.

/// splitmix64; also used to derive per-task seeds from (seed, indices).
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) { return mix64(mix64(a) ^ b); }

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix64(mix64(a, b) ^ c);
}

/// xoshiro-free minimal counter RNG: deterministic and fast enough here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(mix64(seed)) {}

    std::uint64_t next_u64() {
        state_ = state_ * 6364136223846793005ULL + 1442695040888963407ULL;
        std::uint64_t x = state_;
        x ^= x >> 33;
        x *= 0xff51afd7ed558ccdULL;
        x ^= x >> 33;
        return x;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound). Modulo bias is irrelevant at the sizes
    /// used here and keeps the draw platform-stable.
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound == 0) {
            throw InvalidInputError("Rng::next_below: bound must be positive");
        }
        return next_u64() % bound;
    }

    /// Standard normal via Box-Muller (platform-stable).
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        double u2 = next_double();
        while (u1 <= 0.0) {
            u1 = next_double();
        }
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace crowdval

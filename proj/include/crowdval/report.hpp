#pragma once

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "crowdval/core.hpp"
#include "crowdval/criteria.hpp"

namespace crowdval {

// ---------------------------------------------------------------------------
// Study-level comparison metrics
// ---------------------------------------------------------------------------

struct LossReduction {
    double absolute_pp = 0.0;   // percentage points
    double relative_pct = 0.0;  // percent of the baseline
};

inline LossReduction loss_reduction(double baseline_loss, double loss) {
    if (!(baseline_loss > 0.0)) {
        throw InvalidInputError("loss_reduction: relative reduction undefined for baseline <= 0");
    }
    return LossReduction{(baseline_loss - loss) * 100.0,
                         (baseline_loss - loss) / baseline_loss * 100.0};
}

namespace detail {

/// Counts inversions under strict ordering while merge-sorting `values`.
inline std::int64_t merge_count_inversions(std::vector<double>& values, std::vector<double>& buffer,
                                           std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) {
        return 0;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    std::int64_t count = merge_count_inversions(values, buffer, lo, mid) +
                         merge_count_inversions(values, buffer, mid, hi);
    std::size_t left = lo;
    std::size_t right = mid;
    std::size_t out = lo;
    while (left < mid && right < hi) {
        if (values[right] < values[left]) {
            count += static_cast<std::int64_t>(mid - left);
            buffer[out++] = values[right++];
        } else {
            buffer[out++] = values[left++];
        }
    }
    while (left < mid) {
        buffer[out++] = values[left++];
    }
    while (right < hi) {
        buffer[out++] = values[right++];
    }
    std::copy(buffer.begin() + static_cast<std::ptrdiff_t>(lo),
              buffer.begin() + static_cast<std::ptrdiff_t>(hi),
              values.begin() + static_cast<std::ptrdiff_t>(lo));
    return count;
}

inline std::int64_t tied_pairs(const std::vector<double>& sorted) {
    std::int64_t ties = 0;
    std::size_t run = 1;
    for (std::size_t i = 1; i <= sorted.size(); ++i) {
        if (i < sorted.size() && sorted[i] == sorted[i - 1]) {
            ++run;
        } else {
            ties += static_cast<std::int64_t>(run) * static_cast<std::int64_t>(run - 1) / 2;
            run = 1;
        }
    }
    return ties;
}

}  // namespace detail

/// Kendall tau-b with tie corrections, computed via sort-based inversion
/// counting: tau = (P - Q) / sqrt((n0 - n1)(n0 - n2)) with n1/n2 the tied
/// pair counts of either argument.
inline double kendall_tau_b(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    if (n != b.size() || n < 2) {
        throw InvalidInputError("kendall_tau_b: need two equally sized arrays of length >= 2");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        if (a[i] != a[j]) {
            return a[i] < a[j];
        }
        return b[i] < b[j];
    });

    const std::int64_t n0 = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
    std::int64_t n1 = 0;  // pairs tied in a
    std::int64_t n3 = 0;  // pairs tied in both
    {
        std::size_t run_a = 1;
        std::size_t run_ab = 1;
        for (std::size_t i = 1; i <= n; ++i) {
            const bool same_a = i < n && a[order[i]] == a[order[i - 1]];
            const bool same_ab = same_a && b[order[i]] == b[order[i - 1]];
            if (same_a) {
                ++run_a;
            } else {
                n1 += static_cast<std::int64_t>(run_a) * static_cast<std::int64_t>(run_a - 1) / 2;
                run_a = 1;
            }
            if (same_ab) {
                ++run_ab;
            } else {
                n3 += static_cast<std::int64_t>(run_ab) * static_cast<std::int64_t>(run_ab - 1) / 2;
                run_ab = 1;
            }
        }
    }

    // Within equal-a runs b is already non-decreasing, so counting strict
    // inversions of the b sequence yields exactly the discordant pairs.
    std::vector<double> b_seq(n);
    for (std::size_t i = 0; i < n; ++i) {
        b_seq[i] = b[order[i]];
    }
    std::vector<double> buffer(n);
    const std::int64_t discordant = detail::merge_count_inversions(b_seq, buffer, 0, n);
    const std::int64_t n2 = detail::tied_pairs(b_seq);  // b_seq is sorted now

    const std::int64_t concordant = n0 - n1 - n2 + n3 - discordant;
    const double denom = std::sqrt(static_cast<double>(n0 - n1)) *
                         std::sqrt(static_cast<double>(n0 - n2));
    if (denom == 0.0) {
        throw UndefinedCorrelationError("kendall_tau_b: one side is entirely tied");
    }
    return static_cast<double>(concordant - discordant) / denom;
}

/// Pairwise strict-win percentages across experiments; ties count for
/// neither side and the diagonal is NaN.
inline std::vector<std::vector<double>> win_rate_matrix(
    const std::vector<std::vector<double>>& losses) {
    const std::size_t entities = losses.size();
    if (entities == 0) {
        throw InvalidInputError("win_rate_matrix: no entities");
    }
    const std::size_t experiments = losses.front().size();
    for (const auto& row : losses) {
        if (row.size() != experiments || experiments == 0) {
            throw InvalidInputError("win_rate_matrix: ragged or empty loss matrix");
        }
    }
    std::vector<std::vector<double>> out(
        entities, std::vector<double>(entities, std::numeric_limits<double>::quiet_NaN()));
    for (std::size_t i = 0; i < entities; ++i) {
        for (std::size_t j = 0; j < entities; ++j) {
            if (i == j) {
                continue;
            }
            std::int64_t wins = 0;
            for (std::size_t e = 0; e < experiments; ++e) {
                if (losses[i][e] < losses[j][e]) {
                    ++wins;
                }
            }
            out[i][j] = 100.0 * static_cast<double>(wins) / static_cast<double>(experiments);
        }
    }
    return out;
}

struct MeanRank {
    double mean = 0.0;
    double standard_error = 0.0;
};

/// Competition ranks per experiment, averaged per entity with the standard
/// error over experiments.
inline std::vector<MeanRank> mean_rank(const std::vector<std::vector<double>>& losses) {
    const std::size_t entities = losses.size();
    if (entities == 0) {
        throw InvalidInputError("mean_rank: no entities");
    }
    const std::size_t experiments = losses.front().size();
    for (const auto& row : losses) {
        if (row.size() != experiments || experiments == 0) {
            throw InvalidInputError("mean_rank: ragged or empty loss matrix");
        }
    }
    std::vector<std::vector<double>> ranks(entities, std::vector<double>(experiments));
    std::vector<double> column(entities);
    for (std::size_t e = 0; e < experiments; ++e) {
        for (std::size_t i = 0; i < entities; ++i) {
            column[i] = losses[i][e];
        }
        const std::vector<int> r = rank_column(column);
        for (std::size_t i = 0; i < entities; ++i) {
            ranks[i][e] = static_cast<double>(r[i]);
        }
    }
    std::vector<MeanRank> out(entities);
    for (std::size_t i = 0; i < entities; ++i) {
        double mean = 0.0;
        for (double r : ranks[i]) {
            mean += r;
        }
        mean /= static_cast<double>(experiments);
        double var = 0.0;
        for (double r : ranks[i]) {
            var += (r - mean) * (r - mean);
        }
        const double se = experiments > 1
                              ? std::sqrt(var / static_cast<double>(experiments - 1)) /
                                    std::sqrt(static_cast<double>(experiments))
                              : 0.0;
        out[i] = MeanRank{mean, se};
    }
    return out;
}

/// Plain mean and standard error over one sample.
inline MeanRank mean_and_se(const std::vector<double>& values) {
    if (values.empty()) {
        throw InvalidInputError("mean_and_se: empty sample");
    }
    double mean = 0.0;
    for (double v : values) {
        mean += v;
    }
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) {
        var += (v - mean) * (v - mean);
    }
    const double se = values.size() > 1
                          ? std::sqrt(var / static_cast<double>(values.size() - 1)) /
                                std::sqrt(static_cast<double>(values.size()))
                          : 0.0;
    return MeanRank{mean, se};
}

}  // namespace crowdval

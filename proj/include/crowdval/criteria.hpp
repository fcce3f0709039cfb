#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "crowdval/risk.hpp"

namespace crowdval {

// ---------------------------------------------------------------------------
// Criterion registry
// ---------------------------------------------------------------------------
// Member criteria combine risk estimation level (aggregation/crowd),
// crowdworker performance assumption (equal/learned), and label weighting
// (uniform/confidence). Crowd-level uniform weighting ignores the
// performance assumption, so its equal and learned variants are one
// criterion (cxu).

enum class CriterionId {
    True,     // validation against true labels (upper baseline)
    Def,      // global default configuration (lower baseline)
    DefData,  // externally supplied per-dataset default configuration
    Aeu,      // aggregation-level, equal, uniform
    Aec,      // aggregation-level, equal, confidence
    Alu,      // aggregation-level, learned, uniform
    Alc,      // aggregation-level, learned, confidence
    Cxu,      // crowd-level, uniform (equal == learned)
    Cec,      // crowd-level, equal, confidence
    Clc,      // crowd-level, learned, confidence
    Ens,      // Borda-count ensemble of the seven members
};

inline constexpr std::array<CriterionId, 11> kAllCriteria = {
    CriterionId::True, CriterionId::Def, CriterionId::DefData, CriterionId::Aeu,
    CriterionId::Aec,  CriterionId::Alu, CriterionId::Alc,     CriterionId::Cxu,
    CriterionId::Cec,  CriterionId::Clc, CriterionId::Ens,
};

inline constexpr std::array<CriterionId, 7> kMemberCriteria = {
    CriterionId::Aeu, CriterionId::Aec, CriterionId::Alu, CriterionId::Alc,
    CriterionId::Cxu, CriterionId::Cec, CriterionId::Clc,
};

inline std::string criterion_name(CriterionId id) {
    switch (id) {
        case CriterionId::True:
            return "true";
        case CriterionId::Def:
            return "def";
        case CriterionId::DefData:
            return "def-data";
        case CriterionId::Aeu:
            return "aeu";
        case CriterionId::Aec:
            return "aec";
        case CriterionId::Alu:
            return "alu";
        case CriterionId::Alc:
            return "alc";
        case CriterionId::Cxu:
            return "cxu";
        case CriterionId::Cec:
            return "cec";
        case CriterionId::Clc:
            return "clc";
        case CriterionId::Ens:
            return "ens";
    }
    return "?";
}

inline CriterionId criterion_from_name(const std::string& name) {
    for (CriterionId id : kAllCriteria) {
        if (criterion_name(id) == name) {
            return id;
        }
    }
    throw InvalidInputError("unknown criterion name: " + name);
}

// ---------------------------------------------------------------------------
// Risk table and rank aggregation
// ---------------------------------------------------------------------------

/// Empirical risk estimates per candidate, one column per computed
/// criterion. Column order follows the CriterionId enum.
struct RiskTable {
    std::vector<HpcCandidate> candidates;
    std::vector<CriterionId> column_ids;
    std::vector<std::vector<double>> columns;  // columns[j].size() == candidates.size()

    bool has_column(CriterionId id) const {
        for (CriterionId c : column_ids) {
            if (c == id) {
                return true;
            }
        }
        return false;
    }

    const std::vector<double>& column(CriterionId id) const {
        for (std::size_t j = 0; j < column_ids.size(); ++j) {
            if (column_ids[j] == id) {
                return columns[j];
            }
        }
        throw InvalidInputError("RiskTable: no column for criterion " + criterion_name(id));
    }

    void add_column(CriterionId id, std::vector<double> values) {
        if (values.size() != candidates.size()) {
            throw InvalidInputError("RiskTable: column length mismatch");
        }
        if (has_column(id)) {
            throw InvalidInputError("RiskTable: duplicate column " + criterion_name(id));
        }
        column_ids.push_back(id);
        columns.push_back(std::move(values));
    }

    bool has_all_members() const {
        for (CriterionId id : kMemberCriteria) {
            if (!has_column(id)) {
                return false;
            }
        }
        return true;
    }
};

/// Competition ranking: rank = 1 + number of strictly smaller risks, so ties
/// share the better rank.
inline std::vector<int> rank_column(const std::vector<double>& risks) {
    if (risks.empty()) {
        throw InvalidInputError("rank_column: empty column");
    }
    std::vector<double> sorted(risks);
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> ranks(risks.size());
    for (std::size_t i = 0; i < risks.size(); ++i) {
        ranks[i] = 1 + static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), risks[i]) -
                                        sorted.begin());
    }
    return ranks;
}

/// Borda-count risk over a subset of member columns: per candidate, the sum
/// of its competition ranks across those columns.
inline std::vector<double> borda_risk_over(const RiskTable& table,
                                           const std::vector<CriterionId>& members) {
    if (members.empty()) {
        throw InvalidInputError("borda_risk_over: empty member subset");
    }
    std::vector<double> sums(table.candidates.size(), 0.0);
    for (CriterionId id : members) {
        const std::vector<int> ranks = rank_column(table.column(id));
        for (std::size_t i = 0; i < sums.size(); ++i) {
            sums[i] += static_cast<double>(ranks[i]);
        }
    }
    return sums;
}

/// Borda-count risk over all seven member columns.
inline std::vector<double> borda_risk(const RiskTable& table) {
    return borda_risk_over(table, std::vector<CriterionId>(kMemberCriteria.begin(),
                                                           kMemberCriteria.end()));
}

/// Index of the candidate with the lowest risk; ties break to the lowest
/// index, so the default (always index 0) wins exact ties.
inline int select_winner_index(const std::vector<double>& risks) {
    if (risks.empty()) {
        throw InvalidInputError("select_winner_index: empty candidate set");
    }
    int best = 0;
    for (std::size_t i = 1; i < risks.size(); ++i) {
        if (risks[i] < risks[static_cast<std::size_t>(best)]) {
            best = static_cast<int>(i);
        }
    }
    return best;
}

inline const HpcCandidate& select_winner(const std::vector<double>& risks,
                                         const std::vector<HpcCandidate>& candidates) {
    if (risks.size() != candidates.size()) {
        throw InvalidInputError("select_winner: lengths differ");
    }
    return candidates[static_cast<std::size_t>(select_winner_index(risks))];
}

/// Winner under the Borda ensemble restricted to a member subset.
inline int ensemble_subset(const RiskTable& table, const std::vector<CriterionId>& members) {
    return select_winner_index(borda_risk_over(table, members));
}

// ---------------------------------------------------------------------------
// Full evaluation
// ---------------------------------------------------------------------------

struct CriteriaEvaluation {
    RiskTable table;
    std::map<CriterionId, int> winners;  // candidate index per computed criterion
};

/// Fills every computable criterion column for the given per-candidate
/// bundles and selects each criterion's winner. Member columns requiring
/// learned performances or crowd predictions are skipped when any bundle
/// lacks them; the ensemble column appears only when all seven members were
/// computed.
inline CriteriaEvaluation evaluate_all_criteria(
    std::vector<HpcCandidate> candidates, const std::vector<EvaluationBundle>& bundles,
    const HpcCandidate& default_hpc, const HpcCandidate* def_data_hpc = nullptr,
    double equal_p = 0.8) {
    if (candidates.empty() || candidates.size() != bundles.size()) {
        throw InvalidInputError("evaluate_all_criteria: candidates and bundles must align");
    }
    for (const auto& bundle : bundles) {
        bundle.check();
    }

    bool have_true = true;
    bool have_perf = true;
    bool have_crowd = true;
    for (const auto& bundle : bundles) {
        have_true = have_true && bundle.true_labels != nullptr;
        for (const auto& fold : bundle.fold_predictions) {
            have_perf = have_perf && fold.perf.has_value();
            have_crowd = have_crowd && fold.crowd_probs.has_value();
        }
    }

    CriteriaEvaluation out;
    out.table.candidates = std::move(candidates);
    const std::size_t n = out.table.candidates.size();

    auto fill = [&](CriterionId id, auto&& risk_of_bundle) {
        std::vector<double> column(n);
        for (std::size_t i = 0; i < n; ++i) {
            column[i] = risk_of_bundle(bundles[i], out.table.candidates[i]);
        }
        out.table.add_column(id, std::move(column));
    };

    if (have_true) {
        fill(CriterionId::True,
             [](const EvaluationBundle& b, const HpcCandidate&) { return true_risk(b); });
    }
    fill(CriterionId::Def, [&](const EvaluationBundle&, const HpcCandidate& c) {
        return naive_default_risk(c, default_hpc);
    });
    if (def_data_hpc != nullptr) {
        fill(CriterionId::DefData, [&](const EvaluationBundle&, const HpcCandidate& c) {
            return naive_default_risk(c, *def_data_hpc);
        });
    }
    fill(CriterionId::Aeu, [&](const EvaluationBundle& b, const HpcCandidate&) {
        return aggregation_risk(b, PerfMode::Equal, WeightScheme::Uniform, equal_p);
    });
    fill(CriterionId::Aec, [&](const EvaluationBundle& b, const HpcCandidate&) {
        return aggregation_risk(b, PerfMode::Equal, WeightScheme::Confidence, equal_p);
    });
    if (have_perf) {
        fill(CriterionId::Alu, [&](const EvaluationBundle& b, const HpcCandidate&) {
            return aggregation_risk(b, PerfMode::Learned, WeightScheme::Uniform, equal_p);
        });
        fill(CriterionId::Alc, [&](const EvaluationBundle& b, const HpcCandidate&) {
            return aggregation_risk(b, PerfMode::Learned, WeightScheme::Confidence, equal_p);
        });
    }
    if (have_crowd) {
        fill(CriterionId::Cxu, [&](const EvaluationBundle& b, const HpcCandidate&) {
            return crowd_risk(b, CrowdWeighting::Uniform, equal_p);
        });
        fill(CriterionId::Cec, [&](const EvaluationBundle& b, const HpcCandidate&) {
            return crowd_risk(b, CrowdWeighting::ConfidenceEqual, equal_p);
        });
        if (have_perf) {
            fill(CriterionId::Clc, [&](const EvaluationBundle& b, const HpcCandidate&) {
                return crowd_risk(b, CrowdWeighting::ConfidenceLearned, equal_p);
            });
        }
    }
    if (out.table.has_all_members()) {
        out.table.add_column(CriterionId::Ens, borda_risk(out.table));
    }

    for (std::size_t j = 0; j < out.table.column_ids.size(); ++j) {
        out.winners[out.table.column_ids[j]] = select_winner_index(out.table.columns[j]);
    }
    return out;
}

}  // namespace crowdval

#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "crowdval/core.hpp"
#include "crowdval/sobol.hpp"

namespace crowdval {

// ---------------------------------------------------------------------------
// Search-space declaration
// ---------------------------------------------------------------------------

/// One hyperparameter value; categorical values are strings, numeric values
/// doubles. Integers ride on double (all integer HPs here are small).
using ParamValue = std::variant<double, std::string>;

inline bool param_value_equal(const ParamValue& a, const ParamValue& b) { return a == b; }

inline std::string param_value_to_string(const ParamValue& v) {
    if (std::holds_alternative<std::string>(v)) {
        return std::get<std::string>(v);
    }
    const double d = std::get<double>(v);
    char buf[64];
    const int n = std::snprintf(buf, sizeof(buf), "%.17g", d);
    return std::string(buf, static_cast<std::size_t>(n));
}

namespace param_kind {

struct UniformReal {
    double lo = 0.0;
    double hi = 1.0;
    bool open_lo = false;  // (lo, hi]: u is nudged off the open endpoint
};
struct LogUniformReal {
    double lo = 1e-6;
    double hi = 1.0;
};
struct UniformCategorical {
    std::vector<ParamValue> values;
};
struct Fixed {
    ParamValue value;
};

}  // namespace param_kind

struct ParamSpec {
    using UniformReal = param_kind::UniformReal;
    using LogUniformReal = param_kind::LogUniformReal;
    using UniformCategorical = param_kind::UniformCategorical;
    using Fixed = param_kind::Fixed;

    using Kind = std::variant<UniformReal, LogUniformReal, UniformCategorical, Fixed>;

    std::string name;
    Kind kind;

    bool is_fixed() const { return std::holds_alternative<Fixed>(kind); }

    void validate() const {
        if (name.empty()) {
            throw InvalidInputError("ParamSpec: empty name");
        }
        if (const auto* u = std::get_if<UniformReal>(&kind)) {
            if (!(u->lo < u->hi)) {
                throw InvalidInputError("ParamSpec " + name + ": lo must be < hi");
            }
        } else if (const auto* lu = std::get_if<LogUniformReal>(&kind)) {
            if (!(lu->lo > 0.0) || !(lu->lo < lu->hi)) {
                throw InvalidInputError("ParamSpec " + name +
                                        ": loguniform requires 0 < lo < hi");
            }
        } else if (const auto* cat = std::get_if<UniformCategorical>(&kind)) {
            if (cat->values.empty()) {
                throw InvalidInputError("ParamSpec " + name + ": empty categorical domain");
            }
        }
    }

    bool contains(const ParamValue& value) const {
        if (const auto* u = std::get_if<UniformReal>(&kind)) {
            if (!std::holds_alternative<double>(value)) {
                return false;
            }
            const double d = std::get<double>(value);
            return (u->open_lo ? d > u->lo : d >= u->lo) && d <= u->hi;
        }
        if (const auto* lu = std::get_if<LogUniformReal>(&kind)) {
            if (!std::holds_alternative<double>(value)) {
                return false;
            }
            const double d = std::get<double>(value);
            return d >= lu->lo && d <= lu->hi;
        }
        if (const auto* cat = std::get_if<UniformCategorical>(&kind)) {
            for (const auto& v : cat->values) {
                if (param_value_equal(v, value)) {
                    return true;
                }
            }
            return false;
        }
        return param_value_equal(std::get<Fixed>(kind).value, value);
    }
};

/// One hyperparameter configuration: a value per declared parameter plus
/// where it came from.
struct HpcCandidate {
    struct Origin {
        enum class Kind { Default, Sobol, External } kind = Kind::Default;
        int sobol_index = -1;
    };

    std::map<std::string, ParamValue> values;
    Origin origin;

    double number(const std::string& name) const {
        auto it = values.find(name);
        if (it == values.end() || !std::holds_alternative<double>(it->second)) {
            throw InvalidInputError("HpcCandidate: no numeric value named " + name);
        }
        return std::get<double>(it->second);
    }

    std::string text(const std::string& name) const {
        auto it = values.find(name);
        if (it == values.end() || !std::holds_alternative<std::string>(it->second)) {
            throw InvalidInputError("HpcCandidate: no string value named " + name);
        }
        return std::get<std::string>(it->second);
    }

    /// Field-by-field value equality; origin is bookkeeping, not identity.
    bool same_values(const HpcCandidate& other) const { return values == other.values; }

    std::string describe() const {
        std::string out;
        for (const auto& [name, value] : values) {
            if (!out.empty()) {
                out += ", ";
            }
            out += name + "=" + param_value_to_string(value);
        }
        return out;
    }

    std::string origin_string() const {
        switch (origin.kind) {
            case Origin::Kind::Default:
                return "default";
            case Origin::Kind::Sobol:
                return "sobol:" + std::to_string(origin.sobol_index);
            case Origin::Kind::External:
                return "external";
        }
        return "unknown";
    }
};

struct SearchSpace {
    std::vector<ParamSpec> params;  // order defines the Sobol coordinate order
    HpcCandidate default_candidate;

    int num_free_params() const {
        int n = 0;
        for (const auto& p : params) {
            if (!p.is_fixed()) {
                ++n;
            }
        }
        return n;
    }

    void validate() const {
        for (std::size_t i = 0; i < params.size(); ++i) {
            params[i].validate();
            for (std::size_t j = i + 1; j < params.size(); ++j) {
                if (params[i].name == params[j].name) {
                    throw InvalidInputError("SearchSpace: duplicate parameter name " +
                                            params[i].name);
                }
            }
        }
        if (default_candidate.values.size() != params.size()) {
            throw InvalidInputError("SearchSpace: default must cover every parameter exactly once");
        }
        for (const auto& p : params) {
            auto it = default_candidate.values.find(p.name);
            if (it == default_candidate.values.end()) {
                throw InvalidInputError("SearchSpace: default missing parameter " + p.name);
            }
            if (!p.contains(it->second)) {
                throw InvalidInputError("SearchSpace: default value for " + p.name +
                                        " lies outside its domain");
            }
        }
    }
};

// ---------------------------------------------------------------------------
// Candidate generation
// ---------------------------------------------------------------------------

/// Maps one unit-cube point (one coordinate per non-fixed parameter, in
/// declaration order) into a concrete candidate.
inline HpcCandidate materialize(const SearchSpace& space, std::span<const double> point) {
    if (static_cast<int>(point.size()) != space.num_free_params()) {
        throw InvalidInputError("materialize: point dimension mismatch");
    }
    HpcCandidate candidate;
    std::size_t coord = 0;
    for (const auto& p : space.params) {
        if (const auto* fixed = std::get_if<ParamSpec::Fixed>(&p.kind)) {
            candidate.values[p.name] = fixed->value;
            continue;
        }
        double u = point[coord++];
        if (const auto* ur = std::get_if<ParamSpec::UniformReal>(&p.kind)) {
            if (ur->open_lo && u == 0.0) {
                u = std::numeric_limits<double>::epsilon();
            }
            candidate.values[p.name] = ur->lo + u * (ur->hi - ur->lo);
        } else if (const auto* lu = std::get_if<ParamSpec::LogUniformReal>(&p.kind)) {
            const double lg_lo = std::log10(lu->lo);
            const double lg_hi = std::log10(lu->hi);
            candidate.values[p.name] = std::pow(10.0, lg_lo + u * (lg_hi - lg_lo));
        } else {
            const auto& cat = std::get<ParamSpec::UniformCategorical>(p.kind);
            const auto len = cat.values.size();
            auto idx = static_cast<std::size_t>(u * static_cast<double>(len));
            if (idx >= len) {
                idx = len - 1;
            }
            candidate.values[p.name] = cat.values[idx];
        }
    }
    return candidate;
}

/// Default candidate first, then budget-1 Sobol-materialized ones. Exact
/// value duplicates of the default are kept as distinct rows.
inline std::vector<HpcCandidate> sample_candidates(const SearchSpace& space, int budget) {
    if (budget < 1) {
        throw InvalidInputError("sample_candidates: budget must be at least 1");
    }
    space.validate();
    std::vector<HpcCandidate> out;
    out.reserve(static_cast<std::size_t>(budget));
    HpcCandidate def = space.default_candidate;
    def.origin = {HpcCandidate::Origin::Kind::Default, -1};
    out.push_back(std::move(def));
    const int dim = space.num_free_params();
    if (budget > 1 && dim == 0) {
        throw InvalidInputError("sample_candidates: no free parameters to sample");
    }
    if (budget > 1) {
        const std::vector<double> points = sobol_points(dim, budget - 1);
        for (int i = 0; i < budget - 1; ++i) {
            std::span<const double> row(points.data() + static_cast<std::size_t>(i) *
                                                            static_cast<std::size_t>(dim),
                                        static_cast<std::size_t>(dim));
            HpcCandidate candidate = materialize(space, row);
            candidate.origin = {HpcCandidate::Origin::Kind::Sobol, i};
            out.push_back(std::move(candidate));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Resampling
// ---------------------------------------------------------------------------

/// Seeded shuffle of [0, n), then k contiguous validation chunks whose sizes
/// differ by at most one.
inline SplitPlan kfold_split(int n, int k, std::uint64_t seed) {
    if (k < 1 || k > n) {
        throw InvalidInputError("kfold_split: need 1 <= k <= n");
    }
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        order[static_cast<std::size_t>(i)] = i;
    }
    Rng rng(mix64(seed, 0x6b666f6cULL));  // domain-separated from other seed uses
    rng.shuffle(order);

    SplitPlan plan;
    plan.folds.reserve(static_cast<std::size_t>(k));
    const int base = n / k;
    const int remainder = n % k;
    int offset = 0;
    for (int fold = 0; fold < k; ++fold) {
        const int size = base + (fold < remainder ? 1 : 0);
        SplitPlan::Fold f;
        f.validation_indices.assign(order.begin() + offset, order.begin() + offset + size);
        f.train_indices.reserve(static_cast<std::size_t>(n - size));
        f.train_indices.assign(order.begin(), order.begin() + offset);
        f.train_indices.insert(f.train_indices.end(), order.begin() + offset + size, order.end());
        plan.folds.push_back(std::move(f));
        offset += size;
    }
    return plan;
}

}  // namespace crowdval

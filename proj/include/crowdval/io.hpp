#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "crowdval/core.hpp"
#include "crowdval/hpo.hpp"

namespace crowdval {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Number formatting
// ---------------------------------------------------------------------------

/// Shortest round-trip decimal form; keeps rewritten files byte-identical.
inline std::string format_double(double value) {
    char buf[64];
    const auto result = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, result.ptr);
}

inline double parse_double(const std::string& text, const std::string& context) {
    try {
        std::size_t pos = 0;
        const double value = std::stod(text, &pos);
        if (pos != text.size()) {
            throw std::invalid_argument("trailing characters");
        }
        return value;
    } catch (const std::exception&) {
        throw ConfigError(context + ": cannot parse number from '" + text + "'");
    }
}

inline int parse_int(const std::string& text, const std::string& context) {
    try {
        std::size_t pos = 0;
        const int value = std::stoi(text, &pos);
        if (pos != text.size()) {
            throw std::invalid_argument("trailing characters");
        }
        return value;
    } catch (const std::exception&) {
        throw ConfigError(context + ": cannot parse integer from '" + text + "'");
    }
}

// ---------------------------------------------------------------------------
// CSV primitives
// ---------------------------------------------------------------------------

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream stream(line);
    while (std::getline(stream, field, ',')) {
        fields.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        fields.emplace_back();
    }
    return fields;
}

/// getline that also accepts CRLF input.
inline bool read_csv_line(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) {
        return false;
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    return true;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot open for writing: " + path.string());
    }
    return out;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open for reading: " + path.string());
    }
    return in;
}

// ---------------------------------------------------------------------------
// Dataset files
// ---------------------------------------------------------------------------
// features.csv      one row per instance, D real columns, no header
// true_labels.csv   header instance_id,class
// crowd labels csv  header instance_id,worker_id,class; 0-based ids;
//                   duplicate (instance, worker) rows are a hard error

struct RawFeatures {
    int num_instances = 0;
    int num_features = 0;
    std::vector<double> values;
};

inline RawFeatures read_features_csv(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    RawFeatures out;
    std::string line;
    while (read_csv_line(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto fields = split_csv_line(line);
        if (out.num_instances == 0) {
            out.num_features = static_cast<int>(fields.size());
        } else if (static_cast<int>(fields.size()) != out.num_features) {
            throw ConfigError(path.string() + ": row " + std::to_string(out.num_instances) +
                              " has " + std::to_string(fields.size()) + " columns, expected " +
                              std::to_string(out.num_features));
        }
        for (const auto& field : fields) {
            out.values.push_back(parse_double(field, path.string()));
        }
        ++out.num_instances;
    }
    if (out.num_instances == 0) {
        throw ConfigError(path.string() + ": empty features file");
    }
    return out;
}

inline void write_features_csv(const std::filesystem::path& path, const Dataset& data) {
    std::ofstream out = open_output(path);
    for (int i = 0; i < data.num_instances; ++i) {
        const auto row = data.row(i);
        for (int d = 0; d < data.num_features; ++d) {
            out << (d ? "," : "") << format_double(row[static_cast<std::size_t>(d)]);
        }
        out << '\n';
    }
}

inline std::vector<int> read_true_labels_csv(const std::filesystem::path& path,
                                             int num_instances) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!read_csv_line(in, line) || split_csv_line(line) != std::vector<std::string>{"instance_id", "class"}) {
        throw ConfigError(path.string() + ": expected header 'instance_id,class'");
    }
    std::vector<int> labels(static_cast<std::size_t>(num_instances), -1);
    while (read_csv_line(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto fields = split_csv_line(line);
        if (fields.size() != 2) {
            throw ConfigError(path.string() + ": malformed row '" + line + "'");
        }
        const int instance = parse_int(fields[0], path.string());
        if (instance < 0 || instance >= num_instances) {
            throw ConfigError(path.string() + ": instance_id " + fields[0] + " out of range");
        }
        labels[static_cast<std::size_t>(instance)] = parse_int(fields[1], path.string());
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0) {
            throw ConfigError(path.string() + ": missing label for instance " +
                              std::to_string(i));
        }
    }
    return labels;
}

inline void write_true_labels_csv(const std::filesystem::path& path,
                                  const std::vector<int>& labels) {
    std::ofstream out = open_output(path);
    out << "instance_id,class\n";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out << i << ',' << labels[i] << '\n';
    }
}

struct RawCrowdLabels {
    std::vector<CrowdLabel> labels;
    int max_instance = -1;
    int max_worker = -1;
    int max_class = -1;
};

inline RawCrowdLabels read_crowd_labels_csv(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!read_csv_line(in, line) ||
        split_csv_line(line) != std::vector<std::string>{"instance_id", "worker_id", "class"}) {
        throw ConfigError(path.string() + ": expected header 'instance_id,worker_id,class'");
    }
    RawCrowdLabels out;
    while (read_csv_line(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto fields = split_csv_line(line);
        if (fields.size() != 3) {
            throw ConfigError(path.string() + ": malformed row '" + line + "'");
        }
        CrowdLabel label;
        label.instance = parse_int(fields[0], path.string());
        label.worker = parse_int(fields[1], path.string());
        label.label = parse_int(fields[2], path.string());
        if (label.instance < 0 || label.worker < 0 || label.label < 0) {
            throw ConfigError(path.string() + ": negative id in row '" + line + "'");
        }
        out.max_instance = std::max(out.max_instance, label.instance);
        out.max_worker = std::max(out.max_worker, label.worker);
        out.max_class = std::max(out.max_class, label.label);
        out.labels.push_back(label);
    }
    return out;
}

inline CrowdLabelSet assemble_crowd_labels(const RawCrowdLabels& raw, int num_instances,
                                           int num_workers, int num_classes,
                                           const std::string& context) {
    CrowdLabelSet labels(num_instances, num_workers, num_classes);
    for (const auto& label : raw.labels) {
        try {
            labels.add(label.instance, label.worker, label.label);
        } catch (const InvalidInputError& err) {
            throw ConfigError(context + ": " + err.what());
        }
    }
    return labels;
}

inline void write_crowd_labels_csv(const std::filesystem::path& path,
                                   const CrowdLabelSet& labels) {
    std::ofstream out = open_output(path);
    out << "instance_id,worker_id,class\n";
    for (const auto& label : labels.all_labels()) {
        out << label.instance << ',' << label.worker << ',' << label.label << '\n';
    }
}

// ---------------------------------------------------------------------------
// Search-space manifest
// ---------------------------------------------------------------------------
// {
//   "params": [
//     {"name": "learning_rate", "kind": "loguniform", "lo": "1e-4", "hi": "1e-1"},
//     {"name": "epochs", "kind": "categorical", "values": ["5", "30", "50"]},
//     {"name": "dropout", "kind": "uniform", "lo": "0.0", "hi": "0.5"},
//     {"name": "optimizer", "kind": "fixed", "value": "gd"}
//   ],
//   "default": {"learning_rate": "1e-3", "epochs": "30", ...}
// }
// Numeric bounds are decimal strings so rewriting a manifest never drifts.

namespace io_detail {

inline std::string json_scalar_to_string(const Json& value, const std::string& context) {
    if (value.is_string()) {
        return value.get<std::string>();
    }
    if (value.is_number() || value.is_boolean()) {
        return value.dump();
    }
    throw ConfigError(context + ": expected a string or number");
}

/// Values that parse as numbers become numbers; everything else stays text.
inline ParamValue param_value_from_text(const std::string& text) {
    try {
        std::size_t pos = 0;
        const double value = std::stod(text, &pos);
        if (pos == text.size()) {
            return value;
        }
    } catch (const std::exception&) {
    }
    return text;
}

}  // namespace io_detail

inline SearchSpace parse_search_space(const Json& json, const std::string& context) {
    if (!json.is_object() || !json.contains("params") || !json.contains("default")) {
        throw ConfigError(context + ": search space needs 'params' and 'default'");
    }
    SearchSpace space;
    for (const auto& p : json.at("params")) {
        const std::string where = context + ": param '" +
                                  (p.contains("name") ? p.at("name").get<std::string>() : "?") +
                                  "'";
        if (!p.contains("name") || !p.contains("kind")) {
            throw ConfigError(context + ": every param needs 'name' and 'kind'");
        }
        ParamSpec spec;
        spec.name = p.at("name").get<std::string>();
        const std::string kind = p.at("kind").get<std::string>();
        auto bound = [&](const char* key) {
            if (!p.contains(key)) {
                throw ConfigError(where + ": missing '" + key + "'");
            }
            return parse_double(io_detail::json_scalar_to_string(p.at(key), where), where);
        };
        if (kind == "uniform") {
            ParamSpec::UniformReal u{bound("lo"), bound("hi"), false};
            if (p.contains("open_lo")) {
                u.open_lo = p.at("open_lo").get<bool>();
            }
            spec.kind = u;
        } else if (kind == "loguniform") {
            spec.kind = ParamSpec::LogUniformReal{bound("lo"), bound("hi")};
        } else if (kind == "categorical") {
            if (!p.contains("values") || !p.at("values").is_array()) {
                throw ConfigError(where + ": categorical needs a 'values' array");
            }
            ParamSpec::UniformCategorical cat;
            for (const auto& v : p.at("values")) {
                cat.values.push_back(io_detail::param_value_from_text(
                    io_detail::json_scalar_to_string(v, where)));
            }
            spec.kind = cat;
        } else if (kind == "fixed") {
            if (!p.contains("value")) {
                throw ConfigError(where + ": fixed needs a 'value'");
            }
            spec.kind = ParamSpec::Fixed{io_detail::param_value_from_text(
                io_detail::json_scalar_to_string(p.at("value"), where))};
        } else {
            throw ConfigError(where + ": unknown kind '" + kind + "'");
        }
        space.params.push_back(std::move(spec));
    }
    for (const auto& [name, value] : json.at("default").items()) {
        space.default_candidate.values[name] = io_detail::param_value_from_text(
            io_detail::json_scalar_to_string(value, context + ": default." + name));
    }
    try {
        space.validate();
    } catch (const InvalidInputError& err) {
        throw ConfigError(context + ": " + err.what());
    }
    return space;
}

/// Candidate values from a plain {"name": "value", ...} object.
inline HpcCandidate parse_candidate_values(const Json& json, const std::string& context) {
    HpcCandidate candidate;
    candidate.origin = {HpcCandidate::Origin::Kind::External, -1};
    for (const auto& [name, value] : json.items()) {
        candidate.values[name] =
            io_detail::param_value_from_text(io_detail::json_scalar_to_string(value, context));
    }
    return candidate;
}

inline Json load_json_file(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    Json json;
    try {
        in >> json;
    } catch (const std::exception& err) {
        throw ConfigError(path.string() + ": invalid JSON: " + err.what());
    }
    return json;
}

}  // namespace crowdval

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>

#include "crowdval/io.hpp"

using namespace crowdval;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("crowdval_io_" + std::to_string(mix64(std::random_device{}())));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("features round trip") {
    TempDir tmp;
    Dataset data;
    data.num_instances = 3;
    data.num_features = 2;
    data.features = {1.5, -2.25, 0.1, 3.0, 1e-9, -7.5};
    data.crowd_labels = CrowdLabelSet(3, 1, 2);
    const fs::path path = tmp.path / "features.csv";
    write_features_csv(path, data);
    const RawFeatures raw = read_features_csv(path);
    CHECK(raw.num_instances == 3);
    CHECK(raw.num_features == 2);
    CHECK(raw.values == data.features);

    SECTION("ragged rows are rejected") {
        std::ofstream out(path);
        out << "1.0,2.0\n1.0\n";
        out.close();
        CHECK_THROWS_AS(read_features_csv(path), ConfigError);
    }
}

TEST_CASE("true labels round trip") {
    TempDir tmp;
    const fs::path path = tmp.path / "true_labels.csv";
    write_true_labels_csv(path, {1, 0, 2});
    CHECK(read_true_labels_csv(path, 3) == std::vector<int>{1, 0, 2});

    SECTION("missing instances are rejected") {
        CHECK_THROWS_AS(read_true_labels_csv(path, 4), ConfigError);
    }
    SECTION("bad header is rejected") {
        std::ofstream out(path);
        out << "id,class\n0,1\n";
        out.close();
        CHECK_THROWS_AS(read_true_labels_csv(path, 1), ConfigError);
    }
}

TEST_CASE("crowd labels round trip and duplicate detection") {
    TempDir tmp;
    CrowdLabelSet labels(4, 3, 2);
    labels.add(0, 0, 1);
    labels.add(0, 2, 0);
    labels.add(3, 1, 1);
    const fs::path path = tmp.path / "crowd_labels.csv";
    write_crowd_labels_csv(path, labels);

    const RawCrowdLabels raw = read_crowd_labels_csv(path);
    CHECK(raw.labels.size() == 3);
    CHECK(raw.max_instance == 3);
    CHECK(raw.max_worker == 2);
    CHECK(raw.max_class == 1);
    const CrowdLabelSet rebuilt = assemble_crowd_labels(raw, 4, 3, 2, "test");
    CHECK(rebuilt.num_labels() == 3);
    CHECK(rebuilt.labels_of(0).size() == 2);

    SECTION("duplicate (instance, worker) rows are a hard error") {
        std::ofstream out(path);
        out << "instance_id,worker_id,class\n0,0,1\n0,0,0\n";
        out.close();
        const RawCrowdLabels dup = read_crowd_labels_csv(path);
        CHECK_THROWS_AS(assemble_crowd_labels(dup, 4, 3, 2, "test"), ConfigError);
    }
}

TEST_CASE("search-space manifest parsing") {
    const Json manifest = Json::parse(R"({
        "params": [
            {"name": "learning_rate", "kind": "loguniform", "lo": "1e-4", "hi": "1e-1"},
            {"name": "epochs", "kind": "categorical", "values": ["5", "30", "50"]},
            {"name": "dropout", "kind": "uniform", "lo": "0.0", "hi": "0.5"},
            {"name": "norm", "kind": "uniform", "lo": "0.0", "hi": "1.0", "open_lo": true},
            {"name": "optimizer", "kind": "fixed", "value": "gd"}
        ],
        "default": {
            "learning_rate": "1e-3",
            "epochs": "30",
            "dropout": "0.0",
            "norm": "0.4",
            "optimizer": "gd"
        }
    })");
    const SearchSpace space = parse_search_space(manifest, "test");
    CHECK(space.params.size() == 5);
    CHECK(space.num_free_params() == 4);
    CHECK(space.default_candidate.number("learning_rate") == 1e-3);
    CHECK(space.default_candidate.text("optimizer") == "gd");

    // decimal strings survive exactly
    const auto* lu = std::get_if<ParamSpec::LogUniformReal>(&space.params[0].kind);
    REQUIRE(lu != nullptr);
    CHECK(lu->lo == 1e-4);
    CHECK(lu->hi == 1e-1);

    SECTION("field-level diagnostics") {
        Json broken = manifest;
        broken["params"][0].erase("hi");
        CHECK_THROWS_WITH(parse_search_space(broken, "test"),
                          Catch::Matchers::ContainsSubstring("learning_rate"));

        Json bad_default = manifest;
        bad_default["default"]["learning_rate"] = "9.0";
        CHECK_THROWS_AS(parse_search_space(bad_default, "test"), ConfigError);

        Json unknown_kind = manifest;
        unknown_kind["params"][0]["kind"] = "normal";
        CHECK_THROWS_AS(parse_search_space(unknown_kind, "test"), ConfigError);
    }
}

TEST_CASE("CRLF files parse like LF files") {
    TempDir tmp;
    const fs::path path = tmp.path / "crowd_labels.csv";
    {
        std::ofstream out(path, std::ios::binary);
        out << "instance_id,worker_id,class\r\n0,0,1\r\n1,2,0\r\n";
    }
    const RawCrowdLabels raw = read_crowd_labels_csv(path);
    CHECK(raw.labels.size() == 2);
    CHECK(raw.max_worker == 2);

    const fs::path features = tmp.path / "features.csv";
    {
        std::ofstream out(features, std::ios::binary);
        out << "1.5,2.5\r\n-1.0,0.25\r\n";
    }
    const RawFeatures parsed = read_features_csv(features);
    CHECK(parsed.num_instances == 2);
    CHECK(parsed.values == std::vector<double>{1.5, 2.5, -1.0, 0.25});
}

TEST_CASE("format_double round trips shortest decimal forms") {
    for (double v : {0.1, 1e-9, 3.0, -2.25, 0.30000000000000004}) {
        CHECK(parse_double(format_double(v), "test") == v);
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK_THROWS_AS(parse_double("abc", "test"), ConfigError);
    CHECK_THROWS_AS(parse_double("1.5x", "test"), ConfigError);
}

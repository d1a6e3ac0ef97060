#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "gatlab/csbm.hpp"
#include "gatlab/dataset.hpp"

using gatlab::ExternalGraph;
using gatlab::Vec;

namespace {

namespace fs = std::filesystem;

fs::path fixture_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "gatlab_dataset_test" / name;
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

// three nodes, two features, one edge
fs::path toy_fixture() {
    const auto dir = fixture_dir("toy");
    write_file(dir / "features.tsv", "0\t1.0\t2.0\n1\t-1.0\t0.5\n2\t0.25\t-0.75\n");
    write_file(dir / "edges.tsv", "0\t1\n");
    write_file(dir / "labels.tsv", "0\t0\n1\t1\n2\t0\n");
    return dir;
}

ExternalGraph load_toy(const std::optional<fs::path>& masks = std::nullopt) {
    const auto dir = toy_fixture();
    return gatlab::load_external_graph(dir / "features.tsv", dir / "edges.tsv",
                                       dir / "labels.tsv", masks);
}

}  // namespace

TEST_CASE("toy fixture loads with the expected shape") {
    const auto g = load_toy();
    CHECK(g.n == 3);
    CHECK(g.d == 2);
    REQUIRE(g.edges.size() == 1);
    CHECK(g.edges[0] == std::make_pair<std::int32_t, std::int32_t>(0, 1));
    CHECK(g.labels == std::vector<int>{0, 1, 0});
    CHECK(g.row(2)[1] == -0.75);
}

TEST_CASE("loader validation errors carry the line number") {
    const auto dir = fixture_dir("bad");
    write_file(dir / "features.tsv", "0\t1.0\n1\t2.0\n2\t3.0\n");
    write_file(dir / "labels.tsv", "0\t0\n1\t1\n2\t0\n");

    write_file(dir / "edges.tsv", "0\t1\n2\t2\n");
    CHECK_THROWS_WITH(gatlab::load_external_graph(dir / "features.tsv", dir / "edges.tsv",
                                                  dir / "labels.tsv"),
                      Catch::Matchers::ContainsSubstring("self-loop at line 2"));

    write_file(dir / "edges.tsv", "0\t1\n1\t0\n");
    CHECK_THROWS_WITH(gatlab::load_external_graph(dir / "features.tsv", dir / "edges.tsv",
                                                  dir / "labels.tsv"),
                      Catch::Matchers::ContainsSubstring("duplicate edge at line 2"));

    write_file(dir / "edges.tsv", "0\t9\n");
    CHECK_THROWS_WITH(gatlab::load_external_graph(dir / "features.tsv", dir / "edges.tsv",
                                                  dir / "labels.tsv"),
                      Catch::Matchers::ContainsSubstring("unknown node id at line 1"));

    write_file(dir / "edges.tsv", "0\t1\n");
    write_file(dir / "features.tsv", "0\t1.0\n1\t2.0\t9.0\n2\t3.0\n");
    CHECK_THROWS_WITH(gatlab::load_external_graph(dir / "features.tsv", dir / "edges.tsv",
                                                  dir / "labels.tsv"),
                      Catch::Matchers::ContainsSubstring("ragged row at line 2"));
}

TEST_CASE("sample dump and loader round trip") {
    gatlab::CsbmParams params{40, 3, 0.5, 0.2, Vec(3, 0.4), 0.9, false};
    gatlab::RngStream rng(19, 0);
    const auto sample = gatlab::sample_csbm(params, rng);
    const auto dir = fixture_dir("roundtrip");
    gatlab::dump_sample_tsv(sample, dir);

    const auto g = gatlab::load_external_graph(dir / "features.tsv", dir / "edges.tsv",
                                               dir / "labels.tsv");
    REQUIRE(g.n == sample.n);
    REQUIRE(g.d == sample.d);
    CHECK(g.features == sample.features);  // 17 significant digits round-trip exactly
    for (int i = 0; i < g.n; ++i) REQUIRE(g.labels[i] == sample.labels[i]);
    std::int64_t edges = 0;
    for (const auto& [u, v] : g.edges) {
        REQUIRE(sample.has_edge(u, v));
        ++edges;
    }
    CHECK(edges == sample.edge_count());
}

TEST_CASE("mean shift centering, invariant and projections") {
    const auto g = load_toy();

    SECTION("mu = 0 centers both groups") {
        const auto task = gatlab::one_vs_all_mean_shift(g, 1, Vec{0.0, 0.0});
        Vec target_mean(2, 0.0), rest_mean(2, 0.0);
        int rest = 0;
        for (int i = 0; i < g.n; ++i)
            for (int k = 0; k < 2; ++k) {
                const double v = task.shifted_features[i * 2 + k];
                if (task.binary_labels[i]) target_mean[k] += v;
                else rest_mean[k] += v;
            }
        for (int i = 0; i < g.n; ++i) rest += task.binary_labels[i] ? 0 : 1;
        for (int k = 0; k < 2; ++k) {
            CHECK(std::fabs(target_mean[k]) <= 1e-6);
            CHECK(std::fabs(rest_mean[k] / rest) <= 1e-6);
        }
    }

    SECTION("class means land on +mu and -mu") {
        const Vec mu{0.8, -0.6};
        const auto task = gatlab::one_vs_all_mean_shift(g, 0, mu);
        Vec m1(2, 0.0), m0(2, 0.0);
        int c1 = 0, c0 = 0;
        for (int i = 0; i < g.n; ++i) {
            auto& m = task.binary_labels[i] ? m1 : m0;
            (task.binary_labels[i] ? c1 : c0) += 1;
            for (int k = 0; k < 2; ++k) m[k] += task.shifted_features[i * 2 + k];
        }
        for (int k = 0; k < 2; ++k) {
            CHECK(m1[k] / c1 == Catch::Approx(mu[k]).margin(1e-6));
            CHECK(m0[k] / c0 == Catch::Approx(-mu[k]).margin(1e-6));
        }
    }

    SECTION("empty target class is a domain error") {
        CHECK_THROWS_AS(gatlab::one_vs_all_mean_shift(g, 9, Vec{0.0, 0.0}), std::domain_error);
    }
}

TEST_CASE("mean shift is idempotent on already-shifted data") {
    const auto g = load_toy();
    const Vec mu{0.5, 0.25};
    const auto once = gatlab::one_vs_all_mean_shift(g, 1, mu);
    ExternalGraph shifted = g;
    shifted.features = once.shifted_features;
    const auto twice = gatlab::one_vs_all_mean_shift(shifted, 1, mu);
    for (std::size_t k = 0; k < once.shifted_features.size(); ++k)
        REQUIRE(std::fabs(twice.shifted_features[k] - once.shifted_features[k]) <= 1e-6);
}

TEST_CASE("identical raw classes separate after the shift") {
    const auto dir = fixture_dir("identical");
    write_file(dir / "features.tsv", "0\t1.0\t0.0\n1\t1.0\t0.0\n2\t1.0\t0.0\n3\t1.0\t0.0\n");
    write_file(dir / "edges.tsv", "0\t1\n2\t3\n");
    write_file(dir / "labels.tsv", "0\t1\n1\t1\n2\t0\n3\t0\n");
    const auto g = gatlab::load_external_graph(dir / "features.tsv", dir / "edges.tsv",
                                               dir / "labels.tsv");
    const Vec mu{2.0, 0.0};
    const auto task = gatlab::one_vs_all_mean_shift(g, 1, mu);
    const Vec u = gatlab::normalized(mu);
    for (int i = 0; i < g.n; ++i) {
        const double proj = task.shifted_features[i * 2] * u[0] +
                            task.shifted_features[i * 2 + 1] * u[1];
        CHECK(proj == Catch::Approx(task.binary_labels[i] ? 2.0 : -2.0));
    }
}

namespace {

// a small planted-community dump used as the "real data" stand-in
gatlab::CsbmSample make_fixture_sample() {
    gatlab::CsbmParams params{160, 6, 0.35, 0.08, Vec(6, 0.3), 1.0, false};
    gatlab::RngStream rng(55, 0);
    return gatlab::sample_csbm(params, rng);
}

ExternalGraph fixture_graph() {
    const auto sample = make_fixture_sample();
    const auto dir = fixture_dir("real_fixture");
    gatlab::dump_sample_tsv(sample, dir);
    return gatlab::load_external_graph(dir / "features.tsv", dir / "edges.tsv",
                                       dir / "labels.tsv");
}

double record_value(const std::vector<gatlab::SweepRecord>& records, double sv,
                    const std::string& model, const std::string& metric) {
    for (const auto& r : records)
        if (r.sweep_value == sv && r.model == model && r.metric == metric) return r.value;
    throw std::runtime_error("record not found: " + model + "/" + metric);
}

}  // namespace

TEST_CASE("real-task evaluation tracks the injected mean") {
    const auto g = fixture_graph();
    const auto task = gatlab::one_vs_all_mean_shift(g, 1, Vec(6, 0.0));
    const std::vector<double> grid{0.05, 0.5, 1.5, 4.0, 12.0};
    const auto records = gatlab::evaluate_real_task(task, {"mlp-psi", "gcn", "linear"}, grid);

    // edge accuracy grows to 1 and the coefficient split widens with |mu|
    double prev_acc = 0.0;
    for (const double sv : grid) {
        const double acc = record_value(records, sv, "mlp-psi", "edge_acc");
        CHECK(acc >= prev_acc - 0.005);  // nondecreasing up to sampling wiggle
        prev_acc = acc;
    }
    CHECK(record_value(records, grid.back(), "mlp-psi", "edge_acc") == 1.0);

    const auto ratio = [&](double sv) {
        return record_value(records, sv, "mlp-psi", "gamma_intra_mean") /
               record_value(records, sv, "mlp-psi", "gamma_inter_mean");
    };
    CHECK(ratio(grid.back()) > ratio(grid.front()));
    CHECK(ratio(grid.back()) > 10.0);

    // near-zero mu the coefficients cannot tell the classes apart and sit
    // near the uniform scale
    const double uniform_ref = record_value(records, grid.front(), "mlp-psi",
                                            "gamma_uniform_ref");
    const double small_intra = record_value(records, grid.front(), "mlp-psi",
                                            "gamma_intra_mean");
    const double small_inter = record_value(records, grid.front(), "mlp-psi",
                                            "gamma_inter_mean");
    CHECK(small_intra == Catch::Approx(small_inter).epsilon(0.1));
    CHECK(small_intra == Catch::Approx(uniform_ref).epsilon(0.2));
    CHECK(record_value(records, grid.back(), "mlp-psi", "node_acc") >= 0.95);
    CHECK(record_value(records, grid.back(), "linear", "node_acc") >= 0.95);
}

TEST_CASE("masks restrict evaluation and an all-train split is skipped") {
    const auto g0 = fixture_graph();
    const auto dir = fixture_dir("real_fixture");

    std::string masks;
    for (int i = 0; i < g0.n; ++i)
        masks += std::to_string(i) + (i % 2 ? "\ttest\n" : "\ttrain\n");
    write_file(dir / "masks.tsv", masks);
    const auto g = gatlab::load_external_graph(dir / "features.tsv", dir / "edges.tsv",
                                               dir / "labels.tsv", dir / "masks.tsv");
    const auto task = gatlab::one_vs_all_mean_shift(g, 1, Vec(6, 0.0));
    const auto records = gatlab::evaluate_real_task(task, {"linear"}, {6.0});
    CHECK(record_value(records, 6.0, "linear", "node_acc") >= 0.9);

    std::string all_train;
    for (int i = 0; i < g0.n; ++i) all_train += std::to_string(i) + "\ttrain\n";
    write_file(dir / "masks_all.tsv", all_train);
    const auto g_all = gatlab::load_external_graph(dir / "features.tsv", dir / "edges.tsv",
                                                   dir / "labels.tsv", dir / "masks_all.tsv");
    const auto task_all = gatlab::one_vs_all_mean_shift(g_all, 1, Vec(6, 0.0));
    const auto skipped = gatlab::evaluate_real_task(task_all, {"linear"}, {6.0});
    REQUIRE(skipped.size() == 1);
    CHECK(skipped[0].metric == "skipped");
}

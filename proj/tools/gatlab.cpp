// Command-line front end: CSBM sweeps, verification suites, real-data runs
// and sample dumps. Exit codes: 0 ok, 1 configuration error, 2 verification
// failure, 3 I/O error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gatlab/csbm.hpp"
#include "gatlab/dataset.hpp"
#include "gatlab/experiments.hpp"

namespace {

using nlohmann::json;

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const std::size_t end = s.find(',', start);
        if (end == std::string::npos) {
            if (start < s.size()) out.push_back(s.substr(start));
            break;
        }
        if (end > start) out.push_back(s.substr(start, end - start));
        start = end + 1;
    }
    return out;
}

std::vector<double> parse_real_list(const std::string& s) {
    std::vector<double> out;
    for (const auto& tok : split_commas(s)) out.push_back(std::stod(tok));
    return out;
}

struct SweepFlags {
    gatlab::SweepConfig cfg;
    std::string regime = "easy";
    std::string r_policy = "experiment";
    std::string models;
    std::string out_path;
    std::string config_path;
    int d_flag = 0;

    void add_common(CLI::App* cmd) {
        cmd->add_option("--n", cfg.n, "node count");
        cmd->add_option("--d", d_flag, "feature dimension (default n/ln^2 n)");
        cmd->add_option("--p", cfg.p, "intra-class edge probability");
        cmd->add_option("--q", cfg.q, "inter-class edge probability (fixed-q sweeps)");
        cmd->add_option("--sigma", cfg.sigma, "feature noise std");
        cmd->add_option("--trials", cfg.trials, "Monte Carlo trials per point");
        cmd->add_option("--seed", cfg.base_seed, "base seed; trial t uses stream (seed, t)");
        cmd->add_option("--jobs", cfg.jobs, "worker threads (0 = hardware)");
        cmd->add_option("--models", models, "comma-separated model list");
        cmd->add_option("--r-policy", r_policy, "experiment|theorem|theorem13");
        cmd->add_option("--out", out_path, "output CSV path");
        cmd->add_option("--config", config_path,
                        "JSON config; its values override flags (last wins)");
        cmd->add_flag("--force-balanced", cfg.force_balanced, "force balanced class labels");
    }

    // JSON keys mirror the config fields in snake_case
    void apply_config_file() {
        if (config_path.empty()) return;
        std::ifstream in(config_path);
        if (!in) throw gatlab::IoError("cannot open config: " + config_path);
        json j;
        in >> j;
        if (j.contains("n")) cfg.n = j["n"].get<int>();
        if (j.contains("d")) d_flag = j["d"].get<int>();
        if (j.contains("p")) cfg.p = j["p"].get<double>();
        if (j.contains("q")) cfg.q = j["q"].get<double>();
        if (j.contains("sigma")) cfg.sigma = j["sigma"].get<double>();
        if (j.contains("trials")) cfg.trials = j["trials"].get<int>();
        if (j.contains("base_seed")) cfg.base_seed = j["base_seed"].get<std::uint64_t>();
        if (j.contains("jobs")) cfg.jobs = j["jobs"].get<int>();
        if (j.contains("force_balanced")) cfg.force_balanced = j["force_balanced"].get<bool>();
        if (j.contains("leaky_slope")) cfg.leaky_slope = j["leaky_slope"].get<double>();
        if (j.contains("q_grid")) cfg.q_grid = j["q_grid"].get<std::vector<double>>();
        if (j.contains("distance_grid"))
            cfg.distance_grid = j["distance_grid"].get<std::vector<double>>();
        if (j.contains("models")) cfg.models = j["models"].get<std::vector<std::string>>();
        if (j.contains("r_policy")) r_policy = j["r_policy"].get<std::string>();
        if (j.contains("regime")) regime = j["regime"].get<std::string>();
        if (j.contains("out")) out_path = j["out"].get<std::string>();
    }

    gatlab::SweepConfig finalize() {
        apply_config_file();
        if (d_flag > 0) cfg.d_override = d_flag;
        if (!models.empty()) cfg.models = split_commas(models);
        cfg.r_policy = gatlab::parse_r_policy(r_policy);
        return cfg;
    }
};

void require_out(const std::string& out_path) {
    if (out_path.empty()) throw CLI::ValidationError("--out", "output CSV path is required");
}

int dispatch(CLI::App& app, int argc, char** argv) {
    SweepFlags sweep_q_flags, sweep_dist_flags;
    std::string verify_suite = "easy";
    std::uint64_t verify_seed = 2;
    int verify_jobs = 0;

    std::string feat_path, edge_path, label_path, masks_path, mu_grid, real_models, real_out;
    int target_class = 0;

    gatlab::SweepConfig dump_cfg;
    std::string dump_regime = "hard";
    std::string dump_dir;
    int dump_d = 0;

    app.require_subcommand(1);

    auto* sweep_q = app.add_subcommand("sweep-q", "fix p, sweep q over a grid");
    sweep_q_flags.add_common(sweep_q);
    sweep_q->add_option("--regime", sweep_q_flags.regime, "easy|hard (sets |mu|)");

    auto* sweep_dist = app.add_subcommand("sweep-distance", "fix q, sweep |mu|/sigma");
    sweep_dist_flags.add_common(sweep_dist);
    std::string dist_grid;
    sweep_dist->add_option("--mu-norm-grid", dist_grid,
                           "comma-separated kappa = |mu|/sigma grid");

    auto* verify = app.add_subcommand("verify", "run a named verification suite");
    verify->add_option("--suite", verify_suite, "easy|hard|linear-equivalence|spectral")
        ->required();
    verify->add_option("--seed", verify_seed, "base seed");
    verify->add_option("--jobs", verify_jobs, "worker threads (0 = hardware)");

    auto* real = app.add_subcommand("real-data", "one-vs-all mean-shift run on a TSV graph");
    real->add_option("--features", feat_path, "features.tsv path")->required();
    real->add_option("--edges", edge_path, "edges.tsv path")->required();
    real->add_option("--labels", label_path, "labels.tsv path")->required();
    real->add_option("--masks", masks_path, "masks.tsv path (optional)");
    real->add_option("--class", target_class, "target class for one-vs-all");
    real->add_option("--mu-norm-grid", mu_grid, "comma-separated |mu| grid")->required();
    real->add_option("--models", real_models, "comma list of mlp-psi,gcn,linear");
    real->add_option("--out", real_out, "output CSV path");

    auto* dump = app.add_subcommand("dump-sample", "draw one CSBM sample and write TSVs");
    dump->add_option("--n", dump_cfg.n, "node count");
    dump->add_option("--d", dump_d, "feature dimension (default n/ln^2 n)");
    dump->add_option("--p", dump_cfg.p, "intra-class edge probability");
    dump->add_option("--q", dump_cfg.q, "inter-class edge probability");
    dump->add_option("--sigma", dump_cfg.sigma, "feature noise std");
    dump->add_option("--seed", dump_cfg.base_seed, "seed (stream 0)");
    dump->add_option("--regime", dump_regime, "easy|hard (sets |mu|)");
    dump->add_flag("--force-balanced", dump_cfg.force_balanced, "force balanced labels");
    dump->add_option("--dump-dir", dump_dir, "output directory")->required();

    app.parse(argc, argv);

    if (sweep_q->parsed()) {
        auto cfg = sweep_q_flags.finalize();
        require_out(sweep_q_flags.out_path);
        const auto regime = sweep_q_flags.regime == "easy" ? gatlab::SweepRegime::easy
                            : sweep_q_flags.regime == "hard"
                                ? gatlab::SweepRegime::hard
                                : throw CLI::ValidationError("--regime", "expected easy|hard");
        const auto records = gatlab::run_vary_q_sweep(cfg, regime);
        gatlab::write_records_csv(records, sweep_q_flags.out_path);
        std::fprintf(stderr, "wrote %zu records to %s\n", records.size(),
                     sweep_q_flags.out_path.c_str());
        return 0;
    }
    if (sweep_dist->parsed()) {
        auto cfg = sweep_dist_flags.finalize();
        if (!dist_grid.empty()) cfg.distance_grid = parse_real_list(dist_grid);
        require_out(sweep_dist_flags.out_path);
        const auto records = gatlab::run_vary_distance_sweep(cfg);
        gatlab::write_records_csv(records, sweep_dist_flags.out_path);
        std::fprintf(stderr, "wrote %zu records to %s\n", records.size(),
                     sweep_dist_flags.out_path.c_str());
        return 0;
    }
    if (verify->parsed()) {
        const auto report = gatlab::run_verification_suite(verify_suite, verify_seed, verify_jobs);
        std::fputs(report.to_text().c_str(), stdout);
        return report.all_pass() ? 0 : 2;
    }
    if (real->parsed()) {
        std::optional<std::filesystem::path> masks;
        if (!masks_path.empty()) masks = masks_path;
        const auto graph = gatlab::load_external_graph(feat_path, edge_path, label_path, masks);
        gatlab::Vec zero(graph.d, 0.0);
        const auto task = gatlab::one_vs_all_mean_shift(graph, target_class, zero);
        std::vector<std::string> model_list = real_models.empty()
                                                  ? std::vector<std::string>{"mlp-psi", "gcn",
                                                                             "linear"}
                                                  : split_commas(real_models);
        const auto records =
            gatlab::evaluate_real_task(task, model_list, parse_real_list(mu_grid));
        require_out(real_out);
        gatlab::write_records_csv(records, real_out);
        std::fprintf(stderr, "wrote %zu records to %s\n", records.size(), real_out.c_str());
        return 0;
    }
    if (dump->parsed()) {
        const int d = dump_d > 0 ? dump_d : gatlab::default_dimension(dump_cfg.n);
        const auto regime = dump_regime == "easy" ? gatlab::SweepRegime::easy
                            : dump_regime == "hard"
                                ? gatlab::SweepRegime::hard
                                : throw CLI::ValidationError("--regime", "expected easy|hard");
        const double coord = gatlab::regime_mu_coordinate(regime, dump_cfg.n, d, dump_cfg.sigma);
        gatlab::CsbmParams params{dump_cfg.n,     d,
                                  dump_cfg.p,     dump_cfg.q,
                                  gatlab::Vec(d, coord), dump_cfg.sigma,
                                  dump_cfg.force_balanced};
        gatlab::RngStream rng(dump_cfg.base_seed, 0);
        const auto sample = gatlab::sample_csbm(params, rng);
        gatlab::dump_sample_tsv(sample, dump_dir);
        std::fprintf(stderr, "wrote sample (n=%d, d=%d, %lld edges) to %s\n", sample.n, sample.d,
                     static_cast<long long>(sample.edge_count()), dump_dir.c_str());
        return 0;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CSBM graph-attention laboratory"};
    try {
        return dispatch(app, argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp")
            return app.exit(e);
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const gatlab::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 3;
    } catch (const gatlab::ParseError& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

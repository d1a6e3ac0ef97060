#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gatlab/attention.hpp"
#include "gatlab/common.hpp"
#include "gatlab/csbm.hpp"
#include "gatlab/experiments.hpp"
#include "gatlab/metrics.hpp"

namespace gatlab {

enum class SplitTag { train, val, test };

/// A graph ingested from the neutral TSV triple (features, edges, labels),
/// optionally with per-node split masks. The stored edge list has no
/// duplicates and no self-loops; self-inclusion happens when neighborhoods
/// are built for evaluation.
struct ExternalGraph {
    int n = 0;
    int d = 0;
    Vec features;  // n x d row-major
    std::vector<std::pair<std::int32_t, std::int32_t>> edges;  // u < v
    std::vector<int> labels;  // arbitrary integer classes
    std::vector<SplitTag> masks;  // empty when no masks file was given

    std::span<const double> row(int i) const {
        return std::span<const double>(features).subspan(static_cast<std::size_t>(i) * d, d);
    }
};

namespace detail {

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::FILE* f = std::fopen(path.string().c_str(), "rb");
    if (!f) throw IoError("cannot open for reading: " + path.string());
    std::string content;
    char buf[1 << 14];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, f)) > 0) content.append(buf, got);
    std::fclose(f);
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < content.size()) {
        std::size_t end = content.find('\n', start);
        if (end == std::string::npos) end = content.size();
        std::string line = content.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(std::move(line));
        start = end + 1;
    }
    return lines;
}

inline std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t end = line.find('\t', start);
        if (end == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, end - start));
        start = end + 1;
    }
}

inline long parse_int_field(const std::string& s, const char* what, const std::string& file,
                            int line_no) {
    std::size_t pos = 0;
    long v = 0;
    try {
        v = std::stol(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != s.size() || s.empty())
        throw ParseError(file + ": bad " + std::string(what) + " at line " +
                         std::to_string(line_no));
    return v;
}

inline double parse_real_field(const std::string& s, const std::string& file, int line_no) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != s.size() || s.empty())
        throw ParseError(file + ": bad real at line " + std::to_string(line_no));
    return v;
}

}  // namespace detail

/// Loads and validates the TSV triple. Node ids must cover 0..n-1 in the
/// features file; edges are normalized to u < v and rejected on duplicates or
/// self-loops; every error names its line.
inline ExternalGraph load_external_graph(const std::filesystem::path& features_path,
                                         const std::filesystem::path& edges_path,
                                         const std::filesystem::path& labels_path,
                                         const std::optional<std::filesystem::path>& masks_path =
                                             std::nullopt) {
    ExternalGraph g;

    const auto feature_lines = detail::read_lines(features_path);
    const std::string fname = features_path.string();
    if (feature_lines.empty()) throw ParseError(fname + ": no feature rows");
    g.n = static_cast<int>(feature_lines.size());
    std::vector<bool> seen(g.n, false);
    for (int ln = 0; ln < g.n; ++ln) {
        const auto fields = detail::split_tabs(feature_lines[ln]);
        if (fields.size() < 2)
            throw ParseError(fname + ": ragged row at line " + std::to_string(ln + 1));
        if (g.d == 0) {
            g.d = static_cast<int>(fields.size()) - 1;
            g.features.assign(static_cast<std::size_t>(g.n) * g.d, 0.0);
        }
        if (static_cast<int>(fields.size()) - 1 != g.d)
            throw ParseError(fname + ": ragged row at line " + std::to_string(ln + 1));
        const long id = detail::parse_int_field(fields[0], "node id", fname, ln + 1);
        if (id < 0 || id >= g.n)
            throw ParseError(fname + ": unknown node id " + std::to_string(id) + " at line " +
                             std::to_string(ln + 1));
        if (seen[id])
            throw ParseError(fname + ": duplicate node id at line " + std::to_string(ln + 1));
        seen[id] = true;
        for (int k = 0; k < g.d; ++k)
            g.features[static_cast<std::size_t>(id) * g.d + k] =
                detail::parse_real_field(fields[k + 1], fname, ln + 1);
    }

    const auto edge_lines = detail::read_lines(edges_path);
    const std::string ename = edges_path.string();
    std::set<std::pair<std::int32_t, std::int32_t>> dedup;
    for (std::size_t ln = 0; ln < edge_lines.size(); ++ln) {
        const auto fields = detail::split_tabs(edge_lines[ln]);
        if (fields.size() != 2)
            throw ParseError(ename + ": bad edge row at line " + std::to_string(ln + 1));
        long u = detail::parse_int_field(fields[0], "node id", ename, static_cast<int>(ln + 1));
        long v = detail::parse_int_field(fields[1], "node id", ename, static_cast<int>(ln + 1));
        if (u < 0 || u >= g.n || v < 0 || v >= g.n)
            throw ParseError(ename + ": unknown node id at line " + std::to_string(ln + 1));
        if (u == v)
            throw ParseError(ename + ": self-loop at line " + std::to_string(ln + 1));
        if (u > v) std::swap(u, v);
        const auto edge = std::make_pair(static_cast<std::int32_t>(u),
                                         static_cast<std::int32_t>(v));
        if (!dedup.insert(edge).second)
            throw ParseError(ename + ": duplicate edge at line " + std::to_string(ln + 1));
        g.edges.push_back(edge);
    }
    std::sort(g.edges.begin(), g.edges.end());

    const auto label_lines = detail::read_lines(labels_path);
    const std::string lname = labels_path.string();
    g.labels.assign(g.n, 0);
    std::vector<bool> labeled(g.n, false);
    for (std::size_t ln = 0; ln < label_lines.size(); ++ln) {
        const auto fields = detail::split_tabs(label_lines[ln]);
        if (fields.size() != 2)
            throw ParseError(lname + ": bad label row at line " + std::to_string(ln + 1));
        const long id =
            detail::parse_int_field(fields[0], "node id", lname, static_cast<int>(ln + 1));
        if (id < 0 || id >= g.n)
            throw ParseError(lname + ": unknown node id at line " + std::to_string(ln + 1));
        if (labeled[id])
            throw ParseError(lname + ": duplicate label at line " + std::to_string(ln + 1));
        labeled[id] = true;
        g.labels[id] = static_cast<int>(
            detail::parse_int_field(fields[1], "label", lname, static_cast<int>(ln + 1)));
    }
    for (int i = 0; i < g.n; ++i)
        if (!labeled[i]) throw ParseError(lname + ": missing label for node " + std::to_string(i));

    if (masks_path) {
        const auto mask_lines = detail::read_lines(*masks_path);
        const std::string mname = masks_path->string();
        g.masks.assign(g.n, SplitTag::train);
        std::vector<bool> masked(g.n, false);
        for (std::size_t ln = 0; ln < mask_lines.size(); ++ln) {
            const auto fields = detail::split_tabs(mask_lines[ln]);
            if (fields.size() != 2)
                throw ParseError(mname + ": bad mask row at line " + std::to_string(ln + 1));
            const long id =
                detail::parse_int_field(fields[0], "node id", mname, static_cast<int>(ln + 1));
            if (id < 0 || id >= g.n)
                throw ParseError(mname + ": unknown node id at line " + std::to_string(ln + 1));
            SplitTag tag;
            if (fields[1] == "train") tag = SplitTag::train;
            else if (fields[1] == "val") tag = SplitTag::val;
            else if (fields[1] == "test") tag = SplitTag::test;
            else
                throw ParseError(mname + ": bad split tag at line " + std::to_string(ln + 1));
            if (masked[id])
                throw ParseError(mname + ": duplicate mask at line " + std::to_string(ln + 1));
            masked[id] = true;
            g.masks[id] = tag;
        }
        for (int i = 0; i < g.n; ++i)
            if (!masked[i])
                throw ParseError(mname + ": missing mask for node " + std::to_string(i));
    }
    return g;
}

/// One-vs-all task after the mean-shift protocol: the target class is
/// recentered at +mu and everything else at -mu.
struct BinarizedTask {
    ExternalGraph graph;  // the raw graph (features untouched)
    int target_class = 0;
    std::vector<std::uint8_t> binary_labels;
    Vec shifted_features;  // n x d
    Vec mu_applied;
};

inline BinarizedTask one_vs_all_mean_shift(const ExternalGraph& graph, int target_class,
                                           std::span<const double> mu) {
    if (static_cast<int>(mu.size()) != graph.d)
        throw std::invalid_argument("one_vs_all_mean_shift: mu dimension != d");
    BinarizedTask task;
    task.graph = graph;
    task.target_class = target_class;
    task.mu_applied.assign(mu.begin(), mu.end());
    task.binary_labels.resize(graph.n);
    std::int64_t target_count = 0;
    for (int i = 0; i < graph.n; ++i) {
        task.binary_labels[i] = graph.labels[i] == target_class ? 1 : 0;
        target_count += task.binary_labels[i];
    }
    if (target_count == 0)
        throw std::domain_error("one_vs_all_mean_shift: empty target class " +
                                std::to_string(target_class));
    if (target_count == graph.n)
        throw std::domain_error("one_vs_all_mean_shift: empty rest class");

    Vec mean_target(graph.d, 0.0), mean_rest(graph.d, 0.0);
    for (int i = 0; i < graph.n; ++i) {
        Vec& m = task.binary_labels[i] ? mean_target : mean_rest;
        const auto row = graph.row(i);
        for (int k = 0; k < graph.d; ++k) m[k] += row[k];
    }
    for (int k = 0; k < graph.d; ++k) {
        mean_target[k] /= static_cast<double>(target_count);
        mean_rest[k] /= static_cast<double>(graph.n - target_count);
    }

    task.shifted_features = graph.features;
    for (int i = 0; i < graph.n; ++i) {
        const Vec& m = task.binary_labels[i] ? mean_target : mean_rest;
        const double sign = task.binary_labels[i] ? 1.0 : -1.0;
        for (int k = 0; k < graph.d; ++k)
            task.shifted_features[static_cast<std::size_t>(i) * graph.d + k] +=
                sign * mu[k] - m[k];
    }
    return task;
}

/// Direction of the injected mean: the normalized difference of the raw
/// class means, or the first axis when the classes coincide.
inline Vec mean_shift_direction(const ExternalGraph& graph, int target_class) {
    std::int64_t target_count = 0;
    Vec diff(graph.d, 0.0), rest(graph.d, 0.0);
    for (int i = 0; i < graph.n; ++i) {
        const auto row = graph.row(i);
        if (graph.labels[i] == target_class) {
            ++target_count;
            for (int k = 0; k < graph.d; ++k) diff[k] += row[k];
        } else {
            for (int k = 0; k < graph.d; ++k) rest[k] += row[k];
        }
    }
    if (target_count == 0 || target_count == graph.n)
        throw std::domain_error("mean_shift_direction: degenerate class split");
    for (int k = 0; k < graph.d; ++k)
        diff[k] = diff[k] / target_count - rest[k] / (graph.n - target_count);
    if (norm(diff) < 1e-12) {
        Vec axis(graph.d, 0.0);
        axis[0] = 1.0;
        return axis;
    }
    return normalized(diff);
}

namespace detail {

/// Packs a binarized task into the sample layout the models consume.
inline CsbmSample task_to_sample(const BinarizedTask& task, const Vec& shifted) {
    CsbmSample s;
    s.n = task.graph.n;
    s.d = task.graph.d;
    s.labels = task.binary_labels;
    s.features = shifted;
    s.neighbors.assign(s.n, {});
    for (int i = 0; i < s.n; ++i) s.neighbors[i].push_back(i);
    for (const auto& [u, v] : task.graph.edges) {
        s.neighbors[u].push_back(v);
        s.neighbors[v].push_back(u);
    }
    s.degrees.resize(s.n);
    for (int i = 0; i < s.n; ++i) {
        auto& ni = s.neighbors[i];
        std::sort(ni.begin(), ni.end());
        s.degrees[i] = static_cast<std::int32_t>(ni.size()) - 1;
    }
    return s;
}

}  // namespace detail

/// Sweeps the injected mean norm on a real task: for each |mu| the features
/// are re-shifted from the raw matrix along the class-mean direction, then
/// the mu-ansatz models run and report metrics. With masks present, node and
/// edge metrics are restricted to non-training nodes; an all-train split
/// yields "skipped" markers. sweep_value in the records is |mu|.
inline std::vector<SweepRecord> evaluate_real_task(const BinarizedTask& task,
                                                   const std::vector<std::string>& model_names,
                                                   const std::vector<double>& mu_norm_grid) {
    if (mu_norm_grid.empty())
        throw std::invalid_argument("evaluate_real_task: empty mu norm grid");
    std::vector<ModelSpec> models;
    for (const auto& name : model_names) {
        const auto spec = parse_model(name);
        if (spec.kind != ModelSpec::Kind::mlp_psi && spec.kind != ModelSpec::Kind::gcn &&
            spec.kind != ModelSpec::Kind::linear)
            throw std::invalid_argument("evaluate_real_task: unsupported model " + name);
        models.push_back(spec);
    }

    const Vec direction = mean_shift_direction(task.graph, task.target_class);
    const bool has_masks = !task.graph.masks.empty();
    std::vector<std::uint8_t> eval_node(task.graph.n, 1);
    int eval_count = task.graph.n;
    if (has_masks) {
        eval_count = 0;
        for (int i = 0; i < task.graph.n; ++i) {
            eval_node[i] = task.graph.masks[i] != SplitTag::train ? 1 : 0;
            eval_count += eval_node[i];
        }
    }

    std::vector<SweepRecord> records;
    for (const double mu_norm : mu_norm_grid) {
        Vec mu(direction);
        for (double& x : mu) x *= mu_norm;
        const auto shifted_task = one_vs_all_mean_shift(task.graph, task.target_class, mu);
        const auto sample = detail::task_to_sample(shifted_task, shifted_task.shifted_features);

        for (const auto& model : models) {
            if (eval_count == 0) {
                detail::emit(records, mu_norm, 0, model.name, "skipped", 1.0);
                continue;
            }
            if (!(mu_norm > 0.0)) {
                detail::emit(records, mu_norm, 0, model.name, "skipped", 1.0);
                continue;
            }

            std::vector<std::uint8_t> pred;
            if (model.kind == ModelSpec::Kind::linear) {
                pred.resize(sample.n);
                for (int i = 0; i < sample.n; ++i)
                    pred[i] = static_cast<std::uint8_t>(bayes_node_classify(sample.row(i), mu));
            } else if (model.kind == ModelSpec::Kind::gcn) {
                pred = sign_decision(simple_graph_convolution(sample, direction));
            } else {
                const auto psi = make_mlp_psi_params(mu, 1.0);
                const auto score = make_mlp_psi_score(sample, psi);
                const auto field = build_attention_field(sample, score);
                pred = sign_decision(attention_convolution(sample, field, psi.w_tilde));

                // edge metrics and gamma statistics over the evaluated part
                std::int64_t edge_total = 0, edge_ok = 0;
                detail::Moments intra, inter;
                for (int i = 0; i < sample.n; ++i) {
                    const auto& ni = sample.neighbors[i];
                    const auto& g = field.gamma[i];
                    for (std::size_t k = 0; k < ni.size(); ++k) {
                        const auto j = ni[k];
                        if (j == i) continue;
                        if (!eval_node[i] || !eval_node[j]) continue;
                        const bool same = sample.labels[i] == sample.labels[j];
                        if (same)
                            intra.add(g[k]);
                        else
                            inter.add(g[k]);
                        if (j > i) {
                            ++edge_total;
                            const double v = score(i, j);
                            if (same ? v > 0.0 : v < 0.0) ++edge_ok;
                        }
                    }
                }
                if (edge_total > 0)
                    detail::emit(records, mu_norm, 0, model.name, "edge_acc",
                                 static_cast<double>(edge_ok) / edge_total);
                if (intra.count > 0) {
                    detail::emit(records, mu_norm, 0, model.name, "gamma_intra_mean",
                                 intra.mean());
                    detail::emit(records, mu_norm, 0, model.name, "gamma_intra_std",
                                 intra.stddev());
                }
                if (inter.count > 0) {
                    detail::emit(records, mu_norm, 0, model.name, "gamma_inter_mean",
                                 inter.mean());
                    detail::emit(records, mu_norm, 0, model.name, "gamma_inter_std",
                                 inter.stddev());
                }
                const auto gs = gamma_stats(sample, uniform_attention_field(sample), 0.0, 0.0);
                detail::emit(records, mu_norm, 0, model.name, "gamma_uniform_ref",
                             gs.ref_uniform_mean);
            }

            std::size_t match = 0;
            for (int i = 0; i < sample.n; ++i)
                if (eval_node[i] && pred[i] == sample.labels[i]) ++match;
            detail::emit(records, mu_norm, 0, model.name, "node_acc",
                         static_cast<double>(match) / eval_count);
        }
    }
    detail::sort_records(records);
    return records;
}

}  // namespace gatlab

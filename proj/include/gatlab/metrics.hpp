#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "gatlab/attention.hpp"
#include "gatlab/common.hpp"
#include "gatlab/csbm.hpp"
#include "gatlab/normal.hpp"

namespace gatlab {

/// Accuracy of an edge scorer over the realized edges, split by true edge
/// class. Self-pairs never count. Per-class fields are absent when that class
/// has no edges; edge_metrics itself returns nullopt for an edgeless graph.
struct EdgeMetrics {
    std::optional<double> intra_accuracy;
    std::optional<double> inter_accuracy;
    double overall_accuracy = 0.0;
    std::optional<double> inter_misclassified_fraction;  // 1 - inter_accuracy
    std::int64_t intra_edges = 0;
    std::int64_t inter_edges = 0;
};

/// orientation +1 reads a positive score as intra, -1 as inter. A zero score
/// is an error for both classes (separation demands strict opposite signs).
inline std::optional<EdgeMetrics> edge_metrics(const CsbmSample& sample, const ScoreFn& score,
                                               int orientation) {
    if (orientation != 1 && orientation != -1)
        throw std::invalid_argument("edge_metrics: orientation must be +1 or -1");
    EdgeMetrics m;
    std::int64_t intra_ok = 0, inter_ok = 0;
    for (int i = 0; i < sample.n; ++i) {
        for (auto j : sample.neighbors[i]) {
            if (j <= i) continue;  // undirected edges once, self-pairs excluded
            const double v = orientation * score(i, j);
            const bool intra = sample.labels[i] == sample.labels[j];
            if (intra) {
                ++m.intra_edges;
                if (v > 0.0) ++intra_ok;
            } else {
                ++m.inter_edges;
                if (v < 0.0) ++inter_ok;
            }
        }
    }
    if (m.intra_edges + m.inter_edges == 0) return std::nullopt;
    if (m.intra_edges > 0) m.intra_accuracy = static_cast<double>(intra_ok) / m.intra_edges;
    if (m.inter_edges > 0) {
        m.inter_accuracy = static_cast<double>(inter_ok) / m.inter_edges;
        m.inter_misclassified_fraction = 1.0 - *m.inter_accuracy;
    }
    m.overall_accuracy =
        static_cast<double>(intra_ok + inter_ok) / (m.intra_edges + m.inter_edges);
    return m;
}

/// Match fraction between prediction and truth; with up_to_flip the global
/// complement counts too (for methods whose output has no fixed orientation).
inline double node_accuracy(const std::vector<std::uint8_t>& pred,
                            const std::vector<std::uint8_t>& truth, bool up_to_flip) {
    if (pred.size() != truth.size())
        throw std::invalid_argument("node_accuracy: length mismatch");
    if (pred.empty()) throw std::invalid_argument("node_accuracy: empty input");
    std::size_t match = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) match += (pred[i] == truth[i]) ? 1 : 0;
    const double acc = static_cast<double>(match) / pred.size();
    return up_to_flip ? std::max(acc, 1.0 - acc) : acc;
}

/// Moments of the coefficients over off-self directed pairs, split intra vs
/// inter, next to the theoretical references 2/(np), 2/(nq) and the uniform
/// 1/|N_i| statistics over the same pairs. Intra/inter fields are absent when
/// that pair class is empty; the np/nq references are absent when p or q is
/// not a positive known rate.
struct GammaStats {
    std::optional<double> intra_mean, intra_std;
    std::optional<double> inter_mean, inter_std;
    std::optional<double> ref_intra;  // 2/(np)
    std::optional<double> ref_inter;  // 2/(nq)
    double ref_uniform_mean = 0.0;
    double ref_uniform_std = 0.0;
};

namespace detail {

// Welford accumulation; exact zero spread for constant inputs.
struct Moments {
    std::int64_t count = 0;
    double mu = 0.0, m2 = 0.0;
    void add(double v) {
        ++count;
        const double delta = v - mu;
        mu += delta / static_cast<double>(count);
        m2 += delta * (v - mu);
    }
    double mean() const { return mu; }
    double stddev() const { return std::sqrt(std::max(0.0, m2 / static_cast<double>(count))); }
};

}  // namespace detail

/// Pooled over one or more coefficient fields (multi-head models contribute
/// every head's coefficients to the same moments).
inline GammaStats gamma_stats(const CsbmSample& sample,
                              std::span<const AttentionField> fields, double p, double q) {
    detail::Moments intra, inter, uniform;
    for (const auto& field : fields) {
        for (int i = 0; i < sample.n; ++i) {
            const auto& ni = sample.neighbors[i];
            const auto& g = field.gamma[i];
            const double u = 1.0 / static_cast<double>(ni.size());
            for (std::size_t k = 0; k < ni.size(); ++k) {
                const auto j = ni[k];
                if (j == i) continue;
                uniform.add(u);
                if (sample.labels[i] == sample.labels[j])
                    intra.add(g[k]);
                else
                    inter.add(g[k]);
            }
        }
    }
    GammaStats s;
    if (intra.count > 0) {
        s.intra_mean = intra.mean();
        s.intra_std = intra.stddev();
    }
    if (inter.count > 0) {
        s.inter_mean = inter.mean();
        s.inter_std = inter.stddev();
    }
    if (p > 0.0) s.ref_intra = 2.0 / (sample.n * p);
    if (q > 0.0) s.ref_inter = 2.0 / (sample.n * q);
    if (uniform.count > 0) {
        s.ref_uniform_mean = uniform.mean();
        s.ref_uniform_std = uniform.stddev();
    }
    return s;
}

inline GammaStats gamma_stats(const CsbmSample& sample, const AttentionField& field, double p,
                              double q) {
    return gamma_stats(sample, std::span<const AttentionField>(&field, 1), p, q);
}

/// Fraction of nodes whose coefficients are near-uniform: at least
/// neighbor_fraction of N_i (self excluded) has gamma_ij |N_i| inside
/// [1/band, band].
inline double gamma_collapse_node_fraction(const CsbmSample& sample, const AttentionField& field,
                                           double band = 4.0, double neighbor_fraction = 0.9) {
    int good_nodes = 0, counted_nodes = 0;
    for (int i = 0; i < sample.n; ++i) {
        const auto& ni = sample.neighbors[i];
        const auto& g = field.gamma[i];
        const double size = static_cast<double>(ni.size());
        std::int64_t in_band = 0, total = 0;
        for (std::size_t k = 0; k < ni.size(); ++k) {
            if (ni[k] == i) continue;
            ++total;
            const double scaled = g[k] * size;
            if (scaled >= 1.0 / band && scaled <= band) ++in_band;
        }
        if (total == 0) continue;  // isolated node has no off-self pairs
        ++counted_nodes;
        if (static_cast<double>(in_band) >= neighbor_fraction * static_cast<double>(total))
            ++good_nodes;
    }
    if (counted_nodes == 0) return 1.0;
    return static_cast<double>(good_nodes) / counted_nodes;
}

/// True iff the observed inter-class misclassification reaches the
/// 2 Phi_c(kappa)^2 floor minus slack.
inline bool hard_regime_floor_check(double kappa, const EdgeMetrics& em, double slack) {
    if (!(slack >= 0.0)) throw std::invalid_argument("hard_regime_floor_check: negative slack");
    if (!em.inter_misclassified_fraction)
        throw std::invalid_argument("hard_regime_floor_check: no inter-class edges");
    const double phic = std_normal_cdf_complement(kappa);
    return *em.inter_misclassified_fraction >= 2.0 * phic * phic - slack;
}

inline double hard_regime_floor(double kappa) {
    const double phic = std_normal_cdf_complement(kappa);
    return 2.0 * phic * phic;
}

enum class Regime { perfect, almost_perfect, partial };

/// kappa = |mu|/sigma against the recovery thresholds: perfect at
/// kappa >= sqrt(2 log n) (inclusive), almost-perfect above a configured
/// proxy for "grows without bound" (default 3), partial otherwise.
struct RegimeLabel {
    double kappa = 0.0;
    Regime regime = Regime::partial;
};

inline RegimeLabel regime_label(double kappa, int n, double almost_perfect_threshold = 3.0) {
    if (n < 2) throw std::invalid_argument("regime_label: n must be >= 2");
    RegimeLabel out;
    out.kappa = kappa;
    const double perfect_threshold = std::sqrt(2.0 * std::log(static_cast<double>(n)));
    if (kappa >= perfect_threshold)
        out.regime = Regime::perfect;
    else if (kappa >= almost_perfect_threshold)
        out.regime = Regime::almost_perfect;
    else
        out.regime = Regime::partial;
    return out;
}

}  // namespace gatlab

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gatlab/common.hpp"
#include "gatlab/rng.hpp"

namespace gatlab {

/// Two-block model: intra-class edges Ber(p), inter-class Ber(q), features
/// N((2*label - 1) * mu, sigma^2 I).
struct CsbmParams {
    int n = 0;
    int d = 0;
    double p = 0.0;
    double q = 0.0;
    Vec mu;            // class-1 mean; class 0 gets -mu
    double sigma = 1.0;
    bool force_balanced = false;  // variance-reduction option, off by default

    void validate() const {
        if (n < 2) throw std::invalid_argument("CsbmParams: n must be >= 2");
        if (d < 1) throw std::invalid_argument("CsbmParams: d must be >= 1");
        if (static_cast<int>(mu.size()) != d)
            throw std::invalid_argument("CsbmParams: mu dimension != d");
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("CsbmParams: p outside [0,1]");
        if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("CsbmParams: q outside [0,1]");
        if (!(sigma > 0.0)) throw std::invalid_argument("CsbmParams: sigma must be > 0");
    }
};

/// One draw (A, X, labels). The adjacency is stored as per-node sorted
/// neighbor lists that always include the node itself; A has zero diagonal,
/// so |N_i| = degrees[i] + 1.
struct CsbmSample {
    int n = 0;
    int d = 0;
    std::vector<std::uint8_t> labels;               // n entries in {0,1}
    Vec features;                                   // n x d row-major
    std::vector<std::vector<std::int32_t>> neighbors;  // sorted, self-inclusive
    std::vector<std::int32_t> degrees;              // row sums of A (self excluded)

    std::span<const double> row(int i) const {
        return std::span<const double>(features).subspan(static_cast<std::size_t>(i) * d, d);
    }

    bool has_edge(int i, int j) const {
        const auto& ni = neighbors[i];
        return i != j && std::binary_search(ni.begin(), ni.end(), j);
    }

    std::int64_t edge_count() const {
        std::int64_t m = 0;
        for (auto deg : degrees) m += deg;
        return m / 2;
    }
};

/// Draw order is fixed (labels, then features, then the i<j edge pairs) so a
/// given (seed, stream) reproduces the same sample, and two samples drawn from
/// equal streams that differ only in p, q share labels, features and edge
/// uniforms (common random numbers across sweep points).
inline CsbmSample sample_csbm(const CsbmParams& params, RngStream& rng) {
    params.validate();
    const int n = params.n;

    CsbmSample s;
    s.n = n;
    s.d = params.d;

    s.labels.resize(n);
    if (params.force_balanced) {
        std::vector<std::int32_t> order(n);
        for (int i = 0; i < n; ++i) order[i] = i;
        for (int i = n - 1; i > 0; --i) {
            const auto j = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
            std::swap(order[i], order[j]);
        }
        for (int i = 0; i < n; ++i) s.labels[order[i]] = i < (n + 1) / 2 ? 1 : 0;
    } else {
        for (int i = 0; i < n; ++i) s.labels[i] = rng.bernoulli(0.5) ? 1 : 0;
    }

    s.features.resize(static_cast<std::size_t>(n) * params.d);
    Vec mean(params.d);
    for (int i = 0; i < n; ++i) {
        const double sign = s.labels[i] ? 1.0 : -1.0;
        for (int k = 0; k < params.d; ++k) mean[k] = sign * params.mu[k];
        const Vec x = sample_gaussian_vector(mean, params.sigma, rng);
        std::copy(x.begin(), x.end(), s.features.begin() + static_cast<std::size_t>(i) * params.d);
    }

    // all i<j pairs drawn explicitly; keeps per-pair draws reproducible
    s.neighbors.assign(n, {});
    for (int i = 0; i < n; ++i) s.neighbors[i].push_back(i);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double prob = s.labels[i] == s.labels[j] ? params.p : params.q;
            if (rng.next_double() < prob) {
                s.neighbors[i].push_back(j);
                s.neighbors[j].push_back(i);
            }
        }
    }
    s.degrees.resize(n);
    for (int i = 0; i < n; ++i) {
        auto& ni = s.neighbors[i];
        std::sort(ni.begin(), ni.end());
        s.degrees[i] = static_cast<std::int32_t>(ni.size()) - 1;
    }
    return s;
}

/// N_i, always containing i itself.
inline const std::vector<std::int32_t>& neighborhood(const CsbmSample& sample, int i) {
    if (i < 0 || i >= sample.n)
        throw std::out_of_range("neighborhood: node index " + std::to_string(i) +
                                " outside [0," + std::to_string(sample.n) + ")");
    return sample.neighbors[i];
}

/// Diagnostics for the concentration events the analysis conditions on.
/// Each flag is true iff the measured deviation sits inside its band; the
/// deviations are reported in band-normalized units. E1's band constant is a
/// chosen value (matching the explicit constant of E2/E3), not given by the
/// event definition itself.
struct EventReport {
    static constexpr double kBandConstant = 10.0;

    bool e1_class_balance = false;
    double e1_deviation = 0.0;  // max_k ||C_k| - n/2| / sqrt(n log n)

    bool e2_degree_concentration = false;
    double e2_deviation = 0.0;  // max_i |D_ii / (n(p+q)/2) - 1|

    bool e3_neighbor_split = false;
    double e3_deviation = 0.0;  // worst relative deviation of |C_k cap N_i|

    bool e4_feature_projection = false;
    std::optional<double> e4_deviation;  // max_i |proj - mean| / (sigma sqrt(log n)); absent if mu = 0
};

inline EventReport check_high_prob_events(const CsbmSample& sample, const CsbmParams& params) {
    const int n = sample.n;
    const double logn = std::log(static_cast<double>(n));
    const double band = EventReport::kBandConstant / std::sqrt(logn);
    EventReport rep;

    std::int64_t c1 = 0;
    for (auto l : sample.labels) c1 += l;
    const std::int64_t c0 = n - c1;
    const double half = n / 2.0;
    rep.e1_deviation = std::max(std::fabs(c0 - half), std::fabs(c1 - half)) / std::sqrt(n * logn);
    rep.e1_class_balance = rep.e1_deviation <= EventReport::kBandConstant;

    const double mean_deg = n * (params.p + params.q) / 2.0;
    double worst2 = 0.0;
    for (int i = 0; i < n; ++i)
        worst2 = std::max(worst2, std::fabs(sample.degrees[i] / mean_deg - 1.0));
    rep.e2_deviation = worst2;
    rep.e2_degree_concentration = worst2 <= band;

    double worst3 = 0.0;
    for (int i = 0; i < n; ++i) {
        std::int64_t in_c1 = 0;
        for (auto j : sample.neighbors[i]) in_c1 += sample.labels[j];
        const std::int64_t in_c0 = static_cast<std::int64_t>(sample.neighbors[i].size()) - in_c1;
        const double dii = sample.degrees[i];
        const double frac_same = params.p / (params.p + params.q);
        const double frac_other = params.q / (params.p + params.q);
        const double exp_c0 = dii * (sample.labels[i] ? frac_other : frac_same);
        const double exp_c1 = dii * (sample.labels[i] ? frac_same : frac_other);
        if (exp_c0 > 0.0) worst3 = std::max(worst3, std::fabs(in_c0 / exp_c0 - 1.0));
        if (exp_c1 > 0.0) worst3 = std::max(worst3, std::fabs(in_c1 / exp_c1 - 1.0));
    }
    rep.e3_deviation = worst3;
    rep.e3_neighbor_split = worst3 <= band;

    const double mu_norm = norm(params.mu);
    if (mu_norm > 0.0) {
        const Vec w = normalized(params.mu);
        double worst4 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double proj = dot(sample.row(i), w);
            const double expect = (sample.labels[i] ? 1.0 : -1.0) * mu_norm;
            worst4 = std::max(worst4, std::fabs(proj - expect));
        }
        rep.e4_deviation = worst4 / (params.sigma * std::sqrt(logn));
        rep.e4_feature_projection = *rep.e4_deviation <= EventReport::kBandConstant;
    }
    return rep;
}

namespace detail {

inline std::FILE* open_or_throw(const std::filesystem::path& path) {
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    if (!f) throw IoError("cannot open for writing: " + path.string());
    return f;
}

}  // namespace detail

/// Writes features.tsv / edges.tsv / labels.tsv into dir. Features use 17
/// significant digits so a reload reproduces the doubles exactly.
inline void dump_sample_tsv(const CsbmSample& sample, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);

    std::FILE* f = detail::open_or_throw(dir / "features.tsv");
    for (int i = 0; i < sample.n; ++i) {
        std::fprintf(f, "%d", i);
        for (int k = 0; k < sample.d; ++k)
            std::fprintf(f, "\t%.17g", sample.features[static_cast<std::size_t>(i) * sample.d + k]);
        std::fputc('\n', f);
    }
    std::fclose(f);

    f = detail::open_or_throw(dir / "edges.tsv");
    for (int i = 0; i < sample.n; ++i)
        for (auto j : sample.neighbors[i])
            if (j > i) std::fprintf(f, "%d\t%d\n", i, j);
    std::fclose(f);

    f = detail::open_or_throw(dir / "labels.tsv");
    for (int i = 0; i < sample.n; ++i)
        std::fprintf(f, "%d\t%d\n", i, static_cast<int>(sample.labels[i]));
    std::fclose(f);
}

}  // namespace gatlab

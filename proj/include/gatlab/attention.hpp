#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gatlab/common.hpp"
#include "gatlab/csbm.hpp"

namespace gatlab {

inline double leaky_relu(double x, double slope) { return x >= 0.0 ? x : slope * x; }

/// Two-layer MLP attention: score = r^T LeakyRelu(S [w~^T x_i, w~^T x_j]^T)
/// with the fixed 4x2 matrix S and r = R (1, 1, -1, -1). With sign_flip the
/// score is negated (the variant used when q exceeds p).
struct MlpPsiParams {
    Vec w_tilde;            // unit vector, mu / |mu|
    double scale_r = 1.0;   // R > 0
    double leaky_slope = 0.2;
    bool sign_flip = false;

    void validate() const {
        if (!(scale_r > 0.0)) throw std::invalid_argument("MlpPsiParams: scale_r must be > 0");
        if (!(leaky_slope >= 0.0 && leaky_slope < 1.0))
            throw std::invalid_argument("MlpPsiParams: leaky_slope outside [0,1)");
        if (std::fabs(norm(w_tilde) - 1.0) > 1e-9)
            throw std::invalid_argument("MlpPsiParams: w_tilde is not a unit vector");
    }
};

inline MlpPsiParams make_mlp_psi_params(std::span<const double> mu, double scale_r,
                                        double leaky_slope = 0.2, bool sign_flip = false) {
    MlpPsiParams p;
    p.w_tilde = normalized(mu);
    p.scale_r = scale_r;
    p.leaky_slope = leaky_slope;
    p.sign_flip = sign_flip;
    p.validate();
    return p;
}

/// Closed-form evaluation on the pair of projections (s_i, s_j):
///   -2R(1-b) s_i                 if s_j <= -|s_i|
///    2R(1-b) sign(s_i) s_j       if -|s_i| < s_j < |s_i|
///    2R(1-b) s_i                 if s_j >= |s_i|
inline double mlp_psi_from_projections(double si, double sj, const MlpPsiParams& params) {
    const double c = 2.0 * params.scale_r * (1.0 - params.leaky_slope);
    const double a = std::fabs(si);
    double v;
    if (sj <= -a)
        v = -c * si;
    else if (sj >= a)
        v = c * si;
    else
        v = c * (si > 0.0 ? sj : -sj);
    return params.sign_flip ? -v : v;
}

inline double mlp_attention_score(std::span<const double> xi, std::span<const double> xj,
                                  const MlpPsiParams& params) {
    return mlp_psi_from_projections(dot(params.w_tilde, xi), dot(params.w_tilde, xj), params);
}

/// Literal four-unit network evaluation; reference route against which the
/// closed form is property-tested.
inline double mlp_attention_score_raw(std::span<const double> xi, std::span<const double> xj,
                                      const MlpPsiParams& params) {
    const double si = dot(params.w_tilde, xi);
    const double sj = dot(params.w_tilde, xj);
    static constexpr std::array<std::array<double, 2>, 4> kS{{{1, 1}, {-1, -1}, {1, -1}, {-1, 1}}};
    static constexpr std::array<double, 4> kRSign{1, 1, -1, -1};
    double v = 0.0;
    for (int u = 0; u < 4; ++u)
        v += params.scale_r * kRSign[u] *
             leaky_relu(kS[u][0] * si + kS[u][1] * sj, params.leaky_slope);
    return params.sign_flip ? -v : v;
}

/// Score at the class means: +-2R(1-b)|mu| for intra/inter pairs (before any
/// sign flip).
inline double psi_on_expected_means(const MlpPsiParams& params, std::span<const double> mu,
                                    bool same_class) {
    const double mu_norm = norm(mu);
    if (!(mu_norm > 0.0)) throw std::domain_error("psi_on_expected_means: zero mu");
    const double v = 2.0 * params.scale_r * (1.0 - params.leaky_slope) * mu_norm;
    const double signed_v = same_class ? v : -v;
    return params.sign_flip ? -signed_v : signed_v;
}

/// Single-layer head: LeakyRelu(a1 w^T x_i + a2 w^T x_j + b).
struct GatHeadParams {
    Vec w;
    std::array<double, 2> a{0.0, 0.0};
    double b = 0.0;
    double leaky_slope = 0.2;

    void validate() const {
        if (!(leaky_slope >= 0.0 && leaky_slope < 1.0))
            throw std::invalid_argument("GatHeadParams: leaky_slope outside [0,1)");
    }
};

inline double gat_single_layer_score(std::span<const double> xi, std::span<const double> xj,
                                     const GatHeadParams& head) {
    return leaky_relu(head.a[0] * dot(head.w, xi) + head.a[1] * dot(head.w, xj) + head.b,
                      head.leaky_slope);
}

/// The two-head construction with w = mu/|mu|: head 1 keeps intra-class edges
/// of class 1 (a = (1,1)/sqrt2, b = -(1/sqrt2) w^T mu), head 2 mirrors it for
/// class 0 (a2 = -a1, b2 = -b1).
inline std::pair<GatHeadParams, GatHeadParams> gat_ansatz_heads(std::span<const double> mu,
                                                                double leaky_slope = 0.2) {
    const double mu_norm = norm(mu);
    if (!(mu_norm > 0.0)) throw std::domain_error("gat_ansatz_heads: zero mu");
    constexpr double inv_sqrt2 = 0.70710678118654752440;
    GatHeadParams h1;
    h1.w = normalized(mu);
    h1.a = {inv_sqrt2, inv_sqrt2};
    h1.b = -inv_sqrt2 * dot(h1.w, mu);
    h1.leaky_slope = leaky_slope;
    GatHeadParams h2 = h1;
    h2.a = {-h1.a[0], -h1.a[1]};
    h2.b = -h1.b;
    return {h1, h2};
}

/// Label-oracle scorer: +-sign(p-q) t on intra/inter pairs; sign(0) is +1.
struct IdealizedPsiParams {
    double t = 0.0;
    double p = 0.0;
    double q = 0.0;
    const std::vector<std::uint8_t>* labels = nullptr;

    void validate() const {
        if (!(t >= 0.0)) throw std::invalid_argument("IdealizedPsiParams: t must be >= 0");
        if (!labels) throw std::invalid_argument("IdealizedPsiParams: labels missing");
    }
};

inline double idealized_score(int i, int j, const IdealizedPsiParams& params) {
    params.validate();
    const double orient = params.p >= params.q ? 1.0 : -1.0;
    const bool intra = (*params.labels)[i] == (*params.labels)[j];
    return (intra ? orient : -orient) * params.t;
}

/// Pairwise score over node indices; closures capture the sample they score.
using ScoreFn = std::function<double(std::int32_t, std::int32_t)>;

/// Precomputes the projections once so per-pair evaluation is O(1).
inline ScoreFn make_mlp_psi_score(const CsbmSample& sample, MlpPsiParams params) {
    params.validate();
    auto proj = std::make_shared<Vec>(sample.n);
    for (int i = 0; i < sample.n; ++i) (*proj)[i] = dot(params.w_tilde, sample.row(i));
    return [proj, params](std::int32_t i, std::int32_t j) {
        return mlp_psi_from_projections((*proj)[i], (*proj)[j], params);
    };
}

inline ScoreFn make_gat_head_score(const CsbmSample& sample, GatHeadParams head) {
    head.validate();
    auto proj = std::make_shared<Vec>(sample.n);
    for (int i = 0; i < sample.n; ++i) (*proj)[i] = dot(head.w, sample.row(i));
    return [proj, head](std::int32_t i, std::int32_t j) {
        return leaky_relu(head.a[0] * (*proj)[i] + head.a[1] * (*proj)[j] + head.b,
                          head.leaky_slope);
    };
}

inline ScoreFn make_idealized_score(const IdealizedPsiParams& params) {
    params.validate();
    return [params](std::int32_t i, std::int32_t j) { return idealized_score(i, j, params); };
}

/// Softmax coefficients gamma_ij over N_i. Values are positive and sum to 1
/// up to rounding; pairs whose score sits astronomically below the per-node
/// maximum underflow to +0.
struct AttentionField {
    std::vector<std::vector<double>> gamma;  // aligned with sample.neighbors
};

/// Coefficients for one node: exp(score(i,j)) normalized over N_i, with the
/// per-node maximum subtracted before exponentiation.
inline std::vector<double> attention_coefficients(const CsbmSample& sample, const ScoreFn& score,
                                                  int i) {
    const auto& ni = neighborhood(sample, i);
    std::vector<double> out(ni.size());
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < ni.size(); ++k) {
        const double v = score(i, ni[k]);
        if (!std::isfinite(v))
            throw std::domain_error("attention_coefficients: non-finite score at pair (" +
                                    std::to_string(i) + "," + std::to_string(ni[k]) + ")");
        out[k] = v;
        mx = std::max(mx, v);
    }
    double denom = 0.0;
    for (double& v : out) {
        v = std::exp(v - mx);
        denom += v;
    }
    for (double& v : out) v /= denom;
    return out;
}

inline AttentionField build_attention_field(const CsbmSample& sample, const ScoreFn& score) {
    AttentionField field;
    field.gamma.resize(sample.n);
    for (int i = 0; i < sample.n; ++i) field.gamma[i] = attention_coefficients(sample, score, i);
    return field;
}

inline AttentionField uniform_attention_field(const CsbmSample& sample) {
    AttentionField field;
    field.gamma.resize(sample.n);
    for (int i = 0; i < sample.n; ++i)
        field.gamma[i].assign(sample.neighbors[i].size(), 1.0 / sample.neighbors[i].size());
    return field;
}

/// Scalar per-node outputs h'_i (single feature channel, identity activation).
struct ConvolutionOutput {
    Vec h_prime;
};

/// h'_i = sum_{j in N_i} gamma_ij w^T X_j.
inline ConvolutionOutput attention_convolution(const CsbmSample& sample,
                                               const AttentionField& field,
                                               std::span<const double> w) {
    if (static_cast<int>(w.size()) != sample.d)
        throw std::invalid_argument("attention_convolution: w dimension != d");
    if (static_cast<int>(field.gamma.size()) != sample.n)
        throw std::invalid_argument("attention_convolution: field does not cover the sample");
    Vec proj(sample.n);
    for (int i = 0; i < sample.n; ++i) proj[i] = dot(w, sample.row(i));
    ConvolutionOutput out;
    out.h_prime.resize(sample.n);
    for (int i = 0; i < sample.n; ++i) {
        const auto& ni = sample.neighbors[i];
        const auto& g = field.gamma[i];
        if (g.size() != ni.size())
            throw std::invalid_argument("attention_convolution: field does not cover N_i of " +
                                        std::to_string(i));
        double acc = 0.0;
        for (std::size_t k = 0; k < ni.size(); ++k) acc += g[k] * proj[ni[k]];
        out.h_prime[i] = acc;
    }
    return out;
}

/// Arithmetic mean of the single-head outputs.
inline ConvolutionOutput multi_head_convolution(const CsbmSample& sample,
                                                std::span<const ScoreFn> heads,
                                                std::span<const double> w) {
    if (heads.empty()) throw std::invalid_argument("multi_head_convolution: empty head list");
    ConvolutionOutput out;
    out.h_prime.assign(sample.n, 0.0);
    for (const auto& head : heads) {
        const auto field = build_attention_field(sample, head);
        const auto h = attention_convolution(sample, field, w);
        for (int i = 0; i < sample.n; ++i) out.h_prime[i] += h.h_prime[i];
    }
    for (double& v : out.h_prime) v /= static_cast<double>(heads.size());
    return out;
}

/// Uniform 1/|N_i| averaging over the self-inclusive neighborhood.
inline ConvolutionOutput simple_graph_convolution(const CsbmSample& sample,
                                                  std::span<const double> w) {
    return attention_convolution(sample, uniform_attention_field(sample), w);
}

}  // namespace gatlab

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gatlab/attention.hpp"
#include "gatlab/csbm.hpp"
#include "gatlab/rng.hpp"

using gatlab::AttentionField;
using gatlab::CsbmParams;
using gatlab::CsbmSample;
using gatlab::MlpPsiParams;
using gatlab::RngStream;
using gatlab::Vec;

namespace {

MlpPsiParams unit_psi(double r = 1.0, double beta = 0.2, bool flip = false) {
    MlpPsiParams p;
    p.w_tilde = {1.0};
    p.scale_r = r;
    p.leaky_slope = beta;
    p.sign_flip = flip;
    return p;
}

CsbmSample tiny_sample(int n, double p, double q, double mu_coord, double sigma,
                       std::uint64_t seed = 1) {
    CsbmParams params{n, 1, p, q, Vec(1, mu_coord), sigma, false};
    RngStream rng(seed, 0);
    return gatlab::sample_csbm(params, rng);
}

}  // namespace

TEST_CASE("mlp attention score on the worked pairs") {
    const auto p = unit_psi();
    // (s_i, s_j) = (1, 1): S maps to (2,-2,0,0), LeakyRelu (2,-0.4,0,0), r dot = 1.6
    CHECK(gatlab::mlp_attention_score(Vec{1.0}, Vec{1.0}, p) == Catch::Approx(1.6));
    // middle branch 2R(1-b) sign(s_i) s_j
    CHECK(gatlab::mlp_attention_score(Vec{1.0}, Vec{-0.5}, p) == Catch::Approx(-0.8));
    CHECK(gatlab::mlp_attention_score(Vec{0.0}, Vec{0.7}, p) == 0.0);
    CHECK(gatlab::mlp_attention_score(Vec{0.0}, Vec{-31.0}, p) == 0.0);
}

TEST_CASE("piecewise and raw network evaluations agree on 1e5 random pairs") {
    RngStream rng(99, 0);
    const auto p = unit_psi(1.7, 0.35);
    const auto pf = unit_psi(1.7, 0.35, true);
    for (int k = 0; k < 100000; ++k) {
        const Vec xi{4.0 * rng.next_double() - 2.0};
        const Vec xj{4.0 * rng.next_double() - 2.0};
        const double a = gatlab::mlp_attention_score(xi, xj, p);
        const double b = gatlab::mlp_attention_score_raw(xi, xj, p);
        REQUIRE(std::fabs(a - b) <= 1e-9);
        REQUIRE(std::fabs(gatlab::mlp_attention_score(xi, xj, pf) -
                          gatlab::mlp_attention_score_raw(xi, xj, pf)) <= 1e-9);
    }
}

TEST_CASE("psi on expected means") {
    const Vec mu{0.6, 0.8};  // |mu| = 1
    const auto p = gatlab::make_mlp_psi_params(mu, 1.0, 0.2);
    CHECK(gatlab::psi_on_expected_means(p, mu, true) == Catch::Approx(1.6));
    CHECK(gatlab::psi_on_expected_means(p, mu, false) == Catch::Approx(-1.6));
    CHECK(gatlab::psi_on_expected_means(p, mu, true) ==
          Catch::Approx(gatlab::mlp_attention_score(mu, mu, p)));
    const Vec mu25{1.5, 2.0};
    const auto p25 = gatlab::make_mlp_psi_params(mu25, 2.0, 0.5);
    CHECK(gatlab::psi_on_expected_means(p25, mu25, false) == Catch::Approx(-2.0 * 2.0 * 0.5 * 2.5));
    CHECK_THROWS_AS(gatlab::psi_on_expected_means(p, Vec{0.0, 0.0}, true), std::domain_error);
}

TEST_CASE("single-layer head score and the ansatz heads") {
    const Vec mu{1.0, 0.0};  // unit norm
    const auto heads = gatlab::gat_ansatz_heads(mu);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(heads.first.b == Catch::Approx(-inv_sqrt2));
    CHECK(heads.second.a[0] == Catch::Approx(-heads.first.a[0]));
    CHECK(heads.second.a[1] == Catch::Approx(-heads.first.a[1]));
    CHECK(heads.second.b == Catch::Approx(inv_sqrt2));

    CHECK(gatlab::gat_single_layer_score(mu, mu, heads.first) == Catch::Approx(inv_sqrt2));
    const Vec neg{-1.0, 0.0};
    CHECK(gatlab::gat_single_layer_score(neg, neg, heads.first) ==
          Catch::Approx(0.2 * (-3.0 * inv_sqrt2)));
    CHECK(gatlab::gat_single_layer_score(mu, mu, heads.first) > 0.0);
    CHECK(gatlab::gat_single_layer_score(neg, neg, heads.second) > 0.0);

    gatlab::GatHeadParams zero;
    zero.w = {1.0, 1.0};
    CHECK(gatlab::gat_single_layer_score(mu, neg, zero) == 0.0);
    CHECK_THROWS_AS(gatlab::gat_ansatz_heads(Vec{0.0, 0.0}), std::domain_error);
}

TEST_CASE("idealized score follows sign(p-q) and the margin") {
    const std::vector<std::uint8_t> labels{1, 1, 0};
    gatlab::IdealizedPsiParams ip{3.0, 0.6, 0.2, &labels};
    CHECK(gatlab::idealized_score(0, 1, ip) == 3.0);
    CHECK(gatlab::idealized_score(0, 2, ip) == -3.0);
    ip.p = 0.2;
    ip.q = 0.6;
    CHECK(gatlab::idealized_score(0, 1, ip) == -3.0);
    ip.p = ip.q = 0.4;  // tie resolves to +1
    CHECK(gatlab::idealized_score(0, 1, ip) == 3.0);
    ip.t = 0.0;
    CHECK(gatlab::idealized_score(0, 1, ip) == 0.0);
    CHECK(gatlab::idealized_score(0, 2, ip) == 0.0);
}

TEST_CASE("softmax coefficients: normalization, uniformity, closed form") {
    const auto s = tiny_sample(50, 0.4, 0.3, 0.5, 1.0);
    const auto constant = [](std::int32_t, std::int32_t) { return 2.5; };
    for (int i = 0; i < s.n; ++i) {
        const auto g = gatlab::attention_coefficients(s, constant, i);
        double sum = 0.0;
        for (double v : g) {
            CHECK(v == Catch::Approx(1.0 / s.neighbors[i].size()));
            sum += v;
        }
        CHECK(std::fabs(sum - 1.0) <= 1e-9);
    }

    // two-node closed form: scores (ln 2, 0) -> (2/3, 1/3)
    CsbmParams params{2, 1, 1.0, 1.0, Vec(1, 0.0), 1.0, false};
    RngStream rng(3, 0);
    const auto pair = gatlab::sample_csbm(params, rng);
    REQUIRE(pair.neighbors[0].size() == 2);
    const auto pair_score = [](std::int32_t, std::int32_t j) {
        return j == 0 ? std::log(2.0) : 0.0;
    };
    const auto g = gatlab::attention_coefficients(pair, pair_score, 0);
    CHECK(g[0] == Catch::Approx(2.0 / 3.0));
    CHECK(g[1] == Catch::Approx(1.0 / 3.0));
}

TEST_CASE("softmax shift invariance and overflow safety") {
    const auto s = tiny_sample(40, 0.5, 0.5, 0.3, 1.0, 17);
    RngStream rng(5, 0);
    std::vector<double> raw(s.n * s.n);
    for (auto& v : raw) v = 2.0e4 * rng.next_double() - 1.0e4;  // scores up to +-1e4
    const auto base = [&](std::int32_t i, std::int32_t j) { return raw[i * s.n + j]; };
    const auto shifted = [&](std::int32_t i, std::int32_t j) { return raw[i * s.n + j] + 123.0; };
    for (int i = 0; i < s.n; ++i) {
        const auto a = gatlab::attention_coefficients(s, base, i);
        const auto b = gatlab::attention_coefficients(s, shifted, i);
        double sum = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            REQUIRE(std::isfinite(a[k]));
            REQUIRE(std::fabs(a[k] - b[k]) <= 1e-12);
            sum += a[k];
        }
        REQUIRE(std::fabs(sum - 1.0) <= 1e-9);
    }
}

TEST_CASE("non-finite scores name the offending pair") {
    const auto s = tiny_sample(10, 1.0, 1.0, 0.0, 1.0);
    const auto bad = [](std::int32_t i, std::int32_t j) {
        return (i == 2 && j == 5) ? std::nan("") : 0.0;
    };
    CHECK_THROWS_WITH(gatlab::attention_coefficients(s, bad, 2),
                      Catch::Matchers::ContainsSubstring("(2,5)"));
}

TEST_CASE("attention convolution on fixed fields") {
    CsbmParams params{2, 1, 1.0, 1.0, Vec(1, 0.0), 1.0, false};
    RngStream rng(3, 0);
    auto pair = gatlab::sample_csbm(params, rng);
    pair.features = {1.0, 3.0};  // projections with w = (1)

    AttentionField uniform = gatlab::uniform_attention_field(pair);
    const auto h = gatlab::attention_convolution(pair, uniform, Vec{1.0});
    CHECK(h.h_prime[0] == Catch::Approx(2.0));
    CHECK(h.h_prime[1] == Catch::Approx(2.0));

    // convex combination of a constant stays that constant
    pair.features = {4.2, 4.2};
    AttentionField skew;
    skew.gamma = {{0.9, 0.1}, {0.25, 0.75}};
    const auto hc = gatlab::attention_convolution(pair, skew, Vec{1.0});
    CHECK(hc.h_prime[0] == Catch::Approx(4.2));
    CHECK(hc.h_prime[1] == Catch::Approx(4.2));

    CHECK_THROWS_AS(gatlab::attention_convolution(pair, skew, Vec{1.0, 2.0}),
                    std::invalid_argument);
}

TEST_CASE("noiseless homophilous graph convolves to |mu| on class 1") {
    // sigma -> 0 limit emulated by substituting exact means, q = 0
    auto s = tiny_sample(80, 0.6, 0.0, 1.0, 1.0, 23);
    for (int i = 0; i < s.n; ++i) s.features[i] = s.labels[i] ? 1.0 : -1.0;
    const auto field = gatlab::uniform_attention_field(s);
    const auto h = gatlab::attention_convolution(s, field, Vec{1.0});
    for (int i = 0; i < s.n; ++i)
        if (s.labels[i]) CHECK(h.h_prime[i] == Catch::Approx(1.0));
}

TEST_CASE("multi-head convolution averages heads") {
    const auto s = tiny_sample(30, 0.5, 0.2, 0.4, 0.8, 29);
    const Vec w{1.0};
    const gatlab::ScoreFn f1 = [](std::int32_t i, std::int32_t j) {
        return 0.1 * i - 0.2 * j;
    };
    const gatlab::ScoreFn heads1[] = {f1};
    const auto one = gatlab::multi_head_convolution(s, heads1, w);
    const auto direct = gatlab::attention_convolution(s, gatlab::build_attention_field(s, f1), w);
    for (int i = 0; i < s.n; ++i) REQUIRE(one.h_prime[i] == direct.h_prime[i]);

    const gatlab::ScoreFn heads2[] = {f1, f1};
    const auto two = gatlab::multi_head_convolution(s, heads2, w);
    for (int i = 0; i < s.n; ++i) REQUIRE(two.h_prime[i] == Catch::Approx(one.h_prime[i]));

    CHECK_THROWS_AS(gatlab::multi_head_convolution(s, std::span<const gatlab::ScoreFn>{}, w),
                    std::invalid_argument);
}

TEST_CASE("opposite-field heads cancel") {
    auto s = tiny_sample(2, 1.0, 1.0, 0.0, 1.0, 3);
    s.features = {1.0, -1.0};
    // head A concentrates on node 0, head B on node 1; outputs are +-u
    const gatlab::ScoreFn a = [](std::int32_t, std::int32_t j) { return j == 0 ? 50.0 : -50.0; };
    const gatlab::ScoreFn b = [](std::int32_t, std::int32_t j) { return j == 1 ? 50.0 : -50.0; };
    const gatlab::ScoreFn heads[] = {a, b};
    const auto h = gatlab::multi_head_convolution(s, heads, Vec{1.0});
    for (int i = 0; i < s.n; ++i) CHECK(h.h_prime[i] == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("simple graph convolution equals uniform-score attention") {
    const auto s = tiny_sample(60, 0.4, 0.2, 0.5, 1.0, 31);
    const Vec w{1.0};
    const auto gcn = gatlab::simple_graph_convolution(s, w);
    const auto constant = [](std::int32_t, std::int32_t) { return 7.0; };
    const auto att = gatlab::attention_convolution(s, gatlab::build_attention_field(s, constant), w);
    for (int i = 0; i < s.n; ++i) REQUIRE(std::fabs(gcn.h_prime[i] - att.h_prime[i]) <= 1e-12);
}

TEST_CASE("isolated node convolves to its own projection") {
    CsbmParams params{3, 1, 0.0, 0.0, Vec(1, 0.0), 1.0, false};
    RngStream rng(11, 0);
    const auto s = gatlab::sample_csbm(params, rng);
    const auto h = gatlab::simple_graph_convolution(s, Vec{1.0});
    for (int i = 0; i < 3; ++i) CHECK(h.h_prime[i] == Catch::Approx(s.features[i]));
}

TEST_CASE("complete balanced noiseless graph averages to zero") {
    CsbmParams params{40, 1, 1.0, 1.0, Vec(1, 1.0), 1.0, true};
    RngStream rng(13, 0);
    auto s = gatlab::sample_csbm(params, rng);
    for (int i = 0; i < s.n; ++i) s.features[i] = s.labels[i] ? 1.0 : -1.0;  // sigma -> 0
    const auto h = gatlab::simple_graph_convolution(s, Vec{1.0});
    for (int i = 0; i < s.n; ++i) CHECK(h.h_prime[i] == Catch::Approx(0.0).margin(1e-12));
}

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "gatlab/attention.hpp"
#include "gatlab/common.hpp"
#include "gatlab/csbm.hpp"
#include "gatlab/normal.hpp"

namespace gatlab {

/// Optimal classifier for the node features alone: 1 iff mu^T x > 0
/// (ties go to class 0).
inline int bayes_node_classify(std::span<const double> x, std::span<const double> mu) {
    return dot(mu, x) > 0.0 ? 1 : 0;
}

/// Concatenated pair feature [X_i; X_j] with the two reference directions
/// mu' = [mu; mu] and nu' = [mu; -mu].
struct EdgePairFeature {
    Vec x;         // 2d
    Vec mu_prime;  // 2d
    Vec nu_prime;  // 2d
};

inline EdgePairFeature make_edge_pair_feature(std::span<const double> xi,
                                              std::span<const double> xj,
                                              std::span<const double> mu) {
    if (xi.size() != mu.size() || xj.size() != mu.size())
        throw std::invalid_argument("make_edge_pair_feature: dimension mismatch");
    EdgePairFeature f;
    f.x.reserve(2 * mu.size());
    f.x.insert(f.x.end(), xi.begin(), xi.end());
    f.x.insert(f.x.end(), xj.begin(), xj.end());
    f.mu_prime.reserve(2 * mu.size());
    f.mu_prime.insert(f.mu_prime.end(), mu.begin(), mu.end());
    f.mu_prime.insert(f.mu_prime.end(), mu.begin(), mu.end());
    f.nu_prime = f.mu_prime;
    for (std::size_t k = mu.size(); k < f.nu_prime.size(); ++k) f.nu_prime[k] = -f.nu_prime[k];
    return f;
}

/// Bayes rule for edge class: 0 (inter) iff
///   p cosh(x^T mu'/sigma^2) <= q cosh(x^T nu'/sigma^2),
/// evaluated in log space since the cosh arguments scale like 1/sigma^2.
inline int bayes_edge_classify(const EdgePairFeature& pair, double sigma, double p, double q) {
    if (!(sigma > 0.0)) throw std::domain_error("bayes_edge_classify: sigma must be > 0");
    if (!(p >= 0.0) || !(q >= 0.0)) throw std::domain_error("bayes_edge_classify: negative rate");
    if (p == 0.0 && q == 0.0) throw std::domain_error("bayes_edge_classify: p = q = 0");
    if (p == 0.0) return 0;
    if (q == 0.0) return 1;
    const double s2 = sigma * sigma;
    const double lhs = std::log(p) + log_cosh(dot(pair.x, pair.mu_prime) / s2);
    const double rhs = std::log(q) + log_cosh(dot(pair.x, pair.nu_prime) / s2);
    return lhs <= rhs ? 0 : 1;
}

/// Community recovery from the adjacency alone: signs of the eigenvector for
/// the second-largest-magnitude eigenvalue of A, found by power iteration
/// with deflation of the top eigenvector. Output is defined up to a global
/// flip. Throws ConvergenceError (carrying the residual) if either iteration
/// fails to reach tolerance.
inline std::vector<std::uint8_t> spectral_node_classify(const CsbmSample& sample,
                                                        double tol = 1e-8,
                                                        int max_iters = 10000) {
    const int n = sample.n;
    // A has zero diagonal; skip the self entry of the stored neighborhoods
    const auto matvec = [&](const Vec& v, Vec& out) {
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (auto j : sample.neighbors[i])
                if (j != i) acc += v[j];
            out[i] = acc;
        }
    };

    const auto normalize = [](Vec& v) {
        double nv = norm(v);
        if (nv == 0.0) return false;
        for (double& x : v) x /= nv;
        return true;
    };

    // fixed pseudo-random start so results are reproducible run to run
    const auto random_init = [&](std::uint64_t salt) {
        Vec v(n);
        std::uint64_t x = 0x5bf03635ULL ^ salt;
        for (int i = 0; i < n; ++i)
            v[i] = (detail::splitmix64(x) >> 11) * 0x1.0p-53 - 0.5;
        normalize(v);
        return v;
    };

    struct Eigen {
        Vec v;
        double lambda;
    };
    Vec top;  // filled after the first pass
    double top_lambda = 0.0;

    const auto power_iterate = [&](Vec v, bool deflate) -> Eigen {
        Vec av(n);
        double lambda = 0.0, residual = 0.0;
        for (int it = 0; it < max_iters; ++it) {
            matvec(v, av);
            if (deflate) {
                const double c = top_lambda * dot(top, v);
                for (int i = 0; i < n; ++i) av[i] -= c * top[i];
            }
            lambda = dot(v, av);  // Rayleigh quotient; v stays unit
            residual = 0.0;
            for (int i = 0; i < n; ++i) {
                const double r = av[i] - lambda * v[i];
                residual += r * r;
            }
            residual = std::sqrt(residual);
            if (residual <= tol * std::max(1.0, std::fabs(lambda))) return {v, lambda};
            if (!normalize(av))
                throw ConvergenceError("spectral_node_classify: iteration collapsed to zero",
                                       residual);
            std::swap(v, av);
        }
        throw ConvergenceError("spectral_node_classify: no convergence after " +
                                   std::to_string(max_iters) + " iterations, residual " +
                                   std::to_string(residual),
                               residual);
    };

    // the constant vector overlaps every component's Perron direction, so the
    // first pass cannot start orthogonal to the top eigenspace and, when that
    // eigenspace is degenerate, lands on a nonnegative combination whose
    // deflation still separates the blocks
    const Eigen first = power_iterate(Vec(n, 1.0 / std::sqrt(static_cast<double>(n))), false);
    top = first.v;
    top_lambda = first.lambda;
    const Eigen second = power_iterate(random_init(0xefc60000ULL), true);

    std::vector<std::uint8_t> labels(n);
    for (int i = 0; i < n; ++i) labels[i] = second.v[i] > 0.0 ? 1 : 0;
    return labels;
}

/// 1 iff h'_i > 0; zero goes to class 0, matching the node Bayes rule.
inline std::vector<std::uint8_t> sign_decision(const ConvolutionOutput& h) {
    std::vector<std::uint8_t> out(h.h_prime.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = h.h_prime[i] > 0.0 ? 1 : 0;
    return out;
}

}  // namespace gatlab

#pragma once

#include <cmath>
#include <stdexcept>

#include "gatlab/common.hpp"

namespace gatlab {

/// Standard normal CDF, absolute error well under 1e-7 (erfc-based).
inline double std_normal_cdf(double x) {
    if (!std::isfinite(x)) throw std::domain_error("std_normal_cdf: non-finite input");
    return 0.5 * std::erfc(-x * 0.70710678118654752440);
}

/// Upper tail 1 - Phi(x), computed from the erfc of the matching sign so the
/// small tail keeps full relative accuracy.
inline double std_normal_cdf_complement(double x) {
    if (!std::isfinite(x)) throw std::domain_error("std_normal_cdf_complement: non-finite input");
    return 0.5 * std::erfc(x * 0.70710678118654752440);
}

/// Phi and its complement as one value pair. The smaller tail is evaluated
/// directly and the other derived as 1 minus it, so phi + phi_c == 1 holds
/// exactly as computed.
struct NormalTail {
    double phi;
    double phi_c;

    explicit NormalTail(double x) {
        if (x >= 0.0) {
            phi_c = std_normal_cdf_complement(x);
            phi = 1.0 - phi_c;
        } else {
            phi = std_normal_cdf(x);
            phi_c = 1.0 - phi;
        }
    }
};

/// log(cosh(z)) without overflow: |z| + log((1 + exp(-2|z|)) / 2).
/// cosh itself overflows near |z| = 710 at double precision.
inline double log_cosh(double z) {
    const double a = std::fabs(z);
    return a + std::log1p(std::exp(-2.0 * a)) - 0.69314718055994530942;
}

}  // namespace gatlab

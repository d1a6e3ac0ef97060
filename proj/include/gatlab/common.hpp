#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gatlab {

using Vec = std::vector<double>;

/// Thrown when an iterative method fails to reach its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

/// Thrown on malformed input files; the message carries the line number.
class ParseError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown on filesystem failures; the message carries the path.
class IoError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("dot: dimension mismatch " + std::to_string(a.size()) +
                                    " vs " + std::to_string(b.size()));
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

inline double norm(std::span<const double> a) {
    double s = 0.0;
    for (double x : a) s += x * x;
    return std::sqrt(s);
}

/// Unit vector a / |a|_2. Throws for the zero vector.
inline Vec normalized(std::span<const double> a) {
    double n = norm(a);
    if (!(n > 0.0)) throw std::domain_error("normalized: zero vector");
    Vec out(a.begin(), a.end());
    for (double& x : out) x /= n;
    return out;
}

}  // namespace gatlab

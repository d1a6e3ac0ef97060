#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gatlab/normal.hpp"

namespace {

double gaussian_density(double t) {
    return std::exp(-0.5 * t * t) / std::sqrt(2.0 * 3.14159265358979323846);
}

double simpson(double a, double b, int panels) {
    const double h = (b - a) / panels;
    double acc = gaussian_density(a) + gaussian_density(b);
    for (int k = 1; k < panels; ++k)
        acc += gaussian_density(a + k * h) * (k % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

// independent quadrature oracle for Phi: 0.5 + integral of the density over
// [0, x], refined until two successive panel counts agree to 1e-12
double phi_oracle(double x) {
    const double sign = x < 0.0 ? -1.0 : 1.0;
    const double ax = std::fabs(x);
    double prev = simpson(0.0, ax, 64), cur = simpson(0.0, ax, 128);
    for (int panels = 256; std::fabs(cur - prev) > 1e-13 && panels <= 1 << 20; panels *= 2) {
        prev = cur;
        cur = simpson(0.0, ax, panels);
    }
    return 0.5 + sign * cur;
}

}  // namespace

TEST_CASE("std_normal_cdf at zero") { CHECK(gatlab::std_normal_cdf(0.0) == 0.5); }

TEST_CASE("std_normal_cdf matches the quadrature oracle") {
    CHECK(phi_oracle(1.0) == Catch::Approx(0.8413447460685429).epsilon(0).margin(1e-11));
    CHECK(gatlab::std_normal_cdf(1.0) == Catch::Approx(0.8413447).epsilon(0).margin(1e-6));
    for (double x = -6.0; x <= 6.0; x += 0.25)
        CHECK(gatlab::std_normal_cdf(x) == Catch::Approx(phi_oracle(x)).epsilon(0).margin(1e-7));
}

TEST_CASE("std_normal_cdf symmetry and monotonicity on a dense grid") {
    double prev = -1.0;
    for (int k = 0; k < 10000; ++k) {
        const double x = -8.0 + 16.0 * k / 9999.0;
        const double phi = gatlab::std_normal_cdf(x);
        CHECK(std::fabs(phi + gatlab::std_normal_cdf(-x) - 1.0) <= 1e-12);
        CHECK(phi >= prev);
        prev = phi;
    }
}

TEST_CASE("std_normal_cdf rejects non-finite input") {
    CHECK_THROWS_AS(gatlab::std_normal_cdf(std::nan("")), std::domain_error);
    CHECK_THROWS_AS(gatlab::std_normal_cdf(INFINITY), std::domain_error);
}

TEST_CASE("NormalTail sums to one exactly") {
    for (double x : {-30.0, -4.0, -1.0, -0.3, 0.0, 0.3, 1.0, 4.0, 30.0}) {
        const gatlab::NormalTail t(x);
        CHECK(t.phi + t.phi_c == 1.0);
        CHECK(t.phi == Catch::Approx(gatlab::std_normal_cdf(x)).epsilon(0).margin(1e-15));
    }
}

TEST_CASE("log_cosh agrees with the naive form and survives large arguments") {
    for (double z : {-5.0, -1.0, -1e-3, 0.0, 0.5, 3.0, 10.0}) {
        CHECK(gatlab::log_cosh(z) ==
              Catch::Approx(std::log(std::cosh(z))).epsilon(0).margin(1e-12));
    }
    CHECK(std::isfinite(gatlab::log_cosh(1e6)));
    CHECK(gatlab::log_cosh(1e6) == Catch::Approx(1e6 - std::log(2.0)));
}

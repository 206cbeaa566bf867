#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "hlzero/errors.hpp"
#include "hlzero/theory.hpp"

using namespace hlzero;
using namespace std::complex_literals;

namespace {

constexpr double kPi = std::numbers::pi;

// Frozen 40-digit evaluations of the closed form log ratio.
struct Frozen {
  CovarianceSpec spec;
  double c;
  double chat;
};

const Frozen kFrozen[] = {
    {{0.5, 1.0, 0.5, kPi / 2}, -0.020936001542311995, 0.13763261184282233},
    {{0.5, 1.0, 0.5, 0.0}, 0.16683197518341581, 0.0},
    {{1.0, 1.0, 0.5, kPi / 4}, 0.20783127423938164, 0.30161640847133034},
    {{0.3, 2.0, 0.2, -1.0}, 0.027134626974267148, -0.051284593864627212},
};

}  // namespace

TEST_SUITE("theory") {

TEST_CASE("Poisson kernel values") {
  for (double th : {-3.0, -1.0, 0.0, 0.5, 2.5}) CHECK(poisson_kernel(0.0, th) == 1.0);
  CHECK(poisson_kernel(0.5, 0.0) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK_THROWS_AS(poisson_kernel(1.0, 0.3), DomainError);
  CHECK_THROWS_AS(poisson_kernel(-0.1, 0.3), DomainError);
  for (double r : {0.1, 0.5, 0.9, 0.99}) {
    for (double th = -kPi; th < kPi; th += 0.37) {
      CHECK(poisson_kernel(r, th) > 0.0);
      const std::complex<double> w = std::polar(r, th);
      const std::complex<double> h = (1.0 + w) / (1.0 - w);
      CHECK(poisson_kernel(r, th) == doctest::Approx(h.real()).epsilon(1e-13));
      CHECK(conjugate_kernel(r, th) == doctest::Approx(h.imag()).epsilon(1e-13));
    }
    CHECK(std::abs(poisson_mean_quadrature(r) - 1.0) <= 1e-10);
  }
}

TEST_CASE("conjugate kernel values") {
  CHECK(conjugate_kernel(0.5, 0.0) == 0.0);
  const std::complex<double> h = (1.0 + 0.5i) / (1.0 - 0.5i);
  CHECK(conjugate_kernel(0.5, kPi / 2) == doctest::Approx(h.imag()).epsilon(1e-15));
  CHECK(conjugate_kernel(0.5, kPi / 2) == doctest::Approx(0.8).epsilon(1e-15));
  for (double th : {0.2, 1.3, 2.9}) CHECK(conjugate_kernel(0.7, -th) == -conjugate_kernel(0.7, th));
}

TEST_CASE("Poisson kernel is harmonic in the disc") {
  // mean value over a small circle around an interior point
  const std::complex<double> centres[] = {{0.3, 0.2}, {-0.5, 0.1}, {0.0, -0.8}};
  for (const auto x0 : centres) {
    const double rho = 0.05;
    const int m = 256;
    double mean = 0.0;
    for (int j = 0; j < m; ++j) {
      const auto x = x0 + std::polar(rho, 2.0 * kPi * j / m);
      mean += poisson_kernel(std::abs(x), std::arg(x));
    }
    mean /= m;
    CHECK(std::abs(mean - poisson_kernel(std::abs(x0), std::arg(x0))) <= 1e-8);
  }
}

TEST_CASE("v2 closed form") {
  CHECK(variance_v2(0.0, 0.5) == 0.0);
  CHECK(variance_v2(1.0, 0.5) == doctest::Approx(0.4076059644443803).epsilon(1e-14));
  CHECK(std::abs(variance_v2(50.0, 0.5) - 0.4586751453870819) <= 1e-12);
  CHECK(std::abs(variance_v2(1.0, 0.5) - variance_v2_quadrature(1.0, 0.5)) <= 1e-10);
  double prev = 0.0;
  for (double t = 0.1; t < 3.0; t += 0.3) {
    const double v = variance_v2(t, 0.5);
    CHECK(v > prev);
    CHECK(variance_v2(t, 0.6) < v);
    prev = v;
  }
  CHECK_THROWS_AS(variance_v2(-0.1, 0.5), DomainError);
  CHECK_THROWS_AS(variance_v2(1.0, 0.0), DomainError);
}

TEST_CASE("covariance closed forms") {
  for (const auto& f : kFrozen) {
    CHECK(cov_c(f.spec) == doctest::Approx(f.c).epsilon(1e-13));
    CHECK(std::abs(cov_chat(f.spec) - f.chat) <= 1e-15 + 1e-13 * std::abs(f.chat));
  }
  for (double t : {0.3, 1.0, 2.0}) {
    CHECK(cov_c({t, t, 0.5, 0.0}) == doctest::Approx(variance_v2(t, 0.5)).epsilon(1e-14));
  }
  for (double a : {0.3, 1.2, 3.0}) {
    const CovarianceSpec plus{0.5, 1.0, 0.4, a};
    const CovarianceSpec minus{0.5, 1.0, 0.4, -a};
    CHECK(std::abs(cov_chat(plus) + cov_chat(minus)) <= 1e-16);
  }
  CHECK_THROWS_AS(cov_c({1.0, 0.5, 0.5, 0.0}), DomainError);
  CHECK_THROWS_AS(cov_c({0.5, 1.0, 0.0, 0.0}), DomainError);
}

TEST_CASE("quadrature routes agree with the closed forms") {
  for (const auto& f : kFrozen) {
    CHECK(std::abs(cov_c_quadrature(f.spec) - f.c) <= 1e-10);
    CHECK(std::abs(cov_chat_quadrature(f.spec) - f.chat) <= 1e-10);
  }
  const CovarianceSpec spec{0.5, 1.0, 0.5, kPi / 2};
  CHECK(std::abs(cov_c_double_integral(spec) - cov_c(spec)) <= 1e-8);
  CHECK(std::abs(cov_chat_double_integral(spec) - cov_chat(spec)) <= 1e-8);
  CHECK(std::abs(cov_c_quadrature({0.7, 0.7, 0.3, 0.0}) - variance_v2(0.7, 0.3)) <= 1e-10);
}

TEST_CASE("Poisson semigroup identities") {
  for (double a : {0.0, 0.4, -2.0}) {
    CHECK(std::abs(poisson_product_quadrature(0.6, 0.7, a) - poisson_kernel(0.42, a)) <= 1e-10);
    CHECK(std::abs(poisson_conjugate_product_quadrature(0.6, 0.7, a) - conjugate_kernel(0.42, a)) <=
          1e-10);
  }
}

TEST_CASE("series forms converge to the closed forms") {
  const double q = std::exp(-1.0);
  const long K = terms_for_tolerance(q, 1e-12);
  const auto v = variance_v2_series(1.0, 0.5, K);
  CHECK(v.tail_bound <= 1e-12);
  CHECK(std::abs(v.value - variance_v2(1.0, 0.5)) <= 1e-10);
  CHECK(std::abs(v.value - variance_v2(1.0, 0.5)) <= v.tail_bound + 1e-15);
  for (const auto& f : kFrozen) {
    const double qf = std::exp(-(2.0 * f.spec.sigma + f.spec.t - f.spec.s));
    const long Kf = terms_for_tolerance(qf, 1e-12);
    CHECK(std::abs(cov_c_series(f.spec, Kf).value - f.c) <= 1e-10);
    CHECK(std::abs(cov_chat_series(f.spec, Kf).value - f.chat) <= 1e-10);
  }
  // fewer terms: the reported tail bound must cover the actual error
  const auto rough = variance_v2_series(1.0, 0.5, 5);
  CHECK(std::abs(rough.value - variance_v2(1.0, 0.5)) <= rough.tail_bound);
}

TEST_CASE("local covariance") {
  const auto zero = local_cov(AlphaLimit::finite(0.0));
  CHECK(zero.same == 1.0);
  CHECK(zero.cross == 0.0);
  const auto one = local_cov(AlphaLimit::finite(1.0));
  CHECK(one.same == 0.5);
  CHECK(one.cross == 0.5);
  const auto inf = local_cov(AlphaLimit::infinity());
  CHECK(inf.same == 0.0);
  CHECK(inf.cross == 0.0);
  CHECK(AlphaLimit::infinity().is_infinite());
  CHECK_THROWS_AS(AlphaLimit::infinity().value(), DomainError);
  CHECK_THROWS_AS(AlphaLimit::finite(-1.0), DomainError);
}

TEST_CASE("FGF spectrum") {
  CHECK(fgf_spectrum(1) == 1.0);
  CHECK(fgf_spectrum(-4) == 0.25);
  CHECK_THROWS_AS(fgf_spectrum(0), DomainError);
}

}

#include "hlzero/theory.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/trapezoidal.hpp>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "hlzero/errors.hpp"

namespace hlzero {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_radius(double r, const char* where) {
  if (!(r >= 0.0 && r < 1.0)) {
    std::ostringstream msg;
    msg << where << ": radius r = " << r << " outside [0, 1)";
    throw DomainError(msg.str());
  }
}

// Mean over one period of a smooth periodic integrand. The trapezoid rule is
// spectrally accurate here, so it beats any polynomial rule.
template <typename F>
double periodic_mean(F f) {
  // boost's tolerance is relative to the L1 norm; the integrands here have L1 mean O(1)
  const double integral = boost::math::quadrature::trapezoidal(f, -std::numbers::pi, std::numbers::pi,
                                                               kQuadratureTolerance * 1e-2, 22);
  return integral / kTwoPi;
}

template <typename F>
double line_integral(F f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 20,
                                                                       kQuadratureTolerance * 1e-3);
}

std::complex<double> log_ratio(const CovarianceSpec& spec) {
  validate(spec);
  const std::complex<double> phase = std::polar(1.0, spec.alpha);
  const std::complex<double> num = 1.0 - std::exp(-2.0 * spec.sigma - (spec.t + spec.s)) * phase;
  const std::complex<double> den = 1.0 - std::exp(-2.0 * spec.sigma - (spec.t - spec.s)) * phase;
  // both factors have positive real part, so the principal logs subtract cleanly
  return std::log(num) - std::log(den);
}

// Fourier partial sum shared by the three series forms.
SeriesValue trig_series(double q, double s, double alpha, bool use_sin, long K) {
  if (K < 0) throw DomainError("series truncation K must be nonnegative");
  double sum = 0.0;
  double qk = 1.0;
  for (long k = 1; k <= K; ++k) {
    qk *= q;
    const double trig = use_sin ? std::sin(k * alpha) : std::cos(k * alpha);
    sum += trig * qk * -std::expm1(-2.0 * k * s) / static_cast<double>(k);
  }
  return {sum, log_series_tail(q, K)};
}

}  // namespace

double poisson_kernel(double r, double theta) {
  require_radius(r, "poisson_kernel");
  return (1.0 - r * r) / (1.0 - 2.0 * r * std::cos(theta) + r * r);
}

double conjugate_kernel(double r, double theta) {
  require_radius(r, "conjugate_kernel");
  return 2.0 * r * std::sin(theta) / (1.0 - 2.0 * r * std::cos(theta) + r * r);
}

double variance_v2(double t, double sigma) {
  if (!(t >= 0.0) || !(sigma > 0.0)) throw DomainError("variance_v2 needs t >= 0 and sigma > 0");
  return std::log1p(-std::exp(-2.0 * (sigma + t))) - std::log(-std::expm1(-2.0 * sigma));
}

void validate(const CovarianceSpec& spec) {
  if (!(spec.s >= 0.0 && spec.s <= spec.t) || !(spec.sigma > 0.0) || !std::isfinite(spec.t) ||
      !std::isfinite(spec.alpha)) {
    std::ostringstream msg;
    msg << "covariance spec needs 0 <= s <= t and sigma > 0 (got s = " << spec.s << ", t = " << spec.t
        << ", sigma = " << spec.sigma << ")";
    throw DomainError(msg.str());
  }
}

double cov_c(const CovarianceSpec& spec) { return log_ratio(spec).real(); }

double cov_chat(const CovarianceSpec& spec) { return log_ratio(spec).imag(); }

AlphaLimit AlphaLimit::finite(double alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw DomainError("finite alpha limit must be a nonnegative real");
  }
  AlphaLimit a;
  a.value_ = alpha;
  return a;
}

double AlphaLimit::value() const {
  if (!value_) throw DomainError("alpha limit is infinite");
  return *value_;
}

LocalCovariance local_cov(AlphaLimit alpha) {
  if (alpha.is_infinite()) return {0.0, 0.0};
  const double a = alpha.value();
  const double d = 1.0 + a * a;
  return {1.0 / d, a / d};
}

double fgf_spectrum(long k) {
  if (k == 0) throw DomainError("fgf_spectrum: mode k = 0 carries no variance");
  return 1.0 / std::abs(static_cast<double>(k));
}

double log_series_tail(double q, long K) {
  if (!(q >= 0.0 && q < 1.0)) throw DomainError("log_series_tail needs 0 <= q < 1");
  // sum_{k > K} q^k / k <= q^{K+1} / ((K + 1)(1 - q))
  return std::pow(q, static_cast<double>(K + 1)) / (static_cast<double>(K + 1) * (1.0 - q));
}

long terms_for_tolerance(double q, double tol) {
  if (!(tol > 0.0)) throw DomainError("terms_for_tolerance needs tol > 0");
  long K = 0;
  while (log_series_tail(q, K) > tol) ++K;
  return K;
}

SeriesValue variance_v2_series(double t, double sigma, long K) {
  if (!(t >= 0.0) || !(sigma > 0.0)) throw DomainError("variance_v2_series needs t >= 0, sigma > 0");
  return trig_series(std::exp(-2.0 * sigma), t, 0.0, false, K);
}

SeriesValue cov_c_series(const CovarianceSpec& spec, long K) {
  validate(spec);
  return trig_series(std::exp(-(2.0 * spec.sigma + spec.t - spec.s)), spec.s, spec.alpha, false, K);
}

SeriesValue cov_chat_series(const CovarianceSpec& spec, long K) {
  validate(spec);
  return trig_series(std::exp(-(2.0 * spec.sigma + spec.t - spec.s)), spec.s, spec.alpha, true, K);
}

double poisson_mean_quadrature(double r) {
  require_radius(r, "poisson_mean_quadrature");
  return periodic_mean([r](double th) { return poisson_kernel(r, th); });
}

double variance_v2_quadrature(double t, double sigma) {
  if (!(t >= 0.0) || !(sigma > 0.0)) throw DomainError("variance_v2_quadrature needs t >= 0, sigma > 0");
  if (t == 0.0) return 0.0;
  const double integral = line_integral(
      [](double x) { return (1.0 + std::exp(-2.0 * x)) / -std::expm1(-2.0 * x); }, sigma, sigma + t);
  return integral - t;
}

double cov_c_quadrature(const CovarianceSpec& spec) {
  validate(spec);
  if (spec.s == 0.0) return 0.0;
  const double lo = spec.sigma + 0.5 * (spec.t - spec.s);
  const double hi = spec.sigma + 0.5 * (spec.t + spec.s);
  const double alpha = spec.alpha;
  return line_integral([alpha](double x) { return poisson_kernel(std::exp(-2.0 * x), alpha); }, lo,
                       hi) -
         spec.s;
}

double cov_chat_quadrature(const CovarianceSpec& spec) {
  validate(spec);
  if (spec.s == 0.0) return 0.0;
  const double lo = spec.sigma + 0.5 * (spec.t - spec.s);
  const double hi = spec.sigma + 0.5 * (spec.t + spec.s);
  const double alpha = spec.alpha;
  return line_integral([alpha](double x) { return conjugate_kernel(std::exp(-2.0 * x), alpha); }, lo,
                       hi);
}

double poisson_product_quadrature(double r1, double r2, double a) {
  require_radius(r1, "poisson_product_quadrature");
  require_radius(r2, "poisson_product_quadrature");
  return periodic_mean(
      [=](double th) { return poisson_kernel(r1, a - th) * poisson_kernel(r2, th); });
}

double poisson_conjugate_product_quadrature(double r1, double r2, double a) {
  require_radius(r1, "poisson_conjugate_product_quadrature");
  require_radius(r2, "poisson_conjugate_product_quadrature");
  return periodic_mean(
      [=](double th) { return poisson_kernel(r1, a - th) * conjugate_kernel(r2, th); });
}

double cov_c_double_integral(const CovarianceSpec& spec) {
  validate(spec);
  if (spec.s == 0.0) return 0.0;
  const auto inner = [&spec](double u) {
    return poisson_product_quadrature(std::exp(-spec.sigma - (spec.t - u)),
                                      std::exp(-spec.sigma - (spec.s - u)), spec.alpha);
  };
  return line_integral(inner, 0.0, spec.s) - spec.s;
}

double cov_chat_double_integral(const CovarianceSpec& spec) {
  validate(spec);
  if (spec.s == 0.0) return 0.0;
  const auto inner = [&spec](double u) {
    return poisson_conjugate_product_quadrature(std::exp(-spec.sigma - (spec.t - u)),
                                                std::exp(-spec.sigma - (spec.s - u)), spec.alpha);
  };
  return line_integral(inner, 0.0, spec.s);
}

}  // namespace hlzero

#pragma once

#include <optional>

namespace hlzero {

/// P_r(theta) = (1 - r^2) / (1 - 2 r cos theta + r^2), 0 <= r < 1.
double poisson_kernel(double r, double theta);

/// Q_r(theta) = 2 r sin theta / (1 - 2 r cos theta + r^2), the harmonic conjugate of P_r.
double conjugate_kernel(double r, double theta);

/// v^2_t(sigma) = log((1 - e^{-2(sigma + t)}) / (1 - e^{-2 sigma})).
double variance_v2(double t, double sigma);

/// Coordinates of a covariance between the field at (t, e^{sigma + i a}) and
/// (s, e^{sigma + i b}), alpha = a - b.
struct CovarianceSpec {
  double s = 0.0;
  double t = 0.0;
  double sigma = 0.0;
  double alpha = 0.0;
};

/// Throws DomainError unless 0 <= s <= t and sigma > 0.
void validate(const CovarianceSpec& spec);

/// Re and Im of log((1 - e^{-2 sigma - (t + s) + i alpha}) / (1 - e^{-2 sigma - (t - s) + i alpha})).
double cov_c(const CovarianceSpec& spec);
double cov_chat(const CovarianceSpec& spec);

/// Limit of a / (2 sigma) in the local regime. Infinity is its own state.
class AlphaLimit {
 public:
  static AlphaLimit finite(double alpha);
  static AlphaLimit infinity() { return AlphaLimit(); }

  bool is_infinite() const noexcept { return !value_; }
  double value() const;  ///< throws DomainError when infinite

 private:
  AlphaLimit() = default;
  std::optional<double> value_;
};

struct LocalCovariance {
  double same = 0.0;   ///< 1 / (1 + alpha^2)
  double cross = 0.0;  ///< alpha / (1 + alpha^2)
};

LocalCovariance local_cov(AlphaLimit alpha);

/// 1 / |k|, the stationary variance of Fourier mode k. k = 0 is a DomainError.
double fgf_spectrum(long k);

/// A truncated series together with an analytic bound on the dropped tail.
struct SeriesValue {
  double value = 0.0;
  double tail_bound = 0.0;
};

/// Bound on sum_{k > K} q^k / k for 0 <= q < 1.
double log_series_tail(double q, long K);

/// Smallest K with log_series_tail(q, K) <= tol.
long terms_for_tolerance(double q, double tol);

/// sum_{k <= K} e^{-2 k sigma} (1 - e^{-2 k t}) / k
SeriesValue variance_v2_series(double t, double sigma, long K);

/// sum_{k <= K} cos(k alpha) e^{-k (2 sigma + t - s)} (1 - e^{-2 k s}) / k, and the sin version.
SeriesValue cov_c_series(const CovarianceSpec& spec, long K);
SeriesValue cov_chat_series(const CovarianceSpec& spec, long K);

/// Absolute tolerance used by every kernel quadrature below.
inline constexpr double kQuadratureTolerance = 1e-10;

/// (1 / 2 pi) int P_r(theta) d theta by periodic trapezoid rule.
double poisson_mean_quadrature(double r);

/// int_sigma^{sigma + t} (1 + e^{-2x}) / (1 - e^{-2x}) dx - t.
double variance_v2_quadrature(double t, double sigma);

/// int_{sigma + (t - s)/2}^{sigma + (t + s)/2} P_{e^{-2x}}(alpha) dx - s, and the Q version without the shift.
double cov_c_quadrature(const CovarianceSpec& spec);
double cov_chat_quadrature(const CovarianceSpec& spec);

/// The two-stage route: int_0^s (1 / 2 pi) int K1_{r1(u)}(alpha - theta) K2_{r2(u)}(theta) d theta du,
/// with r1 = e^{-sigma - (t - u)}, r2 = e^{-sigma - (s - u)}. For cov_c, K1 = K2 = P and s
/// is subtracted; for cov_chat, K1 = P and K2 = Q.
double cov_c_double_integral(const CovarianceSpec& spec);
double cov_chat_double_integral(const CovarianceSpec& spec);

/// (1 / 2 pi) int P_{r1}(a - theta) P_{r2}(theta) d theta by quadrature. Equals P_{r1 r2}(a).
double poisson_product_quadrature(double r1, double r2, double a);

/// (1 / 2 pi) int P_{r1}(a - theta) Q_{r2}(theta) d theta by quadrature. Equals Q_{r1 r2}(a).
double poisson_conjugate_product_quadrature(double r1, double r2, double a);

}  // namespace hlzero

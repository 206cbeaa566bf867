#pragma once

#include <cstdint>
#include <vector>

#include "hlzero/conformal.hpp"

namespace hlzero {

/// Truncated Fourier-mode state of the limiting boundary process: A_k, B_k for
/// k = 1..K, each an Ornstein-Uhlenbeck process dA = -k A dt + sqrt(2) d beta.
struct OUState {
  int K = 0;
  double t = 0.0;
  std::vector<double> A;
  std::vector<double> B;
  std::uint64_t seed = 0;
  /// Per-mode engine positions. Mode k draws from derive_seed(seed, k), so the
  /// first K modes do not depend on how many modes follow.
  std::vector<std::uint64_t> draws;
};

OUState ou_init(int K, std::uint64_t seed);

/// Exact OU transition over dt > 0:
/// A_k <- e^{-k dt} A_k + g sqrt((1 - e^{-2 k dt}) / k), independently for A and B.
OUState ou_step(const OUState& state, double dt);

struct FieldValue {
  ComplexPoint value;
  double truncation_estimate = 0.0;  ///< r^{-(K+1)} / (1 - 1/r) max_k (|A_k| + |B_k|)
};

/// F(t, r e^{ia}) = sum_{k <= K} r^{-k} (A_k + i B_k) e^{-ika}, r > 1.
FieldValue eval_field(const OUState& state, double r, double a);

/// Smallest K whose expected tail r^{-K} / (1 - 1/r) E(|A| + |B|) is below tol,
/// using E(|A_k| + |B_k|) <= 2 sqrt(2 / pi).
int default_mode_count(double r_min, double tol = 1e-6);

/// c_k = (A_k + i B_k) / sqrt(2), k = 1..K (index k - 1).
struct BoundaryCoefficients {
  int K = 0;
  std::vector<ComplexPoint> coefficients;
};

BoundaryCoefficients boundary_coefficients(const OUState& state);

/// W(theta) = sum_k sqrt(2) c_k e^{-ik theta}.
ComplexPoint boundary_value(const BoundaryCoefficients& coeffs, double theta);

/// (1 / 2 pi) int P_{1/r}(a - theta) W(theta) d theta by the periodic trapezoid
/// rule, with enough nodes that aliasing is below double rounding.
ComplexPoint poisson_extension(const BoundaryCoefficients& coeffs, double r, double a);

/// The same smoothing done term by term: sum_k r^{-k} sqrt(2) c_k e^{-ika}.
ComplexPoint smoothed_field(const BoundaryCoefficients& coeffs, double r, double a);

/// K-mode draw of the stationary field: c_k = (g_k + i g'_k) / sqrt(2k).
BoundaryCoefficients stationary_fgf(int K, std::uint64_t seed);

struct ModeResidual {
  int k = 0;
  double a = 0.0;  ///< (A_k(t + dt) - e^{-k dt} A_k(t)) / sqrt((1 - e^{-2k dt}) / k)
  double b = 0.0;
};

/// Standardized per-mode innovations of one transition; standard normal when
/// the step followed the fractional stochastic heat equation.
std::vector<ModeResidual> fshe_residual(const OUState& before, const OUState& after, double dt);

}  // namespace hlzero

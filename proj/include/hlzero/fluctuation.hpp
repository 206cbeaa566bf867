#pragma once

#include <cstdint>
#include <vector>

#include "hlzero/cluster.hpp"

namespace hlzero {

/// One observation of F_n(t, e^{sigma + i a}) = (log(Phi_{floor(nt)}(z) / z) - floor(nt) c) / sqrt(c).
struct FluctuationSample {
  double t = 0.0;
  double sigma = 0.0;
  double a = 0.0;
  ComplexPoint value;
  std::int64_t n = 0;
  std::uint64_t seed = 0;
  std::int64_t run = 0;
};

/// floor(n t), guarded against t = k / n landing just below k after rounding.
std::int64_t steps_for_time(std::int64_t n, double t);

FluctuationSample fluctuation_field(const ClusterState& cluster, double t, double sigma, double a);

/// X_{k, n_t} + i Y_{k, n_t}: the k-th backwards martingale increment.
struct MartingaleIncrements {
  std::int64_t k = 0;
  double X = 0.0;
  double Y = 0.0;
  ComplexPoint Z_intermediate;  ///< F_{k+1} o ... o F_{n_t}(e^{sigma + i a})
};

/// Increment k alone. Costs O(n_t - k) map evaluations.
MartingaleIncrements increments(const ClusterState& cluster, std::int64_t k, std::int64_t n_t,
                                double sigma, double a);

/// All increments k = 1..n_t in one backwards pass; element k - 1 holds increment k.
std::vector<MartingaleIncrements> increment_sweep(const ClusterState& cluster, std::int64_t n_t,
                                                  double sigma, double a);

/// Increment generated at an arbitrary attachment angle theta from the fixed point Z.
MartingaleIncrements increment_at(const ParticleParams& p, std::int64_t k, ComplexPoint Z, double theta);

/// max(|X|, |Y|) sigma / sqrt(c) over a sweep, the empirical constant in |X| v |Y| <= C sqrt(c) / sigma.
double increment_bound_constant(const std::vector<MartingaleIncrements>& sweep, double capacity,
                                double sigma);

/// Conditional moments of increment k given the later angles, against their
/// Poisson-kernel approximations.
struct LlongRecord {
  std::int64_t k = 0;
  ComplexPoint z_t;  ///< Z_{k, n_t}(a)
  ComplexPoint z_s;  ///< Z_{k, n_s}(0)
  double xx_moment = 0.0;      ///< E[X_{k,n_t}(a) X_{k,n_s}(0) | later angles] + c
  double xx_theory = 0.0;      ///< (c / 2 pi) int P_{r1}(a - theta) P_{r2}(theta) d theta
  double xy_moment = 0.0;      ///< E[X_{k,n_t}(a) Y_{k,n_s}(0) | later angles]
  double xy_theory = 0.0;      ///< (c / 2 pi) int P_{r1}(a - theta) Q_{r2}(theta) d theta
  double xx_theory_closed = 0.0;  ///< c P_{r1 r2}(a)
  double xy_theory_closed = 0.0;  ///< c Q_{r1 r2}(a)
  double xx_gap = 0.0;
  double xy_gap = 0.0;
  double scale = 0.0;  ///< eps / (sigma + (n_s - k) c)^3 with the default eps
  double epsilon = 0.0;
  bool sigma_dominates = true;  ///< sigma >= 3 eps
};

/// The conditional expectation over Theta_k is a smooth periodic integral and
/// is evaluated by trapezoid quadrature, not sampling. Requires 1 <= k <= n_s <= n_t.
LlongRecord llong_diagnostic(const ClusterState& cluster, std::int64_t k, std::int64_t n_t,
                             std::int64_t n_s, double sigma, double a);

struct ConditionalMeanReport {
  std::int64_t k = 0;
  std::int64_t n_t = 0;
  std::int64_t resamples = 0;
  double mean_x = 0.0;
  double se_x = 0.0;
  double mean_y = 0.0;
  double se_y = 0.0;
};

/// Holds Z_{k, n_t}(a) fixed and redraws Theta_k `resamples` times from `seed`.
ConditionalMeanReport conditional_mean_test(const ClusterState& cluster, std::int64_t k,
                                            std::int64_t n_t, double sigma, double a,
                                            std::int64_t resamples, std::uint64_t seed);

}  // namespace hlzero

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hlzero/conformal.hpp"

namespace hlzero {

enum class Regime {
  fixed_t,  ///< particle size given explicitly; n c plays the role of t
  unit,     ///< c = 1 / n exactly
};

struct GrowthConfig {
  std::int64_t n = 0;
  std::optional<double> delta;
  std::optional<double> capacity;
  std::uint64_t seed = 0;
  Regime regime = Regime::unit;
};

/// Resolves the particle a config describes. Throws DomainError on an invalid
/// or ambiguous config (both or neither of delta/capacity in fixed_t, any of
/// them in unit, n < 1).
ParticleParams resolve_particle(const GrowthConfig& config);

/// A grown HL(0) cluster: the particle and the attachment angles Theta_1..Theta_n.
/// Immutable once built.
class ClusterState {
 public:
  ClusterState(ParticleParams particle, std::vector<double> angles, std::uint64_t seed);

  const ParticleParams& particle() const noexcept { return particle_; }
  std::span<const double> angles() const noexcept { return angles_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::int64_t size() const noexcept { return static_cast<std::int64_t>(angles_.size()); }

  /// e^{i Theta_j} for j = 1..n (index j - 1).
  ComplexPoint rotation(std::int64_t j) const noexcept { return rotations_[j - 1]; }

 private:
  ParticleParams particle_;
  std::vector<double> angles_;
  std::vector<ComplexPoint> rotations_;
  std::uint64_t seed_;
};

/// Draws Theta_j = uniform_angle(seed, j - 1), j = 1..n.
ClusterState grow(const GrowthConfig& config);

/// Phi_k(z) = F_1 o ... o F_k (z).
ComplexPoint evaluate_phi(const ClusterState& cluster, std::int64_t k, ComplexPoint z);

/// log(Phi_k(z) / z) as the telescoping sum of per-particle log increments.
ComplexPoint evaluate_log_phi(const ClusterState& cluster, std::int64_t k, ComplexPoint z);

/// Gamma_k(w) = G_k o ... o G_1 (w). Throws InsideClusterError when an
/// intermediate point leaves the exterior domain.
ComplexPoint evaluate_gamma(const ClusterState& cluster, std::int64_t k, ComplexPoint w);

/// Phi_k(e^{eta + i theta_j}) at m_points equispaced theta_j in [-pi, pi).
std::vector<ComplexPoint> trace_boundary(const ClusterState& cluster, std::int64_t k,
                                         int m_points, double eta = kDefaultBoundaryOffset);

struct GoodEventParams {
  double epsilon = 0.0;
  std::uint64_t m = 0;
  /// Forward clause is checked at n = stride, 2 stride, ... and always at the last n.
  std::int64_t forward_stride = 1;

  /// m = floor(delta^-6), epsilon = delta^{2/3} log(1/delta).
  static GoodEventParams defaults_for(double delta);
};

struct GoodEventPointReport {
  ComplexPoint z;
  double forward_worst = 0.0;  ///< max_n |e^{-cn} Phi_n(z) - z| / (eps e^{6 eps})
  double inverse_worst = 0.0;  ///< max_n |e^{cn} Gamma_n(w) - w| / (eps e^{5 eps + cn})
  ComplexPoint inverse_point;  ///< w, the point used for the inverse clause
  std::int64_t first_failure = 0;  ///< first n at which a clause failed, 0 if none
  bool ok = true;
};

struct GoodEventReport {
  bool passed = true;
  std::vector<GoodEventPointReport> points;
};

/// Default surrogate point set: half the points on |z| = e^{5 eps}, the other
/// half on |z| = 2 (or 2 e^{5 eps} when 2 is inside the first ring).
std::vector<ComplexPoint> default_good_event_points(double epsilon, int count = 32);

/// Finite-point surrogate of the good event E(min(k, m), eps).
///
/// The forward clause is tested at every sample point z. The inverse clause is
/// tested at w = e^{ck - eps} z, which satisfies |w| >= e^{cn + 4 eps} for every
/// n <= k, so one incremental sweep Gamma_1(w), Gamma_2(w), ... covers all n.
GoodEventReport good_event_check(const ClusterState& cluster, std::int64_t k,
                                 const GoodEventParams& params,
                                 std::span<const ComplexPoint> sample_points);

}  // namespace hlzero

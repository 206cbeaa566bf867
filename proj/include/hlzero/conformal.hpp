#pragma once

#include <complex>
#include <concepts>
#include <span>
#include <vector>

namespace hlzero {

using ComplexPoint = std::complex<double>;

/// Default radial offset used when a caller asks for values on |z| = 1.
inline constexpr double kDefaultBoundaryOffset = 1e-8;

/// Largest admissible particle diameter. Keeps r < 1/3 and gamma well inside (0, 1).
inline constexpr double kMaxDelta = 0.5;

/// The lens particle P1 = { |z - 1| <= r |z + 1| } outside the unit disc, whose
/// exterior map out is G(z) = z (gamma z - 1) / (z - gamma).
struct ParticleParams {
  double delta = 0.0;     ///< diameter scale; the tip sits at 1 / (1 - delta)
  double r = 0.0;         ///< delta / (2 - delta)
  double gamma = 0.0;     ///< (1 - r^2) / (1 + r^2)
  double capacity = 0.0;  ///< logarithmic capacity, -log(gamma)
};

/// Builds the particle of diameter `delta`, 0 < delta < 1/2.
/// Throws DomainError outside that interval.
ParticleParams make_particle(double delta);

/// Builds the particle whose logarithmic capacity equals `capacity` exactly
/// (up to rounding). The capacity must correspond to delta in (0, 1/2).
ParticleParams particle_from_capacity(double capacity);

/// Threshold below which the capacity bounds delta^2/6 <= c <= 3 delta^2/4
/// are verified for the P1 family (checked on a grid in the test suite).
inline constexpr double kCapacityBoundThreshold = 0.2;

/// True when z lies in the closed particle P1 attached at 1 (and |z| >= 1).
bool inside_particle(const ParticleParams& p, ComplexPoint z);

/// G(z) = z (gamma z - 1) / (z - gamma). Requires |z| > 1.
/// Throws SingularityError at the pole, DomainError for |z| <= 1.
ComplexPoint map_G(const ParticleParams& p, ComplexPoint z);

/// F = G^{-1} on |z| > 1: the larger-modulus root of
/// gamma w^2 - (1 + z) w + gamma z = 0.
ComplexPoint map_F(const ParticleParams& p, ComplexPoint z);

/// e^{i theta} F(e^{-i theta} z): the particle attached at e^{i theta}.
ComplexPoint rotated_F(const ParticleParams& p, double theta, ComplexPoint z);

/// e^{i theta} G(e^{-i theta} z).
ComplexPoint rotated_G(const ParticleParams& p, double theta, ComplexPoint z);

/// log(F(z) / z) with argument in [-pi, pi). Real part is positive.
ComplexPoint log_increment(const ParticleParams& p, ComplexPoint z);

/// Same as log_increment but also hands back F(z), which the cluster sweeps need.
struct IncrementStep {
  ComplexPoint image;      ///< F(z)
  ComplexPoint log_ratio;  ///< log(F(z) / z)
};
IncrementStep increment_step(const ParticleParams& p, ComplexPoint z);

/// One line of the distortion table.
struct DistortionRow {
  ComplexPoint z;
  double scale_ratio;  ///< |F(z) - e^c z| (|z| - 1) / (c |z|)
  double log_ratio;    ///< |log(F(z)/z) - c (z+1)/(z-1)| (|z| - 1)^3 / (c^{3/2} |z|^2)
  bool guaranteed;     ///< false when |z - 1| <= 2 delta (outside the estimates' regime)
};

std::vector<DistortionRow> distortion_report(const ParticleParams& p,
                                             std::span<const ComplexPoint> z_grid);

/// Plug-in point for other particle families. Only P1 ships.
template <typename M>
concept ParticleMapping = requires(const M& m, ComplexPoint z) {
  { m.forward(z) } -> std::convertible_to<ComplexPoint>;
  { m.inverse(z) } -> std::convertible_to<ComplexPoint>;
  { m.capacity() } -> std::convertible_to<double>;
};

class P1Mapping {
 public:
  explicit P1Mapping(ParticleParams params) : params_(params) {}
  ComplexPoint forward(ComplexPoint z) const { return map_F(params_, z); }
  ComplexPoint inverse(ComplexPoint z) const { return map_G(params_, z); }
  double capacity() const { return params_.capacity; }
  const ParticleParams& params() const { return params_; }

 private:
  ParticleParams params_;
};

static_assert(ParticleMapping<P1Mapping>);

}  // namespace hlzero

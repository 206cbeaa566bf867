#include "hlzero/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "hlzero/errors.hpp"

namespace hlzero {

namespace {

constexpr double kRootGapTolerance = 1e-9;

void require_finite(ComplexPoint z, const char* where) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
    throw DomainError(std::string(where) + ": non-finite argument");
  }
}

void require_outside_disc(ComplexPoint z, const char* where) {
  require_finite(z, where);
  if (!(std::norm(z) > 1.0)) {
    std::ostringstream msg;
    msg << where << ": |z| = " << std::abs(z) << " is not > 1";
    throw DomainError(msg.str());
  }
}

// Some square root of d. Both signs are handled by the caller, so no branch
// bookkeeping is needed, which makes this much cheaper than std::sqrt.
ComplexPoint any_sqrt(ComplexPoint d) {
  const double x = d.real();
  const double y = d.imag();
  const double t = std::sqrt(0.5 * (std::sqrt(x * x + y * y) + std::abs(x)));
  if (t == 0.0) return {0.0, 0.0};
  return x >= 0.0 ? ComplexPoint{t, 0.5 * y / t} : ComplexPoint{0.5 * std::abs(y) / t, std::copysign(t, y)};
}

}  // namespace

ParticleParams make_particle(double delta) {
  if (!(delta > 0.0 && delta < kMaxDelta)) {
    std::ostringstream msg;
    msg << "particle diameter delta = " << delta << " outside admissible interval (0, " << kMaxDelta
        << ")";
    throw DomainError(msg.str());
  }
  ParticleParams p;
  p.delta = delta;
  p.r = delta / (2.0 - delta);
  const double r2 = p.r * p.r;
  p.gamma = (1.0 - r2) / (1.0 + r2);
  // -log(gamma) = log1p(r^2) - log1p(-r^2), accurate for tiny particles
  p.capacity = std::log1p(r2) - std::log1p(-r2);
  return p;
}

ParticleParams particle_from_capacity(double capacity) {
  // gamma = e^{-c} and r^2 = (1 - gamma) / (1 + gamma) = tanh(c / 2)
  const double c_max = make_particle(std::nextafter(kMaxDelta, 0.0)).capacity;
  if (!(capacity > 0.0 && capacity < c_max)) {
    std::ostringstream msg;
    msg << "capacity c = " << capacity << " outside admissible interval (0, " << c_max << ")";
    throw DomainError(msg.str());
  }
  ParticleParams p;
  p.capacity = capacity;
  p.gamma = std::exp(-capacity);
  p.r = std::sqrt(std::tanh(0.5 * capacity));
  p.delta = 2.0 * p.r / (1.0 + p.r);
  return p;
}

bool inside_particle(const ParticleParams& p, ComplexPoint z) {
  return std::abs(z) >= 1.0 && std::abs(z - 1.0) <= p.r * std::abs(z + 1.0);
}

ComplexPoint map_G(const ParticleParams& p, ComplexPoint z) {
  require_finite(z, "map_G");
  const ComplexPoint denom = z - p.gamma;
  if (std::abs(denom) <= 4.0 * std::numeric_limits<double>::epsilon()) {
    throw SingularityError("map_G: evaluation at the pole z = gamma");
  }
  require_outside_disc(z, "map_G");
  return z * (p.gamma * z - 1.0) / denom;
}

ComplexPoint map_F(const ParticleParams& p, ComplexPoint z) {
  require_outside_disc(z, "map_F");
  const ComplexPoint b = 1.0 + z;
  const ComplexPoint s = any_sqrt(b * b - 4.0 * p.gamma * p.gamma * z);
  // pick the sign that avoids cancellation; the companion root is z / w
  const ComplexPoint q = (std::real(std::conj(b) * s) >= 0.0) ? b + s : b - s;
  const ComplexPoint w1 = q / (2.0 * p.gamma);
  const ComplexPoint w2 = 2.0 * p.gamma * z / q;
  // compare squared moduli; the relative gap tolerance is halved accordingly
  const double m1 = std::norm(w1);
  const double m2 = std::norm(w2);
  const double hi = std::max(m1, m2);
  if (hi - std::min(m1, m2) < 2.0 * kRootGapTolerance * hi ||
      hi < std::norm(z) * (1.0 - 2e-12)) {
    std::ostringstream msg;
    msg << "map_F: ambiguous inverse branch at z = " << z << " (root moduli " << std::sqrt(m1)
        << ", " << std::sqrt(m2)
        << ")";
    throw InvariantError(msg.str());
  }
  return m1 >= m2 ? w1 : w2;
}

ComplexPoint rotated_F(const ParticleParams& p, double theta, ComplexPoint z) {
  const ComplexPoint rot = std::polar(1.0, theta);
  return rot * map_F(p, std::conj(rot) * z);
}

ComplexPoint rotated_G(const ParticleParams& p, double theta, ComplexPoint z) {
  const ComplexPoint rot = std::polar(1.0, theta);
  return rot * map_G(p, std::conj(rot) * z);
}

IncrementStep increment_step(const ParticleParams& p, ComplexPoint z) {
  const ComplexPoint image = map_F(p, z);
  ComplexPoint lr = std::log(image / z);
  // principal branch is (-pi, pi]; the convention here is [-pi, pi)
  if (lr.imag() >= std::numbers::pi) lr.imag(-std::numbers::pi);
  return {image, lr};
}

ComplexPoint log_increment(const ParticleParams& p, ComplexPoint z) {
  return increment_step(p, z).log_ratio;
}

std::vector<DistortionRow> distortion_report(const ParticleParams& p,
                                             std::span<const ComplexPoint> z_grid) {
  std::vector<DistortionRow> rows;
  rows.reserve(z_grid.size());
  const double c = p.capacity;
  const double ec = 1.0 / p.gamma;
  for (const ComplexPoint z : z_grid) {
    const auto step = increment_step(p, z);
    const double mod = std::abs(z);
    DistortionRow row;
    row.z = z;
    row.scale_ratio = std::abs(step.image - ec * z) * (mod - 1.0) / (c * mod);
    const ComplexPoint first_order = c * (z + 1.0) / (z - 1.0);
    row.log_ratio = std::abs(step.log_ratio - first_order) * std::pow(mod - 1.0, 3) /
                    (std::pow(c, 1.5) * mod * mod);
    row.guaranteed = std::abs(z - 1.0) > 2.0 * p.delta;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace hlzero

#include "hlzero/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "hlzero/errors.hpp"
#include "hlzero/rng.hpp"

namespace hlzero {

namespace {

void require_k(const ClusterState& cluster, std::int64_t k) {
  if (k < 0 || k > cluster.size()) {
    std::ostringstream msg;
    msg << "composition depth k = " << k << " outside [0, " << cluster.size() << "]";
    throw DomainError(msg.str());
  }
}

// G_j applied to w, with the exterior-domain checks of evaluate_gamma.
ComplexPoint gamma_step(const ClusterState& cluster, std::int64_t j, ComplexPoint w) {
  const ParticleParams& p = cluster.particle();
  const ComplexPoint rot = cluster.rotation(j);
  const ComplexPoint u = std::conj(rot) * w;
  if (!(std::abs(u) > 1.0) || inside_particle(p, u)) {
    std::ostringstream msg;
    msg << "point inside cluster: step " << j << " reached " << w;
    throw InsideClusterError(msg.str());
  }
  ComplexPoint out;
  try {
    out = rot * map_G(p, u);
  } catch (const SingularityError&) {
    throw InsideClusterError("point inside cluster: hit the map pole");
  }
  if (!(std::abs(out) > 1.0)) {
    std::ostringstream msg;
    msg << "point inside cluster: step " << j << " mapped into the closed unit disc";
    throw InsideClusterError(msg.str());
  }
  return out;
}

}  // namespace

ParticleParams resolve_particle(const GrowthConfig& config) {
  if (config.n < 1) throw DomainError("particle count n must be positive");
  if (config.regime == Regime::unit) {
    if (config.delta || config.capacity) {
      throw DomainError("regime unit fixes c = 1/n; delta and capacity must not be given");
    }
    return particle_from_capacity(1.0 / static_cast<double>(config.n));
  }
  if (config.delta.has_value() == config.capacity.has_value()) {
    throw DomainError("exactly one of delta and capacity must be given");
  }
  return config.delta ? make_particle(*config.delta) : particle_from_capacity(*config.capacity);
}

ClusterState::ClusterState(ParticleParams particle, std::vector<double> angles, std::uint64_t seed)
    : particle_(particle), angles_(std::move(angles)), seed_(seed) {
  rotations_.reserve(angles_.size());
  for (const double theta : angles_) {
    if (!(theta >= -std::numbers::pi && theta < std::numbers::pi)) {
      throw DomainError("attachment angle outside [-pi, pi)");
    }
    rotations_.push_back(std::polar(1.0, theta));
  }
}

ClusterState grow(const GrowthConfig& config) {
  const ParticleParams particle = resolve_particle(config);
  std::vector<double> angles(static_cast<std::size_t>(config.n));
  for (std::size_t i = 0; i < angles.size(); ++i) angles[i] = uniform_angle(config.seed, i);
  return ClusterState(particle, std::move(angles), config.seed);
}

ComplexPoint evaluate_phi(const ClusterState& cluster, std::int64_t k, ComplexPoint z) {
  require_k(cluster, k);
  const ParticleParams& p = cluster.particle();
  for (std::int64_t j = k; j >= 1; --j) {
    const ComplexPoint rot = cluster.rotation(j);
    z = rot * map_F(p, std::conj(rot) * z);
  }
  return z;
}

ComplexPoint evaluate_log_phi(const ClusterState& cluster, std::int64_t k, ComplexPoint z) {
  require_k(cluster, k);
  const ParticleParams& p = cluster.particle();
  ComplexPoint sum{0.0, 0.0};
  for (std::int64_t j = k; j >= 1; --j) {
    const ComplexPoint rot = cluster.rotation(j);
    const IncrementStep step = increment_step(p, std::conj(rot) * z);
    sum += step.log_ratio;
    z = rot * step.image;
  }
  return sum;
}

ComplexPoint evaluate_gamma(const ClusterState& cluster, std::int64_t k, ComplexPoint w) {
  require_k(cluster, k);
  for (std::int64_t j = 1; j <= k; ++j) w = gamma_step(cluster, j, w);
  return w;
}

std::vector<ComplexPoint> trace_boundary(const ClusterState& cluster, std::int64_t k,
                                         int m_points, double eta) {
  if (m_points < 16) throw DomainError("trace_boundary needs at least 16 points");
  if (!(eta > 0.0)) throw DomainError("boundary offset eta must be positive");
  require_k(cluster, k);
  std::vector<ComplexPoint> out(static_cast<std::size_t>(m_points));
  const double radius = std::exp(eta);
  for (int j = 0; j < m_points; ++j) {
    const double theta = -std::numbers::pi + 2.0 * std::numbers::pi * j / m_points;
    out[j] = evaluate_phi(cluster, k, std::polar(radius, theta));
  }
  return out;
}

GoodEventParams GoodEventParams::defaults_for(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("good event defaults need 0 < delta < 1");
  GoodEventParams g;
  g.epsilon = std::pow(delta, 2.0 / 3.0) * std::log(1.0 / delta);
  const double m = std::floor(std::pow(delta, -6.0));
  g.m = m >= 1.8e19 ? UINT64_MAX : static_cast<std::uint64_t>(m);
  return g;
}

std::vector<ComplexPoint> default_good_event_points(double epsilon, int count) {
  if (count < 2 || count % 2 != 0) throw DomainError("good event point count must be even and >= 2");
  const double inner = std::exp(5.0 * epsilon);
  const double outer = 2.0 >= inner ? 2.0 : 2.0 * inner;
  const int half = count / 2;
  std::vector<ComplexPoint> pts;
  pts.reserve(count);
  for (int j = 0; j < half; ++j) {
    pts.push_back(std::polar(inner, -std::numbers::pi + 2.0 * std::numbers::pi * j / half));
  }
  for (int j = 0; j < half; ++j) {
    pts.push_back(std::polar(outer, -std::numbers::pi + 2.0 * std::numbers::pi * (j + 0.5) / half));
  }
  return pts;
}

GoodEventReport good_event_check(const ClusterState& cluster, std::int64_t k,
                                 const GoodEventParams& params,
                                 std::span<const ComplexPoint> sample_points) {
  require_k(cluster, k);
  const double eps = params.epsilon;
  if (!(eps > 0.0)) throw DomainError("good event epsilon must be positive");
  if (params.forward_stride < 1) throw DomainError("forward stride must be >= 1");
  const double r_min = std::exp(5.0 * eps);
  for (const ComplexPoint z : sample_points) {
    if (std::abs(z) < r_min * (1.0 - 1e-14)) {
      std::ostringstream msg;
      msg << "good event sample point " << z << " has modulus below e^{5 eps} = " << r_min;
      throw DomainError(msg.str());
    }
  }

  const ParticleParams& p = cluster.particle();
  const double c = p.capacity;
  const std::int64_t last =
      static_cast<std::uint64_t>(k) < params.m ? k : static_cast<std::int64_t>(params.m);
  const double forward_bound = eps * std::exp(6.0 * eps);

  GoodEventReport report;
  report.points.reserve(sample_points.size());
  for (const ComplexPoint z : sample_points) {
    GoodEventPointReport row;
    row.z = z;
    auto fail_at = [&row](std::int64_t n) {
      if (row.ok || n < row.first_failure) row.first_failure = n;
      row.ok = false;
    };

    for (std::int64_t n = 1; n <= last; ++n) {
      if (n % params.forward_stride != 0 && n != last) continue;
      const ComplexPoint phi = evaluate_phi(cluster, n, z);
      const double ratio = std::abs(std::exp(-c * n) * phi - z) / forward_bound;
      row.forward_worst = std::max(row.forward_worst, ratio);
      if (!(ratio < 1.0)) {
        fail_at(n);
        break;
      }
    }

    // |w| >= e^{cn + 4 eps} for every n <= last
    const ComplexPoint w = std::exp(c * last - eps) * z;
    row.inverse_point = w;
    ComplexPoint g = w;
    for (std::int64_t n = 1; n <= last; ++n) {
      const double bound = eps * std::exp(5.0 * eps + c * n);
      double ratio;
      try {
        g = gamma_step(cluster, n, g);
        ratio = std::abs(std::exp(c * n) * g - w) / bound;
      } catch (const InsideClusterError&) {
        ratio = std::numeric_limits<double>::infinity();
      }
      row.inverse_worst = std::max(row.inverse_worst, ratio);
      if (!(ratio < 1.0)) {
        fail_at(n);
        break;
      }
    }

    report.passed = report.passed && row.ok;
    report.points.push_back(row);
  }
  return report;
}

}  // namespace hlzero

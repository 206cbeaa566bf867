#include "hlzero/fluctuation.hpp"

#include <algorithm>
#include <boost/math/quadrature/trapezoidal.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

#include "hlzero/errors.hpp"
#include "hlzero/rng.hpp"
#include "hlzero/theory.hpp"

namespace hlzero {

namespace {

void require_sigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("sigma must be a positive real");
}

void require_range(const ClusterState& cluster, std::int64_t k, std::int64_t n_t) {
  if (!(1 <= k && k <= n_t && n_t <= cluster.size())) {
    std::ostringstream msg;
    msg << "increment indices need 1 <= k <= n_t <= n (k = " << k << ", n_t = " << n_t
        << ", n = " << cluster.size() << ")";
    throw DomainError(msg.str());
  }
}

// F_{k+1} o ... o F_{n_t}(z)
ComplexPoint inner_point(const ClusterState& cluster, std::int64_t k, std::int64_t n_t, ComplexPoint z) {
  const ParticleParams& p = cluster.particle();
  for (std::int64_t j = n_t; j > k; --j) {
    const ComplexPoint rot = cluster.rotation(j);
    z = rot * map_F(p, std::conj(rot) * z);
  }
  return z;
}

}  // namespace

std::int64_t steps_for_time(std::int64_t n, double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("time t must be a nonnegative real");
  return static_cast<std::int64_t>(std::floor(static_cast<double>(n) * t * (1.0 + 1e-12)));
}

FluctuationSample fluctuation_field(const ClusterState& cluster, double t, double sigma, double a) {
  require_sigma(sigma);
  const std::int64_t steps = steps_for_time(cluster.size(), t);
  if (steps > cluster.size()) {
    std::ostringstream msg;
    msg << "floor(n t) = " << steps << " exceeds the cluster size " << cluster.size();
    throw DomainError(msg.str());
  }
  const double c = cluster.particle().capacity;
  const ComplexPoint z = std::exp(ComplexPoint(sigma, a));
  const ComplexPoint lp = evaluate_log_phi(cluster, steps, z);
  FluctuationSample s;
  s.t = t;
  s.sigma = sigma;
  s.a = a;
  s.value = (lp - static_cast<double>(steps) * c) / std::sqrt(c);
  s.n = cluster.size();
  s.seed = cluster.seed();
  return s;
}

MartingaleIncrements increment_at(const ParticleParams& p, std::int64_t k, ComplexPoint Z, double theta) {
  const double c = p.capacity;
  const ComplexPoint lr = log_increment(p, std::polar(1.0, -theta) * Z);
  const double root_c = std::sqrt(c);
  return {k, (lr.real() - c) / root_c, lr.imag() / root_c, Z};
}

MartingaleIncrements increments(const ClusterState& cluster, std::int64_t k, std::int64_t n_t,
                                double sigma, double a) {
  require_sigma(sigma);
  require_range(cluster, k, n_t);
  const ComplexPoint Z = inner_point(cluster, k, n_t, std::exp(ComplexPoint(sigma, a)));
  return increment_at(cluster.particle(), k, Z, cluster.angles()[k - 1]);
}

std::vector<MartingaleIncrements> increment_sweep(const ClusterState& cluster, std::int64_t n_t,
                                                  double sigma, double a) {
  require_sigma(sigma);
  if (n_t < 0 || n_t > cluster.size()) throw DomainError("n_t outside [0, n]");
  const ParticleParams& p = cluster.particle();
  const double c = p.capacity;
  const double root_c = std::sqrt(c);
  std::vector<MartingaleIncrements> out(static_cast<std::size_t>(n_t));
  ComplexPoint Z = std::exp(ComplexPoint(sigma, a));
  for (std::int64_t k = n_t; k >= 1; --k) {
    const ComplexPoint rot = cluster.rotation(k);
    const IncrementStep step = increment_step(p, std::conj(rot) * Z);
    out[k - 1] = {k, (step.log_ratio.real() - c) / root_c, step.log_ratio.imag() / root_c, Z};
    Z = rot * step.image;
  }
  return out;
}

double increment_bound_constant(const std::vector<MartingaleIncrements>& sweep, double capacity,
                                double sigma) {
  double worst = 0.0;
  for (const auto& m : sweep) worst = std::max({worst, std::abs(m.X), std::abs(m.Y)});
  return worst * sigma / std::sqrt(capacity);
}

LlongRecord llong_diagnostic(const ClusterState& cluster, std::int64_t k, std::int64_t n_t,
                             std::int64_t n_s, double sigma, double a) {
  require_sigma(sigma);
  require_range(cluster, k, n_s);
  if (n_s > n_t) throw DomainError("llong_diagnostic needs n_s <= n_t");
  const ParticleParams& p = cluster.particle();
  const double c = p.capacity;

  LlongRecord rec;
  rec.k = k;
  rec.z_t = inner_point(cluster, k, n_t, std::exp(ComplexPoint(sigma, a)));
  rec.z_s = inner_point(cluster, k, n_s, std::exp(ComplexPoint(sigma, 0.0)));

  const auto mean_over_theta = [](auto f) {
    return boost::math::quadrature::trapezoidal(f, -std::numbers::pi, std::numbers::pi, 1e-12, 22) /
           (2.0 * std::numbers::pi);
  };
  rec.xx_moment = mean_over_theta([&](double th) {
                    return increment_at(p, k, rec.z_t, th).X * increment_at(p, k, rec.z_s, th).X;
                  }) +
                  c;
  rec.xy_moment = mean_over_theta([&](double th) {
    return increment_at(p, k, rec.z_t, th).X * increment_at(p, k, rec.z_s, th).Y;
  });

  const double r1 = std::exp(-sigma - static_cast<double>(n_t - k) * c);
  const double r2 = std::exp(-sigma - static_cast<double>(n_s - k) * c);
  rec.xx_theory = c * poisson_product_quadrature(r1, r2, a);
  rec.xy_theory = c * poisson_conjugate_product_quadrature(r1, r2, a);
  rec.xx_theory_closed = c * poisson_kernel(r1 * r2, a);
  rec.xy_theory_closed = c * conjugate_kernel(r1 * r2, a);
  rec.xx_gap = std::abs(rec.xx_moment - rec.xx_theory);
  rec.xy_gap = std::abs(rec.xy_moment - rec.xy_theory);

  rec.epsilon = GoodEventParams::defaults_for(p.delta).epsilon;
  rec.scale = rec.epsilon / std::pow(sigma + static_cast<double>(n_s - k) * c, 3);
  rec.sigma_dominates = sigma >= 3.0 * rec.epsilon;
  return rec;
}

ConditionalMeanReport conditional_mean_test(const ClusterState& cluster, std::int64_t k,
                                            std::int64_t n_t, double sigma, double a,
                                            std::int64_t resamples, std::uint64_t seed) {
  require_sigma(sigma);
  require_range(cluster, k, n_t);
  if (resamples < 2) throw DomainError("conditional_mean_test needs at least 2 resamples");
  const ParticleParams& p = cluster.particle();
  const ComplexPoint Z = inner_point(cluster, k, n_t, std::exp(ComplexPoint(sigma, a)));

  // Welford
  double mx = 0.0, my = 0.0, sx = 0.0, sy = 0.0;
  for (std::int64_t i = 0; i < resamples; ++i) {
    const auto m = increment_at(p, k, Z, uniform_angle(seed, static_cast<std::uint64_t>(i)));
    const double n = static_cast<double>(i + 1);
    const double dx = m.X - mx;
    mx += dx / n;
    sx += dx * (m.X - mx);
    const double dy = m.Y - my;
    my += dy / n;
    sy += dy * (m.Y - my);
  }
  const double M = static_cast<double>(resamples);
  ConditionalMeanReport rep;
  rep.k = k;
  rep.n_t = n_t;
  rep.resamples = resamples;
  rep.mean_x = mx;
  rep.mean_y = my;
  rep.se_x = std::sqrt(sx / (M - 1.0) / M);
  rep.se_y = std::sqrt(sy / (M - 1.0) / M);
  return rep;
}

}  // namespace hlzero

#include "hlzero/limitfield.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "hlzero/errors.hpp"
#include "hlzero/rng.hpp"

namespace hlzero {

namespace {

void require_radius(double r, const char* where) {
  if (!(r > 1.0) || !std::isfinite(r)) {
    std::ostringstream msg;
    msg << where << ": radius r = " << r << " must exceed 1";
    throw DomainError(msg.str());
  }
}

// (1 - e^{-2 k dt}) / k without cancellation for small k dt
double transition_variance(int k, double dt) { return -std::expm1(-2.0 * k * dt) / k; }

}  // namespace

OUState ou_init(int K, std::uint64_t seed) {
  if (K < 1) throw DomainError("mode truncation K must be at least 1");
  OUState s;
  s.K = K;
  s.A.assign(K, 0.0);
  s.B.assign(K, 0.0);
  s.draws.assign(K, 0);
  s.seed = seed;
  return s;
}

OUState ou_step(const OUState& state, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("ou_step needs dt > 0");
  OUState next = state;
  for (int k = 1; k <= state.K; ++k) {
    CounterEngine engine(derive_seed(state.seed, static_cast<std::uint64_t>(k)), state.draws[k - 1]);
    std::normal_distribution<double> normal;
    const double decay = std::exp(-k * dt);
    const double sd = std::sqrt(transition_variance(k, dt));
    next.A[k - 1] = decay * state.A[k - 1] + sd * normal(engine);
    next.B[k - 1] = decay * state.B[k - 1] + sd * normal(engine);
    next.draws[k - 1] = engine.position();
  }
  next.t = state.t + dt;
  return next;
}

FieldValue eval_field(const OUState& state, double r, double a) {
  require_radius(r, "eval_field");
  const double inv = 1.0 / r;
  double re = 0.0, im = 0.0, rk = 1.0, biggest = 0.0;
  for (int k = 1; k <= state.K; ++k) {
    rk *= inv;
    const double ck = std::cos(k * a);
    const double sk = std::sin(k * a);
    const double A = state.A[k - 1];
    const double B = state.B[k - 1];
    re += rk * (A * ck + B * sk);
    im += rk * (B * ck - A * sk);
    biggest = std::max(biggest, std::abs(A) + std::abs(B));
  }
  return {{re, im}, rk * inv / (1.0 - inv) * biggest};
}

int default_mode_count(double r_min, double tol) {
  require_radius(r_min, "default_mode_count");
  if (!(tol > 0.0)) throw DomainError("default_mode_count needs tol > 0");
  const double mean_abs = 2.0 * std::sqrt(2.0 / std::numbers::pi);
  const double scale = mean_abs / (1.0 - 1.0 / r_min);
  const double K = std::ceil(std::log(scale / tol) / std::log(r_min));
  return std::max(1, static_cast<int>(K));
}

BoundaryCoefficients boundary_coefficients(const OUState& state) {
  BoundaryCoefficients out;
  out.K = state.K;
  out.coefficients.resize(state.K);
  for (int k = 0; k < state.K; ++k) {
    out.coefficients[k] = ComplexPoint(state.A[k], state.B[k]) / std::numbers::sqrt2;
  }
  return out;
}

ComplexPoint boundary_value(const BoundaryCoefficients& coeffs, double theta) {
  ComplexPoint w{0.0, 0.0};
  for (int k = 1; k <= coeffs.K; ++k) {
    w += std::numbers::sqrt2 * coeffs.coefficients[k - 1] * std::polar(1.0, -k * theta);
  }
  return w;
}

ComplexPoint poisson_extension(const BoundaryCoefficients& coeffs, double r, double a) {
  require_radius(r, "poisson_extension");
  // N nodes integrate e^{ij theta} exactly for |j| < N; the kernel's modes
  // beyond N - K alias with weight (1/r)^{N - K}
  const double rho = 1.0 / r;
  const int extra = static_cast<int>(std::ceil(std::log(1e-17) / std::log(rho)));
  const int N = coeffs.K + std::max(extra, 1) + 1;
  ComplexPoint sum{0.0, 0.0};
  for (int j = 0; j < N; ++j) {
    const double theta = 2.0 * std::numbers::pi * j / N;
    const double x = a - theta;
    const double kernel = (1.0 - rho * rho) / (1.0 - 2.0 * rho * std::cos(x) + rho * rho);
    sum += kernel * boundary_value(coeffs, theta);
  }
  return sum / static_cast<double>(N);
}

ComplexPoint smoothed_field(const BoundaryCoefficients& coeffs, double r, double a) {
  require_radius(r, "smoothed_field");
  ComplexPoint sum{0.0, 0.0};
  double rk = 1.0;
  for (int k = 1; k <= coeffs.K; ++k) {
    rk /= r;
    sum += rk * std::numbers::sqrt2 * coeffs.coefficients[k - 1] * std::polar(1.0, -k * a);
  }
  return sum;
}

BoundaryCoefficients stationary_fgf(int K, std::uint64_t seed) {
  if (K < 1) throw DomainError("mode truncation K must be at least 1");
  CounterEngine engine(seed);
  std::normal_distribution<double> normal;
  BoundaryCoefficients out;
  out.K = K;
  out.coefficients.resize(K);
  for (int k = 1; k <= K; ++k) {
    const double g = normal(engine);
    const double h = normal(engine);
    out.coefficients[k - 1] = ComplexPoint(g, h) / std::sqrt(2.0 * k);
  }
  return out;
}

std::vector<ModeResidual> fshe_residual(const OUState& before, const OUState& after, double dt) {
  if (!(dt > 0.0)) throw DomainError("fshe_residual needs dt > 0");
  if (before.K != after.K) throw DomainError("fshe_residual: mode counts differ");
  if (std::abs(after.t - before.t - dt) > 1e-9 * std::max(1.0, after.t)) {
    throw DomainError("fshe_residual: states are not dt apart");
  }
  std::vector<ModeResidual> out(before.K);
  for (int k = 1; k <= before.K; ++k) {
    const double decay = std::exp(-k * dt);
    const double sd = std::sqrt(transition_variance(k, dt));
    out[k - 1] = {k, (after.A[k - 1] - decay * before.A[k - 1]) / sd,
                  (after.B[k - 1] - decay * before.B[k - 1]) / sd};
  }
  return out;
}

}  // namespace hlzero

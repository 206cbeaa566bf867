#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "hlzero/conformal.hpp"
#include "hlzero/errors.hpp"

using namespace hlzero;

namespace {

// Grid over 1.05 <= |z| <= 10 with 64 angles per ring.
std::vector<ComplexPoint> annulus_grid() {
  std::vector<ComplexPoint> grid;
  for (int i = 0; i <= 20; ++i) {
    const double rho = 1.05 * std::pow(10.0 / 1.05, i / 20.0);
    for (int j = 0; j < 64; ++j) {
      grid.push_back(std::polar(rho, -std::numbers::pi + 2.0 * std::numbers::pi * j / 64.0));
    }
  }
  return grid;
}

// Independent oracle for F on the real axis: G is increasing on (1/(1-delta), inf).
double bisect_real_F(const ParticleParams& p, double x) {
  const double g = p.gamma;
  auto G = [g](double w) { return w * (g * w - 1.0) / (w - g); };
  double lo = 1.0 / (1.0 - p.delta);
  double hi = 4.0 * x + 4.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (G(mid) < x ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_SUITE("conformal") {

TEST_CASE("particle parameters at delta = 0.1") {
  const auto p = make_particle(0.1);
  CHECK(p.r == doctest::Approx(0.05263157894736842).epsilon(1e-15));
  CHECK(p.gamma == doctest::Approx(0.9944751381215470).epsilon(1e-15));
  CHECK(p.capacity == doctest::Approx(0.005540180375615371).epsilon(1e-13));
  CHECK(p.capacity >= 0.1 * 0.1 / 6.0);
  CHECK(p.capacity <= 3.0 * 0.1 * 0.1 / 4.0);
}

TEST_CASE("capacity bounds over the delta grid") {
  const double deltas[] = {0.2, 0.1, 0.05, 0.02, 0.01};
  const double frozen[] = {0.02469261259037150, 0.005540180375615371, 0.001314924581309073,
                           0.0002040608108295210, 5.050377516792771e-5};
  for (int i = 0; i < 5; ++i) {
    const auto p = make_particle(deltas[i]);
    CHECK(p.capacity == doctest::Approx(frozen[i]).epsilon(1e-12));
    CHECK(p.capacity >= deltas[i] * deltas[i] / 6.0);
    CHECK(p.capacity <= 0.75 * deltas[i] * deltas[i]);
  }
  CHECK(deltas[0] <= kCapacityBoundThreshold);
}

TEST_CASE("delta outside (0, 1/2) is rejected") {
  CHECK_THROWS_AS(make_particle(0.0), DomainError);
  CHECK_THROWS_AS(make_particle(-0.1), DomainError);
  CHECK_THROWS_AS(make_particle(0.5), DomainError);
  CHECK_THROWS_AS(make_particle(std::nan("")), DomainError);
  CHECK_THROWS_WITH(make_particle(0.7), doctest::Contains("(0, 0.5)"));
}

TEST_CASE("capacity inverse recovers delta") {
  for (double delta : {0.3, 0.1, 0.0316, 0.001}) {
    const auto direct = make_particle(delta);
    const auto back = particle_from_capacity(direct.capacity);
    CHECK(back.delta == doctest::Approx(delta).epsilon(1e-10));
    CHECK(back.gamma == doctest::Approx(direct.gamma).epsilon(1e-14));
  }
  // bisection on the monotone map delta -> c as an independent oracle
  const double target = 1.0 / 2000.0;
  double lo = 1e-6, hi = 0.49;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (make_particle(mid).capacity < target ? lo : hi) = mid;
  }
  const auto p = particle_from_capacity(target);
  CHECK(p.capacity == target);
  CHECK(p.delta == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-12));
  CHECK_THROWS_AS(particle_from_capacity(0.0), DomainError);
  CHECK_THROWS_AS(particle_from_capacity(1.0), DomainError);
}

TEST_CASE("G maps the tip to the unit circle") {
  const auto p = make_particle(0.1);
  CHECK(std::abs(map_G(p, 1.0 / (1.0 - 0.1))) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("G errors and asymptotics") {
  const auto p = make_particle(0.1);
  CHECK_THROWS_AS(map_G(p, {0.5, 0.0}), DomainError);
  CHECK_THROWS_AS(map_G(p, {p.gamma, 0.0}), SingularityError);
  CHECK_THROWS_AS(map_G(p, {std::nan(""), 2.0}), DomainError);
  for (double x : {1e3, 1e5, 1e7}) {
    CHECK(std::abs(map_G(p, x) / x - p.gamma) <= 2.0 / x);
  }
  const ComplexPoint w{1.7, -2.3};
  const ComplexPoint gw = map_G(p, w);
  CHECK(std::abs(map_G(p, std::conj(w)) - std::conj(gw)) <= 1e-15 * std::abs(gw));
  CHECK(std::abs(gw) < std::abs(w));
}

TEST_CASE("F at z = 2 matches a bisection oracle") {
  const auto p = make_particle(0.1);
  const ComplexPoint f2 = map_F(p, 2.0);
  CHECK(f2.imag() == 0.0);
  CHECK(f2.real() > 2.0);
  CHECK(f2.real() == doctest::Approx(bisect_real_F(p, 2.0)).epsilon(1e-14));
  CHECK(f2.real() == doctest::Approx(2.032803965918652).epsilon(1e-14));
  // |F(z) - e^c z| <= C c |z| / (|z| - 1) with the reported C under 2
  CHECK(std::abs(f2 - 2.0 / p.gamma) <= 2.0 * p.capacity * 2.0 / (2.0 - 1.0));
  const ComplexPoint off = map_F(p, {1.5, 0.7});
  CHECK(off.real() == doctest::Approx(1.5270839024562306).epsilon(1e-14));
  CHECK(off.imag() == doctest::Approx(0.6938960233711356).epsilon(1e-14));
}

TEST_CASE("round trips on the annulus grid") {
  for (double delta : {0.3, 0.1, 0.01}) {
    const auto p = make_particle(delta);
    for (const ComplexPoint z : annulus_grid()) {
      const ComplexPoint f = map_F(p, z);
      CHECK(std::abs(map_G(p, f) - z) <= 1e-12 * std::abs(z));
      CHECK(std::abs(f) > std::abs(z));
      CHECK(std::abs(map_F(p, std::conj(z)) - std::conj(f)) <= 1e-15 * std::abs(f));
      if (!inside_particle(p, z)) {
        const ComplexPoint g = map_G(p, z);
        if (std::abs(g) > 1.0) CHECK(std::abs(map_F(p, g) - z) <= 1e-12 * std::abs(z));
      }
    }
  }
}

TEST_CASE("F grows like e^c z with bounded offset") {
  const auto p = make_particle(0.1);
  double prev = 0.0;
  for (double x : {10.0, 1e2, 1e4, 1e6, 1e8}) {
    const double off = std::abs(map_F(p, x) - x / p.gamma);
    CHECK(off < 0.1);
    if (prev > 0.0) CHECK(off == doctest::Approx(prev).epsilon(0.05));
    prev = off;
  }
  CHECK_THROWS_AS(map_F(p, {0.0, 1.0}), DomainError);
  CHECK_THROWS_AS(map_F(p, {1.0, 0.0}), DomainError);
}

TEST_CASE("rotation identities") {
  const auto p = make_particle(0.05);
  const ComplexPoint z{1.3, 2.1};
  CHECK(rotated_F(p, 0.0, z) == map_F(p, z));
  for (double theta : {-3.0, -1.1, 0.4, 2.9}) {
    CHECK(std::abs(rotated_F(p, theta, z)) ==
          doctest::Approx(std::abs(map_F(p, std::polar(1.0, -theta) * z))).epsilon(1e-15));
    const ComplexPoint rot = std::polar(1.0, theta);
    CHECK(std::abs(rotated_F(p, theta, rot * 1.7) - rot * map_F(p, 1.7)) <= 1e-14);
    CHECK(std::abs(rotated_G(p, theta, rotated_F(p, theta, z)) - z) <= 1e-13);
  }
}

TEST_CASE("log increment") {
  const auto p = make_particle(0.1);
  CHECK(log_increment(p, 1e9).real() == doctest::Approx(p.capacity).epsilon(1e-6));
  for (const ComplexPoint z : annulus_grid()) {
    const ComplexPoint l = log_increment(p, z);
    CHECK(l.real() > 0.0);
    CHECK(l.imag() >= -std::numbers::pi);
    CHECK(l.imag() < std::numbers::pi);
  }
  const ComplexPoint z = std::exp(0.5);
  CHECK(log_increment(p, z).real() == doctest::Approx(0.021718558146335722).epsilon(1e-13));

  // the first-order gap must shrink at least like c^{3/2} as delta halves
  double prev_gap = 0.0, prev_c = 0.0;
  for (double delta : {0.1, 0.05, 0.025}) {
    const auto q = make_particle(delta);
    const double gap = std::abs(log_increment(q, z) - q.capacity * (z + 1.0) / (z - 1.0));
    if (prev_gap > 0.0) {
      const double exponent = std::log(prev_gap / gap) / std::log(prev_c / q.capacity);
      CHECK(exponent >= 1.5);
    }
    prev_gap = gap;
    prev_c = q.capacity;
  }
}

TEST_CASE("distortion report") {
  const std::vector<ComplexPoint> grid = {2.0, {0.0, 3.0}, {-1.2, 0.5}, {1.01, 0.0}};
  std::vector<std::vector<DistortionRow>> tables;
  for (double delta : {0.1, 0.05, 0.025}) tables.push_back(distortion_report(make_particle(delta), grid));
  for (const auto& table : tables) {
    REQUIRE(table.size() == grid.size());
    for (const auto& row : table) {
      CHECK(std::isfinite(row.scale_ratio));
      CHECK(row.scale_ratio > 0.0);
      CHECK(std::isfinite(row.log_ratio));
    }
  }
  CHECK_FALSE(tables[0][3].guaranteed);
  CHECK(tables[0][0].guaranteed);
  CHECK(tables[0][0].scale_ratio == doctest::Approx(1.9577751387861164).epsilon(1e-10));
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    for (std::size_t d = 0; d + 1 < tables.size(); ++d) {
      const double ratio = tables[d][i].scale_ratio / tables[d + 1][i].scale_ratio;
      CHECK(ratio >= 0.5);
      CHECK(ratio <= 2.0);
      CHECK(tables[d + 1][i].log_ratio <= tables[d][i].log_ratio);
    }
  }
}

TEST_CASE("P1 mapping plug-in") {
  const P1Mapping m(make_particle(0.1));
  CHECK(m.forward(2.0) == map_F(m.params(), 2.0));
  CHECK(m.capacity() == m.params().capacity);
}

}

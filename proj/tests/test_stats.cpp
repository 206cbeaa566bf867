#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "hlzero/limitfield.hpp"
#include "hlzero/rng.hpp"
#include "hlzero/stats.hpp"
#include "hlzero/theory.hpp"

using namespace hlzero;

namespace {

EnsembleSpec small_spec(std::int64_t runs) {
  EnsembleSpec spec;
  spec.runs = runs;
  spec.growth.n = 400;
  spec.grid = {{1.0, 0.5, 0.0}, {0.5, 0.5, 0.0}, {1.0, 0.5, 1.0}};
  spec.master_seed = 99;
  return spec;
}

// Four jointly Gaussian coordinates (Re_t, Im_t, Re_s, Im_s) with the
// covariance block the closed forms predict, via a hand-rolled Cholesky factor.
EnsembleResult synthetic_pair(std::int64_t M, const CovarianceSpec& cs, std::uint64_t seed) {
  const double vt = variance_v2(cs.t, cs.sigma);
  const double vs = variance_v2(cs.s, cs.sigma);
  const double c = cov_c(cs), ch = cov_chat(cs);
  const double S[4][4] = {{vt, 0.0, c, ch}, {0.0, vt, -ch, c}, {c, -ch, vs, 0.0}, {ch, c, 0.0, vs}};
  double L[4][4] = {};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j <= i; ++j) {
      double sum = S[i][j];
      for (int k = 0; k < j; ++k) sum -= L[i][k] * L[j][k];
      L[i][j] = i == j ? std::sqrt(sum) : sum / L[j][j];
    }
  }
  EnsembleResult res;
  res.grid = {{cs.t, cs.sigma, cs.alpha}, {cs.s, cs.sigma, 0.0}};
  res.runs = M;
  CounterEngine eng(seed);
  std::normal_distribution<double> normal;
  for (std::int64_t r = 0; r < M; ++r) {
    double g[4], x[4] = {};
    for (double& v : g) v = normal(eng);
    for (int i = 0; i < 4; ++i)
      for (int k = 0; k <= i; ++k) x[i] += L[i][k] * g[k];
    FluctuationSample a, b;
    a.t = cs.t, a.sigma = cs.sigma, a.a = cs.alpha, a.value = {x[0], x[1]}, a.run = r;
    b.t = cs.s, b.sigma = cs.sigma, b.a = 0.0, b.value = {x[2], x[3]}, b.run = r;
    res.samples.push_back(a);
    res.samples.push_back(b);
  }
  return res;
}

}  // namespace

TEST_SUITE("stats") {

TEST_CASE("a single run reproduces the field") {
  const auto spec = small_spec(1);
  const auto res = run_ensemble(spec);
  GrowthConfig cfg = spec.growth;
  cfg.seed = derive_seed(spec.master_seed, 0);
  const auto cl = grow(cfg);
  for (std::size_t g = 0; g < spec.grid.size(); ++g) {
    const auto& pt = spec.grid[g];
    CHECK(res.sample(0, g).value == fluctuation_field(cl, pt.t, pt.sigma, pt.a).value);
  }
}

TEST_CASE("runs depend only on their derived seed") {
  const auto all = run_ensemble(small_spec(6));
  for (std::int64_t r : {5, 2, 0}) {
    GrowthConfig cfg = small_spec(1).growth;
    cfg.seed = derive_seed(99, r);
    const auto cl = grow(cfg);
    CHECK(all.sample(r, 2).value == fluctuation_field(cl, 1.0, 0.5, 1.0).value);
  }
  auto bad = small_spec(2);
  bad.grid.push_back({1.5, 0.5, 0.0});
  CHECK_THROWS_AS(run_ensemble(bad), DomainError);
  bad.grid.clear();
  CHECK_THROWS_AS(run_ensemble(bad), DomainError);
}

TEST_CASE("constant data has zero spread") {
  const std::vector<double> x(50, 1.25);
  CHECK(estimate_variance(x).value == 0.0);
  CHECK(estimate_variance(x).se == 0.0);
  CHECK(estimate_mean(x).value == 1.25);
  CHECK(estimate_covariance(x, x).value == 0.0);
}

TEST_CASE("accumulators merge associatively") {
  std::vector<double> x, y;
  CounterEngine eng(3);
  std::normal_distribution<double> normal(0.3, 2.0);
  for (int i = 0; i < 3000; ++i) {
    x.push_back(normal(eng));
    y.push_back(0.5 * x.back() + normal(eng));
  }
  MomentAccumulator whole, a, b, c;
  CovarianceAccumulator cw, ca, cb, cc;
  for (int i = 0; i < 3000; ++i) {
    whole.add(x[i]);
    cw.add(x[i], y[i]);
    (i < 700 ? a : i < 2100 ? b : c).add(x[i]);
    (i < 700 ? ca : i < 2100 ? cb : cc).add(x[i], y[i]);
  }
  MomentAccumulator left = a, right = b;
  left.merge(b);
  left.merge(c);  // (a b) c
  right.merge(c);
  MomentAccumulator right_total = a;
  right_total.merge(right);  // a (b c)
  for (const auto* m : {&left, &right_total}) {
    CHECK(m->count() == 3000);
    CHECK(m->mean() == doctest::Approx(whole.mean()).epsilon(1e-12));
    CHECK(m->variance() == doctest::Approx(whole.variance()).epsilon(1e-12));
    CHECK(m->central_moment(3) == doctest::Approx(whole.central_moment(3)).epsilon(1e-10));
    CHECK(m->central_moment(4) == doctest::Approx(whole.central_moment(4)).epsilon(1e-12));
  }
  CovarianceAccumulator cl = ca, cr = cb;
  cl.merge(cb);
  cl.merge(cc);
  cr.merge(cc);
  CovarianceAccumulator cr_total = ca;
  cr_total.merge(cr);
  CHECK(cl.covariance() == doctest::Approx(cw.covariance()).epsilon(1e-12));
  CHECK(cr_total.covariance() == doctest::Approx(cw.covariance()).epsilon(1e-12));
  CHECK(cr_total.correlation() == doctest::Approx(cw.correlation()).epsilon(1e-12));
}

TEST_CASE("synthetic Gaussian covariance is recovered") {
  const CovarianceSpec cs{0.5, 1.0, 0.5, std::numbers::pi / 2};
  const auto res = synthetic_pair(20000, cs, 2024);
  const auto rep = estimate_moments(res);
  ComparisonPolicy z_only;
  z_only.relative_band = 0.0;
  z_only.relative_floor = 1e300;  // z-test alone
  const auto cmp = compare_to_theory(rep, z_only);
  CHECK(cmp.pass);
  for (const auto& v : cmp.verdicts) CHECK(std::abs(v.zscore) <= 3.0);
  CHECK(rep.find(0.5, 1.0, 0.5, cs.alpha, "cov_reim").theory == doctest::Approx(cov_chat(cs)));
  CHECK(rep.find(0.5, 1.0, 0.5, cs.alpha, "cov_imre").theory == doctest::Approx(-cov_chat(cs)));

  // swapping the pair order exchanges the two cross blocks (up to summation order)
  const auto fwd = estimate_pair(res, 0, 1);
  const auto rev = estimate_pair(res, 1, 0);
  CHECK(fwd.reim.value == doctest::Approx(rev.imre.value).epsilon(1e-13));
  CHECK(fwd.imre.value == doctest::Approx(rev.reim.value).epsilon(1e-13));
  CHECK(fwd.rere.value == doctest::Approx(rev.rere.value).epsilon(1e-13));
}

TEST_CASE("verdicts") {
  MomentRow row;
  row.stat = "var_re";
  row.estimate = 0.40;
  row.se = 0.01;
  row.theory = 0.40;
  CHECK(judge(row, {}).pass);
  row.theory = 0.40 + 10 * row.se;
  CHECK_FALSE(judge(row, {}).pass);
  // 3 SE but 12% off: fails the conjunction, passes the disjunction
  row.se = 0.02;
  row.theory = 0.40 / 1.12;
  CHECK_FALSE(judge(row, {}).pass);
  ComparisonPolicy any;
  any.combine = Combine::any;
  CHECK(judge(row, any).pass);
  // tiny theory: the z-test decides alone
  row.theory = 0.0;
  row.estimate = 0.05;
  CHECK(judge(row, {}).pass);
  row.estimate = 0.07;
  CHECK_FALSE(judge(row, {}).pass);

  MomentReport rep;
  rep.rows.push_back(row);
  MomentRow diag = row;
  diag.diagnostic = true;
  rep.rows.push_back(diag);
  const auto cmp = compare_to_theory(rep);
  CHECK(cmp.verdicts.size() == 1);
  CHECK_FALSE(cmp.pass);
}

TEST_CASE("normality diagnostics") {
  CounterEngine eng(12);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;
  std::vector<double> g, u;
  for (int i = 0; i < 1000; ++i) {
    g.push_back(3.0 + 2.0 * normal(eng));
    u.push_back(uniform(eng));
  }
  const auto ng = normality_diagnostics(g);
  CHECK(ng.pass);
  CHECK(ng.ks_threshold == doctest::Approx(1.031 / std::sqrt(1000.0)));
  const auto nu = normality_diagnostics(u);
  CHECK_FALSE(nu.pass);
  CHECK(nu.excess_kurtosis < -1.0);
}

TEST_CASE("cross-model alignment") {
  const auto rep = estimate_moments(run_ensemble(small_spec(20)));
  const auto same = compare_reports(rep, rep);
  CHECK(same.max_abs_z == 0.0);
  CHECK_FALSE(same.rows.empty());
  auto other = small_spec(20);
  other.grid.pop_back();
  const auto shorter = estimate_moments(run_ensemble(other));
  CHECK_THROWS_AS(compare_reports(rep, shorter), AlignmentError);
  CHECK_THROWS_AS(compare_reports(shorter, rep), AlignmentError);
}

TEST_CASE("limit ensemble follows single trajectories") {
  LimitEnsembleSpec spec;
  spec.runs = 3;
  spec.modes = 12;
  spec.grid = {{1.0, 0.5, 0.0}, {0.5, 0.5, 0.3}, {0.0, 0.5, 0.0}};
  spec.master_seed = 4;
  const auto res = run_limit_ensemble(spec);
  CHECK(res.model == "limit");
  for (std::int64_t r = 0; r < 3; ++r) {
    const auto s0 = ou_init(12, res.sample(r, 0).seed);
    const auto half = ou_step(s0, 0.5);
    const auto one = ou_step(half, 0.5);
    CHECK(res.sample(r, 0).value == eval_field(one, std::exp(0.5), 0.0).value);
    CHECK(res.sample(r, 1).value == eval_field(half, std::exp(0.5), 0.3).value);
    CHECK(res.sample(r, 2).value == ComplexPoint{0.0, 0.0});
  }
}

TEST_CASE("local experiment layout") {
  LocalExperimentSpec spec;
  spec.deltas = {0.1};
  spec.runs = 30;
  spec.master_seed = 8;
  const auto rep = local_experiment(spec);
  REQUIRE(rep.rows.size() == 1);
  const auto& row = rep.rows[0];
  CHECK(row.sigma == doctest::Approx(std::pow(0.1, 0.25)));
  CHECK(row.n == std::llround(1.0 / make_particle(0.1).capacity));
  CHECK(rep.target_same_alpha == 0.5);
  CHECK(rep.target_cross_alpha == 0.5);
  CHECK(std::isfinite(row.same_alpha.value));
  CHECK(row.theory_same_alpha == doctest::Approx(cov_c({1, 1, row.sigma, 2 * row.sigma}) /
                                                 variance_v2(1, row.sigma)));
}

}

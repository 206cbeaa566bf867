#include "hlzero/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include <boost/math/distributions/normal.hpp>

#include "hlzero/limitfield.hpp"
#include "hlzero/rng.hpp"
#include "hlzero/theory.hpp"

namespace hlzero {

namespace {

// Keeps the OU stream of a master seed apart from the angle stream of the same seed.
constexpr std::uint64_t kLimitStreamTag = 0xB5AD4ECEDA1CE2A9ULL;

// Runs body(run) for run in [0, runs) on worker threads; rethrows the first failure.
void parallel_runs(std::int64_t runs, const std::function<void(std::int64_t)>& body) {
  const unsigned workers =
      static_cast<unsigned>(std::min<std::int64_t>(worker_threads(), std::max<std::int64_t>(runs, 1)));
  std::atomic<std::int64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (;;) {
      const std::int64_t run = next.fetch_add(1);
      if (run >= runs) return;
      try {
        body(run);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(runs);
        return;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
}

void validate_grid(const std::vector<ObservationPoint>& grid) {
  if (grid.empty()) throw DomainError("observation grid is empty");
  for (const auto& pt : grid) {
    if (!(pt.t >= 0.0) || !(pt.sigma > 0.0) || !std::isfinite(pt.t) || !std::isfinite(pt.a)) {
      std::ostringstream msg;
      msg << "invalid observation point (t = " << pt.t << ", sigma = " << pt.sigma << ", a = " << pt.a
          << ")";
      throw DomainError(msg.str());
    }
  }
}

double wrap_angle(double x) {
  double w = std::remainder(x, 2.0 * std::numbers::pi);
  if (w >= std::numbers::pi) w -= 2.0 * std::numbers::pi;
  return w;
}

double zscore(double estimate, double theory, double se) {
  if (std::isnan(theory)) return kNoTheory;
  const double diff = estimate - theory;
  if (se > 0.0) return diff / se;
  if (diff == 0.0) return 0.0;
  return std::copysign(std::numeric_limits<double>::infinity(), diff);
}

bool same_key(double x, double y) { return std::abs(x - y) <= 1e-12 * (1.0 + std::abs(x)); }

}  // namespace

std::vector<double> EnsembleResult::column_re(std::size_t g) const {
  std::vector<double> out(static_cast<std::size_t>(runs));
  for (std::int64_t r = 0; r < runs; ++r) out[r] = sample(r, g).value.real();
  return out;
}

std::vector<double> EnsembleResult::column_im(std::size_t g) const {
  std::vector<double> out(static_cast<std::size_t>(runs));
  for (std::int64_t r = 0; r < runs; ++r) out[r] = sample(r, g).value.imag();
  return out;
}

void validate(const EnsembleSpec& spec) {
  if (spec.runs < 1) throw DomainError("ensemble needs at least one run");
  validate_grid(spec.grid);
  const ParticleParams p = resolve_particle(spec.growth);
  (void)p;
  for (const auto& pt : spec.grid) {
    if (steps_for_time(spec.growth.n, pt.t) > spec.growth.n) {
      std::ostringstream msg;
      msg << "time t = " << pt.t << " needs floor(n t) > n = " << spec.growth.n;
      throw DomainError(msg.str());
    }
  }
}

unsigned worker_threads() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* cap = std::getenv("HLZERO_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(cap, &end, 10);
    if (end != cap && *end == '\0' && v >= 1) hw = std::min<unsigned>(hw, static_cast<unsigned>(v));
  }
  return hw;
}

EnsembleResult run_ensemble(const EnsembleSpec& spec) {
  validate(spec);
  EnsembleResult out;
  out.grid = spec.grid;
  out.runs = spec.runs;
  out.model = "discrete";
  out.n = spec.growth.n;
  out.capacity = resolve_particle(spec.growth).capacity;
  out.master_seed = spec.master_seed;
  out.samples.resize(static_cast<std::size_t>(spec.runs) * spec.grid.size());
  parallel_runs(spec.runs, [&](std::int64_t run) {
    GrowthConfig cfg = spec.growth;
    cfg.seed = derive_seed(spec.master_seed, static_cast<std::uint64_t>(run));
    const ClusterState cluster = grow(cfg);
    for (std::size_t g = 0; g < spec.grid.size(); ++g) {
      const auto& pt = spec.grid[g];
      FluctuationSample s = fluctuation_field(cluster, pt.t, pt.sigma, pt.a);
      s.run = run;
      out.samples[static_cast<std::size_t>(run) * spec.grid.size() + g] = s;
    }
  });
  return out;
}

EnsembleResult run_limit_ensemble(const LimitEnsembleSpec& spec) {
  if (spec.runs < 1) throw DomainError("ensemble needs at least one run");
  validate_grid(spec.grid);
  int K = spec.modes;
  if (K == 0) {
    double smallest = std::numeric_limits<double>::infinity();
    for (const auto& pt : spec.grid) smallest = std::min(smallest, pt.sigma);
    K = default_mode_count(std::exp(smallest));
  }
  if (K < 1) throw DomainError("mode truncation K must be at least 1");

  std::vector<double> times;
  for (const auto& pt : spec.grid) times.push_back(pt.t);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  EnsembleResult out;
  out.grid = spec.grid;
  out.runs = spec.runs;
  out.model = "limit";
  out.n = K;
  out.master_seed = spec.master_seed;
  out.samples.resize(static_cast<std::size_t>(spec.runs) * spec.grid.size());
  parallel_runs(spec.runs, [&](std::int64_t run) {
    const std::uint64_t seed =
        derive_seed(spec.master_seed ^ kLimitStreamTag, static_cast<std::uint64_t>(run));
    OUState state = ou_init(K, seed);
    for (const double t : times) {
      if (t > state.t) state = ou_step(state, t - state.t);
      for (std::size_t g = 0; g < spec.grid.size(); ++g) {
        const auto& pt = spec.grid[g];
        if (pt.t != t) continue;
        FluctuationSample s;
        s.t = pt.t;
        s.sigma = pt.sigma;
        s.a = pt.a;
        s.value = eval_field(state, std::exp(pt.sigma), pt.a).value;
        s.n = K;
        s.seed = seed;
        s.run = run;
        out.samples[static_cast<std::size_t>(run) * spec.grid.size() + g] = s;
      }
    }
  });
  return out;
}

void MomentAccumulator::add(double x) {
  const double n1 = static_cast<double>(n_);
  ++n_;
  const double n = static_cast<double>(n_);
  const double delta = x - mean_;
  const double delta_n = delta / n;
  const double delta_n2 = delta_n * delta_n;
  const double term1 = delta * delta_n * n1;
  mean_ += delta_n;
  m4_ += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * m2_ - 4.0 * delta_n * m3_;
  m3_ += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * m2_;
  m2_ += term1;
}

void MomentAccumulator::merge(const MomentAccumulator& o) {
  if (o.n_ == 0) return;
  if (n_ == 0) {
    *this = o;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(o.n_);
  const double n = na + nb;
  const double d = o.mean_ - mean_;
  const double d2 = d * d;
  const double m2 = m2_ + o.m2_ + d2 * na * nb / n;
  const double m3 = m3_ + o.m3_ + d2 * d * na * nb * (na - nb) / (n * n) +
                    3.0 * d * (na * o.m2_ - nb * m2_) / n;
  const double m4 = m4_ + o.m4_ + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n) +
                    6.0 * d2 * (na * na * o.m2_ + nb * nb * m2_) / (n * n) +
                    4.0 * d * (na * o.m3_ - nb * m3_) / n;
  mean_ += d * nb / n;
  m2_ = m2;
  m3_ = m3;
  m4_ = m4;
  n_ += o.n_;
}

double MomentAccumulator::variance() const {
  if (n_ < 2) throw DomainError("variance needs at least two samples");
  return m2_ / static_cast<double>(n_ - 1);
}

double MomentAccumulator::central_moment(int order) const {
  if (n_ < 1) throw DomainError("central moment of an empty accumulator");
  const double n = static_cast<double>(n_);
  switch (order) {
    case 2: return m2_ / n;
    case 3: return m3_ / n;
    case 4: return m4_ / n;
    default: throw DomainError("central_moment supports orders 2..4");
  }
}

double MomentAccumulator::skewness() const {
  if (m2_ == 0.0) return 0.0;
  return std::sqrt(static_cast<double>(n_)) * m3_ / std::pow(m2_, 1.5);
}

double MomentAccumulator::excess_kurtosis() const {
  if (m2_ == 0.0) return 0.0;
  return static_cast<double>(n_) * m4_ / (m2_ * m2_) - 3.0;
}

void CovarianceAccumulator::add(double x, double y) {
  ++n_;
  const double n = static_cast<double>(n_);
  const double dx = x - mx_;
  const double dy = y - my_;
  mx_ += dx / n;
  my_ += dy / n;
  m2x_ += dx * (x - mx_);
  m2y_ += dy * (y - my_);
  cxy_ += dx * (y - my_);
}

void CovarianceAccumulator::merge(const CovarianceAccumulator& o) {
  if (o.n_ == 0) return;
  if (n_ == 0) {
    *this = o;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(o.n_);
  const double n = na + nb;
  const double dx = o.mx_ - mx_;
  const double dy = o.my_ - my_;
  m2x_ += o.m2x_ + dx * dx * na * nb / n;
  m2y_ += o.m2y_ + dy * dy * na * nb / n;
  cxy_ += o.cxy_ + dx * dy * na * nb / n;
  mx_ += dx * nb / n;
  my_ += dy * nb / n;
  n_ += o.n_;
}

double CovarianceAccumulator::covariance() const {
  if (n_ < 2) throw DomainError("covariance needs at least two samples");
  return cxy_ / static_cast<double>(n_ - 1);
}

double CovarianceAccumulator::correlation() const {
  const double denom = std::sqrt(m2x_ * m2y_);
  return denom > 0.0 ? cxy_ / denom : kNoTheory;
}

Estimate estimate_mean(std::span<const double> x) {
  MomentAccumulator acc;
  for (double v : x) acc.add(v);
  const double M = static_cast<double>(acc.count());
  return {acc.mean(), std::sqrt(acc.variance() / M)};
}

Estimate estimate_variance(std::span<const double> x) {
  MomentAccumulator acc;
  for (double v : x) acc.add(v);
  const double m2 = acc.central_moment(2);
  const double m4 = acc.central_moment(4);
  return {acc.variance(), std::sqrt(std::max(0.0, m4 - m2 * m2) / static_cast<double>(acc.count()))};
}

Estimate estimate_covariance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("covariance inputs differ in length");
  CovarianceAccumulator acc;
  for (std::size_t i = 0; i < x.size(); ++i) acc.add(x[i], y[i]);
  const double cov = acc.covariance();
  const double M = static_cast<double>(x.size());
  double fourth = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double p = (x[i] - acc.mean_x()) * (y[i] - acc.mean_y());
    fourth += p * p;
  }
  fourth /= M;
  const double biased = cov * (M - 1.0) / M;
  return {cov, std::sqrt(std::max(0.0, fourth - biased * biased) / M)};
}

Estimate estimate_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("correlation inputs differ in length");
  CovarianceAccumulator acc;
  for (std::size_t i = 0; i < x.size(); ++i) acc.add(x[i], y[i]);
  const double rho = acc.correlation();
  return {rho, (1.0 - rho * rho) / std::sqrt(static_cast<double>(x.size()))};
}

const MomentRow& MomentReport::find(double key_s, double key_t, double sigma, double alpha,
                                    const std::string& stat) const {
  for (const auto& row : rows) {
    if (row.stat == stat && same_key(row.key_s, key_s) && same_key(row.key_t, key_t) &&
        same_key(row.sigma, sigma) && same_key(row.alpha, alpha)) {
      return row;
    }
  }
  std::ostringstream msg;
  msg << "no row " << stat << " at (s = " << key_s << ", t = " << key_t << ", sigma = " << sigma
      << ", alpha = " << alpha << ")";
  throw AlignmentError(msg.str());
}

PairBlock estimate_pair(const EnsembleResult& result, std::size_t later, std::size_t earlier) {
  const auto re_l = result.column_re(later), im_l = result.column_im(later);
  const auto re_e = result.column_re(earlier), im_e = result.column_im(earlier);
  return {estimate_covariance(re_l, re_e), estimate_covariance(im_l, im_e),
          estimate_covariance(re_l, im_e), estimate_covariance(im_l, re_e)};
}

MomentReport estimate_moments(const EnsembleResult& result) {
  if (result.runs < 2) throw DomainError("moment estimation needs at least two runs");
  MomentReport rep;
  rep.model = result.model;
  rep.n = result.n;
  rep.capacity = result.capacity;
  rep.runs = result.runs;
  rep.master_seed = result.master_seed;
  const double M = static_cast<double>(result.runs);

  auto push = [&rep](MomentRow row) {
    row.zscore = zscore(row.estimate, row.theory, row.se);
    rep.rows.push_back(std::move(row));
  };

  for (std::size_t g = 0; g < result.grid.size(); ++g) {
    const auto& pt = result.grid[g];
    const auto re = result.column_re(g);
    const auto im = result.column_im(g);
    const double v2 = variance_v2(pt.t, pt.sigma);
    MomentRow base;
    base.key_s = base.key_t = pt.t;
    base.sigma = pt.sigma;
    base.alpha = pt.a;

    auto row = [&base](const char* stat, Estimate e, double theory, bool diagnostic = false) {
      MomentRow r = base;
      r.stat = stat;
      r.estimate = e.value;
      r.se = e.se;
      r.theory = theory;
      r.diagnostic = diagnostic;
      return r;
    };

    MomentAccumulator acc_re, acc_im;
    for (std::size_t i = 0; i < re.size(); ++i) {
      acc_re.add(re[i]);
      acc_im.add(im[i]);
    }
    push(row("mean_re", estimate_mean(re), 0.0));
    push(row("mean_im", estimate_mean(im), 0.0));
    push(row("var_re", estimate_variance(re), v2));
    push(row("var_im", estimate_variance(im), v2));
    push(row("cov_reim", estimate_covariance(re, im), 0.0));
    push(row("corr_reim", estimate_correlation(re, im), 0.0));
    const double se_skew = std::sqrt(6.0 / M);
    const double se_kurt = std::sqrt(24.0 / M);
    push(row("skew_re", {acc_re.skewness(), se_skew}, 0.0, true));
    push(row("skew_im", {acc_im.skewness(), se_skew}, 0.0, true));
    push(row("exkurt_re", {acc_re.excess_kurtosis(), se_kurt}, 0.0, true));
    push(row("exkurt_im", {acc_im.excess_kurtosis(), se_kurt}, 0.0, true));
  }

  for (std::size_t i = 0; i < result.grid.size(); ++i) {
    for (std::size_t j = i + 1; j < result.grid.size(); ++j) {
      const auto& p = result.grid[i];
      const auto& q = result.grid[j];
      if (p.sigma != q.sigma) continue;
      if (p.t == q.t && p.a == q.a) continue;
      const bool p_later = p.t > q.t || (p.t == q.t && p.a > q.a);
      const std::size_t later = p_later ? i : j;
      const std::size_t earlier = p_later ? j : i;
      const auto& L = result.grid[later];
      const auto& E = result.grid[earlier];
      const CovarianceSpec cs{E.t, L.t, L.sigma, wrap_angle(L.a - E.a)};
      const double c = cov_c(cs);
      const double chat = cov_chat(cs);
      const PairBlock block = estimate_pair(result, later, earlier);
      MomentRow base;
      base.key_s = E.t;
      base.key_t = L.t;
      base.sigma = L.sigma;
      base.alpha = cs.alpha;
      const std::pair<const char*, std::pair<Estimate, double>> entries[] = {
          {"cov_rere", {block.rere, c}},
          {"cov_imim", {block.imim, c}},
          {"cov_reim", {block.reim, chat}},
          {"cov_imre", {block.imre, -chat}},
      };
      for (const auto& [stat, est] : entries) {
        MomentRow r = base;
        r.stat = stat;
        r.estimate = est.first.value;
        r.se = est.first.se;
        r.theory = est.second;
        push(r);
      }
    }
  }
  return rep;
}

Verdict judge(const MomentRow& row, const ComparisonPolicy& policy) {
  Verdict v;
  v.zscore = zscore(row.estimate, row.theory, row.se);
  const bool z_ok = std::abs(v.zscore) <= policy.z_max;
  if (std::abs(row.theory) <= policy.relative_floor) {
    v.relative_error = std::abs(row.estimate - row.theory);
    v.pass = z_ok;
    return v;
  }
  v.relative_error = std::abs(row.estimate - row.theory) / std::abs(row.theory);
  const bool rel_ok = v.relative_error <= policy.relative_band;
  v.pass = policy.combine == Combine::all ? (z_ok && rel_ok) : (z_ok || rel_ok);
  return v;
}

ComparisonResult compare_to_theory(const MomentReport& report, const ComparisonPolicy& policy) {
  ComparisonResult out;
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& row = report.rows[i];
    if (row.diagnostic || std::isnan(row.theory)) continue;
    Verdict v = judge(row, policy);
    v.row = i;
    out.pass = out.pass && v.pass;
    out.verdicts.push_back(v);
  }
  return out;
}

NormalityRecord normality_diagnostics(std::span<const double> values) {
  if (values.size() < 8) throw DomainError("normality diagnostics need at least 8 samples");
  MomentAccumulator acc;
  for (double v : values) acc.add(v);
  const double sd = std::sqrt(acc.variance());
  if (!(sd > 0.0)) throw DomainError("normality diagnostics on constant data");

  std::vector<double> z(values.begin(), values.end());
  for (double& v : z) v = (v - acc.mean()) / sd;
  std::sort(z.begin(), z.end());
  const boost::math::normal_distribution<double> phi;
  const double M = static_cast<double>(z.size());
  double d = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double F = boost::math::cdf(phi, z[i]);
    d = std::max({d, static_cast<double>(i + 1) / M - F, F - static_cast<double>(i) / M});
  }

  NormalityRecord rec;
  rec.count = static_cast<std::int64_t>(z.size());
  rec.ks_distance = d;
  rec.ks_threshold = 1.031 / std::sqrt(M);
  rec.skewness = acc.skewness();
  rec.skew_threshold = 3.0 * std::sqrt(6.0 / M);
  rec.excess_kurtosis = acc.excess_kurtosis();
  rec.kurtosis_threshold = 3.0 * std::sqrt(24.0 / M);
  rec.pass = d <= rec.ks_threshold && std::abs(rec.skewness) <= rec.skew_threshold &&
             std::abs(rec.excess_kurtosis) <= rec.kurtosis_threshold;
  return rec;
}

CrossReport compare_reports(const MomentReport& left, const MomentReport& right,
                            bool include_diagnostic) {
  auto keep = [include_diagnostic](const MomentRow& r) { return include_diagnostic || !r.diagnostic; };
  std::vector<bool> used(right.rows.size(), false);
  CrossReport out;
  for (const auto& l : left.rows) {
    if (!keep(l)) continue;
    bool found = false;
    for (std::size_t j = 0; j < right.rows.size(); ++j) {
      const auto& r = right.rows[j];
      if (used[j] || r.stat != l.stat || !same_key(r.key_s, l.key_s) || !same_key(r.key_t, l.key_t) ||
          !same_key(r.sigma, l.sigma) || !same_key(r.alpha, l.alpha)) {
        continue;
      }
      used[j] = true;
      found = true;
      CrossRow row{l, r, zscore(l.estimate, r.estimate, std::hypot(l.se, r.se))};
      out.max_abs_z = std::max(out.max_abs_z, std::abs(row.zscore));
      out.rows.push_back(row);
      break;
    }
    if (!found) {
      std::ostringstream msg;
      msg << "row " << l.stat << " at (s = " << l.key_s << ", t = " << l.key_t << ", sigma = " << l.sigma
          << ", alpha = " << l.alpha << ") has no counterpart";
      throw AlignmentError(msg.str());
    }
  }
  for (std::size_t j = 0; j < right.rows.size(); ++j) {
    if (!used[j] && keep(right.rows[j])) {
      const auto& r = right.rows[j];
      std::ostringstream msg;
      msg << "row " << r.stat << " at (s = " << r.key_s << ", t = " << r.key_t << ", sigma = " << r.sigma
          << ", alpha = " << r.alpha << ") appears only in the second report";
      throw AlignmentError(msg.str());
    }
  }
  return out;
}

LocalReport local_experiment(const LocalExperimentSpec& spec) {
  if (spec.deltas.empty()) throw DomainError("local experiment needs a delta schedule");
  if (!(spec.alpha >= 0.0)) throw DomainError("local experiment alpha must be nonnegative");
  LocalReport rep;
  const auto target = local_cov(AlphaLimit::finite(spec.alpha));
  rep.target_same_alpha = target.same;
  rep.target_cross_alpha = target.cross;

  for (std::size_t i = 0; i < spec.deltas.size(); ++i) {
    const double delta = spec.deltas[i];
    const ParticleParams p = make_particle(delta);
    LocalRow row;
    row.delta = delta;
    row.capacity = p.capacity;
    row.n = std::llround(1.0 / p.capacity);
    row.sigma = std::pow(delta, 0.25);
    row.log_factor = std::log(1.0 / (2.0 * row.sigma));

    EnsembleSpec es;
    es.runs = spec.runs;
    es.growth.n = row.n;
    es.growth.regime = Regime::fixed_t;
    es.growth.delta = delta;
    es.master_seed = derive_seed(spec.master_seed, 1000 + i);
    const double a_alpha = 2.0 * row.sigma * spec.alpha;
    es.grid = {{spec.t, row.sigma, 0.0}, {spec.t, row.sigma, a_alpha}, {spec.t, row.sigma, spec.proxy_angle}};
    const EnsembleResult res = run_ensemble(es);

    const auto re0 = res.column_re(0), im0 = res.column_im(0);
    const auto re1 = res.column_re(1), re2 = res.column_re(2);
    row.var_re = estimate_variance(re0);
    row.var_ratio = {row.var_re.value / row.log_factor, row.var_re.se / std::abs(row.log_factor)};
    row.same_alpha = estimate_correlation(re1, re0);
    row.cross_alpha = estimate_correlation(re1, im0);
    row.same_proxy = estimate_correlation(re2, re0);
    row.cross_proxy = estimate_correlation(re2, im0);

    const double v2 = variance_v2(spec.t, row.sigma);
    row.theory_var_ratio = v2 / row.log_factor;
    row.theory_same_alpha = cov_c({spec.t, spec.t, row.sigma, a_alpha}) / v2;
    row.theory_cross_alpha = cov_chat({spec.t, spec.t, row.sigma, a_alpha}) / v2;
    row.theory_same_proxy = cov_c({spec.t, spec.t, row.sigma, spec.proxy_angle}) / v2;
    row.theory_cross_proxy = cov_chat({spec.t, spec.t, row.sigma, spec.proxy_angle}) / v2;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace hlzero

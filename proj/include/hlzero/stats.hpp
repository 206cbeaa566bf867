#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hlzero/cluster.hpp"
#include "hlzero/errors.hpp"
#include "hlzero/fluctuation.hpp"

namespace hlzero {

struct ObservationPoint {
  double t = 0.0;
  double sigma = 0.0;
  double a = 0.0;
};

struct EnsembleSpec {
  std::int64_t runs = 0;
  GrowthConfig growth;  ///< template; the seed is replaced per run
  std::vector<ObservationPoint> grid;
  std::uint64_t master_seed = 0;
};

/// OU-mode ensemble over the same kind of grid.
struct LimitEnsembleSpec {
  std::int64_t runs = 0;
  int modes = 0;  ///< 0 picks default_mode_count at the smallest radius in the grid
  std::vector<ObservationPoint> grid;
  std::uint64_t master_seed = 0;
};

/// Samples laid out run-major: sample(run, g) = samples[run * grid.size() + g].
struct EnsembleResult {
  std::vector<ObservationPoint> grid;
  std::int64_t runs = 0;
  std::vector<FluctuationSample> samples;
  std::string model = "discrete";  ///< "discrete" or "limit"
  std::int64_t n = 0;              ///< particles per cluster, or modes for the limit model
  double capacity = 0.0;
  std::uint64_t master_seed = 0;

  const FluctuationSample& sample(std::int64_t run, std::size_t g) const {
    return samples[static_cast<std::size_t>(run) * grid.size() + g];
  }
  std::vector<double> column_re(std::size_t g) const;
  std::vector<double> column_im(std::size_t g) const;
};

void validate(const EnsembleSpec& spec);

/// Worker count: hardware concurrency, capped by HLZERO_THREADS when set.
unsigned worker_threads();

/// Grows spec.runs clusters with seeds derive_seed(master_seed, run) and
/// evaluates every grid point on each. Output is independent of scheduling.
EnsembleResult run_ensemble(const EnsembleSpec& spec);

/// One OU trajectory per run, stepped exactly through the distinct grid times.
EnsembleResult run_limit_ensemble(const LimitEnsembleSpec& spec);

/// Mergeable univariate moments up to order four (Pebay's update formulas).
class MomentAccumulator {
 public:
  void add(double x);
  void merge(const MomentAccumulator& other);

  std::int64_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double variance() const;  ///< unbiased
  double central_moment(int order) const;  ///< biased, order 2..4
  double skewness() const;
  double excess_kurtosis() const;

 private:
  std::int64_t n_ = 0;
  double mean_ = 0.0, m2_ = 0.0, m3_ = 0.0, m4_ = 0.0;
};

/// Mergeable bivariate co-moment.
class CovarianceAccumulator {
 public:
  void add(double x, double y);
  void merge(const CovarianceAccumulator& other);

  std::int64_t count() const noexcept { return n_; }
  double mean_x() const noexcept { return mx_; }
  double mean_y() const noexcept { return my_; }
  double covariance() const;  ///< unbiased
  double correlation() const;

 private:
  std::int64_t n_ = 0;
  double mx_ = 0.0, my_ = 0.0, m2x_ = 0.0, m2y_ = 0.0, cxy_ = 0.0;
};

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

Estimate estimate_mean(std::span<const double> x);
Estimate estimate_variance(std::span<const double> x);
/// SE from sqrt((E[dx^2 dy^2] - cov^2) / M), a second pass over the samples.
Estimate estimate_covariance(std::span<const double> x, std::span<const double> y);
Estimate estimate_correlation(std::span<const double> x, std::span<const double> y);

inline constexpr double kNoTheory = std::numeric_limits<double>::quiet_NaN();

struct MomentRow {
  double key_s = 0.0;
  double key_t = 0.0;
  double sigma = 0.0;
  double alpha = 0.0;  ///< the angle a for single-point rows, a - b for pair rows
  std::string stat;
  double estimate = 0.0;
  double se = 0.0;
  double theory = kNoTheory;
  double zscore = kNoTheory;
  bool diagnostic = false;  ///< reported only, never part of a verdict
};

struct MomentReport {
  std::vector<MomentRow> rows;
  std::string model;
  std::int64_t n = 0;
  double capacity = 0.0;
  std::int64_t runs = 0;
  std::uint64_t master_seed = 0;

  const MomentRow& find(double key_s, double key_t, double sigma, double alpha,
                        const std::string& stat) const;
};

/// Covariances between the points at grid indices `later` and `earlier`:
/// Cov(Re later, Re earlier), Cov(Im, Im), Cov(Re later, Im earlier), Cov(Im later, Re earlier).
struct PairBlock {
  Estimate rere, imim, reim, imre;
};
PairBlock estimate_pair(const EnsembleResult& result, std::size_t later, std::size_t earlier);

/// Per-point rows (means, variances, Re-Im covariance and correlation, skewness,
/// excess kurtosis) and, for each pair of grid points at equal sigma, the four
/// covariances with the later time first. Theory values come from the
/// closed forms; z-scores are (estimate - theory) / se.
MomentReport estimate_moments(const EnsembleResult& result);

enum class Combine {
  all,  ///< |z| <= z_max AND relative error <= band
  any,  ///< |z| <= z_max OR relative error <= band, i.e. within max(z_max SE, band)
};

struct ComparisonPolicy {
  double z_max = 3.0;
  double relative_band = 0.10;
  Combine combine = Combine::all;
  /// Below this |theory| the relative test is undefined and only the z-test counts.
  double relative_floor = 1e-9;
};

struct Verdict {
  std::size_t row = 0;
  bool pass = false;
  double zscore = 0.0;
  double relative_error = 0.0;
};

struct ComparisonResult {
  bool pass = true;
  std::vector<Verdict> verdicts;
};

/// Judges every non-diagnostic row that carries a theory value.
ComparisonResult compare_to_theory(const MomentReport& report, const ComparisonPolicy& policy = {});
Verdict judge(const MomentRow& row, const ComparisonPolicy& policy);

struct NormalityRecord {
  std::int64_t count = 0;
  double ks_distance = 0.0;
  double ks_threshold = 0.0;  ///< Lilliefors 1% critical value, 1.031 / sqrt(M)
  double skewness = 0.0;
  double skew_threshold = 0.0;  ///< 3 sqrt(6 / M)
  double excess_kurtosis = 0.0;
  double kurtosis_threshold = 0.0;  ///< 3 sqrt(24 / M)
  bool pass = false;
};

/// Standardizes by the sample mean and sd, then checks the empirical CDF
/// distance to the standard normal and the third and fourth moments.
NormalityRecord normality_diagnostics(std::span<const double> values);

/// Cross-model comparison, aligned on (key_s, key_t, sigma, alpha, stat).
struct CrossRow {
  MomentRow left;
  MomentRow right;
  double zscore = 0.0;  ///< (left - right) / sqrt(se_l^2 + se_r^2)
};

struct CrossReport {
  std::vector<CrossRow> rows;
  double max_abs_z = 0.0;
};

/// Throws AlignmentError when a key is present in one report only.
CrossReport compare_reports(const MomentReport& left, const MomentReport& right,
                            bool include_diagnostic = false);

struct LocalExperimentSpec {
  std::vector<double> deltas = {0.1, 0.05, 0.025};
  std::int64_t runs = 500;
  std::uint64_t master_seed = 0;
  double t = 1.0;
  double proxy_angle = 0.5;  ///< fixed a for the alpha = infinity proxy
  double alpha = 1.0;
};

struct LocalRow {
  double delta = 0.0;
  double capacity = 0.0;
  std::int64_t n = 0;
  double sigma = 0.0;
  double log_factor = 0.0;  ///< log(1 / (2 sigma))
  Estimate var_re;
  Estimate var_ratio;     ///< Var(Re) / log(1 / (2 sigma))
  Estimate same_alpha;    ///< Corr(Re at 2 sigma alpha, Re at 0)
  Estimate cross_alpha;   ///< Corr(Re at 2 sigma alpha, Im at 0)
  Estimate same_proxy;    ///< Corr(Re at the proxy angle, Re at 0)
  Estimate cross_proxy;
  // the same correlations from the finite-sigma closed forms
  double theory_var_ratio = 0.0;
  double theory_same_alpha = 0.0;
  double theory_cross_alpha = 0.0;
  double theory_same_proxy = 0.0;
  double theory_cross_proxy = 0.0;
};

struct LocalReport {
  std::vector<LocalRow> rows;
  double target_same_alpha = 0.0;  ///< 1 / (1 + alpha^2)
  double target_cross_alpha = 0.0;  ///< alpha / (1 + alpha^2)
};

/// sigma = delta^{1/4}, n = round(1 / c), points (t, sigma, 0), (t, sigma, 2 sigma alpha),
/// (t, sigma, proxy_angle).
LocalReport local_experiment(const LocalExperimentSpec& spec);

}  // namespace hlzero

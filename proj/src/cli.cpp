#include "hlzero/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

#include "hlzero/errors.hpp"
#include "hlzero/stats.hpp"

#ifndef HLZERO_VERSION
#define HLZERO_VERSION "0.0.0"
#endif

namespace hlzero::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

void write_samples_csv(std::ostream& out, const EnsembleResult& result) {
  out << kSamplesHeader << '\n';
  for (std::int64_t r = 0; r < result.runs; ++r) {
    for (std::size_t g = 0; g < result.grid.size(); ++g) {
      const auto& s = result.sample(r, g);
      out << format_number(s.t) << ',' << format_number(s.sigma) << ',' << format_number(s.a) << ','
          << r << ',' << format_number(s.value.real()) << ',' << format_number(s.value.imag())
          << '\n';
    }
  }
}

void write_moments_csv(std::ostream& out, const MomentReport& report) {
  out << kMomentsHeader << '\n';
  for (const auto& row : report.rows) {
    out << format_number(row.key_s) << ',' << format_number(row.key_t) << ','
        << format_number(row.sigma) << ',' << format_number(row.alpha) << ',' << row.stat << ','
        << format_number(row.estimate) << ',' << format_number(row.se) << ','
        << format_number(row.theory) << ',' << format_number(row.zscore) << '\n';
  }
}

bool is_diagnostic_stat(const std::string& stat) {
  return stat.rfind("skew_", 0) == 0 || stat.rfind("exkurt_", 0) == 0;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& s, std::size_t line_no) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size())
    throw AlignmentError("line " + std::to_string(line_no) + ": not a number: '" + s + "'");
  return v;
}

}  // namespace

MomentReport read_moments_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw AlignmentError("empty moments file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kMomentsHeader) throw AlignmentError("unexpected moments header: " + line);
  MomentReport report;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 9)
      throw AlignmentError("line " + std::to_string(line_no) + ": expected 9 fields");
    MomentRow row;
    row.key_s = parse_number(cells[0], line_no);
    row.key_t = parse_number(cells[1], line_no);
    row.sigma = parse_number(cells[2], line_no);
    row.alpha = parse_number(cells[3], line_no);
    row.stat = cells[4];
    row.estimate = parse_number(cells[5], line_no);
    row.se = parse_number(cells[6], line_no);
    row.theory = parse_number(cells[7], line_no);
    row.zscore = parse_number(cells[8], line_no);
    row.diagnostic = is_diagnostic_stat(row.stat);
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string render_svg(std::span<const ComplexPoint> boundary) {
  double lo_x = -1.0, hi_x = 1.0, lo_y = -1.0, hi_y = 1.0;
  for (const auto& p : boundary) {
    lo_x = std::min(lo_x, p.real());
    hi_x = std::max(hi_x, p.real());
    lo_y = std::min(lo_y, -p.imag());
    hi_y = std::max(hi_y, -p.imag());
  }
  const double span = std::max(hi_x - lo_x, hi_y - lo_y);
  const double margin = 0.05 * span;
  const double stroke = span / 800.0;
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << format_number(lo_x - margin) << ' '
     << format_number(lo_y - margin) << ' ' << format_number(hi_x - lo_x + 2 * margin) << ' '
     << format_number(hi_y - lo_y + 2 * margin) << "\">\n"
     << "  <circle cx=\"0\" cy=\"0\" r=\"1\" fill=\"#dddddd\" stroke=\"none\"/>\n"
     << "  <path fill=\"none\" stroke=\"#1f3b73\" stroke-width=\"" << format_number(stroke)
     << "\" d=\"";
  for (std::size_t i = 0; i < boundary.size(); ++i) {
    os << (i == 0 ? "M" : " L") << format_number(boundary[i].real()) << ','
       << format_number(-boundary[i].imag());
  }
  os << " Z\"/>\n</svg>\n";
  return os.str();
}

namespace {

// Every flag lives on the top-level app so that a flat key=value config file
// can set any of them; subcommands fall through to it.
struct Options {
  std::int64_t n = 2000;
  std::vector<double> delta;
  std::optional<double> c;
  std::vector<double> t = {0.5, 1.0};
  std::vector<double> sigma = {0.5};
  std::vector<double> angle = {0.0, std::numbers::pi / 4, std::numbers::pi / 2};
  std::optional<std::int64_t> runs;
  std::uint64_t seed = 20260401;
  int modes = 0;
  int points = 2048;
  double eta = kDefaultBoundaryOffset;
  std::string out = "hlzero-out";
  std::string svg;
  std::string combine = "any";
  std::vector<std::string> inputs;  // compare only
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<ObservationPoint> make_grid(const Options& o) {
  std::vector<ObservationPoint> grid;
  for (double t : o.t)
    for (double s : o.sigma)
      for (double a : o.angle) grid.push_back({t, s, a});
  return grid;
}

GrowthConfig growth_config(const Options& o) {
  if (o.delta.size() > 1) throw UsageError("--delta takes a single value for this command");
  if (!o.delta.empty() && o.c) throw UsageError("--delta and --c are mutually exclusive");
  GrowthConfig g;
  g.n = o.n;
  if (!o.delta.empty()) {
    g.regime = Regime::fixed_t;
    g.delta = o.delta.front();
  } else if (o.c) {
    g.regime = Regime::fixed_t;
    g.capacity = *o.c;
  }
  return g;
}

ComparisonPolicy comparison_policy(const Options& o) {
  ComparisonPolicy p;
  p.combine = o.combine == "all" ? Combine::all : Combine::any;
  return p;
}

/// Collects outputs and writes the manifest plus a config file that replays the run.
class Session {
 public:
  Session(std::string command, const Options& o) : command_(std::move(command)), opts_(o) {
    fs::create_directories(opts_.out);
  }

  fs::path path(const std::string& name) { return fs::path(opts_.out) / name; }

  std::ofstream open(const fs::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw UsageError("cannot write " + p.string());
    outputs_.push_back(p.string());
    return f;
  }

  void record(const fs::path& p) { outputs_.push_back(p.string()); }

  void set(const std::string& key, json value) { extra_[key] = std::move(value); }

  void finish(const json& config) {
    const auto conf_path = path("run.conf");
    {
      std::ofstream f(conf_path, std::ios::binary);
      for (const auto& [key, value] : config.items()) {
        if (key == "inputs") continue;  // positional, not a flag
        f << key << '=';
        if (value.is_array()) {
          f << '[';
          for (std::size_t i = 0; i < value.size(); ++i) {
            if (i) f << ',';
            if (value[i].is_string())
              f << '"' << value[i].get<std::string>() << '"';
            else
              f << format_number(value[i].get<double>());
          }
          f << ']';
        } else if (value.is_string()) {
          f << '"' << value.get<std::string>() << '"';
        } else if (value.is_number_float()) {
          f << format_number(value.get<double>());
        } else {
          f << value.dump();
        }
        f << '\n';
      }
    }
    outputs_.push_back(conf_path.string());
    json manifest;
    manifest["command"] = command_;
    manifest["config"] = config;
    manifest["master_seed"] = opts_.seed;
    manifest["version"] = HLZERO_VERSION;
    manifest["timestamp"] = utc_timestamp();
    manifest["threads"] = worker_threads();
    manifest["outputs"] = outputs_;
    for (const auto& [k, v] : extra_.items()) manifest[k] = v;
    std::ofstream f(path("manifest.json"), std::ios::binary);
    f << manifest.dump(2) << '\n';
  }

 private:
  std::string command_;
  const Options& opts_;
  std::vector<std::string> outputs_;
  json extra_ = json::object();
};

json grid_config(const Options& o) {
  return {{"t", o.t}, {"sigma", o.sigma}, {"angle", o.angle}};
}

int cmd_grow(const Options& o, std::ostream& out) {
  const auto cfg_template = growth_config(o);
  GrowthConfig cfg = cfg_template;
  cfg.seed = o.seed;
  const auto cluster = grow(cfg);
  Session session("grow", o);
  {
    auto f = session.open(session.path("angles.csv"));
    f << "index,angle\n";
    const auto angles = cluster.angles();
    for (std::size_t j = 0; j < angles.size(); ++j)
      f << j + 1 << ',' << format_number(angles[j]) << '\n';
  }
  if (!o.svg.empty()) {
    const auto boundary = trace_boundary(cluster, cluster.size(), o.points, o.eta);
    std::ofstream f(o.svg, std::ios::binary);
    if (!f) throw UsageError("cannot write " + o.svg);
    f << render_svg(boundary);
    session.record(o.svg);
  }
  json config = {{"n", o.n}, {"seed", o.seed}, {"points", o.points}, {"eta", o.eta},
                 {"out", o.out}};
  if (!o.delta.empty()) config["delta"] = o.delta.front();
  if (o.c) config["c"] = *o.c;
  if (!o.svg.empty()) config["svg"] = o.svg;
  session.set("particle", {{"delta", cluster.particle().delta},
                           {"capacity", cluster.particle().capacity}});
  session.finish(config);
  out << "grew " << cluster.size() << " particles, capacity "
      << format_number(cluster.particle().capacity) << ", total "
      << format_number(cluster.particle().capacity * static_cast<double>(cluster.size())) << '\n';
  return kSuccess;
}

int report_comparison(const MomentReport& report, const Options& o, std::ostream& out) {
  const auto cmp = compare_to_theory(report, comparison_policy(o));
  std::size_t failed = 0;
  for (const auto& v : cmp.verdicts) {
    if (v.pass) continue;
    ++failed;
    const auto& row = report.rows[v.row];
    out << "FAIL " << row.stat << " s=" << format_number(row.key_s)
        << " t=" << format_number(row.key_t) << " sigma=" << format_number(row.sigma)
        << " alpha=" << format_number(row.alpha) << " estimate=" << format_number(row.estimate)
        << " theory=" << format_number(row.theory) << " z=" << format_number(v.zscore) << '\n';
  }
  out << cmp.verdicts.size() - failed << "/" << cmp.verdicts.size()
      << " comparisons within tolerance\n";
  return cmp.pass ? kSuccess : kComparisonFailure;
}

// A single run still yields its samples; moments need at least two.
MomentReport moments_or_empty(const EnsembleResult& result, std::ostream& out) {
  if (result.runs >= 2) return estimate_moments(result);
  out << "one run: samples only, no moments\n";
  return {};
}

json ensemble_config(const Options& o, std::int64_t runs) {
  json config = grid_config(o);
  config["runs"] = runs;
  config["seed"] = o.seed;
  config["combine"] = o.combine;
  config["out"] = o.out;
  return config;
}

int cmd_fluctuations(const Options& o, std::ostream& out) {
  EnsembleSpec spec;
  spec.runs = o.runs.value_or(1000);
  spec.growth = growth_config(o);
  spec.grid = make_grid(o);
  spec.master_seed = o.seed;
  const auto result = run_ensemble(spec);
  const auto report = moments_or_empty(result, out);
  Session session("fluctuations", o);
  {
    auto f = session.open(session.path("samples.csv"));
    write_samples_csv(f, result);
  }
  {
    auto f = session.open(session.path("moments.csv"));
    write_moments_csv(f, report);
  }
  json config = ensemble_config(o, spec.runs);
  config["n"] = o.n;
  if (!o.delta.empty()) config["delta"] = o.delta.front();
  if (o.c) config["c"] = *o.c;
  session.set("capacity", result.capacity);
  session.finish(config);
  return report_comparison(report, o, out);
}

int cmd_limit_field(const Options& o, std::ostream& out) {
  LimitEnsembleSpec spec;
  spec.runs = o.runs.value_or(1000);
  spec.modes = o.modes;
  spec.grid = make_grid(o);
  spec.master_seed = o.seed;
  const auto result = run_limit_ensemble(spec);
  const auto report = moments_or_empty(result, out);
  Session session("limit-field", o);
  {
    auto f = session.open(session.path("samples.csv"));
    write_samples_csv(f, result);
  }
  {
    auto f = session.open(session.path("moments.csv"));
    write_moments_csv(f, report);
  }
  json config = ensemble_config(o, spec.runs);
  config["modes"] = o.modes;
  session.set("resolved_modes", result.n);
  session.finish(config);
  return report_comparison(report, o, out);
}

int cmd_local(const Options& o, std::ostream& out) {
  if (o.c) throw UsageError("local takes --delta values, not --c");
  LocalExperimentSpec spec;
  if (!o.delta.empty()) spec.deltas = o.delta;
  spec.runs = o.runs.value_or(500);
  spec.master_seed = o.seed;
  const auto report = local_experiment(spec);
  Session session("local", o);
  {
    auto f = session.open(session.path("local.csv"));
    f << "delta,c,n,sigma,log_factor,var_re,var_re_se,var_ratio,var_ratio_se,theory_var_ratio,"
         "same_alpha,same_alpha_se,theory_same_alpha,target_same_alpha,"
         "cross_alpha,cross_alpha_se,theory_cross_alpha,target_cross_alpha,"
         "same_proxy,same_proxy_se,theory_same_proxy,"
         "cross_proxy,cross_proxy_se,theory_cross_proxy\n";
    for (const auto& r : report.rows) {
      const auto fn = format_number;
      f << fn(r.delta) << ',' << fn(r.capacity) << ',' << r.n << ',' << fn(r.sigma) << ','
        << fn(r.log_factor) << ',' << fn(r.var_re.value) << ',' << fn(r.var_re.se) << ','
        << fn(r.var_ratio.value) << ',' << fn(r.var_ratio.se) << ',' << fn(r.theory_var_ratio)
        << ',' << fn(r.same_alpha.value) << ',' << fn(r.same_alpha.se) << ','
        << fn(r.theory_same_alpha) << ',' << fn(report.target_same_alpha) << ','
        << fn(r.cross_alpha.value) << ',' << fn(r.cross_alpha.se) << ','
        << fn(r.theory_cross_alpha) << ',' << fn(report.target_cross_alpha) << ','
        << fn(r.same_proxy.value) << ',' << fn(r.same_proxy.se) << ','
        << fn(r.theory_same_proxy) << ',' << fn(r.cross_proxy.value) << ','
        << fn(r.cross_proxy.se) << ',' << fn(r.theory_cross_proxy) << '\n';
    }
  }
  session.finish({{"delta", spec.deltas}, {"runs", spec.runs}, {"seed", o.seed}, {"out", o.out}});
  out << "local experiment: " << report.rows.size() << " particle sizes, " << spec.runs
      << " runs each\n";
  return kSuccess;
}

MomentReport load_report(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot read " + path);
  return read_moments_csv(f);
}

int cmd_compare(const Options& o, std::ostream& out) {
  if (o.inputs.size() != 2) throw UsageError("compare takes exactly two moments files");
  const auto left = load_report(o.inputs[0]);
  const auto right = load_report(o.inputs[1]);
  const auto cross = compare_reports(left, right);
  Session session("compare", o);
  {
    auto f = session.open(session.path("compare.csv"));
    f << "key_s,key_t,sigma,alpha,stat,left,left_se,right,right_se,zscore\n";
    for (const auto& r : cross.rows) {
      f << format_number(r.left.key_s) << ',' << format_number(r.left.key_t) << ','
        << format_number(r.left.sigma) << ',' << format_number(r.left.alpha) << ','
        << r.left.stat << ',' << format_number(r.left.estimate) << ','
        << format_number(r.left.se) << ',' << format_number(r.right.estimate) << ','
        << format_number(r.right.se) << ',' << format_number(r.zscore) << '\n';
    }
  }
  session.finish({{"inputs", o.inputs}, {"out", o.out}});
  out << cross.rows.size() << " aligned rows, max |z| = " << format_number(cross.max_abs_z) << '\n';
  return cross.max_abs_z <= 3.0 ? kSuccess : kComparisonFailure;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"HL(0) cluster fluctuation toolkit"};
  app.set_version_flag("--version", HLZERO_VERSION);
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Flat key=value file; flags override it");

  Options o;
  app.add_option("--n", o.n, "Number of particles")->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--delta", o.delta, "Particle diameter (repeatable for local)")
      ->check(CLI::Range(0.0, kMaxDelta));
  app.add_option("--c", o.c, "Particle capacity")->check(CLI::PositiveNumber);
  app.add_option("--t", o.t, "Observation time (repeatable)")->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.add_option("--sigma", o.sigma, "Radial offset (repeatable)")->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--angle", o.angle, "Angle (repeatable)")->capture_default_str();
  app.add_option("--runs", o.runs, "Ensemble size")->check(CLI::PositiveNumber);
  app.add_option("--seed", o.seed, "Master seed")->capture_default_str();
  app.add_option("--modes", o.modes, "Fourier modes K, 0 for automatic")
      ->check(CLI::NonNegativeNumber)->capture_default_str();
  app.add_option("--points", o.points, "Boundary trace resolution")->check(CLI::Range(16, 1 << 24))
      ->capture_default_str();
  app.add_option("--eta", o.eta, "Radial offset for the boundary trace")
      ->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--out", o.out, "Output directory")->capture_default_str();
  app.add_option("--svg", o.svg, "SVG path for grow");
  app.add_option("--combine", o.combine, "Tolerance rule: any = max(3 SE, 10%), all = both")
      ->check(CLI::IsMember({"any", "all"}))->capture_default_str();

  auto* grow_cmd = app.add_subcommand("grow", "Grow one cluster; optional SVG trace");
  auto* fluct_cmd = app.add_subcommand("fluctuations", "Discrete fluctuation ensemble vs theory");
  auto* limit_cmd = app.add_subcommand("limit-field", "Limit-field ensemble vs theory");
  auto* local_cmd = app.add_subcommand("local", "Small-sigma local experiment");
  auto* compare_cmd = app.add_subcommand("compare", "Cross-model z-scores of two moments files");
  compare_cmd->add_option("files", o.inputs, "Two moments CSV files")->expected(2)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  }

  try {
    if (*grow_cmd) return cmd_grow(o, out);
    if (*fluct_cmd) return cmd_fluctuations(o, out);
    if (*limit_cmd) return cmd_limit_field(o, out);
    if (*local_cmd) return cmd_local(o, out);
    if (*compare_cmd) return cmd_compare(o, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const InsideClusterError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumericError;
  } catch (const AlignmentError& e) {
    err << "alignment error: " << e.what() << '\n';
    return kUsageError;
  } catch (const DomainError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kUsageError;
  } catch (const fs::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumericError;
  }
  return kUsageError;
}

}  // namespace hlzero::cli

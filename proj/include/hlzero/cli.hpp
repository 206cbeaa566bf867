#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hlzero/cluster.hpp"
#include "hlzero/stats.hpp"

namespace hlzero::cli {

enum ExitCode : int {
  kSuccess = 0,
  kComparisonFailure = 1,
  kUsageError = 2,
  kNumericError = 3,
};

inline constexpr const char* kSamplesHeader = "t,sigma,angle,run,re,im";
inline constexpr const char* kMomentsHeader = "key_s,key_t,sigma,alpha,stat,estimate,se,theory,zscore";

/// 17 significant digits, so values survive a round trip through text.
std::string format_number(double x);

void write_samples_csv(std::ostream& out, const EnsembleResult& result);
void write_moments_csv(std::ostream& out, const MomentReport& report);

/// Parses a moments CSV. Throws AlignmentError on a header or row mismatch.
MomentReport read_moments_csv(std::istream& in);

/// Skewness and kurtosis rows are informational; they never enter a verdict.
bool is_diagnostic_stat(const std::string& stat);

/// Closed polyline as an SVG document with the unit disc underneath.
std::string render_svg(std::span<const ComplexPoint> boundary);

/// Entry point shared by the executable and the tests. Returns an ExitCode.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hlzero::cli

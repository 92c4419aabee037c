#pragma once

// Oracle-equivalence suites run by `nanoguide selftest`.

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace nanoguide::runner {

struct SelftestOptions {
  /// Relative error injected into the decay rate on the library side of every
  /// comparison. Nonzero values must make the suites fail.
  double corruption = 0.0;
  std::size_t montecarlo_emissions = 400000;
  unsigned threads = 1;
};

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

std::vector<SuiteResult> run_selftest(const SelftestOptions& opts);

/// Prints one line per suite; returns 0 if every suite passed, 1 otherwise.
int report_selftest(const std::vector<SuiteResult>& results, std::ostream& os);

}  // namespace nanoguide::runner

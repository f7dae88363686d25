#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace korogrid::acceptance {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  /// Wall-clock budget; 0 means none.
  double time_limit = 0.0;
};

struct Options {
  std::uint64_t seed = 20240601;
  unsigned threads = 0;
};

/// Runs every acceptance criterion in order.
std::vector<CriterionResult> run_all(const Options& options);

/// One line per criterion: "[PASS] 3 title (1.2 s) : detail".
std::string format(const CriterionResult& result);

}  // namespace korogrid::acceptance

#include <cstdlib>
#include <iostream>

#include "korogrid/acceptance.hpp"

int main() {
  korogrid::acceptance::Options options;
  if (const char* seed = std::getenv("KOROGRID_SEED")) options.seed = std::strtoull(seed, nullptr, 10);
  int failed = 0;
  for (const auto& result : korogrid::acceptance::run_all(options)) {
    std::cout << korogrid::acceptance::format(result) << std::endl;
    if (!result.passed) ++failed;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}

// Prints one PASS/FAIL line per acceptance criterion; exits nonzero if any fail.

#include <iostream>

#include "focanm/testing/acceptance.hpp"

int main() {
  focanm::testing::SweepCache cache(100);
  const auto results = focanm::testing::run_acceptance({}, cache, [](const focanm::testing::CriterionResult& r) {
    std::cout << focanm::testing::format_line(r) << std::endl;
  });
  int failed = 0;
  for (const auto& r : results) failed += !r.passed;
  std::cout << results.size() - static_cast<std::size_t>(failed) << "/" << results.size() << " acceptance criteria passed"
            << std::endl;
  return failed ? 1 : 0;
}

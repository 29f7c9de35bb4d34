// Runs the acceptance battery with default settings; exit status 0 iff every criterion passes.

#include <iostream>

#include "hypflow/acceptance.hpp"

int main() {
  using namespace hypflow::acceptance;
  const auto report = run(Options{}, [](const CriterionResult& r) { std::cout << format_line(r) << std::endl; });
  int passed = 0;
  for (const auto& c : report.criteria) passed += c.passed;
  std::cout << passed << "/" << report.criteria.size() << " criteria passed" << std::endl;
  return report.passed() ? 0 : 1;
}

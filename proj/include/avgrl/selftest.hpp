#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace avgrl {

struct SelftestResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Fast oracle checks on small random instances (a few seconds in total).
std::vector<SelftestResult> run_selftest(unsigned long long seed = 7);
/// Prints one PASS/FAIL line per check; returns true when all passed.
bool report_selftest(std::ostream& out, const std::vector<SelftestResult>& results);

}  // namespace avgrl

#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace iwatsuka::selftest {

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct Report {
  std::vector<Check> checks;
  std::size_t passed() const;
  std::size_t failed() const;
};

/// Fast invariant suite over every module (a few seconds at n = 2000).
/// An exception inside a check counts as a failure of that check.
Report run();

}  // namespace iwatsuka::selftest

#pragma once

// Self-checks run by `gbs validate`: Jacobian cross-checks, quadrature
// normalizations, kernel identities and transformation round trips.

#include <cstdint>
#include <string>
#include <vector>

namespace gbs {

struct CheckResult {
  std::string name;
  bool passed = false;
  double worst = 0;  // largest observed error
  double tolerance = 0;
  std::string detail;
};

struct ValidationReport {
  std::vector<CheckResult> checks;
  bool all_passed() const;
  std::string text() const;
  std::string json() const;
};

struct ValidationOptions {
  std::uint64_t seed = 0;
  int instances = 50;  // random instances per randomized check
};

ValidationReport run_validation(const ValidationOptions& options = {});

}  // namespace gbs

#pragma once

#include <string>
#include <vector>

namespace hotinfer {

struct SelftestResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Fast embedded smoke checks: quantile constants, solver optimality
/// certificates, orthogonality, the one-step/two-step route equivalence,
/// and the interval arithmetic. Deterministic output.
std::vector<SelftestResult> run_selftest();

}  // namespace hotinfer

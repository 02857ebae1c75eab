#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mnlb {

/// One invariant check. Uniform convention: observed is the measured
/// quantity (usually a violation magnitude), pass iff observed <= tolerance.
struct CheckResult {
  std::string name;
  double tolerance;
  double observed;
  bool pass;
};

struct VerifyReport {
  std::string suite;
  std::uint64_t seed;
  std::vector<CheckResult> checks;

  bool all_pass() const;
  int failures() const;
};

struct VerifyOptions {
  /// Scales the switch-count budget in the policies suite. 1.0 is the real
  /// bound; shrinking it demonstrates the check actually binds.
  double switch_budget_factor = 1.0;
};

/// Deterministic desk-scale invariant checks. Suites: core, estimation,
/// design, policies, all. Throws std::invalid_argument on an unknown name.
VerifyReport verify_suite(const std::string& suite, std::uint64_t seed,
                          const VerifyOptions& opts = {});

/// Machine-readable report: one `check=... tolerance=... observed=...
/// status=...` line per check plus a trailing summary line.
std::string format_report(const VerifyReport& report);

}  // namespace mnlb

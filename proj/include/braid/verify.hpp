#pragma once

// Seeded oracle suites: every numerical claim the library makes, checked
// against an independent route (brute force, enumeration, exhaustive
// policy search, simulation). The CLI verify subcommand and the
// acceptance harness both run these.

#include <cstdint>
#include <string>
#include <vector>

namespace braid::verify {

struct SuiteResult {
  std::string name;
  double max_violation = 0.0;  // worst observed slack; pass iff <= tolerance
  double tolerance = 0.0;
  bool pass = false;
  double wall_seconds = 0.0;
  std::string detail;
};

struct VerifyOptions {
  uint64_t seed = 0xb81d5eed;
  bool quick = false;     // reduced trial counts; smoke use only
  std::string mutation;   // "" or "corrupt-gibbs" (fault injection self-check)
};

// Names in execution order.
const std::vector<std::string>& suite_names();

// Runs the selected suites (all when selection is empty). Unknown suite
// names throw ValidationError.
std::vector<SuiteResult> run_suites(const VerifyOptions& options,
                                    const std::vector<std::string>& selection = {});

}  // namespace braid::verify

#pragma once
// Randomized invariant suites behind `spp verify`.

#include "json.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace spp {

struct InvariantResult {
  std::string name;
  std::size_t samples = 0;
  /// Largest observed violation (relative excess of lhs over rhs, or raw
  /// mismatch for equalities); nonpositive values mean slack.
  double worst_violation = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct VerifyReport {
  std::string suite;
  std::uint64_t seed = 0;
  std::vector<InvariantResult> results;

  bool passed() const;
};

struct VerifyOptions {
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
};

/// Suites: "prox", "lemmas", "bounds", "all". Unknown names throw config.
VerifyReport run_verify_suite(const std::string& suite, const VerifyOptions& options = {});

std::vector<std::string> verify_suite_names();

nlohmann::json to_json(const VerifyReport& report);

}  // namespace spp

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "manelab/geometry.hpp"

namespace manelab {

struct CriterionResult {
  int id;
  std::string name;
  bool pass;
  std::string detail;  // observed-vs-threshold numbers, one line
};

struct AcceptanceConfig {
  std::uint64_t seed = 0;
  int threads = 1;
};

// The twelve shipped verification criteria. Exceptions inside a criterion are
// caught and reported as a failure with the message in detail, so a single
// numerical breakdown cannot abort the remaining criteria. `only` restricts a
// multi-system criterion to the parts touching that system; use
// criteria_for_system to know which ids are meaningful for a given system.
CriterionResult run_criterion(int id, const AcceptanceConfig& cfg,
                              std::optional<SystemKind> only = std::nullopt);

std::vector<int> criteria_for_system(SystemKind kind);

std::vector<CriterionResult> run_all_criteria(const AcceptanceConfig& cfg);

}  // namespace manelab

#pragma once

#include <string>

#include "reassign/world.hpp"

#ifndef REASSIGN_SCENARIO_DIR
#error "REASSIGN_SCENARIO_DIR must point at the scenarios directory"
#endif

namespace reassign::testing {

inline std::string scenario_path(const std::string& name) { return std::string(REASSIGN_SCENARIO_DIR) + "/" + name; }

/// The two-cell layout: R1 (box reach up to M2/B3), R2 (disc over cell 2).
inline SystemKnowledge dual_cell() { return load_world_file(scenario_path("dual_cell.json")); }

/// dual_cell with R2 marked failed after finishing its two sorting tasks.
inline SystemKnowledge dual_cell_after_r2_failure() {
  auto w = dual_cell();
  w.completed = {"R1-sort-1", "R1-load-M1", "R2-sort-1", "R2-sort-2"};
  w.robot("R2")->status = RobotStatus::failed();
  return w;
}

}  // namespace reassign::testing

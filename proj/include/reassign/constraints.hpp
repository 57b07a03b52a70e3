#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "reassign/world.hpp"

namespace reassign {

/// Stable machine codes carried by violations and echoed into feedback prompts.
enum class ViolationCode { ReachViolation, SensorGap, ToolMismatch, MissingCapability };

std::string_view to_string(ViolationCode code);

struct Violation {
  std::size_t constraint_index = 0;
  std::string reason;
  ViolationCode code = ViolationCode::ReachViolation;

  friend bool operator==(const Violation&, const Violation&) = default;
};

/// `valid` is true exactly when `violations` is empty.
struct Verdict {
  bool valid = true;
  std::vector<Violation> violations;

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

struct EvalOptions {
  /// Check only the dropoff endpoint for every reachability constraint.
  bool dropoff_only = false;
};

/// Outcome of evaluating one constraint. When `satisfied` is false, `code`
/// and `reason` say why.
struct Evaluation {
  bool satisfied = true;
  ViolationCode code = ViolationCode::ReachViolation;
  std::string reason;
};

Evaluation evaluate_detailed(const Constraint& constraint, const TaskSpec& task, const CapabilityConfiguration& config,
                             const SystemKnowledge& world, EvalOptions options = {});

inline bool evaluate(const Constraint& constraint, const TaskSpec& task, const CapabilityConfiguration& config,
                     const SystemKnowledge& world, EvalOptions options = {}) {
  return evaluate_detailed(constraint, task, config, world, options).satisfied;
}

Verdict validate_assignment(const TaskSpec& task, const CapabilityConfiguration& config, const SystemKnowledge& world,
                            EvalOptions options = {});

struct InfeasibleTask {
  TaskId task;
  Verdict verdict;

  friend bool operator==(const InfeasibleTask&, const InfeasibleTask&) = default;
};

struct Partition {
  std::vector<TaskId> feasible;
  std::vector<InfeasibleTask> infeasible;
};

/// Splits `tasks` by validity under `config`, preserving input order in both halves.
Partition partition_feasible(const std::vector<TaskSpec>& tasks, const CapabilityConfiguration& config,
                             const SystemKnowledge& world, EvalOptions options = {});

}  // namespace reassign

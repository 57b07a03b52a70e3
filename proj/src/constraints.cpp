#include "reassign/constraints.hpp"

#include <algorithm>

namespace reassign {

namespace {

Evaluation fail(ViolationCode code, std::string reason) { return {false, code, std::move(reason)}; }

Evaluation check_reachability(const Constraint& c, const TaskSpec& task, const CapabilityConfiguration& config,
                              const SystemKnowledge& world, EvalOptions options) {
  const auto* region = config.reachability();
  if (region == nullptr) {
    return fail(ViolationCode::MissingCapability, "configuration has no 'reachability' region");
  }
  const Endpoints endpoints = options.dropoff_only ? Endpoints::DropoffOnly : c.endpoints;
  std::vector<const LocationId*> checked;
  if (endpoints != Endpoints::DropoffOnly) checked.push_back(&task.pickup);
  if (endpoints != Endpoints::PickupOnly) checked.push_back(&task.dropoff);
  for (const auto* id : checked) {
    const auto* loc = world.location(*id);
    if (loc == nullptr) return fail(ViolationCode::ReachViolation, "location '" + *id + "' is unknown");
    if (!point_in_region(loc->position, *region)) {
      const char* role = id == &task.pickup ? "pickup" : "dropoff";
      return fail(ViolationCode::ReachViolation,
                  std::string(role) + " location '" + *id + "' is outside the reachability region");
    }
  }
  return {};
}

Evaluation check_sensor_coverage(const Constraint& c, const TaskSpec& task, const CapabilityConfiguration& config,
                                 const SystemKnowledge& world) {
  const auto* sensing = config.sensing();
  if (sensing == nullptr) return fail(ViolationCode::MissingCapability, "configuration has no 'sensing' list");
  const auto& modalities = c.modalities ? *c.modalities : task.required_modalities;
  for (const auto& modality : modalities) {
    bool covered = std::any_of(sensing->begin(), sensing->end(), [&](const SensorId& id) {
      const auto* s = world.sensor(id);
      return s != nullptr && s->modality == modality && s->covered_locations.contains(task.pickup) &&
             s->covered_locations.contains(task.dropoff);
    });
    if (!covered) {
      return fail(ViolationCode::SensorGap, "no '" + modality + "' sensor in the configuration covers both '" +
                                                task.pickup + "' and '" + task.dropoff + "'");
    }
  }
  return {};
}

Evaluation check_tool(const Constraint& c, const TaskSpec& task, const CapabilityConfiguration& config) {
  const auto* tools = config.tools();
  if (tools == nullptr) return fail(ViolationCode::MissingCapability, "configuration has no 'tool' list");
  const auto& wanted = c.tool ? c.tool : task.required_tool;
  if (!wanted) return fail(ViolationCode::ToolMismatch, "task names no tool to check");
  if (std::find(tools->begin(), tools->end(), *wanted) == tools->end()) {
    return fail(ViolationCode::ToolMismatch, "required tool '" + *wanted + "' is not in the configuration");
  }
  return {};
}

}  // namespace

std::string_view to_string(ViolationCode code) {
  switch (code) {
    case ViolationCode::ReachViolation: return "REACH_VIOLATION";
    case ViolationCode::SensorGap: return "SENSOR_GAP";
    case ViolationCode::ToolMismatch: return "TOOL_MISMATCH";
    case ViolationCode::MissingCapability: return "MISSING_CAPABILITY";
  }
  return "?";
}

Evaluation evaluate_detailed(const Constraint& constraint, const TaskSpec& task, const CapabilityConfiguration& config,
                             const SystemKnowledge& world, EvalOptions options) {
  switch (constraint.kind) {
    case ConstraintKind::Reachability: return check_reachability(constraint, task, config, world, options);
    case ConstraintKind::SensorCoverage: return check_sensor_coverage(constraint, task, config, world);
    case ConstraintKind::ToolCapability: return check_tool(constraint, task, config);
  }
  return {};
}

Verdict validate_assignment(const TaskSpec& task, const CapabilityConfiguration& config, const SystemKnowledge& world,
                            EvalOptions options) {
  Verdict verdict;
  for (std::size_t i = 0; i < task.constraints.size(); ++i) {
    auto e = evaluate_detailed(task.constraints[i], task, config, world, options);
    if (!e.satisfied) verdict.violations.push_back({i, std::move(e.reason), e.code});
  }
  verdict.valid = verdict.violations.empty();
  return verdict;
}

Partition partition_feasible(const std::vector<TaskSpec>& tasks, const CapabilityConfiguration& config,
                             const SystemKnowledge& world, EvalOptions options) {
  Partition out;
  for (const auto& task : tasks) {
    auto verdict = validate_assignment(task, config, world, options);
    if (verdict.valid) {
      out.feasible.push_back(task.id);
    } else {
      out.infeasible.push_back({task.id, std::move(verdict)});
    }
  }
  return out;
}

}  // namespace reassign

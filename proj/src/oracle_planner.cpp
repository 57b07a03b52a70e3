#include <algorithm>
#include <set>

#include "reassign/planner.hpp"

namespace reassign {

namespace {

bool watches_task(const SensorSpec& s, const TaskSpec& t) {
  return s.covered_locations.contains(t.pickup) && s.covered_locations.contains(t.dropoff);
}

// Baseline configuration with `sensing` extended by every sensor that watches
// both endpoints of at least one task in `tasks`. The key is always present.
CapabilityConfiguration with_sensor_access(const CapabilityConfiguration& baseline,
                                           const std::vector<const TaskSpec*>& tasks, const SystemKnowledge& world) {
  std::set<SensorId> granted;
  if (const auto* sensing = baseline.sensing()) granted.insert(sensing->begin(), sensing->end());
  for (const auto& sensor : world.sensors) {
    if (std::any_of(tasks.begin(), tasks.end(), [&](const TaskSpec* t) { return watches_task(sensor, *t); })) {
      granted.insert(sensor.id);
    }
  }
  auto config = baseline;
  config.set(std::string(capability::kSensing), IdentifierList(granted.begin(), granted.end()));
  return config;
}

}  // namespace

PlanResult oracle_plan(const DisruptionContext& ctx) {
  std::vector<const TaskSpec*> orphaned;
  for (const auto& t : ctx.orphaned_tasks) orphaned.push_back(&t);

  std::vector<const Robot*> candidates;
  for (const auto& r : ctx.candidates) {
    if (!r.status.is_failed()) candidates.push_back(&r);
  }
  std::sort(candidates.begin(), candidates.end(), [](const Robot* a, const Robot* b) { return a->id < b->id; });

  const Robot* best = nullptr;
  std::vector<TaskId> best_feasible;
  for (const auto* robot : candidates) {
    auto widened = with_sensor_access(robot->config, orphaned, ctx.world);
    auto part = partition_feasible(ctx.orphaned_tasks, widened, ctx.world, ctx.eval_options);
    if (part.feasible.size() > best_feasible.size()) {
      best = robot;
      best_feasible = std::move(part.feasible);
    }
  }
  if (best == nullptr) {
    return PlannerFailure{PlanFailureKind::NoFeasiblePlan, "no candidate robot can execute any orphaned task"};
  }

  std::vector<const TaskSpec*> claimed;
  for (const auto* t : orphaned) {
    if (std::find(best_feasible.begin(), best_feasible.end(), t->id) != best_feasible.end()) claimed.push_back(t);
  }
  ProposedPlan plan;
  plan.exploration_robot = best->id;
  plan.updated_config = with_sensor_access(best->config, claimed, ctx.world);
  plan.claimed_tasks = std::move(best_feasible);
  plan.rationale = "robot " + best->id + " satisfies every constraint of " + std::to_string(plan.claimed_tasks.size()) +
                   " of " + std::to_string(ctx.orphaned_tasks.size()) + " orphaned tasks";
  return plan;
}

PlannerReply OraclePlanner::propose(const DisruptionContext& ctx, std::chrono::milliseconds) {
  PlannerReply reply{{}, oracle_plan(ctx)};
  if (const auto* plan = std::get_if<ProposedPlan>(&reply.result)) {
    reply.raw_response = serialize_plan(*plan).dump();
  } else {
    reply.raw_response = std::get<PlannerFailure>(reply.result).reason;
  }
  return reply;
}

}  // namespace reassign

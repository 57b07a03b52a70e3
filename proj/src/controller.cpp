#include "reassign/controller.hpp"

#include <algorithm>
#include <stdexcept>

namespace reassign {

namespace {

const Robot& require_failed_robot(const SystemKnowledge& world, const RobotId& id) {
  const auto* robot = world.robot(id);
  if (robot == nullptr) throw ReferenceError("unknown robot '" + id + "'");
  if (!robot->status.is_failed()) throw InvariantError("robot '" + id + "' is not marked failed");
  return *robot;
}

void drop_assignments_of(SystemKnowledge& world, const RobotId& robot) {
  std::erase_if(world.assignments, [&](const auto& kv) { return kv.second == robot; });
}

// Verdicts for every claimed task plus every task the exploration robot already
// holds, all judged under the proposed configuration.
std::vector<TaskVerdict> judge_plan(const ProposedPlan& plan, const SystemKnowledge& world, EvalOptions options) {
  std::vector<TaskVerdict> out;
  auto judge = [&](const TaskId& id) {
    const auto* task = world.task(id);
    if (task == nullptr) return;
    out.push_back({id, validate_assignment(*task, plan.updated_config, world, options)});
  };
  for (const auto& id : plan.claimed_tasks) judge(id);
  for (const auto& id : world.tasks_of(plan.exploration_robot)) {
    if (std::find(plan.claimed_tasks.begin(), plan.claimed_tasks.end(), id) == plan.claimed_tasks.end()) judge(id);
  }
  return out;
}

}  // namespace

std::string_view to_string(AdaptationStatus status) {
  switch (status) {
    case AdaptationStatus::Succeeded: return "Succeeded";
    case AdaptationStatus::ExhaustedRetries: return "ExhaustedRetries";
    case AdaptationStatus::NoCandidates: return "NoCandidates";
    case AdaptationStatus::NoOrphanedTasks: return "NoOrphanedTasks";
  }
  return "?";
}

DisruptionContext gather_context(const SystemKnowledge& world, const RobotId& failed_robot, EvalOptions options) {
  DisruptionContext ctx;
  ctx.disrupted_robot = require_failed_robot(world, failed_robot);
  for (const auto& id : world.pending_tasks_of(failed_robot)) ctx.orphaned_tasks.push_back(*world.task(id));
  for (const auto& r : world.robots) {
    if (r.id != failed_robot && !r.status.is_failed()) ctx.candidates.push_back(r);
  }
  ctx.world = world;
  ctx.eval_options = options;
  return ctx;
}

SystemKnowledge refresh_configuration(const SystemKnowledge& world, const RobotId& robot_id,
                                      CapabilityConfiguration new_config) {
  SystemKnowledge out = world;
  auto* robot = out.robot(robot_id);
  if (robot == nullptr) throw ReferenceError("unknown robot '" + robot_id + "'");
  if (robot->status.is_failed()) throw InvariantError("cannot refresh failed robot '" + robot_id + "'");
  robot->config = std::move(new_config);
  check_world(out);
  return out;
}

AdaptationResult handle_failure(const RobotId& failed_robot, const SystemKnowledge& world, Planner& planner,
                                const AdaptationConfig& cfg, const Clock& clock) {
  if (cfg.max_retries < 0) throw std::invalid_argument("max_retries must be non-negative");
  const Duration started = clock.now();
  const EvalOptions options{cfg.strict_dropoff_only};
  auto ctx = gather_context(world, failed_robot, options);

  AdaptationResult result{{}, world};
  auto& outcome = result.outcome;
  outcome.failed_robot = failed_robot;

  auto give_up = [&](AdaptationStatus status) {
    outcome.status = status;
    for (const auto& t : ctx.orphaned_tasks) outcome.unassigned_tasks.push_back(t.id);
    result.world = world;
    drop_assignments_of(result.world, failed_robot);
    outcome.adaptation_time = clock.now() - started;
    return result;
  };

  if (ctx.orphaned_tasks.empty()) {
    outcome.status = AdaptationStatus::NoOrphanedTasks;
    drop_assignments_of(result.world, failed_robot);
    outcome.adaptation_time = clock.now() - started;
    return result;
  }
  if (ctx.candidates.empty()) return give_up(AdaptationStatus::NoCandidates);

  for (int attempt = 1; attempt <= cfg.max_retries + 1; ++attempt) {
    PlannerExchange exchange;
    exchange.attempt_number = attempt;
    exchange.prompt = build_prompt(ctx);

    const Duration call_start = clock.now();
    auto reply = planner.propose(ctx, cfg.planner_deadline);
    const Duration call_time = clock.now() - call_start;
    exchange.raw_response = std::move(reply.raw_response);
    exchange.parse_or_plan = std::move(reply.result);
    if (call_time > cfg.planner_deadline) {
      exchange.parse_or_plan = PlannerFailure{PlanFailureKind::Timeout, "planner exceeded its deadline"};
    }

    FeedbackEntry feedback;
    feedback.attempt_number = attempt;
    if (const auto* failure = std::get_if<PlannerFailure>(&exchange.parse_or_plan)) {
      feedback.failure = *failure;
    } else {
      const auto& plan = std::get<ProposedPlan>(exchange.parse_or_plan);
      exchange.verdicts = judge_plan(plan, world, options);
      for (const auto& tv : exchange.verdicts) {
        if (!tv.verdict.valid) feedback.violations.push_back(tv);
      }
      if (feedback.violations.empty()) {
        if (auto defect = configuration_defect(plan.updated_config); !defect.empty()) {
          feedback.failure = PlannerFailure{PlanFailureKind::SchemaMismatch, "updated_config: " + defect};
        }
      }
      if (feedback.violations.empty() && !feedback.failure) {
        // Apply: refresh the exploration robot, move claimed tasks, exclude the rest.
        SystemKnowledge next = refresh_configuration(world, plan.exploration_robot, plan.updated_config);
        drop_assignments_of(next, failed_robot);
        for (const auto& id : plan.claimed_tasks) next.assignments[id] = plan.exploration_robot;
        for (const auto& t : ctx.orphaned_tasks) {
          if (std::find(plan.claimed_tasks.begin(), plan.claimed_tasks.end(), t.id) == plan.claimed_tasks.end()) {
            outcome.excluded_tasks.push_back({t.id, validate_assignment(t, plan.updated_config, world, options)});
          }
        }
        outcome.status = AdaptationStatus::Succeeded;
        outcome.final_plan = plan;
        outcome.episode.push_back(std::move(exchange));
        outcome.attempts_used = attempt;
        outcome.adaptation_time = clock.now() - started;
        result.world = std::move(next);
        return result;
      }
      feedback.rejected_plan = plan;
    }
    outcome.episode.push_back(std::move(exchange));
    outcome.attempts_used = attempt;
    ctx.feedback_history.push_back(std::move(feedback));
  }
  return give_up(AdaptationStatus::ExhaustedRetries);
}

CentralController::CentralController(SystemKnowledge world, Planner& planner, AdaptationConfig cfg,
                                     const Clock& clock)
    : world_(std::move(world)), planner_(planner), cfg_(cfg), clock_(clock) {}

void CentralController::notify_failure(const RobotId& robot) {
  auto* r = world_.robot(robot);
  if (r == nullptr) throw ReferenceError("unknown robot '" + robot + "'");
  r->status = RobotStatus::failed();
  inbound_.push_back(robot);
}

std::vector<AdaptationOutcome> CentralController::process_pending() {
  std::vector<AdaptationOutcome> outcomes;
  while (!inbound_.empty()) {
    auto robot = inbound_.front();
    inbound_.pop_front();
    auto result = handle_failure(robot, world_, planner_, cfg_, clock_);
    world_ = std::move(result.world);
    outcomes.push_back(std::move(result.outcome));
  }
  return outcomes;
}

}  // namespace reassign

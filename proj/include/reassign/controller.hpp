#pragma once

#include <chrono>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "reassign/clock.hpp"
#include "reassign/planner.hpp"
#include "reassign/world.hpp"

namespace reassign {

struct AdaptationConfig {
  /// Retries after the first attempt; an episode makes at most max_retries + 1 planner calls.
  int max_retries = 4;
  std::chrono::milliseconds planner_deadline{60000};
  bool strict_dropoff_only = false;
};

enum class AdaptationStatus { Succeeded, ExhaustedRetries, NoCandidates, NoOrphanedTasks };

std::string_view to_string(AdaptationStatus status);

struct PlannerExchange {
  int attempt_number = 1;
  PromptText prompt;
  std::string raw_response;
  PlanResult parse_or_plan;
  /// Empty when the planner produced no plan.
  std::vector<TaskVerdict> verdicts;
};

struct AdaptationOutcome {
  RobotId failed_robot;
  AdaptationStatus status = AdaptationStatus::ExhaustedRetries;
  std::vector<PlannerExchange> episode;
  std::optional<ProposedPlan> final_plan;
  int attempts_used = 0;
  Duration adaptation_time{0};
  /// Orphaned tasks left out of the reassignment, with their verdict under
  /// the applied configuration.
  std::vector<TaskVerdict> excluded_tasks;
  /// Orphaned tasks returned to the unassigned pool (exhaustion / no candidates).
  std::vector<TaskId> unassigned_tasks;
};

/// Snapshot of the disruption caused by `failed_robot`, with empty feedback.
DisruptionContext gather_context(const SystemKnowledge& world, const RobotId& failed_robot, EvalOptions options = {});

/// Returns `world` with `robot`'s configuration replaced. Throws ReferenceError
/// for an unknown robot and InvariantError for a failed robot or a malformed
/// configuration.
SystemKnowledge refresh_configuration(const SystemKnowledge& world, const RobotId& robot,
                                      CapabilityConfiguration new_config);

struct AdaptationResult {
  AdaptationOutcome outcome;
  SystemKnowledge world;
};

/// Runs one adaptation episode: plan, validate, feed back, retry, apply.
/// `failed_robot` must exist and already be marked Failed in `world`.
AdaptationResult handle_failure(const RobotId& failed_robot, const SystemKnowledge& world, Planner& planner,
                                const AdaptationConfig& cfg, const Clock& clock);

/// Owns the writable world and serializes failure notifications in arrival order.
class CentralController {
 public:
  CentralController(SystemKnowledge world, Planner& planner, AdaptationConfig cfg, const Clock& clock);

  /// Marks the robot Failed and queues the notification.
  void notify_failure(const RobotId& robot);
  /// Handles every queued notification, oldest first.
  std::vector<AdaptationOutcome> process_pending();

  [[nodiscard]] const SystemKnowledge& world() const { return world_; }
  SystemKnowledge& mutable_world() { return world_; }
  [[nodiscard]] bool has_pending() const { return !inbound_.empty(); }

 private:
  SystemKnowledge world_;
  Planner& planner_;
  AdaptationConfig cfg_;
  const Clock& clock_;
  std::deque<RobotId> inbound_;
};

}  // namespace reassign

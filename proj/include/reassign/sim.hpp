#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "reassign/clock.hpp"
#include "reassign/controller.hpp"
#include "reassign/world.hpp"

namespace reassign {

using LogicalTime = std::int64_t;

enum class EventKind { TaskStarted, TaskCompleted, FailureNotification, ConfigRefreshed, TaskAssigned };

std::string_view to_string(EventKind kind);

struct AgentEvent {
  EventKind kind = EventKind::TaskAssigned;
  RobotId robot;
  std::optional<TaskId> task;
  LogicalTime time = 0;

  friend bool operator==(const AgentEvent&, const AgentEvent&) = default;
};

struct FaultTrigger {
  enum class Kind { AfterNTasksCompleted, AtLogicalTime };
  Kind kind = Kind::AfterNTasksCompleted;
  std::int64_t value = 0;

  static FaultTrigger after_tasks(std::int64_t n) { return {Kind::AfterNTasksCompleted, n}; }
  static FaultTrigger at_time(LogicalTime t) { return {Kind::AtLogicalTime, t}; }
  friend bool operator==(const FaultTrigger&, const FaultTrigger&) = default;
};

struct FaultEntry {
  RobotId robot;
  FaultTrigger trigger;

  friend bool operator==(const FaultEntry&, const FaultEntry&) = default;
};

struct FaultScript {
  std::vector<FaultEntry> entries;

  /// Throws std::invalid_argument on a second entry for the same robot or a
  /// negative trigger value.
  void validate() const;
};

enum class AgentMode { Idle, Executing, Failed };

/// One robot agent: task manager queue, controller progress, health monitor.
struct AgentState {
  RobotId robot;
  AgentMode mode = AgentMode::Idle;
  std::deque<TaskId> queue;
  std::optional<TaskId> current;
  int remaining = 0;
  int completed = 0;
  std::optional<FaultTrigger> fault;
  LogicalTime last_emit = 0;
};

struct StepResult {
  AgentState state;
  std::vector<AgentEvent> emitted;
  std::vector<std::string> warnings;
};

/// Advances one agent by one logical tick: absorb inbound events, progress the
/// running task, fire a due fault, then start the next queued task if its
/// object can be observed.
StepResult step(AgentState state, const SystemKnowledge& world, const std::vector<AgentEvent>& inbound,
                LogicalTime now);

/// Synthetic observations of every object at a location watched by a sensor
/// listed in the robot's `sensing` capability. One observation per object.
std::vector<Observation> observe(const RobotId& robot, const SystemKnowledge& world);

/// Whether `robot` can currently perceive the object `task` picks up. Tasks
/// without observability requirements need no perception.
bool task_observable(const RobotId& robot, const TaskSpec& task, const SystemKnowledge& world);

struct SimulationConfig {
  AdaptationConfig adaptation;
  std::size_t event_limit = 10000;
  /// Time charged to each planner call; measured wall time when empty.
  std::optional<Duration> planner_latency = Duration{1.0};
};

enum class Termination { Completed, Stalled, EventLimitExceeded };

std::string_view to_string(Termination t);

struct TimedOutcome {
  LogicalTime time = 0;
  /// Number of events recorded before this adaptation finished.
  std::size_t event_index = 0;
  AdaptationOutcome outcome;
};

struct TrialTrace {
  std::vector<AgentEvent> events;
  std::vector<TimedOutcome> adaptations;
  std::vector<std::string> warnings;
  SystemKnowledge final_world;
  Termination termination = Termination::Completed;
  LogicalTime end_time = 0;

  std::vector<TaskId> completed;
  std::vector<TaskId> excluded;
  std::vector<TaskId> unassigned;
  /// Still assigned but never finished (object never observable).
  std::vector<TaskId> blocked;
};

TrialTrace run_simulation(const SystemKnowledge& world, const FaultScript& faults, Planner& planner,
                          const SimulationConfig& cfg);

/// Newline-delimited JSON: one line per event, one per adaptation, and a final
/// TrialEnd line.
std::string export_trace_ndjson(const TrialTrace& trace);

}  // namespace reassign

#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "reassign/constraints.hpp"
#include "reassign/world.hpp"

namespace reassign {

/// A candidate reassignment: which robot takes over, under which configuration,
/// and which orphaned tasks it claims.
struct ProposedPlan {
  RobotId exploration_robot;
  CapabilityConfiguration updated_config;
  std::vector<TaskId> claimed_tasks;
  std::string rationale;

  friend bool operator==(const ProposedPlan&, const ProposedPlan&) = default;
};

enum class PlanFailureKind { NoJsonFound, SchemaMismatch, UnknownReference, Timeout, HttpError, NoFeasiblePlan };

std::string_view to_string(PlanFailureKind kind);

struct PlannerFailure {
  PlanFailureKind kind = PlanFailureKind::NoJsonFound;
  std::string reason;

  friend bool operator==(const PlannerFailure&, const PlannerFailure&) = default;
};

using PlanResult = std::variant<ProposedPlan, PlannerFailure>;

struct TaskVerdict {
  TaskId task;
  Verdict verdict;

  friend bool operator==(const TaskVerdict&, const TaskVerdict&) = default;
};

/// Why an attempt was rejected. Either the planner produced no usable plan
/// (`failure`) or a plan whose tasks failed validation (`violations`).
struct FeedbackEntry {
  int attempt_number = 1;
  std::optional<ProposedPlan> rejected_plan;
  std::vector<TaskVerdict> violations;
  std::optional<PlannerFailure> failure;
};

struct DisruptionContext {
  Robot disrupted_robot;
  std::vector<TaskSpec> orphaned_tasks;
  std::vector<Robot> candidates;
  SystemKnowledge world;
  std::vector<FeedbackEntry> feedback_history;
  EvalOptions eval_options;

  [[nodiscard]] bool is_candidate(std::string_view robot) const;
  [[nodiscard]] bool is_orphaned(std::string_view task) const;
};

namespace prompt_heading {
inline constexpr std::string_view kRole = "Role Assignment and Task Objectives";
inline constexpr std::string_view kPolicy = "Adaptation Policy Instructions";
inline constexpr std::string_view kEligibility = "Task Eligibility Constraints";
inline constexpr std::string_view kSystemData = "System-Level Data";
inline constexpr std::string_view kFeedback = "Validation Feedback";
}  // namespace prompt_heading

struct PromptSection {
  std::string heading;
  std::string body;

  friend bool operator==(const PromptSection&, const PromptSection&) = default;
};

struct PromptText {
  std::vector<PromptSection> sections;

  [[nodiscard]] std::string render() const;
  friend bool operator==(const PromptText&, const PromptText&) = default;
};

/// JSON snapshot of everything the planner needs to know about the disruption.
nlohmann::json serialize_context(const DisruptionContext& ctx);

/// Four sections, plus a fifth listing prior rejections when the context
/// carries feedback.
PromptText build_prompt(const DisruptionContext& ctx);

/// Text block describing one rejected attempt; each starts with "### Attempt ".
std::string render_feedback(const FeedbackEntry& entry);

nlohmann::json serialize_plan(const ProposedPlan& plan);

/// Pulls the plan object out of a free-text planner response and checks it
/// against the context. Never throws.
PlanResult parse_plan(std::string_view response_text, const DisruptionContext& ctx);

struct PlannerReply {
  std::string raw_response;
  PlanResult result;
};

class Planner {
 public:
  virtual ~Planner() = default;
  virtual PlannerReply propose(const DisruptionContext& ctx, std::chrono::milliseconds deadline) = 0;
};

/// Deterministic reference planner. Scores every candidate on its baseline
/// configuration (with sensor access widened to the sensors watching the
/// orphaned tasks) and keeps the one that can do the most tasks; ties go to
/// the smallest robot id. Returns NoFeasiblePlan when nobody can do anything.
PlanResult oracle_plan(const DisruptionContext& ctx);

class OraclePlanner final : public Planner {
 public:
  PlannerReply propose(const DisruptionContext& ctx, std::chrono::milliseconds deadline) override;
};

}  // namespace reassign

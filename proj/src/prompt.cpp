#include <algorithm>
#include <sstream>

#include "reassign/planner.hpp"

namespace reassign {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::vector<std::string> ids_of(const auto& items) {
  std::vector<std::string> out;
  for (const auto& item : items) out.push_back(item.id);
  return out;
}

std::string role_section(const DisruptionContext& ctx) {
  std::ostringstream os;
  os << "You are the central controller agent (CCA) of a multi-robot manufacturing system. "
     << "Robot " << ctx.disrupted_robot.id << " has failed and can no longer execute its tasks.\n"
     << "Orphaned tasks: " << join(ids_of(ctx.orphaned_tasks), ", ") << "\n"
     << "Candidate robots: " << join(ids_of(ctx.candidates), ", ") << "\n"
     << "Select exactly one candidate as the exploration robot, produce its updated capability "
     << "configuration, and reassign to it every orphaned task it can validly execute.";
  return os.str();
}

std::string policy_section() {
  static const std::string schema = json{
      {"exploration_robot", "<candidate robot id>"},
      {"updated_config",
       {{"reachability", {{"kind", "box"}, {"min", {0, 0, 0}}, {"max", {0, 0, 0}}}},
        {"sensing", {"<sensor id>"}},
        {"tool", {"<tool id>"}},
        {"speed", {{"value", 0}, {"unit", "mm/s"}}}}},
      {"claimed_tasks", {"<orphaned task id>"}},
      {"rationale", "<one or two sentences>"}}.dump(2);
  std::ostringstream os;
  os << "Use the existing configuration of the chosen candidate robot as a baseline and update only the "
     << "fields directly relevant to the reassigned tasks (for example `sensing`, to gain access to the "
     << "sensors observing the orphaned tasks). `reachability` describes the physical workspace of the "
     << "robot and must be copied from the baseline unchanged. Keep every other field of the baseline.\n"
     << "Respond with a single JSON object and nothing else, following exactly this schema "
     << "(no additional top-level keys; reachability may instead be "
     << R"({"kind":"disc","center":[x,y],"radius":r,"z":[lo,hi]}))"
     << "):\n"
     << schema;
  return os.str();
}

std::string eligibility_section(const DisruptionContext& ctx) {
  std::ostringstream os;
  os << "Claim a task only if ALL of its listed constraints hold under your updated configuration. "
     << "Do not claim tasks that violate any constraint; they will be excluded from the assignment.\n"
     << "- reachability: ";
  if (ctx.eval_options.dropoff_only) {
    os << "the dropoff location position lies inside the `reachability` region.\n";
  } else {
    os << "the pickup and dropoff positions (as restricted by the constraint's `endpoints`) lie inside the "
       << "`reachability` region. Box: min <= p <= max on every axis, boundary included. Disc: planar "
       << "distance to center <= radius and z within [lo, hi].\n";
  }
  os << "- sensor_coverage: for every required modality, some sensor listed in `sensing` has that "
     << "modality and covers both the pickup and the dropoff location.\n"
     << "- tool: the task's required tool appears in the `tool` list.\n"
     << "A configuration missing the key a constraint inspects fails that constraint.";
  return os.str();
}

std::string failure_line(const PlannerFailure& f) {
  return "- " + std::string(to_string(f.kind)) + ": " + f.reason + "\n";
}

}  // namespace

bool DisruptionContext::is_candidate(std::string_view robot) const {
  return std::any_of(candidates.begin(), candidates.end(), [&](const Robot& r) { return r.id == robot; });
}

bool DisruptionContext::is_orphaned(std::string_view task) const {
  return std::any_of(orphaned_tasks.begin(), orphaned_tasks.end(), [&](const TaskSpec& t) { return t.id == task; });
}

std::string PromptText::render() const {
  std::string out;
  for (const auto& s : sections) {
    out += "## ";
    out += s.heading;
    out += "\n";
    out += s.body;
    out += "\n\n";
  }
  return out;
}

json serialize_context(const DisruptionContext& ctx) {
  json j;
  j["disrupted_robot"] = ctx.disrupted_robot.id;
  j["orphaned_tasks"] = ids_of(ctx.orphaned_tasks);
  j["candidate_robots"] = ids_of(ctx.candidates);
  j["completed_tasks"] = ctx.world.completed;
  j["system"] = to_json(ctx.world);
  return j;
}

std::string render_feedback(const FeedbackEntry& entry) {
  std::ostringstream os;
  os << "### Attempt " << entry.attempt_number << "\n";
  if (entry.rejected_plan) os << "Rejected plan: " << serialize_plan(*entry.rejected_plan).dump() << "\n";
  if (entry.failure) os << failure_line(*entry.failure);
  for (const auto& tv : entry.violations) {
    for (const auto& v : tv.verdict.violations) {
      os << "- task " << tv.task << ": " << to_string(v.code) << " (constraint " << v.constraint_index
         << "): " << v.reason << "\n";
    }
  }
  return os.str();
}

PromptText build_prompt(const DisruptionContext& ctx) {
  PromptText p;
  p.sections.push_back({std::string(prompt_heading::kRole), role_section(ctx)});
  p.sections.push_back({std::string(prompt_heading::kPolicy), policy_section()});
  p.sections.push_back({std::string(prompt_heading::kEligibility), eligibility_section(ctx)});
  p.sections.push_back({std::string(prompt_heading::kSystemData), serialize_context(ctx).dump(2)});
  if (!ctx.feedback_history.empty()) {
    auto history = ctx.feedback_history;
    std::stable_sort(history.begin(), history.end(),
                     [](const FeedbackEntry& a, const FeedbackEntry& b) { return a.attempt_number < b.attempt_number; });
    std::string body =
        "Your previous responses failed validation. Correct every listed problem in your next response.\n";
    for (const auto& entry : history) body += render_feedback(entry);
    p.sections.push_back({std::string(prompt_heading::kFeedback), std::move(body)});
  }
  return p;
}

}  // namespace reassign

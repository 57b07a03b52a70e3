#include <set>

#include "reassign/planner.hpp"

namespace reassign {

using nlohmann::json;

namespace {

PlannerFailure failure(PlanFailureKind kind, std::string reason) { return {kind, std::move(reason)}; }

// Index one past the '}' that closes the object opened at `start`, or npos.
std::size_t match_object(std::string_view text, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

// All balanced top-level JSON objects embedded in the text, in order.
std::vector<json> embedded_objects(std::string_view text) {
  std::vector<json> out;
  std::size_t pos = 0;
  while ((pos = text.find('{', pos)) != std::string_view::npos) {
    auto end = match_object(text, pos);
    if (end == std::string_view::npos) break;
    auto parsed = json::parse(text.substr(pos, end - pos), nullptr, false);
    if (!parsed.is_discarded() && parsed.is_object()) {
      out.push_back(std::move(parsed));
      pos = end;
    } else {
      ++pos;
    }
  }
  return out;
}

PlanResult plan_from_json(const json& j, const DisruptionContext& ctx) {
  static const std::set<std::string> allowed{"exploration_robot", "updated_config", "claimed_tasks", "rationale"};
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) return failure(PlanFailureKind::SchemaMismatch, "unknown top-level key '" + key + "'");
  }
  for (const char* key : {"exploration_robot", "updated_config", "claimed_tasks"}) {
    if (!j.contains(key)) return failure(PlanFailureKind::SchemaMismatch, std::string("missing key '") + key + "'");
  }
  if (!j["exploration_robot"].is_string()) {
    return failure(PlanFailureKind::SchemaMismatch, "'exploration_robot' must be a string");
  }
  if (!j["claimed_tasks"].is_array()) return failure(PlanFailureKind::SchemaMismatch, "'claimed_tasks' must be an array");
  if (j.contains("rationale") && !j["rationale"].is_string()) {
    return failure(PlanFailureKind::SchemaMismatch, "'rationale' must be a string");
  }

  ProposedPlan plan;
  plan.exploration_robot = j["exploration_robot"].get<std::string>();
  if (j.contains("rationale")) plan.rationale = j["rationale"].get<std::string>();
  try {
    plan.updated_config = configuration_from_json(j["updated_config"]);
  } catch (const WorldError& e) {
    return failure(PlanFailureKind::SchemaMismatch, std::string("updated_config: ") + e.what());
  }
  if (const auto* region = plan.updated_config.reachability()) {
    if (auto d = region_defect(*region); !d.empty()) {
      return failure(PlanFailureKind::SchemaMismatch, "updated_config.reachability: " + d);
    }
  }

  std::set<std::string> seen;
  for (const auto& t : j["claimed_tasks"]) {
    if (!t.is_string()) return failure(PlanFailureKind::SchemaMismatch, "'claimed_tasks' must hold strings");
    auto id = t.get<std::string>();
    if (!seen.insert(id).second) {
      return failure(PlanFailureKind::SchemaMismatch, "task '" + id + "' is claimed twice");
    }
    plan.claimed_tasks.push_back(std::move(id));
  }
  if (plan.claimed_tasks.empty() && !ctx.orphaned_tasks.empty()) {
    return failure(PlanFailureKind::SchemaMismatch, "'claimed_tasks' is empty");
  }

  if (plan.exploration_robot == ctx.disrupted_robot.id) {
    return failure(PlanFailureKind::UnknownReference,
                   "exploration robot '" + plan.exploration_robot + "' is the disrupted robot");
  }
  if (!ctx.is_candidate(plan.exploration_robot)) {
    return failure(PlanFailureKind::UnknownReference,
                   "exploration robot '" + plan.exploration_robot + "' is not an available candidate");
  }
  for (const auto& id : plan.claimed_tasks) {
    if (!ctx.is_orphaned(id)) {
      return failure(PlanFailureKind::UnknownReference, "claimed task '" + id + "' is not an orphaned task");
    }
  }
  if (const auto* sensing = plan.updated_config.sensing()) {
    for (const auto& s : *sensing) {
      if (!ctx.world.sensor(s)) return failure(PlanFailureKind::UnknownReference, "unknown sensor '" + s + "'");
    }
  }
  return plan;
}

}  // namespace

std::string_view to_string(PlanFailureKind kind) {
  switch (kind) {
    case PlanFailureKind::NoJsonFound: return "NO_JSON_FOUND";
    case PlanFailureKind::SchemaMismatch: return "SCHEMA_MISMATCH";
    case PlanFailureKind::UnknownReference: return "UNKNOWN_REFERENCE";
    case PlanFailureKind::Timeout: return "TIMEOUT";
    case PlanFailureKind::HttpError: return "HTTP_ERROR";
    case PlanFailureKind::NoFeasiblePlan: return "NO_FEASIBLE_PLAN";
  }
  return "?";
}

json serialize_plan(const ProposedPlan& plan) {
  return {{"exploration_robot", plan.exploration_robot},
          {"updated_config", to_json(plan.updated_config)},
          {"claimed_tasks", plan.claimed_tasks},
          {"rationale", plan.rationale}};
}

PlanResult parse_plan(std::string_view response_text, const DisruptionContext& ctx) {
  auto objects = embedded_objects(response_text);
  if (objects.empty()) return failure(PlanFailureKind::NoJsonFound, "response contains no JSON object");
  for (const auto& obj : objects) {
    if (obj.contains("exploration_robot")) return plan_from_json(obj, ctx);
  }
  return plan_from_json(objects.front(), ctx);
}

}  // namespace reassign

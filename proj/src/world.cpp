#include "reassign/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace reassign {

using nlohmann::json;

namespace {

template <typename T>
auto find_by_id(T& items, std::string_view id) -> decltype(&items.front()) {
  auto it = std::find_if(items.begin(), items.end(), [&](const auto& item) { return item.id == id; });
  return it == items.end() ? nullptr : &*it;
}

void expect_keys(const json& j, std::initializer_list<std::string_view> required,
                 std::initializer_list<std::string_view> optional, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": expected an object");
  for (const auto& key : required) {
    if (!j.contains(key)) throw ParseError(where + ": missing key '" + std::string(key) + "'");
  }
  for (const auto& [key, _] : j.items()) {
    bool known = std::find(required.begin(), required.end(), key) != required.end() ||
                 std::find(optional.begin(), optional.end(), key) != optional.end();
    if (!known) throw ParseError(where + ": unknown key '" + key + "'");
  }
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ParseError(where + ": expected a number");
  double v = j.get<double>();
  if (!std::isfinite(v)) throw ParseError(where + ": non-finite number");
  return v;
}

std::string identifier(const json& j, const std::string& where) {
  if (!j.is_string()) throw ParseError(where + ": expected a string");
  auto s = j.get<std::string>();
  if (s.empty()) throw InvariantError(where + ": identifier must not be empty");
  return s;
}

std::vector<std::string> identifier_list(const json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected an array of strings");
  std::vector<std::string> out;
  out.reserve(j.size());
  for (const auto& e : j) out.push_back(identifier(e, where));
  return out;
}

std::vector<double> number_array(const json& j, std::size_t n, const std::string& where) {
  if (!j.is_array() || j.size() != n) {
    throw ParseError(where + ": expected an array of " + std::to_string(n) + " numbers");
  }
  std::vector<double> out;
  for (const auto& e : j) out.push_back(number(e, where));
  return out;
}

Point point_from(const json& j, const std::string& where) {
  auto v = number_array(j, 3, where);
  return {v[0], v[1], v[2]};
}

json point_json(const Point& p) { return json::array({p.x, p.y, p.z}); }

CapabilityValue capability_value_from(const std::string& key, const json& j) {
  const std::string where = "capability '" + key + "'";
  if (key == capability::kReachability) return region_from_json(j);
  if (key == capability::kSensing || key == capability::kTool) return identifier_list(j, where);
  if (key == capability::kSpeed) {
    expect_keys(j, {"value", "unit"}, {}, where);
    return Scalar{number(j["value"], where), identifier(j["unit"], where)};
  }
  if (j.is_string()) return j.get<std::string>();
  if (j.is_array()) return identifier_list(j, where);
  if (j.is_object() && j.contains("kind")) return region_from_json(j);
  if (j.is_object()) {
    expect_keys(j, {"value", "unit"}, {}, where);
    return Scalar{number(j["value"], where), identifier(j["unit"], where)};
  }
  throw ParseError(where + ": unsupported value type");
}

json capability_value_json(const CapabilityValue& value) {
  return std::visit(
      [](const auto& v) -> json {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, Scalar>) {
          return json{{"value", v.value}, {"unit", v.unit}};
        } else if constexpr (std::is_same_v<V, Region>) {
          return to_json(v);
        } else {
          return json(v);
        }
      },
      value);
}

RobotStatus status_from(const json& robot, const std::string& where) {
  if (!robot.contains("status")) return RobotStatus::idle();
  auto s = identifier(robot["status"], where + ".status");
  if (s == "idle") {
    if (robot.contains("current_task")) throw InvariantError(where + ": current_task requires status executing");
    return RobotStatus::idle();
  }
  if (s == "failed") {
    if (robot.contains("current_task")) throw InvariantError(where + ": current_task requires status executing");
    return RobotStatus::failed();
  }
  if (s == "executing") {
    if (!robot.contains("current_task")) throw ParseError(where + ": executing robot needs current_task");
    return RobotStatus::executing(identifier(robot["current_task"], where + ".current_task"));
  }
  throw ParseError(where + ": unknown status '" + s + "'");
}

Constraint constraint_from(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("kind")) throw ParseError(where + ": constraint needs 'kind'");
  auto kind = identifier(j["kind"], where + ".kind");
  if (kind == "reachability") {
    expect_keys(j, {"kind"}, {"endpoints"}, where);
    auto e = j.contains("endpoints") ? identifier(j["endpoints"], where) : std::string("both");
    if (e == "both") return Constraint::reachability(Endpoints::Both);
    if (e == "pickup") return Constraint::reachability(Endpoints::PickupOnly);
    if (e == "dropoff") return Constraint::reachability(Endpoints::DropoffOnly);
    throw ParseError(where + ": endpoints must be both, pickup or dropoff");
  }
  if (kind == "sensor_coverage") {
    expect_keys(j, {"kind"}, {"modalities"}, where);
    if (j.contains("modalities")) return Constraint::sensor_coverage(identifier_list(j["modalities"], where));
    return Constraint::sensor_coverage();
  }
  if (kind == "tool") {
    expect_keys(j, {"kind"}, {"tool"}, where);
    if (j.contains("tool")) return Constraint::tool_capability(identifier(j["tool"], where));
    return Constraint::tool_capability();
  }
  throw ParseError(where + ": unknown constraint kind '" + kind + "'");
}

json constraint_json(const Constraint& c) {
  switch (c.kind) {
    case ConstraintKind::Reachability: {
      const char* e = c.endpoints == Endpoints::Both ? "both"
                      : c.endpoints == Endpoints::PickupOnly ? "pickup"
                                                             : "dropoff";
      return {{"kind", "reachability"}, {"endpoints", e}};
    }
    case ConstraintKind::SensorCoverage: {
      json j{{"kind", "sensor_coverage"}};
      if (c.modalities) j["modalities"] = *c.modalities;
      return j;
    }
    case ConstraintKind::ToolCapability: {
      json j{{"kind", "tool"}};
      if (c.tool) j["tool"] = *c.tool;
      return j;
    }
  }
  return {};
}

template <typename T>
void require_unique_ids(const std::vector<T>& items, const char* what) {
  std::unordered_set<std::string> seen;
  for (const auto& item : items) {
    if (item.id.empty()) throw InvariantError(std::string(what) + " id must not be empty");
    if (!seen.insert(item.id).second) {
      throw InvariantError(std::string("duplicate ") + what + " id '" + item.id + "'");
    }
  }
}

}  // namespace

bool point_in_region(const Point& p, const Region& region) {
  if (const auto* box = std::get_if<Box>(&region)) {
    return p.x >= box->min.x && p.x <= box->max.x && p.y >= box->min.y && p.y <= box->max.y &&
           p.z >= box->min.z && p.z <= box->max.z;
  }
  const auto& disc = std::get<Disc>(region);
  const double dx = p.x - disc.cx;
  const double dy = p.y - disc.cy;
  return dx * dx + dy * dy <= disc.radius * disc.radius && p.z >= disc.z_lo && p.z <= disc.z_hi;
}

std::string region_defect(const Region& region) {
  if (const auto* box = std::get_if<Box>(&region)) {
    if (box->min.x > box->max.x || box->min.y > box->max.y || box->min.z > box->max.z) {
      return "box min exceeds max on some axis";
    }
    return {};
  }
  const auto& disc = std::get<Disc>(region);
  if (!(disc.radius > 0)) return "disc radius must be positive";
  if (disc.z_lo > disc.z_hi) return "disc z-range is inverted";
  return {};
}

void CapabilityConfiguration::set(std::string key, CapabilityValue value) {
  entries_.insert_or_assign(std::move(key), std::move(value));
}

bool CapabilityConfiguration::erase(std::string_view key) {
  auto it = entries_.find(key);
  if (it == entries_.end()) return false;
  entries_.erase(it);
  return true;
}

bool CapabilityConfiguration::contains(std::string_view key) const { return entries_.find(key) != entries_.end(); }

const CapabilityValue* CapabilityConfiguration::find(std::string_view key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

const Region* CapabilityConfiguration::reachability() const {
  const auto* v = find(capability::kReachability);
  return v ? std::get_if<Region>(v) : nullptr;
}

const IdentifierList* CapabilityConfiguration::sensing() const {
  const auto* v = find(capability::kSensing);
  return v ? std::get_if<IdentifierList>(v) : nullptr;
}

const IdentifierList* CapabilityConfiguration::tools() const {
  const auto* v = find(capability::kTool);
  return v ? std::get_if<IdentifierList>(v) : nullptr;
}

std::string configuration_defect(const CapabilityConfiguration& config) {
  const auto* region = config.reachability();
  if (region == nullptr) return "configuration lacks a 'reachability' region";
  if (auto d = region_defect(*region); !d.empty()) return d;
  if (config.contains(capability::kSensing) && config.sensing() == nullptr) return "'sensing' must be a list";
  if (config.contains(capability::kTool) && config.tools() == nullptr) return "'tool' must be a list";
  return {};
}

const Robot* SystemKnowledge::robot(std::string_view id) const { return find_by_id(robots, id); }
Robot* SystemKnowledge::robot(std::string_view id) { return find_by_id(robots, id); }
const TaskSpec* SystemKnowledge::task(std::string_view id) const { return find_by_id(tasks, id); }
const Location* SystemKnowledge::location(std::string_view id) const { return find_by_id(locations, id); }
const SensorSpec* SystemKnowledge::sensor(std::string_view id) const { return find_by_id(sensors, id); }

std::vector<TaskId> SystemKnowledge::tasks_of(std::string_view robot_id) const {
  std::vector<TaskId> out;
  for (const auto& t : tasks) {
    auto it = assignments.find(t.id);
    if (it != assignments.end() && it->second == robot_id) out.push_back(t.id);
  }
  return out;
}

std::vector<TaskId> SystemKnowledge::pending_tasks_of(std::string_view robot_id) const {
  auto out = tasks_of(robot_id);
  std::erase_if(out, [&](const TaskId& id) { return completed.contains(id); });
  return out;
}

void check_world(const SystemKnowledge& world) {
  require_unique_ids(world.robots, "robot");
  require_unique_ids(world.tasks, "task");
  require_unique_ids(world.locations, "location");
  require_unique_ids(world.sensors, "sensor");

  std::set<std::string> modalities;
  for (const auto& s : world.sensors) {
    if (s.modality.empty()) throw InvariantError("sensor '" + s.id + "' has an empty modality");
    modalities.insert(s.modality);
    for (const auto& loc : s.covered_locations) {
      if (!world.location(loc)) {
        throw ReferenceError("sensor '" + s.id + "' covers unknown location '" + loc + "'");
      }
    }
  }

  for (const auto& r : world.robots) {
    if (auto d = configuration_defect(r.config); !d.empty()) {
      throw InvariantError("robot '" + r.id + "': " + d);
    }
    if (const auto* sensing = r.config.sensing()) {
      for (const auto& s : *sensing) {
        if (!world.sensor(s)) throw ReferenceError("robot '" + r.id + "' senses through unknown sensor '" + s + "'");
      }
    }
    if (r.status.state == RobotState::Executing) {
      if (!r.status.task || !world.task(*r.status.task)) {
        throw ReferenceError("robot '" + r.id + "' executes an unknown task");
      }
    } else if (r.status.task) {
      throw InvariantError("robot '" + r.id + "' carries a task without executing it");
    }
  }

  for (const auto& t : world.tasks) {
    const auto* pickup = world.location(t.pickup);
    if (!pickup) throw ReferenceError("task '" + t.id + "' picks up at unknown location '" + t.pickup + "'");
    if (!world.location(t.dropoff)) {
      throw ReferenceError("task '" + t.id + "' drops off at unknown location '" + t.dropoff + "'");
    }
    if (t.pickup == t.dropoff) throw InvariantError("task '" + t.id + "' has pickup equal to dropoff");
    if (!pickup->object) {
      throw InvariantError("task '" + t.id + "' picks up at '" + t.pickup + "' which holds no object");
    }
    if (t.duration < 1) throw InvariantError("task '" + t.id + "' duration must be at least 1");
    for (const auto& m : t.required_modalities) {
      if (!modalities.contains(m)) {
        throw ReferenceError("task '" + t.id + "' requires modality '" + m + "' that no sensor provides");
      }
    }
    for (const auto& c : t.constraints) {
      if (c.kind == ConstraintKind::ToolCapability && !c.tool && !t.required_tool) {
        throw InvariantError("task '" + t.id + "' has a tool constraint but no tool to check");
      }
    }
  }

  for (const auto& [task, robot] : world.assignments) {
    if (!world.task(task)) throw ReferenceError("assignment of unknown task '" + task + "'");
    if (!world.robot(robot)) throw ReferenceError("task '" + task + "' assigned to unknown robot '" + robot + "'");
  }
  for (const auto& task : world.completed) {
    if (!world.task(task)) throw ReferenceError("completion of unknown task '" + task + "'");
  }
}

Region region_from_json(const json& j) {
  const std::string where = "reachability";
  if (!j.is_object() || !j.contains("kind")) throw ParseError(where + ": region needs 'kind'");
  auto kind = identifier(j["kind"], where + ".kind");
  if (kind == "box") {
    expect_keys(j, {"kind", "min", "max"}, {}, where);
    return Box{point_from(j["min"], where + ".min"), point_from(j["max"], where + ".max")};
  }
  if (kind == "disc") {
    expect_keys(j, {"kind", "center", "radius", "z"}, {}, where);
    auto c = number_array(j["center"], 2, where + ".center");
    auto z = number_array(j["z"], 2, where + ".z");
    return Disc{c[0], c[1], number(j["radius"], where + ".radius"), z[0], z[1]};
  }
  throw ParseError(where + ": unknown region kind '" + kind + "'");
}

json to_json(const Region& region) {
  if (const auto* box = std::get_if<Box>(&region)) {
    return {{"kind", "box"}, {"min", point_json(box->min)}, {"max", point_json(box->max)}};
  }
  const auto& d = std::get<Disc>(region);
  return {{"kind", "disc"},
          {"center", json::array({d.cx, d.cy})},
          {"radius", d.radius},
          {"z", json::array({d.z_lo, d.z_hi})}};
}

CapabilityConfiguration configuration_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("config: expected an object");
  CapabilityConfiguration config;
  for (const auto& [key, value] : j.items()) {
    if (key.empty()) throw InvariantError("config: capability key must not be empty");
    config.set(key, capability_value_from(key, value));
  }
  return config;
}

json to_json(const CapabilityConfiguration& config) {
  json j = json::object();
  for (const auto& [key, value] : config.entries()) j[key] = capability_value_json(value);
  return j;
}

json to_json(const Robot& r) {
  json j{{"id", r.id}, {"home_cell", r.home_cell}, {"config", to_json(r.config)}};
  j["status"] = std::string(to_string(r.status.state));
  if (r.status.task) j["current_task"] = *r.status.task;
  return j;
}

json to_json(const Location& l) {
  json j{{"id", l.id},
         {"kind", l.kind == LocationKind::Buffer ? "buffer" : "machine"},
         {"position", point_json(l.position)},
         {"cell", l.cell}};
  if (l.object) j["object"] = {{"id", l.object->id}, {"yaw", l.object->yaw_deg}};
  return j;
}

json to_json(const SensorSpec& s) {
  return {{"id", s.id}, {"modality", s.modality}, {"covers", s.covered_locations}};
}

json to_json(const TaskSpec& t) {
  json j{{"id", t.id},
         {"pickup", t.pickup},
         {"dropoff", t.dropoff},
         {"required_modalities", t.required_modalities},
         {"duration", t.duration}};
  if (t.required_tool) j["required_tool"] = *t.required_tool;
  json constraints = json::array();
  for (const auto& c : t.constraints) constraints.push_back(constraint_json(c));
  j["constraints"] = std::move(constraints);
  return j;
}

json to_json(const SystemKnowledge& world) {
  json j;
  j["units"] = {{"length", "mm"}, {"angle", "deg"}};
  j["robots"] = json::array();
  for (const auto& r : world.robots) j["robots"].push_back(to_json(r));
  j["tasks"] = json::array();
  for (const auto& t : world.tasks) j["tasks"].push_back(to_json(t));
  j["locations"] = json::array();
  for (const auto& l : world.locations) j["locations"].push_back(to_json(l));
  j["sensors"] = json::array();
  for (const auto& s : world.sensors) j["sensors"].push_back(to_json(s));
  j["assignments"] = world.assignments;
  return j;
}

std::string serialize_world(const SystemKnowledge& world) { return to_json(world).dump(2); }

SystemKnowledge load_world(std::string_view scenario_text) {
  json root;
  try {
    root = json::parse(scenario_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scenario is not valid JSON: ") + e.what());
  }
  expect_keys(root, {"robots", "tasks", "locations", "sensors", "assignments", "units"}, {}, "scenario");
  if (root["units"] != json{{"length", "mm"}, {"angle", "deg"}}) {
    throw ParseError(R"(scenario: units must be {"length":"mm","angle":"deg"})");
  }
  for (const char* key : {"robots", "tasks", "locations", "sensors"}) {
    if (!root[key].is_array()) throw ParseError(std::string("scenario: '") + key + "' must be an array");
  }
  if (!root["assignments"].is_object()) throw ParseError("scenario: 'assignments' must be an object");

  SystemKnowledge world;
  for (const auto& l : root["locations"]) {
    const std::string where = "location";
    expect_keys(l, {"id", "kind", "position", "cell"}, {"object"}, where);
    Location loc;
    loc.id = identifier(l["id"], where + ".id");
    auto kind = identifier(l["kind"], where + ".kind");
    if (kind == "buffer") {
      loc.kind = LocationKind::Buffer;
    } else if (kind == "machine") {
      loc.kind = LocationKind::Machine;
    } else {
      throw ParseError("location '" + loc.id + "': kind must be buffer or machine");
    }
    loc.position = point_from(l["position"], "location '" + loc.id + "'.position");
    loc.cell = identifier(l["cell"], where + ".cell");
    if (l.contains("object")) {
      const auto& o = l["object"];
      expect_keys(o, {"id"}, {"yaw"}, "location '" + loc.id + "'.object");
      loc.object = PlacedObject{identifier(o["id"], where + ".object.id"),
                                o.contains("yaw") ? number(o["yaw"], where + ".object.yaw") : 0.0};
    }
    world.locations.push_back(std::move(loc));
  }

  for (const auto& s : root["sensors"]) {
    expect_keys(s, {"id", "modality", "covers"}, {}, "sensor");
    SensorSpec spec;
    spec.id = identifier(s["id"], "sensor.id");
    spec.modality = identifier(s["modality"], "sensor.modality");
    for (auto& loc : identifier_list(s["covers"], "sensor '" + spec.id + "'.covers")) {
      spec.covered_locations.insert(std::move(loc));
    }
    world.sensors.push_back(std::move(spec));
  }

  for (const auto& r : root["robots"]) {
    expect_keys(r, {"id", "home_cell", "config"}, {"status", "current_task"}, "robot");
    Robot robot;
    robot.id = identifier(r["id"], "robot.id");
    robot.home_cell = identifier(r["home_cell"], "robot '" + robot.id + "'.home_cell");
    robot.config = configuration_from_json(r["config"]);
    robot.status = status_from(r, "robot '" + robot.id + "'");
    world.robots.push_back(std::move(robot));
  }

  for (const auto& t : root["tasks"]) {
    expect_keys(t, {"id", "pickup", "dropoff"}, {"required_modalities", "required_tool", "constraints", "duration"},
                "task");
    TaskSpec task;
    task.id = identifier(t["id"], "task.id");
    const std::string where = "task '" + task.id + "'";
    task.pickup = identifier(t["pickup"], where + ".pickup");
    task.dropoff = identifier(t["dropoff"], where + ".dropoff");
    if (t.contains("required_modalities")) {
      task.required_modalities = identifier_list(t["required_modalities"], where + ".required_modalities");
    }
    if (t.contains("required_tool")) task.required_tool = identifier(t["required_tool"], where + ".required_tool");
    if (t.contains("duration")) {
      if (!t["duration"].is_number_integer()) throw ParseError(where + ".duration: expected an integer");
      task.duration = t["duration"].get<int>();
    }
    if (t.contains("constraints")) {
      if (!t["constraints"].is_array()) throw ParseError(where + ".constraints: expected an array");
      for (const auto& c : t["constraints"]) task.constraints.push_back(constraint_from(c, where + ".constraints"));
    }
    world.tasks.push_back(std::move(task));
  }

  for (const auto& [task, robot] : root["assignments"].items()) {
    world.assignments.emplace(task, identifier(robot, "assignments['" + task + "']"));
  }

  check_world(world);
  return world;
}

SystemKnowledge load_world_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_world(buf.str());
}

std::string_view to_string(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::Reachability: return "reachability";
    case ConstraintKind::SensorCoverage: return "sensor_coverage";
    case ConstraintKind::ToolCapability: return "tool";
  }
  return "?";
}

std::string_view to_string(RobotState state) {
  switch (state) {
    case RobotState::Idle: return "idle";
    case RobotState::Executing: return "executing";
    case RobotState::Failed: return "failed";
  }
  return "?";
}

}  // namespace reassign

#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace reassign {

using RobotId = std::string;
using TaskId = std::string;
using LocationId = std::string;
using SensorId = std::string;

// Errors raised while loading or mutating the world model.
class WorldError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public WorldError {
 public:
  using WorldError::WorldError;
};

class ReferenceError : public WorldError {
 public:
  using WorldError::WorldError;
};

class InvariantError : public WorldError {
 public:
  using WorldError::WorldError;
};

/// Point in the shared world frame, millimetres.
struct Point {
  double x = 0;
  double y = 0;
  double z = 0;

  friend bool operator==(const Point&, const Point&) = default;
};

struct Box {
  Point min;
  Point max;

  friend bool operator==(const Box&, const Box&) = default;
};

/// Vertical cylinder: planar disc extruded over [z_lo, z_hi].
struct Disc {
  double cx = 0;
  double cy = 0;
  double radius = 0;
  double z_lo = 0;
  double z_hi = 0;

  friend bool operator==(const Disc&, const Disc&) = default;
};

using Region = std::variant<Box, Disc>;

/// Closed containment: points on the boundary are inside.
bool point_in_region(const Point& p, const Region& region);

/// Empty string when the region is well formed, otherwise the reason.
std::string region_defect(const Region& region);

struct Scalar {
  double value = 0;
  std::string unit;

  friend bool operator==(const Scalar&, const Scalar&) = default;
};

using IdentifierList = std::vector<std::string>;
using CapabilityValue = std::variant<Scalar, Region, IdentifierList, std::string>;

namespace capability {
inline constexpr std::string_view kReachability = "reachability";
inline constexpr std::string_view kSensing = "sensing";
inline constexpr std::string_view kTool = "tool";
inline constexpr std::string_view kSpeed = "speed";
}  // namespace capability

/// The key/value capability set of one robot. Keys are unique by construction.
class CapabilityConfiguration {
 public:
  CapabilityConfiguration() = default;

  void set(std::string key, CapabilityValue value);
  bool erase(std::string_view key);
  [[nodiscard]] bool contains(std::string_view key) const;
  [[nodiscard]] const CapabilityValue* find(std::string_view key) const;

  [[nodiscard]] const Region* reachability() const;
  [[nodiscard]] const IdentifierList* sensing() const;
  [[nodiscard]] const IdentifierList* tools() const;

  [[nodiscard]] const std::map<std::string, CapabilityValue, std::less<>>& entries() const {
    return entries_;
  }
  [[nodiscard]] bool empty() const { return entries_.empty(); }

  friend bool operator==(const CapabilityConfiguration&, const CapabilityConfiguration&) = default;

 private:
  std::map<std::string, CapabilityValue, std::less<>> entries_;
};

/// Empty when the configuration satisfies the stored-robot invariants
/// (reachability present and well formed, known keys correctly typed).
std::string configuration_defect(const CapabilityConfiguration& config);

enum class RobotState { Idle, Executing, Failed };

struct RobotStatus {
  RobotState state = RobotState::Idle;
  std::optional<TaskId> task;  // set iff Executing

  static RobotStatus idle() { return {}; }
  static RobotStatus executing(TaskId t) { return {RobotState::Executing, std::move(t)}; }
  static RobotStatus failed() { return {RobotState::Failed, std::nullopt}; }
  [[nodiscard]] bool is_failed() const { return state == RobotState::Failed; }

  friend bool operator==(const RobotStatus&, const RobotStatus&) = default;
};

struct Robot {
  RobotId id;
  CapabilityConfiguration config;
  std::string home_cell;
  RobotStatus status;

  friend bool operator==(const Robot&, const Robot&) = default;
};

enum class LocationKind { Buffer, Machine };

/// A part resting at a location; one per pickup location.
struct PlacedObject {
  std::string id;
  double yaw_deg = 0;

  friend bool operator==(const PlacedObject&, const PlacedObject&) = default;
};

struct Location {
  LocationId id;
  LocationKind kind = LocationKind::Buffer;
  Point position;
  std::string cell;
  std::optional<PlacedObject> object;

  friend bool operator==(const Location&, const Location&) = default;
};

struct SensorSpec {
  SensorId id;
  std::set<LocationId> covered_locations;
  std::string modality;

  friend bool operator==(const SensorSpec&, const SensorSpec&) = default;
};

enum class ConstraintKind { Reachability, SensorCoverage, ToolCapability };

enum class Endpoints { Both, PickupOnly, DropoffOnly };

/// One boolean requirement on a capability configuration. Only the fields
/// belonging to `kind` are meaningful.
struct Constraint {
  ConstraintKind kind = ConstraintKind::Reachability;
  Endpoints endpoints = Endpoints::Both;
  std::optional<std::vector<std::string>> modalities;  // default: task's required_modalities
  std::optional<std::string> tool;                     // default: task's required_tool

  static Constraint reachability(Endpoints e = Endpoints::Both) {
    return {ConstraintKind::Reachability, e, std::nullopt, std::nullopt};
  }
  static Constraint sensor_coverage(std::optional<std::vector<std::string>> m = std::nullopt) {
    return {ConstraintKind::SensorCoverage, Endpoints::Both, std::move(m), std::nullopt};
  }
  static Constraint tool_capability(std::optional<std::string> t = std::nullopt) {
    return {ConstraintKind::ToolCapability, Endpoints::Both, std::nullopt, std::move(t)};
  }

  friend bool operator==(const Constraint&, const Constraint&) = default;
};

using ConstraintSet = std::vector<Constraint>;

struct TaskSpec {
  TaskId id;
  LocationId pickup;
  LocationId dropoff;
  std::vector<std::string> required_modalities;
  std::optional<std::string> required_tool;
  ConstraintSet constraints;
  int duration = 1;  // logical time units

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

struct Pose {
  Point position;
  double yaw_deg = 0;

  friend bool operator==(const Pose&, const Pose&) = default;
};

struct Observation {
  std::string object_id;
  LocationId location;
  Pose pose;
  SensorId source_sensor;

  friend bool operator==(const Observation&, const Observation&) = default;
};

/// The controller's picture of the cell: robots, tasks, locations, sensors
/// and who is doing what. Robots, tasks, locations and sensors keep file order.
struct SystemKnowledge {
  std::vector<Robot> robots;
  std::vector<TaskSpec> tasks;
  std::vector<Location> locations;
  std::vector<SensorSpec> sensors;
  std::map<TaskId, RobotId> assignments;
  // Runtime only; not part of the scenario file.
  std::set<TaskId> completed;

  [[nodiscard]] const Robot* robot(std::string_view id) const;
  [[nodiscard]] Robot* robot(std::string_view id);
  [[nodiscard]] const TaskSpec* task(std::string_view id) const;
  [[nodiscard]] const Location* location(std::string_view id) const;
  [[nodiscard]] const SensorSpec* sensor(std::string_view id) const;

  /// Tasks assigned to `robot`, in task-list order.
  [[nodiscard]] std::vector<TaskId> tasks_of(std::string_view robot) const;
  /// Assigned to `robot` and not yet completed, in task-list order.
  [[nodiscard]] std::vector<TaskId> pending_tasks_of(std::string_view robot) const;

  friend bool operator==(const SystemKnowledge&, const SystemKnowledge&) = default;
};

/// Throws ReferenceError / InvariantError describing the first defect found.
void check_world(const SystemKnowledge& world);

SystemKnowledge load_world(std::string_view scenario_text);
SystemKnowledge load_world_file(const std::string& path);

nlohmann::json to_json(const SystemKnowledge& world);
nlohmann::json to_json(const CapabilityConfiguration& config);
nlohmann::json to_json(const Region& region);
nlohmann::json to_json(const TaskSpec& task);
nlohmann::json to_json(const Robot& robot);
nlohmann::json to_json(const Location& location);
nlohmann::json to_json(const SensorSpec& sensor);

/// Parses the `config` object of a robot (also the plan's `updated_config`).
/// Does not require `reachability`; callers decide whether it is mandatory.
CapabilityConfiguration configuration_from_json(const nlohmann::json& j);
Region region_from_json(const nlohmann::json& j);

std::string serialize_world(const SystemKnowledge& world);

std::string_view to_string(ConstraintKind kind);
std::string_view to_string(RobotState state);

}  // namespace reassign

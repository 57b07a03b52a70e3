#include "reassign/sim.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace reassign {

using nlohmann::json;

namespace {

// Charges time to the shared clock for every planner call: a fixed logical
// latency, or the measured wall time when no latency is configured.
class TimedPlanner final : public Planner {
 public:
  TimedPlanner(Planner& inner, ManualClock& clock, std::optional<Duration> latency)
      : inner_(inner), clock_(clock), latency_(latency) {}

  PlannerReply propose(const DisruptionContext& ctx, std::chrono::milliseconds deadline) override {
    const auto start = wall_.now();
    auto reply = inner_.propose(ctx, deadline);
    clock_.advance(latency_ ? *latency_ : wall_.now() - start);
    return reply;
  }

 private:
  Planner& inner_;
  ManualClock& clock_;
  std::optional<Duration> latency_;
  SteadyClock wall_;
};

bool fault_due(const AgentState& s, LogicalTime now) {
  if (!s.fault) return false;
  if (s.fault->kind == FaultTrigger::Kind::AtLogicalTime) return now >= s.fault->value;
  return s.completed >= s.fault->value;
}

AgentEvent make_event(EventKind kind, const RobotId& robot, std::optional<TaskId> task, LogicalTime t) {
  return {kind, robot, std::move(task), t};
}

json event_json(const AgentEvent& e) {
  json j{{"t", e.time}, {"kind", to_string(e.kind)}, {"robot", e.robot}};
  if (e.task) j["task"] = *e.task;
  return j;
}

json adaptation_json(const TimedOutcome& timed) {
  const auto& o = timed.outcome;
  json j{{"t", timed.time},
         {"kind", "Adaptation"},
         {"robot", o.failed_robot},
         {"status", to_string(o.status)},
         {"attempts_used", o.attempts_used},
         {"adaptation_time_s", o.adaptation_time.count()}};
  j["exploration_robot"] = o.final_plan ? json(o.final_plan->exploration_robot) : json(nullptr);
  j["claimed_tasks"] = o.final_plan ? json(o.final_plan->claimed_tasks) : json::array();
  json excluded = json::array();
  for (const auto& tv : o.excluded_tasks) {
    json codes = json::array();
    for (const auto& v : tv.verdict.violations) codes.push_back(to_string(v.code));
    excluded.push_back({{"task", tv.task}, {"codes", codes}});
  }
  j["excluded_tasks"] = std::move(excluded);
  j["unassigned_tasks"] = o.unassigned_tasks;
  json failures = json::array();
  for (const auto& ex : o.episode) {
    if (const auto* f = std::get_if<PlannerFailure>(&ex.parse_or_plan)) {
      failures.push_back(to_string(f->kind));
    } else {
      bool valid = std::all_of(ex.verdicts.begin(), ex.verdicts.end(), [](const auto& tv) { return tv.verdict.valid; });
      failures.push_back(valid ? "VALID" : "INVALID_PLAN");
    }
  }
  j["attempt_results"] = std::move(failures);
  return j;
}

}  // namespace

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::TaskStarted: return "TaskStarted";
    case EventKind::TaskCompleted: return "TaskCompleted";
    case EventKind::FailureNotification: return "FailureNotification";
    case EventKind::ConfigRefreshed: return "ConfigRefreshed";
    case EventKind::TaskAssigned: return "TaskAssigned";
  }
  return "?";
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::Completed: return "Completed";
    case Termination::Stalled: return "Stalled";
    case Termination::EventLimitExceeded: return "EventLimitExceeded";
  }
  return "?";
}

void FaultScript::validate() const {
  std::set<RobotId> seen;
  for (const auto& e : entries) {
    if (!seen.insert(e.robot).second) throw std::invalid_argument("more than one fault for robot '" + e.robot + "'");
    if (e.trigger.value < 0) throw std::invalid_argument("fault trigger for '" + e.robot + "' is negative");
  }
}

std::vector<Observation> observe(const RobotId& robot_id, const SystemKnowledge& world) {
  std::vector<Observation> out;
  const auto* robot = world.robot(robot_id);
  if (robot == nullptr) return out;
  const auto* sensing = robot->config.sensing();
  if (sensing == nullptr) return out;
  std::set<std::string> seen;
  for (const auto& sensor_id : *sensing) {
    const auto* sensor = world.sensor(sensor_id);
    if (sensor == nullptr) continue;
    for (const auto& loc_id : sensor->covered_locations) {
      const auto* loc = world.location(loc_id);
      if (loc == nullptr || !loc->object || !seen.insert(loc->object->id).second) continue;
      out.push_back({loc->object->id, loc->id, Pose{loc->position, loc->object->yaw_deg}, sensor->id});
    }
  }
  return out;
}

bool task_observable(const RobotId& robot, const TaskSpec& task, const SystemKnowledge& world) {
  if (task.required_modalities.empty()) return true;
  const auto* pickup = world.location(task.pickup);
  if (pickup == nullptr || !pickup->object) return false;
  auto seen = observe(robot, world);
  return std::any_of(seen.begin(), seen.end(), [&](const Observation& o) { return o.object_id == pickup->object->id; });
}

StepResult step(AgentState state, const SystemKnowledge& world, const std::vector<AgentEvent>& inbound,
                LogicalTime now) {
  StepResult res;
  auto emit = [&](EventKind kind, std::optional<TaskId> task) {
    res.emitted.push_back(make_event(kind, state.robot, std::move(task), std::max(now, state.last_emit)));
    state.last_emit = res.emitted.back().time;
  };

  for (const auto& ev : inbound) {
    if (state.mode == AgentMode::Failed) {
      res.warnings.push_back("robot " + state.robot + " is failed; ignoring " + std::string(to_string(ev.kind)));
      continue;
    }
    switch (ev.kind) {
      case EventKind::TaskAssigned:
        if (ev.task) state.queue.push_back(*ev.task);
        break;
      case EventKind::ConfigRefreshed:
        break;
      default:
        res.warnings.push_back("robot " + state.robot + " ignores inbound " + std::string(to_string(ev.kind)));
    }
  }
  if (state.mode == AgentMode::Failed) {
    res.state = std::move(state);
    return res;
  }

  if (state.mode == AgentMode::Executing && --state.remaining <= 0) {
    emit(EventKind::TaskCompleted, state.current);
    ++state.completed;
    state.current.reset();
    state.mode = AgentMode::Idle;
  }

  if (fault_due(state, now)) {
    state.fault.reset();
    state.mode = AgentMode::Failed;
    emit(EventKind::FailureNotification, state.current);
    res.state = std::move(state);
    return res;
  }

  if (state.mode == AgentMode::Idle && !state.queue.empty()) {
    const auto* task = world.task(state.queue.front());
    if (task == nullptr) {
      res.warnings.push_back("robot " + state.robot + " dropped unknown task " + state.queue.front());
      state.queue.pop_front();
    } else if (task_observable(state.robot, *task, world)) {
      state.queue.pop_front();
      state.current = task->id;
      state.remaining = task->duration;
      state.mode = AgentMode::Executing;
      emit(EventKind::TaskStarted, task->id);
    }
  }
  res.state = std::move(state);
  return res;
}

TrialTrace run_simulation(const SystemKnowledge& world, const FaultScript& faults, Planner& planner,
                          const SimulationConfig& cfg) {
  faults.validate();
  check_world(world);

  ManualClock clock;
  TimedPlanner timed(planner, clock, cfg.planner_latency);
  CentralController cca(world, timed, cfg.adaptation, clock);

  TrialTrace trace;
  std::vector<AgentState> agents;
  std::map<RobotId, std::vector<AgentEvent>> inbox;
  for (const auto& r : world.robots) {
    AgentState s;
    s.robot = r.id;
    if (r.status.is_failed()) s.mode = AgentMode::Failed;
    for (const auto& f : faults.entries) {
      if (f.robot == r.id) s.fault = f.trigger;
    }
    agents.push_back(std::move(s));
  }
  for (const auto& t : world.tasks) {
    if (world.completed.contains(t.id)) continue;
    auto it = world.assignments.find(t.id);
    if (it == world.assignments.end()) continue;
    auto ev = make_event(EventKind::TaskAssigned, it->second, t.id, 0);
    trace.events.push_back(ev);
    inbox[it->second].push_back(ev);
  }

  auto deliver = [&](const AgentEvent& ev) {
    trace.events.push_back(ev);
    inbox[ev.robot].push_back(ev);
  };

  std::set<TaskId> excluded;
  LogicalTime now = 0;
  bool limit_hit = false;
  for (;; ++now) {
    for (auto& agent : agents) {
      auto inbound = std::move(inbox[agent.robot]);
      inbox[agent.robot].clear();
      auto res = step(std::move(agent), cca.world(), inbound, now);
      agent = std::move(res.state);
      for (auto& w : res.warnings) trace.warnings.push_back("t=" + std::to_string(now) + ": " + std::move(w));

      for (const auto& ev : res.emitted) {
        trace.events.push_back(ev);
        auto& w = cca.mutable_world();
        switch (ev.kind) {
          case EventKind::TaskStarted:
            w.robot(ev.robot)->status = RobotStatus::executing(*ev.task);
            break;
          case EventKind::TaskCompleted:
            w.completed.insert(*ev.task);
            w.robot(ev.robot)->status = RobotStatus::idle();
            break;
          case EventKind::FailureNotification: {
            cca.notify_failure(ev.robot);
            for (auto& outcome : cca.process_pending()) {
              const std::size_t index = trace.events.size();
              if (outcome.status == AdaptationStatus::Succeeded) {
                const auto& plan = *outcome.final_plan;
                deliver(make_event(EventKind::ConfigRefreshed, plan.exploration_robot, std::nullopt, now));
                for (const auto& id : plan.claimed_tasks) {
                  deliver(make_event(EventKind::TaskAssigned, plan.exploration_robot, id, now));
                }
                for (const auto& tv : outcome.excluded_tasks) excluded.insert(tv.task);
              }
              trace.adaptations.push_back({now, index, std::move(outcome)});
            }
            break;
          }
          default:
            break;
        }
      }
    }

    if (trace.events.size() > cfg.event_limit) {
      limit_hit = true;
      break;
    }
    bool busy = std::any_of(agents.begin(), agents.end(), [&](const AgentState& a) {
      if (a.mode == AgentMode::Failed) return false;
      if (a.mode == AgentMode::Executing || !inbox[a.robot].empty()) return true;
      if (a.queue.empty()) return false;
      if (a.fault && a.fault->kind == FaultTrigger::Kind::AtLogicalTime) return true;
      const auto* task = cca.world().task(a.queue.front());
      return task != nullptr && task_observable(a.robot, *task, cca.world());
    });
    if (!busy) break;
  }

  trace.end_time = now;
  trace.final_world = cca.world();
  const auto& fw = trace.final_world;
  for (const auto& t : fw.tasks) {
    if (fw.completed.contains(t.id)) {
      trace.completed.push_back(t.id);
    } else if (excluded.contains(t.id)) {
      trace.excluded.push_back(t.id);
    } else if (fw.assignments.contains(t.id)) {
      trace.blocked.push_back(t.id);
    } else {
      trace.unassigned.push_back(t.id);
    }
  }
  if (limit_hit) {
    trace.termination = Termination::EventLimitExceeded;
  } else {
    trace.termination = trace.blocked.empty() ? Termination::Completed : Termination::Stalled;
  }
  return trace;
}

std::string export_trace_ndjson(const TrialTrace& trace) {
  std::string out;
  std::size_t next_adaptation = 0;
  auto flush_adaptations = [&](std::size_t upto) {
    while (next_adaptation < trace.adaptations.size() && trace.adaptations[next_adaptation].event_index <= upto) {
      out += adaptation_json(trace.adaptations[next_adaptation++]).dump();
      out += '\n';
    }
  };
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    flush_adaptations(i);
    out += event_json(trace.events[i]).dump();
    out += '\n';
  }
  flush_adaptations(trace.events.size());
  json end{{"t", trace.end_time},
           {"kind", "TrialEnd"},
           {"termination", to_string(trace.termination)},
           {"completed", trace.completed},
           {"excluded", trace.excluded},
           {"unassigned", trace.unassigned},
           {"blocked", trace.blocked}};
  out += end.dump();
  out += '\n';
  return out;
}

}  // namespace reassign

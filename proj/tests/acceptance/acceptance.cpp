// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "brute_force.hpp"
#include "fixtures.hpp"
#include "random_world.hpp"
#include "reassign/chat_client.hpp"
#include "reassign/harness.hpp"
#include "scripted_endpoint.hpp"

using namespace reassign;
namespace bf = reassign::testing::brute_force;
using Clock_ = std::chrono::steady_clock;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& what) {
    if (!cond && ok) detail = what;
    ok = ok && cond;
  }
};

double seconds_since(Clock_::time_point start) {
  return std::chrono::duration<double>(Clock_::now() - start).count();
}

std::size_t feedback_entries(const PromptText& prompt) {
  auto text = prompt.render();
  std::size_t n = 0;
  for (auto pos = text.find("### Attempt "); pos != std::string::npos; pos = text.find("### Attempt ", pos + 1)) ++n;
  return n;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

// Two-cell layout: R2 fails after its second completed task.
Check golden_scenario() {
  Check c;
  const auto start = Clock_::now();
  auto world = load_world_file(testing::scenario_path("dual_cell.json"));
  OraclePlanner oracle;
  auto trace = run_simulation(world, FaultScript{{{"R2", FaultTrigger::after_tasks(2)}}}, oracle, {});
  const double elapsed = seconds_since(start);

  c.expect(trace.adaptations.size() == 1, "expected exactly one adaptation");
  if (!c.ok) return c;
  const auto& out = trace.adaptations[0].outcome;
  c.expect(out.failed_robot == "R2", "failed robot is not R2");
  c.expect(out.status == AdaptationStatus::Succeeded, "status is " + std::string(to_string(out.status)));
  c.expect(out.attempts_used == 1, "attempts_used = " + std::to_string(out.attempts_used));
  c.expect(out.final_plan && out.final_plan->exploration_robot == "R1", "exploration robot is not R1");
  if (out.final_plan) {
    std::set<TaskId> claimed(out.final_plan->claimed_tasks.begin(), out.final_plan->claimed_tasks.end());
    c.expect(claimed == std::set<TaskId>{"M2-task", "B3-task"}, "claimed set differs");
  }
  std::set<TaskId> excluded;
  for (const auto& e : out.excluded_tasks) {
    excluded.insert(e.task);
    c.expect(!e.verdict.violations.empty(), e.task + " excluded without violations");
    for (const auto& v : e.verdict.violations) {
      c.expect(v.code == ViolationCode::ReachViolation, e.task + " has a non-reachability violation");
    }
  }
  c.expect(excluded == std::set<TaskId>{"M3-task", "B4-task"}, "excluded set differs");
  const auto& fw = trace.final_world;
  c.expect(fw.assignments.count("M2-task") && fw.assignments.at("M2-task") == "R1", "M2-task not on R1");
  c.expect(fw.assignments.count("B3-task") && fw.assignments.at("B3-task") == "R1", "B3-task not on R1");
  c.expect(fw.completed.count("M2-task") && fw.completed.count("B3-task"), "R1 did not finish the reassigned tasks");
  c.expect(elapsed < 1.0, "runtime " + fmt(elapsed) + " s");
  c.detail = c.ok ? "R1 <- {M2-task, B3-task}; excluded {M3-task, B4-task}; " + fmt(elapsed) + " s" : c.detail;
  return c;
}

// partition_feasible against per-constraint brute force over random worlds.
Check validator_equivalence() {
  Check c;
  const auto start = Clock_::now();
  std::mt19937_64 rng(0xa11ce);
  int worlds = 0;
  long comparisons = 0;
  for (; worlds < 1000; ++worlds) {
    auto w = testing::random_world(rng);
    std::vector<CapabilityConfiguration> configs;
    for (const auto& r : w.robots) configs.push_back(r.config);
    for (int k = 0; k < 3; ++k) configs.push_back(testing::random_config(rng, w));
    for (const auto& cfg : configs) {
      for (bool dropoff_only : {false, true}) {
        auto p = partition_feasible(w.tasks, cfg, w, EvalOptions{dropoff_only});
        std::vector<TaskId> feasible;
        std::vector<TaskId> infeasible;
        for (const auto& t : w.tasks) {
          bool valid = bf::task_valid(t, cfg, w, dropoff_only);
          (valid ? feasible : infeasible).push_back(t.id);
          ++comparisons;
        }
        std::vector<TaskId> got_infeasible;
        for (const auto& i : p.infeasible) {
          got_infeasible.push_back(i.task);
          c.expect(!i.verdict.violations.empty(), "infeasible task without violations");
        }
        c.expect(p.feasible == feasible && got_infeasible == infeasible,
                 "mismatch in world " + std::to_string(worlds));
      }
    }
  }
  const double elapsed = seconds_since(start);
  c.expect(elapsed < 30.0, "runtime " + fmt(elapsed) + " s");
  if (c.ok) {
    c.detail = std::to_string(worlds) + " worlds, " + std::to_string(comparisons) + " task verdicts, 0 mismatches, " +
               fmt(elapsed) + " s";
  }
  return c;
}

// Oracle plans are valid and claim the largest feasible subset.
Check oracle_soundness() {
  Check c;
  std::mt19937_64 rng(0x0bac1e);
  int contexts = 0;
  int plans = 0;
  for (int i = 0; i < 2000; ++i) {
    auto w = testing::random_world(rng);
    const auto failed = w.robots[testing::uniform_int(rng, 0, int(w.robots.size()) - 1)].id;
    w.robot(failed)->status = RobotStatus::failed();
    auto ctx = gather_context(w, failed, EvalOptions{testing::coin(rng, 0.2)});
    if (ctx.orphaned_tasks.empty()) continue;
    ++contexts;
    auto expect = bf::best_plan(ctx);
    auto r = oracle_plan(ctx);
    if (!expect.robot) {
      c.expect(std::holds_alternative<PlannerFailure>(r), "oracle planned where nothing is feasible");
      continue;
    }
    if (!std::holds_alternative<ProposedPlan>(r)) {
      c.expect(false, "oracle found no plan where one exists");
      continue;
    }
    ++plans;
    const auto& plan = std::get<ProposedPlan>(r);
    c.expect(plan.exploration_robot == *expect.robot, "oracle chose a different robot");
    for (const auto& id : plan.claimed_tasks) {
      c.expect(validate_assignment(*w.task(id), plan.updated_config, w, ctx.eval_options).valid,
               "oracle claimed an invalid task");
    }
    std::set<TaskId> claimed(plan.claimed_tasks.begin(), plan.claimed_tasks.end());
    c.expect(claimed == expect.tasks, "claimed set is not the maximum feasible set");
  }
  c.expect(plans >= 400, "too few plans exercised");
  if (c.ok) c.detail = std::to_string(contexts) + " disruptions, " + std::to_string(plans) + " plans, 0 mismatches";
  return c;
}

// Planner fails k times (varied failure kinds) before a valid plan.
Check retry_contract() {
  Check c;
  auto world = testing::dual_cell_after_r2_failure();
  auto ctx = gather_context(world, "R2");
  auto good = std::get<ProposedPlan>(oracle_plan(ctx));
  auto over = good;
  over.claimed_tasks.push_back("M3-task");
  const std::vector<std::string> bad{serialize_plan(over).dump(), "R1 can do it.", "{\"exploration_robot\": 7}",
                                     serialize_plan(over).dump(), "{\"claimed_tasks\": []}"};
  std::ostringstream summary;
  for (int k = 0; k <= 5; ++k) {
    std::vector<std::string> script(bad.begin(), bad.begin() + k);
    script.push_back(serialize_plan(good).dump());
    ScriptedPlanner planner(script);
    ManualClock clock;
    AdaptationConfig cfg;
    cfg.max_retries = 4;
    auto r = handle_failure("R2", world, planner, cfg, clock);
    const auto& out = r.outcome;
    if (k <= 4) {
      c.expect(out.status == AdaptationStatus::Succeeded, "k=" + std::to_string(k) + " did not succeed");
      c.expect(out.attempts_used == k + 1, "k=" + std::to_string(k) + " attempts " + std::to_string(out.attempts_used));
    } else {
      c.expect(out.status == AdaptationStatus::ExhaustedRetries, "k=5 did not exhaust");
      c.expect(out.attempts_used == 5, "k=5 attempts " + std::to_string(out.attempts_used));
    }
    c.expect(int(out.episode.size()) == out.attempts_used, "episode length differs from attempts");
    for (std::size_t n = 0; n < out.episode.size(); ++n) {
      c.expect(feedback_entries(out.episode[n].prompt) == n,
               "k=" + std::to_string(k) + " prompt " + std::to_string(n + 1) + " has wrong feedback count");
    }
    summary << (k ? ", " : "") << "k=" << k << ":" << out.attempts_used << "/" << to_string(out.status);
  }
  if (c.ok) c.detail = summary.str();
  return c;
}

// Mean retries of a successful episode when attempt 1 hits with p1 and every
// later attempt with q, capped at `retries` retries.
double expected_retries_given_success(double p1, double q, int retries) {
  double mass = p1;
  double weighted = 0;
  double miss = 1 - p1;
  for (int k = 1; k <= retries; ++k) {
    const double pk = miss * q;
    mass += pk;
    weighted += k * pk;
    miss *= 1 - q;
  }
  return weighted / mass;
}

Check table_shape() {
  Check c;
  const double p1 = 0.6;
  const double q = 2.0 / 3.0;
  const int cap = 4;

  ExperimentSpec spec;
  spec.world = testing::dual_cell();
  spec.faults = FaultScript{{{"R2", FaultTrigger::after_tasks(2)}}};
  spec.planner = mock_planner_factory(StochasticMock{p1, q, 0});
  spec.sim.adaptation.max_retries = cap;

  spec.trials = 20;
  spec.seed = 20;
  auto twenty = run_experiment(spec);
  c.expect(twenty.summary.success_rate == 1.0, "20-trial success rate " + fmt(twenty.summary.success_rate));

  spec.trials = 1000;
  spec.seed = 1000;
  auto big = run_experiment(spec);
  const auto& s = big.summary;
  c.expect(s.first_attempt_rate >= 0.55 && s.first_attempt_rate <= 0.65,
           "first_attempt_rate " + fmt(s.first_attempt_rate));
  const double expected = expected_retries_given_success(p1, q, cap);
  c.expect(std::abs(s.mean_retries - expected) <= 0.3,
           "mean retries " + fmt(s.mean_retries) + " vs " + fmt(expected));

  // How often a 20-trial batch is perfect must match the calibration.
  const double p_success = 1 - (1 - p1) * std::pow(1 - q, cap);
  const double p_batch = std::pow(p_success, 20);
  int perfect = 0;
  const int batches = 50;
  for (int b = 0; b < batches; ++b) {
    bool all = true;
    for (int k = 0; k < 20; ++k) {
      for (const auto& a : big.traces[std::size_t(b * 20 + k)].adaptations) {
        all = all && a.outcome.status == AdaptationStatus::Succeeded;
      }
    }
    perfect += all ? 1 : 0;
  }
  const double mean = batches * p_batch;
  const double sd = std::sqrt(batches * p_batch * (1 - p_batch));
  c.expect(std::abs(perfect - mean) <= 3 * sd,
           "perfect batches " + std::to_string(perfect) + " vs expected " + fmt(mean));

  if (c.ok) {
    std::ostringstream d;
    d << "20 trials: 100%; 1000 trials: first-attempt " << fmt(s.first_attempt_rate) << ", mean retries "
      << fmt(s.mean_retries) << " (expected " << fmt(expected) << "), perfect 20-batches " << perfect << "/"
      << batches << " (expected " << fmt(mean) << ")";
    c.detail = d.str();
  }
  return c;
}

Check safety_suite() {
  Check c;
  std::mt19937_64 rng(0x5afe);
  int trials = 0;
  int adaptations = 0;
  for (; trials < 300; ++trials) {
    testing::RandomWorldOptions opts;
    opts.coherent = true;
    auto w = testing::random_world(rng, opts);
    auto faults = testing::random_faults(rng, w);
    std::unique_ptr<Planner> planner;
    switch (trials % 3) {
      case 0: planner = std::make_unique<testing::RandomPlanner>(rng()); break;
      case 1: planner = std::make_unique<StochasticMockPlanner>(0.6, 2.0 / 3.0, rng()); break;
      default: planner = std::make_unique<OraclePlanner>();
    }
    SimulationConfig cfg;
    cfg.adaptation.strict_dropoff_only = testing::coin(rng, 0.1);
    auto trace = run_simulation(w, faults, *planner, cfg);
    adaptations += int(trace.adaptations.size());
    const auto& fw = trace.final_world;
    for (const auto& [task, robot] : fw.assignments) {
      c.expect(validate_assignment(*fw.task(task), fw.robot(robot)->config, fw,
                                   EvalOptions{cfg.adaptation.strict_dropoff_only})
                   .valid,
               "invalid final assignment in trial " + std::to_string(trials));
    }
    std::multiset<TaskId> seen;
    seen.insert(trace.completed.begin(), trace.completed.end());
    seen.insert(trace.excluded.begin(), trace.excluded.end());
    seen.insert(trace.unassigned.begin(), trace.unassigned.end());
    std::multiset<TaskId> all;
    for (const auto& t : w.tasks) all.insert(t.id);
    c.expect(seen == all && trace.blocked.empty(), "task conservation broken in trial " + std::to_string(trials));
    c.expect(trace.termination == Termination::Completed, "trial " + std::to_string(trials) + " did not complete");
  }
  if (c.ok) {
    c.detail = std::to_string(trials) + " trials, " + std::to_string(adaptations) + " adaptations, 0 violations";
  }
  return c;
}

// The LLM planner driven end to end through an in-process endpoint.
Check no_network() {
  Check c;
  auto world = testing::dual_cell_after_r2_failure();
  auto ctx = gather_context(world, "R2");
  auto good = serialize_plan(std::get<ProposedPlan>(oracle_plan(ctx))).dump(2);

  auto endpoint = std::make_shared<testing::ScriptedEndpoint>();
  endpoint->reply(500, "{\"error\": {\"message\": \"overloaded\"}}");
  endpoint->drop(true);
  endpoint->reply_content("Robot R1 should take over.");
  endpoint->reply_content("Here is the plan:\n```json\n" + good + "\n```");

  ChatEndpointConfig cfg;
  cfg.base_url = "http://scripted.invalid/v1";
  cfg.model = "scripted";
  LlmPlanner planner(cfg, endpoint);
  ManualClock clock;
  auto r = handle_failure("R2", world, planner, {}, clock);
  const auto& out = r.outcome;
  c.expect(out.status == AdaptationStatus::Succeeded, "LLM episode did not succeed");
  c.expect(out.attempts_used == 4, "attempts " + std::to_string(out.attempts_used));
  c.expect(endpoint->requests().size() == 4, "endpoint saw " + std::to_string(endpoint->requests().size()));
  if (out.episode.size() == 4) {
    auto kind = [&](int i) { return std::get<PlannerFailure>(out.episode[std::size_t(i)].parse_or_plan).kind; };
    c.expect(kind(0) == PlanFailureKind::HttpError, "attempt 1 not HTTP_ERROR");
    c.expect(kind(1) == PlanFailureKind::Timeout, "attempt 2 not TIMEOUT");
    c.expect(kind(2) == PlanFailureKind::NoJsonFound, "attempt 3 not NO_JSON_FOUND");
  }
  for (std::size_t i = 0; i < endpoint->requests().size(); ++i) {
    auto body = nlohmann::json::parse(endpoint->requests()[i].body);
    auto user = body["messages"][1]["content"].get<std::string>();
    std::size_t n = 0;
    for (auto pos = user.find("### Attempt "); pos != std::string::npos; pos = user.find("### Attempt ", pos + 1)) ++n;
    c.expect(n == i, "request " + std::to_string(i + 1) + " carries wrong feedback");
  }
  if (c.ok) c.detail = "LLM planner: 4 scripted exchanges, success on attempt 4, no sockets opened";
  return c;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Check()>>> criteria{
      {"golden scenario", golden_scenario},
      {"validator matches brute force", validator_equivalence},
      {"oracle soundness and completeness", oracle_soundness},
      {"retry loop contract", retry_contract},
      {"stochastic mock statistics", table_shape},
      {"safety invariants", safety_suite},
      {"no network", no_network},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    try {
      c = criteria[i].second();
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail = std::string("exception: ") + e.what();
    }
    std::cout << (c.ok ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": " << c.detail
              << std::endl;
    failed += c.ok ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}

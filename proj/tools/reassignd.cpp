// reassignd: runs fault-injection trials against a scenario and reports
// reassignment metrics.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "reassign/chat_client.hpp"
#include "reassign/harness.hpp"

namespace {

constexpr int kExitScenarioError = 2;
constexpr int kExitRequiredSuccess = 3;

reassign::FaultEntry parse_fault(const std::string& text) {
  // ROBOT:after:N or ROBOT:at:T
  auto first = text.find(':');
  auto second = first == std::string::npos ? std::string::npos : text.find(':', first + 1);
  if (second == std::string::npos) throw CLI::ValidationError("--fault", "expected ROBOT:after:N or ROBOT:at:T");
  reassign::FaultEntry entry;
  entry.robot = text.substr(0, first);
  const auto mode = text.substr(first + 1, second - first - 1);
  std::int64_t value = 0;
  try {
    value = std::stoll(text.substr(second + 1));
  } catch (const std::exception&) {
    throw CLI::ValidationError("--fault", "trigger value must be an integer");
  }
  if (mode == "after") {
    entry.trigger = reassign::FaultTrigger::after_tasks(value);
  } else if (mode == "at") {
    entry.trigger = reassign::FaultTrigger::at_time(value);
  } else {
    throw CLI::ValidationError("--fault", "trigger must be 'after' or 'at'");
  }
  return entry;
}

std::vector<std::string> read_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open script '" + path + "'");
  auto j = nlohmann::json::parse(in);
  if (!j.is_array()) throw std::runtime_error("script must be a JSON array of response strings");
  std::vector<std::string> out;
  for (const auto& e : j) out.push_back(e.is_string() ? e.get<std::string>() : e.dump());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fault-tolerant task reassignment controller and simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run fault-injection trials and report metrics");
  std::string scenario_path;
  std::string planner_kind = "oracle";
  int trials = 1;
  int max_retries = 4;
  std::uint64_t seed = 0;
  std::string out_dir;
  bool require_success = false;
  std::string endpoint = "https://api.openai.com/v1";
  std::string model = "gpt-4o";
  std::vector<std::string> fault_specs;
  bool vary_faults = false;
  double first_prob = 0.6;
  double retry_prob = 2.0 / 3.0;
  std::string script_path;
  bool dropoff_only = false;
  std::size_t event_limit = 10000;
  bool json_report = false;

  run->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  run->add_option("--planner", planner_kind, "Planner: oracle, mock or llm")
      ->check(CLI::IsMember({"oracle", "mock", "llm"}));
  run->add_option("--trials", trials, "Number of trials")->check(CLI::PositiveNumber);
  run->add_option("--max-retries", max_retries, "Retries after the first planner attempt")
      ->check(CLI::NonNegativeNumber);
  run->add_option("--seed", seed, "Seed for stochastic planners and fault variation");
  run->add_option("--out", out_dir, "Output directory for summary and traces");
  run->add_flag("--require-success", require_success, "Exit 3 if any adaptation exhausts its retries");
  run->add_option("--endpoint", endpoint, "Chat-completion base URL (llm planner)");
  run->add_option("--model", model, "Model name (llm planner)");
  run->add_option("--fault", fault_specs, "Fault trigger ROBOT:after:N or ROBOT:at:T (repeatable)");
  run->add_flag("--vary-fault", vary_faults, "Redraw after-N fault triggers per trial from the seed");
  run->add_option("--first-attempt-prob", first_prob, "Mock planner first-attempt success probability")
      ->check(CLI::Range(0.0, 1.0));
  run->add_option("--retry-prob", retry_prob, "Mock planner per-retry success probability")
      ->check(CLI::Range(0.0, 1.0));
  run->add_option("--script", script_path, "Mock planner: JSON array of canned responses (replaces stochastic mode)");
  run->add_flag("--dropoff-only", dropoff_only, "Check reachability at dropoff locations only");
  run->add_option("--event-limit", event_limit, "Maximum events per trial");
  run->add_flag("--json", json_report, "Print the summary as JSON instead of a table");

  CLI11_PARSE(app, argc, argv);

  reassign::ExperimentSpec spec;
  try {
    spec.world = reassign::load_world_file(scenario_path);
  } catch (const reassign::WorldError& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return kExitScenarioError;
  }

  try {
    for (const auto& f : fault_specs) spec.faults.entries.push_back(parse_fault(f));
    spec.faults.validate();
    for (const auto& f : spec.faults.entries) {
      if (!spec.world.robot(f.robot)) {
        std::cerr << "scenario error: fault names unknown robot '" << f.robot << "'\n";
        return kExitScenarioError;
      }
    }
    spec.trials = trials;
    spec.seed = seed;
    spec.vary_faults = vary_faults;
    spec.sim.adaptation.max_retries = max_retries;
    spec.sim.adaptation.strict_dropoff_only = dropoff_only;
    spec.sim.event_limit = event_limit;

    if (planner_kind == "oracle") {
      spec.planner = reassign::oracle_planner_factory();
    } else if (planner_kind == "mock") {
      reassign::MockPlannerSpec mock = reassign::StochasticMock{first_prob, retry_prob, seed};
      if (!script_path.empty()) mock = reassign::ScriptedMock{read_script(script_path)};
      spec.planner = reassign::mock_planner_factory(mock);
    } else {
      auto cfg = reassign::ChatEndpointConfig::from_env(endpoint, model);
      cfg.timeout = spec.sim.adaptation.planner_deadline;
      auto transport = std::make_shared<reassign::HttplibTransport>();
      spec.planner = [cfg, transport](std::uint64_t) -> std::unique_ptr<reassign::Planner> {
        return std::make_unique<reassign::LlmPlanner>(cfg, transport);
      };
      spec.sim.planner_latency.reset();
    }

    auto result = reassign::run_experiment(spec);
    if (!out_dir.empty()) reassign::write_experiment(result, out_dir);
    std::cout << reassign::emit_report(result.summary,
                                       json_report ? reassign::ReportFormat::Json : reassign::ReportFormat::Table);
    if (require_success && result.any_exhausted()) return kExitRequiredSuccess;
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#include "reassign/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace reassign {

using nlohmann::json;

namespace {

AdaptationStatus status_from_string(const std::string& s) {
  for (auto st : {AdaptationStatus::Succeeded, AdaptationStatus::ExhaustedRetries, AdaptationStatus::NoCandidates,
                  AdaptationStatus::NoOrphanedTasks}) {
    if (to_string(st) == s) return st;
  }
  throw std::invalid_argument("unknown adaptation status '" + s + "'");
}

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", fraction * 100.0);
  std::string s = buf;
  if (s.size() > 2 && s.compare(s.size() - 2, 2, ".0") == 0) s.resize(s.size() - 2);
  return s + "%";
}

std::string seconds(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f s", *v);
  return buf;
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::optional<double> optional_number(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

bool episode_counts(AdaptationStatus s) { return s != AdaptationStatus::NoOrphanedTasks; }

}  // namespace

TrialMetrics trial_metrics(const TrialTrace& trace) {
  TrialMetrics m;
  for (const auto& a : trace.adaptations) {
    if (!episode_counts(a.outcome.status)) continue;
    m.episodes.push_back({a.outcome.status, a.outcome.attempts_used, a.outcome.adaptation_time.count()});
  }
  return m;
}

TrialMetrics trial_metrics_from_ndjson(std::string_view ndjson) {
  TrialMetrics m;
  std::istringstream in{std::string(ndjson)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = json::parse(line);
    if (j.value("kind", "") != "Adaptation") continue;
    auto status = status_from_string(j.at("status").get<std::string>());
    if (!episode_counts(status)) continue;
    m.episodes.push_back({status, j.at("attempts_used").get<int>(), j.at("adaptation_time_s").get<double>()});
  }
  return m;
}

MetricsSummary summarize(const std::vector<TrialMetrics>& trials) {
  MetricsSummary s;
  s.trials = static_cast<int>(trials.size());
  double time_sum = 0;
  long retries_sum = 0;
  for (const auto& t : trials) {
    if (t.episodes.empty()) continue;
    bool ok = std::all_of(t.episodes.begin(), t.episodes.end(),
                          [](const EpisodeMetrics& e) { return e.status == AdaptationStatus::Succeeded; });
    if (!ok) continue;
    ++s.successes;
    int retries = 0;
    double time = 0;
    for (const auto& e : t.episodes) {
      retries += e.attempts_used - 1;
      time += e.adaptation_time;
    }
    if (retries == 0) ++s.first_attempt_successes;
    retries_sum += retries;
    s.max_retries_observed = std::max(s.max_retries_observed, retries);
    time_sum += time;
    s.min_adaptation_time = s.min_adaptation_time ? std::min(*s.min_adaptation_time, time) : time;
    s.max_adaptation_time = s.max_adaptation_time ? std::max(*s.max_adaptation_time, time) : time;
  }
  if (s.trials > 0) {
    s.success_rate = static_cast<double>(s.successes) / s.trials;
    s.first_attempt_rate = static_cast<double>(s.first_attempt_successes) / s.trials;
  }
  if (s.successes > 0) {
    s.mean_adaptation_time = time_sum / s.successes;
    s.mean_retries = static_cast<double>(retries_sum) / s.successes;
  }
  return s;
}

json to_json(const MetricsSummary& s) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"trials", s.trials},
          {"successes", s.successes},
          {"success_rate", s.success_rate},
          {"first_attempt_successes", s.first_attempt_successes},
          {"first_attempt_rate", s.first_attempt_rate},
          {"mean_adaptation_time_s", opt(s.mean_adaptation_time)},
          {"min_adaptation_time_s", opt(s.min_adaptation_time)},
          {"max_adaptation_time_s", opt(s.max_adaptation_time)},
          {"mean_retries", s.mean_retries},
          {"max_retries_observed", s.max_retries_observed}};
}

MetricsSummary summary_from_json(const json& j) {
  MetricsSummary s;
  s.trials = j.at("trials").get<int>();
  s.successes = j.at("successes").get<int>();
  s.success_rate = j.at("success_rate").get<double>();
  s.first_attempt_successes = j.at("first_attempt_successes").get<int>();
  s.first_attempt_rate = j.at("first_attempt_rate").get<double>();
  s.mean_adaptation_time = optional_number(j, "mean_adaptation_time_s");
  s.min_adaptation_time = optional_number(j, "min_adaptation_time_s");
  s.max_adaptation_time = optional_number(j, "max_adaptation_time_s");
  s.mean_retries = j.at("mean_retries").get<double>();
  s.max_retries_observed = j.at("max_retries_observed").get<int>();
  return s;
}

std::string emit_report(const MetricsSummary& s, ReportFormat format) {
  if (format == ReportFormat::Json) return to_json(s).dump(2) + "\n";
  const bool any = s.successes > 0;
  const std::vector<std::pair<std::string, std::string>> rows{
      {"Trials", std::to_string(s.trials)},
      {"Successful Reassignments", std::to_string(s.successes)},
      {"Success Rate", percent(s.success_rate)},
      {"Successful Reassignments (1st attempt)", std::to_string(s.first_attempt_successes)},
      {"Success Rate from the (1st attempt)", percent(s.first_attempt_rate)},
      {"Avg. Adaptation Time (success)", seconds(s.mean_adaptation_time)},
      {"Max Adaptation Time", seconds(s.max_adaptation_time)},
      {"Min Adaptation Time", seconds(s.min_adaptation_time)},
      {"Avg. LLM Retries (success)", any ? fixed2(s.mean_retries) : "n/a"},
      {"Max LLM Retries", any ? std::to_string(s.max_retries_observed) : "n/a"},
  };
  std::size_t width = std::string("Metric").size();
  for (const auto& [label, _] : rows) width = std::max(width, label.size());
  std::ostringstream os;
  auto row = [&](const std::string& a, const std::string& b) {
    os << a << std::string(width - a.size(), ' ') << " | " << b << "\n";
  };
  row("Metric", "Value");
  os << std::string(width, '-') << "-+-" << std::string(10, '-') << "\n";
  for (const auto& [label, value] : rows) row(label, value);
  return os.str();
}

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

ScriptedPlanner::ScriptedPlanner(std::vector<std::string> responses) : responses_(std::move(responses)) {
  if (responses_.empty()) throw std::invalid_argument("scripted planner needs at least one response");
}

PlannerReply ScriptedPlanner::propose(const DisruptionContext& ctx, std::chrono::milliseconds) {
  const auto index = std::min<std::size_t>(static_cast<std::size_t>(calls_), responses_.size() - 1);
  ++calls_;
  const auto& text = responses_[index];
  return {text, parse_plan(text, ctx)};
}

StochasticMockPlanner::StochasticMockPlanner(double first_attempt_success_prob, double per_retry_success_prob,
                                             std::uint64_t seed)
    : first_(first_attempt_success_prob), retry_(per_retry_success_prob), rng_(seed) {
  validate(StochasticMock{first_, retry_, seed});
}

PlannerReply StochasticMockPlanner::propose(const DisruptionContext& ctx, std::chrono::milliseconds) {
  const double p = ctx.feedback_history.empty() ? first_ : retry_;
  const bool hit = unit_uniform(rng_) < p;
  auto oracle = oracle_plan(ctx);
  const auto* plan = std::get_if<ProposedPlan>(&oracle);
  if (plan == nullptr) return {std::get<PlannerFailure>(oracle).reason, oracle};

  ProposedPlan response = *plan;
  if (!hit) {
    response.claimed_tasks.clear();
    bool overclaim_fails = false;
    for (const auto& t : ctx.orphaned_tasks) {
      response.claimed_tasks.push_back(t.id);
      if (!validate_assignment(t, response.updated_config, ctx.world, ctx.eval_options).valid) overclaim_fails = true;
    }
    response.rationale = "robot " + response.exploration_robot + " can take over every orphaned task";
    if (!overclaim_fails) {
      std::string prose = "Robot " + response.exploration_robot + " should take over all of the tasks.";
      return {prose, parse_plan(prose, ctx)};
    }
  }
  std::string text = "```json\n" + serialize_plan(response).dump(2) + "\n```";
  return {text, parse_plan(text, ctx)};
}

void validate(const MockPlannerSpec& spec) {
  if (const auto* s = std::get_if<StochasticMock>(&spec)) {
    auto ok = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!ok(s->first_attempt_success_prob) || !ok(s->per_retry_success_prob)) {
      throw std::invalid_argument("mock planner probabilities must lie in [0, 1]");
    }
  } else if (std::get<ScriptedMock>(spec).responses.empty()) {
    throw std::invalid_argument("scripted mock needs at least one response");
  }
}

PlannerFactory mock_planner_factory(const MockPlannerSpec& spec) {
  validate(spec);
  if (const auto* s = std::get_if<StochasticMock>(&spec)) {
    StochasticMock m = *s;
    return [m](std::uint64_t seed) -> std::unique_ptr<Planner> {
      return std::make_unique<StochasticMockPlanner>(m.first_attempt_success_prob, m.per_retry_success_prob, seed);
    };
  }
  auto responses = std::get<ScriptedMock>(spec).responses;
  return [responses](std::uint64_t) -> std::unique_ptr<Planner> { return std::make_unique<ScriptedPlanner>(responses); };
}

PlannerFactory oracle_planner_factory() {
  return [](std::uint64_t) -> std::unique_ptr<Planner> { return std::make_unique<OraclePlanner>(); };
}

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 engine(seq);
  return engine();
}

bool ExperimentResult::any_exhausted() const {
  for (const auto& t : traces) {
    for (const auto& a : t.adaptations) {
      if (a.outcome.status == AdaptationStatus::ExhaustedRetries) return true;
    }
  }
  return false;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  if (spec.trials < 1) throw std::invalid_argument("trials must be at least 1");
  if (!spec.planner) throw std::invalid_argument("experiment needs a planner factory");
  ExperimentResult result;
  std::vector<TrialMetrics> metrics;
  for (int k = 0; k < spec.trials; ++k) {
    const auto seed = trial_seed(spec.seed, static_cast<std::uint64_t>(k));
    FaultScript faults = spec.faults;
    if (spec.vary_faults) {
      std::mt19937_64 rng(seed ^ 0x5eedfa17ULL);
      for (auto& f : faults.entries) {
        if (f.trigger.kind != FaultTrigger::Kind::AfterNTasksCompleted) continue;
        const auto n = spec.world.tasks_of(f.robot).size();
        f.trigger.value = static_cast<std::int64_t>(rng() % (n + 1));
      }
    }
    auto planner = spec.planner(seed);
    result.traces.push_back(run_simulation(spec.world, faults, *planner, spec.sim));
    metrics.push_back(trial_metrics(result.traces.back()));
  }
  result.summary = summarize(metrics);
  return result;
}

void write_experiment(const ExperimentResult& result, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "trials");
  auto write = [](const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
    out << text;
  };
  write(out_dir / "summary.json", emit_report(result.summary, ReportFormat::Json));
  write(out_dir / "summary.txt", emit_report(result.summary, ReportFormat::Table));
  for (std::size_t k = 0; k < result.traces.size(); ++k) {
    write(out_dir / "trials" / ("trial-" + std::to_string(k + 1) + ".ndjson"), export_trace_ndjson(result.traces[k]));
  }
}

}  // namespace reassign

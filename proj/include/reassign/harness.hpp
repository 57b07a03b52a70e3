#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "reassign/planner.hpp"
#include "reassign/sim.hpp"

namespace reassign {

/// Aggregates over trials. Adaptation times are seconds (logical in simulation)
/// and are empty when no trial succeeded.
struct MetricsSummary {
  int trials = 0;
  int successes = 0;
  double success_rate = 0;
  int first_attempt_successes = 0;
  double first_attempt_rate = 0;
  std::optional<double> mean_adaptation_time;
  std::optional<double> min_adaptation_time;
  std::optional<double> max_adaptation_time;
  double mean_retries = 0;
  int max_retries_observed = 0;

  friend bool operator==(const MetricsSummary&, const MetricsSummary&) = default;
};

struct EpisodeMetrics {
  AdaptationStatus status = AdaptationStatus::Succeeded;
  int attempts_used = 0;
  double adaptation_time = 0;
};

/// What one trial contributes to the summary. A trial succeeds when it saw at
/// least one adaptation and every adaptation succeeded.
struct TrialMetrics {
  std::vector<EpisodeMetrics> episodes;
};

TrialMetrics trial_metrics(const TrialTrace& trace);
/// Rebuilds TrialMetrics from an exported NDJSON trace.
TrialMetrics trial_metrics_from_ndjson(std::string_view ndjson);
MetricsSummary summarize(const std::vector<TrialMetrics>& trials);

enum class ReportFormat { Table, Json };

nlohmann::json to_json(const MetricsSummary& summary);
MetricsSummary summary_from_json(const nlohmann::json& j);
std::string emit_report(const MetricsSummary& summary, ReportFormat format);

/// Replays canned responses in order; the last one repeats once the list runs out.
class ScriptedPlanner final : public Planner {
 public:
  explicit ScriptedPlanner(std::vector<std::string> responses);
  PlannerReply propose(const DisruptionContext& ctx, std::chrono::milliseconds deadline) override;
  [[nodiscard]] int calls() const { return calls_; }

 private:
  std::vector<std::string> responses_;
  int calls_ = 0;
};

/// Offline stand-in for an LLM: first attempts of an episode succeed with one
/// probability, retries with another. A success returns the oracle's plan; a
/// miss over-claims tasks the robot cannot reach (or answers in prose when
/// over-claiming would still validate).
class StochasticMockPlanner final : public Planner {
 public:
  StochasticMockPlanner(double first_attempt_success_prob, double per_retry_success_prob, std::uint64_t seed);
  PlannerReply propose(const DisruptionContext& ctx, std::chrono::milliseconds deadline) override;

 private:
  double first_;
  double retry_;
  std::mt19937_64 rng_;
};

/// Uniform [0, 1) from the top 53 bits of one engine draw.
double unit_uniform(std::mt19937_64& rng);

struct ScriptedMock {
  std::vector<std::string> responses;
};

struct StochasticMock {
  double first_attempt_success_prob = 0.6;
  double per_retry_success_prob = 2.0 / 3.0;
  std::uint64_t seed = 0;
};

using MockPlannerSpec = std::variant<ScriptedMock, StochasticMock>;

/// Throws std::invalid_argument when a probability lies outside [0, 1].
void validate(const MockPlannerSpec& spec);

/// Builds a fresh planner for one trial from the trial's own seed.
using PlannerFactory = std::function<std::unique_ptr<Planner>(std::uint64_t trial_seed)>;

PlannerFactory mock_planner_factory(const MockPlannerSpec& spec);
PlannerFactory oracle_planner_factory();

/// Seed of trial `index` (0-based) within a run seeded with `seed`.
std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t index);

struct ExperimentSpec {
  SystemKnowledge world;
  FaultScript faults;
  PlannerFactory planner;
  int trials = 1;
  SimulationConfig sim;
  std::uint64_t seed = 0;
  /// Redraw every AfterNTasksCompleted trigger per trial from the trial seed.
  bool vary_faults = false;
};

struct ExperimentResult {
  MetricsSummary summary;
  std::vector<TrialTrace> traces;
  [[nodiscard]] bool any_exhausted() const;
};

ExperimentResult run_experiment(const ExperimentSpec& spec);

/// Writes summary.json, summary.txt and trials/trial-<k>.ndjson (k from 1).
void write_experiment(const ExperimentResult& result, const std::filesystem::path& out_dir);

}  // namespace reassign

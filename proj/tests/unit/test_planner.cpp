#include <doctest.h>

#include <random>

#include "brute_force.hpp"
#include "fixtures.hpp"
#include "random_world.hpp"
#include "reassign/chat_client.hpp"
#include "reassign/controller.hpp"
#include "reassign/planner.hpp"
#include "scripted_endpoint.hpp"

using namespace reassign;
using reassign::testing::dual_cell_after_r2_failure;

namespace {

DisruptionContext r2_context() { return gather_context(dual_cell_after_r2_failure(), "R2"); }

std::size_t count_of(const std::string& haystack, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) ++n;
  return n;
}

ProposedPlan r1_plan(const DisruptionContext& ctx) {
  ProposedPlan plan;
  plan.exploration_robot = "R1";
  plan.updated_config = ctx.world.robot("R1")->config;
  plan.updated_config.set("sensing", IdentifierList{"C1", "C2"});
  plan.claimed_tasks = {"M2-task", "B3-task"};
  plan.rationale = "R1 reaches M2 and B3 only";
  return plan;
}

FeedbackEntry rejection(int n) {
  FeedbackEntry e;
  e.attempt_number = n;
  e.failure = PlannerFailure{PlanFailureKind::NoJsonFound, "response contains no JSON object"};
  return e;
}

}  // namespace

TEST_CASE("prompt without feedback has four sections") {
  auto p = build_prompt(r2_context());
  REQUIRE(p.sections.size() == 4);
  CHECK(p.sections[0].heading == prompt_heading::kRole);
  CHECK(p.sections[1].heading == prompt_heading::kPolicy);
  CHECK(p.sections[2].heading == prompt_heading::kEligibility);
  CHECK(p.sections[3].heading == prompt_heading::kSystemData);
  CHECK(p.sections[1].body.find("as a baseline") != std::string::npos);
}

TEST_CASE("prompt lists feedback attempts in order") {
  auto ctx = r2_context();
  ctx.feedback_history = {rejection(2), rejection(1)};
  auto p = build_prompt(ctx);
  REQUIRE(p.sections.size() == 5);
  CHECK(p.sections[4].heading == prompt_heading::kFeedback);
  const auto& body = p.sections[4].body;
  auto first = body.find("### Attempt 1");
  auto second = body.find("### Attempt 2");
  REQUIRE(first != std::string::npos);
  REQUIRE(second != std::string::npos);
  CHECK(first < second);
  CHECK(body.find("NO_JSON_FOUND") != std::string::npos);
}

TEST_CASE("feedback renders violation codes and reasons") {
  auto ctx = r2_context();
  FeedbackEntry e;
  e.attempt_number = 1;
  e.rejected_plan = r1_plan(ctx);
  e.violations = {{"M3-task", validate_assignment(*ctx.world.task("M3-task"), e.rejected_plan->updated_config,
                                                  ctx.world)}};
  auto text = render_feedback(e);
  CHECK(text.rfind("### Attempt 1", 0) == 0);
  CHECK(text.find("REACH_VIOLATION") != std::string::npos);
  CHECK(text.find("M3-task") != std::string::npos);
}

TEST_CASE("prompt is deterministic and grows with feedback") {
  auto ctx = r2_context();
  CHECK(build_prompt(ctx) == build_prompt(ctx));
  CHECK(build_prompt(ctx).render() == build_prompt(ctx).render());
  std::string previous = build_prompt(ctx).render();
  for (int n = 1; n <= 5; ++n) {
    ctx.feedback_history.push_back(rejection(n));
    auto now = build_prompt(ctx).render();
    CHECK(now != previous);
    CHECK(count_of(now, "### Attempt ") == std::size_t(n));
    previous = now;
  }
}

TEST_CASE("system data section embeds the serialized context verbatim") {
  auto ctx = r2_context();
  auto p = build_prompt(ctx);
  CHECK(p.sections[3].body == serialize_context(ctx).dump(2));
  CHECK(p.render().find(serialize_context(ctx).dump(2)) != std::string::npos);
  auto j = serialize_context(ctx);
  CHECK(j["disrupted_robot"] == "R2");
  CHECK(j["candidate_robots"].size() == 1);
  CHECK(j["system"]["sensors"].size() == 2);
}

TEST_CASE("parse a well-formed plan wrapped in prose") {
  auto ctx = r2_context();
  auto plan = r1_plan(ctx);
  std::string text = "Here is the plan:\n```json\n" + serialize_plan(plan).dump(2) + "\n```\nDone.";
  auto r = parse_plan(text, ctx);
  REQUIRE(std::holds_alternative<ProposedPlan>(r));
  CHECK(std::get<ProposedPlan>(r) == plan);
  CHECK(std::holds_alternative<Box>(*std::get<ProposedPlan>(r).updated_config.reachability()));
}

TEST_CASE("parse failures") {
  auto ctx = r2_context();
  auto kind = [&](const std::string& text) {
    auto r = parse_plan(text, ctx);
    REQUIRE(std::holds_alternative<PlannerFailure>(r));
    CHECK_FALSE(std::get<PlannerFailure>(r).reason.empty());
    return std::get<PlannerFailure>(r).kind;
  };
  CHECK(kind("R1 should take M2-task and B3-task.") == PlanFailureKind::NoJsonFound);
  CHECK(kind("") == PlanFailureKind::NoJsonFound);
  CHECK(kind("{\"exploration_robot\": \"R1\"") == PlanFailureKind::NoJsonFound);

  auto plan = serialize_plan(r1_plan(ctx));
  auto with = [&](auto mutate) {
    auto j = plan;
    mutate(j);
    return kind(j.dump());
  };
  CHECK(with([](auto& j) { j["exploration_robot"] = "R2"; }) == PlanFailureKind::UnknownReference);
  CHECK(with([](auto& j) { j["exploration_robot"] = "R9"; }) == PlanFailureKind::UnknownReference);
  CHECK(with([](auto& j) { j["claimed_tasks"] = {"R1-sort-1"}; }) == PlanFailureKind::UnknownReference);
  CHECK(with([](auto& j) { j["claimed_tasks"] = {"ghost"}; }) == PlanFailureKind::UnknownReference);
  CHECK(with([](auto& j) { j["updated_config"]["sensing"] = {"C7"}; }) == PlanFailureKind::UnknownReference);
  CHECK(with([](auto& j) { j.erase("claimed_tasks"); }) == PlanFailureKind::SchemaMismatch);
  CHECK(with([](auto& j) { j["claimed_tasks"] = nlohmann::json::array(); }) == PlanFailureKind::SchemaMismatch);
  CHECK(with([](auto& j) { j["claimed_tasks"] = {"M2-task", "M2-task"}; }) == PlanFailureKind::SchemaMismatch);
  CHECK(with([](auto& j) { j["claimed_tasks"] = "M2-task"; }) == PlanFailureKind::SchemaMismatch);
  CHECK(with([](auto& j) { j["extra"] = 1; }) == PlanFailureKind::SchemaMismatch);
  CHECK(with([](auto& j) { j["exploration_robot"] = 1; }) == PlanFailureKind::SchemaMismatch);
  CHECK(with([](auto& j) { j["updated_config"]["reachability"] = "everywhere"; }) == PlanFailureKind::SchemaMismatch);
  CHECK(with([](auto& j) {
          j["updated_config"]["reachability"] = {{"kind", "box"}, {"min", {1, 1, 1}}, {"max", {0, 0, 0}}};
        }) == PlanFailureKind::SchemaMismatch);
  CHECK(kind("{\"note\": \"no plan\"}") == PlanFailureKind::SchemaMismatch);
}

TEST_CASE("parse prefers the object that looks like a plan") {
  auto ctx = r2_context();
  auto plan = r1_plan(ctx);
  auto text = "Context {\"a\": 1} then " + serialize_plan(plan).dump() + " and {\"b\": \"}\"}";
  auto r = parse_plan(text, ctx);
  REQUIRE(std::holds_alternative<ProposedPlan>(r));
  CHECK(std::get<ProposedPlan>(r) == plan);
}

TEST_CASE("parse of serialize is the identity on random plans") {
  std::mt19937_64 rng(41);
  int checked = 0;
  for (int i = 0; i < 400; ++i) {
    auto w = testing::random_world(rng, {4, 6, 8, 3, false});
    if (w.robots.size() < 2) continue;
    const auto& failed = w.robots.front().id;
    w.robot(failed)->status = RobotStatus::failed();
    auto ctx = gather_context(w, failed);
    if (ctx.orphaned_tasks.empty() || ctx.candidates.empty()) continue;
    testing::RandomPlanner planner(rng());
    auto reply = planner.propose(ctx, std::chrono::milliseconds(1000));
    auto r = parse_plan(reply.raw_response, ctx);
    REQUIRE(std::holds_alternative<ProposedPlan>(r));
    auto again = parse_plan(serialize_plan(std::get<ProposedPlan>(r)).dump(), ctx);
    REQUIRE(std::holds_alternative<ProposedPlan>(again));
    REQUIRE(std::get<ProposedPlan>(again) == std::get<ProposedPlan>(r));
    ++checked;
  }
  CHECK(checked > 50);
}

TEST_CASE("oracle picks R1 with the reachable tasks") {
  auto ctx = r2_context();
  auto r = oracle_plan(ctx);
  REQUIRE(std::holds_alternative<ProposedPlan>(r));
  const auto& plan = std::get<ProposedPlan>(r);
  CHECK(plan.exploration_robot == "R1");
  CHECK(plan.claimed_tasks == std::vector<TaskId>{"M2-task", "B3-task"});
  CHECK(*plan.updated_config.reachability() == *ctx.world.robot("R1")->config.reachability());
  CHECK(*plan.updated_config.sensing() == IdentifierList{"C1", "C2"});
  for (const auto& t : plan.claimed_tasks) CHECK(validate_assignment(*ctx.world.task(t), plan.updated_config, ctx.world).valid);
}

TEST_CASE("oracle with no candidates or nothing feasible") {
  auto w = testing::dual_cell_after_r2_failure();
  w.robot("R1")->status = RobotStatus::failed();
  auto r = oracle_plan(gather_context(w, "R2"));
  REQUIRE(std::holds_alternative<PlannerFailure>(r));
  CHECK(std::get<PlannerFailure>(r).kind == PlanFailureKind::NoFeasiblePlan);

  w = testing::dual_cell_after_r2_failure();
  w.robot("R1")->config.set("tool", IdentifierList{"vacuum"});
  r = oracle_plan(gather_context(w, "R2"));
  REQUIRE(std::holds_alternative<PlannerFailure>(r));
  CHECK(std::get<PlannerFailure>(r).kind == PlanFailureKind::NoFeasiblePlan);
}

TEST_CASE("oracle breaks ties by smallest robot id") {
  auto w = testing::dual_cell_after_r2_failure();
  auto clone = *w.robot("R1");
  clone.id = "R0";
  w.robots.push_back(clone);
  auto r = oracle_plan(gather_context(w, "R2"));
  REQUIRE(std::holds_alternative<ProposedPlan>(r));
  CHECK(std::get<ProposedPlan>(r).exploration_robot == "R0");
}

TEST_CASE("oracle matches exhaustive enumeration on random worlds") {
  std::mt19937_64 rng(8);
  int plans = 0;
  for (int i = 0; i < 400; ++i) {
    auto w = testing::random_world(rng);
    const auto& failed = w.robots[testing::uniform_int(rng, 0, int(w.robots.size()) - 1)].id;
    w.robot(failed)->status = RobotStatus::failed();
    auto ctx = gather_context(w, failed);
    if (ctx.orphaned_tasks.empty()) continue;
    auto expect = testing::brute_force::best_plan(ctx);
    auto r = oracle_plan(ctx);
    if (!expect.robot) {
      REQUIRE(std::holds_alternative<PlannerFailure>(r));
      continue;
    }
    REQUIRE(std::holds_alternative<ProposedPlan>(r));
    const auto& plan = std::get<ProposedPlan>(r);
    REQUIRE(plan.exploration_robot == *expect.robot);
    REQUIRE(std::set<TaskId>(plan.claimed_tasks.begin(), plan.claimed_tasks.end()) == expect.tasks);
    for (const auto& t : ctx.orphaned_tasks) {
      bool claimed = expect.tasks.count(t.id) == 1;
      REQUIRE(testing::brute_force::task_valid(t, plan.updated_config, w) == claimed);
    }
    ++plans;
  }
  CHECK(plans > 30);
}

TEST_CASE("chat request body and reply extraction") {
  auto ctx = r2_context();
  auto prompt = build_prompt(ctx);
  auto body = chat_request_body(prompt, "gpt-4o");
  CHECK(body["model"] == "gpt-4o");
  CHECK(body["temperature"] == 0);
  CHECK(body["n"] == 1);
  REQUIRE(body["messages"].size() == 2);
  CHECK(body["messages"][0]["role"] == "system");
  CHECK(body["messages"][1]["role"] == "user");
  CHECK(body["messages"][1]["content"].get<std::string>().find(std::string(prompt_heading::kSystemData)) !=
        std::string::npos);

  CHECK(chat_reply_text(testing::chat_completion_body("hello")) == std::optional<std::string>("hello"));
  CHECK_FALSE(chat_reply_text("{}").has_value());
  CHECK_FALSE(chat_reply_text("not json").has_value());
  CHECK_FALSE(chat_reply_text(R"({"choices": []})").has_value());
}

TEST_CASE("llm planner over a scripted endpoint") {
  auto ctx = r2_context();
  ChatEndpointConfig cfg;
  cfg.base_url = "http://scripted.invalid/v1";
  cfg.model = "test-model";
  cfg.api_key = "secret";
  auto endpoint = std::make_shared<testing::ScriptedEndpoint>();
  LlmPlanner planner(cfg, endpoint);
  const auto plan = r1_plan(ctx);

  SUBCASE("canned valid plan passes through") {
    endpoint->reply_content(serialize_plan(plan).dump());
    auto reply = planner.propose(ctx, std::chrono::milliseconds(5000));
    REQUIRE(std::holds_alternative<ProposedPlan>(reply.result));
    CHECK(std::get<ProposedPlan>(reply.result) == plan);
    REQUIRE(endpoint->requests().size() == 1);
    const auto& req = endpoint->requests()[0];
    CHECK(req.url == "http://scripted.invalid/v1/chat/completions");
    CHECK(req.timeout == std::chrono::milliseconds(5000));
    bool auth = false;
    for (const auto& [k, v] : req.headers) auth = auth || (k == "Authorization" && v == "Bearer secret");
    CHECK(auth);
    CHECK(nlohmann::json::parse(req.body) == chat_request_body(build_prompt(ctx), "test-model"));
  }

  SUBCASE("server error") {
    endpoint->reply(500, "{\"error\": \"boom\"}");
    auto reply = planner.propose(ctx, std::chrono::milliseconds(5000));
    REQUIRE(std::holds_alternative<PlannerFailure>(reply.result));
    CHECK(std::get<PlannerFailure>(reply.result).kind == PlanFailureKind::HttpError);
  }

  SUBCASE("timeouts and dropped connections") {
    endpoint->drop(true);
    endpoint->drop(false);
    auto a = planner.propose(ctx, std::chrono::milliseconds(5000));
    auto b = planner.propose(ctx, std::chrono::milliseconds(5000));
    CHECK(std::get<PlannerFailure>(a.result).kind == PlanFailureKind::Timeout);
    CHECK(std::get<PlannerFailure>(b.result).kind == PlanFailureKind::HttpError);
  }

  SUBCASE("two failures then a plan, in order") {
    endpoint->reply(503, "");
    endpoint->reply_content("I think R1 should do it.");
    endpoint->reply_content(serialize_plan(plan).dump());
    auto a = planner.propose(ctx, std::chrono::milliseconds(5000));
    auto b = planner.propose(ctx, std::chrono::milliseconds(5000));
    auto c = planner.propose(ctx, std::chrono::milliseconds(5000));
    CHECK(std::get<PlannerFailure>(a.result).kind == PlanFailureKind::HttpError);
    CHECK(std::get<PlannerFailure>(b.result).kind == PlanFailureKind::NoJsonFound);
    CHECK(b.raw_response == "I think R1 should do it.");
    REQUIRE(std::holds_alternative<ProposedPlan>(c.result));
    CHECK(endpoint->requests().size() == 3);
  }

  SUBCASE("200 without message content") {
    endpoint->reply(200, "{\"choices\": [{\"message\": {}}]}");
    auto reply = planner.propose(ctx, std::chrono::milliseconds(5000));
    CHECK(std::get<PlannerFailure>(reply.result).kind == PlanFailureKind::HttpError);
  }
}

TEST_CASE("endpoint config reads the key from the environment") {
  setenv(kApiKeyEnv, "from-env", 1);
  auto cfg = ChatEndpointConfig::from_env("http://x/v1", "m");
  CHECK(cfg.api_key == "from-env");
  unsetenv(kApiKeyEnv);
  CHECK(ChatEndpointConfig::from_env("http://x/v1", "m").api_key.empty());
}

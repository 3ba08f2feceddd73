#include <doctest.h>

#include "toxigan/commands.hpp"
#include "toxigan/config.hpp"
#include "toxigan/errors.hpp"

using namespace toxigan;
using nlohmann::json;

namespace {

json minimal() { return {{"output_dir", "out"}, {"data", {{"source", "synthetic"}}}}; }

std::string error_of(const json& j) {
  try {
    parse_run_config(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("a minimal config fills in every default") {
  const RunConfig cfg = parse_run_config(minimal());
  CHECK(cfg.output_dir == "out");
  CHECK(cfg.train.mode == TrainMode::full);
  CHECK(cfg.train.max_epoch == 40);
  CHECK(cfg.train.ballast.target_size == 100);
  CHECK(cfg.train.ballast.r0 == 50.0);
  CHECK(cfg.train.ballast.fewshot_k == 5);
  CHECK(cfg.data.split.train == 0.8);
  CHECK(cfg.evaluation.seeds.size() == 5);
  CHECK(cfg.train.discriminator.llm_head == LlmNeutralHead::fake);
  CHECK(cfg.train.generator.alternation == Alternation::epoch);
}

TEST_CASE("the effective config reproduces itself") {
  json j = minimal();
  j["train"] = {{"mode", "joint"}, {"max_epoch", 3}};
  j["reward"] = {{"lambda", 0.25}};
  const RunConfig cfg = parse_run_config(j);
  const json eff = to_json(cfg);
  CHECK(to_json(parse_run_config(eff)) == eff);
  CHECK(eff["train"]["mode"] == "joint");
  CHECK(eff["reward"]["lambda"] == 0.25);
}

TEST_CASE("validation messages name the offending field") {
  CHECK(error_of({{"data", {{"source", "synthetic"}}}}).find("output_dir") == 0);
  CHECK(error_of({{"output_dir", "o"}, {"data", json::object()}}).find("data.source") == 0);

  json j = minimal();
  j["train"] = {{"max_epoch", -1}};
  CHECK(error_of(j).find("train.max_epoch") == 0);

  j = minimal();
  j["generator"] = {{"hiden", 8}};
  CHECK(error_of(j) == "generator.hiden: unknown field");

  j = minimal();
  j["ballast"] = {{"target_size", "many"}};
  CHECK(error_of(j) == "ballast.target_size: wrong type");

  j = minimal();
  j["train"] = {{"mode", "sentigan"}};
  CHECK(error_of(j).find("train.mode") == 0);

  j = minimal();
  j["data"]["split"] = {{"train", 0.8}, {"val", 0.1}, {"test", 0.2}};
  CHECK(error_of(j).find("data.split") == 0);

  j = minimal();
  j["reward"] = {{"lambda", 1.5}};
  CHECK(error_of(j).find("reward.lambda") == 0);

  j = {{"output_dir", "o"}, {"data", {{"source", "jsonl"}}}};
  CHECK(error_of(j).find("data.path") == 0);
}

TEST_CASE("overrides edit nested keys and parse JSON values") {
  json j = minimal();
  apply_overrides(j, {"train.max_epoch=7", "train.mode=no_ballast", "evaluation.seeds=[3,4]"});
  const RunConfig cfg = parse_run_config(j);
  CHECK(cfg.train.max_epoch == 7);
  CHECK(cfg.train.mode == TrainMode::no_ballast);
  CHECK(cfg.evaluation.seeds == std::vector<std::uint64_t>{3, 4});
  CHECK_THROWS_AS(apply_overrides(j, {"novalue"}), ConfigError);
  CHECK_THROWS_AS(apply_overrides(j, {"a..b=1"}), ConfigError);
}

TEST_CASE("train mode names round-trip") {
  for (TrainMode m : {TrainMode::full, TrainMode::no_ballast, TrainMode::no_toxicity_step,
                      TrainMode::joint}) {
    CHECK(parse_train_mode(train_mode_name(m)) == m);
  }
  CHECK_THROWS_AS(parse_train_mode("nope"), ConfigError);
}

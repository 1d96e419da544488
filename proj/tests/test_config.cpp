#include <doctest.h>

#include "fedhug/config.hpp"
#include "fedhug/errors.hpp"

using namespace fedhug;
using namespace fedhug::cfg;
using nlohmann::json;

TEST_CASE("presets parse and resolve") {
  for (const std::string name : {"rppg-4", "mmwave-3"}) {
    const auto config = parse_config(preset_config(name));
    CHECK(config.rounds == 100);
    CHECK(config.benchmark.clients.size() >= 2);
    CHECK_FALSE(config.config_hash().empty());
    // the resolved echo re-parses to the same config
    const auto again = parse_config(config.resolved);
    CHECK(again.config_hash() == config.config_hash());
  }
  CHECK_THROWS_AS(preset_config("nope"), ConfigError);
}

TEST_CASE("preset reference plus overrides") {
  json j{{"benchmark", {{"preset", "rppg-4"}}}, {"rounds", 7}, {"policy", {{"kind", "fedavg"}}}};
  const auto config = parse_config(j);
  CHECK(config.rounds == 7);
  CHECK(config.policy.kind == fed::AggregationPolicy::Kind::kFedAvg);
  CHECK(config.benchmark.clients.size() == 4);
}

TEST_CASE("unknown keys are rejected with the key name") {
  json j{{"benchmark", {{"preset", "rppg-4"}}}, {"roundz", 7}};
  CHECK_THROWS_WITH_AS(parse_config(j), doctest::Contains("roundz"), ConfigError);

  json nested{{"benchmark", {{"preset", "rppg-4"}}}, {"gdlc", {{"sigmaa", 1.0}}}};
  CHECK_THROWS_WITH_AS(parse_config(nested), doctest::Contains("sigmaa"), ConfigError);
}

TEST_CASE("reserved beta key is accepted and flagged") {
  json j{{"benchmark", {{"preset", "rppg-4"}}}, {"beta", 0.07}};
  const auto config = parse_config(j);
  CHECK(config.beta_present);
  CHECK(config.resolved.contains("beta"));
  const auto plain = parse_config(json{{"benchmark", {{"preset", "rppg-4"}}}});
  CHECK_FALSE(plain.beta_present);
}

TEST_CASE("validation catches bad values") {
  auto base = json{{"benchmark", {{"preset", "rppg-4"}}}};
  base["rounds"] = -1;
  CHECK_THROWS_AS(parse_config(base), ConfigError);
  base["rounds"] = 10;
  base["policy"] = {{"kind", "mba"}, {"tau", 0.0}};
  CHECK_THROWS_AS(parse_config(base), ConfigError);
  base.erase("policy");
  base["seeds"] = json::array();
  CHECK_THROWS_AS(parse_config(base), ConfigError);
}

TEST_CASE("arch derives from the benchmark shape") {
  const auto config = parse_config(preset_config("mmwave-3"));
  const auto arch = config.arch();
  CHECK(arch.rows == 2);
  CHECK(arch.channels == 5);
  CHECK(arch.time_steps == 256);
  CHECK(arch.feature_dim() == 2 * config.model_filters);
}

TEST_CASE("gdlc printed form flag") {
  json j{{"benchmark", {{"preset", "rppg-4"}}}, {"gdlc", {{"printed_form", true}}}};
  CHECK(parse_config(j).gdlc.form == vmf::VklForm::kPrinted);
}

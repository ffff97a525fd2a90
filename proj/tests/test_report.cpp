#include <gtest/gtest.h>

#include "icpa/checkpoint.hpp"
#include "icpa/error.hpp"
#include "icpa/report.hpp"
#include "icpa/trainer.hpp"
#include "support.hpp"
#include "trainer_fixture.hpp"

using namespace icpa;

TEST(Config, JsonRoundTrip) {
  auto c = test::tiny_config();
  c.targets = {1, 0};
  c.ablation = Ablation::Front;
  c.beta = 0.5;
  c.seed = 99;
  const auto back = config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(config_hash(back), config_hash(c));
}

TEST(Config, FileValuesOverrideDefaultsOnly) {
  const auto c = config_from_json({{"learning_rate", 0.3}, {"phase1_steps", 7}});
  EXPECT_EQ(c.learning_rate, 0.3);
  EXPECT_EQ(c.phase1_steps, 7u);
  EXPECT_EQ(c.phase2_steps, TrainConfig{}.phase2_steps);
}

TEST(Config, UnknownKeysAndBadTypesAreRejected) {
  EXPECT_THROW(config_from_json({{"lr", 0.3}}), ValidationError);
  EXPECT_THROW(config_from_json({{"phase1_steps", "many"}}), ValidationError);
  EXPECT_THROW(config_from_json(nlohmann::json::array()), ValidationError);
  EXPECT_THROW(config_from_json({{"ablation", "everything"}}), std::exception);
}

TEST(Config, HashTracksContent) {
  auto a = TrainConfig{}, b = TrainConfig{};
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.seed = 1;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(Config, ValidationRejectsBadValues) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate(2));
  c.beta = 0.0;
  EXPECT_THROW(c.validate(2), ValidationError);
  c = TrainConfig{};
  c.eps_pref = -0.1;
  EXPECT_THROW(c.validate(2), ValidationError);
  c = TrainConfig{};
  c.targets = {0, 0};
  EXPECT_THROW(c.validate(2), ValidationError);
  c = TrainConfig{};
  c.targets = {3};
  EXPECT_THROW(c.validate(2), ValidationError);
}

TEST(Config, AblationNames) {
  for (auto a : {Ablation::None, Ablation::Align, Ablation::Pareto, Ablation::Front})
    EXPECT_EQ(ablation_from_string(to_string(a)), a);
}

TEST(Trace, JsonRoundTrip) {
  PhaseTrace t;
  t.step_loss = {1.5, 1.25, 0.125};
  t.probes = {{0, {1.0, 2.0}}, {2, {0.5, 1.5}}};
  t.steps_run = 3;
  t.best_step = 2;
  t.early_stopped = true;
  const auto back = trace_from_json(trace_to_json(t));
  EXPECT_EQ(back.step_loss, t.step_loss);
  ASSERT_EQ(back.probes.size(), 2u);
  EXPECT_EQ(back.probes[1].step, 2u);
  EXPECT_EQ(back.probes[1].losses, t.probes[1].losses);
  EXPECT_EQ(back.best_step, 2u);
  EXPECT_TRUE(back.early_stopped);
}

TEST(Checkpoint, RoundTripsEveryBlock) {
  test::TempDir dir("ckpt");
  const auto g = test::tiny_graph();
  const auto cfg = test::tiny_config();
  const auto model = initial_model(g, cfg);
  const auto gate = initial_gate(g, cfg);
  save_checkpoint(dir / "c.json", {{"model", &model.params()}, {"gate", &gate.params()}});

  auto cfg2 = cfg;
  cfg2.seed = 5;
  auto model2 = initial_model(g, cfg2);
  auto gate2 = initial_gate(g, cfg2);
  ASSERT_NE(model2.params().hash(), model.params().hash());
  load_checkpoint(dir / "c.json", {{"model", &model2.params()}, {"gate", &gate2.params()}});
  EXPECT_EQ(model2.params().hash(), model.params().hash());
  EXPECT_EQ(gate2.params().hash(), gate.params().hash());
}

TEST(Checkpoint, ShapeMismatchIsAnError) {
  const auto g = test::tiny_graph();
  auto cfg = test::tiny_config();
  const auto model = initial_model(g, cfg);
  const auto doc = checkpoint_to_json({{"model", &model.params()}});
  cfg.model.hidden = {16, 4};
  auto other = initial_model(g, cfg);
  EXPECT_THROW(checkpoint_from_json(doc, {{"model", &other.params()}}), Error);
  auto gate = initial_gate(g, cfg);
  EXPECT_THROW(checkpoint_from_json(doc, {{"gate", &gate.params()}}), Error);
}

TEST(Report, SameInputsGiveIdenticalBytes) {
  const auto g = test::tiny_graph();
  const auto cfg = test::tiny_config();
  const auto a = report_to_json(run_icpa(g, cfg).result).dump(2);
  const auto b = report_to_json(run_icpa(g, cfg).result).dump(2);
  EXPECT_EQ(a, b);
  const auto doc = nlohmann::json::parse(a);
  EXPECT_EQ(doc.at("format"), "icpa-report");
  EXPECT_EQ(config_from_json(doc.at("config")).seed, cfg.seed);
}

TEST(Report, ConfigEchoReproducesTheRun) {
  const auto g = test::tiny_graph();
  const auto cfg = test::tiny_config();
  const auto doc = report_to_json(run_icpa(g, cfg).result);
  const auto echoed = config_from_json(doc.at("config"));
  EXPECT_EQ(report_to_json(run_icpa(g, echoed).result).dump(), doc.dump());
}

TEST(Report, FileRoundTrip) {
  test::TempDir dir("report_file");
  const nlohmann::json doc = {{"a", 1}, {"b", {1.5, 2.5}}};
  write_json_file(dir / "x.json", doc);
  EXPECT_EQ(read_json_file(dir / "x.json"), doc);
  EXPECT_THROW(read_json_file(dir / "missing.json"), Error);
}

TEST(Nu0Cache, SecondRunReadsTheCache) {
  test::TempDir dir("nu0");
  const auto g = test::tiny_graph();
  auto cfg = test::tiny_config();
  RunOptions opt;
  opt.nu0_cache = dir / "nu0.json";
  const auto first = run_icpa(g, cfg, opt);
  EXPECT_FALSE(first.nu0_from_cache);
  // Settings outside the baseline key reuse the entry.
  cfg.ablation = Ablation::Front;
  const auto second = run_icpa(g, cfg, opt);
  EXPECT_TRUE(second.nu0_from_cache);
  EXPECT_EQ(second.result.nu0, first.result.nu0);
  // A different seed does not.
  cfg.seed = 4;
  EXPECT_FALSE(run_icpa(g, cfg, opt).nu0_from_cache);
}

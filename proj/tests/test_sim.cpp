#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "ringveil/sim.hpp"

using namespace ringveil;
using namespace ringveil::sim;

namespace {

ScenarioConfig small_config() {
  ScenarioConfig c;
  c.height = 6;
  c.vehicles = 16;
  c.rsus = 2;
  c.ring_sizes = {3, 6};
  c.batch_sizes = {4, 8};
  c.revocations = 2;
  return c;
}

}  // namespace

TEST(Config, FileParsing) {
  ScenarioConfig c;
  std::istringstream in(
      "# comment\n"
      "suite = bls12-381-swap\n"
      "height=8\n"
      "  vehicles = 40   # trailing comment\n"
      "ring_sizes = 2-4,8\n"
      "loss = 0.25\n");
  load_config(c, in);
  EXPECT_EQ(c.suite, "bls12-381-swap");
  EXPECT_EQ(c.height, 8u);
  EXPECT_EQ(c.vehicles, 40u);
  EXPECT_EQ(c.ring_sizes, (std::vector<std::size_t>{2, 3, 4, 8}));
  EXPECT_DOUBLE_EQ(c.loss, 0.25);
}

TEST(Config, Errors) {
  ScenarioConfig c;
  std::istringstream unknown("colour = blue\n");
  EXPECT_THROW(load_config(c, unknown), Error);
  std::istringstream no_eq("height 3\n");
  EXPECT_THROW(load_config(c, no_eq), Error);
  EXPECT_THROW(apply_setting(c, "height", "ten"), Error);
  EXPECT_THROW(apply_setting(c, "loss", "0.1x"), Error);
  EXPECT_THROW(parse_size_list("x", "5-2"), Error);
  EXPECT_THROW(parse_size_list("x", ""), Error);
}

TEST(Config, EnvironmentOverrides) {
  ScenarioConfig c;
  const std::map<std::string, std::string> env{{"RINGVEIL_SEED", "99"}, {"RINGVEIL_RING_SIZES", "7"}};
  apply_env(c, [&](const char* name) -> const char* {
    auto it = env.find(name);
    return it == env.end() ? nullptr : it->second.c_str();
  });
  EXPECT_EQ(c.seed, 99u);
  EXPECT_EQ(c.ring_sizes, std::vector<std::size_t>{7});
  EXPECT_EQ(c.height, 10u);
}

TEST(Config, Validation) {
  EXPECT_NO_THROW(ScenarioConfig{}.validate());
  auto expect_invalid = [](auto mutate) {
    ScenarioConfig c;
    mutate(c);
    try {
      c.validate();
      ADD_FAILURE();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::InvalidConfig);
    }
  };
  expect_invalid([](ScenarioConfig& c) { c.loss = 1.0; });
  expect_invalid([](ScenarioConfig& c) { c.loss = -0.1; });
  expect_invalid([](ScenarioConfig& c) { c.vehicles = 0; });
  expect_invalid([](ScenarioConfig& c) { c.rsus = 0; });
  expect_invalid([](ScenarioConfig& c) { c.height = 0; });
  expect_invalid([](ScenarioConfig& c) { c.suite = "p256"; });
  expect_invalid([](ScenarioConfig& c) { c.ring_sizes = {51}; });
  expect_invalid([](ScenarioConfig& c) { c.height = 3; });
}

TEST(Scenario, DefaultRunIsClean) {
  const auto report = run_scenario<Bls12381>(small_config());
  EXPECT_EQ(report["tracing"]["success_rate"].get<double>(), 1.0);
  EXPECT_GT(report["tracing"]["attempted"].get<int>(), 0);
  EXPECT_EQ(report["broadcasts"]["false_rejects"].get<int>(), 0);
  EXPECT_EQ(report["probes"]["protocol_violations"].get<int>(), 0);
  EXPECT_EQ(report["probes"]["stale_pairings"].get<int>(), 0);
  EXPECT_EQ(report["ring_requests"]["granted"].get<int>(), 16);
  EXPECT_EQ(report["revocation"]["post_refresh_rejected"].get<int>(), 2);
  EXPECT_EQ(report["revocation"]["pre_refresh_granted"].get<int>(), 1);
  EXPECT_EQ(report["revocation"]["survivors_granted"].get<int>(), 5);
  EXPECT_EQ(report["channel"]["frames_dropped"].get<int>(), 0);
}

TEST(Scenario, LossyChannelDropsWithoutViolations) {
  auto c = small_config();
  c.loss = 0.3;
  c.seed = 5;
  const auto report = run_scenario<Bls12381>(c);
  EXPECT_GT(report["channel"]["frames_dropped"].get<int>(), 0);
  EXPECT_GT(report["broadcasts"]["dropped"].get<int>(), 0);
  EXPECT_EQ(report["broadcasts"]["false_rejects"].get<int>(), 0);
  EXPECT_EQ(report["probes"]["protocol_violations"].get<int>(), 0);
  EXPECT_EQ(report["tracing"]["success_rate"].get<double>(), 1.0);
  EXPECT_EQ(report["revocation"]["post_refresh_other"].get<int>() + report["revocation"]["post_refresh_rejected"].get<int>(),
            2);
}

TEST(Scenario, SameSeedSameReport) {
  auto c = small_config();
  c.suite = "bls12-381-swap";
  c.loss = 0.1;
  const auto a = run_scenario<Bls12381Swapped>(c).dump();
  const auto b = run_scenario<Bls12381Swapped>(c).dump();
  EXPECT_EQ(a, b);
  c.seed = 2;
  EXPECT_NE(run_scenario<Bls12381Swapped>(c).dump(), a);
}

TEST(Bench, CsvSchemaIsStable) {
  EXPECT_EQ(kBenchCsvHeader,
            "operation,suite,ring_size,batch_size,height,revoked,repetitions,mean_wall_us,median_wall_us,"
            "mean_cpu_us,median_cpu_us,pairings,bytes");
  EXPECT_EQ(kKeyUpdateCsvHeader, "N,r,kunodes,bf_ribe,bound");
  BenchRecord r{"sign", "bls12-381", 3, 1, 10, 0, 30, 1.5, 1.25, 1.0, 1.0, 2, 194};
  EXPECT_EQ(to_csv_row(r), "sign,bls12-381,3,1,10,0,30,1.500,1.250,1.000,1.000,2,194");
}

TEST(Bench, SmallRunProducesRecords) {
  BenchConfig b;
  b.ops = {"sign", "verify", "batch", "keyupdate"};
  b.ring_sizes = {2, 3};
  b.batch_sizes = {2};
  b.repetitions = 30;
  b.height = 4;
  std::size_t streamed = 0;
  const auto rows = run_bench<Bls12381>(b, [&](const BenchRecord&) { ++streamed; });
  EXPECT_EQ(rows.size(), 2u * (1 + 1 + 3) + 4);
  EXPECT_EQ(streamed, rows.size());
  for (const auto& r : rows) {
    EXPECT_EQ(r.repetitions, 30u);
    EXPECT_GT(r.median_wall_us, 0.0);
    if (r.operation == "verify") {
      EXPECT_EQ(r.pairings, 2u);
      EXPECT_EQ(r.bytes, 48u * (r.ring_size + 1) + 2);
    }
    if (r.operation == "batch-verify") EXPECT_EQ(r.pairings, 2u);
    if (r.operation == "single-verify-total") EXPECT_EQ(r.pairings, 2u * r.batch_size);
  }
}

TEST(Bench, RejectsTooFewRepetitions) {
  BenchConfig b;
  b.repetitions = 10;
  EXPECT_THROW(b.validate(), Error);
  b.repetitions = 30;
  b.ops = {"frobnicate"};
  EXPECT_THROW(b.validate(), Error);
}

TEST(KeyUpdateSize, ReferencePoints) {
  const auto rows = keyupdate_sizes(1024, {0, 1, 1024}, 1);
  EXPECT_EQ(rows[0].kunodes, 1u);
  EXPECT_FALSE(rows[0].bound.has_value());
  EXPECT_EQ(rows[1].kunodes, 10u);
  EXPECT_EQ(rows[1].bf_ribe, 1023u);
  EXPECT_EQ(rows[2].kunodes, 0u);
  EXPECT_EQ(rows[2].bf_ribe, 0u);
  EXPECT_EQ(to_csv_row(rows[1]), "1024,1,10,1023,11.000");
  EXPECT_EQ(to_csv_row(rows[0]), "1024,0,1,1024,");
}

TEST(KeyUpdateSize, BoundsAcrossSweep) {
  for (const auto& row : keyupdate_sizes(1024, default_revocation_sweep(1024), 3)) {
    EXPECT_EQ(row.bf_ribe, 1024 - row.r);
    if (row.r > 1 && row.r <= 512) EXPECT_LT(row.kunodes, row.bf_ribe);
    if (row.r >= 1 && row.r <= 512) EXPECT_LE(static_cast<double>(row.kunodes), *row.bound);
  }
}

TEST(KeyUpdateSize, InvalidN) {
  EXPECT_THROW((void)keyupdate_sizes(1000, {1}, 1), Error);
  EXPECT_THROW((void)keyupdate_sizes(1, {0}, 1), Error);
  EXPECT_THROW((void)keyupdate_sizes(16, {17}, 1), Error);
}

TEST(LinearFit, ExactLineAndNoise) {
  const auto f = fit_linear({1, 2, 3, 4}, {3, 5, 7, 9});
  EXPECT_DOUBLE_EQ(f.slope, 2.0);
  EXPECT_DOUBLE_EQ(f.intercept, 1.0);
  EXPECT_DOUBLE_EQ(f.r2, 1.0);
  // Hand-computed: x = 1..4, y = 1,3,2,4 gives slope 0.8, intercept 0.5, R^2 = 0.64.
  const auto g = fit_linear({1, 2, 3, 4}, {1, 3, 2, 4});
  EXPECT_NEAR(g.slope, 0.8, 1e-12);
  EXPECT_NEAR(g.intercept, 0.5, 1e-12);
  EXPECT_NEAR(g.r2, 0.64, 1e-12);
  EXPECT_THROW((void)fit_linear({1}, {1}), Error);
}

TEST(Channel, LossIsSeeded) {
  LossyChannel a(0.5, 7), b(0.5, 7);
  for (int i = 0; i < 200; ++i) EXPECT_EQ(a.transmit(Bytes{1}).has_value(), b.transmit(Bytes{1}).has_value());
  EXPECT_GT(a.dropped(), 50u);
  EXPECT_LT(a.dropped(), 150u);
  LossyChannel none(0.0, 1);
  for (int i = 0; i < 100; ++i) EXPECT_TRUE(none.transmit(Bytes{1}).has_value());
}

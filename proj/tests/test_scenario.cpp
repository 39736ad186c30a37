#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "leakq/scenario.hpp"

namespace leakq {
namespace {

const std::filesystem::path kScenarios = std::filesystem::path(LEAKQ_SOURCE_DIR) / "scenarios";

const char* kMinimal = R"(
[queue]
capacity_wh = 40000
leakage_per_day = 0.2

[supply]
type = gaussian
mean_wh = 200
std_wh = 1000

[demand]
type = constant
value_wh = 0
)";

std::string error_of(const std::string& text) {
  try {
    parse_scenario_text(text, "s.ini");
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

TEST(Scenario, MinimalDefaults) {
  const auto sc = parse_scenario_text(kMinimal);
  const auto& p = sc.plan;
  EXPECT_EQ(p.config.capacity_wh, 40000.0);
  EXPECT_NEAR(p.config.gamma, 0.0093, 5e-5);
  EXPECT_NEAR(p.config.gamma, daily_to_slot_leakage(0.2, 24), 1e-15);
  EXPECT_EQ(p.config.initial_charge_wh, 0.0);
  EXPECT_EQ(p.warmup_slots, default_warmup(p.config.gamma));
  EXPECT_EQ(p.n_slots, 100000u + p.warmup_slots);
  EXPECT_EQ(p.n_replications, 20u);
  EXPECT_EQ(p.master_seed, 1u);
  EXPECT_FALSE(p.constraints.has_value());
  EXPECT_TRUE(sc.warnings.empty());
  ASSERT_TRUE(std::holds_alternative<GaussianChargeModel>(p.source.supply));
}

TEST(Scenario, CommentsAndWhitespace) {
  const auto sc = parse_scenario_text(std::string("# header\n  ; another\n") + kMinimal +
                                      "[simulation]\n  slots = 10   # inline\nseed=9\n");
  EXPECT_EQ(sc.plan.n_slots - sc.plan.warmup_slots, 10u);
  EXPECT_EQ(sc.plan.master_seed, 9u);
}

TEST(Scenario, InfiniteCapacityAndPerSlotGamma) {
  const auto sc = parse_scenario_text(
      "[queue]\ncapacity_wh = inf\ngamma = 0.01\n[supply]\ntype = gaussian\nmean_wh = 1\nstd_wh = 1\n"
      "[demand]\ntype = const_plus_exp\nbase_wh = 1\nexp_mean_wh = 2\n");
  EXPECT_TRUE(std::isinf(sc.plan.config.capacity_wh));
  EXPECT_EQ(sc.plan.config.gamma, 0.01);
  EXPECT_FALSE(sc.leakage_per_day.has_value());
}


TEST(Scenario, LeakageConflictPerDayWinsWithWarning) {
  std::string text = kMinimal;
  text.replace(text.find("leakage_per_day"), 0, "gamma = 0.05\n");
  const auto sc = parse_scenario_text(text, "s.ini");
  EXPECT_NEAR(sc.plan.config.gamma, daily_to_slot_leakage(0.2, 24), 1e-15);
  ASSERT_EQ(sc.warnings.size(), 1u);
  EXPECT_NE(sc.warnings[0].find("s.ini:4"), std::string::npos) << sc.warnings[0];
}

TEST(Scenario, LeakageAgreementWithinToleranceIsSilent) {
  std::string text = kMinimal;
  text.replace(text.find("leakage_per_day"), 0, "gamma = 0.0092546\n");
  EXPECT_TRUE(parse_scenario_text(text).warnings.empty());
}

TEST(Scenario, ErrorsCarryLineNumbers) {
  EXPECT_NE(error_of(std::string(kMinimal) + "bogus = 1\n").find("s.ini:14: unknown key 'bogus'"), std::string::npos)
      << error_of(std::string(kMinimal) + "bogus = 1\n");
  std::string bad_number = kMinimal;
  bad_number.replace(bad_number.find("40000"), 5, "forty");
  EXPECT_NE(error_of(bad_number).find("s.ini:3:"), std::string::npos) << error_of(bad_number);
  EXPECT_NE(error_of("[queue\n").find("s.ini:1: malformed"), std::string::npos);
  EXPECT_NE(error_of("x = 1\n").find("s.ini:1: key outside"), std::string::npos);
  EXPECT_NE(error_of("[weather]\n").find("unknown section"), std::string::npos);
  EXPECT_NE(error_of("[queue]\ncapacity_wh\n").find("s.ini:2: expected"), std::string::npos);
  EXPECT_NE(error_of("[queue]\n[queue]\n").find("s.ini:2: duplicate section"), std::string::npos);
}

TEST(Scenario, MissingSectionsAndKeys) {
  EXPECT_NE(error_of("[queue]\ncapacity_wh = 1\n").find("missing section [supply]"), std::string::npos);
  std::string no_mean = kMinimal;
  no_mean.erase(no_mean.find("mean_wh = 200\n"), 14);
  EXPECT_NE(error_of(no_mean).find("requires 'mean_wh'"), std::string::npos) << error_of(no_mean);
  std::string bad_type = kMinimal;
  bad_type.replace(bad_type.find("type = gaussian"), 15, "type = solar");
  EXPECT_NE(error_of(bad_type).find("unknown supply type 'solar'"), std::string::npos);
}

TEST(Scenario, ZeroSlotPlanIsRejected) {
  EXPECT_NE(error_of(std::string(kMinimal) + "[simulation]\nslots = 0\n").find("slots must be > 0"), std::string::npos);
}

TEST(Scenario, InvalidQueueValues) {
  std::string text = kMinimal;
  text.replace(text.find("capacity_wh = 40000"), 19, "capacity_wh = 10\ninitial_charge_wh = 20");
  EXPECT_NE(error_of(text).find("initial"), std::string::npos) << error_of(text);
  std::string leak = kMinimal;
  leak.replace(leak.find("0.2"), 3, "1.5");
  EXPECT_NE(error_of(leak).find("s.ini:4"), std::string::npos) << error_of(leak);
}

TEST(Scenario, ConstraintsSection) {
  const auto sc = parse_scenario_text(std::string(kMinimal) +
                                      "[constraints]\ndepth_of_discharge = 0.8\ncharge_rate_wh = 500\n"
                                      "discharge_term = literal\n");
  ASSERT_TRUE(sc.plan.constraints.has_value());
  EXPECT_EQ(sc.plan.constraints->depth_of_discharge, 0.8);
  EXPECT_EQ(sc.plan.constraints->charge_rate_wh, 500.0);
  EXPECT_TRUE(std::isinf(sc.plan.constraints->discharge_rate_wh));
  EXPECT_EQ(sc.plan.discharge_term, DischargeTerm::kLiteral);
  EXPECT_EQ(sc.plan.effective_config().capacity_wh, 32000.0);
}

TEST(Scenario, WindDefaultsFollowSlotLength) {
  const auto sc = parse_scenario_text(
      "[queue]\ncapacity_wh = 1000\nslot_hours = 0.5\n[supply]\ntype = wind\nscale_ms = 8\n"
      "[demand]\ntype = constant\nvalue_wh = 100\n");
  const auto& w = std::get<WindSupplyModel>(sc.plan.source.supply);
  EXPECT_EQ(w.slot_hours, 0.5);
  EXPECT_EQ(w.wind.scale_ms, 8.0);
  EXPECT_EQ(w.turbine.rated_power_kw, 1.0);
  EXPECT_EQ(sc.slots_per_day, 48);
}

TEST(Scenario, ShippedScenariosLoad) {
  std::size_t count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(kScenarios)) {
    if (entry.path().extension() != ".ini") continue;
    ++count;
    EXPECT_NO_THROW(load_scenario(entry.path())) << entry.path();
  }
  EXPECT_GE(count, 5u);
}

TEST(Scenario, TraceResolvedRelativeToFile) {
  const auto sc = load_scenario(kScenarios / "trace_demand.ini");
  const auto& t = std::get<TraceSource>(sc.plan.source.demand);
  EXPECT_EQ(t.size(), 24u);
  EXPECT_TRUE(t.loop);
  EXPECT_EQ(t.timestamps.front(), "00:00");
  EXPECT_EQ(sc.name, "trace_demand");
}

TEST(Scenario, MissingTraceFileReportsLine) {
  const std::string text =
      "[queue]\ncapacity_wh = 10\n[supply]\ntype = trace\npath = nowhere.csv\n[demand]\ntype = constant\nvalue_wh = 1\n";
  EXPECT_NE(error_of(text).find("s.ini:5:"), std::string::npos) << error_of(text);
}

TEST(Scenario, MissingFile) { EXPECT_THROW(load_scenario("/nonexistent/x.ini"), Error); }

}  // namespace
}  // namespace leakq

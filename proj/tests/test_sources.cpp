#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "leakq/analytic.hpp"
#include "leakq/metrics.hpp"
#include "leakq/sources.hpp"

namespace leakq {
namespace {

TEST(Random, DerivedSeedsDifferAcrossReplicationsAndSubstreams) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t r = 0; r < 100; ++r)
    for (std::uint64_t s = 0; s < 3; ++s) seen.insert(derive_seed(42, r, s));
  EXPECT_EQ(seen.size(), 300u);
  EXPECT_NE(derive_seed(1, 0, 0), derive_seed(2, 0, 0));
}

TEST(Random, UniformRanges) {
  Stream rng(5);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    const double v = rng.uniform_open();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_GT(v, 0.0);
    ASSERT_LT(v, 1.0);
  }
}

TEST(SampleGaussian, ZeroStdIsConstant) {
  for (double x : sample_gaussian({123.0, 0.0}, 1, 1000)) EXPECT_EQ(x, 123.0);
}

TEST(SampleGaussian, MeanWithinFourStandardErrors) {
  const auto xs = sample_gaussian({200.0, 1000.0}, 17, 1'000'000);
  const auto m = moments(xs);
  EXPECT_NEAR(m.mean, 200.0, 4.0);
  EXPECT_NEAR(m.std_dev(), 1000.0, 4.0 * 1000.0 / std::sqrt(2.0e6));
  EXPECT_NEAR(m.skewness, 0.0, 4.0 * std::sqrt(6.0 / 1e6));
}

TEST(SampleGaussian, SameSeedSameSequence) {
  EXPECT_EQ(sample_gaussian({0.0, 1.0}, 99, 1000), sample_gaussian({0.0, 1.0}, 99, 1000));
  EXPECT_NE(sample_gaussian({0.0, 1.0}, 99, 1000), sample_gaussian({0.0, 1.0}, 100, 1000));
}

TEST(SampleGaussian, RejectsNegativeStd) { EXPECT_THROW(sample_gaussian({0.0, -1.0}, 1, 1), Error); }

TEST(Weibull, ScaleIsQuantileAtInverseE) {
  const WeibullWind w{7.0, 3.0};
  EXPECT_NEAR(w.from_uniform(std::exp(-1.0)), 7.0, 1e-12);
}

TEST(Weibull, SampleMeanMatchesAverageWindSpeed) {
  const auto v = sample_weibull_speed({7.0, 3.0}, 3, 1'000'000);
  const double expected = 7.0 * std::tgamma(4.0 / 3.0);
  EXPECT_NEAR(expected, 6.25, 0.01);
  EXPECT_NEAR(moments(v).mean, 6.25, 0.01 * 6.25);
}

TEST(Weibull, MomentsWithinFourStandardErrors) {
  const double c = 7.0, k = 3.0;
  const auto v = sample_weibull_speed({c, k}, 4, 1'000'000);
  const auto m = moments(v);
  const double g1 = std::tgamma(1.0 + 1.0 / k), g2 = std::tgamma(1.0 + 2.0 / k);
  const double mean = c * g1, var = c * c * (g2 - g1 * g1);
  EXPECT_NEAR(m.mean, mean, 4.0 * std::sqrt(var / 1e6));
  EXPECT_NEAR(m.variance, var, 4.0 * var * std::sqrt(2.0 / 1e6) * 1.2);
}

TEST(Weibull, KsAgainstAnalyticCdf) {
  const WeibullWind w{7.0, 3.0};
  const auto v = sample_weibull_speed(w, 6, 1'000'000);
  EXPECT_LT(ks_statistic(v, [&](double x) { return w.cdf(x); }), 0.005);
}

TEST(TurbinePower, Table1Values) {
  const WindTurbineParams p;
  EXPECT_NEAR(p.alpha(), 1.0 / 1701.0, 1e-15);
  EXPECT_NEAR(p.beta(), 27.0 / 1701.0, 1e-15);
  EXPECT_NEAR(turbine_power(3.0, p), 0.0, 1e-15);
  EXPECT_NEAR(turbine_power(12.0, p), 1.0, 1e-12);
  EXPECT_NEAR(turbine_power(7.0, p), 316.0 / 1701.0, 1e-12);
  EXPECT_EQ(turbine_power(2.9, p), 0.0);
  EXPECT_EQ(turbine_power(20.0, p), 1.0);
  EXPECT_EQ(turbine_power(25.0, p), 0.0);
  EXPECT_EQ(turbine_power(30.0, p), 0.0);
}

TEST(TurbinePower, ContinuousAndMonotoneBelowCutOut) {
  const WindTurbineParams p;
  double prev = turbine_power(0.0, p);
  for (double v = 0.001; v < p.cut_out_ms; v += 0.001) {
    const double now = turbine_power(v, p);
    ASSERT_LE(std::abs(now - prev), 1e-3) << v;
    if (v >= p.cut_in_ms) {
      ASSERT_GE(now, prev - 1e-15) << v;
    }
    prev = now;
  }
}

TEST(WindSupply, MomentsMatchQuoted) {
  const auto a = wind_supply({}, {7.0, 3.0}, 8, 1'000'000, 1.0);
  const auto m = moments(a);
  EXPECT_NEAR(m.mean, 1000.0, 15.0);
  EXPECT_NEAR(m.std_dev(), 1050.0, 25.0);
}

TEST(WindSupply, AnalyticCumulantsAgreeWithSampling) {
  const WindSupplyModel model;
  const auto c = wind_energy_cumulants(model);
  // Frozen from independent quadrature of the power curve.
  EXPECT_NEAR(c.mean, 999.4, 0.5);
  EXPECT_NEAR(c.std_dev(), 1049.5, 0.5);
  EXPECT_NEAR(c.skewness(), 1.680, 0.005);
  const auto m = moments(wind_supply(model.turbine, model.wind, 9, 1'000'000, 1.0));
  EXPECT_NEAR(m.mean, c.mean, 4.0 * c.std_dev() / 1e3);
}

TEST(WindSupply, CalmWindGivesNothing) {
  const WindTurbineParams p;
  for (double v : {0.0, 1.0, 2.5, 2.999}) EXPECT_EQ(wind_energy_wh(v, p, 1.0), 0.0);
  // Scale so small that every draw falls below cut-in.
  for (double a : wind_supply(p, {0.01, 3.0}, 1, 1000, 1.0)) EXPECT_EQ(a, 0.0);
}

TEST(WindSupply, LogMgfMatchesMomentsNearZero) {
  const WindSupplyModel model;
  const auto c = wind_energy_cumulants(model);
  const double t = 1e-6;
  const double slope = (wind_energy_log_mgf(model, t) - wind_energy_log_mgf(model, -t)) / (2.0 * t);
  EXPECT_NEAR(slope, c.mean, 1e-3 * c.mean);
  EXPECT_NEAR(wind_energy_log_mgf(model, 0.0), 0.0, 1e-12);
}

TEST(SampleDemand, QuotedMoments) {
  const auto s = sample_demand({750.0, 50.0}, 10, 1'000'000);
  const auto m = moments(s);
  EXPECT_NEAR(m.mean, 800.0, 0.01 * 800.0);
  EXPECT_NEAR(m.std_dev(), 50.0, 0.01 * 50.0);
  EXPECT_GE(*std::min_element(s.begin(), s.end()), 750.0);
}

TEST(SampleDemand, ZeroExponentialPartIsConstant) {
  for (double x : sample_demand({750.0, 0.0}, 1, 100)) EXPECT_EQ(x, 750.0);
}

TEST(Trace, ParsesPlainColumn) {
  std::istringstream in("100\n200\n300");
  const auto t = parse_trace(in);
  EXPECT_EQ(t.values_wh, (std::vector<double>{100, 200, 300}));
}

TEST(Trace, LoopingPlayback) {
  std::istringstream in("100\n200\n300\n");
  TraceOptions opts;
  opts.loop = true;
  const auto t = parse_trace(in, opts);
  EXPECT_EQ(t.take(5), (std::vector<double>{100, 200, 300, 100, 200}));
}

TEST(Trace, ExhaustedWithoutLoop) {
  std::istringstream in("1\n2\n");
  const auto t = parse_trace(in);
  EXPECT_THROW(t.take(3), Error);
  EXPECT_THROW(t.at(2), Error);
}

TEST(Trace, NonNumericCellReportsRow) {
  std::istringstream in("100\nabc\n300\n");
  try {
    parse_trace(in);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
  }
}

TEST(Trace, NamedColumnWithHeaderAndTimestamps) {
  std::istringstream in("time,pv,load\n00:00,0,410\n01:00,5.5,400\n");
  TraceOptions opts;
  opts.column = std::string("load");
  opts.timestamp_column = std::string("time");
  const auto t = parse_trace(in, opts);
  EXPECT_EQ(t.values_wh, (std::vector<double>{410, 400}));
  EXPECT_EQ(t.timestamps, (std::vector<std::string>{"00:00", "01:00"}));
}

TEST(Trace, MissingColumnName) {
  std::istringstream in("a,b\n1,2\n");
  TraceOptions opts;
  opts.column = std::string("c");
  EXPECT_THROW(parse_trace(in, opts), Error);
}

TEST(Trace, EmptyFileRejected) {
  std::istringstream in("\n\n");
  EXPECT_THROW(parse_trace(in), Error);
}

TEST(SlotSampler, DeterministicAndIndependentStreams) {
  const SourceSpec spec{WindSupplyModel{}, ConstPlusExpDemand{350.0, 50.0}};
  SlotSampler a(spec, 7, 3), b(spec, 7, 3), c(spec, 7, 4);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.next(), y = b.next(), z = c.next();
    ASSERT_EQ(x, y);
    differs = differs || x != z;
  }
  EXPECT_TRUE(differs);
}

TEST(SlotSampler, DemandStreamUnaffectedBySupplyModel) {
  const SourceSpec s1{GaussianChargeModel{0.0, 1.0}, ConstPlusExpDemand{0.0, 1.0}};
  const SourceSpec s2{WindSupplyModel{}, ConstPlusExpDemand{0.0, 1.0}};
  SlotSampler a(s1, 1, 0), b(s2, 1, 0);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next().second, b.next().second);
}

TEST(Cumulants, NetChargeCombination) {
  const SourceSpec spec{GaussianChargeModel{1000.0, 30.0}, ConstPlusExpDemand{750.0, 50.0}};
  const auto c = net_charge_cumulants(spec);
  EXPECT_DOUBLE_EQ(c.mean, 200.0);
  EXPECT_DOUBLE_EQ(c.variance, 900.0 + 2500.0);
  EXPECT_DOUBLE_EQ(c.third, -2.0 * 125000.0);
}

}  // namespace
}  // namespace leakq

#pragma once

// Experiment commands behind the `leakq` executable. Each returns its output
// as a JSON value or CSV text; the executable only handles files and exit
// codes.

#include <cmath>
#include <charconv>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "leakq/analytic.hpp"
#include "leakq/metrics.hpp"
#include "leakq/scenario.hpp"
#include "leakq/sim.hpp"
#include "leakq/validate.hpp"

namespace leakq {

using Json = nlohmann::ordered_json;

// Full round-trip precision; inf as a string, NaN as null.
inline Json json_number(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline std::string csv_number(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);  // shortest round-trip form
  return std::string(buf, res.ptr);
}

inline std::string csv_optional(const std::optional<double>& v) { return v ? csv_number(*v) : std::string(); }

namespace detail {

inline Json estimate_json(const Estimate& e) { return Json{{"value", json_number(e.value)}, {"ci95", json_number(e.ci95)}}; }

inline Json config_json(const QueueConfig& c) {
  return Json{{"capacity_wh", json_number(c.capacity_wh)},
              {"gamma", json_number(c.gamma)},
              {"initial_charge_wh", json_number(c.initial_charge_wh)},
              {"slot_hours", json_number(c.slot_hours)}};
}

inline Cumulants scenario_cumulants(const Scenario& sc) { return net_charge_cumulants(sc.plan.source); }

}  // namespace detail

// ---------------------------------------------------------------------------
// simulate

inline Json simulate_json(const Scenario& sc, const SteadyStateSummary& s) {
  const auto& plan = sc.plan;
  Json j;
  j["scenario"] = sc.name;
  j["seed"] = plan.master_seed;
  j["config"] = detail::config_json(plan.effective_config());
  if (sc.leakage_per_day) j["config"]["leakage_per_day"] = json_number(*sc.leakage_per_day);
  j["plan"] = Json{{"slots_per_replication", plan.n_slots - plan.warmup_slots},
                   {"warmup_slots", plan.warmup_slots},
                   {"replications", plan.n_replications},
                   {"post_warmup_slots", s.post_warmup_slots},
                   {"cdf_stride", s.cdf_stride}};
  j["p_underflow"] = detail::estimate_json(s.p_underflow);
  j["p_overflow"] = detail::estimate_json(s.p_overflow);
  j["mean_stored_wh"] = detail::estimate_json(s.mean_stored_wh);
  j["mean_loss_wh"] = detail::estimate_json(s.mean_loss_wh);
  j["mean_waste_wh"] = detail::estimate_json(s.mean_waste_wh);
  j["moments"] = Json{{"count", s.moments.count},
                      {"mean_wh", json_number(s.moments.mean)},
                      {"variance_wh2", json_number(s.moments.variance)},
                      {"std_wh", json_number(s.moments.std_dev())},
                      {"skewness", json_number(s.moments.skewness)}};
  Json reps = Json::array();
  for (const auto& r : s.replications) {
    reps.push_back(Json{{"p_underflow", json_number(r.p_underflow)},
                        {"p_overflow", json_number(r.p_overflow)},
                        {"mean_stored_wh", json_number(r.mean_stored_wh)},
                        {"mean_loss_wh", json_number(r.mean_loss_wh)},
                        {"mean_waste_wh", json_number(r.mean_waste_wh)}});
  }
  j["replications"] = std::move(reps);
  j["warnings"] = sc.warnings;
  return j;
}

// Points of the empirical step function: (x, F(x)) at each distinct sample
// value, thinned to at most max_rows by rank.
inline std::string cdf_csv(const EmpiricalCdf& cdf, std::size_t max_rows = 10'000) {
  std::string out = "x_wh,F\n";
  const auto xs = cdf.sorted();
  const double n = static_cast<double>(xs.size());
  std::vector<std::size_t> last_of_run;  // index of the last copy of each distinct value
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i + 1 == xs.size() || xs[i + 1] != xs[i]) last_of_run.push_back(i);
  }
  const std::size_t rows = std::min(max_rows, last_of_run.size());
  for (std::size_t k = 0; k < rows; ++k) {
    const std::size_t pick =
        rows == last_of_run.size() ? k : (rows == 1 ? last_of_run.size() - 1 : k * (last_of_run.size() - 1) / (rows - 1));
    const std::size_t i = last_of_run[pick];
    out += csv_number(xs[i]) + "," + csv_number(static_cast<double>(i + 1) / n) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// analyze: closed forms only, never simulates.

inline Json analyze_json(const Scenario& sc) {
  const QueueConfig cfg = sc.plan.effective_config();
  if (!(cfg.gamma > 0.0)) {
    throw Error("no reference steady state: gamma = 0 (the unconstrained reference system does not converge)");
  }
  const Cumulants delta = detail::scenario_cumulants(sc);
  const ReferenceMoments ref = reference_moments(delta, cfg.gamma);
  const Regime regime = classify_regime(cfg.capacity_wh, ref);
  Json j;
  j["scenario"] = sc.name;
  j["config"] = detail::config_json(cfg);
  if (sc.leakage_per_day) j["config"]["leakage_per_day"] = json_number(*sc.leakage_per_day);
  j["net_charge"] = Json{{"mean_wh", json_number(delta.mean)},
                         {"std_wh", json_number(delta.std_dev())},
                         {"skewness", json_number(delta.skewness())}};
  j["reference"] = Json{{"mean_wh", json_number(ref.mean_wh)},
                        {"variance_wh2", json_number(ref.variance_wh2)},
                        {"std_wh", json_number(ref.std_dev())},
                        {"skewness", json_number(ref.skewness)},
                        {"gamma", json_number(ref.gamma)}};
  j["regime"] = Json{{"label", to_string(regime.label)},
                     {"reference_mean_wh", json_number(regime.reference_mean_wh)},
                     {"capacity_wh", json_number(regime.capacity_wh)}};
  const auto g = gaussian_loss_probs(cfg.capacity_wh, ref);
  j["gaussian"] = Json{{"p_underflow", json_number(g.p_underflow)}, {"p_overflow", json_number(g.p_overflow)}};
  try {
    const auto fit = fit_skew_normal(ref);
    const auto sn = skew_normal_loss_probs(cfg.capacity_wh, ref);
    j["skew_normal"] = Json{{"location_wh", json_number(fit.location)},
                            {"scale_wh", json_number(fit.scale)},
                            {"shape", json_number(fit.shape)},
                            {"p_underflow", json_number(sn.p_underflow)},
                            {"p_overflow", json_number(sn.p_overflow)}};
  } catch (const Error& e) {
    j["skew_normal"] = Json{{"error", e.what()}};
  }
  j["kr_gap_bound_wh"] = json_number(kr_gap_bound(cfg.capacity_wh, ref));
  if (std::isfinite(cfg.capacity_wh) && delta.mean > cfg.gamma * cfg.capacity_wh) {
    try {
      const double theta = theta_star(mgf_for(sc.plan.source), cfg.gamma, cfg.capacity_wh);
      const auto b = martingale_bounds(theta, cfg.capacity_wh, demand_for_bound(sc.plan.source.demand));
      j["martingale"] = Json{{"theta_star", json_number(b.theta_star)},
                             {"basic_bound", json_number(b.basic_bound)},
                             {"sharpened_bound", b.sharpened_bound ? json_number(*b.sharpened_bound) : Json(nullptr)},
                             {"notes", b.notes}};
    } catch (const Error& e) {
      j["martingale"] = Json{{"error", e.what()}};
    }
  } else {
    j["martingale"] = Json{{"skipped", "not capacity-dominated: requires E[delta] > gamma*C and finite C"}};
  }
  auto warnings = sc.warnings;
  if (sc.plan.constraints) warnings.emplace_back("charging constraints are not reflected in the closed forms");
  j["warnings"] = warnings;
  return j;
}

// ---------------------------------------------------------------------------
// sweep

enum class SweepParam { kCapacity, kGamma };

// "a:b:step", inclusive of b up to rounding.
inline std::vector<double> parse_grid(const std::string& text) {
  const auto c1 = text.find(':');
  const auto c2 = c1 == std::string::npos ? std::string::npos : text.find(':', c1 + 1);
  require(c2 != std::string::npos && text.find(':', c2 + 1) == std::string::npos, "grid must be a:b:step, got '" + text + "'");
  const auto a = detail::parse_double(text.substr(0, c1));
  const auto b = detail::parse_double(text.substr(c1 + 1, c2 - c1 - 1));
  const auto step = detail::parse_double(text.substr(c2 + 1));
  require(a && b && step && std::isfinite(*a) && std::isfinite(*b) && std::isfinite(*step),
          "grid bounds must be numbers, got '" + text + "'");
  require(*step > 0.0, "grid step must be > 0");
  std::vector<double> grid;
  const double span = *b - *a;
  if (span < 0.0) return grid;
  const auto count = static_cast<std::size_t>(std::floor(span / *step + 1e-9)) + 1;
  for (std::size_t i = 0; i < count; ++i) grid.push_back(*a + static_cast<double>(i) * *step);
  return grid;
}

inline const char* sweep_header() {
  return "param,sim_p_u,sim_p_u_ci,sim_p_o,sim_p_o_ci,gauss_p_u,gauss_p_o,skewnorm_p_u,skewnorm_p_o,"
         "martingale_basic,martingale_sharp,mean_stored\n";
}

// One row per grid point; every point reuses the scenario seed so neighbouring
// rows see the same random draws. Analytic cells are empty where a closed
// form does not apply.
inline std::string sweep_csv(const Scenario& sc, SweepParam param, const std::vector<double>& grid,
                             unsigned threads = 0) {
  require(!grid.empty(), "sweep grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i) require(grid[i] > grid[i - 1], "sweep grid must be ascending");
  const Cumulants delta = detail::scenario_cumulants(sc);
  const MgfSpec mgf = mgf_for(sc.plan.source);
  const DemandForBound demand = demand_for_bound(sc.plan.source.demand);
  std::string out = sweep_header();
  for (double v : grid) {
    SimPlan plan = sc.plan;
    if (param == SweepParam::kCapacity) {
      require(v >= 0.0, "capacity grid values must be >= 0");
      plan.config.capacity_wh = v;
      plan.config.initial_charge_wh = std::min(plan.config.initial_charge_wh, v);
    } else {
      require(v >= 0.0 && v < 1.0, "gamma grid values must be in [0,1)");
      plan.config.gamma = v;
    }
    plan.cdf_max_points = 1;
    const auto sim = run(plan, threads);
    const QueueConfig cfg = plan.effective_config();

    std::optional<double> gu, go, su, so, mb, ms;
    if (cfg.gamma > 0.0) {
      const auto ref = reference_moments(delta, cfg.gamma);
      const auto g = gaussian_loss_probs(cfg.capacity_wh, ref);
      gu = g.p_underflow;
      go = g.p_overflow;
      try {
        const auto s = skew_normal_loss_probs(cfg.capacity_wh, ref);
        su = s.p_underflow;
        so = s.p_overflow;
      } catch (const Error&) {
      }
    }
    if (std::isfinite(cfg.capacity_wh) && delta.mean > cfg.gamma * cfg.capacity_wh) {
      try {
        const auto b = martingale_bounds(theta_star(mgf, cfg.gamma, cfg.capacity_wh), cfg.capacity_wh, demand);
        mb = b.basic_bound;
        ms = b.sharpened_bound;
      } catch (const Error&) {
      }
    }
    out += csv_number(v) + "," + csv_number(sim.p_underflow.value) + "," + csv_number(sim.p_underflow.ci95) + "," +
           csv_number(sim.p_overflow.value) + "," + csv_number(sim.p_overflow.ci95) + "," + csv_optional(gu) + "," +
           csv_optional(go) + "," + csv_optional(su) + "," + csv_optional(so) + "," + csv_optional(mb) + "," +
           csv_optional(ms) + "," + csv_number(sim.mean_stored_wh.value) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// qq

enum class QqReference { kGaussian, kSkewNormal };

struct QqResult {
  std::vector<QqPair> pairs;
  ReferenceMoments reference;
  double max_deviation_wh = 0.0;
};

// Simulated stored-energy quantiles against the normal or skew-normal fit to
// the reference-system moments, at 5% steps.
inline QqResult qq_from_cdf(const EmpiricalCdf& cdf, const ReferenceMoments& ref, QqReference which) {
  QqResult r;
  r.reference = ref;
  if (which == QqReference::kGaussian) {
    r.pairs = qq_pairs(cdf, [&](double p) { return ref.mean_wh + ref.std_dev() * normal_quantile(p); });
  } else {
    const auto fit = fit_skew_normal(ref);
    r.pairs = qq_pairs(cdf, [&](double p) { return fit.quantile(p); });
  }
  r.max_deviation_wh = max_qq_deviation(r.pairs);
  return r;
}

inline QqResult qq_run(const Scenario& sc, QqReference which, unsigned threads = 0) {
  const QueueConfig cfg = sc.plan.effective_config();
  require(cfg.gamma > 0.0, "no reference steady state: gamma = 0");
  const auto ref = reference_moments(detail::scenario_cumulants(sc), cfg.gamma);
  if (which == QqReference::kSkewNormal) fit_skew_normal(ref);  // fail before simulating
  const auto sim = run(sc.plan, threads);
  return qq_from_cdf(sim.cdf, ref, which);
}

inline std::string qq_csv(const QqResult& r) {
  std::string out = "p,reference_q,empirical_q\n";
  for (const auto& p : r.pairs) {
    out += csv_number(p.probability) + "," + csv_number(p.reference_q) + "," + csv_number(p.empirical_q) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// validate

inline Json suite_json(const SuiteReport& report) {
  Json checks = Json::array(), failures = Json::array();
  for (const auto& c : report.checks) {
    checks.push_back(Json{{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    if (!c.passed) failures.push_back(c.name);
  }
  return Json{{"suite", report.suite}, {"passed", report.passed()}, {"checks", checks}, {"failures", failures}};
}

}  // namespace leakq

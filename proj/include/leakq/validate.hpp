#pragma once

// Invariant batteries behind `leakq validate`. Each suite returns a list of
// named checks; a suite passes when every check does.

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "leakq/analytic.hpp"
#include "leakq/dynamics.hpp"
#include "leakq/metrics.hpp"
#include "leakq/sim.hpp"
#include "leakq/sources.hpp"

namespace leakq {

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SuiteReport {
  std::string suite;
  std::vector<Check> checks;

  bool passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
};

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"dynamics", "duality", "convergence", "clt", "bounds"};
  return names;
}

namespace detail {

inline bool close_rel(double a, double b, double rel = 1e-9, double abs_floor = 1e-6) {
  if (a == b) return true;
  return std::abs(a - b) <= std::max(rel * std::max(std::abs(a), std::abs(b)), abs_floor);
}

struct Instance {
  QueueConfig config;
  std::vector<double> supply, demand, delta;
};

// Mixed regimes: mean drift from below to well above gamma*C.
inline Instance random_instance(std::mt19937_64& rng, bool finite_capacity) {
  static constexpr double kGammas[] = {0.0, 0.01, 0.1, 0.5};
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  Instance inst;
  inst.config.gamma = kGammas[rng() % 4];
  inst.config.capacity_wh = 1.0 + 999.0 * unit(rng);
  inst.config.initial_charge_wh = inst.config.capacity_wh * unit(rng);
  const double mean = inst.config.capacity_wh * (unit(rng) * 0.6 - 0.2);
  const double spread = inst.config.capacity_wh * (0.05 + unit(rng));
  const std::size_t n = rng() % 65;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = std::max(0.0, mean + spread * noise(rng) + spread);
    const double s = std::max(0.0, spread + 0.5 * spread * noise(rng));
    inst.supply.push_back(a);
    inst.demand.push_back(s);
    inst.delta.push_back(a - s);
  }
  if (!finite_capacity && rng() % 10 == 0) inst.config.capacity_wh = kInfiniteCapacity;
  return inst;
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace detail

// Closed forms of the backlog agree with the recursion; conservation and
// boundedness hold slot by slot.
inline SuiteReport validate_dynamics(std::uint64_t seed = 1, std::size_t instances = 1000) {
  SuiteReport report{"dynamics", {}};
  std::mt19937_64 rng(seed);
  std::size_t closed_form_bad = 0, conservation_bad = 0, bounds_bad = 0;
  for (std::size_t t = 0; t < instances; ++t) {
    const auto inst = detail::random_instance(rng, false);
    const auto path = simulate_path(inst.config, inst.delta);
    const double r = inst.config.retention();
    double prev = inst.config.initial_charge_wh;
    for (std::size_t n = 0; n <= inst.delta.size(); ++n) {
      const double b = path.stored_at(n);
      if (!detail::close_rel(backlog_minmax(inst.config, inst.delta, n), b) ||
          !detail::close_rel(backlog_dual_form(inst.config, inst.delta, n), b)) {
        ++closed_form_bad;
      }
      if (n == 0) continue;
      const auto& rec = path.records[n - 1];
      if (!detail::close_rel(r * prev + rec.net_charge_wh, rec.stored_wh + rec.overflow_wh - rec.underflow_wh)) {
        ++conservation_bad;
      }
      if (rec.stored_wh < 0.0 || rec.stored_wh > inst.config.capacity_wh ||
          (rec.overflow_wh > 0.0 && rec.underflow_wh > 0.0)) {
        ++bounds_bad;
      }
      prev = rec.stored_wh;
    }
  }
  const std::string of = " of " + std::to_string(instances) + " instances";
  report.checks.push_back({"closed_forms_match_recursion", closed_form_bad == 0,
                           std::to_string(closed_form_bad) + " mismatching slots" + of});
  report.checks.push_back({"conservation", conservation_bad == 0, std::to_string(conservation_bad) + " violations"});
  report.checks.push_back({"boundedness", bounds_bad == 0, std::to_string(bounds_bad) + " violations"});
  return report;
}

struct DualityOutcome {
  std::size_t slots = 0;
  std::size_t mirror_violations = 0;
  std::size_t swap_violations = 0;
};

// Original and dual queue driven by the same (a, s) draws.
inline DualityOutcome coupled_duality_run(const QueueConfig& config, const SourceSpec& source, std::size_t slots,
                                          std::uint64_t seed) {
  require(std::isfinite(config.capacity_wh), "duality requires a finite capacity");
  SlotSampler sampler(source, seed, 0);
  DualityOutcome out;
  out.slots = slots;
  double b = config.initial_charge_wh;
  double d = config.capacity_wh - config.initial_charge_wh;
  for (std::size_t n = 0; n < slots; ++n) {
    const auto [a, s] = sampler.next();
    const auto [da, ds] = dual_slot(a, s, config);
    const auto orig = step(b, a - s, config);
    const auto dual = step(d, da - ds, config);
    b = orig.stored_wh;
    d = dual.stored_wh;
    if (!detail::close_rel(b + d, config.capacity_wh)) ++out.mirror_violations;
    if (!detail::close_rel(orig.underflow_wh, dual.overflow_wh) || !detail::close_rel(orig.overflow_wh, dual.underflow_wh) ||
        (orig.underflow_wh > 0.0) != (dual.overflow_wh > 0.0) || (orig.overflow_wh > 0.0) != (dual.underflow_wh > 0.0)) {
      ++out.swap_violations;
    }
  }
  return out;
}

inline SuiteReport validate_duality(std::uint64_t seed = 1, std::size_t instances = 1000) {
  SuiteReport report{"duality", {}};
  std::mt19937_64 rng(seed);
  std::size_t bad = 0;
  for (std::size_t t = 0; t < instances; ++t) {
    const auto inst = detail::random_instance(rng, true);
    const auto dual = dual_transform(inst.supply, inst.demand, inst.config);
    auto dual_cfg = inst.config;
    dual_cfg.initial_charge_wh = dual.initial_charge_wh;
    const auto p = simulate_path(inst.config, inst.delta);
    const auto q = simulate_path(dual_cfg, net_charge(dual.supply_wh, dual.demand_wh));
    for (std::size_t i = 0; i < p.size(); ++i) {
      const auto &o = p.records[i], &d = q.records[i];
      if (!detail::close_rel(o.stored_wh + d.stored_wh, inst.config.capacity_wh) ||
          !detail::close_rel(o.underflow_wh, d.overflow_wh) || !detail::close_rel(o.overflow_wh, d.underflow_wh)) {
        ++bad;
        break;
      }
    }
  }
  report.checks.push_back({"random_instances", bad == 0,
                           std::to_string(bad) + " of " + std::to_string(instances) + " instances violate B + B' = C"});

  QueueConfig cfg;
  cfg.capacity_wh = 30'000.0;
  cfg.gamma = 0.0093;
  cfg.initial_charge_wh = 15'000.0;
  const auto run = coupled_duality_run(cfg, SourceSpec::gaussian_delta(200.0, 1000.0), 100'000, seed);
  report.checks.push_back({"coupled_run_100k_slots", run.mirror_violations == 0 && run.swap_violations == 0,
                           std::to_string(run.mirror_violations) + " mirror and " + std::to_string(run.swap_violations) +
                               " event-swap violations"});
  return report;
}

struct ConvergenceSummary {
  double deterministic_max_rel_error = 0.0;
  double floor_wh = 0.0;
  double slope = 0.0;
  double ln_retention = 0.0;
  std::size_t fitted_points = 0;
};

// Deterministic probe (delta = 0) against C (1-gamma)^n, and the decay slope
// of a stochastic probe fitted above ten times its noise floor. The floor is
// the largest distance seen between two independent ensembles started from
// the same charge.
inline ConvergenceSummary convergence_summary(std::uint64_t seed, unsigned threads = 0) {
  ConvergenceSummary s;
  QueueConfig cfg;
  cfg.capacity_wh = 40'000.0;
  cfg.gamma = daily_to_slot_leakage(0.20, 24);
  s.ln_retention = std::log1p(-cfg.gamma);

  ConvergenceOptions det;
  det.horizon = 600;
  det.n_replications = 4;
  det.checkpoint_every = 1;
  det.seed = seed;
  const auto zero = SourceSpec::gaussian_delta(0.0, 0.0);
  for (const auto& p : convergence_probe(cfg, zero, {0.0, cfg.capacity_wh}, det, threads)) {
    const double expected = cfg.capacity_wh * std::pow(1.0 - cfg.gamma, static_cast<double>(p.slot));
    s.deterministic_max_rel_error = std::max(s.deterministic_max_rel_error, std::abs(p.distance_wh - expected) / expected);
  }

  ConvergenceOptions sto;
  sto.horizon = 600;
  sto.n_replications = 2000;
  sto.checkpoint_every = 10;
  sto.seed = seed;
  const auto source = SourceSpec::gaussian_delta(200.0, 1000.0);
  const auto probe = convergence_probe(cfg, source, {0.0, cfg.capacity_wh}, sto, threads);
  const auto noise = convergence_probe(cfg, source, {cfg.capacity_wh / 2.0, cfg.capacity_wh / 2.0}, sto, threads);
  for (const auto& p : noise) s.floor_wh = std::max(s.floor_wh, p.distance_wh);
  s.slope = fit_log_decay(probe, 10.0 * s.floor_wh);
  for (const auto& p : probe) s.fitted_points += p.distance_wh > 10.0 * s.floor_wh;
  return s;
}

inline SuiteReport validate_convergence(std::uint64_t seed = 1, unsigned threads = 0) {
  SuiteReport report{"convergence", {}};
  const auto s = convergence_summary(seed, threads);
  report.checks.push_back({"deterministic_probe_exact", s.deterministic_max_rel_error <= 1e-9,
                           "max relative error " + detail::fmt(s.deterministic_max_rel_error)});
  report.checks.push_back({"stochastic_decay_rate", s.fitted_points >= 2 && s.slope <= 0.9 * s.ln_retention,
                           "slope " + detail::fmt(s.slope) + " per slot, ln(1-gamma) " + detail::fmt(s.ln_retention) +
                               ", " + std::to_string(s.fitted_points) + " points above floor " + detail::fmt(s.floor_wh)});

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n1(0.0, 1.0), n2(0.5, 2.0), noise(0.0, 1.5);
  std::size_t failures = 0;
  for (int t = 0; t < 50; ++t) {
    std::vector<double> x1(200), x2(150), y(100);
    for (auto& v : x1) v = n1(rng);
    for (auto& v : x2) v = n2(rng);
    for (auto& v : y) v = noise(rng);
    if (!kr_lemma_checks(x1, x2, 0.7, 1.0, y).all_hold()) ++failures;
  }
  report.checks.push_back({"kr_contraction_properties", failures == 0, std::to_string(failures) + " of 50 trials failed"});
  return report;
}

struct CltOutcome {
  std::vector<CltPoint> points;
  double dkw_band = 0.0;  // 95% DKW half-width for n samples
  bool strictly_decreasing = false;
  bool overall_drop_exceeds_band = false;
  bool passed() const { return strictly_decreasing && overall_drop_exceeds_band; }
};

// Centered unit exponential net charge (skewness 2) through the reference
// series for decreasing gamma.
inline CltOutcome clt_outcome(std::uint64_t seed, std::size_t n = 100'000, unsigned threads = 0) {
  CltOutcome out;
  const std::vector<double> gammas{0.1, 0.03, 0.01, 0.003};
  out.points = clt_probe([](Stream& rng) { return rng.exponential(1.0) - 1.0; }, 0.0, 1.0, gammas, n, seed, threads);
  out.dkw_band = std::sqrt(std::log(2.0 / 0.05) / (2.0 * static_cast<double>(n)));
  out.strictly_decreasing = true;
  for (std::size_t i = 1; i < out.points.size(); ++i) {
    if (!(out.points[i].ks < out.points[i - 1].ks)) out.strictly_decreasing = false;
  }
  out.overall_drop_exceeds_band = out.points.front().ks - out.points.back().ks > 2.0 * out.dkw_band;
  return out;
}

inline SuiteReport validate_clt(std::uint64_t seed = 1, unsigned threads = 0) {
  SuiteReport report{"clt", {}};
  const auto out = clt_outcome(seed, 100'000, threads);
  std::string ks;
  for (const auto& p : out.points) ks += (ks.empty() ? "" : ", ") + ("gamma " + detail::fmt(p.gamma) + ": " + detail::fmt(p.ks));
  report.checks.push_back({"ks_strictly_decreasing", out.strictly_decreasing, ks});
  report.checks.push_back({"drop_beyond_dkw_band", out.overall_drop_exceeds_band,
                           "first - last = " + detail::fmt(out.points.front().ks - out.points.back().ks) +
                               ", 2 x DKW band = " + detail::fmt(2.0 * out.dkw_band)});
  return report;
}

struct BoundCase {
  std::string scenario;
  double capacity_wh = 0.0;
  double simulated_p_u = 0.0;
  double simulated_ci = 0.0;
  BoundReport bound;
};

// Capacity-dominated scenarios with little randomness: wind supply with
// constant-plus-exponential demand, and Gaussian net charge.
inline std::vector<BoundCase> bound_cases(std::uint64_t seed, std::size_t slots_per_rep = 100'000,
                                          unsigned threads = 0) {
  struct Setup {
    std::string name;
    SourceSpec source;
  };
  std::vector<Setup> setups;
  setups.push_back({"wind_const_plus_exp_demand", {WindSupplyModel{}, ConstPlusExpDemand{350.0, 50.0}}});
  setups.push_back({"gaussian_delta", SourceSpec::gaussian_delta(200.0, 50.0 * std::sqrt(2.0))});
  std::vector<BoundCase> out;
  for (const auto& setup : setups) {
    const auto mgf = mgf_for(setup.source);
    const auto demand = demand_for_bound(setup.source.demand);
    for (double c : {500.0, 1000.0, 2000.0}) {
      SimPlan plan;
      plan.config.capacity_wh = c;
      plan.config.gamma = 0.0093;
      plan.config.initial_charge_wh = c;
      plan.source = setup.source;
      plan.warmup_slots = default_warmup(plan.config.gamma);
      plan.n_slots = plan.warmup_slots + slots_per_rep;
      plan.master_seed = seed;
      plan.cdf_max_points = 1;
      const auto sim = run(plan, threads);
      BoundCase bc;
      bc.scenario = setup.name;
      bc.capacity_wh = c;
      bc.simulated_p_u = sim.p_underflow.value;
      bc.simulated_ci = sim.p_underflow.ci95;
      bc.bound = martingale_bounds(theta_star(mgf, plan.config.gamma, c), c, demand);
      out.push_back(std::move(bc));
    }
  }
  return out;
}

inline SuiteReport validate_bounds(std::uint64_t seed = 1, unsigned threads = 0) {
  SuiteReport report{"bounds", {}};
  for (const auto& bc : bound_cases(seed, 100'000, threads)) {
    const std::string tag = bc.scenario + "_C" + std::to_string(static_cast<long>(bc.capacity_wh));
    const double sharp = bc.bound.sharpened_bound.value_or(bc.bound.basic_bound);
    report.checks.push_back({tag + "_basic", bc.simulated_p_u <= bc.bound.basic_bound,
                             "simulated " + detail::fmt(bc.simulated_p_u) + " vs bound " + detail::fmt(bc.bound.basic_bound)});
    report.checks.push_back({tag + "_sharpened", bc.simulated_p_u <= sharp && sharp <= bc.bound.basic_bound,
                             "simulated " + detail::fmt(bc.simulated_p_u) + " vs sharpened " + detail::fmt(sharp)});
  }
  return report;
}

inline SuiteReport run_suite(const std::string& name, std::uint64_t seed = 1, unsigned threads = 0) {
  if (name == "dynamics") return validate_dynamics(seed);
  if (name == "duality") return validate_duality(seed);
  if (name == "convergence") return validate_convergence(seed, threads);
  if (name == "clt") return validate_clt(seed, threads);
  if (name == "bounds") return validate_bounds(seed, threads);
  throw Error("unknown suite '" + name + "'");
}

}  // namespace leakq

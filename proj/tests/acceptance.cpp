// Acceptance checks. One PASS/FAIL line per criterion; `--only N` runs one.
// Exit status is nonzero when any selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "leakq/leakq.hpp"

namespace {

using namespace leakq;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 6) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

constexpr double kGamma = 0.0093;

// 1. slot leakage from daily fraction
Outcome leakage_conversion() {
  const std::pair<double, double> table[] = {{0.05, 0.0021}, {0.10, 0.0044}, {0.20, 0.0093}, {0.50, 0.0285}};
  Outcome o{true, ""};
  for (const auto& [f, expected] : table) {
    const double g = daily_to_slot_leakage(f, 24);
    o.pass = o.pass && std::abs(g - expected) <= 5e-5;
    o.detail += fmt(f) + "/day -> " + fmt(g) + " (want " + fmt(expected) + "); ";
  }
  return o;
}

// 2. E[B^r] = E[delta] / gamma
Outcome reference_mean() {
  const double mean = reference_moments(200.0, 1e6, 0.0, kGamma).mean_wh;
  const double rel = std::abs(mean - 21500.0) / 21500.0;
  return {rel <= 0.005, "E[B^r] = " + fmt(mean, 8) + " Wh, relative gap to 21.5 kWh " + fmt(rel)};
}

// 3. closed forms vs recursion on random instances
Outcome theorem_oracle() {
  const auto report = validate_dynamics(2024, 1000);
  const auto& c = report.checks.front();
  return {c.passed, c.detail};
}

// 4. coupled original and dual queue
Outcome duality() {
  QueueConfig cfg;
  cfg.capacity_wh = 30000.0;
  cfg.gamma = kGamma;
  cfg.initial_charge_wh = 12000.0;
  const auto g = coupled_duality_run(cfg, SourceSpec::gaussian_delta(200.0, 1000.0), 100'000, 1);
  const auto w = coupled_duality_run(cfg, {WindSupplyModel{}, ConstPlusExpDemand{750.0, 50.0}}, 100'000, 2);
  const std::size_t bad = g.mirror_violations + g.swap_violations + w.mirror_violations + w.swap_violations;
  return {bad == 0, "2 x 100000 coupled slots, " + std::to_string(bad) + " violations of B + B' = C or event swap"};
}

struct GaussianRegimeRuns {
  std::map<double, SteadyStateSummary> runs;  // keyed by capacity
  ReferenceMoments ref;
};

const GaussianRegimeRuns& gaussian_regime_runs() {
  static const GaussianRegimeRuns cached = [] {
    GaussianRegimeRuns r;
    r.ref = reference_moments(200.0, 1e6, 0.0, kGamma);
    for (double c : {30000.0, 40000.0, 50000.0}) {
      SimPlan plan;
      plan.config.capacity_wh = c;
      plan.config.gamma = kGamma;
      plan.config.initial_charge_wh = std::min(c, r.ref.mean_wh);
      plan.source = SourceSpec::gaussian_delta(200.0, 1000.0);
      plan.warmup_slots = default_warmup(kGamma);
      plan.n_replications = 20;
      plan.n_slots = plan.warmup_slots + 500'000;  // 10^7 post-warmup slots in total
      plan.master_seed = 41;
      plan.cdf_max_points = 1;
      r.runs.emplace(c, run(plan));
    }
    return r;
  }();
  return cached;
}

bool within_factor(double simulated, double predicted, double factor) {
  if (simulated <= 0.0 || predicted <= 0.0) return false;
  const double ratio = simulated / predicted;
  return ratio <= factor && ratio >= 1.0 / factor;
}

// 5. simulated loss frequencies vs the Gaussian surrogate
Outcome gaussian_regime() {
  const auto& r = gaussian_regime_runs();
  Outcome o{true, ""};
  for (const auto& [c, s] : r.runs) {
    const auto g = gaussian_loss_probs(c, r.ref);
    const bool ok = within_factor(s.p_underflow.value, g.p_underflow, 1.5);
    o.pass = o.pass && ok;
    o.detail += "C=" + fmt(c / 1000.0) + "kWh p_u sim " + fmt(s.p_underflow.value, 4) + " +- " +
                fmt(s.p_underflow.ci95, 2) + " vs gauss " + fmt(g.p_underflow, 4) + (ok ? "" : " (outside x1.5)") + "; ";
  }
  const auto& s40 = r.runs.at(40000.0);
  const auto g40 = gaussian_loss_probs(40000.0, r.ref);
  const bool ok = within_factor(s40.p_overflow.value, g40.p_overflow, 2.0);
  o.pass = o.pass && ok;
  o.detail += "C=40kWh p_o sim " + fmt(s40.p_overflow.value, 4) + " +- " + fmt(s40.p_overflow.ci95, 2) + " vs gauss " +
              fmt(g40.p_overflow, 4) + (ok ? "" : " (outside x2)");
  return o;
}

// 6. underflow frequency does not depend on capacity once C > E[B^r]
Outcome capacity_independence() {
  const auto& r = gaussian_regime_runs();
  const auto& a = r.runs.at(30000.0).p_underflow;
  const auto& b = r.runs.at(50000.0).p_underflow;
  const double diff = std::abs(a.value - b.value);
  return {diff < a.ci95 + b.ci95, "p_u(30kWh) = " + fmt(a.value, 4) + " +- " + fmt(a.ci95, 2) + ", p_u(50kWh) = " +
                                      fmt(b.value, 4) + " +- " + fmt(b.ci95, 2) + ", |diff| " + fmt(diff, 3)};
}

// 7. KR convergence at the leakage rate
Outcome convergence_rate() {
  const auto s = convergence_summary(7);
  const bool det = s.deterministic_max_rel_error <= 1e-9;
  const bool rate = s.fitted_points >= 2 && s.slope <= 0.9 * s.ln_retention;
  return {det && rate, "deterministic max rel error " + fmt(s.deterministic_max_rel_error, 3) + "; fitted slope " +
                           fmt(s.slope) + " vs 0.9 ln(1-gamma) = " + fmt(0.9 * s.ln_retention) + " over " +
                           std::to_string(s.fitted_points) + " checkpoints above 10x floor " + fmt(s.floor_wh, 4) + " Wh"};
}

// 8. K-S distance to the normal shrinks as gamma decreases
Outcome clt() {
  const auto out = clt_outcome(8, 100'000);
  std::string d;
  for (const auto& p : out.points) d += "gamma " + fmt(p.gamma) + ": KS " + fmt(p.ks, 4) + "; ";
  d += "strictly decreasing " + std::string(out.strictly_decreasing ? "yes" : "no") + ", first - last " +
       fmt(out.points.front().ks - out.points.back().ks, 4) + " vs 2 x DKW " + fmt(2.0 * out.dkw_band, 4);
  return {out.passed(), d};
}

// 9. martingale bounds dominate simulated underflow
Outcome martingale_validity() {
  Outcome o{true, ""};
  for (const auto& bc : bound_cases(9, 500'000)) {
    const double sharp = bc.bound.sharpened_bound.value_or(bc.bound.basic_bound);
    const bool ok = bc.simulated_p_u <= bc.bound.basic_bound && bc.simulated_p_u <= sharp && sharp <= bc.bound.basic_bound;
    o.pass = o.pass && ok;
    o.detail += bc.scenario + " C=" + fmt(bc.capacity_wh) + ": sim " + fmt(bc.simulated_p_u, 4) + " basic " +
                fmt(bc.bound.basic_bound, 4) + " sharp " + fmt(sharp, 4) + (ok ? "" : " VIOLATED") + "; ";
  }
  return o;
}

// 10. wind energy per slot
Outcome wind_moments() {
  const auto a = wind_supply(WindTurbineParams{}, WeibullWind{7.0, 3.0}, 10, 1'000'000, 1.0);
  const auto m = moments(a);
  const bool ok = std::abs(m.mean - 1000.0) <= 15.0 && std::abs(m.std_dev() - 1050.0) <= 25.0;
  return {ok, "E[a] = " + fmt(m.mean) + " Wh, sd = " + fmt(m.std_dev()) + " Wh over 10^6 slots"};
}

// 11. Q-Q shape of the wind scenario at two capacities
Outcome qq_behaviour() {
  const SourceSpec source{WindSupplyModel{}, ConstantDemand{800.0}};
  const auto ref = reference_moments(net_charge_cumulants(source), kGamma);
  auto simulate = [&](double c) {
    SimPlan plan;
    plan.config.capacity_wh = c;
    plan.config.gamma = kGamma;
    plan.config.initial_charge_wh = std::min(c, ref.mean_wh);
    plan.source = source;
    plan.warmup_slots = default_warmup(kGamma);
    plan.n_replications = 20;
    plan.n_slots = plan.warmup_slots + 500'000;
    plan.master_seed = 11;
    return run(plan).cdf;
  };
  const auto cdf40 = simulate(40000.0);
  const auto cdf10 = simulate(10000.0);
  const double sd = ref.std_dev();
  const double g40 = qq_from_cdf(cdf40, ref, QqReference::kGaussian).max_deviation_wh / sd;
  const double s40 = qq_from_cdf(cdf40, ref, QqReference::kSkewNormal).max_deviation_wh / sd;
  const double g10 = qq_from_cdf(cdf10, ref, QqReference::kGaussian).max_deviation_wh / sd;
  const bool near = g40 < 0.15, improved = s40 < g40, far = g10 > 0.5;
  return {near && improved && far,
          "max |dQ| / sd(B^r): gaussian C=40kWh " + fmt(g40, 4) + (near ? " < 0.15" : " NOT < 0.15") +
              "; skew-normal C=40kWh " + fmt(s40, 4) + (improved ? " < gaussian" : " NOT < gaussian") +
              "; gaussian C=10kWh " + fmt(g10, 4) + (far ? " > 0.5" : " NOT > 0.5") + " (sd " + fmt(sd) + " Wh)"};
}

// 12. byte-identical reruns across thread counts
Outcome determinism() {
  const std::string text =
      "[queue]\ncapacity_wh = 40000\nleakage_per_day = 0.2\ninitial_charge_wh = 20000\n"
      "[supply]\ntype = wind\n[demand]\ntype = const_plus_exp\nbase_wh = 750\nexp_mean_wh = 50\n"
      "[simulation]\nslots = 20000\nreplications = 6\nseed = 12\n";
  const auto sc = parse_scenario_text(text, "determinism.ini");
  auto outputs = [&](unsigned threads) {
    std::vector<std::string> out;
    const auto s = run(sc.plan, threads);
    out.push_back(simulate_json(sc, s).dump(2));
    out.push_back(cdf_csv(s.cdf));
    out.push_back(analyze_json(sc).dump(2));
    out.push_back(sweep_csv(sc, SweepParam::kCapacity, {10000.0, 30000.0}, threads));
    out.push_back(qq_csv(qq_run(sc, QqReference::kSkewNormal, threads)));
    out.push_back(suite_json(validate_convergence(3, threads)).dump(2));
    return out;
  };
  const auto a = outputs(1), b = outputs(1), c = outputs(4);
  const char* names[] = {"simulate json", "cdf csv", "analyze", "sweep", "qq", "validate"};
  std::string detail;
  bool ok = true;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool same = a[i] == b[i] && a[i] == c[i];
    ok = ok && same;
    detail += std::string(names[i]) + (same ? " identical" : " DIFFERS") + "; ";
  }
  return {ok, detail + "threads 1, 1, 4"};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> check;
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: acceptance [--only N]\n");
      return 2;
    }
  }
  const std::vector<Criterion> criteria{
      {1, "leakage conversion", leakage_conversion},
      {2, "reference mean", reference_mean},
      {3, "closed-form backlog oracle", theorem_oracle},
      {4, "duality", duality},
      {5, "gaussian regime reproduction", gaussian_regime},
      {6, "capacity independence of underflow", capacity_independence},
      {7, "convergence rate", convergence_rate},
      {8, "CLT probe", clt},
      {9, "martingale bound validity", martingale_validity},
      {10, "wind source moments", wind_moments},
      {11, "Q-Q behaviour", qq_behaviour},
      {12, "determinism", determinism},
  };
  if (only < 0 || only > static_cast<int>(criteria.size())) {
    std::fprintf(stderr, "no criterion %d\n", only);
    return 2;
  }
  int failures = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %2d %s  %s (%.1fs): %s\n", c.id, o.pass ? "PASS" : "FAIL", c.name, secs, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}

#pragma once

// Monte Carlo estimation of steady-state behaviour: independent replications
// with warmup, per-slot event frequencies with normal-approximation
// confidence intervals, coupled-ensemble convergence probes and the dual
// queue.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "leakq/dynamics.hpp"
#include "leakq/error.hpp"
#include "leakq/metrics.hpp"
#include "leakq/parallel.hpp"
#include "leakq/sources.hpp"

namespace leakq {

// About ten leakage time constants, never fewer than 10^4 slots; 10^5 slots
// without leakage.
inline std::size_t default_warmup(double gamma) {
  if (gamma <= 0.0) return 100'000;
  return std::max<std::size_t>(static_cast<std::size_t>(std::ceil(10.0 / gamma)), 10'000);
}

struct SimPlan {
  QueueConfig config;
  SourceSpec source;
  std::optional<ChargingConstraints> constraints;
  DischargeTerm discharge_term = DischargeTerm::kCorrected;
  std::size_t n_slots = 0;  // per replication, warmup included
  std::size_t n_replications = 20;
  std::size_t warmup_slots = 0;
  std::uint64_t master_seed = 1;
  bool dual = false;  // simulate the dual queue instead of the original
  std::size_t cdf_max_points = 1'000'000;

  // Queue actually simulated: capacity scaled by the depth of discharge.
  QueueConfig effective_config() const { return constraints ? constraints->apply_to(config) : config; }

  void validate() const {
    config.validate();
    source.validate();
    if (constraints) constraints->validate();
    require(n_slots > 0, "n_slots must be > 0");
    require(warmup_slots < n_slots, "warmup_slots must be < n_slots");
    require(n_replications >= 1, "n_replications must be >= 1");
    require(cdf_max_points >= 1, "cdf_max_points must be >= 1");
    if (dual) require(std::isfinite(effective_config().capacity_wh), "the dual queue requires a finite capacity");
    auto check_trace = [&](const TraceSource& t, const char* which) {
      if (!t.loop && t.size() < n_slots) {
        throw Error(std::string(which) + " trace has " + std::to_string(t.size()) + " values but the plan needs " +
                    std::to_string(n_slots) + " per replication (enable loop)");
      }
    };
    if (const auto* t = std::get_if<TraceSource>(&source.supply)) check_trace(*t, "supply");
    if (const auto* t = std::get_if<TraceSource>(&source.demand)) check_trace(*t, "demand");
  }

  std::size_t post_warmup_slots() const { return n_slots - warmup_slots; }
};

struct Estimate {
  double value = 0.0;
  double ci95 = std::numeric_limits<double>::quiet_NaN();  // half-width; NaN with one replication
};

struct ReplicationSummary {
  double p_underflow = 0.0;
  double p_overflow = 0.0;
  double mean_stored_wh = 0.0;
  double mean_loss_wh = 0.0;
  double mean_waste_wh = 0.0;
};

struct SteadyStateSummary {
  MomentSummary moments;  // post-warmup stored energy, all slots
  EmpiricalCdf cdf;       // post-warmup stored energy, every cdf_stride-th slot
  std::size_t cdf_stride = 1;
  std::size_t post_warmup_slots = 0;  // across all replications
  Estimate p_underflow;
  Estimate p_overflow;
  Estimate mean_stored_wh;
  Estimate mean_loss_wh;
  Estimate mean_waste_wh;
  std::vector<ReplicationSummary> replications;
};

namespace detail {

// Mean of per-replication values with a 95% normal-approximation half-width.
inline Estimate estimate(const std::vector<ReplicationSummary>& reps, double ReplicationSummary::*field) {
  Estimate e;
  const double n = static_cast<double>(reps.size());
  double sum = 0.0;
  for (const auto& r : reps) sum += r.*field;
  e.value = sum / n;
  if (reps.size() >= 2) {
    double ss = 0.0;
    for (const auto& r : reps) ss += (r.*field - e.value) * (r.*field - e.value);
    e.ci95 = 1.959963984540054 * std::sqrt(ss / (n - 1.0) / n);
  }
  return e;
}

struct ReplicationResult {
  ReplicationSummary summary;
  MomentAccumulator moments;
  std::vector<double> retained;
};

// Net charge entering the simulated queue for one drawn (a, s) pair.
inline double slot_net_charge(const SimPlan& plan, const QueueConfig& cfg, double supply, double demand) {
  double delta;
  if (plan.constraints) {
    delta = effective_net_charge(supply - demand, *plan.constraints, plan.discharge_term);
    if (plan.dual) delta = cfg.gamma * cfg.capacity_wh - delta;
  } else if (plan.dual) {
    const auto [a, s] = dual_slot(supply, demand, cfg);
    delta = a - s;
  } else {
    delta = supply - demand;
  }
  return delta;
}

inline std::size_t trace_offset(const SourceSpec& source, const SimPlan& plan, std::size_t replication) {
  const auto* a = std::get_if<TraceSource>(&source.supply);
  const auto* s = std::get_if<TraceSource>(&source.demand);
  const bool looping = (a && a->loop) || (s && s->loop);
  return looping ? replication * plan.n_slots : 0;
}

inline ReplicationResult run_replication(const SimPlan& plan, std::size_t r, std::size_t stride) {
  const QueueConfig cfg = plan.effective_config();
  SlotSampler sampler(plan.source, plan.master_seed, r, trace_offset(plan.source, plan, r));
  ReplicationResult out;
  out.retained.reserve(plan.post_warmup_slots() / stride + 1);
  double stored = plan.dual ? cfg.capacity_wh - cfg.initial_charge_wh : cfg.initial_charge_wh;
  std::size_t underflows = 0, overflows = 0;
  double loss = 0.0, waste = 0.0, level = 0.0;
  for (std::size_t n = 0; n < plan.n_slots; ++n) {
    const auto [a, s] = sampler.next();
    const SlotRecord rec = step(stored, slot_net_charge(plan, cfg, a, s), cfg);
    stored = rec.stored_wh;
    if (n < plan.warmup_slots) continue;
    const std::size_t k = n - plan.warmup_slots;
    underflows += rec.underflow_wh > 0.0;
    overflows += rec.overflow_wh > 0.0;
    loss += rec.underflow_wh;
    waste += rec.overflow_wh;
    level += stored;
    out.moments.add(stored);
    if (k % stride == 0) out.retained.push_back(stored);
  }
  const double m = static_cast<double>(plan.post_warmup_slots());
  out.summary = {static_cast<double>(underflows) / m, static_cast<double>(overflows) / m, level / m, loss / m, waste / m};
  return out;
}

}  // namespace detail

// Replication r draws from streams (master_seed, r, *). Results are merged in
// replication order, so the summary does not depend on `threads`.
inline SteadyStateSummary run(const SimPlan& plan, unsigned threads = 0) {
  plan.validate();
  const std::size_t total = plan.post_warmup_slots() * plan.n_replications;
  const std::size_t stride = std::max<std::size_t>(1, (total + plan.cdf_max_points - 1) / plan.cdf_max_points);
  std::vector<detail::ReplicationResult> results(plan.n_replications);
  parallel_for(plan.n_replications, threads,
               [&](std::size_t r) { results[r] = detail::run_replication(plan, r, stride); });

  SteadyStateSummary summary;
  summary.cdf_stride = stride;
  summary.post_warmup_slots = total;
  MomentAccumulator acc;
  std::vector<double> retained;
  for (auto& r : results) {
    acc.merge(r.moments);
    retained.insert(retained.end(), r.retained.begin(), r.retained.end());
    summary.replications.push_back(r.summary);
  }
  if (acc.count() >= 2) summary.moments = acc.summary();
  else summary.moments = {acc.count(), acc.mean(), 0.0, std::numeric_limits<double>::quiet_NaN()};
  summary.cdf = EmpiricalCdf(std::move(retained));
  summary.p_underflow = detail::estimate(summary.replications, &ReplicationSummary::p_underflow);
  summary.p_overflow = detail::estimate(summary.replications, &ReplicationSummary::p_overflow);
  summary.mean_stored_wh = detail::estimate(summary.replications, &ReplicationSummary::mean_stored_wh);
  summary.mean_loss_wh = detail::estimate(summary.replications, &ReplicationSummary::mean_loss_wh);
  summary.mean_waste_wh = detail::estimate(summary.replications, &ReplicationSummary::mean_waste_wh);
  return summary;
}

// Underflow frequency of the original queue obtained as the overflow
// frequency of its dual, driven by the same random streams.
inline double dual_underflow_via_overflow(const SimPlan& plan, unsigned threads = 0) {
  SimPlan dual = plan;
  dual.dual = !plan.dual;
  dual.cdf_max_points = 1;
  return run(dual, threads).p_overflow.value;
}

// ---------------------------------------------------------------------------

enum class Coupling { kIndependent, kShared };

struct ConvergencePoint {
  std::size_t slot = 0;
  double distance_wh = 0.0;
};

struct ConvergenceOptions {
  std::size_t horizon = 1000;
  std::size_t n_replications = 1000;
  std::size_t checkpoint_every = 10;
  std::uint64_t seed = 1;
  Coupling coupling = Coupling::kIndependent;
};

// Two ensembles of the same queue started from different initial charges.
// At every checkpoint (slot 0 included) reports the KR distance between the
// two empirical stored-energy distributions. Independent ensembles use
// streams 2r and 2r+1; shared ones both use 2r.
inline std::vector<ConvergencePoint> convergence_probe(const QueueConfig& config, const SourceSpec& source,
                                                       std::pair<double, double> initial_pair,
                                                       const ConvergenceOptions& options = {},
                                                       unsigned threads = 0) {
  config.validate();
  source.validate();
  for (double b0 : {initial_pair.first, initial_pair.second}) {
    require(b0 >= 0.0 && b0 <= config.capacity_wh, "initial charges must lie in [0, C]");
  }
  require(options.n_replications >= 1 && options.checkpoint_every >= 1, "invalid convergence probe options");
  const std::size_t checkpoints = options.horizon / options.checkpoint_every + 1;
  const std::size_t reps = options.n_replications;
  std::vector<double> a(checkpoints * reps), b(checkpoints * reps);

  parallel_for(reps, threads, [&](std::size_t r) {
    const std::size_t stream_b = options.coupling == Coupling::kShared ? 2 * r : 2 * r + 1;
    auto evolve = [&](double initial, std::size_t stream, std::vector<double>& out) {
      SlotSampler sampler(source, options.seed, stream);
      double stored = initial;
      out[r] = stored;
      for (std::size_t n = 1; n <= options.horizon; ++n) {
        const auto [supply, demand] = sampler.next();
        stored = step(stored, supply - demand, config).stored_wh;
        if (n % options.checkpoint_every == 0) out[(n / options.checkpoint_every) * reps + r] = stored;
      }
    };
    evolve(initial_pair.first, 2 * r, a);
    evolve(initial_pair.second, stream_b, b);
  });

  std::vector<ConvergencePoint> out;
  out.reserve(checkpoints);
  for (std::size_t c = 0; c < checkpoints; ++c) {
    const std::span<const double> xa(a.data() + c * reps, reps), xb(b.data() + c * reps, reps);
    out.push_back({c * options.checkpoint_every, kr_distance(xa, xb)});
  }
  return out;
}

// Least-squares slope of ln(distance) against slot over the points whose
// distance exceeds `floor_wh`. NaN when fewer than two points qualify.
inline double fit_log_decay(std::span<const ConvergencePoint> points, double floor_wh) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t n = 0;
  for (const auto& p : points) {
    if (!(p.distance_wh > floor_wh)) continue;
    const double x = static_cast<double>(p.slot), y = std::log(p.distance_wh);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const double dn = static_cast<double>(n);
  return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

}  // namespace leakq

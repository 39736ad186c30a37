#pragma once

// Discrete-time evolution of a leakage queue: an energy store of capacity C
// that keeps a fraction (1 - gamma) of its content from one slot to the next
// and then absorbs the slot's net charge delta = supply - demand.
//
//   B(n)   = min{ [ (1-gamma) B(n-1) + delta(n) ]^+, C }
//   l_o(n) = [ (1-gamma) B(n-1) + delta(n) - C ]^+      (wasted supply)
//   l_u(n) = [ -(1-gamma) B(n-1) - delta(n) ]^+         (lost demand)
//
// Everything here is a pure function of its arguments. Energies are Wh.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "leakq/error.hpp"

namespace leakq {

inline constexpr double kInfiniteCapacity = std::numeric_limits<double>::infinity();

struct QueueConfig {
  double capacity_wh = kInfiniteCapacity;
  double gamma = 0.0;  // self-discharge ratio per slot
  double initial_charge_wh = 0.0;
  double slot_hours = 1.0;

  double retention() const { return 1.0 - gamma; }

  void validate() const {
    require(!std::isnan(capacity_wh) && capacity_wh >= 0.0, "capacity_wh must be >= 0 (or infinite)");
    require(std::isfinite(gamma) && gamma >= 0.0 && gamma < 1.0, "gamma must satisfy 0 <= gamma < 1");
    require(std::isfinite(initial_charge_wh) && initial_charge_wh >= 0.0 &&
                initial_charge_wh <= capacity_wh,
            "initial_charge_wh must lie in [0, capacity_wh]");
    require(std::isfinite(slot_hours) && slot_hours > 0.0, "slot_hours must be > 0");
  }
};

struct SlotRecord {
  double stored_wh = 0.0;
  double overflow_wh = 0.0;
  double underflow_wh = 0.0;
  double net_charge_wh = 0.0;
};

struct SlotPath {
  QueueConfig config;
  std::vector<SlotRecord> records;  // records[i] is slot n = i + 1

  std::size_t size() const { return records.size(); }
  // Stored energy after slot n; n = 0 is the initial charge.
  double stored_at(std::size_t n) const {
    return n == 0 ? config.initial_charge_wh : records.at(n - 1).stored_wh;
  }
};

// Charging limits applied to the raw net charge before it enters the store.
// The store itself then uses capacity C * depth_of_discharge.
struct ChargingConstraints {
  double depth_of_discharge = 1.0;
  double charge_rate_wh = kInfiniteCapacity;
  double discharge_rate_wh = kInfiniteCapacity;
  double efficiency = 1.0;

  void validate() const {
    require(depth_of_discharge > 0.0 && depth_of_discharge <= 1.0, "depth_of_discharge must be in (0,1]");
    require(charge_rate_wh > 0.0, "charge_rate_wh must be > 0");
    require(discharge_rate_wh > 0.0, "discharge_rate_wh must be > 0");
    require(efficiency > 0.0 && efficiency <= 1.0, "efficiency must be in (0,1]");
  }

  QueueConfig apply_to(QueueConfig config) const {
    config.capacity_wh *= depth_of_discharge;
    config.initial_charge_wh = std::min(config.initial_charge_wh, config.capacity_wh);
    return config;
  }
};

// kCorrected caps the discharge by min{[-delta]^+, rate}. kLiteral evaluates
// min{[delta]^+, rate} for the discharge term, as the formula is often
// printed; it is kept only for side-by-side comparison.
enum class DischargeTerm { kCorrected, kLiteral };

inline SlotRecord step(double prev_stored_wh, double net_charge_wh, const QueueConfig& config) {
  require_finite(prev_stored_wh, "prev_stored");
  require_finite(net_charge_wh, "net_charge");
  const double level = config.retention() * prev_stored_wh + net_charge_wh;
  SlotRecord r;
  r.net_charge_wh = net_charge_wh;
  if (level < 0.0) {
    r.underflow_wh = -level;
  } else if (level > config.capacity_wh) {
    r.stored_wh = config.capacity_wh;
    r.overflow_wh = level - config.capacity_wh;
  } else {
    r.stored_wh = level;
  }
  return r;
}

inline SlotPath simulate_path(const QueueConfig& config, std::span<const double> net_charges) {
  config.validate();
  SlotPath path{config, {}};
  path.records.reserve(net_charges.size());
  double stored = config.initial_charge_wh;
  for (double delta : net_charges) {
    const SlotRecord r = step(stored, delta, config);
    stored = r.stored_wh;
    path.records.push_back(r);
  }
  return path;
}

namespace detail {

// weighted[j] = Delta_gamma(j, n) = sum_{k=j+1}^{n} delta(k) retention^{n-k}, j = 0..n.
// net_charges[k-1] holds delta(k).
inline std::vector<double> accumulated_drift(std::span<const double> net_charges, std::size_t n,
                                             double retention) {
  std::vector<double> drift(n + 1, 0.0);
  double weight = 1.0;
  for (std::size_t j = n; j > 0; --j) {
    drift[j - 1] = drift[j] + net_charges[j - 1] * weight;
    weight *= retention;
  }
  return drift;
}

inline void check_slot_index(std::span<const double> net_charges, std::size_t n) {
  require(n <= net_charges.size(), "slot index exceeds the length of the net-charge sequence");
}

}  // namespace detail

// Non-recursive stored energy:
//   B(n) = min_{0<=m<=n} max_{m<=j<=n} { C_m r^{n-m} 1{j=m} + Delta(j,n) }
// with C_0 = B(0), C_m = C for m > 0 and r = 1 - gamma. O(n^2); used as an
// oracle for simulate_path.
inline double backlog_minmax(const QueueConfig& config, std::span<const double> net_charges, std::size_t n) {
  config.validate();
  detail::check_slot_index(net_charges, n);
  const double r = config.retention();
  const auto drift = detail::accumulated_drift(net_charges, n, r);
  double best = kInfiniteCapacity;
  for (std::size_t m = 0; m <= n; ++m) {
    const double cap_m = m == 0 ? config.initial_charge_wh : config.capacity_wh;
    double inner = cap_m * std::pow(r, static_cast<double>(n - m)) + drift[m];
    for (std::size_t j = m + 1; j <= n; ++j) inner = std::max(inner, drift[j]);
    best = std::min(best, inner);
  }
  return best;
}

// Dual form obtained by applying backlog_minmax to the dual queue:
//   B(n) = max_{0<=m<=n} min_{m<=j<=n} { B(0) r^n 1{j=m=0} + C r^{n-j} 1{j>m} + Delta(j,n) }
inline double backlog_dual_form(const QueueConfig& config, std::span<const double> net_charges,
                                std::size_t n) {
  config.validate();
  detail::check_slot_index(net_charges, n);
  const double r = config.retention();
  const auto drift = detail::accumulated_drift(net_charges, n, r);
  double best = -kInfiniteCapacity;
  for (std::size_t m = 0; m <= n; ++m) {
    double inner = drift[m] + (m == 0 ? config.initial_charge_wh * std::pow(r, static_cast<double>(n)) : 0.0);
    for (std::size_t j = m + 1; j <= n; ++j) {
      inner = std::min(inner, config.capacity_wh * std::pow(r, static_cast<double>(n - j)) + drift[j]);
    }
    best = std::max(best, inner);
  }
  return best;
}

struct DualSources {
  std::vector<double> supply_wh;
  std::vector<double> demand_wh;
  double initial_charge_wh = 0.0;
};

// One slot of the dual queue: a' = gamma C + s, s' = a.
inline std::pair<double, double> dual_slot(double supply_wh, double demand_wh, const QueueConfig& config) {
  return {config.gamma * config.capacity_wh + demand_wh, supply_wh};
}

// The dual queue has the same C and gamma; its stored energy is C - B(n) and
// its overflow and underflow are the original underflow and overflow.
inline DualSources dual_transform(std::span<const double> supply_wh, std::span<const double> demand_wh,
                                  const QueueConfig& config) {
  config.validate();
  require(supply_wh.size() == demand_wh.size(), "supply and demand sequences must have the same length");
  require(std::isfinite(config.capacity_wh), "dual system requires a finite capacity");
  DualSources dual;
  dual.supply_wh.reserve(supply_wh.size());
  dual.demand_wh.reserve(demand_wh.size());
  for (std::size_t i = 0; i < supply_wh.size(); ++i) {
    const auto [a, s] = dual_slot(supply_wh[i], demand_wh[i], config);
    dual.supply_wh.push_back(a);
    dual.demand_wh.push_back(s);
  }
  dual.initial_charge_wh = config.capacity_wh - config.initial_charge_wh;
  return dual;
}

inline std::vector<double> net_charge(std::span<const double> supply_wh, std::span<const double> demand_wh) {
  require(supply_wh.size() == demand_wh.size(), "supply and demand sequences must have the same length");
  std::vector<double> delta(supply_wh.size());
  for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = supply_wh[i] - demand_wh[i];
  return delta;
}

// Unconstrained linear recursion B^r(n) = (1-gamma) B^r(n-1) + delta(n),
// seeded with the initial charge. Entry i is B^r(i + 1).
inline std::vector<double> reference_path(const QueueConfig& config, std::span<const double> net_charges) {
  require(config.gamma >= 0.0 && config.gamma < 1.0, "gamma must satisfy 0 <= gamma < 1");
  const double r = config.retention();
  std::vector<double> out;
  out.reserve(net_charges.size());
  double level = config.initial_charge_wh;
  for (double delta : net_charges) {
    level = r * level + delta;
    out.push_back(level);
  }
  return out;
}

inline double effective_net_charge(double raw_delta_wh, const ChargingConstraints& constraints,
                                   DischargeTerm mode = DischargeTerm::kCorrected) {
  const double surplus = std::max(raw_delta_wh, 0.0);
  const double deficit = mode == DischargeTerm::kCorrected ? std::max(-raw_delta_wh, 0.0) : surplus;
  return std::min(surplus, constraints.charge_rate_wh) * constraints.efficiency -
         std::min(deficit, constraints.discharge_rate_wh);
}

// Per-slot leakage ratio that loses `fraction_per_day` of a full store over
// one day: 1 - (1 - gamma)^slots = fraction.
inline double daily_to_slot_leakage(double fraction_per_day, int slots_per_day) {
  require(std::isfinite(fraction_per_day) && fraction_per_day >= 0.0 && fraction_per_day < 1.0,
          "daily leakage fraction must satisfy 0 <= fraction < 1");
  require(slots_per_day >= 1, "slots_per_day must be >= 1");
  return 1.0 - std::pow(1.0 - fraction_per_day, 1.0 / slots_per_day);
}

}  // namespace leakq

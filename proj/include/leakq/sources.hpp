#pragma once

// Generators of per-slot supply a(n), demand s(n) and net charge
// delta(n) = a(n) - s(n): parametric samplers, a Weibull-driven wind turbine,
// and CSV trace playback.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "leakq/error.hpp"
#include "leakq/random.hpp"

namespace leakq {

struct GaussianChargeModel {
  double mean_wh = 0.0;
  double std_wh = 0.0;

  void validate() const {
    require(std::isfinite(mean_wh), "gaussian mean must be finite");
    require(std::isfinite(std_wh) && std_wh >= 0.0, "gaussian std must be >= 0");
  }
  double draw(Stream& rng) const { return std_wh == 0.0 ? mean_wh : mean_wh + std_wh * rng.normal(); }
};

struct WindTurbineParams {
  double rated_power_kw = 1.0;
  double cut_in_ms = 3.0;
  double rated_speed_ms = 12.0;
  double cut_out_ms = 25.0;
  double swept_area_m2 = 10.8;
  double efficiency = 0.5;

  void validate() const {
    require(rated_power_kw > 0.0, "rated_power_kw must be > 0");
    require(cut_in_ms > 0.0 && cut_in_ms < rated_speed_ms && rated_speed_ms < cut_out_ms,
            "turbine speeds must satisfy 0 < cut_in < rated < cut_out");
    require(swept_area_m2 > 0.0, "swept_area_m2 must be > 0");
    require(efficiency > 0.0 && efficiency <= 1.0, "turbine efficiency must be in (0,1]");
  }
  // Cubic coefficients that make the power curve continuous at cut-in and rated speed.
  double alpha() const { return rated_power_kw / (std::pow(rated_speed_ms, 3) - std::pow(cut_in_ms, 3)); }
  double beta() const {
    return std::pow(cut_in_ms, 3) / (std::pow(rated_speed_ms, 3) - std::pow(cut_in_ms, 3));
  }
};

struct WeibullWind {
  double scale_ms = 7.0;
  double shape = 3.0;

  void validate() const {
    require(scale_ms > 0.0 && std::isfinite(scale_ms), "weibull scale must be > 0");
    require(shape > 0.0 && std::isfinite(shape), "weibull shape must be > 0");
  }
  double cdf(double v) const { return v <= 0.0 ? 0.0 : -std::expm1(-std::pow(v / scale_ms, shape)); }
  double density(double v) const {
    if (v < 0.0) return 0.0;
    const double x = v / scale_ms;
    return shape / scale_ms * std::pow(x, shape - 1.0) * std::exp(-std::pow(x, shape));
  }
  // Inverse CDF written in terms of U = 1 - F: v = c (-ln U)^{1/k}.
  double from_uniform(double u) const { return scale_ms * std::pow(-std::log(u), 1.0 / shape); }
  double draw(Stream& rng) const { return from_uniform(rng.uniform_open()); }
};

struct ConstantDemand {
  double value_wh = 0.0;
};

struct ConstPlusExpDemand {
  double base_wh = 0.0;
  double exp_mean_wh = 0.0;

  void validate() const {
    require(std::isfinite(base_wh) && base_wh >= 0.0, "demand base must be >= 0");
    require(std::isfinite(exp_mean_wh) && exp_mean_wh >= 0.0, "demand exponential mean must be >= 0");
  }
  double draw(Stream& rng) const {
    return exp_mean_wh == 0.0 ? base_wh : base_wh + rng.exponential(exp_mean_wh);
  }
};

struct TraceSource {
  std::vector<double> values_wh;
  bool loop = false;
  std::vector<std::string> timestamps;  // reporting only; may be empty

  std::size_t size() const { return values_wh.size(); }

  double at(std::size_t index) const {
    if (loop) return values_wh.at(index % values_wh.size());
    require(index < values_wh.size(), "trace exhausted (loop disabled)");
    return values_wh[index];
  }

  std::vector<double> take(std::size_t count, std::size_t offset = 0) const {
    require(!values_wh.empty(), "trace is empty");
    require(loop || offset + count <= values_wh.size(), "trace shorter than requested length (loop disabled)");
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = at(offset + i);
    return out;
  }
};

// ---------------------------------------------------------------------------
// Vector samplers. Each draws from a fresh Stream(seed).

inline std::vector<double> sample_gaussian(const GaussianChargeModel& model, std::uint64_t seed, std::size_t n) {
  model.validate();
  Stream rng(seed);
  std::vector<double> out(n);
  for (auto& x : out) x = model.draw(rng);
  return out;
}

inline std::vector<double> sample_weibull_speed(const WeibullWind& wind, std::uint64_t seed, std::size_t n) {
  wind.validate();
  Stream rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = wind.draw(rng);
  return out;
}

// Power curve in kW per unit swept area and efficiency (scaled by A_w eta_w
// to obtain turbine output). Zero below cut-in and from cut-out on.
inline double turbine_power(double speed_ms, const WindTurbineParams& p) {
  require(speed_ms >= 0.0, "wind speed must be >= 0");
  if (speed_ms < p.cut_in_ms || speed_ms >= p.cut_out_ms) return 0.0;
  if (speed_ms <= p.rated_speed_ms) return p.alpha() * speed_ms * speed_ms * speed_ms - p.beta() * p.rated_power_kw;
  return p.rated_power_kw;
}

// Wh delivered in one slot at the given wind speed.
inline double wind_energy_wh(double speed_ms, const WindTurbineParams& p, double slot_hours) {
  return turbine_power(speed_ms, p) * p.swept_area_m2 * p.efficiency * slot_hours * 1000.0;
}

struct WindSupplyModel {
  WindTurbineParams turbine;
  WeibullWind wind;
  double slot_hours = 1.0;

  void validate() const {
    turbine.validate();
    wind.validate();
    require(slot_hours > 0.0, "slot_hours must be > 0");
  }
  double draw(Stream& rng) const { return wind_energy_wh(wind.draw(rng), turbine, slot_hours); }
  double peak_wh() const { return turbine.rated_power_kw * turbine.swept_area_m2 * turbine.efficiency * slot_hours * 1000.0; }
};

// One i.i.d. Weibull speed draw per slot.
inline std::vector<double> wind_supply(const WindTurbineParams& p, const WeibullWind& w, std::uint64_t seed,
                                       std::size_t n, double slot_hours) {
  const WindSupplyModel model{p, w, slot_hours};
  model.validate();
  Stream rng(seed);
  std::vector<double> out(n);
  for (auto& a : out) a = model.draw(rng);
  return out;
}

inline std::vector<double> sample_demand(const ConstPlusExpDemand& d, std::uint64_t seed, std::size_t n) {
  d.validate();
  Stream rng(seed);
  std::vector<double> out(n);
  for (auto& s : out) s = d.draw(rng);
  return out;
}

// ---------------------------------------------------------------------------
// CSV traces: comma-delimited, optional header, one numeric Wh value per row
// in the selected column. Blank lines are skipped.

struct TraceOptions {
  std::variant<std::size_t, std::string> column = std::size_t{0};
  std::optional<std::variant<std::size_t, std::string>> timestamp_column;
  // Defaults to true when a column is selected by name, false otherwise.
  std::optional<bool> has_header;
  bool loop = false;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(first, last - first + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

inline std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

inline std::optional<double> parse_double(const std::string& text) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || begin == end) return std::nullopt;
  return value;
}

inline std::size_t resolve_column(const std::variant<std::size_t, std::string>& key,
                                  const std::vector<std::string>& header) {
  if (const auto* index = std::get_if<std::size_t>(&key)) return *index;
  const auto& name = std::get<std::string>(key);
  const auto it = std::find(header.begin(), header.end(), name);
  require(it != header.end(), "trace column '" + name + "' not found in header");
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace detail

inline TraceSource parse_trace(std::istream& in, const TraceOptions& options = {}) {
  const bool header = options.has_header.value_or(std::holds_alternative<std::string>(options.column));
  TraceSource trace;
  trace.loop = options.loop;
  std::string line;
  std::size_t row = 0;
  std::size_t column = 0;
  std::optional<std::size_t> ts_column;
  bool header_pending = header;
  if (!header) {
    column = detail::resolve_column(options.column, {});
    if (options.timestamp_column) ts_column = detail::resolve_column(*options.timestamp_column, {});
  }
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_row(line);
    if (header_pending) {
      column = detail::resolve_column(options.column, cells);
      if (options.timestamp_column) ts_column = detail::resolve_column(*options.timestamp_column, cells);
      header_pending = false;
      continue;
    }
    if (column >= cells.size()) throw Error("trace row " + std::to_string(row) + ": missing column " + std::to_string(column));
    const auto value = detail::parse_double(cells[column]);
    if (!value || !std::isfinite(*value)) {
      throw Error("trace row " + std::to_string(row) + ": non-numeric value '" + cells[column] + "'");
    }
    trace.values_wh.push_back(*value);
    if (ts_column) {
      if (*ts_column >= cells.size()) throw Error("trace row " + std::to_string(row) + ": missing timestamp column");
      trace.timestamps.push_back(cells[*ts_column]);
    }
  }
  require(!trace.values_wh.empty(), "trace file contains no data rows");
  return trace;
}

inline TraceSource load_trace(const std::string& path, const TraceOptions& options = {}) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open trace file '" + path + "'");
  return parse_trace(in, options);
}

// ---------------------------------------------------------------------------
// Source specification used by the simulation engine and analytic layer.

using SupplyModel = std::variant<GaussianChargeModel, WindSupplyModel, TraceSource>;
using DemandModel = std::variant<ConstantDemand, ConstPlusExpDemand, GaussianChargeModel, TraceSource>;

struct SourceSpec {
  SupplyModel supply = GaussianChargeModel{};
  DemandModel demand = ConstantDemand{};

  // A direct net-charge model: delta ~ N(mean, std), demand zero.
  static SourceSpec gaussian_delta(double mean_wh, double std_wh) {
    return {GaussianChargeModel{mean_wh, std_wh}, ConstantDemand{0.0}};
  }

  void validate() const {
    std::visit(
        [](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, TraceSource>) {
            require(!m.values_wh.empty(), "supply trace is empty");
          } else {
            m.validate();
          }
        },
        supply);
    std::visit(
        [](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, TraceSource>) {
            require(!m.values_wh.empty(), "demand trace is empty");
          } else if constexpr (std::is_same_v<T, ConstantDemand>) {
            require(std::isfinite(m.value_wh), "constant demand must be finite");
          } else {
            m.validate();
          }
        },
        demand);
  }
};

// Draws (a(n), s(n)) pairs for one replication. Supply and demand use
// separate substreams so either can change without disturbing the other;
// trace models play back from `trace_offset`.
class SlotSampler {
 public:
  SlotSampler(const SourceSpec& spec, std::uint64_t master_seed, std::uint64_t replication,
              std::size_t trace_offset = 0)
      : spec_(&spec),
        supply_rng_(master_seed, replication, 0),
        demand_rng_(master_seed, replication, 1),
        index_(trace_offset) {}

  std::pair<double, double> next() {
    const double a = std::visit([this](const auto& m) { return draw_supply(m); }, spec_->supply);
    const double s = std::visit([this](const auto& m) { return draw_demand(m); }, spec_->demand);
    ++index_;
    return {a, s};
  }

 private:
  double draw_supply(const GaussianChargeModel& m) { return m.draw(supply_rng_); }
  double draw_supply(const WindSupplyModel& m) { return m.draw(supply_rng_); }
  double draw_supply(const TraceSource& m) { return m.at(index_); }
  double draw_demand(const ConstantDemand& m) { return m.value_wh; }
  double draw_demand(const ConstPlusExpDemand& m) { return m.draw(demand_rng_); }
  double draw_demand(const GaussianChargeModel& m) { return m.draw(demand_rng_); }
  double draw_demand(const TraceSource& m) { return m.at(index_); }

  const SourceSpec* spec_;
  Stream supply_rng_;
  Stream demand_rng_;
  std::size_t index_;
};

// ---------------------------------------------------------------------------
// Analytic cumulants (mean, variance, third central moment).

struct Cumulants {
  double mean = 0.0;
  double variance = 0.0;
  double third = 0.0;

  double std_dev() const { return std::sqrt(variance); }
  double skewness() const { return variance > 0.0 ? third / std::pow(variance, 1.5) : 0.0; }
};

inline Cumulants operator-(const Cumulants& a, const Cumulants& b) {
  return {a.mean - b.mean, a.variance + b.variance, a.third - b.third};
}

namespace detail {

template <class F>
double integrate(F f, double lo, double hi) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 15, 1e-13);
}

inline Cumulants sample_cumulants(const std::vector<double>& xs) {
  Cumulants c;
  if (xs.empty()) return c;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) c.mean += x;
  c.mean /= n;
  double m2 = 0.0, m3 = 0.0;
  for (double x : xs) {
    const double d = x - c.mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  c.variance = m2 / n;
  c.third = m3 / n;
  return c;
}

}  // namespace detail

// Moments of per-slot wind energy: the cubic section of the power curve is
// integrated against the Weibull density; the flat rated section is an atom.
inline Cumulants wind_energy_cumulants(const WindSupplyModel& m) {
  m.validate();
  const double scale = m.turbine.swept_area_m2 * m.turbine.efficiency * m.slot_hours * 1000.0;
  const double alpha = m.turbine.alpha(), beta = m.turbine.beta(), pr = m.turbine.rated_power_kw;
  const double rated_mass = m.wind.cdf(m.turbine.cut_out_ms) - m.wind.cdf(m.turbine.rated_speed_ms);
  double raw[4] = {1.0, 0.0, 0.0, 0.0};
  for (int p = 1; p <= 3; ++p) {
    const double cubic = detail::integrate(
        [&](double v) { return std::pow((alpha * v * v * v - beta * pr) * scale, p) * m.wind.density(v); },
        m.turbine.cut_in_ms, m.turbine.rated_speed_ms);
    raw[p] = cubic + std::pow(pr * scale, p) * rated_mass;
  }
  const double mean = raw[1];
  return {mean, raw[2] - mean * mean, raw[3] - 3.0 * mean * raw[2] + 2.0 * mean * mean * mean};
}

inline Cumulants supply_cumulants(const SupplyModel& supply) {
  return std::visit(
      [](const auto& m) -> Cumulants {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GaussianChargeModel>) {
          return {m.mean_wh, m.std_wh * m.std_wh, 0.0};
        } else if constexpr (std::is_same_v<T, WindSupplyModel>) {
          return wind_energy_cumulants(m);
        } else {
          return detail::sample_cumulants(m.values_wh);
        }
      },
      supply);
}

inline Cumulants demand_cumulants(const DemandModel& demand) {
  return std::visit(
      [](const auto& m) -> Cumulants {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ConstantDemand>) {
          return {m.value_wh, 0.0, 0.0};
        } else if constexpr (std::is_same_v<T, ConstPlusExpDemand>) {
          const double mu = m.exp_mean_wh;
          return {m.base_wh + mu, mu * mu, 2.0 * mu * mu * mu};
        } else if constexpr (std::is_same_v<T, GaussianChargeModel>) {
          return {m.mean_wh, m.std_wh * m.std_wh, 0.0};
        } else {
          return detail::sample_cumulants(m.values_wh);
        }
      },
      demand);
}

// Supply and demand are independent, so cumulants of delta = a - s combine.
inline Cumulants net_charge_cumulants(const SourceSpec& spec) {
  return supply_cumulants(spec.supply) - demand_cumulants(spec.demand);
}

// log E[exp(t a)] for per-slot wind energy.
inline double wind_energy_log_mgf(const WindSupplyModel& m, double t) {
  const double scale = m.turbine.swept_area_m2 * m.turbine.efficiency * m.slot_hours * 1000.0;
  const double alpha = m.turbine.alpha(), beta = m.turbine.beta(), pr = m.turbine.rated_power_kw;
  const double peak = pr * scale;
  // Factor out exp(t * peak) when t > 0 so nothing overflows.
  const double shift = t > 0.0 ? t * peak : 0.0;
  const double zero_mass = m.wind.cdf(m.turbine.cut_in_ms) + (1.0 - m.wind.cdf(m.turbine.cut_out_ms));
  const double rated_mass = m.wind.cdf(m.turbine.cut_out_ms) - m.wind.cdf(m.turbine.rated_speed_ms);
  const double cubic = detail::integrate(
      [&](double v) { return std::exp(t * (alpha * v * v * v - beta * pr) * scale - shift) * m.wind.density(v); },
      m.turbine.cut_in_ms, m.turbine.rated_speed_ms);
  return shift + std::log(zero_mass * std::exp(-shift) + rated_mass * std::exp(t * peak - shift) + cubic);
}

}  // namespace leakq

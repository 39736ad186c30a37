#pragma once

// Scenario files: '#' or ';' comments, [section] headers, key = value lines.
//
//   [queue]       capacity_wh (number or inf), leakage_per_day, slots_per_day,
//                 gamma, initial_charge_wh, slot_hours
//   [supply]      type = gaussian | wind | trace, plus the model's keys
//   [demand]      type = constant | const_plus_exp | gaussian | trace
//   [constraints] depth_of_discharge, charge_rate_wh, discharge_rate_wh,
//                 efficiency, discharge_term = corrected | literal
//   [simulation]  slots (post-warmup, per replication), replications,
//                 warmup, seed, cdf_max_points
//
// Trace paths are resolved against the scenario file's directory.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "leakq/dynamics.hpp"
#include "leakq/error.hpp"
#include "leakq/sim.hpp"
#include "leakq/sources.hpp"

namespace leakq {

struct Scenario {
  std::string name;  // file stem, or "<stream>"
  SimPlan plan;
  std::optional<double> leakage_per_day;
  int slots_per_day = 24;
  std::vector<std::string> warnings;
};

namespace detail {

struct IniEntry {
  std::string value;
  std::size_t line = 0;
};

struct IniSection {
  std::size_t line = 0;
  std::map<std::string, IniEntry> entries;
  std::set<std::string> used;
};

class ScenarioReader {
 public:
  ScenarioReader(std::string origin, std::filesystem::path base_dir)
      : origin_(std::move(origin)), base_dir_(std::move(base_dir)) {}

  void read(std::istream& in) {
    static const std::set<std::string> kSections{"queue", "supply", "demand", "constraints", "simulation"};
    std::string raw;
    std::size_t line = 0;
    IniSection* current = nullptr;
    while (std::getline(in, raw)) {
      ++line;
      std::string text = raw;
      const auto hash = text.find_first_of("#;");
      if (hash != std::string::npos) text.erase(hash);
      text = trim(text);
      if (text.empty()) continue;
      if (text.front() == '[') {
        if (text.back() != ']') fail(line, "malformed section header '" + text + "'");
        const std::string name = trim(text.substr(1, text.size() - 2));
        if (!kSections.count(name)) fail(line, "unknown section [" + name + "]");
        if (sections_.count(name)) fail(line, "duplicate section [" + name + "]");
        current = &sections_[name];
        current->line = line;
        continue;
      }
      const auto eq = text.find('=');
      if (eq == std::string::npos) fail(line, "expected 'key = value', got '" + text + "'");
      if (!current) fail(line, "key outside of any section");
      const std::string key = trim(text.substr(0, eq));
      const std::string value = trim(text.substr(eq + 1));
      if (key.empty()) fail(line, "empty key");
      if (value.empty()) fail(line, "empty value for '" + key + "'");
      if (current->entries.count(key)) fail(line, "duplicate key '" + key + "'");
      current->entries[key] = {value, line};
    }
  }

  Scenario build() {
    Scenario sc;
    require_section("queue");
    require_section("supply");
    require_section("demand");

    QueueConfig& q = sc.plan.config;
    q.slot_hours = number("queue", "slot_hours").value_or(1.0);
    if (!(q.slot_hours > 0.0)) fail(entry_line("queue", "slot_hours"), "slot_hours must be > 0");
    q.capacity_wh = capacity("queue", "capacity_wh");
    q.initial_charge_wh = number("queue", "initial_charge_wh").value_or(0.0);

    const auto default_slots = static_cast<int>(std::lround(24.0 / q.slot_hours));
    sc.slots_per_day = static_cast<int>(integer("queue", "slots_per_day").value_or(std::max(default_slots, 1)));
    const auto per_day = number("queue", "leakage_per_day");
    const auto per_slot = number("queue", "gamma");
    if (per_day) {
      try {
        q.gamma = daily_to_slot_leakage(*per_day, sc.slots_per_day);
      } catch (const Error& e) {
        fail(entry_line("queue", "leakage_per_day"), e.what());
      }
      sc.leakage_per_day = per_day;
      if (per_slot && std::abs(*per_slot - q.gamma) > 1e-6) {
        std::ostringstream msg;
        msg.precision(17);
        msg << origin_ << ":" << entry_line("queue", "gamma") << ": gamma = " << *per_slot
            << " disagrees with leakage_per_day (gamma " << q.gamma << "); using leakage_per_day";
        sc.warnings.push_back(msg.str());
      }
    } else {
      q.gamma = per_slot.value_or(0.0);
    }
    validate_with_line("queue", [&] { q.validate(); });

    sc.plan.source.supply = supply(q.slot_hours);
    sc.plan.source.demand = demand();
    validate_with_line("supply", [&] { sc.plan.source.validate(); });

    if (sections_.count("constraints")) {
      ChargingConstraints c;
      c.depth_of_discharge = number("constraints", "depth_of_discharge").value_or(1.0);
      c.charge_rate_wh = capacity("constraints", "charge_rate_wh");
      c.discharge_rate_wh = capacity("constraints", "discharge_rate_wh");
      c.efficiency = number("constraints", "efficiency").value_or(1.0);
      const std::string term = string("constraints", "discharge_term").value_or("corrected");
      if (term == "corrected") sc.plan.discharge_term = DischargeTerm::kCorrected;
      else if (term == "literal") sc.plan.discharge_term = DischargeTerm::kLiteral;
      else fail(entry_line("constraints", "discharge_term"), "discharge_term must be corrected or literal");
      validate_with_line("constraints", [&] { c.validate(); });
      sc.plan.constraints = c;
    }

    const std::size_t slots = integer("simulation", "slots").value_or(100'000);
    const std::size_t warmup = integer("simulation", "warmup").value_or(default_warmup(q.gamma));
    sc.plan.warmup_slots = warmup;
    sc.plan.n_slots = slots + warmup;
    sc.plan.n_replications = integer("simulation", "replications").value_or(20);
    sc.plan.master_seed = integer("simulation", "seed").value_or(1);
    sc.plan.cdf_max_points = integer("simulation", "cdf_max_points").value_or(1'000'000);
    if (slots == 0) fail(entry_line("simulation", "slots"), "slots must be > 0");

    for (const auto& [name, section] : sections_) {
      for (const auto& [key, entry] : section.entries) {
        if (!section.used.count(key)) fail(entry.line, "unknown key '" + key + "' in [" + name + "]");
      }
    }
    validate_with_line("simulation", [&] { sc.plan.validate(); });
    return sc;
  }

 private:
  [[noreturn]] void fail(std::size_t line, const std::string& message) const {
    throw Error(origin_ + ":" + std::to_string(line) + ": " + message);
  }

  void require_section(const std::string& name) const {
    if (!sections_.count(name)) throw Error(origin_ + ": missing section [" + name + "]");
  }

  std::size_t section_line(const std::string& section) const {
    const auto it = sections_.find(section);
    return it == sections_.end() ? 0 : it->second.line;
  }

  std::size_t entry_line(const std::string& section, const std::string& key) const {
    const auto it = sections_.find(section);
    if (it == sections_.end()) return 0;
    const auto e = it->second.entries.find(key);
    return e == it->second.entries.end() ? it->second.line : e->second.line;
  }

  template <class F>
  void validate_with_line(const std::string& section, F&& f) const {
    try {
      f();
    } catch (const Error& e) {
      fail(section_line(section), e.what());
    }
  }

  const IniEntry* find(const std::string& section, const std::string& key) {
    const auto it = sections_.find(section);
    if (it == sections_.end()) return nullptr;
    const auto e = it->second.entries.find(key);
    if (e == it->second.entries.end()) return nullptr;
    it->second.used.insert(key);
    return &e->second;
  }

  std::optional<std::string> string(const std::string& section, const std::string& key) {
    const auto* e = find(section, key);
    if (!e) return std::nullopt;
    return e->value;
  }

  std::optional<double> number(const std::string& section, const std::string& key) {
    const auto* e = find(section, key);
    if (!e) return std::nullopt;
    const auto v = parse_double(e->value);
    if (!v || !std::isfinite(*v)) fail(e->line, "'" + key + "' must be a finite number, got '" + e->value + "'");
    return v;
  }

  // Finite number or "inf"; absent means infinite.
  double capacity(const std::string& section, const std::string& key) {
    const auto* e = find(section, key);
    if (!e) return kInfiniteCapacity;
    if (e->value == "inf" || e->value == "infinity") return kInfiniteCapacity;
    const auto v = parse_double(e->value);
    if (!v || !std::isfinite(*v)) fail(e->line, "'" + key + "' must be a number or inf, got '" + e->value + "'");
    return *v;
  }

  std::optional<std::uint64_t> integer(const std::string& section, const std::string& key) {
    const auto* e = find(section, key);
    if (!e) return std::nullopt;
    std::uint64_t v = 0;
    const char* begin = e->value.data();
    const char* end = begin + e->value.size();
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) fail(e->line, "'" + key + "' must be a non-negative integer, got '" + e->value + "'");
    return v;
  }

  bool boolean(const std::string& section, const std::string& key, bool fallback) {
    const auto* e = find(section, key);
    if (!e) return fallback;
    if (e->value == "true" || e->value == "yes" || e->value == "1") return true;
    if (e->value == "false" || e->value == "no" || e->value == "0") return false;
    fail(e->line, "'" + key + "' must be true or false");
  }

  std::string required_string(const std::string& section, const std::string& key) {
    auto v = string(section, key);
    if (!v) fail(section_line(section), "[" + section + "] requires '" + key + "'");
    return *v;
  }

  double required_number(const std::string& section, const std::string& key) {
    auto v = number(section, key);
    if (!v) fail(section_line(section), "[" + section + "] requires '" + key + "'");
    return *v;
  }

  TraceSource trace(const std::string& section) {
    TraceOptions opts;
    const std::string path = required_string(section, "path");
    if (const auto col = string(section, "column")) {
      std::size_t index = 0;
      const auto [ptr, ec] = std::from_chars(col->data(), col->data() + col->size(), index);
      if (ec == std::errc() && ptr == col->data() + col->size()) opts.column = index;
      else opts.column = *col;
    }
    if (const auto ts = string(section, "timestamp_column")) opts.timestamp_column = *ts;
    if (find(section, "header")) opts.has_header = boolean(section, "header", false);
    opts.loop = boolean(section, "loop", false);
    std::filesystem::path p(path);
    if (p.is_relative()) p = base_dir_ / p;
    try {
      return load_trace(p.string(), opts);
    } catch (const Error& e) {
      fail(entry_line(section, "path"), e.what());
    }
  }

  SupplyModel supply(double slot_hours) {
    const std::string type = required_string("supply", "type");
    if (type == "gaussian") {
      return GaussianChargeModel{required_number("supply", "mean_wh"), required_number("supply", "std_wh")};
    }
    if (type == "wind") {
      WindSupplyModel m;
      m.slot_hours = slot_hours;
      m.wind.scale_ms = number("supply", "scale_ms").value_or(m.wind.scale_ms);
      m.wind.shape = number("supply", "shape").value_or(m.wind.shape);
      auto& t = m.turbine;
      t.rated_power_kw = number("supply", "rated_power_kw").value_or(t.rated_power_kw);
      t.cut_in_ms = number("supply", "cut_in_ms").value_or(t.cut_in_ms);
      t.rated_speed_ms = number("supply", "rated_speed_ms").value_or(t.rated_speed_ms);
      t.cut_out_ms = number("supply", "cut_out_ms").value_or(t.cut_out_ms);
      t.swept_area_m2 = number("supply", "swept_area_m2").value_or(t.swept_area_m2);
      t.efficiency = number("supply", "efficiency").value_or(t.efficiency);
      return m;
    }
    if (type == "trace") return trace("supply");
    fail(entry_line("supply", "type"), "unknown supply type '" + type + "' (gaussian, wind, trace)");
  }

  DemandModel demand() {
    const std::string type = required_string("demand", "type");
    if (type == "constant") return ConstantDemand{required_number("demand", "value_wh")};
    if (type == "const_plus_exp") {
      return ConstPlusExpDemand{required_number("demand", "base_wh"), required_number("demand", "exp_mean_wh")};
    }
    if (type == "gaussian") {
      return GaussianChargeModel{required_number("demand", "mean_wh"), required_number("demand", "std_wh")};
    }
    if (type == "trace") return trace("demand");
    fail(entry_line("demand", "type"), "unknown demand type '" + type + "' (constant, const_plus_exp, gaussian, trace)");
  }

  std::string origin_;
  std::filesystem::path base_dir_;
  std::map<std::string, IniSection> sections_;
};

}  // namespace detail

inline Scenario parse_scenario(std::istream& in, const std::string& origin = "<stream>",
                               const std::filesystem::path& base_dir = ".") {
  detail::ScenarioReader reader(origin, base_dir);
  reader.read(in);
  Scenario sc = reader.build();
  sc.name = origin;
  return sc;
}

inline Scenario parse_scenario_text(const std::string& text, const std::string& origin = "<string>",
                                    const std::filesystem::path& base_dir = ".") {
  std::istringstream in(text);
  return parse_scenario(in, origin, base_dir);
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open scenario file '" + path.string() + "'");
  Scenario sc = parse_scenario(in, path.filename().string(), path.parent_path().empty() ? "." : path.parent_path());
  sc.name = path.stem().string();
  return sc;
}

}  // namespace leakq

#pragma once

// Closed-form and semi-numeric estimates for a leakage queue with i.i.d. net
// charge: steady-state moments of the unconstrained reference system, regime
// classification, Gaussian and skew-normal loss probabilities, the KR gap
// bound between the queue and the reference system, and the exponential
// (martingale) underflow bound.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/skew_normal.hpp>

#include "leakq/error.hpp"
#include "leakq/metrics.hpp"
#include "leakq/parallel.hpp"
#include "leakq/random.hpp"
#include "leakq/sources.hpp"

namespace leakq {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
inline double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(0.0, 1.0), p);
}

// Steady state of B^r(n) = (1-gamma) B^r(n-1) + delta(n).
struct ReferenceMoments {
  double mean_wh = 0.0;
  double variance_wh2 = 0.0;
  double skewness = 0.0;
  double gamma = 0.0;  // leakage ratio the moments belong to

  double std_dev() const { return std::sqrt(variance_wh2); }
};

inline double skewness_multiplier(double gamma) {
  const double r = 1.0 - gamma;
  return std::pow(1.0 - r * r, 1.5) / (1.0 - r * r * r);
}

inline ReferenceMoments reference_moments(double mean_delta, double var_delta, double skew_delta, double gamma) {
  require(gamma > 0.0 && gamma < 1.0, "no reference steady state: gamma must be in (0,1)");
  require(var_delta >= 0.0, "net-charge variance must be >= 0");
  const double r = 1.0 - gamma;
  return {mean_delta / gamma, var_delta / (1.0 - r * r), skew_delta * skewness_multiplier(gamma), gamma};
}

inline ReferenceMoments reference_moments(const Cumulants& delta, double gamma) {
  return reference_moments(delta.mean, delta.variance, delta.skewness(), gamma);
}

enum class RegimeLabel { kLeakageDominated, kCapacityDominated, kBoundary };

inline const char* to_string(RegimeLabel label) {
  switch (label) {
    case RegimeLabel::kLeakageDominated: return "leakage_dominated";
    case RegimeLabel::kCapacityDominated: return "capacity_dominated";
    case RegimeLabel::kBoundary: return "boundary";
  }
  return "unknown";
}

struct Regime {
  RegimeLabel label = RegimeLabel::kBoundary;
  double reference_mean_wh = 0.0;
  double capacity_wh = 0.0;
};

// Default tolerance: 1% of |E[B^r]|.
inline Regime classify_regime(double capacity_wh, const ReferenceMoments& ref,
                              std::optional<double> tol_wh = std::nullopt) {
  const double tol = tol_wh.value_or(0.01 * std::abs(ref.mean_wh));
  const double gap = capacity_wh - ref.mean_wh;
  RegimeLabel label = RegimeLabel::kBoundary;
  if (gap > tol) label = RegimeLabel::kLeakageDominated;
  else if (gap < -tol) label = RegimeLabel::kCapacityDominated;
  return {label, ref.mean_wh, capacity_wh};
}

struct LossProbabilities {
  double p_underflow = 0.0;
  double p_overflow = 0.0;
};

// P(B^r < 0) and P(B^r > C) under a normal fit to the reference moments.
inline LossProbabilities gaussian_loss_probs(double capacity_wh, const ReferenceMoments& ref) {
  const double sigma = ref.std_dev();
  if (sigma == 0.0) {
    return {ref.mean_wh < 0.0 ? 1.0 : 0.0, ref.mean_wh > capacity_wh ? 1.0 : 0.0};
  }
  const double p_over = std::isinf(capacity_wh) ? 0.0 : normal_cdf(-(capacity_wh - ref.mean_wh) / sigma);
  return {normal_cdf(-ref.mean_wh / sigma), p_over};
}

// Largest |skewness| a skew-normal can represent.
inline double max_skew_normal_skewness() {
  const double pi = std::numbers::pi;
  return std::numbers::sqrt2 * (4.0 - pi) / std::pow(pi - 2.0, 1.5);
}

struct SkewNormalFit {
  double location = 0.0;
  double scale = 1.0;
  double shape = 0.0;

  boost::math::skew_normal_distribution<double> distribution() const { return {location, scale, shape}; }
  double cdf(double x) const { return boost::math::cdf(distribution(), x); }
  double survival(double x) const { return boost::math::cdf(boost::math::complement(distribution(), x)); }
  double quantile(double p) const { return boost::math::quantile(distribution(), p); }
};

// Method-of-moments fit in the delta parameterization:
//   |d| = sqrt( pi/2 * g^{2/3} / (g^{2/3} + ((4-pi)/2)^{2/3}) ),  g = |skew|, sign(d) = sign(skew)
//   shape = d / sqrt(1 - d^2)
//   scale = sigma / sqrt(1 - 2 d^2 / pi)
//   location = mean - scale * d * sqrt(2/pi)
inline SkewNormalFit fit_skew_normal(const ReferenceMoments& ref) {
  const double pi = std::numbers::pi;
  require(ref.variance_wh2 > 0.0, "skew-normal fit requires positive variance");
  require(std::abs(ref.skewness) < max_skew_normal_skewness(),
          "skewness outside the skew-normal range; use the Gaussian approximation instead");
  const double g = std::pow(std::abs(ref.skewness), 2.0 / 3.0);
  const double d = std::copysign(std::sqrt(pi / 2.0 * g / (g + std::pow((4.0 - pi) / 2.0, 2.0 / 3.0))), ref.skewness);
  SkewNormalFit fit;
  fit.shape = d / std::sqrt(1.0 - d * d);
  fit.scale = ref.std_dev() / std::sqrt(1.0 - 2.0 * d * d / pi);
  fit.location = ref.mean_wh - fit.scale * d * std::sqrt(2.0 / pi);
  return fit;
}

inline LossProbabilities skew_normal_loss_probs(double capacity_wh, const ReferenceMoments& ref) {
  const auto fit = fit_skew_normal(ref);
  return {fit.cdf(0.0), std::isinf(capacity_wh) ? 0.0 : fit.survival(capacity_wh)};
}

// Upper bound on d(B, B^r):
//   (1/gamma) (E[(-B^r)^+] + E[(B^r - C)^+])
// with both partial expectations taken under the normal fit.
inline double kr_gap_bound(double capacity_wh, const ReferenceMoments& ref) {
  require(ref.gamma > 0.0 && ref.gamma < 1.0, "KR gap bound requires gamma in (0,1)");
  const double mu = ref.mean_wh, sigma = ref.std_dev();
  auto below = [&](double t) {  // E[(t - X)^+]
    if (sigma == 0.0) return std::max(t - mu, 0.0);
    const double z = (t - mu) / sigma;
    return sigma * normal_pdf(z) + (t - mu) * normal_cdf(z);
  };
  auto above = [&](double t) {  // E[(X - t)^+]
    if (std::isinf(t)) return 0.0;
    if (sigma == 0.0) return std::max(mu - t, 0.0);
    const double z = (t - mu) / sigma;
    return sigma * normal_pdf(z) - (t - mu) * normal_cdf(-z);
  };
  return (below(0.0) + above(capacity_wh)) / ref.gamma;
}

// ---------------------------------------------------------------------------
// Moment-generating functions of the net charge, M(t) = E[exp(t delta)].

struct GaussianMgf {
  double mean_wh = 0.0;
  double variance_wh2 = 0.0;
};

// delta = a - (s0 + s1) with a ~ N(mean, var) and s1 ~ Exp(mean exp_mean).
struct GaussianSupplyExpDemandMgf {
  double supply_mean_wh = 0.0;
  double supply_variance_wh2 = 0.0;
  double demand_base_wh = 0.0;
  double demand_exp_mean_wh = 0.0;
};

struct CustomMgf {
  std::function<double(double)> log_mgf;  // log E[exp(t delta)], +inf where divergent
  double mean_wh = 0.0;
  double std_wh = 1.0;
  std::string name = "custom";
};

struct SampleMgf {
  std::vector<double> deltas_wh;
  std::size_t max_samples = 0;  // 0 evaluates every sample
};

using MgfSpec = std::variant<GaussianMgf, GaussianSupplyExpDemandMgf, CustomMgf, SampleMgf>;

// log( (1/n) sum exp(t x_i) ), evaluated with log-sum-exp.
inline double log_mean_exp(std::span<const double> xs, double t) {
  require(!xs.empty(), "sample MGF requires samples");
  double peak = -std::numeric_limits<double>::infinity();
  for (double x : xs) peak = std::max(peak, t * x);
  double sum = 0.0;
  for (double x : xs) sum += std::exp(t * x - peak);
  return peak + std::log(sum / static_cast<double>(xs.size()));
}

inline std::span<const double> mgf_samples(const SampleMgf& m) {
  const std::size_t n = m.max_samples == 0 ? m.deltas_wh.size() : std::min(m.max_samples, m.deltas_wh.size());
  return {m.deltas_wh.data(), n};
}

inline double log_mgf(const MgfSpec& spec, double t) {
  return std::visit(
      [t](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GaussianMgf>) {
          return m.mean_wh * t + 0.5 * m.variance_wh2 * t * t;
        } else if constexpr (std::is_same_v<T, GaussianSupplyExpDemandMgf>) {
          const double q = 1.0 + m.demand_exp_mean_wh * t;
          if (q <= 0.0) return std::numeric_limits<double>::infinity();
          return (m.supply_mean_wh - m.demand_base_wh) * t + 0.5 * m.supply_variance_wh2 * t * t - std::log(q);
        } else if constexpr (std::is_same_v<T, CustomMgf>) {
          return m.log_mgf(t);
        } else {
          return log_mean_exp(mgf_samples(m), t);
        }
      },
      spec);
}

struct MgfMoments {
  double mean_wh = 0.0;
  double std_wh = 0.0;
};

inline MgfMoments mgf_moments(const MgfSpec& spec) {
  return std::visit(
      [](const auto& m) -> MgfMoments {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GaussianMgf>) {
          return {m.mean_wh, std::sqrt(m.variance_wh2)};
        } else if constexpr (std::is_same_v<T, GaussianSupplyExpDemandMgf>) {
          return {m.supply_mean_wh - m.demand_base_wh - m.demand_exp_mean_wh,
                  std::sqrt(m.supply_variance_wh2 + m.demand_exp_mean_wh * m.demand_exp_mean_wh)};
        } else if constexpr (std::is_same_v<T, CustomMgf>) {
          return {m.mean_wh, m.std_wh};
        } else {
          const auto xs = mgf_samples(m);
          require(xs.size() >= 2, "sample MGF requires at least 2 samples");
          const auto s = moments(xs);
          return {s.mean, s.std_dev()};
        }
      },
      spec);
}

// log E[exp(theta (gamma C - delta))].
inline double log_tilted_mgf(const MgfSpec& spec, double theta, double gamma, double capacity_wh) {
  return theta * gamma * capacity_wh + log_mgf(spec, -theta);
}

// theta* = sup{theta > 0 : E[exp(theta (gamma C - delta))] <= 1}.
// The bracket starts at (0, 1/sigma] and doubles its upper end until the
// tilted log-MGF turns non-negative; bisection then narrows it to a relative
// width of rel_tol.
inline double theta_star(const MgfSpec& spec, double gamma, double capacity_wh, double rel_tol = 1e-10) {
  require(gamma >= 0.0 && gamma < 1.0, "gamma must satisfy 0 <= gamma < 1");
  require(std::isfinite(capacity_wh) && capacity_wh >= 0.0, "theta* requires a finite capacity");
  const auto [mean, sd] = mgf_moments(spec);
  if (!(mean > gamma * capacity_wh)) {
    throw Error("not capacity-dominated: E[delta] must exceed gamma*C for theta* > 0");
  }
  require(sd > 0.0, "theta* is unbounded for a deterministic net charge");
  auto f = [&](double theta) { return log_tilted_mgf(spec, theta, gamma, capacity_wh); };
  double lo = 0.0, hi = 1.0 / sd;
  for (int i = 0;; ++i) {
    const double v = f(hi);
    if (std::isnan(v) || v >= 0.0) break;
    lo = hi;
    hi *= 2.0;
    if (i > 2000 || !std::isfinite(hi)) {
      throw Error("theta* search found no sign change: E[exp(theta(gamma C - delta))] stays below 1");
    }
  }
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    const double v = f(mid);
    if (std::isfinite(v) && v < 0.0) lo = mid;
    else hi = mid;
  }
  const double root = 0.5 * (lo + hi);
  const double at_lo = f(lo);
  if (!std::isfinite(f(hi)) && at_lo < -1e-6) {
    throw Error("MGF diverges at theta = " + std::to_string(hi) + " before the tilted MGF reaches 1 (log value " +
                std::to_string(at_lo) + ")");
  }
  return root;
}

// ---------------------------------------------------------------------------

struct BoundReport {
  double theta_star = 0.0;
  double basic_bound = 1.0;
  std::optional<double> sharpened_bound;
  std::vector<std::string> notes;
};

using DemandForBound = std::variant<std::monostate, ConstantDemand, ConstPlusExpDemand, std::vector<double>>;

// Steady-state underflow bounds P(l_u > 0) <= exp(-theta* C) and, for a
// demand independent of the supply,
//   exp(-theta* C) / inf_x E[exp(theta* (s - x)) | s > x].
inline BoundReport martingale_bounds(double theta, double capacity_wh, const DemandForBound& demand = {}) {
  require(theta > 0.0 && std::isfinite(theta), "theta* must be > 0");
  BoundReport report;
  report.theta_star = theta;
  report.basic_bound = std::min(1.0, std::exp(-theta * capacity_wh));
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          report.notes.emplace_back("no demand model: sharpened bound not computed");
        } else if constexpr (std::is_same_v<T, ConstantDemand>) {
          report.sharpened_bound = report.basic_bound;
          report.notes.emplace_back("constant demand: denominator is 1");
        } else if constexpr (std::is_same_v<T, ConstPlusExpDemand>) {
          const double tilt = theta * d.exp_mean_wh;
          if (tilt < 1.0) {
            report.sharpened_bound = report.basic_bound * (1.0 - tilt);
            report.notes.emplace_back("constant+exponential demand: closed-form denominator 1/(1 - theta* E[s1])");
          } else {
            report.notes.emplace_back("theta* E[s1] >= 1: exponential MGF diverges, sharpened bound omitted");
          }
        } else {
          require(d.size() >= 2, "demand sample set requires at least 2 samples");
          const EmpiricalCdf cdf(d);
          const double lo = cdf.min(), hi = cdf.quantile(0.999);
          constexpr int kGrid = 1024;
          const auto s = cdf.sorted();
          double best = std::numeric_limits<double>::infinity();
          for (int i = 0; i < kGrid; ++i) {
            const double x = lo + (hi - lo) * i / (kGrid - 1);
            const auto first = std::upper_bound(s.begin(), s.end(), x);
            if (first == s.end()) continue;
            double sum = 0.0;
            for (auto it = first; it != s.end(); ++it) sum += std::exp(theta * (*it - x));
            best = std::min(best, sum / static_cast<double>(s.end() - first));
          }
          if (std::isfinite(best)) {
            report.sharpened_bound = report.basic_bound / std::max(best, 1.0);
            report.notes.emplace_back(
                "sample demand: infimum over a 1024-point grid on [min(s), q_0.999(s)] (approximation)");
          } else {
            report.notes.emplace_back("sample demand: degenerate sample, sharpened bound omitted");
          }
        }
      },
      demand);
  return report;
}

// ---------------------------------------------------------------------------

struct CltPoint {
  double gamma = 0.0;
  double ks = 0.0;
  std::size_t terms = 0;  // truncation depth of the series
};

// Number of terms after which (1-gamma)^m < 1e-12.
inline std::size_t reference_series_terms(double gamma, double cutoff = 1e-12) {
  require(gamma > 0.0 && gamma < 1.0, "gamma must be in (0,1)");
  return static_cast<std::size_t>(std::ceil(std::log(cutoff) / std::log1p(-gamma)));
}

// One draw of B^r = sum_m delta(m) (1-gamma)^m, truncated after `terms`.
template <class Sampler>
double draw_reference_steady_state(Sampler& sampler, Stream& rng, double gamma, std::size_t terms) {
  const double r = 1.0 - gamma;
  double weight = 1.0, total = 0.0;
  for (std::size_t m = 0; m < terms; ++m) {
    total += sampler(rng) * weight;
    weight *= r;
  }
  return total;
}

// For each gamma: K-S distance between the normalized steady-state reference
// draws and the standard normal. Draws come in blocks of 4096, each block on
// its own stream (seed, gamma index, block), so results ignore thread count.
inline std::vector<CltPoint> clt_probe(const std::function<double(Stream&)>& delta_sampler, double delta_mean,
                                       double delta_variance, const std::vector<double>& gammas,
                                       std::size_t n_samples, std::uint64_t seed, unsigned threads = 0) {
  require(delta_variance > 0.0, "CLT probe requires positive net-charge variance");
  require(n_samples >= 2, "CLT probe requires at least 2 samples per gamma");
  constexpr std::size_t kBlock = 4096;
  std::vector<CltPoint> out;
  for (std::size_t g = 0; g < gammas.size(); ++g) {
    const double gamma = gammas[g];
    const auto ref = reference_moments(delta_mean, delta_variance, 0.0, gamma);
    const std::size_t terms = reference_series_terms(gamma);
    std::vector<double> z(n_samples);
    const std::size_t blocks = (n_samples + kBlock - 1) / kBlock;
    parallel_for(blocks, threads, [&](std::size_t b) {
      Stream rng(seed, g, b);
      auto sampler = delta_sampler;
      const std::size_t end = std::min(n_samples, (b + 1) * kBlock);
      for (std::size_t i = b * kBlock; i < end; ++i) {
        z[i] = (draw_reference_steady_state(sampler, rng, gamma, terms) - ref.mean_wh) / ref.std_dev();
      }
    });
    out.push_back({gamma, ks_statistic(z, normal_cdf), terms});
  }
  return out;
}

// ---------------------------------------------------------------------------
// MGF of delta = a - s for a source specification, with a and s independent.

namespace detail {

inline double supply_log_mgf(const SupplyModel& supply, double t) {
  return std::visit(
      [t](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GaussianChargeModel>) {
          return m.mean_wh * t + 0.5 * m.std_wh * m.std_wh * t * t;
        } else if constexpr (std::is_same_v<T, WindSupplyModel>) {
          return wind_energy_log_mgf(m, t);
        } else {
          return log_mean_exp(m.values_wh, t);
        }
      },
      supply);
}

inline double demand_log_mgf(const DemandModel& demand, double t) {
  return std::visit(
      [t](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ConstantDemand>) {
          return m.value_wh * t;
        } else if constexpr (std::is_same_v<T, ConstPlusExpDemand>) {
          const double q = 1.0 - m.exp_mean_wh * t;
          if (q <= 0.0) return std::numeric_limits<double>::infinity();
          return m.base_wh * t - std::log(q);
        } else if constexpr (std::is_same_v<T, GaussianChargeModel>) {
          return m.mean_wh * t + 0.5 * m.std_wh * m.std_wh * t * t;
        } else {
          return log_mean_exp(m.values_wh, t);
        }
      },
      demand);
}

}  // namespace detail

// Closed-form families where they apply; otherwise a custom spec that
// combines the supply and demand log-MGFs (quadrature for wind, log-sum-exp
// over trace values).
inline MgfSpec mgf_for(const SourceSpec& spec) {
  if (const auto* a = std::get_if<GaussianChargeModel>(&spec.supply)) {
    if (const auto* s = std::get_if<ConstantDemand>(&spec.demand)) {
      return GaussianMgf{a->mean_wh - s->value_wh, a->std_wh * a->std_wh};
    }
    if (const auto* s = std::get_if<GaussianChargeModel>(&spec.demand)) {
      return GaussianMgf{a->mean_wh - s->mean_wh, a->std_wh * a->std_wh + s->std_wh * s->std_wh};
    }
    if (const auto* s = std::get_if<ConstPlusExpDemand>(&spec.demand)) {
      return GaussianSupplyExpDemandMgf{a->mean_wh, a->std_wh * a->std_wh, s->base_wh, s->exp_mean_wh};
    }
  }
  const Cumulants c = net_charge_cumulants(spec);
  CustomMgf custom;
  custom.mean_wh = c.mean;
  custom.std_wh = c.std_dev();
  custom.name = "supply-minus-demand";
  custom.log_mgf = [spec](double t) {
    return detail::supply_log_mgf(spec.supply, t) + detail::demand_log_mgf(spec.demand, -t);
  };
  return custom;
}

// Demand description for the sharpened martingale bound.
inline DemandForBound demand_for_bound(const DemandModel& demand) {
  return std::visit(
      [](const auto& m) -> DemandForBound {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, TraceSource>) {
          return m.values_wh;
        } else if constexpr (std::is_same_v<T, GaussianChargeModel>) {
          return std::monostate{};
        } else {
          return m;
        }
      },
      demand);
}

}  // namespace leakq

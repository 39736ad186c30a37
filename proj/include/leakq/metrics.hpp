#pragma once

// Distribution diagnostics on samples: empirical CDFs and quantiles,
// moments, Kantorovich-Rubinstein (Wasserstein-1) distance, Kolmogorov-Smirnov
// statistic and Q-Q pairs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "leakq/error.hpp"

namespace leakq {

class EmpiricalCdf {
 public:
  EmpiricalCdf() = default;
  explicit EmpiricalCdf(std::vector<double> samples) : sorted_(std::move(samples)) {
    for (double x : sorted_) require(!std::isnan(x), "empirical CDF samples must not be NaN");
    std::stable_sort(sorted_.begin(), sorted_.end());
  }

  std::size_t size() const { return sorted_.size(); }
  bool empty() const { return sorted_.empty(); }
  std::span<const double> sorted() const { return sorted_; }

  // F(x) = #{samples <= x} / n, right-continuous.
  double operator()(double x) const {
    if (sorted_.empty()) return 0.0;
    const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
  }

  // Linear interpolation between order statistics at h = (n - 1) p
  // (Hyndman-Fan type 7).
  double quantile(double p) const {
    require(!sorted_.empty(), "quantile of an empty sample");
    require(p >= 0.0 && p <= 1.0, "quantile level must be in [0,1]");
    const double h = (static_cast<double>(sorted_.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted_.size() - 1);
    return sorted_[lo] + (h - static_cast<double>(lo)) * (sorted_[hi] - sorted_[lo]);
  }

  double min() const { return sorted_.front(); }
  double max() const { return sorted_.back(); }

 private:
  std::vector<double> sorted_;
};

struct MomentSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double skewness = 0.0;  // adjusted Fisher-Pearson; NaN when count < 3

  double std_dev() const { return std::sqrt(variance); }
};

// Streaming central moments up to third order, mergeable in any order
// (Pebay's pairwise update). Merging in a fixed order gives identical bits.
class MomentAccumulator {
 public:
  void add(double x) {
    const double n1 = static_cast<double>(count_);
    ++count_;
    const double n = static_cast<double>(count_);
    const double delta = x - mean_;
    const double delta_n = delta / n;
    const double term = delta * delta_n * n1;
    mean_ += delta_n;
    m3_ += term * delta_n * (n - 2.0) - 3.0 * delta_n * m2_;
    m2_ += term;
  }

  void merge(const MomentAccumulator& other) {
    if (other.count_ == 0) return;
    if (count_ == 0) {
      *this = other;
      return;
    }
    const double na = static_cast<double>(count_), nb = static_cast<double>(other.count_);
    const double n = na + nb;
    const double delta = other.mean_ - mean_;
    const double m2 = m2_ + other.m2_ + delta * delta * na * nb / n;
    const double m3 = m3_ + other.m3_ + delta * delta * delta * na * nb * (na - nb) / (n * n) +
                      3.0 * delta * (na * other.m2_ - nb * m2_) / n;
    mean_ += delta * nb / n;
    m2_ = m2;
    m3_ = m3;
    count_ += other.count_;
  }

  std::size_t count() const { return count_; }
  double mean() const { return mean_; }

  // Unbiased variance s^2 = M2/(n-1). Skewness G1 = g1 sqrt(n(n-1))/(n-2)
  // with g1 = (M3/n) / (M2/n)^{3/2}; zero when the variance is zero.
  MomentSummary summary() const {
    require(count_ >= 2, "moments require at least 2 samples");
    MomentSummary s;
    s.count = count_;
    s.mean = mean_;
    const double n = static_cast<double>(count_);
    s.variance = m2_ / (n - 1.0);
    if (count_ < 3) {
      s.skewness = std::numeric_limits<double>::quiet_NaN();
    } else if (m2_ <= 0.0) {
      s.skewness = 0.0;
    } else {
      const double g1 = (m3_ / n) / std::pow(m2_ / n, 1.5);
      s.skewness = g1 * std::sqrt(n * (n - 1.0)) / (n - 2.0);
    }
    return s;
  }

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double m3_ = 0.0;
};

inline MomentSummary moments(std::span<const double> samples) {
  MomentAccumulator acc;
  for (double x : samples) acc.add(x);
  return acc.summary();
}

// Integral of |F1 - F2| over the merged breakpoints; exact for step functions.
inline double kr_distance(const EmpiricalCdf& f1, const EmpiricalCdf& f2) {
  require(!f1.empty() && !f2.empty(), "KR distance requires non-empty samples");
  const auto a = f1.sorted();
  const auto b = f2.sorted();
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double x = std::min(a[0], b[0]);
  double total = 0.0;
  while (i < a.size() || j < b.size()) {
    double next;
    if (j >= b.size() || (i < a.size() && a[i] <= b[j])) {
      next = a[i];
    } else {
      next = b[j];
    }
    total += std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb) * (next - x);
    x = next;
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
  }
  return total;
}

inline double kr_distance(std::span<const double> x1, std::span<const double> x2) {
  return kr_distance(EmpiricalCdf({x1.begin(), x1.end()}), EmpiricalCdf({x2.begin(), x2.end()}));
}

struct LemmaCheck {
  double transformed = 0.0;  // d(T(X1), T(X2))
  double original = 0.0;     // d(X1, X2), or alpha d(X1, X2) for scaling
  bool holds = false;
};

struct KrLemmaReport {
  LemmaCheck scaling;        // d(aX1, aX2) == a d(X1, X2)
  LemmaCheck positive_part;  // d([X1]^+, [X2]^+) <= d(X1, X2)
  LemmaCheck capped;         // d(min{X1,C}, min{X2,C}) <= d(X1, X2)
  LemmaCheck added_noise;    // d(X1 + Y, X2 + Y) <= d(X1, X2), Y independent
  bool all_hold() const { return scaling.holds && positive_part.holds && capped.holds && added_noise.holds; }
};

// The four contraction properties of the KR distance evaluated on empirical
// measures. X + Y is the exact convolution of the empirical measures (all
// pairwise sums), so |x| * |y| must stay moderate.
inline KrLemmaReport kr_lemma_checks(std::span<const double> x1, std::span<const double> x2, double alpha,
                                     double cap, std::span<const double> noise, double rel_tol = 1e-9) {
  require(alpha > 0.0, "scaling factor must be > 0");
  require(!x1.empty() && !x2.empty() && !noise.empty(), "lemma checks require non-empty samples");
  require((x1.size() + x2.size()) * noise.size() <= 20'000'000, "convolution support too large");
  const double base = kr_distance(x1, x2);
  const double slack = rel_tol * std::max(base, 1e-300) + 1e-12;
  auto transformed = [](std::span<const double> xs, auto f) {
    std::vector<double> out(xs.size());
    std::transform(xs.begin(), xs.end(), out.begin(), f);
    return out;
  };
  KrLemmaReport report;

  const double scaled = kr_distance(transformed(x1, [&](double x) { return alpha * x; }),
                                    transformed(x2, [&](double x) { return alpha * x; }));
  report.scaling = {scaled, alpha * base, std::abs(scaled - alpha * base) <= rel_tol * alpha * base + 1e-12};

  const double pos = kr_distance(transformed(x1, [](double x) { return std::max(x, 0.0); }),
                                 transformed(x2, [](double x) { return std::max(x, 0.0); }));
  report.positive_part = {pos, base, pos <= base + slack};

  const double capped = kr_distance(transformed(x1, [&](double x) { return std::min(x, cap); }),
                                    transformed(x2, [&](double x) { return std::min(x, cap); }));
  report.capped = {capped, base, capped <= base + slack};

  auto convolve = [&](std::span<const double> xs) {
    std::vector<double> out;
    out.reserve(xs.size() * noise.size());
    for (double x : xs)
      for (double y : noise) out.push_back(x + y);
    return out;
  };
  const double noisy = kr_distance(convolve(x1), convolve(x2));
  report.added_noise = {noisy, base, noisy <= base + slack};
  return report;
}

// sup |F_n - F| evaluated on both sides of every sample jump.
inline double ks_statistic(std::span<const double> samples, const std::function<double(double)>& reference_cdf) {
  require(samples.size() >= 2, "K-S statistic requires at least 2 samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = reference_cdf(sorted[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return std::clamp(d, 0.0, 1.0);
}

struct QqPair {
  double probability = 0.0;
  double reference_q = 0.0;
  double empirical_q = 0.0;
};

// Pairs at p = step, 2 step, ..., 100 - step percent.
inline std::vector<QqPair> qq_pairs(const EmpiricalCdf& empirical,
                                    const std::function<double(double)>& reference_quantile,
                                    double percent_step = 5.0) {
  require(!empirical.empty(), "Q-Q pairs require samples");
  require(percent_step > 0.0 && percent_step < 50.0, "percent step must be in (0, 50)");
  std::vector<QqPair> out;
  const auto steps = static_cast<int>(std::floor(100.0 / percent_step + 1e-9));
  for (int i = 1; i < steps; ++i) {
    const double p = i * percent_step / 100.0;
    out.push_back({p, reference_quantile(p), empirical.quantile(p)});
  }
  if (std::abs(steps * percent_step - 100.0) > 1e-9) {
    const double p = steps * percent_step / 100.0;
    if (p < 1.0) out.push_back({p, reference_quantile(p), empirical.quantile(p)});
  }
  return out;
}

inline std::vector<QqPair> qq_pairs(std::span<const double> samples,
                                    const std::function<double(double)>& reference_quantile,
                                    double percent_step = 5.0) {
  return qq_pairs(EmpiricalCdf({samples.begin(), samples.end()}), reference_quantile, percent_step);
}

inline double max_qq_deviation(std::span<const QqPair> pairs) {
  double worst = 0.0;
  for (const auto& p : pairs) worst = std::max(worst, std::abs(p.empirical_q - p.reference_q));
  return worst;
}

}  // namespace leakq

#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library: p-values are drawn with std::mt19937_64 and
// std::normal_distribution, CDFs are evaluated straight from std::erfc, and
// discrete distributions are built by enumeration.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

inline double phi_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Non-null p-value CDF by root finding on phi_cdf, no shared code with the
/// library quantile.
inline double alt_cdf(double u, double snr) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (phi_cdf(mid) < u ? lo : hi) = mid;
  }
  return phi_cdf(0.5 * (lo + hi) + snr);
}

/// Draws one-sided p-values 1 - Phi(Z), Z ~ N(shift, 1).
class PValueSampler {
 public:
  explicit PValueSampler(std::uint64_t seed) : engine_(seed) {}

  double operator()(double shift) {
    const double z = normal_(engine_) + shift;
    return phi_cdf(-z);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Pair of component SNRs for a pair type: 0 for a true component.
struct PairShift {
  double first = 0.0;
  double second = 0.0;
};

/// Exact pmf of |S| by enumerating all 2^m selection patterns.
inline std::vector<double> enumerate_selected_pmf(
    const std::vector<double>& selection_probs) {
  const std::size_t m = selection_probs.size();
  std::vector<double> pmf(m + 1, 0.0);
  for (std::uint64_t pattern = 0; pattern < (std::uint64_t{1} << m); ++pattern) {
    double prob = 1.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const bool selected = (pattern >> i) & 1u;
      prob *= selected ? selection_probs[i] : 1.0 - selection_probs[i];
      count += selected;
    }
    pmf[count] += prob;
  }
  return pmf;
}

/// Binomial pmf by the multiplicative recurrence.
inline std::vector<double> binomial(std::size_t n, double p) {
  std::vector<double> out(n + 1, 0.0);
  out[0] = std::pow(1.0 - p, static_cast<double>(n));
  for (std::size_t k = 1; k <= n; ++k) {
    out[k] = out[k - 1] * static_cast<double>(n - k + 1) /
             static_cast<double>(k) * p / (1.0 - p);
  }
  return out;
}

/// Standard error of a proportion estimate.
inline double proportion_se(double p, double n) {
  return std::sqrt(std::max(p * (1.0 - p), 1e-300) / n);
}

/// Kolmogorov-Smirnov distance between a sample and a CDF.
template <class Cdf>
double ks_distance(std::vector<double> sample, Cdf&& cdf) {
  std::sort(sample.begin(), sample.end());
  const auto n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f,
                  f - static_cast<double>(i) / n});
  }
  return d;
}

/// Monte Carlo FWER of fixed-threshold ScreenMin; rows are described by the
/// SNR of each component (0 for a true component).
inline double screenmin_fwer_mc(const std::vector<PairShift>& rows, double c,
                                double alpha, std::size_t reps,
                                std::uint64_t seed) {
  PValueSampler draw(seed);
  std::size_t errors = 0;
  std::vector<double> lo(rows.size()), hi(rows.size());
  for (std::size_t r = 0; r < reps; ++r) {
    std::size_t selected = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double a = draw(rows[i].first);
      const double b = draw(rows[i].second);
      lo[i] = std::min(a, b);
      hi[i] = std::max(a, b);
      selected += lo[i] <= c;
    }
    if (selected == 0) continue;
    const double t = alpha / static_cast<double>(selected);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const bool true_union = rows[i].first == 0.0 || rows[i].second == 0.0;
      if (true_union && lo[i] <= c && hi[i] <= t) {
        ++errors;
        break;
      }
    }
  }
  return static_cast<double>(errors) / static_cast<double>(reps);
}

}  // namespace oracle

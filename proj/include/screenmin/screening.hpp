#pragma once

/// \file
/// Distributions induced by screening pairs on their minimum p-value.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "screenmin/probmodel.hpp"

namespace screenmin {

/// State of a component-hypothesis pair. (0,1) and (1,0) are merged; where a
/// pair model carries two alternatives, the false component of a one_nonnull
/// pair is the first one.
enum class PairType { both_null, one_nonnull, both_nonnull };

inline const char* to_string(PairType type) {
  switch (type) {
    case PairType::both_null:
      return "both_null";
    case PairType::one_nonnull:
      return "one_nonnull";
    case PairType::both_nonnull:
      return "both_nonnull";
  }
  return "?";
}

/// Proportions of both-null, one-nonnull and both-nonnull pairs.
struct HypothesisMix {
  double pi0 = 1.0;
  double pi1 = 0.0;
  double pi2 = 0.0;

  void validate() const {
    for (double p : {pi0, pi1, pi2}) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw domain_error("HypothesisMix: proportions must lie in [0, 1]");
      }
    }
    if (std::abs(pi0 + pi1 + pi2 - 1.0) > 1e-12) {
      throw domain_error("HypothesisMix: proportions must sum to 1");
    }
  }

  double weight(PairType type) const {
    switch (type) {
      case PairType::both_null:
        return pi0;
      case PairType::one_nonnull:
        return pi1;
      case PairType::both_nonnull:
        return pi2;
    }
    return 0.0;
  }
};

/// Integer numbers of pairs of each type.
struct TypeCounts {
  std::size_t both_null = 0;
  std::size_t one_nonnull = 0;
  std::size_t both_nonnull = 0;

  std::size_t total() const { return both_null + one_nonnull + both_nonnull; }
  std::size_t true_unions() const { return both_null + one_nonnull; }
};

/// m0 = round(m pi0), m2 = round(m pi2), m1 takes the remainder.
inline TypeCounts type_counts(const HypothesisMix& mix, std::size_t m) {
  mix.validate();
  const auto md = static_cast<double>(m);
  auto m0 = static_cast<std::size_t>(std::llround(md * mix.pi0));
  auto m2 = static_cast<std::size_t>(std::llround(md * mix.pi2));
  m0 = std::min(m0, m);
  m2 = std::min(m2, m - m0);
  return {m0, m - m0 - m2, m2};
}

namespace detail {

inline void require_open_unit(double x, const char* what) {
  if (!(x > 0.0 && x <= 1.0)) {
    throw domain_error(std::string(what) + " must lie in (0, 1], got " +
                       std::to_string(x));
  }
}

/// CDFs of the two components of a pair of the given type.
template <PairAlternative A>
struct PairCdfs {
  PairType type;
  const A& alt;

  double first(double x) const {
    return type == PairType::both_null ? x : first_cdf(alt, x);
  }
  double second(double x) const {
    return type == PairType::both_nonnull ? second_cdf(alt, x) : x;
  }
};

}  // namespace detail

/// Pr(min(p1, p2) <= c) = 1 - (1 - G1(c))(1 - G2(c)), written as
/// G1(c) + G2(c)(1 - G1(c)) so that no cancellation occurs for small c.
template <PairAlternative A>
double selection_prob(double c, PairType type, const A& alt) {
  detail::require_unit_interval(c, "selection_prob: c");
  const detail::PairCdfs<A> g{type, alt};
  const double g1 = g.first(c);
  const double g2 = g.second(c);
  return std::clamp(g1 + g2 * (1.0 - g1), 0.0, 1.0);
}

/// Pr(max <= u, min <= c) for a pair of independent components.
template <PairAlternative A>
double joint_max_min_cdf(double u, double c, PairType type, const A& alt) {
  detail::require_unit_interval(u, "joint_max_min_cdf: u");
  detail::require_unit_interval(c, "joint_max_min_cdf: c");
  const detail::PairCdfs<A> g{type, alt};
  const double g1u = g.first(u);
  const double g2u = g.second(u);
  if (u <= c) return g1u * g2u;
  const double g1c = g.first(c);
  const double g2c = g.second(c);
  // G1(c)G2(c) + G1(c)(G2(u) - G2(c)) + G2(c)(G1(u) - G1(c))
  return std::clamp(g1c * g2u + g2c * (g1u - g1c), 0.0, 1.0);
}

/// Pr(max <= u | min <= c). For one_nonnull pairs this is P0(u, c).
template <PairAlternative A>
double cond_max_cdf(double u, double c, PairType type, const A& alt) {
  detail::require_open_unit(u, "cond_max_cdf: u");
  detail::require_open_unit(c, "cond_max_cdf: c");
  const double selected = selection_prob(c, type, alt);
  if (selected <= 0.0) {
    throw domain_error("cond_max_cdf: selection event has probability zero");
  }
  return std::clamp(joint_max_min_cdf(u, c, type, alt) / selected, 0.0, 1.0);
}

/// P0(u, c): conditional CDF of the maximum for a one-nonnull pair.
template <PairAlternative A>
double conditional_null_cdf(double u, double c, const A& alt) {
  return cond_max_cdf(u, c, PairType::one_nonnull, alt);
}

/// Probability that a pair drawn from the mix passes screening at c.
template <PairAlternative A>
double mixed_selection_prob(double c, const HypothesisMix& mix, const A& alt) {
  return mix.pi0 * selection_prob(c, PairType::both_null, alt) +
         mix.pi1 * selection_prob(c, PairType::one_nonnull, alt) +
         mix.pi2 * selection_prob(c, PairType::both_nonnull, alt);
}

/// E|S(c)| = m (pi0 s00(c) + pi1 s1(c) + pi2 s2(c)).
template <PairAlternative A>
double expected_selected(double c, const HypothesisMix& mix, const A& alt,
                         std::size_t m) {
  mix.validate();
  if (m < 1) throw domain_error("expected_selected: m must be at least 1");
  return static_cast<double>(m) * mixed_selection_prob(c, mix, alt);
}

/// Raised when an exact computation would exceed its size cap.
class size_error : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Largest m for which the exact |S| distribution is computed.
inline constexpr std::size_t exact_pmf_cap = 10'000;

/// Distribution of the number of selected pairs, indexed by |S| = 0..m.
struct SelectedSizeDistribution {
  std::vector<double> pmf;

  std::size_t max_size() const { return pmf.empty() ? 0 : pmf.size() - 1; }

  double mean() const {
    double total = 0.0;
    for (std::size_t k = 0; k < pmf.size(); ++k) total += k * pmf[k];
    return total;
  }

  double variance() const {
    const double mu = mean();
    double total = 0.0;
    for (std::size_t k = 0; k < pmf.size(); ++k) {
      const double d = static_cast<double>(k) - mu;
      total += d * d * pmf[k];
    }
    return total;
  }
};

/// Binomial(n, p) probabilities for k = 0..n, evaluated in log space.
inline std::vector<double> binomial_pmf(std::size_t n, double p) {
  detail::require_unit_interval(p, "binomial_pmf: p");
  std::vector<double> out(n + 1, 0.0);
  if (p == 0.0) {
    out.front() = 1.0;
    return out;
  }
  if (p == 1.0) {
    out.back() = 1.0;
    return out;
  }
  const double log_p = std::log(p);
  const double log_q = std::log1p(-p);
  const double log_n_fact = std::lgamma(static_cast<double>(n) + 1.0);
  for (std::size_t k = 0; k <= n; ++k) {
    const double kd = static_cast<double>(k);
    const double log_choose = log_n_fact - std::lgamma(kd + 1.0) -
                              std::lgamma(static_cast<double>(n - k) + 1.0);
    out[k] = std::exp(log_choose + kd * log_p +
                      static_cast<double>(n - k) * log_q);
  }
  return out;
}

namespace detail {

inline std::vector<double> convolve(std::span<const double> a,
                                    std::span<const double> b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

}  // namespace detail

/// Exact |S| distribution for given integer type counts: the convolution of
/// three independent binomials.
template <PairAlternative A>
SelectedSizeDistribution selected_size_pmf(double c, const TypeCounts& counts,
                                           const A& alt) {
  detail::require_unit_interval(c, "selected_size_pmf: c");
  if (counts.total() > exact_pmf_cap) {
    throw size_error("selected_size_pmf: m = " +
                     std::to_string(counts.total()) +
                     " exceeds the exact-path cap of " +
                     std::to_string(exact_pmf_cap));
  }
  const auto b0 = binomial_pmf(counts.both_null,
                               selection_prob(c, PairType::both_null, alt));
  const auto b1 = binomial_pmf(counts.one_nonnull,
                               selection_prob(c, PairType::one_nonnull, alt));
  const auto b2 = binomial_pmf(counts.both_nonnull,
                               selection_prob(c, PairType::both_nonnull, alt));
  return {detail::convolve(detail::convolve(b0, b1), b2)};
}

template <PairAlternative A>
SelectedSizeDistribution selected_size_pmf(double c, const HypothesisMix& mix,
                                           const A& alt, std::size_t m) {
  if (m < 1) throw domain_error("selected_size_pmf: m must be at least 1");
  if (m > exact_pmf_cap) {
    throw size_error("selected_size_pmf: m = " + std::to_string(m) +
                     " exceeds the exact-path cap of " +
                     std::to_string(exact_pmf_cap));
  }
  return selected_size_pmf(c, type_counts(mix, m), alt);
}

}  // namespace screenmin

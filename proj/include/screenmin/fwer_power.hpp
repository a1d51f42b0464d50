#pragma once

/// \file
/// Finite-sample FWER of ScreenMin with a fixed selection threshold c, its
/// plug-in approximation, and the probability of rejecting a false union
/// hypothesis.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>

#include "screenmin/probmodel.hpp"
#include "screenmin/screening.hpp"

namespace screenmin {

/// Raised when a quantity is undefined for the given input (e.g. the plug-in
/// FWER with E|S(c)| = 0).
class degenerate_input : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

namespace detail {

inline void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw domain_error("alpha must lie in (0, 1), got " +
                       std::to_string(alpha));
  }
}

/// 1 - (1 - p)^n for real n >= 0, without cancellation for small p.
inline double at_least_one(double p, double n) {
  if (p >= 1.0) return n > 0.0 ? 1.0 : 0.0;
  if (p <= 0.0) return 0.0;
  return -std::expm1(n * std::log1p(-p));
}

}  // namespace detail

/// Upper bound on Pr(V >= 1):
///   E[ (1 - {1 - P0(alpha/|S|, c)}^|S|) 1{|S| > 0} ],
/// with the expectation taken over the exact |S| distribution. Every selected
/// pair is bounded by the one-nonnull P0, so the bound is exact iff pi1 = 1.
/// Returns 0 when the rounded counts contain no true union hypothesis.
template <PairAlternative A>
double fwer_upper_bound(double c, double alpha, const HypothesisMix& mix,
                        const A& alt, std::size_t m) {
  detail::require_open_unit(c, "fwer_upper_bound: c");
  detail::require_alpha(alpha);
  const TypeCounts counts = type_counts(mix, m);
  if (counts.true_unions() == 0) return 0.0;
  const SelectedSizeDistribution sizes = selected_size_pmf(c, mix, alt, m);
  double total = 0.0;
  for (std::size_t k = 1; k < sizes.pmf.size(); ++k) {
    if (sizes.pmf[k] == 0.0) continue;
    const double kd = static_cast<double>(k);
    const double p0 = conditional_null_cdf(alpha / kd, c, alt);
    total += sizes.pmf[k] * detail::at_least_one(p0, kd);
  }
  return std::clamp(total, 0.0, 1.0);
}

/// Plug-in FWER: 1 - {1 - P0(alpha / E|S(c)|, c)}^{E|S(c)|} with the real
/// valued E|S(c)| used as the exponent. The testing threshold is capped at 1.
template <PairAlternative A>
double fwer_approx(double c, double alpha, const HypothesisMix& mix,
                   const A& alt, std::size_t m) {
  detail::require_unit_interval(c, "fwer_approx: c");
  detail::require_alpha(alpha);
  const double expected = expected_selected(c, mix, alt, m);
  if (!(expected > 0.0)) {
    throw degenerate_input("fwer_approx: E|S(c)| = 0");
  }
  const double u = std::min(alpha / expected, 1.0);
  const double p0 = conditional_null_cdf(u, c, alt);
  return std::clamp(detail::at_least_one(p0, expected), 0.0, 1.0);
}

/// Pr(max <= x, min <= c) for a both-nonnull pair; x is the testing
/// threshold alpha/|S|.
template <PairAlternative A>
double joint_rejection_prob(double x, double c, const A& alt) {
  return joint_max_min_cdf(std::min(x, 1.0), c, PairType::both_nonnull, alt);
}

/// Probability of rejecting a false union hypothesis given |S| = s:
///   2F(c)F(alpha/s) - F(c)^2   if c s <= alpha,
///   F(alpha/s)^2               if c s >  alpha,
/// and 0 for s = 0. With two alternatives the first branch reads
/// F1(c)F2(x) + F2(c)F1(x) - F1(c)F2(c).
template <PairAlternative A>
double rejection_prob_conditional(std::size_t s, double c, double alpha,
                                  const A& alt) {
  detail::require_open_unit(c, "rejection_prob_conditional: c");
  detail::require_alpha(alpha);
  if (s == 0) return 0.0;
  return joint_rejection_prob(alpha / static_cast<double>(s), c, alt);
}

/// Power of ScreenMin for one false union hypothesis.
///
/// Exact path (m <= exact_pmf_cap): the designated both-nonnull pair is
/// selected together with Binomial-convolution many of the other m - 1
/// pairs, so Pr(reject) = sum_k Pr(others = k) Pr(max <= alpha/(k+1),
/// min <= c). Above the cap the plug-in objective
/// Pr(max <= alpha / E|S(c)|, min <= c) is returned instead; see
/// power_uses_plugin().
template <PairAlternative A>
double power_unconditional(double c, double alpha, const HypothesisMix& mix,
                           const A& alt, std::size_t m) {
  detail::require_open_unit(c, "power_unconditional: c");
  detail::require_alpha(alpha);
  TypeCounts counts = type_counts(mix, m);
  if (counts.both_nonnull == 0) return 0.0;
  if (m > exact_pmf_cap) {
    const double expected = expected_selected(c, mix, alt, m);
    return joint_rejection_prob(alpha / std::max(expected, 1.0), c, alt);
  }
  counts.both_nonnull -= 1;
  const SelectedSizeDistribution others = selected_size_pmf(c, counts, alt);
  double total = 0.0;
  for (std::size_t k = 0; k < others.pmf.size(); ++k) {
    if (others.pmf[k] == 0.0) continue;
    total += others.pmf[k] * rejection_prob_conditional(k + 1, c, alpha, alt);
  }
  return std::clamp(total, 0.0, 1.0);
}

inline bool power_uses_plugin(std::size_t m) { return m > exact_pmf_cap; }

/// Plug-in power objective Pr(max <= alpha / E|S(c)|, min <= c).
template <PairAlternative A>
double power_approx(double c, double alpha, const HypothesisMix& mix,
                    const A& alt, std::size_t m) {
  detail::require_open_unit(c, "power_approx: c");
  detail::require_alpha(alpha);
  const double expected = expected_selected(c, mix, alt, m);
  if (!(expected > 0.0)) throw degenerate_input("power_approx: E|S(c)| = 0");
  return joint_rejection_prob(alpha / expected, c, alt);
}

/// Power of Bonferroni on the maxima: Pr(max <= alpha/m).
template <PairAlternative A>
double bonferroni_power(double alpha, const A& alt, std::size_t m) {
  detail::require_alpha(alpha);
  if (m < 1) throw domain_error("bonferroni_power: m must be at least 1");
  const double x = alpha / static_cast<double>(m);
  return first_cdf(alt, x) * second_cdf(alt, x);
}

/// FWER and power summary for one selection threshold.
struct ErrorPowerReport {
  double c = 0.0;
  double alpha = 0.0;
  /// NaN when m exceeds exact_pmf_cap.
  double fwer_bound = std::numeric_limits<double>::quiet_NaN();
  double fwer_approx = 0.0;
  double power = 0.0;
  double expected_selected = 0.0;
  /// The bound is the exact FWER (pi1 = 1, or no true union hypotheses).
  bool bound_is_exact = false;
  bool power_from_plugin = false;
};

template <PairAlternative A>
ErrorPowerReport evaluate_threshold(double c, double alpha,
                                    const HypothesisMix& mix, const A& alt,
                                    std::size_t m) {
  ErrorPowerReport report;
  report.c = c;
  report.alpha = alpha;
  report.expected_selected = expected_selected(c, mix, alt, m);
  report.fwer_approx = fwer_approx(c, alpha, mix, alt, m);
  if (m <= exact_pmf_cap) {
    report.fwer_bound = fwer_upper_bound(c, alpha, mix, alt, m);
  }
  const TypeCounts counts = type_counts(mix, m);
  report.bound_is_exact = counts.true_unions() == 0 ||
                          counts.one_nonnull == counts.total();
  report.power = power_unconditional(c, alpha, mix, alt, m);
  report.power_from_plugin = power_uses_plugin(m);
  return report;
}

}  // namespace screenmin

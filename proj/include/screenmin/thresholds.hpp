#pragma once

/// \file
/// Selection thresholds: the default alpha/m rule, fixed thresholds, oracle
/// thresholds computed from a known generating model, and the data-adaptive
/// threshold.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "screenmin/fwer_power.hpp"
#include "screenmin/probmodel.hpp"
#include "screenmin/screening.hpp"

namespace screenmin {

enum class OracleMethod { constraint, first_order, product };

enum class ThresholdMethod {
  default_rule,
  fixed,
  oracle_constraint,
  oracle_first_order,
  oracle_product,
  adaptive
};

inline const char* to_string(ThresholdMethod method) {
  switch (method) {
    case ThresholdMethod::default_rule:
      return "default";
    case ThresholdMethod::fixed:
      return "fixed";
    case ThresholdMethod::oracle_constraint:
      return "oracle:constraint";
    case ThresholdMethod::oracle_first_order:
      return "oracle:first_order";
    case ThresholdMethod::oracle_product:
      return "oracle:product";
    case ThresholdMethod::adaptive:
      return "adaptive";
  }
  return "?";
}

inline ThresholdMethod to_threshold_method(OracleMethod method) {
  switch (method) {
    case OracleMethod::constraint:
      return ThresholdMethod::oracle_constraint;
    case OracleMethod::first_order:
      return ThresholdMethod::oracle_first_order;
    case OracleMethod::product:
      return ThresholdMethod::oracle_product;
  }
  return ThresholdMethod::oracle_constraint;
}

struct ThresholdDiagnostics {
  int iterations = 0;
  double residual = 0.0;
  /// k such that the adaptive grid threshold is alpha / k.
  std::optional<std::size_t> grid_index;
  std::optional<double> expected_selected;
  /// Continuous adaptive threshold c_a (the grid form is ThresholdResult::c).
  std::optional<double> continuous_threshold;
  std::optional<std::size_t> selected_count;
  /// Oracle constraint never binds on the search grid; c maximizes power.
  bool degenerate = false;
  /// Product rule has no root in (0, alpha]; c = alpha.
  bool no_root = false;
};

struct ThresholdResult {
  double c = 0.0;
  ThresholdMethod method = ThresholdMethod::default_rule;
  ThresholdDiagnostics diagnostics;
};

/// Raised when no threshold in (0, alpha] satisfies the FWER constraint.
class no_feasible_threshold : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DefaultThreshold {};
struct FixedThreshold {
  double c = 0.0;
};
struct OracleThreshold {
  HypothesisMix mix;
  NormalPair model;
  OracleMethod method = OracleMethod::constraint;
};
struct AdaptiveThreshold {};

using ThresholdSpec =
    std::variant<DefaultThreshold, FixedThreshold, OracleThreshold,
                 AdaptiveThreshold>;

inline void validate(const ThresholdSpec& spec) {
  if (const auto* fixed = std::get_if<FixedThreshold>(&spec)) {
    if (!(fixed->c > 0.0 && fixed->c <= 1.0)) {
      throw domain_error("fixed threshold must lie in (0, 1]");
    }
  } else if (const auto* oracle = std::get_if<OracleThreshold>(&spec)) {
    oracle->mix.validate();
    for (double snr : {oracle->model.first.snr, oracle->model.second.snr}) {
      if (!(snr >= 0.0) || std::isinf(snr)) {
        throw domain_error("oracle threshold: snr must be finite and >= 0");
      }
    }
  }
}

inline double default_threshold(double alpha, std::size_t m) {
  detail::require_alpha(alpha);
  if (m < 1) throw domain_error("default_threshold: m must be at least 1");
  return alpha / static_cast<double>(m);
}

namespace detail {

struct Bracket {
  double root = 0.0;
  int iterations = 0;
};

/// Bisection for the boundary between an infeasible point `bad` and a
/// feasible point `good` (is_feasible(good) == true). Returns the feasible
/// end of the final bracket once it is narrower than 1e-10 absolute and
/// 1e-9 relative.
template <class Pred>
Bracket bisect_boundary(Pred&& is_feasible, double bad, double good,
                        int max_iterations = 400) {
  int it = 0;
  while (it < max_iterations) {
    const double width = std::abs(good - bad);
    if (width <= 1e-10 && width <= 1e-9 * std::abs(good)) break;
    const double mid = 0.5 * (bad + good);
    if (mid == bad || mid == good) break;
    if (is_feasible(mid)) {
      good = mid;
    } else {
      bad = mid;
    }
    ++it;
  }
  return {good, it};
}

/// Log-spaced grid from hi down to hi * 1e-`decades`, hi first.
inline std::vector<double> descending_log_grid(double hi, std::size_t points,
                                               double decades) {
  std::vector<double> grid(points);
  for (std::size_t j = 0; j < points; ++j) {
    const double t =
        points == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(points - 1);
    grid[j] = hi * std::pow(10.0, -decades * t);
  }
  grid.front() = hi;
  return grid;
}

inline constexpr std::size_t oracle_scan_points = 400;
inline constexpr double oracle_scan_decades = 8.0;

template <PairAlternative A>
double power_objective(double c, double alpha, const HypothesisMix& mix,
                       const A& alt, std::size_t m) {
  return power_unconditional(c, alpha, mix, alt, m);
}

/// Lower edge of the feasible interval that contains the largest feasible
/// grid point, refined by bisection. If the scan never meets an infeasible
/// point below the first feasible one, the constraint does not bind and the
/// power maximizer over the feasible grid points is returned (degenerate).
template <class Pred, PairAlternative A>
ThresholdResult solve_constraint_boundary(Pred&& is_feasible, double alpha,
                                          const HypothesisMix& mix,
                                          const A& alt, std::size_t m,
                                          ThresholdMethod method) {
  const auto grid =
      descending_log_grid(alpha, oracle_scan_points, oracle_scan_decades);
  std::size_t first_feasible = grid.size();
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (is_feasible(grid[j])) {
      first_feasible = j;
      break;
    }
  }
  if (first_feasible == grid.size()) {
    throw no_feasible_threshold(
        std::string(to_string(method)) +
        ": no threshold in (0, alpha] satisfies the FWER constraint");
  }
  std::size_t first_bad = grid.size();
  for (std::size_t j = first_feasible + 1; j < grid.size(); ++j) {
    if (!is_feasible(grid[j])) {
      first_bad = j;
      break;
    }
  }

  ThresholdResult result;
  result.method = method;
  if (first_bad == grid.size()) {
    double best_c = grid[first_feasible];
    double best_power = -1.0;
    for (std::size_t j = first_feasible; j < grid.size(); ++j) {
      const double p = power_objective(grid[j], alpha, mix, alt, m);
      if (p > best_power) {
        best_power = p;
        best_c = grid[j];
      }
    }
    result.c = best_c;
    result.diagnostics.degenerate = true;
    return result;
  }
  const Bracket b =
      bisect_boundary(is_feasible, grid[first_bad], grid[first_bad - 1]);
  result.c = b.root;
  result.diagnostics.iterations = b.iterations;
  return result;
}

}  // namespace detail

/// Oracle selection threshold for a known generating model.
///
/// constraint:  lower edge of the region {c : fwer_approx(c) <= alpha} that
///              reaches up to alpha (the smallest feasible c when the
///              constraint changes sign once).
/// first_order: same boundary for P0(alpha/E|S(c)|, c) <= alpha/E|S(c)|.
/// product:     root of c E|S(c)| = alpha, residual <= 1e-10 alpha.
template <PairAlternative A>
ThresholdResult oracle_threshold(double alpha, const HypothesisMix& mix,
                                 const A& alt, std::size_t m,
                                 OracleMethod method) {
  detail::require_alpha(alpha);
  mix.validate();
  if (m < 1) throw domain_error("oracle_threshold: m must be at least 1");
  const ThresholdMethod tag = to_threshold_method(method);

  ThresholdResult result;
  switch (method) {
    case OracleMethod::constraint: {
      auto feasible = [&](double c) {
        return fwer_approx(c, alpha, mix, alt, m) <= alpha;
      };
      result = detail::solve_constraint_boundary(feasible, alpha, mix, alt, m,
                                                 tag);
      result.diagnostics.residual =
          fwer_approx(result.c, alpha, mix, alt, m) - alpha;
      break;
    }
    case OracleMethod::first_order: {
      auto gap = [&](double c) {
        const double expected = expected_selected(c, mix, alt, m);
        const double u = std::min(alpha / expected, 1.0);
        return conditional_null_cdf(u, c, alt) - u;
      };
      auto feasible = [&](double c) { return gap(c) <= 0.0; };
      result = detail::solve_constraint_boundary(feasible, alpha, mix, alt, m,
                                                 tag);
      result.diagnostics.residual = gap(result.c);
      break;
    }
    case OracleMethod::product: {
      auto lhs = [&](double c) {
        return c * expected_selected(c, mix, alt, m) - alpha;
      };
      result.method = tag;
      const double at_alpha = lhs(alpha);
      if (at_alpha < 0.0) {
        result.c = alpha;
        result.diagnostics.no_root = true;
        result.diagnostics.residual = at_alpha;
        break;
      }
      double lo = 0.0;
      double hi = alpha;
      double mid = hi;
      double value = at_alpha;
      int it = 0;
      while (std::abs(value) > 1e-10 * alpha && it < 400) {
        mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        value = lhs(mid);
        if (value > 0.0) {
          hi = mid;
        } else {
          lo = mid;
        }
        ++it;
      }
      result.c = mid;
      result.diagnostics.iterations = it;
      result.diagnostics.residual = value;
      break;
    }
  }
  result.diagnostics.expected_selected =
      expected_selected(result.c, mix, alt, m);
  return result;
}

namespace detail {

inline std::size_t count_at_most(std::span<const double> sorted, double c) {
  return static_cast<std::size_t>(
      std::upper_bound(sorted.begin(), sorted.end(), c) - sorted.begin());
}

}  // namespace detail

/// Data-adaptive threshold from the row minima.
///
/// Grid form: gamma = alpha / k* with k* = min{k : |S(alpha/k)| <= k}.
/// Continuous form c_a: the largest candidate c in
/// {alpha/k : k = 1..m} union {nonzero minima} with c |S(c)| <= alpha.
/// Both select the same rows.
inline ThresholdResult adaptive_threshold(std::span<const double> min_pvals,
                                          double alpha) {
  detail::require_alpha(alpha);
  if (min_pvals.empty()) {
    throw domain_error("adaptive_threshold: need at least one p-value");
  }
  std::vector<double> sorted(min_pvals.begin(), min_pvals.end());
  for (double p : sorted) detail::require_unit_interval(p, "adaptive_threshold: p");
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();

  std::size_t k_star = m;
  for (std::size_t k = 1; k <= m; ++k) {
    if (detail::count_at_most(sorted, alpha / static_cast<double>(k)) <= k) {
      k_star = k;
      break;
    }
  }
  const double gamma = alpha / static_cast<double>(k_star);

  double c_a = gamma;
  auto consider = [&](double c) {
    if (!(c > 0.0 && c < 1.0) || c <= c_a) return;
    if (c * static_cast<double>(detail::count_at_most(sorted, c)) <= alpha) {
      c_a = c;
    }
  };
  for (std::size_t k = 1; k < k_star; ++k) consider(alpha / static_cast<double>(k));
  for (double p : sorted) consider(p);

  ThresholdResult result;
  result.c = gamma;
  result.method = ThresholdMethod::adaptive;
  result.diagnostics.grid_index = k_star;
  result.diagnostics.continuous_threshold = c_a;
  result.diagnostics.selected_count = detail::count_at_most(sorted, gamma);
  result.diagnostics.residual =
      gamma * static_cast<double>(*result.diagnostics.selected_count) - alpha;
  return result;
}

}  // namespace screenmin

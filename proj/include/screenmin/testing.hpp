#pragma once

/// \file
/// ScreenMin and Bonferroni-on-maxima applied to an observed p-value matrix.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "screenmin/probmodel.hpp"
#include "screenmin/screening.hpp"
#include "screenmin/thresholds.hpp"

namespace screenmin {

struct PValuePair {
  double p1 = 1.0;
  double p2 = 1.0;

  double min() const { return std::min(p1, p2); }
  double max() const { return std::max(p1, p2); }
};

/// m x 2 matrix of component p-values with optional truth labels.
class PValueMatrix {
 public:
  explicit PValueMatrix(std::vector<PValuePair> rows,
                        std::vector<PairType> labels = {})
      : rows_(std::move(rows)), labels_(std::move(labels)) {
    if (rows_.empty()) {
      throw domain_error("PValueMatrix: at least one row is required");
    }
    if (!labels_.empty() && labels_.size() != rows_.size()) {
      throw domain_error("PValueMatrix: label count must match row count");
    }
    for (const auto& row : rows_) {
      detail::require_unit_interval(row.p1, "PValueMatrix: p1");
      detail::require_unit_interval(row.p2, "PValueMatrix: p2");
    }
  }

  std::size_t size() const { return rows_.size(); }
  std::span<const PValuePair> rows() const { return rows_; }
  const PValuePair& operator[](std::size_t i) const { return rows_[i]; }

  bool has_labels() const { return !labels_.empty(); }
  std::span<const PairType> labels() const { return labels_; }

  std::vector<double> minima() const {
    std::vector<double> out(rows_.size());
    std::transform(rows_.begin(), rows_.end(), out.begin(),
                   [](const PValuePair& r) { return r.min(); });
    return out;
  }

  std::vector<double> maxima() const {
    std::vector<double> out(rows_.size());
    std::transform(rows_.begin(), rows_.end(), out.begin(),
                   [](const PValuePair& r) { return r.max(); });
    return out;
  }

 private:
  std::vector<PValuePair> rows_;
  std::vector<PairType> labels_;
};

struct TestResult {
  ThresholdResult threshold_used;
  double alpha = 0.05;
  /// Row indices, ascending.
  std::vector<std::size_t> selected;
  /// 1 outside S, min(|S| max_i, 1) inside.
  std::vector<double> adjusted;
  /// {i : adjusted[i] <= alpha}.
  std::vector<std::size_t> rejected;
  /// Adaptive threshold only: {i in S : max_i <= c}, testing at the
  /// selection threshold itself.
  std::optional<std::vector<std::size_t>> coinciding_rejected;

  /// Rejections of the procedure as run: the coinciding-threshold set for
  /// the adaptive threshold, the adjusted-p-value set otherwise.
  const std::vector<std::size_t>& discoveries() const {
    return coinciding_rejected ? *coinciding_rejected : rejected;
  }

  double testing_threshold() const {
    if (coinciding_rejected) return threshold_used.c;
    return selected.empty() ? 0.0 : alpha / static_cast<double>(selected.size());
  }
};

/// Resolves a threshold specification against the matrix it will screen.
inline ThresholdResult resolve_threshold(const PValueMatrix& matrix,
                                         const ThresholdSpec& spec,
                                         double alpha) {
  validate(spec);
  const std::size_t m = matrix.size();
  return std::visit(
      [&](const auto& s) -> ThresholdResult {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, DefaultThreshold>) {
          return {default_threshold(alpha, m), ThresholdMethod::default_rule, {}};
        } else if constexpr (std::is_same_v<S, FixedThreshold>) {
          return {s.c, ThresholdMethod::fixed, {}};
        } else if constexpr (std::is_same_v<S, OracleThreshold>) {
          return oracle_threshold(alpha, s.mix, s.model, m, s.method);
        } else {
          const auto minima = matrix.minima();
          return adaptive_threshold(minima, alpha);
        }
      },
      spec);
}

/// ScreenMin with an already computed threshold: select rows with
/// min <= c, then Bonferroni-adjust the maxima of the |S| survivors.
inline TestResult apply_screenmin(const PValueMatrix& matrix,
                                  const ThresholdResult& threshold,
                                  double alpha) {
  detail::require_alpha(alpha);
  const double c = threshold.c;
  TestResult result;
  result.threshold_used = threshold;
  result.alpha = alpha;
  result.adjusted.assign(matrix.size(), 1.0);
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    if (matrix[i].min() <= c) result.selected.push_back(i);
  }
  const auto s = static_cast<double>(result.selected.size());
  for (std::size_t i : result.selected) {
    result.adjusted[i] = std::min(s * matrix[i].max(), 1.0);
    if (result.adjusted[i] <= alpha) result.rejected.push_back(i);
  }
  if (threshold.method == ThresholdMethod::adaptive) {
    std::vector<std::size_t> coinciding;
    for (std::size_t i : result.selected) {
      if (matrix[i].max() <= c) coinciding.push_back(i);
    }
    result.coinciding_rejected = std::move(coinciding);
  }
  return result;
}

inline TestResult screenmin(const PValueMatrix& matrix,
                            const ThresholdSpec& spec, double alpha) {
  detail::require_alpha(alpha);
  return apply_screenmin(matrix, resolve_threshold(matrix, spec, alpha), alpha);
}

/// Bonferroni on the row maxima, i.e. ScreenMin with every row selected.
inline TestResult bonferroni_max(const PValueMatrix& matrix, double alpha) {
  return apply_screenmin(matrix, ThresholdResult{1.0, ThresholdMethod::fixed, {}},
                         alpha);
}

}  // namespace screenmin

#pragma once

/// \file
/// Standard normal CDF/quantile and the non-null p-value distribution.
///
/// Throughout the library p-values are one-sided, p = 1 - Phi(Z) with
/// Z ~ N(snr, 1) under the alternative, so the non-null CDF is
/// F(u) = Phi(Phi^{-1}(u) + snr).

#include <cmath>
#include <concepts>
#include <numbers>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace screenmin {

/// Raised for arguments outside an operation's mathematical domain.
class domain_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

namespace detail {

inline void require_unit_interval(double u, const char* what) {
  if (!(u >= 0.0 && u <= 1.0)) {
    throw domain_error(std::string(what) + " must lie in [0, 1], got " +
                       std::to_string(u));
  }
}

}  // namespace detail

/// Phi(z) through std::erfc. erfc keeps full relative precision in the
/// lower tail, so absolute error stays at the 1e-16 level for |z| <= 8.
inline double normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

inline double normal_pdf(double z) {
  constexpr double inv_sqrt_2pi = 0.3989422804014326779;
  return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

/// Phi^{-1}(p) for p in (0, 1).
///
/// Acklam's rational approximation (relative error below 1.2e-9) followed by
/// one Halley step against normal_cdf, which brings the result to machine
/// precision everywhere except the extreme upper tail where 1 - p itself is
/// inexact.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw domain_error("normal_quantile: p must lie in (0, 1), got " +
                       std::to_string(p));
  }
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  constexpr double p_high = 1.0 - p_low;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= p_high) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // Halley refinement. In the upper half the residual is taken on the
  // complementary side to avoid cancellation.
  double e;
  if (x <= 0.0) {
    e = normal_cdf(x) - p;
  } else {
    e = (1.0 - p) - normal_cdf(-x);
  }
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

/// Anything usable as a non-null p-value CDF on [0, 1].
template <class M>
concept AlternativeCdf = requires(const M& model, double u) {
  { model.cdf(u) } -> std::convertible_to<double>;
};

/// Normal mean-shift alternative: the test statistic of a false component
/// hypothesis is N(snr, 1). snr = 0 is the null (uniform) model.
struct AltModel {
  double snr = 0.0;

  double cdf(double u) const {
    detail::require_unit_interval(u, "alt_cdf: u");
    if (!(snr >= 0.0) || std::isinf(snr)) {
      throw domain_error("alt_cdf: snr must be finite and nonnegative");
    }
    if (u == 0.0 || u == 1.0 || snr == 0.0) return u;
    return normal_cdf(normal_quantile(u) + snr);
  }

  /// 1 - F(u), accurate when F(u) is close to one.
  double survival(double u) const {
    detail::require_unit_interval(u, "alt_sf: u");
    if (u == 0.0) return 1.0;
    if (u == 1.0) return 0.0;
    if (snr == 0.0) return 1.0 - u;
    return normal_cdf(-(normal_quantile(u) + snr));
  }

  /// Density f(u) = phi(z + snr) / phi(z), z = Phi^{-1}(u).
  double pdf(double u) const {
    if (!(u > 0.0 && u < 1.0)) {
      throw domain_error("alt_pdf: u must lie in (0, 1)");
    }
    const double z = normal_quantile(u);
    return std::exp(-snr * z - 0.5 * snr * snr);
  }
};

static_assert(AlternativeCdf<AltModel>);

inline double alt_cdf(double u, const AltModel& model) { return model.cdf(u); }

/// Per-component alternatives for a hypothesis pair. A single AlternativeCdf
/// is used for both components wherever a pair model is accepted.
template <AlternativeCdf M = AltModel>
struct ComponentModels {
  M first;
  M second;

  ComponentModels() = default;
  explicit ComponentModels(M both) : first(both), second(both) {}
  ComponentModels(M first_component, M second_component)
      : first(first_component), second(second_component) {}
};

template <class T>
struct is_component_models : std::false_type {};
template <class M>
struct is_component_models<ComponentModels<M>> : std::true_type {};

/// A single shared alternative or a ComponentModels pair.
template <class A>
concept PairAlternative = AlternativeCdf<A> || is_component_models<A>::value;

template <PairAlternative A>
double first_cdf(const A& alt, double u) {
  if constexpr (AlternativeCdf<A>) {
    return alt.cdf(u);
  } else {
    return alt.first.cdf(u);
  }
}

template <PairAlternative A>
double second_cdf(const A& alt, double u) {
  if constexpr (AlternativeCdf<A>) {
    return alt.cdf(u);
  } else {
    return alt.second.cdf(u);
  }
}

using NormalPair = ComponentModels<AltModel>;

}  // namespace screenmin

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "screenmin/screening.hpp"

using namespace screenmin;

namespace {

oracle::PairShift shifts(PairType type, double snr) {
  switch (type) {
    case PairType::both_null: return {0.0, 0.0};
    case PairType::one_nonnull: return {snr, 0.0};
    case PairType::both_nonnull: return {snr, snr};
  }
  return {};
}

struct PairSample {
  std::vector<double> lo;
  std::vector<double> hi;
};

PairSample draw_pairs(PairType type, double snr, std::size_t n,
                      std::uint64_t seed) {
  oracle::PValueSampler draw(seed);
  const auto s = shifts(type, snr);
  PairSample out;
  out.lo.resize(n);
  out.hi.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = draw(s.first);
    const double b = draw(s.second);
    out.lo[i] = std::min(a, b);
    out.hi[i] = std::max(a, b);
  }
  return out;
}

}  // namespace

TEST(SelectionProb, WorkedValues) {
  const AltModel alt{2.0};
  EXPECT_NEAR(selection_prob(0.05, PairType::both_null, alt), 0.0975, 1e-12);
  EXPECT_NEAR(selection_prob(0.005, PairType::one_nonnull, alt),
              0.005 + 0.28236528227423353 * 0.995, 1e-12);
  const double f = oracle::alt_cdf(0.05, 2.0);
  EXPECT_NEAR(selection_prob(0.05, PairType::both_nonnull, alt),
              1.0 - (1.0 - f) * (1.0 - f), 1e-12);
  EXPECT_NEAR(selection_prob(0.005, PairType::both_nonnull, alt),
              0.4851, 2e-4);
  EXPECT_NEAR(selection_prob(0.005, PairType::one_nonnull, alt), 0.286, 5e-4);
}

TEST(SelectionProb, Endpoints) {
  for (auto type : {PairType::both_null, PairType::one_nonnull,
                    PairType::both_nonnull}) {
    EXPECT_DOUBLE_EQ(selection_prob(0.0, type, AltModel{2.0}), 0.0);
    EXPECT_DOUBLE_EQ(selection_prob(1.0, type, AltModel{2.0}), 1.0);
  }
  EXPECT_THROW(selection_prob(1.5, PairType::both_null, AltModel{2.0}),
               domain_error);
}

TEST(SelectionProb, MonotoneInThresholdAndType) {
  const AltModel alt{1.5};
  double prev[3] = {0.0, 0.0, 0.0};
  for (double c = 0.0; c <= 1.0; c += 0.002) {
    const double s0 = selection_prob(c, PairType::both_null, alt);
    const double s1 = selection_prob(c, PairType::one_nonnull, alt);
    const double s2 = selection_prob(c, PairType::both_nonnull, alt);
    EXPECT_GE(s0, prev[0]);
    EXPECT_GE(s1, prev[1]);
    EXPECT_GE(s2, prev[2]);
    EXPECT_LE(s0, s1 + 1e-15);
    EXPECT_LE(s1, s2 + 1e-15);
    prev[0] = s0;
    prev[1] = s1;
    prev[2] = s2;
  }
}

TEST(SelectionProb, MatchesMonteCarlo) {
  const double c = 0.05;
  for (auto type : {PairType::both_null, PairType::one_nonnull,
                    PairType::both_nonnull}) {
    const auto sample = draw_pairs(type, 1.0, 1'000'000, 7 + static_cast<int>(type));
    const double hits = static_cast<double>(
        std::count_if(sample.lo.begin(), sample.lo.end(),
                      [&](double v) { return v <= c; }));
    const double est = hits / sample.lo.size();
    const double exact = selection_prob(c, type, AltModel{1.0});
    EXPECT_NEAR(est, exact, 4.0 * oracle::proportion_se(exact, 1e6))
        << to_string(type);
  }
}

TEST(CondMaxCdf, WorkedValues) {
  const AltModel alt{2.0};
  EXPECT_NEAR(cond_max_cdf(0.01, 0.05, PairType::both_null, alt),
              1e-4 / 0.0975, 1e-12);
  const double expected = (2.0 * 0.1 - 0.05) / (2.0 - 0.05);
  EXPECT_NEAR(cond_max_cdf(0.1, 0.05, PairType::both_null, alt), expected, 1e-12);
  EXPECT_NEAR(cond_max_cdf(0.1, 0.05, PairType::both_null, alt), 0.0769, 1e-4);
  EXPECT_DOUBLE_EQ(cond_max_cdf(1.0, 0.05, PairType::one_nonnull, alt), 1.0);
  EXPECT_NEAR(cond_max_cdf(0.05, 0.05, PairType::both_null, alt), 0.025641, 1e-6);
  EXPECT_NEAR(cond_max_cdf(0.05, 0.05, PairType::one_nonnull, AltModel{0.0}),
              cond_max_cdf(0.05, 0.05, PairType::both_null, alt), 1e-15);
  EXPECT_NEAR(cond_max_cdf(0.05, 1.0, PairType::one_nonnull, alt),
              0.05 * 0.63876003131233506, 1e-12);
  EXPECT_THROW(cond_max_cdf(0.0, 0.05, PairType::both_null, alt), domain_error);
  EXPECT_THROW(cond_max_cdf(0.1, 0.0, PairType::both_null, alt), domain_error);
}

TEST(CondMaxCdf, ClosedFormOneNonnull) {
  for (double snr : {0.5, 1.0, 3.0}) {
    for (double c : {1e-4, 0.01, 0.2}) {
      for (double u : {1e-5, 5e-3, 0.05, 0.5}) {
        const double fu = oracle::alt_cdf(u, snr);
        const double fc = oracle::alt_cdf(c, snr);
        const double den = fc + c - c * fc;
        const double expected =
            u <= c ? u * fu / den : (c * fu + u * fc - c * fc) / den;
        EXPECT_NEAR(conditional_null_cdf(u, c, AltModel{snr}), expected, 1e-12);
      }
    }
  }
}

TEST(CondMaxCdf, ContinuousAtBranchPoint) {
  for (double snr : {0.0, 1.0, 2.5}) {
    for (double c : {1e-6, 1e-3, 0.05, 0.4}) {
      const double fc = oracle::alt_cdf(c, snr);
      const double den = fc + c - c * fc;
      const double upper_branch = (c * fc + c * fc - c * fc) / den;
      EXPECT_NEAR(conditional_null_cdf(c, c, AltModel{snr}), upper_branch, 1e-12);
      EXPECT_NEAR(conditional_null_cdf(c * (1 + 1e-12), c, AltModel{snr}),
                  conditional_null_cdf(c, c, AltModel{snr}), 1e-11);
    }
  }
}

TEST(CondMaxCdf, IsACdfInU) {
  for (auto type : {PairType::both_null, PairType::one_nonnull,
                    PairType::both_nonnull}) {
    for (double c : {1e-3, 0.05, 0.5}) {
      double prev = 0.0;
      for (double u = 1e-4; u <= 1.0; u += 1e-3) {
        const double v = cond_max_cdf(u, c, type, AltModel{2.0});
        EXPECT_GE(v, prev - 1e-15);
        EXPECT_LE(v, 1.0);
        prev = v;
      }
      EXPECT_DOUBLE_EQ(cond_max_cdf(1.0, c, type, AltModel{2.0}), 1.0);
    }
  }
}

TEST(CondMaxCdf, ValidWithoutScreening) {
  for (double snr : {0.0, 1.0, 3.0, 6.0}) {
    for (double u = 1e-4; u <= 1.0; u += 1e-3) {
      EXPECT_LE(cond_max_cdf(u, 1.0, PairType::both_null, AltModel{snr}), u + 1e-15);
      EXPECT_LE(cond_max_cdf(u, 1.0, PairType::one_nonnull, AltModel{snr}),
                u + 1e-15);
    }
  }
}

TEST(CondMaxCdf, ScreeningBreaksValidityForWeakSignals) {
  EXPECT_NEAR(conditional_null_cdf(0.05, 1e-3, AltModel{1.0}), 0.05997, 5e-5);
  EXPECT_GT(conditional_null_cdf(0.05, 1e-3, AltModel{1.0}), 0.05);
  for (double c : {1e-4, 1e-3, 1e-2}) {
    EXPECT_LE(conditional_null_cdf(0.05, c, AltModel{5.0}), 0.0505);
  }
}

TEST(CondMaxCdf, MatchesMonteCarloOnGrid) {
  const std::size_t n = 1'000'000;
  for (auto type : {PairType::both_null, PairType::one_nonnull,
                    PairType::both_nonnull}) {
    const auto sample = draw_pairs(type, 2.0, n, 99 + static_cast<int>(type));
    double worst = 0.0;
    for (int ci = 1; ci <= 20; ++ci) {
      const double c = 0.05 * ci;
      std::vector<double> maxima;
      for (std::size_t i = 0; i < n; ++i) {
        if (sample.lo[i] <= c) maxima.push_back(sample.hi[i]);
      }
      std::sort(maxima.begin(), maxima.end());
      for (int ui = 1; ui <= 20; ++ui) {
        const double u = 0.05 * ui;
        const auto below =
            std::upper_bound(maxima.begin(), maxima.end(), u) - maxima.begin();
        const double ecdf = static_cast<double>(below) / maxima.size();
        worst = std::max(worst,
                         std::abs(ecdf - cond_max_cdf(u, c, type, AltModel{2.0})));
      }
    }
    EXPECT_LE(worst, 0.01) << to_string(type);
  }
}

TEST(ExpectedSelected, WorkedValues) {
  const HypothesisMix one{0.0, 1.0, 0.0};
  EXPECT_NEAR(expected_selected(0.005, one, AltModel{2.0}, 10),
              10.0 * (0.005 + 0.995 * 0.28236528227423353), 1e-10);
  EXPECT_NEAR(expected_selected(0.005, one, AltModel{2.0}, 10), 2.8595345586,
              1e-9);
  const HypothesisMix mix{0.7, 0.25, 0.05};
  EXPECT_DOUBLE_EQ(expected_selected(0.0, mix, AltModel{2.0}, 100), 0.0);
  EXPECT_NEAR(expected_selected(1.0, mix, AltModel{2.0}, 100), 100.0, 1e-12);
}

TEST(ExpectedSelected, StrictlyIncreasing) {
  const HypothesisMix mix{0.7, 0.25, 0.05};
  double prev = -1.0;
  for (double c = 1e-6; c <= 1.0; c *= 1.3) {
    const double e = expected_selected(c, mix, AltModel{2.0}, 100);
    EXPECT_GT(e, prev);
    prev = e;
  }
}

TEST(HypothesisMix, Validation) {
  EXPECT_NO_THROW((HypothesisMix{0.7, 0.25, 0.05}.validate()));
  EXPECT_THROW((HypothesisMix{0.7, 0.25, 0.1}.validate()), domain_error);
  EXPECT_THROW((HypothesisMix{-0.1, 1.1, 0.0}.validate()), domain_error);
}

TEST(TypeCounts, RoundsAndSums) {
  const auto counts = type_counts(HypothesisMix{0.7, 0.25, 0.05}, 149);
  EXPECT_EQ(counts.both_null, 104u);
  EXPECT_EQ(counts.both_nonnull, 7u);
  EXPECT_EQ(counts.one_nonnull, 38u);
  EXPECT_EQ(counts.total(), 149u);
  for (std::size_t m = 1; m < 300; m += 7) {
    EXPECT_EQ(type_counts(HypothesisMix{0.33, 0.33, 0.34}, m).total(), m);
  }
}

TEST(SelectedSizePmf, PureOneNonnullIsBinomial) {
  const HypothesisMix one{0.0, 1.0, 0.0};
  const auto dist = selected_size_pmf(0.005, one, AltModel{2.0}, 10);
  const auto ref = oracle::binomial(10, 0.005 + 0.995 * 0.28236528227423353);
  ASSERT_EQ(dist.pmf.size(), ref.size());
  for (std::size_t k = 0; k < ref.size(); ++k) {
    EXPECT_NEAR(dist.pmf[k], ref[k], 1e-12) << k;
  }
}

TEST(SelectedSizePmf, AllNullSmallM) {
  const double c = 0.05;
  const double s = c * (2.0 - c);
  const auto dist = selected_size_pmf(c, HypothesisMix{1.0, 0.0, 0.0},
                                      AltModel{3.0}, 3);
  ASSERT_EQ(dist.pmf.size(), 4u);
  EXPECT_NEAR(dist.pmf[0], std::pow(1 - s, 3), 1e-14);
  EXPECT_NEAR(dist.pmf[1], 3 * s * std::pow(1 - s, 2), 1e-14);
  EXPECT_NEAR(dist.pmf[2], 3 * s * s * (1 - s), 1e-14);
  EXPECT_NEAR(dist.pmf[3], s * s * s, 1e-14);
}

TEST(SelectedSizePmf, MatchesEnumeration) {
  const AltModel alt{1.5};
  const double c = 0.03;
  const TypeCounts counts{2, 1, 1};
  const std::vector<double> probs = {
      selection_prob(c, PairType::both_null, alt),
      selection_prob(c, PairType::both_null, alt),
      selection_prob(c, PairType::one_nonnull, alt),
      selection_prob(c, PairType::both_nonnull, alt)};
  const auto ref = oracle::enumerate_selected_pmf(probs);
  const auto dist = selected_size_pmf(c, counts, alt);
  ASSERT_EQ(dist.pmf.size(), ref.size());
  for (std::size_t k = 0; k < ref.size(); ++k) {
    EXPECT_NEAR(dist.pmf[k], ref[k], 1e-14);
  }
  const auto half = selected_size_pmf(c, HypothesisMix{0.5, 0.5, 0.0}, alt, 4);
  const auto ref_half = oracle::enumerate_selected_pmf(
      {probs[0], probs[0], probs[2], probs[2]});
  for (std::size_t k = 0; k < ref_half.size(); ++k) {
    EXPECT_NEAR(half.pmf[k], ref_half[k], 1e-14);
  }
}

TEST(SelectedSizePmf, NormalizedWithMatchingMean) {
  for (std::size_t m : {1u, 7u, 100u, 2500u}) {
    for (double c : {1e-5, 1e-3, 0.05, 0.9}) {
      const HypothesisMix mix{0.6, 0.3, 0.1};
      const auto dist = selected_size_pmf(c, mix, AltModel{2.0}, m);
      double total = 0.0;
      for (double p : dist.pmf) total += p;
      EXPECT_NEAR(total, 1.0, 1e-10);
      const auto counts = type_counts(mix, m);
      const double exact_mean =
          counts.both_null * selection_prob(c, PairType::both_null, AltModel{2.0}) +
          counts.one_nonnull *
              selection_prob(c, PairType::one_nonnull, AltModel{2.0}) +
          counts.both_nonnull *
              selection_prob(c, PairType::both_nonnull, AltModel{2.0});
      EXPECT_NEAR(dist.mean(), exact_mean, 1e-8 * std::max(1.0, exact_mean));
    }
  }
}

TEST(SelectedSizePmf, MeanAndVarianceMatchMonteCarlo) {
  struct Case {
    HypothesisMix mix;
    double c;
  };
  const std::vector<Case> cases = {{{0.8, 0.15, 0.05}, 0.01},
                                   {{0.5, 0.5, 0.0}, 0.002},
                                   {{0.0, 0.6, 0.4}, 0.05}};
  const std::size_t m = 40;
  const std::size_t reps = 100'000;
  std::uint64_t seed = 321;
  for (const auto& tc : cases) {
    const auto counts = type_counts(tc.mix, m);
    std::vector<oracle::PairShift> rows;
    for (std::size_t i = 0; i < counts.both_null; ++i) rows.push_back({0, 0});
    for (std::size_t i = 0; i < counts.one_nonnull; ++i) rows.push_back({2, 0});
    for (std::size_t i = 0; i < counts.both_nonnull; ++i) rows.push_back({2, 2});
    oracle::PValueSampler draw(seed++);
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      double k = 0.0;
      for (const auto& row : rows) {
        k += std::min(draw(row.first), draw(row.second)) <= tc.c;
      }
      sum += k;
      sum_sq += k * k;
    }
    const double mc_mean = sum / reps;
    const double mc_var = sum_sq / reps - mc_mean * mc_mean;
    const auto dist = selected_size_pmf(tc.c, tc.mix, AltModel{2.0}, m);
    EXPECT_NEAR(dist.mean(), mc_mean, 4.0 * std::sqrt(mc_var / reps) + 1e-9);
    EXPECT_NEAR(dist.variance(), mc_var, 0.03 * mc_var + 1e-9);
  }
}

TEST(SelectedSizePmf, RefusesAboveCap) {
  EXPECT_NO_THROW(selected_size_pmf(1e-4, HypothesisMix{0.9, 0.1, 0.0},
                                    AltModel{2.0}, exact_pmf_cap));
  EXPECT_THROW(selected_size_pmf(1e-4, HypothesisMix{0.9, 0.1, 0.0},
                                 AltModel{2.0}, exact_pmf_cap + 1),
               size_error);
}

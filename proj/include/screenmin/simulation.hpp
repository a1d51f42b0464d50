#pragma once

/// \file
/// Seeded Monte Carlo engine for FWER and power of the screening procedures
/// under independence or within-column compound-symmetry dependence.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "screenmin/probmodel.hpp"
#include "screenmin/screening.hpp"
#include "screenmin/testing.hpp"
#include "screenmin/thresholds.hpp"

namespace screenmin {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123). Each
/// 128-bit counter maps to an independent 128-bit output block under a
/// 64-bit key.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox4x32(std::uint64_t key)
      : key_{static_cast<std::uint32_t>(key),
             static_cast<std::uint32_t>(key >> 32)} {}

  Block operator()(Block ctr) const {
    std::array<std::uint32_t, 2> key = key_;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t prod0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t prod1 = std::uint64_t{kMul1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(prod0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(prod0);
      const auto hi1 = static_cast<std::uint32_t>(prod1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(prod1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85;
  std::array<std::uint32_t, 2> key_;
};

/// Uniform draws addressed by (replication, row, column). Identical
/// coordinates always give the identical value, independent of call order.
class SubstreamUniforms {
 public:
  static constexpr std::uint32_t shared_row = 0xFFFFFFFFu;

  explicit SubstreamUniforms(std::uint64_t seed) : philox_(seed) {}

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double operator()(std::uint64_t rep, std::uint32_t row,
                    std::uint32_t column) const {
    const auto out = philox_({row, column, static_cast<std::uint32_t>(rep),
                              static_cast<std::uint32_t>(rep >> 32)});
    const std::uint64_t bits =
        (std::uint64_t{out[0]} << 21) | (std::uint64_t{out[1]} >> 11);
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

 private:
  Philox4x32 philox_;
};

enum class ProcedureKind { oracle_sm, adafilter, default_sm, bonferroni };

inline const char* to_string(ProcedureKind kind) {
  switch (kind) {
    case ProcedureKind::oracle_sm:
      return "oracle_sm";
    case ProcedureKind::adafilter:
      return "adafilter";
    case ProcedureKind::default_sm:
      return "default_sm";
    case ProcedureKind::bonferroni:
      return "bonferroni";
  }
  return "?";
}

struct SimConfig {
  std::size_t m = 200;
  HypothesisMix mix{0.85, 0.10, 0.05};
  /// Mean shift of false statistics in column 1 and column 2.
  double snr1 = 3.0;
  double snr2 = 3.0;
  /// Within-column compound-symmetry correlation.
  double rho = 0.0;
  std::size_t n_reps = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  std::vector<ProcedureKind> procedures = {
      ProcedureKind::oracle_sm, ProcedureKind::adafilter,
      ProcedureKind::default_sm, ProcedureKind::bonferroni};
  OracleMethod oracle_method = OracleMethod::constraint;
  /// Place the false component of one-nonnull pairs in a random column.
  bool random_side = false;

  TypeCounts counts() const { return type_counts(mix, m); }

  void validate() const {
    if (m < 1) throw domain_error("SimConfig: m must be at least 1");
    if (m >= SubstreamUniforms::shared_row) {
      throw domain_error("SimConfig: m too large for the substream layout");
    }
    mix.validate();
    for (double snr : {snr1, snr2}) {
      if (!(snr >= 0.0) || std::isinf(snr)) {
        throw domain_error("SimConfig: snr must be finite and nonnegative");
      }
    }
    if (!(rho >= 0.0 && rho < 1.0)) {
      throw domain_error("SimConfig: rho must lie in [0, 1)");
    }
    if (n_reps < 1) throw domain_error("SimConfig: n_reps must be at least 1");
    detail::require_alpha(alpha);
    if (procedures.empty()) {
      throw domain_error("SimConfig: at least one procedure is required");
    }
  }
};

/// One replication's p-value matrix. Rows are ordered both-null, then
/// one-nonnull, then both-nonnull. Statistics are
/// Z = sqrt(rho) W_col + sqrt(1 - rho) e + shift with W_col shared by every
/// row of a column, and p = 1 - Phi(Z).
inline PValueMatrix generate_pmatrix(const SimConfig& config,
                                     std::uint64_t rep_index) {
  config.validate();
  const SubstreamUniforms uniforms(config.seed);
  const TypeCounts counts = config.counts();
  const double shared_scale = std::sqrt(config.rho);
  const double own_scale = std::sqrt(1.0 - config.rho);
  const std::array<double, 2> shared = {
      normal_quantile(uniforms(rep_index, SubstreamUniforms::shared_row, 0)),
      normal_quantile(uniforms(rep_index, SubstreamUniforms::shared_row, 1))};
  const std::array<double, 2> snr = {config.snr1, config.snr2};

  std::vector<PValuePair> rows(config.m);
  std::vector<PairType> labels(config.m);
  for (std::size_t i = 0; i < config.m; ++i) {
    const auto row = static_cast<std::uint32_t>(i);
    PairType type = PairType::both_null;
    if (i >= counts.both_null + counts.one_nonnull) {
      type = PairType::both_nonnull;
    } else if (i >= counts.both_null) {
      type = PairType::one_nonnull;
    }
    std::array<bool, 2> is_false = {type != PairType::both_null,
                                    type == PairType::both_nonnull};
    if (type == PairType::one_nonnull && config.random_side &&
        uniforms(rep_index, row, 2) < 0.5) {
      is_false = {false, true};
    }
    std::array<double, 2> p{};
    for (std::uint32_t col = 0; col < 2; ++col) {
      const double noise = normal_quantile(uniforms(rep_index, row, col));
      const double z = shared_scale * shared[col] + own_scale * noise +
                       (is_false[col] ? snr[col] : 0.0);
      p[col] = normal_cdf(-z);
    }
    rows[i] = {p[0], p[1]};
    labels[i] = type;
  }
  return PValueMatrix(std::move(rows), std::move(labels));
}

struct ProcedureEstimate {
  ProcedureKind procedure = ProcedureKind::bonferroni;
  double fwer = 0.0;
  double fwer_se = 0.0;
  double power = 0.0;
  double power_se = 0.0;
  /// Replications with at least one both-nonnull row.
  std::size_t power_reps = 0;
};

struct SimResult {
  SimConfig config;
  std::size_t n_reps = 0;
  std::optional<ThresholdResult> oracle;
  std::vector<ProcedureEstimate> estimates;

  const ProcedureEstimate& estimate(ProcedureKind kind) const {
    for (const auto& e : estimates) {
      if (e.procedure == kind) return e;
    }
    throw std::out_of_range(std::string("SimResult: procedure not run: ") +
                            to_string(kind));
  }
};

/// Raised when a replication fails; carries the replication index.
class simulation_error : public std::runtime_error {
 public:
  simulation_error(std::size_t rep, const std::string& what)
      : std::runtime_error("replication " + std::to_string(rep) + ": " + what),
        rep_(rep) {}
  std::size_t replication() const { return rep_; }

 private:
  std::size_t rep_;
};

/// Thread count from SCREENMIN_THREADS, else the hardware concurrency.
inline unsigned default_thread_count() {
  if (const char* env = std::getenv("SCREENMIN_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace detail {

struct ReplicationOutcome {
  std::vector<char> false_rejection;
  std::vector<double> power;  // NaN when the replication has no false union
};

}  // namespace detail

/// Runs every replication and merges them in replication order, so the
/// result does not depend on `threads`.
inline SimResult run_simulation(const SimConfig& config, unsigned threads = 0) {
  config.validate();
  SimResult result;
  result.config = config;
  result.n_reps = config.n_reps;

  const bool wants_oracle =
      std::find(config.procedures.begin(), config.procedures.end(),
                ProcedureKind::oracle_sm) != config.procedures.end();
  if (wants_oracle) {
    result.oracle = oracle_threshold(
        config.alpha, config.mix,
        NormalPair(AltModel{config.snr1}, AltModel{config.snr2}), config.m,
        config.oracle_method);
  }

  const std::size_t n_proc = config.procedures.size();
  std::vector<detail::ReplicationOutcome> outcomes(config.n_reps);

  auto run_one = [&](std::size_t rep) {
    const PValueMatrix matrix = generate_pmatrix(config, rep);
    const auto labels = matrix.labels();
    detail::ReplicationOutcome out;
    out.false_rejection.assign(n_proc, 0);
    out.power.assign(n_proc, 0.0);
    std::size_t n_false_unions = 0;
    for (PairType t : labels) n_false_unions += t == PairType::both_nonnull;

    for (std::size_t k = 0; k < n_proc; ++k) {
      TestResult test;
      switch (config.procedures[k]) {
        case ProcedureKind::oracle_sm:
          test = apply_screenmin(matrix, *result.oracle, config.alpha);
          break;
        case ProcedureKind::adafilter:
          test = screenmin(matrix, AdaptiveThreshold{}, config.alpha);
          break;
        case ProcedureKind::default_sm:
          test = screenmin(matrix, DefaultThreshold{}, config.alpha);
          break;
        case ProcedureKind::bonferroni:
          test = bonferroni_max(matrix, config.alpha);
          break;
      }
      std::size_t true_hits = 0;
      for (std::size_t i : test.discoveries()) {
        if (labels[i] == PairType::both_nonnull) {
          ++true_hits;
        } else {
          out.false_rejection[k] = 1;
        }
      }
      out.power[k] = n_false_unions == 0
                         ? std::nan("")
                         : static_cast<double>(true_hits) /
                               static_cast<double>(n_false_unions);
    }
    outcomes[rep] = std::move(out);
  };

  const unsigned n_threads = std::max(
      1u, std::min<unsigned>(threads == 0 ? default_thread_count() : threads,
                             static_cast<unsigned>(config.n_reps)));
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::optional<std::size_t> failed_rep;
  std::string failure;
  auto worker = [&] {
    for (std::size_t rep = next++; rep < config.n_reps; rep = next++) {
      try {
        run_one(rep);
      } catch (const std::exception& e) {
        std::lock_guard lock(error_mutex);
        if (!failed_rep || rep < *failed_rep) {
          failed_rep = rep;
          failure = e.what();
        }
      }
    }
  };
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (failed_rep) throw simulation_error(*failed_rep, failure);

  const auto n = static_cast<double>(config.n_reps);
  for (std::size_t k = 0; k < n_proc; ++k) {
    ProcedureEstimate est;
    est.procedure = config.procedures[k];
    std::size_t errors = 0;
    double sum = 0.0;
    for (const auto& out : outcomes) {
      errors += out.false_rejection[k] != 0;
      if (!std::isnan(out.power[k])) {
        sum += out.power[k];
        ++est.power_reps;
      }
    }
    est.fwer = static_cast<double>(errors) / n;
    est.fwer_se = std::sqrt(est.fwer * (1.0 - est.fwer) / n);
    if (est.power_reps > 0) {
      const auto np = static_cast<double>(est.power_reps);
      est.power = sum / np;
      double ss = 0.0;
      for (const auto& out : outcomes) {
        if (std::isnan(out.power[k])) continue;
        const double d = out.power[k] - est.power;
        ss += d * d;
      }
      est.power_se = est.power_reps > 1 ? std::sqrt(ss / (np - 1.0) / np) : 0.0;
    }
    result.estimates.push_back(est);
  }
  return result;
}

}  // namespace screenmin

#pragma once

/// \file
/// Text formats: p-value matrix input, analysis result tables, flat
/// key-value simulation configs, simulation result rows and FWER/power
/// curves. Every number is written with 17 significant digits.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "screenmin/fwer_power.hpp"
#include "screenmin/screening.hpp"
#include "screenmin/simulation.hpp"
#include "screenmin/testing.hpp"
#include "screenmin/thresholds.hpp"

namespace screenmin::io {

/// Malformed input; line is 1-based, 0 when not tied to a line.
class parse_error : public std::runtime_error {
 public:
  parse_error(std::size_t line, const std::string& what)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what
                                : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline std::string format_number(double x) {
  if (std::isnan(x)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::vector<std::string_view> split(std::string_view s, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(delim, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    return std::nullopt;
  }
  return value;
}

template <class Int>
std::optional<Int> to_integer(std::string_view s) {
  s = trim(s);
  Int value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    return std::nullopt;
  }
  return value;
}

inline bool is_blank_or_comment(std::string_view line) {
  line = trim(line);
  return line.empty() || line.front() == '#';
}

}  // namespace detail

// ---------------------------------------------------------------------------
// p-value matrix input

struct MatrixInput {
  std::vector<std::string> ids;
  PValueMatrix matrix;
};

/// Reads `id,p1,p2` rows. The delimiter (comma or tab) is taken from the
/// header line; `#` lines and blank lines are skipped.
inline MatrixInput read_matrix(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  char delim = ',';
  bool have_header = false;
  std::vector<std::string> ids;
  std::vector<PValuePair> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::is_blank_or_comment(line)) continue;
    if (!have_header) {
      delim = line.find('\t') != std::string::npos ? '\t' : ',';
      const auto fields = detail::split(line, delim);
      if (fields.size() != 3 || fields[0] != "id" || fields[1] != "p1" ||
          fields[2] != "p2") {
        throw parse_error(line_no, "expected header 'id,p1,p2'");
      }
      have_header = true;
      continue;
    }
    const auto fields = detail::split(line, delim);
    if (fields.size() != 3) {
      throw parse_error(line_no, "expected 3 fields, found " +
                                     std::to_string(fields.size()));
    }
    if (fields[0].empty()) throw parse_error(line_no, "missing id");
    PValuePair row;
    for (int j = 1; j <= 2; ++j) {
      const auto value = detail::to_double(fields[j]);
      if (!value) {
        throw parse_error(line_no, "invalid or missing p-value '" +
                                       std::string(fields[j]) + "'");
      }
      if (!(*value >= 0.0 && *value <= 1.0)) {
        throw parse_error(line_no, "p-value outside [0, 1]");
      }
      (j == 1 ? row.p1 : row.p2) = *value;
    }
    ids.emplace_back(fields[0]);
    rows.push_back(row);
  }
  if (!have_header) throw parse_error(line_no, "missing header 'id,p1,p2'");
  if (rows.empty()) throw parse_error(line_no, "no data rows");
  return {std::move(ids), PValueMatrix(std::move(rows))};
}

inline void write_matrix(std::ostream& out, const std::vector<std::string>& ids,
                         const PValueMatrix& matrix) {
  out << "id,p1,p2\n";
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    out << ids[i] << ',' << format_number(matrix[i].p1) << ','
        << format_number(matrix[i].p2) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Analysis result table

inline std::optional<ThresholdMethod> parse_threshold_method(std::string_view s) {
  for (auto m : {ThresholdMethod::default_rule, ThresholdMethod::fixed,
                 ThresholdMethod::oracle_constraint,
                 ThresholdMethod::oracle_first_order,
                 ThresholdMethod::oracle_product, ThresholdMethod::adaptive}) {
    if (s == to_string(m)) return m;
  }
  return std::nullopt;
}

/// Header block of `# key: value` lines followed by the per-row table
/// `id,p1,p2,min,max,selected,adjusted,rejected,rejected_at_threshold`.
/// The last column is NA unless the threshold is adaptive.
inline void write_analysis(std::ostream& out,
                           const std::vector<std::string>& ids,
                           const PValueMatrix& matrix,
                           const TestResult& result) {
  const auto& t = result.threshold_used;
  const auto& d = t.diagnostics;
  out << "# screenmin analysis\n";
  out << "# alpha: " << format_number(result.alpha) << '\n';
  out << "# threshold_method: " << to_string(t.method) << '\n';
  out << "# threshold: " << format_number(t.c) << '\n';
  out << "# selected: " << result.selected.size() << '\n';
  out << "# testing_threshold: " << format_number(result.testing_threshold())
      << '\n';
  out << "# rejected: " << result.rejected.size() << '\n';
  out << "# discoveries: " << result.discoveries().size() << '\n';
  out << "# iterations: " << d.iterations << '\n';
  out << "# residual: " << format_number(d.residual) << '\n';
  if (d.grid_index) out << "# grid_index: " << *d.grid_index << '\n';
  if (d.expected_selected) {
    out << "# expected_selected: " << format_number(*d.expected_selected)
        << '\n';
  }
  if (d.continuous_threshold) {
    out << "# continuous_threshold: " << format_number(*d.continuous_threshold)
        << '\n';
  }
  if (d.selected_count) out << "# selected_count: " << *d.selected_count << '\n';
  if (d.degenerate) out << "# degenerate: 1\n";
  if (d.no_root) out << "# no_root: 1\n";

  std::vector<char> selected(matrix.size(), 0), rejected(matrix.size(), 0),
      coinciding(matrix.size(), 0);
  for (auto i : result.selected) selected[i] = 1;
  for (auto i : result.rejected) rejected[i] = 1;
  if (result.coinciding_rejected) {
    for (auto i : *result.coinciding_rejected) coinciding[i] = 1;
  }
  out << "id,p1,p2,min,max,selected,adjusted,rejected,rejected_at_threshold\n";
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    out << ids[i] << ',' << format_number(matrix[i].p1) << ','
        << format_number(matrix[i].p2) << ',' << format_number(matrix[i].min())
        << ',' << format_number(matrix[i].max()) << ','
        << int(selected[i]) << ',' << format_number(result.adjusted[i]) << ','
        << int(rejected[i]) << ','
        << (result.coinciding_rejected ? (coinciding[i] ? "1" : "0") : "NA")
        << '\n';
  }
}

struct AnalysisOutput {
  std::vector<std::string> ids;
  PValueMatrix matrix;
  TestResult result;
};

/// Parses the output of write_analysis.
inline AnalysisOutput read_analysis(std::istream& in) {
  std::map<std::string, std::string, std::less<>> header;
  std::string line;
  std::size_t line_no = 0;
  bool in_table = false;
  std::vector<std::string> ids;
  std::vector<PValuePair> rows;
  TestResult result;
  std::vector<std::size_t> coinciding;
  bool any_coinciding_column = false;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto t = detail::trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      const auto colon = t.find(':');
      if (colon != std::string_view::npos) {
        header.emplace(std::string(detail::trim(t.substr(1, colon - 1))),
                       std::string(detail::trim(t.substr(colon + 1))));
      }
      continue;
    }
    if (!in_table) {
      in_table = true;
      continue;
    }
    const auto f = detail::split(t, ',');
    if (f.size() != 9) throw parse_error(line_no, "expected 9 fields");
    const auto p1 = detail::to_double(f[1]);
    const auto p2 = detail::to_double(f[2]);
    const auto adjusted = detail::to_double(f[6]);
    if (!p1 || !p2 || !adjusted) throw parse_error(line_no, "bad number");
    const std::size_t i = rows.size();
    ids.emplace_back(f[0]);
    rows.push_back({*p1, *p2});
    result.adjusted.push_back(*adjusted);
    if (f[5] == "1") result.selected.push_back(i);
    if (f[7] == "1") result.rejected.push_back(i);
    if (f[8] != "NA") {
      any_coinciding_column = true;
      if (f[8] == "1") coinciding.push_back(i);
    }
  }
  if (rows.empty()) throw parse_error(line_no, "no data rows");

  auto get = [&](std::string_view key) -> const std::string* {
    const auto it = header.find(key);
    return it == header.end() ? nullptr : &it->second;
  };
  auto number = [&](std::string_view key) -> std::optional<double> {
    const auto* v = get(key);
    if (!v) return std::nullopt;
    return detail::to_double(*v);
  };
  auto count = [&](std::string_view key) -> std::optional<std::size_t> {
    const auto* v = get(key);
    if (!v) return std::nullopt;
    return detail::to_integer<std::size_t>(*v);
  };

  const auto alpha = number("alpha");
  const auto c = number("threshold");
  const auto* method = get("threshold_method");
  if (!alpha || !c || !method) throw parse_error(0, "incomplete header");
  const auto parsed_method = parse_threshold_method(*method);
  if (!parsed_method) throw parse_error(0, "unknown threshold method");
  result.alpha = *alpha;
  result.threshold_used.c = *c;
  result.threshold_used.method = *parsed_method;
  auto& d = result.threshold_used.diagnostics;
  if (const auto it = count("iterations")) d.iterations = static_cast<int>(*it);
  if (const auto r = number("residual")) d.residual = *r;
  d.grid_index = count("grid_index");
  d.expected_selected = number("expected_selected");
  d.continuous_threshold = number("continuous_threshold");
  d.selected_count = count("selected_count");
  d.degenerate = get("degenerate") != nullptr;
  d.no_root = get("no_root") != nullptr;
  if (any_coinciding_column) result.coinciding_rejected = std::move(coinciding);
  return {std::move(ids), PValueMatrix(std::move(rows)), std::move(result)};
}

// ---------------------------------------------------------------------------
// Simulation configs

/// A simulation config whose list-valued keys expand to a Cartesian grid.
struct SimGrid {
  SimConfig base;
  std::vector<std::size_t> m_values{200};
  std::vector<double> pi1_values{0.1};
  double pi2 = 0.05;
  std::vector<std::pair<double, double>> snr_values{{3.0, 3.0}};
  std::vector<double> rho_values{0.0};

  /// Cells in order m, pi1, snr, rho (rho varies fastest).
  std::vector<SimConfig> expand() const {
    std::vector<SimConfig> cells;
    for (auto m : m_values) {
      for (double pi1 : pi1_values) {
        for (const auto& [s1, s2] : snr_values) {
          for (double rho : rho_values) {
            SimConfig cfg = base;
            cfg.m = m;
            double pi0 = 1.0 - pi1 - pi2;
            if (pi0 < 0.0 && pi0 > -1e-12) pi0 = 0.0;
            cfg.mix = {pi0, pi1, pi2};
            cfg.snr1 = s1;
            cfg.snr2 = s2;
            cfg.rho = rho;
            cfg.validate();
            cells.push_back(cfg);
          }
        }
      }
    }
    return cells;
  }
};

inline std::optional<ProcedureKind> parse_procedure(std::string_view s) {
  for (auto k : {ProcedureKind::oracle_sm, ProcedureKind::adafilter,
                 ProcedureKind::default_sm, ProcedureKind::bonferroni}) {
    if (s == to_string(k)) return k;
  }
  if (s == "oracle") return ProcedureKind::oracle_sm;
  if (s == "adaptive") return ProcedureKind::adafilter;
  if (s == "default") return ProcedureKind::default_sm;
  return std::nullopt;
}

inline std::optional<OracleMethod> parse_oracle_method(std::string_view s) {
  if (s == "constraint") return OracleMethod::constraint;
  if (s == "first_order") return OracleMethod::first_order;
  if (s == "product") return OracleMethod::product;
  return std::nullopt;
}

/// `key = value` lines; list values are comma separated. Keys: m, pi1, pi2,
/// snr (entries `S` or `S1:S2`), rho, reps, alpha, seed, procedures,
/// oracle_method, random_side.
inline SimGrid read_sim_config(std::istream& in) {
  SimGrid grid;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank_or_comment(line)) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw parse_error(line_no, "expected key = value");
    const auto key = detail::trim(std::string_view(line).substr(0, eq));
    const auto value = detail::trim(std::string_view(line).substr(eq + 1));
    const auto items = detail::split(value, ',');

    auto doubles = [&] {
      std::vector<double> out;
      for (auto item : items) {
        const auto v = detail::to_double(item);
        if (!v) throw parse_error(line_no, "invalid number '" + std::string(item) + "'");
        out.push_back(*v);
      }
      return out;
    };
    auto single_double = [&] {
      const auto v = doubles();
      if (v.size() != 1) throw parse_error(line_no, "expected a single value");
      return v.front();
    };
    auto single_uint = [&] {
      if (items.size() != 1) throw parse_error(line_no, "expected a single value");
      const auto v = detail::to_integer<std::uint64_t>(items.front());
      if (!v) throw parse_error(line_no, "invalid integer");
      return *v;
    };

    if (key == "m") {
      grid.m_values.clear();
      for (auto item : items) {
        const auto v = detail::to_integer<std::size_t>(item);
        if (!v || *v == 0) throw parse_error(line_no, "invalid m");
        grid.m_values.push_back(*v);
      }
    } else if (key == "pi1") {
      grid.pi1_values = doubles();
    } else if (key == "pi2") {
      grid.pi2 = single_double();
    } else if (key == "snr") {
      grid.snr_values.clear();
      for (auto item : items) {
        const auto colon = item.find(':');
        const auto s1 = detail::to_double(item.substr(0, colon));
        const auto s2 = colon == std::string_view::npos
                            ? s1
                            : detail::to_double(item.substr(colon + 1));
        if (!s1 || !s2) throw parse_error(line_no, "invalid snr '" + std::string(item) + "'");
        grid.snr_values.emplace_back(*s1, *s2);
      }
    } else if (key == "rho") {
      grid.rho_values = doubles();
    } else if (key == "reps") {
      grid.base.n_reps = single_uint();
    } else if (key == "alpha") {
      grid.base.alpha = single_double();
    } else if (key == "seed") {
      grid.base.seed = single_uint();
    } else if (key == "procedures") {
      grid.base.procedures.clear();
      for (auto item : items) {
        const auto p = parse_procedure(item);
        if (!p) throw parse_error(line_no, "unknown procedure '" + std::string(item) + "'");
        grid.base.procedures.push_back(*p);
      }
    } else if (key == "oracle_method") {
      const auto m = parse_oracle_method(value);
      if (!m) throw parse_error(line_no, "unknown oracle method");
      grid.base.oracle_method = *m;
    } else if (key == "random_side") {
      if (value == "true" || value == "1") {
        grid.base.random_side = true;
      } else if (value == "false" || value == "0") {
        grid.base.random_side = false;
      } else {
        throw parse_error(line_no, "random_side must be true or false");
      }
    } else {
      throw parse_error(line_no, "unknown key '" + std::string(key) + "'");
    }
  }
  return grid;
}

inline void write_sim_header(std::ostream& out) {
  out << "m,pi0,pi1,pi2,snr1,snr2,rho,reps,alpha,seed,procedure,fwer,fwer_se,"
         "power,power_se,oracle_c\n";
}

/// One row per procedure.
inline void write_sim_rows(std::ostream& out, const SimResult& result) {
  const auto& c = result.config;
  for (const auto& e : result.estimates) {
    out << c.m << ',' << format_number(c.mix.pi0) << ','
        << format_number(c.mix.pi1) << ',' << format_number(c.mix.pi2) << ','
        << format_number(c.snr1) << ',' << format_number(c.snr2) << ','
        << format_number(c.rho) << ',' << result.n_reps << ','
        << format_number(c.alpha) << ',' << c.seed << ','
        << to_string(e.procedure) << ',' << format_number(e.fwer) << ','
        << format_number(e.fwer_se) << ',' << format_number(e.power) << ','
        << format_number(e.power_se) << ','
        << (result.oracle && e.procedure == ProcedureKind::oracle_sm
                ? format_number(result.oracle->c)
                : std::string("NA"))
        << '\n';
  }
}

// ---------------------------------------------------------------------------
// Curves

/// `points` values log-spaced from lo to hi; a single point is hi.
inline std::vector<double> log_grid(double lo, double hi, std::size_t points) {
  std::vector<double> grid(points);
  for (std::size_t j = 0; j < points; ++j) {
    const double t = points == 1 ? 1.0
                                 : static_cast<double>(j) /
                                       static_cast<double>(points - 1);
    grid[j] = std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)));
  }
  if (!grid.empty()) grid.back() = hi;
  return grid;
}

/// FWER and power of ScreenMin as functions of the selection threshold,
/// with the three oracle thresholds in the header and marked in the
/// `oracle` column on the first grid point at or above c*.
inline void write_threshold_curve(std::ostream& out, double alpha,
                                  const HypothesisMix& mix,
                                  const NormalPair& model, std::size_t m,
                                  std::size_t points, double c_min) {
  const auto constraint =
      oracle_threshold(alpha, mix, model, m, OracleMethod::constraint);
  const auto first_order =
      oracle_threshold(alpha, mix, model, m, OracleMethod::first_order);
  const auto product =
      oracle_threshold(alpha, mix, model, m, OracleMethod::product);
  out << "# screenmin threshold curve\n";
  out << "# alpha: " << format_number(alpha) << '\n';
  out << "# m: " << m << '\n';
  out << "# mix: " << format_number(mix.pi0) << ',' << format_number(mix.pi1)
      << ',' << format_number(mix.pi2) << '\n';
  out << "# snr: " << format_number(model.first.snr) << ','
      << format_number(model.second.snr) << '\n';
  out << "# oracle_constraint: " << format_number(constraint.c) << '\n';
  out << "# oracle_first_order: " << format_number(first_order.c) << '\n';
  out << "# oracle_product: " << format_number(product.c) << '\n';
  out << "c,expected_selected,fwer_approx,fwer_bound,power,bonferroni_power,"
         "oracle\n";
  const double bonf = bonferroni_power(alpha, model, m);
  bool marked = false;
  for (double c : log_grid(c_min, alpha, points)) {
    const bool mark = !marked && c >= constraint.c;
    marked = marked || mark;
    out << format_number(c) << ','
        << format_number(expected_selected(c, mix, model, m)) << ','
        << format_number(fwer_approx(c, alpha, mix, model, m)) << ','
        << (m <= exact_pmf_cap
                ? format_number(fwer_upper_bound(c, alpha, mix, model, m))
                : std::string("NA"))
        << ',' << format_number(power_unconditional(c, alpha, mix, model, m))
        << ',' << format_number(bonf) << ',' << (mark ? 1 : 0) << '\n';
  }
}

/// P0(u, c) for a one-nonnull pair as a function of the SNR of its false
/// component, for each selection threshold in `c_values`.
inline void write_quantile_curve(std::ostream& out, double u,
                                 const std::vector<double>& c_values,
                                 double snr_max, std::size_t points) {
  out << "# screenmin conditional null quantile\n";
  out << "# u: " << format_number(u) << '\n';
  out << "snr,c,p0\n";
  for (double c : c_values) {
    for (std::size_t j = 0; j < points; ++j) {
      const double snr = points == 1 ? 0.0
                                     : snr_max * static_cast<double>(j) /
                                           static_cast<double>(points - 1);
      out << format_number(snr) << ',' << format_number(c) << ','
          << format_number(conditional_null_cdf(u, c, AltModel{snr})) << '\n';
    }
  }
}

}  // namespace screenmin::io

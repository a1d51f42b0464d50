// Command-line front end for the screenmin library.
//
// Exit codes: 0 ok, 2 input error, 3 invalid parameters, 4 internal error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "screenmin/screenmin.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitParams = 3;
constexpr int kExitInternal = 4;

struct invalid_parameters : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = screenmin::io::detail::to_double(item);
    if (!v) throw invalid_parameters(std::string("invalid ") + what + ": '" + text + "'");
    out.push_back(*v);
  }
  if (out.empty()) throw invalid_parameters(std::string("empty ") + what);
  return out;
}

screenmin::HypothesisMix parse_mix(const std::string& text) {
  const auto v = parse_list(text, "--mix");
  if (v.size() != 3) throw invalid_parameters("--mix expects PI0,PI1,PI2");
  screenmin::HypothesisMix mix{v[0], v[1], v[2]};
  try {
    mix.validate();
  } catch (const std::exception& e) {
    throw invalid_parameters(e.what());
  }
  return mix;
}

screenmin::NormalPair parse_snr(const std::string& text) {
  const auto v = parse_list(text, "--snr");
  if (v.size() > 2) throw invalid_parameters("--snr expects S1[,S2]");
  for (double s : v) {
    if (!(s >= 0.0)) throw invalid_parameters("--snr must be nonnegative");
  }
  return {screenmin::AltModel{v.front()}, screenmin::AltModel{v.back()}};
}

void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw invalid_parameters("--alpha must lie in (0, 1)");
  }
}

struct CommonOptions {
  double alpha = 0.05;
  std::string threshold = "default";
  std::optional<std::string> mix;
  std::optional<std::string> snr;
  std::string out;
};

screenmin::ThresholdSpec parse_threshold(const CommonOptions& opt) {
  const std::string& t = opt.threshold;
  if (t == "default") return screenmin::DefaultThreshold{};
  if (t == "adaptive") return screenmin::AdaptiveThreshold{};
  if (t.rfind("fixed:", 0) == 0) {
    const auto c = screenmin::io::detail::to_double(t.substr(6));
    if (!c || !(*c > 0.0 && *c <= 1.0)) {
      throw invalid_parameters("fixed threshold must lie in (0, 1]");
    }
    return screenmin::FixedThreshold{*c};
  }
  if (t.rfind("oracle:", 0) == 0) {
    const auto method = screenmin::io::parse_oracle_method(t.substr(7));
    if (!method) throw invalid_parameters("unknown oracle method in '" + t + "'");
    if (!opt.mix || !opt.snr) {
      throw invalid_parameters("oracle thresholds require --mix and --snr");
    }
    return screenmin::OracleThreshold{parse_mix(*opt.mix), parse_snr(*opt.snr),
                                      *method};
  }
  throw invalid_parameters("unknown --threshold '" + t + "'");
}

/// Output stream for `path`, stdout when empty or "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw invalid_parameters("cannot open output file " + path);
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

int cmd_analyze(const std::string& input, const CommonOptions& opt) {
  require_alpha(opt.alpha);
  const auto spec = parse_threshold(opt);
  std::ifstream in(input);
  if (!in) {
    std::cerr << "error: cannot open " << input << '\n';
    return kExitInput;
  }
  const auto data = screenmin::io::read_matrix(in);
  const auto result = screenmin::screenmin(data.matrix, spec, opt.alpha);
  Output out(opt.out);
  screenmin::io::write_analysis(out.stream(), data.ids, data.matrix, result);
  return kExitOk;
}

int cmd_threshold(const CommonOptions& opt, std::size_t m) {
  require_alpha(opt.alpha);
  if (m < 1) throw invalid_parameters("--m must be at least 1");
  if (opt.threshold == "adaptive") {
    throw invalid_parameters("the adaptive threshold needs data; use analyze");
  }
  std::optional<screenmin::HypothesisMix> mix;
  std::optional<screenmin::NormalPair> model;
  if (opt.mix) mix = parse_mix(*opt.mix);
  if (opt.snr) model = parse_snr(*opt.snr);

  screenmin::ThresholdResult result;
  const auto spec = parse_threshold(opt);
  if (const auto* o = std::get_if<screenmin::OracleThreshold>(&spec)) {
    result = screenmin::oracle_threshold(opt.alpha, o->mix, o->model, m, o->method);
  } else if (const auto* f = std::get_if<screenmin::FixedThreshold>(&spec)) {
    result = {f->c, screenmin::ThresholdMethod::fixed, {}};
  } else {
    result = {screenmin::default_threshold(opt.alpha, m),
              screenmin::ThresholdMethod::default_rule, {}};
  }

  using screenmin::io::format_number;
  Output out(opt.out);
  auto& os = out.stream();
  os << "method: " << screenmin::to_string(result.method) << '\n';
  os << "c: " << format_number(result.c) << '\n';
  os << "iterations: " << result.diagnostics.iterations << '\n';
  os << "residual: " << format_number(result.diagnostics.residual) << '\n';
  if (result.diagnostics.degenerate) os << "degenerate: 1\n";
  if (result.diagnostics.no_root) os << "no_root: 1\n";
  if (mix && model) {
    const auto r = screenmin::evaluate_threshold(result.c, opt.alpha, *mix, *model, m);
    os << "expected_selected: " << format_number(r.expected_selected) << '\n';
    os << "fwer_approx: " << format_number(r.fwer_approx) << '\n';
    os << "fwer_bound: " << format_number(r.fwer_bound) << '\n';
    os << "fwer_bound_is_exact: " << (r.bound_is_exact ? 1 : 0) << '\n';
    os << "power: " << format_number(r.power) << '\n';
    os << "power_from_plugin: " << (r.power_from_plugin ? 1 : 0) << '\n';
  }
  return kExitOk;
}

struct SimulateOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  std::optional<std::string> rho;
  std::optional<std::size_t> m;
  std::optional<std::string> mix;
  std::optional<std::string> snr;
  unsigned threads = 0;
  std::string out;
};

int cmd_simulate(const SimulateOptions& opt) {
  std::ifstream in(opt.config);
  if (!in) {
    std::cerr << "error: cannot open " << opt.config << '\n';
    return kExitParams;
  }
  screenmin::io::SimGrid grid;
  try {
    grid = screenmin::io::read_sim_config(in);
  } catch (const screenmin::io::parse_error& e) {
    throw invalid_parameters(std::string("config: ") + e.what());
  }
  if (opt.seed) grid.base.seed = *opt.seed;
  if (opt.reps) grid.base.n_reps = *opt.reps;
  if (opt.m) grid.m_values = {*opt.m};
  if (opt.rho) grid.rho_values = parse_list(*opt.rho, "--rho");
  if (opt.mix) {
    const auto mix = parse_mix(*opt.mix);
    grid.pi1_values = {mix.pi1};
    grid.pi2 = mix.pi2;
  }
  if (opt.snr) {
    const auto model = parse_snr(*opt.snr);
    grid.snr_values = {{model.first.snr, model.second.snr}};
  }
  std::vector<screenmin::SimConfig> cells;
  try {
    cells = grid.expand();
  } catch (const screenmin::domain_error& e) {
    throw invalid_parameters(std::string("config: ") + e.what());
  }

  Output out(opt.out);
  screenmin::io::write_sim_header(out.stream());
  for (const auto& cell : cells) {
    const auto result = screenmin::run_simulation(cell, opt.threads);
    screenmin::io::write_sim_rows(out.stream(), result);
  }
  return kExitOk;
}

struct CurveOptions {
  std::string kind = "threshold";
  double alpha = 0.05;
  std::string mix = "0.70,0.25,0.05";
  std::string snr = "2";
  std::size_t m = 100;
  std::size_t grid = 200;
  std::optional<double> c_min;
  std::string c_values = "0.0001,0.001,0.01";
  double snr_max = 5.0;
  double u = 0.05;
  std::string out;
};

int cmd_curves(const CurveOptions& opt) {
  require_alpha(opt.alpha);
  if (opt.grid < 1) throw invalid_parameters("--grid must be at least 1");
  Output out(opt.out);
  if (opt.kind == "threshold") {
    if (opt.m < 1) throw invalid_parameters("--m must be at least 1");
    const double c_min =
        opt.c_min.value_or(opt.alpha / (10.0 * static_cast<double>(opt.m)));
    if (!(c_min > 0.0 && c_min <= opt.alpha)) {
      throw invalid_parameters("--c-min must lie in (0, alpha]");
    }
    screenmin::io::write_threshold_curve(out.stream(), opt.alpha,
                                         parse_mix(opt.mix), parse_snr(opt.snr),
                                         opt.m, opt.grid, c_min);
  } else if (opt.kind == "quantile") {
    const auto cs = parse_list(opt.c_values, "--c-values");
    for (double c : cs) {
      if (!(c > 0.0 && c <= 1.0)) throw invalid_parameters("--c-values must lie in (0, 1]");
    }
    if (!(opt.u > 0.0 && opt.u <= 1.0)) throw invalid_parameters("--u must lie in (0, 1]");
    if (!(opt.snr_max >= 0.0)) throw invalid_parameters("--snr-max must be nonnegative");
    screenmin::io::write_quantile_curve(out.stream(), opt.u, cs, opt.snr_max,
                                        opt.grid);
  } else {
    throw invalid_parameters("--kind must be threshold or quantile");
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Screening-then-testing of two-component union hypotheses"};
  app.require_subcommand(1);

  CommonOptions analyze_opt;
  std::string input;
  auto* analyze = app.add_subcommand("analyze", "Run ScreenMin on a p-value matrix");
  analyze->add_option("input", input, "CSV/TSV file with header id,p1,p2")->required();
  analyze->add_option("--alpha", analyze_opt.alpha, "FWER level");
  analyze->add_option("--threshold", analyze_opt.threshold,
                      "default | fixed:C | oracle:{constraint|first_order|product} | adaptive");
  analyze->add_option("--mix", analyze_opt.mix, "PI0,PI1,PI2 (oracle thresholds)");
  analyze->add_option("--snr", analyze_opt.snr, "S1[,S2] (oracle thresholds)");
  analyze->add_option("--out", analyze_opt.out, "Output file (default stdout)");

  CommonOptions threshold_opt;
  std::size_t threshold_m = 0;
  auto* threshold = app.add_subcommand("threshold", "Compute a selection threshold");
  threshold->add_option("--alpha", threshold_opt.alpha, "FWER level");
  threshold->add_option("--threshold", threshold_opt.threshold,
                        "default | fixed:C | oracle:{constraint|first_order|product}");
  threshold->add_option("--mix", threshold_opt.mix, "PI0,PI1,PI2");
  threshold->add_option("--snr", threshold_opt.snr, "S1[,S2]");
  threshold->add_option("--m", threshold_m, "Number of hypotheses")->required();
  threshold->add_option("--out", threshold_opt.out, "Output file (default stdout)");

  SimulateOptions sim_opt;
  sim_opt.threads = screenmin::default_thread_count();
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo FWER and power");
  simulate->add_option("config", sim_opt.config, "key = value config file")->required();
  simulate->add_option("--seed", sim_opt.seed, "Override seed");
  simulate->add_option("--reps", sim_opt.reps, "Override replication count");
  simulate->add_option("--rho", sim_opt.rho, "Override rho list");
  simulate->add_option("--m", sim_opt.m, "Override m");
  simulate->add_option("--mix", sim_opt.mix, "Override PI0,PI1,PI2");
  simulate->add_option("--snr", sim_opt.snr, "Override S1[,S2]");
  simulate->add_option("--threads", sim_opt.threads,
                       "Worker threads (default SCREENMIN_THREADS or all cores)");
  simulate->add_option("--out", sim_opt.out, "Output file (default stdout)");

  CurveOptions curve_opt;
  auto* curves = app.add_subcommand("curves", "Export FWER/power curves");
  curves->add_option("--kind", curve_opt.kind, "threshold | quantile");
  curves->add_option("--alpha", curve_opt.alpha, "FWER level");
  curves->add_option("--mix", curve_opt.mix, "PI0,PI1,PI2");
  curves->add_option("--snr", curve_opt.snr, "S1[,S2]");
  curves->add_option("--m", curve_opt.m, "Number of hypotheses");
  curves->add_option("--grid", curve_opt.grid, "Grid size");
  curves->add_option("--c-min", curve_opt.c_min, "Smallest c (threshold kind)");
  curves->add_option("--c-values", curve_opt.c_values, "Selection thresholds (quantile kind)");
  curves->add_option("--snr-max", curve_opt.snr_max, "Largest SNR (quantile kind)");
  curves->add_option("--u", curve_opt.u, "Testing threshold u (quantile kind)");
  curves->add_option("--out", curve_opt.out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitParams;
  }

  try {
    if (*analyze) return cmd_analyze(input, analyze_opt);
    if (*threshold) return cmd_threshold(threshold_opt, threshold_m);
    if (*simulate) return cmd_simulate(sim_opt);
    if (*curves) return cmd_curves(curve_opt);
  } catch (const screenmin::io::parse_error& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const invalid_parameters& e) {
    std::cerr << "invalid parameters: " << e.what() << '\n';
    return kExitParams;
  } catch (const screenmin::domain_error& e) {
    std::cerr << "invalid parameters: " << e.what() << '\n';
    return kExitParams;
  } catch (const screenmin::simulation_error& e) {
    std::cerr << "simulation failed at " << e.what() << '\n';
    return kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}

#include "projopt/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace projopt {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error("config: bad numeric value for " + key + ": '" + value + "'");
  }
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error("config: bad integer value for " + key + ": '" + value + "'");
  }
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

const char* to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kToySweep:
      return "toy_sweep";
    case ExperimentKind::kChaosBifurcation:
      return "chaos_bifurcation";
    case ExperimentKind::kGpRate:
      return "gp_rate";
    case ExperimentKind::kGpBifurcation:
      return "gp_bifurcation";
    case ExperimentKind::kGpCompare:
      return "gp_compare";
    case ExperimentKind::kAnalyze:
      return "analyze";
  }
  return "unknown";
}

std::vector<double> GridSpec::points() const {
  if (count < 2) throw Error("config: grid count must be >= 2");
  std::vector<double> pts(count);
  if (log_spacing) {
    if (start <= 0.0 || stop <= 0.0) {
      throw Error("config: log grid requires positive endpoints");
    }
    const double l0 = std::log(start), l1 = std::log(stop);
    for (int i = 0; i < count; ++i) {
      pts[i] = std::exp(l0 + (l1 - l0) * i / (count - 1));
    }
  } else {
    for (int i = 0; i < count; ++i) {
      pts[i] = start + (stop - start) * i / (count - 1);
    }
  }
  return pts;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (key == "experiment") {
    if (value == "toy_sweep") experiment = ExperimentKind::kToySweep;
    else if (value == "chaos_bifurcation") experiment = ExperimentKind::kChaosBifurcation;
    else if (value == "gp_rate") experiment = ExperimentKind::kGpRate;
    else if (value == "gp_bifurcation") experiment = ExperimentKind::kGpBifurcation;
    else if (value == "gp_compare") experiment = ExperimentKind::kGpCompare;
    else if (value == "analyze") experiment = ExperimentKind::kAnalyze;
    else throw Error("config: unknown experiment '" + value + "'");
  } else if (key == "grid_start") grid.start = parse_double(key, value);
  else if (key == "grid_stop") grid.stop = parse_double(key, value);
  else if (key == "grid_count") grid.count = static_cast<int>(parse_int(key, value));
  else if (key == "grid_spacing") {
    if (value == "linear") grid.log_spacing = false;
    else if (value == "log") grid.log_spacing = true;
    else throw Error("config: grid_spacing must be linear or log");
  }
  else if (key == "seed") seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "jobs") jobs = static_cast<int>(parse_int(key, value));
  else if (key == "out") out = value;
  else if (key == "beta") beta = parse_double(key, value);
  else if (key == "beta_grad") beta_grad = parse_double(key, value);
  else if (key == "beta_scf") beta_scf = parse_double(key, value);
  else if (key == "tolerance") tolerance = parse_double(key, value);
  else if (key == "grad_tolerance") grad_tolerance = parse_double(key, value);
  else if (key == "max_iterations") max_iterations = static_cast<int>(parse_int(key, value));
  else if (key == "gap_tolerance") gap_tolerance = parse_double(key, value);
  else if (key == "rate_window") rate_window = static_cast<int>(parse_int(key, value));
  else if (key == "epsilon") epsilon = parse_double(key, value);
  else if (key == "c1") c1 = parse_double(key, value);
  else if (key == "c2") c2 = parse_double(key, value);
  else if (key == "n_b") n_b = static_cast<int>(parse_int(key, value));
  else if (key == "n_electrons") n_electrons = static_cast<int>(parse_int(key, value));
  else if (key == "alpha") alpha = parse_double(key, value);
  else if (key == "chaos_iterations") chaos_iterations = static_cast<int>(parse_int(key, value));
  else if (key == "chaos_tail") chaos_tail = static_cast<int>(parse_int(key, value));
  else if (key == "period_cap") period_cap = static_cast<int>(parse_int(key, value));
  else if (key == "period_tolerance") period_tolerance = parse_double(key, value);
  else if (key == "perturbation") perturbation = parse_double(key, value);
  else if (key == "rate_window_grad") rate_window_grad = static_cast<int>(parse_int(key, value));
  else if (key == "fd_step") fd_step = parse_double(key, value);
  else if (key == "oda_tolerance") oda_tolerance = parse_double(key, value);
  else if (key == "oda_max_iterations") oda_max_iterations = static_cast<int>(parse_int(key, value));
  else if (key == "analyze_model") analyze_model = value;
  else if (key == "analyze_kind") analyze_kind = value;
  else throw Error("config: unknown key '" + key + "'");
}

void ExperimentConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("config: cannot open '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error("config: " + path + ":" + std::to_string(lineno) +
                  ": expected key = value");
    }
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::items()
    const {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("experiment", to_string(experiment));
  kv.emplace_back("grid_start", format_double(grid.start));
  kv.emplace_back("grid_stop", format_double(grid.stop));
  kv.emplace_back("grid_count", std::to_string(grid.count));
  kv.emplace_back("grid_spacing", grid.log_spacing ? "log" : "linear");
  kv.emplace_back("seed", std::to_string(seed));
  kv.emplace_back("jobs", std::to_string(jobs));
  kv.emplace_back("beta", format_double(beta));
  kv.emplace_back("beta_grad", format_double(beta_grad));
  kv.emplace_back("beta_scf", format_double(beta_scf));
  kv.emplace_back("tolerance", format_double(tolerance));
  kv.emplace_back("grad_tolerance", format_double(grad_tolerance));
  kv.emplace_back("max_iterations", std::to_string(max_iterations));
  kv.emplace_back("gap_tolerance", format_double(gap_tolerance));
  kv.emplace_back("rate_window", std::to_string(rate_window));
  kv.emplace_back("epsilon", format_double(epsilon));
  kv.emplace_back("c1", format_double(c1));
  kv.emplace_back("c2", format_double(c2));
  kv.emplace_back("n_b", std::to_string(n_b));
  kv.emplace_back("n_electrons", std::to_string(n_electrons));
  kv.emplace_back("alpha", format_double(alpha));
  kv.emplace_back("chaos_iterations", std::to_string(chaos_iterations));
  kv.emplace_back("chaos_tail", std::to_string(chaos_tail));
  kv.emplace_back("period_cap", std::to_string(period_cap));
  kv.emplace_back("period_tolerance", format_double(period_tolerance));
  kv.emplace_back("perturbation", format_double(perturbation));
  kv.emplace_back("rate_window_grad", std::to_string(rate_window_grad));
  kv.emplace_back("fd_step", format_double(fd_step));
  kv.emplace_back("oda_tolerance", format_double(oda_tolerance));
  kv.emplace_back("oda_max_iterations", std::to_string(oda_max_iterations));
  kv.emplace_back("analyze_model", analyze_model);
  kv.emplace_back("analyze_kind", analyze_kind);
  return kv;
}

void ExperimentConfig::validate() const {
  if (grid.count < 2) throw Error("config: grid count must be >= 2");
  if (jobs < 1) throw Error("config: jobs must be >= 1");
  if (n_b < 2) throw Error("config: n_b must be >= 2");
  if (n_electrons < 1 || n_electrons > n_b) {
    throw Error("config: n_electrons must lie in [1, n_b]");
  }
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.experiment = kind;
  switch (kind) {
    case ExperimentKind::kToySweep:
      c.grid = {0.0, 1.0, 200, false};
      c.beta = 0.1;
      c.tolerance = 1e-12;
      c.max_iterations = 50000;
      c.rate_window = 40;
      break;
    case ExperimentKind::kChaosBifurcation:
      c.grid = {0.0, 2.2, 660, false};
      c.c2 = 1.0;
      c.n_electrons = 1;
      c.chaos_iterations = 1500;
      break;
    case ExperimentKind::kGpRate:
      c.n_b = 100;
      c.n_electrons = 1;
      c.alpha = 50.0;
      c.beta_grad = 9e-5;
      c.beta_scf = 0.1;
      c.tolerance = 1e-12;
      c.grad_tolerance = 1e-8;
      c.max_iterations = 100000;
      c.rate_window = 40;
      c.rate_window_grad = 300;
      c.perturbation = 1e-2;
      break;
    case ExperimentKind::kGpBifurcation:
      c.grid = {0.0, 30.0, 120, false};
      c.n_b = 40;
      c.n_electrons = 2;
      c.beta_grad = 4e-4;
      c.grad_tolerance = 1e-10;
      c.max_iterations = 300000;
      c.oda_tolerance = 1e-10;
      c.oda_max_iterations = 50000;
      c.gap_tolerance = 1e-10;
      break;
    case ExperimentKind::kGpCompare:
      c.n_b = 100;
      c.n_electrons = 2;
      c.alpha = 30.0;
      c.beta_grad = 8e-5;
      c.beta_scf = 0.1;
      c.tolerance = 1e-12;
      c.grad_tolerance = 1e-9;
      c.max_iterations = 500000;
      c.oda_tolerance = 1e-11;
      c.oda_max_iterations = 50000;
      break;
    case ExperimentKind::kAnalyze:
      c.analyze_model = "toy";
      c.analyze_kind = "scf";
      c.epsilon = 0.1;
      c.n_b = 100;
      c.n_electrons = 1;
      c.alpha = 50.0;
      c.c1 = 0.2;
      c.c2 = 0.0;
      break;
  }
  return c;
}

}  // namespace projopt

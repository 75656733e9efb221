#pragma once

// CLI-facing configuration: flat key-value config files, flag overrides,
// result tables (CSV/JSON) and the per-step trace writer. Defaults match
// the benchmark's nominal tracking scenario.

#include <nlohmann/json.hpp>

#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "modal_lmmse/bench.hpp"

namespace modal_lmmse {

struct CliConfig {
  std::vector<double> densities = {0.2, 0.5, 1.0, 2.0};
  int runs = 1000;
  int horizon = 400;
  double pd = 0.95;
  double pg = 0.99;
  std::uint64_t seed = 1;
  std::vector<std::string> filters = {"lmmse", "nn", "pda"};
  std::string out;  // empty: derived from format
  std::string format = "csv";
  std::string miss_weight = "paper";
  std::optional<int> trace_run_index;
  int verbosity = 0;

  std::string output_path() const {
    if (!out.empty()) return out;
    return format == "json" ? "results.json" : "results.csv";
  }
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace cli_detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

inline double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key + ": not a number: '" + v + "'");
  }
}

inline long long parse_int(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key + ": not an integer: '" + v + "'");
  }
}

}  // namespace cli_detail

// Applies one key=value setting; throws ConfigError naming the key.
inline void apply_key(CliConfig& cfg, const std::string& key,
                      const std::string& value) {
  using cli_detail::parse_double;
  using cli_detail::parse_int;
  if (key == "rho") {
    cfg.densities.clear();
    for (const auto& part : cli_detail::split(value, ',')) {
      cfg.densities.push_back(parse_double(part, key));
    }
  } else if (key == "runs") {
    cfg.runs = static_cast<int>(parse_int(value, key));
  } else if (key == "horizon") {
    cfg.horizon = static_cast<int>(parse_int(value, key));
  } else if (key == "pd") {
    cfg.pd = parse_double(value, key);
  } else if (key == "pg") {
    cfg.pg = parse_double(value, key);
  } else if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(parse_int(value, key));
  } else if (key == "filters") {
    cfg.filters = cli_detail::split(value, ',');
  } else if (key == "out") {
    cfg.out = value;
  } else if (key == "format") {
    cfg.format = value;
  } else if (key == "miss_weight") {
    cfg.miss_weight = value;
  } else if (key == "trace") {
    cfg.trace_run_index = static_cast<int>(parse_int(value, key));
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

inline void validate_config(const CliConfig& cfg) {
  if (cfg.pd <= 0.0 || cfg.pd > 1.0) throw ConfigError("pd out of range");
  if (cfg.pg <= 0.0 || cfg.pg >= 1.0) throw ConfigError("pg out of range");
  if (cfg.runs < 1) throw ConfigError("runs must be >= 1");
  if (cfg.horizon < 1) throw ConfigError("horizon must be >= 1");
  if (cfg.densities.empty()) throw ConfigError("rho list is empty");
  for (double rho : cfg.densities) {
    if (rho < 0.0) throw ConfigError("rho must be >= 0");
  }
  if (cfg.format != "csv" && cfg.format != "json") {
    throw ConfigError("format must be csv or json");
  }
  if (cfg.miss_weight != "paper" && cfg.miss_weight != "standard") {
    throw ConfigError("miss_weight must be paper or standard");
  }
  if (cfg.filters.empty()) throw ConfigError("filters list is empty");
  for (const auto& f : cfg.filters) {
    if (f != "lmmse" && f != "nn" && f != "pda") {
      throw ConfigError("unknown filter name '" + f + "'");
    }
  }
  if (cfg.trace_run_index && (*cfg.trace_run_index < 0 ||
                              *cfg.trace_run_index >= cfg.runs)) {
    throw ConfigError("trace run index out of range");
  }
}

// Flat key-value text: one `key = value` per line, '#' comments, lists
// comma-separated.
inline CliConfig parse_config_text(const std::string& text) {
  CliConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    line = strip(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("malformed config line " + std::to_string(line_no) +
                        ": '" + line + "'");
    }
    apply_key(cfg, strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
  }
  return cfg;
}

inline CliConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

inline std::string serialize_config(const CliConfig& cfg) {
  std::ostringstream os;
  os << std::setprecision(17);
  auto join = [](const auto& xs) {
    std::ostringstream s;
    s << std::setprecision(17);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i) s << ",";
      s << xs[i];
    }
    return s.str();
  };
  os << "rho = " << join(cfg.densities) << "\n";
  os << "runs = " << cfg.runs << "\n";
  os << "horizon = " << cfg.horizon << "\n";
  os << "pd = " << cfg.pd << "\n";
  os << "pg = " << cfg.pg << "\n";
  os << "seed = " << cfg.seed << "\n";
  os << "filters = " << join(cfg.filters) << "\n";
  if (!cfg.out.empty()) os << "out = " << cfg.out << "\n";
  os << "format = " << cfg.format << "\n";
  os << "miss_weight = " << cfg.miss_weight << "\n";
  if (cfg.trace_run_index) os << "trace = " << *cfg.trace_run_index << "\n";
  return os.str();
}

// Nominal tracking scenario: near-constant-velocity target, scalar
// position sensor.
inline TrackingSystem default_tracking_system() {
  TrackingSystem sys;
  sys.A = Matrix{{1.0, 0.2}, {0.0, 0.95}};
  sys.C = Matrix{{0.25}, {0.5}};
  sys.x0_mean = Vector::Zero(2);
  sys.P0 = 30.0 * Matrix::Identity(2, 2);
  return sys;
}

inline ExperimentConfig to_experiment_config(const CliConfig& cfg) {
  validate_config(cfg);
  ExperimentConfig exp;
  exp.horizon = cfg.horizon;
  exp.runs = cfg.runs;
  exp.densities = cfg.densities;
  exp.system = default_tracking_system();
  RowVector H_nom(2);
  H_nom << 1.0, 0.0;
  exp.clutter = make_clutter_params(H_nom, std::sqrt(30.0), cfg.pd, cfg.pg,
                                    /*rho=*/0.0);
  exp.clutter.miss_weight = cfg.miss_weight == "standard"
                                ? MissWeight::kStandard
                                : MissWeight::kPaper;
  exp.seed = cfg.seed;
  exp.filters.clear();
  for (const auto& f : cfg.filters) {
    if (f == "lmmse") exp.filters.push_back(FilterKind::kLmmse);
    if (f == "nn") exp.filters.push_back(FilterKind::kNn);
    if (f == "pda") exp.filters.push_back(FilterKind::kPda);
  }
  exp.threads = static_cast<int>(std::thread::hardware_concurrency());
  return exp;
}

inline void write_results_csv(std::ostream& os, const AggregateResult& res) {
  os << "rho,filter,mean_rmse,mean_loss_time,runs,seed\n";
  os << std::setprecision(17);
  for (const auto& row : res.rows) {
    os << row.rho << "," << filter_name(row.filter) << "," << row.mean_rmse
       << "," << row.mean_loss_time << "," << row.runs << "," << row.seed
       << "\n";
  }
}

inline void write_results_json(std::ostream& os, const AggregateResult& res) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& row : res.rows) {
    arr.push_back({{"rho", row.rho},
                   {"filter", filter_name(row.filter)},
                   {"mean_rmse", row.mean_rmse},
                   {"mean_loss_time", row.mean_loss_time},
                   {"runs", row.runs},
                   {"seed", row.seed}});
  }
  os << arr.dump(2) << "\n";
}

inline void write_trace_csv(std::ostream& os,
                            const std::vector<TraceRow>& trace,
                            const std::vector<FilterKind>& filters) {
  os << "k,true_pos,true_vel";
  for (FilterKind f : filters) {
    const std::string name = filter_name(f);
    os << "," << name << "_pos," << name << "_vel," << name << "_n,"
       << name << "_win_lo," << name << "_win_hi";
  }
  os << "\n";
  os << std::setprecision(17);
  for (const auto& row : trace) {
    os << row.k << "," << row.x_true(0) << "," << row.x_true(1);
    for (const auto& f : row.filters) {
      os << "," << f.estimate(0) << "," << f.estimate(1) << "," << f.n_meas
         << "," << f.window_lo << "," << f.window_hi;
    }
    os << "\n";
  }
}

inline void write_trace_json(std::ostream& os,
                             const std::vector<TraceRow>& trace,
                             const std::vector<FilterKind>& filters) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& row : trace) {
    nlohmann::json obj{{"k", row.k},
                       {"true_pos", row.x_true(0)},
                       {"true_vel", row.x_true(1)}};
    for (std::size_t fi = 0; fi < filters.size(); ++fi) {
      const std::string name = filter_name(filters[fi]);
      const auto& f = row.filters[fi];
      obj[name + "_pos"] = f.estimate(0);
      obj[name + "_vel"] = f.estimate(1);
      obj[name + "_n"] = f.n_meas;
      obj[name + "_win_lo"] = f.window_lo;
      obj[name + "_win_hi"] = f.window_hi;
    }
    arr.push_back(obj);
  }
  os << arr.dump(2) << "\n";
}

}  // namespace modal_lmmse

#ifndef LQHIER_CONFIG_HPP
#define LQHIER_CONFIG_HPP

#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "lqhier/heat1d.hpp"
#include "lqhier/hierarchy.hpp"

namespace lqhier {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace detail

// Sectioned key/value config text: `[section]` headers, `key = value` lines,
// `#` or `;` comments.  Typed getters record which keys were read so a loader
// can reject unknown (probably misspelled) keys afterwards.
class ConfigFile {
 public:
  static ConfigFile parse(std::istream& in, const std::string& origin) {
    ConfigFile config;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto comment = line.find_first_of("#;");
      if (comment != std::string::npos) line.erase(comment);
      line = detail::trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": unterminated section header");
        section = detail::trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": expected key = value");
      const std::string key = detail::trim(line.substr(0, eq));
      if (key.empty())
        throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": empty key");
      config.values_[section.empty() ? key : section + "." + key] = detail::trim(line.substr(eq + 1));
    }
    return config;
  }

  static ConfigFile load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file: " + path);
    return parse(in, path);
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    consumed_.insert(key);
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    consumed_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      size_t used = 0;
      const double v = std::stod(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw std::runtime_error("config key " + key + ": not a number: '" + it->second + "'");
    }
  }

  int get_int(const std::string& key, int fallback) const {
    const double v = get_double(key, fallback);
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v)
      throw std::runtime_error("config key " + key + ": not an integer");
    return i;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    consumed_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "off" || v == "no" || v == "0") return false;
    throw std::runtime_error("config key " + key + ": not a boolean: '" + v + "'");
  }

  std::vector<int> get_int_list(const std::string& key, std::vector<int> fallback) const {
    consumed_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<int> out;
    std::string token;
    std::istringstream in(it->second);
    while (in >> token) {
      if (!token.empty() && token.back() == ',') token.pop_back();
      if (token.empty()) continue;
      try {
        size_t used = 0;
        out.push_back(std::stoi(token, &used));
        if (used != token.size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw std::runtime_error("config key " + key + ": not an integer list");
      }
    }
    return out;
  }

  std::vector<std::string> unread_keys() const {
    std::vector<std::string> out;
    for (const auto& [key, value] : values_)
      if (consumed_.count(key) == 0) out.push_back(key);
    return out;
  }

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> consumed_;
};

// Complete description of one experiment: the problem family with its
// discretization, the hierarchy and kernel knobs, the parameter grid, and
// where outputs go.
struct RunConfig {
  std::string family = "heat1d";
  HeatConfig heat;

  // scalar family: x' = a x + b u with mu = (a) over [a_min, a_max]
  double scalar_b = 1.0;
  double scalar_terminal_weight = 1.0;
  double scalar_control_weight = 1.0;
  double scalar_x0 = 1.0;
  double scalar_xT = 0.0;
  double scalar_horizon = 1.0;
  int scalar_steps = 64;
  ParameterBox scalar_box{(Vector(1) << -1.0).finished(), (Vector(1) << 1.0).finished()};

  HierarchyConfig hierarchy;
  std::vector<int> grid_counts{20, 20};
  unsigned int seed = 42;
  std::string output_dir = "run-output";
  std::string checkpoint;  // filename within output_dir; empty disables

  const ParameterBox& box() const { return family == "scalar" ? scalar_box : heat.box; }

  TimeGrid time_grid() const {
    return family == "scalar" ? TimeGrid{scalar_horizon, scalar_steps}
                              : TimeGrid{heat.horizon, heat.time_steps};
  }

  ProblemBuilder builder() const {
    if (family == "scalar") {
      const RunConfig self = *this;  // capture by value: builders outlive the config
      return [self](const Parameter& mu) {
        if (mu.size() != 1 || !self.scalar_box.contains(mu))
          throw std::invalid_argument("parameter outside the admissible box");
        return build_scalar_problem(mu[0], self.scalar_b, self.scalar_terminal_weight,
                                    self.scalar_control_weight, self.scalar_x0, self.scalar_xT,
                                    TimeGrid{self.scalar_horizon, self.scalar_steps});
      };
    }
    const HeatConfig heat_config = heat;
    return [heat_config](const Parameter& mu) { return build_heat_problem(heat_config, mu); };
  }
};

// Loads and validates a run configuration.  The kernel's rescaling box is
// tied to the problem's parameter box; LQHIER_OUTPUT_DIR overrides the
// configured output directory when set.
inline RunConfig load_run_config(const std::string& path) {
  const ConfigFile file = ConfigFile::load(path);
  RunConfig config;

  config.family = file.get_string("problem.family", config.family);
  if (config.family == "heat1d") {
    config.heat.grid_points = file.get_int("problem.grid_points", config.heat.grid_points);
    config.heat.time_steps = file.get_int("problem.time_steps", config.heat.time_steps);
    config.heat.horizon = file.get_double("problem.horizon", config.heat.horizon);
    config.heat.control_weight =
        file.get_double("problem.control_weight", config.heat.control_weight);
    config.heat.box.lo[0] = file.get_double("problem.mu1_min", config.heat.box.lo[0]);
    config.heat.box.hi[0] = file.get_double("problem.mu1_max", config.heat.box.hi[0]);
    config.heat.box.lo[1] = file.get_double("problem.mu2_min", config.heat.box.lo[1]);
    config.heat.box.hi[1] = file.get_double("problem.mu2_max", config.heat.box.hi[1]);
  } else if (config.family == "scalar") {
    config.scalar_b = file.get_double("problem.b", config.scalar_b);
    config.scalar_terminal_weight =
        file.get_double("problem.terminal_weight", config.scalar_terminal_weight);
    config.scalar_control_weight =
        file.get_double("problem.control_weight", config.scalar_control_weight);
    config.scalar_x0 = file.get_double("problem.x0", config.scalar_x0);
    config.scalar_xT = file.get_double("problem.xT", config.scalar_xT);
    config.scalar_horizon = file.get_double("problem.horizon", config.scalar_horizon);
    config.scalar_steps = file.get_int("problem.time_steps", config.scalar_steps);
    config.scalar_box.lo[0] = file.get_double("problem.a_min", config.scalar_box.lo[0]);
    config.scalar_box.hi[0] = file.get_double("problem.a_max", config.scalar_box.hi[0]);
  } else {
    throw std::runtime_error("unknown problem family: '" + config.family + "'");
  }

  config.hierarchy.tolerance = file.get_double("hierarchy.tolerance", config.hierarchy.tolerance);
  config.hierarchy.retrain_interval =
      file.get_int("hierarchy.retrain_interval", config.hierarchy.retrain_interval);
  config.hierarchy.fom_tolerance =
      file.get_double("hierarchy.fom_tolerance", config.hierarchy.fom_tolerance);
  config.hierarchy.harvest_fom_coefficients = file.get_bool(
      "hierarchy.harvest_fom_coefficients", config.hierarchy.harvest_fom_coefficients);
  config.hierarchy.kernel.shape = file.get_double("kernel.shape", config.hierarchy.kernel.shape);
  config.hierarchy.kernel.max_centers =
      file.get_int("kernel.max_centers", config.hierarchy.kernel.max_centers);
  config.hierarchy.kernel.greedy_tolerance =
      file.get_double("kernel.greedy_tolerance", config.hierarchy.kernel.greedy_tolerance);
  config.hierarchy.kernel.regularization =
      file.get_double("kernel.regularization", config.hierarchy.kernel.regularization);
  config.hierarchy.kernel.box = config.box();

  std::vector<int> default_counts(config.box().lo.size(), 2);
  if (config.family == "heat1d") default_counts = {20, 20};
  config.grid_counts = file.get_int_list("run.grid_counts", default_counts);
  config.seed = static_cast<unsigned int>(file.get_int("run.seed", static_cast<int>(config.seed)));
  config.output_dir = file.get_string("run.output_dir", config.output_dir);
  config.checkpoint = file.get_string("run.checkpoint", config.checkpoint);

  const auto unread = file.unread_keys();
  if (!unread.empty()) {
    std::string message = "unknown config keys:";
    for (const auto& key : unread) message += ' ' + key;
    throw std::runtime_error(message);
  }

  if (config.hierarchy.tolerance <= 0.0) throw std::runtime_error("tolerance must be positive");
  if (config.hierarchy.retrain_interval < 1)
    throw std::runtime_error("retrain_interval must be >= 1");
  if (config.hierarchy.fom_tolerance < 0.0)
    throw std::runtime_error("fom_tolerance must be >= 0 (0 selects the default)");
  if (config.hierarchy.fom_tolerance > 0.0 &&
      config.hierarchy.fom_tolerance > config.hierarchy.tolerance / 10.0)
    throw std::runtime_error("fom_tolerance must be at most tolerance/10");
  if (static_cast<Eigen::Index>(config.grid_counts.size()) != config.box().lo.size())
    throw std::runtime_error("grid_counts must list one count per parameter axis");
  for (int c : config.grid_counts)
    if (c < 1) throw std::runtime_error("grid_counts entries must be positive");

  if (const char* override_dir = std::getenv("LQHIER_OUTPUT_DIR"))
    if (*override_dir) config.output_dir = override_dir;
  return config;
}

}  // namespace lqhier

#endif

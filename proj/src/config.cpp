#include "weakclock/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace weakclock {

namespace {

constexpr double kPi = std::numbers::pi;

using KeySet = std::set<std::string, std::less<>>;

const KeySet kCommonKeys = {"experiment", "seed", "out", "format", "sweep"};

const std::map<ExperimentKind, KeySet>& experiment_keys() {
  static const std::map<ExperimentKind, KeySet> keys = {
      {ExperimentKind::CfiSweep,
       {"g", "tau", "T", "N", "delta_omega", "p_e", "p_e_strong", "mode", "omega", "K",
        "full_records"}},
      {ExperimentKind::BmseSweep,
       {"g", "tau", "T", "N", "delta_omega", "p_e", "p_e_strong", "mode", "estimator", "reps"}},
      {ExperimentKind::Oci, {"tau", "T", "N", "delta_omega"}},
      {ExperimentKind::Cascaded, {"tau", "T", "N", "delta_omega", "reps"}},
      {ExperimentKind::Threshold,
       {"g", "tau", "T", "N", "delta_omega", "p_e", "mode", "epsilon", "condition"}},
      {ExperimentKind::Light, {"tau", "T", "N", "omega", "chi_tp"}},
  };
  return keys;
}

const KeySet kSweepAxes = {"g",     "tau",   "T",      "N",      "delta_omega",
                           "p_e",   "p_e_strong", "omega", "chi_tp", "epsilon"};

ExperimentKind experiment_from_string(const std::string& name, int line) {
  static const std::map<std::string, ExperimentKind, std::less<>> names = {
      {"cfi-sweep", ExperimentKind::CfiSweep}, {"bmse-sweep", ExperimentKind::BmseSweep},
      {"oci", ExperimentKind::Oci},             {"cascaded", ExperimentKind::Cascaded},
      {"threshold", ExperimentKind::Threshold}, {"light", ExperimentKind::Light}};
  auto it = names.find(name);
  if (it == names.end()) {
    throw ConfigError("experiment", line,
                      "unknown experiment '" + name +
                          "' (expected cfi-sweep, bmse-sweep, oci, cascaded, threshold or light)");
  }
  return it->second;
}

int line_of(const YAML::Node& node) {
  const YAML::Mark mark = node.Mark();
  return mark.is_null() ? 0 : mark.line + 1;
}

double read_double(const YAML::Node& node, const std::string& key) {
  if (!node.IsScalar()) throw ConfigError(key, line_of(node), "expected a number");
  double value = 0.0;
  try {
    value = node.as<double>();
  } catch (const YAML::BadConversion&) {
    throw ConfigError(key, line_of(node), "expected a number, got '" + node.Scalar() + "'");
  }
  if (!std::isfinite(value)) throw ConfigError(key, line_of(node), "value must be finite");
  return value;
}

long long read_integer(const YAML::Node& node, const std::string& key) {
  const double value = read_double(node, key);
  if (value != std::floor(value) || std::abs(value) > 9.0e15) {
    throw ConfigError(key, line_of(node), "expected an integer, got '" + node.Scalar() + "'");
  }
  return static_cast<long long>(value);
}

std::string read_string(const YAML::Node& node, const std::string& key) {
  if (!node.IsScalar()) throw ConfigError(key, line_of(node), "expected a string");
  return node.Scalar();
}

bool read_bool(const YAML::Node& node, const std::string& key) {
  if (!node.IsScalar()) throw ConfigError(key, line_of(node), "expected true or false");
  try {
    return node.as<bool>();
  } catch (const YAML::BadConversion&) {
    throw ConfigError(key, line_of(node), "expected true or false, got '" + node.Scalar() + "'");
  }
}

std::uint64_t read_seed(const YAML::Node& node) {
  if (!node.IsScalar()) throw ConfigError("seed", line_of(node), "expected an integer");
  try {
    const std::string& text = node.Scalar();
    if (text.empty() || text.front() == '-') throw YAML::BadConversion(node.Mark());
    return node.as<std::uint64_t>();
  } catch (const YAML::BadConversion&) {
    throw ConfigError("seed", line_of(node),
                      "expected a non-negative integer, got '" + node.Scalar() + "'");
  }
}

// Where each key was written, for error messages raised after parsing.
using LineMap = std::map<std::string, int, std::less<>>;

int lookup(const LineMap& lines, std::string_view key) {
  auto it = lines.find(key);
  return it == lines.end() ? 0 : it->second;
}

bool is_present(const RunConfig& c, std::string_view key) {
  if (c.sweep && c.sweep->axis == key) return true;
  if (key == "g") return c.g.has_value() || c.optimal_g;
  if (key == "tau") return c.tau.has_value();
  if (key == "T") return c.T.has_value();
  if (key == "N") return c.N.has_value();
  if (key == "delta_omega") return c.delta_omega.has_value();
  if (key == "omega") return c.omega.has_value();
  return true;
}

void apply_axis(RunConfig& c, const std::string& axis, double value, const std::string& key,
                int line) {
  if (axis == "g") c.g = value;
  else if (axis == "tau") c.tau = value;
  else if (axis == "T") c.T = value;
  else if (axis == "N") {
    if (value != std::floor(value) || value < 1.0 || value > 2.0e9) {
      throw ConfigError(key, line, "N must be a positive integer");
    }
    c.N = static_cast<int>(value);
  } else if (axis == "delta_omega") c.delta_omega = value;
  else if (axis == "p_e") c.p_e = value;
  else if (axis == "p_e_strong") c.p_e_strong = value;
  else if (axis == "omega") c.omega = value;
  else if (axis == "chi_tp") c.chi_tp = value;
  else if (axis == "epsilon") c.epsilon = value;
}

SweepPoint resolve_point(const RunConfig& c, const std::string& key, int line,
                         const LineMap* lines) {
  // Without a sweep, blame the offending key itself.
  auto where = [&](std::string_view name) {
    return key == "params" ? std::pair<std::string, int>{std::string(name),
                                                         lines ? lookup(*lines, name) : 0}
                           : std::pair<std::string, int>{key, line};
  };
  SweepPoint point;
  ProtocolParams& p = point.params;
  const bool uses_g = experiment_keys().at(c.experiment).count("g") > 0;
  p.g = uses_g && !c.optimal_g ? *c.g : 0.0;
  p.T = *c.T;
  p.N = *c.N;
  p.p_e = c.p_e;
  p.p_e_strong = c.p_e_strong;
  p.mode = c.modes.front();

  if (c.experiment == ExperimentKind::Light) {
    p.tau = *c.tau;
  } else if (c.tau && c.delta_omega) {
    p.tau = *c.tau;
    p.delta_omega = *c.delta_omega;
    if (p.delta_omega * p.tau > kPi / 2.0 * (1.0 + 1e-12)) {
      const auto [k, l] = where("delta_omega");
      throw ConfigError(k, l,
                        fmt::format("aliasing constraint violated: delta_omega * tau = {} > pi/2",
                                    p.delta_omega * p.tau));
    }
  } else if (c.tau) {
    p.tau = *c.tau;
    p.delta_omega = kPi / (2.0 * p.tau);
  } else {
    if (!(*c.delta_omega > 0.0)) {
      const auto [k, l] = where("delta_omega");
      throw ConfigError(k, l, "delta_omega must be positive");
    }
    p.delta_omega = *c.delta_omega;
    p.tau = kPi / (2.0 * p.delta_omega);
  }

  try {
    for (ProtocolMode mode : c.modes) {
      p.mode = mode;
      p.validate();
    }
    p.mode = c.modes.front();
    if (c.optimal_g) p.g = optimal_strength(p);
  } catch (const DomainError& e) {
    throw ConfigError(key, line, e.what());
  }
  point.omega = c.omega;
  point.chi_tp = c.chi_tp;
  point.epsilon = c.epsilon;

  if (c.experiment == ExperimentKind::Light) {
    if (!(point.chi_tp >= 0.0)) {
      const auto [k, l] = where("chi_tp");
      throw ConfigError(k, l, "chi_tp must be >= 0");
    }
  }
  if (c.experiment == ExperimentKind::Threshold) {
    if (!(point.epsilon > 0.0 && point.epsilon < 1.0)) {
      const auto [k, l] = where("epsilon");
      throw ConfigError(k, l, "epsilon must lie in (0, 1)");
    }
    try {
      for (ProtocolMode mode : c.modes) {
        ProtocolParams q = p;
        q.mode = mode;
        threshold_model(q, point.epsilon, c.condition);
      }
    } catch (const DomainError& e) {
      throw ConfigError(key, line, e.what());
    }
  }
  return point;
}

std::vector<SweepPoint> resolve_points(const RunConfig& config, const LineMap* lines) {
  std::vector<SweepPoint> points;
  if (!config.sweep) {
    points.push_back(resolve_point(config, "params", 0, lines));
    return points;
  }
  const Sweep& sweep = *config.sweep;
  for (std::size_t i = 0; i < sweep.values.size(); ++i) {
    const std::string key = fmt::format("sweep.values[{}]", i);
    const int line = lines ? lookup(*lines, key) : 0;
    RunConfig c = config;
    apply_axis(c, sweep.axis, sweep.values[i], key, line);
    points.push_back(resolve_point(c, key, line, lines));
  }
  return points;
}

std::string format_double(double v) { return fmt::format("{}", v); }

}  // namespace

ConfigError::ConfigError(std::string key, int line, const std::string& message)
    : Error(line > 0 ? fmt::format("{} (line {}): {}", key, line, message)
                     : fmt::format("{}: {}", key, message)),
      key_(std::move(key)),
      line_(line) {}

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::CfiSweep: return "cfi-sweep";
    case ExperimentKind::BmseSweep: return "bmse-sweep";
    case ExperimentKind::Oci: return "oci";
    case ExperimentKind::Cascaded: return "cascaded";
    case ExperimentKind::Threshold: return "threshold";
    case ExperimentKind::Light: return "light";
  }
  return "unknown";
}

std::vector<SweepPoint> RunConfig::points() const { return resolve_points(*this, nullptr); }

RunConfig parse_config(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ConfigError("<document>", e.mark.line + 1, e.msg);
  }
  if (!root.IsMap()) throw ConfigError("<document>", line_of(root), "expected a mapping of keys");

  RunConfig c;
  LineMap lines;
  if (!root["experiment"]) throw ConfigError("experiment", 0, "missing required key");
  c.experiment = experiment_from_string(read_string(root["experiment"], "experiment"),
                                        line_of(root["experiment"]));
  const KeySet& allowed = experiment_keys().at(c.experiment);

  for (const auto& entry : root) {
    const std::string key = entry.first.as<std::string>();
    const YAML::Node& value = entry.second;
    const int line = line_of(entry.first);
    lines[key] = line;
    if (!kCommonKeys.count(key) && !allowed.count(key)) {
      const bool known = std::any_of(experiment_keys().begin(), experiment_keys().end(),
                                     [&](const auto& kv) { return kv.second.count(key) > 0; });
      throw ConfigError(key, line,
                        known ? "key not used by experiment " + std::string(to_string(c.experiment))
                              : "unknown key");
    }
    if (key == "experiment") continue;
    if (key == "seed") {
      c.seed = read_seed(value);
    } else if (key == "out") {
      c.out = read_string(value, key);
    } else if (key == "format") {
      const std::string f = read_string(value, key);
      if (f == "csv") c.format = OutputFormat::Csv;
      else if (f == "json") c.format = OutputFormat::Json;
      else throw ConfigError(key, line, "expected csv or json, got '" + f + "'");
    } else if (key == "sweep") {
      if (!value.IsMap()) throw ConfigError(key, line, "expected a mapping with axis and values");
      Sweep sweep;
      for (const auto& sub : value) {
        const std::string name = sub.first.as<std::string>();
        const std::string path = "sweep." + name;
        if (name == "axis") {
          sweep.axis = read_string(sub.second, path);
          if (!kSweepAxes.count(sweep.axis) || !allowed.count(sweep.axis)) {
            throw ConfigError(path, line_of(sub.second),
                              "axis '" + sweep.axis + "' is not a swept parameter of " +
                                  std::string(to_string(c.experiment)));
          }
        } else if (name == "values") {
          if (!sub.second.IsSequence() || sub.second.size() == 0) {
            throw ConfigError(path, line_of(sub.second), "expected a non-empty list of numbers");
          }
          for (std::size_t i = 0; i < sub.second.size(); ++i) {
            const std::string item = fmt::format("sweep.values[{}]", i);
            lines[item] = line_of(sub.second[i]);
            sweep.values.push_back(read_double(sub.second[i], item));
          }
        } else {
          throw ConfigError(path, line_of(sub.first), "unknown key");
        }
      }
      if (sweep.axis.empty()) throw ConfigError("sweep.axis", line, "missing required key");
      if (sweep.values.empty()) throw ConfigError("sweep.values", line, "missing required key");
      c.sweep = sweep;
    } else if (key == "g") {
      if (value.IsScalar() && value.Scalar() == "optimal") {
        c.optimal_g = true;
      } else {
        c.g = read_double(value, key);
      }
    } else if (key == "tau") {
      c.tau = read_double(value, key);
    } else if (key == "T") {
      c.T = read_double(value, key);
    } else if (key == "N") {
      const long long n = read_integer(value, key);
      if (n < 1 || n > 2000000000LL) throw ConfigError(key, line, "N must be a positive integer");
      c.N = static_cast<int>(n);
    } else if (key == "delta_omega") {
      c.delta_omega = read_double(value, key);
    } else if (key == "p_e") {
      c.p_e = read_double(value, key);
    } else if (key == "p_e_strong") {
      c.p_e_strong = read_double(value, key);
    } else if (key == "mode") {
      const std::string m = read_string(value, key);
      if (m == "both") {
        c.modes = {ProtocolMode::WeakOnly, ProtocolMode::WeakWithStrong};
      } else {
        try {
          c.modes = {protocol_mode_from_string(m)};
        } catch (const DomainError&) {
          throw ConfigError(key, line,
                            "expected weak-only, weak-with-strong or both, got '" + m + "'");
        }
      }
    } else if (key == "estimator") {
      const std::string e = read_string(value, key);
      try {
        c.estimator = estimator_kind_from_string(e);
      } catch (const DomainError&) {
        throw ConfigError(key, line, "expected auto, mle or bayesian, got '" + e + "'");
      }
    } else if (key == "omega") {
      c.omega = read_double(value, key);
    } else if (key == "chi_tp") {
      c.chi_tp = read_double(value, key);
    } else if (key == "epsilon") {
      c.epsilon = read_double(value, key);
    } else if (key == "condition") {
      const std::string cond = read_string(value, key);
      if (cond == "main-text") c.condition = ThresholdCondition::MainText;
      else if (cond == "second-order") c.condition = ThresholdCondition::SecondOrder;
      else throw ConfigError(key, line, "expected main-text or second-order, got '" + cond + "'");
    } else if (key == "reps") {
      c.reps = static_cast<long>(read_integer(value, key));
      if (c.reps < 100) throw ConfigError(key, line, "reps must be >= 100");
    } else if (key == "K") {
      c.K = static_cast<long>(read_integer(value, key));
      if (c.K < 100) throw ConfigError(key, line, "K must be >= 100");
    } else if (key == "full_records") {
      c.full_records = read_bool(value, key);
    }
  }

  if (!root["seed"]) throw ConfigError("seed", 0, "missing required key (no implicit seeding)");
  if (c.sweep && c.sweep->axis == "g" && c.optimal_g) {
    throw ConfigError("sweep.axis", lookup(lines, "sweep"), "cannot sweep g with g: optimal");
  }

  static const std::map<ExperimentKind, std::vector<std::string>> required = {
      {ExperimentKind::CfiSweep, {"g", "T", "N"}},
      {ExperimentKind::BmseSweep, {"g", "T", "N"}},
      {ExperimentKind::Oci, {"T", "N"}},
      {ExperimentKind::Cascaded, {"T", "N"}},
      {ExperimentKind::Threshold, {"g", "T", "N"}},
      {ExperimentKind::Light, {"tau", "T", "N", "omega"}},
  };
  for (const std::string& key : required.at(c.experiment)) {
    if (!is_present(c, key)) throw ConfigError(key, 0, "missing required key");
  }
  if (c.experiment != ExperimentKind::Light && !is_present(c, "tau") &&
      !is_present(c, "delta_omega")) {
    throw ConfigError("tau", 0, "one of tau or delta_omega is required");
  }

  // Fill placeholders for swept keys so every point can be resolved.
  if (c.sweep) {
    const std::string& axis = c.sweep->axis;
    if (axis == "g" && !c.g) c.g = c.sweep->values.front();
    if (axis == "tau" && !c.tau) c.tau = c.sweep->values.front();
    if (axis == "T" && !c.T) c.T = c.sweep->values.front();
    if (axis == "delta_omega" && !c.delta_omega) c.delta_omega = c.sweep->values.front();
    if (axis == "omega" && !c.omega) c.omega = c.sweep->values.front();
    if (axis == "N" && !c.N) c.N = 1;
  }
  resolve_points(c, &lines);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "cannot open configuration file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string canonical_text(const RunConfig& c) {
  std::string out;
  auto put = [&](std::string_view key, const std::string& value) {
    out += fmt::format("{}={}\n", key, value);
  };
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  put("experiment", std::string(to_string(c.experiment)));
  put("g", c.optimal_g ? std::string("optimal") : opt(c.g));
  put("tau", opt(c.tau));
  put("T", opt(c.T));
  put("N", c.N ? std::to_string(*c.N) : std::string());
  put("delta_omega", opt(c.delta_omega));
  put("p_e", format_double(c.p_e));
  put("p_e_strong", format_double(c.p_e_strong));
  std::string modes;
  for (ProtocolMode m : c.modes) modes += (modes.empty() ? "" : ",") + std::string(to_string(m));
  put("mode", modes);
  put("estimator", std::string(to_string(c.estimator)));
  put("omega", opt(c.omega));
  put("chi_tp", format_double(c.chi_tp));
  put("epsilon", format_double(c.epsilon));
  put("condition", c.condition == ThresholdCondition::MainText ? "main-text" : "second-order");
  if (c.sweep) {
    std::string values;
    for (double v : c.sweep->values) values += (values.empty() ? "" : ",") + format_double(v);
    put("sweep", c.sweep->axis + ":" + values);
  }
  put("reps", std::to_string(c.reps));
  put("K", std::to_string(c.K));
  put("full_records", c.full_records ? "true" : "false");
  put("seed", std::to_string(c.seed));
  return out;
}

std::uint64_t config_hash(const RunConfig& config) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : canonical_text(config)) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace weakclock

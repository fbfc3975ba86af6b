#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "weakclock/core_model.hpp"
#include "weakclock/errors.hpp"
#include "weakclock/estimation.hpp"

namespace weakclock {

/// Invalid run configuration. key is a dotted path such as "sweep.values[2]";
/// line is 1-based, 0 when unknown.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, int line, const std::string& message);

  const std::string& key() const { return key_; }
  int line() const { return line_; }

 private:
  std::string key_;
  int line_;
};

enum class ExperimentKind { CfiSweep, BmseSweep, Oci, Cascaded, Threshold, Light };

std::string_view to_string(ExperimentKind kind);

enum class OutputFormat { Csv, Json };

struct Sweep {
  std::string axis;
  std::vector<double> values;
};

/// One fully resolved point of a sweep.
struct SweepPoint {
  ProtocolParams params;
  /// Fixed omega for cfi-sweep and light; empty means prior-averaged.
  std::optional<double> omega;
  double chi_tp = 0.0;
  double epsilon = 0.1;
};

struct RunConfig {
  ExperimentKind experiment = ExperimentKind::CfiSweep;

  // Parameter values as written; tau and delta_omega may each be derived
  // from the other.
  std::optional<double> g;
  bool optimal_g = false;
  std::optional<double> tau;
  std::optional<double> T;
  std::optional<int> N;
  std::optional<double> delta_omega;
  double p_e = 0.0;
  double p_e_strong = 0.0;
  std::vector<ProtocolMode> modes{ProtocolMode::WeakWithStrong};
  EstimatorKind estimator = EstimatorKind::Auto;
  std::optional<double> omega;
  double chi_tp = 0.0;
  double epsilon = 0.1;
  ThresholdCondition condition = ThresholdCondition::MainText;

  std::optional<Sweep> sweep;
  long reps = 500;
  long K = 20000;
  bool full_records = false;
  std::uint64_t seed = 0;
  std::string out;
  OutputFormat format = OutputFormat::Csv;

  /// Resolved points in sweep order (a single point without a sweep). Modes
  /// are not expanded here.
  std::vector<SweepPoint> points() const;
};

/// Parses and validates a YAML document. Unknown keys, keys the experiment
/// does not use, type mismatches and constraint violations raise ConfigError.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

/// Canonical one-line-per-key rendering, stable across runs; its hash tags
/// output files.
std::string canonical_text(const RunConfig& config);
std::uint64_t config_hash(const RunConfig& config);

}  // namespace weakclock

#include "weakclock/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "json.hpp"
#include "weakclock/baselines.hpp"
#include "weakclock/collective_light.hpp"
#include "weakclock/information.hpp"
#include "weakclock/rng.hpp"

namespace weakclock {

namespace {

constexpr double kMemoryLimitBytes = 8.0e9;
constexpr int kMaxOciQubits = 512;

std::string cell_text(const Cell& cell) {
  if (const auto* d = std::get_if<double>(&cell)) return fmt::format("{}", *d);
  if (const auto* i = std::get_if<long long>(&cell)) return std::to_string(*i);
  return std::get<std::string>(cell);
}

class CsvWriter : public RecordWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  void begin(const RecordMetadata& m, const std::vector<std::string>& columns) override {
    out_ << "# weakclock " << m.version << '\n';
    out_ << "# experiment: " << m.experiment << '\n';
    out_ << "# seed: " << m.seed << '\n';
    out_ << fmt::format("# config_hash: {:016x}\n", m.config_hash);
    out_ << "# units: " << m.units << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << '\n';
    out_.flush();
  }

  void row(const Row& row) override {
    for (std::size_t i = 0; i < row.size(); ++i) out_ << (i ? "," : "") << cell_text(row[i]);
    out_ << '\n';
    out_.flush();
  }

  void finish() override { out_.flush(); }

 private:
  std::ostream& out_;
};

class JsonWriter : public RecordWriter {
 public:
  explicit JsonWriter(std::ostream& out) : out_(out) {}

  void begin(const RecordMetadata& m, const std::vector<std::string>& columns) override {
    doc_["metadata"] = {{"version", m.version},
                        {"experiment", m.experiment},
                        {"seed", m.seed},
                        {"config_hash", fmt::format("{:016x}", m.config_hash)},
                        {"units", m.units}};
    doc_["columns"] = columns;
    doc_["rows"] = nlohmann::ordered_json::array();
    columns_ = columns;
  }

  void row(const Row& row) override {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < row.size(); ++i) {
      const Cell& cell = row[i];
      if (const auto* d = std::get_if<double>(&cell)) {
        // JSON has no infinities; keep them as strings like the CSV does.
        if (std::isfinite(*d)) obj[columns_[i]] = *d;
        else obj[columns_[i]] = cell_text(cell);
      } else if (const auto* n = std::get_if<long long>(&cell)) {
        obj[columns_[i]] = *n;
      } else {
        obj[columns_[i]] = std::get<std::string>(cell);
      }
    }
    doc_["rows"].push_back(std::move(obj));
  }

  void finish() override {
    out_ << doc_.dump(2) << '\n';
    out_.flush();
  }

 private:
  std::ostream& out_;
  nlohmann::ordered_json doc_;
  std::vector<std::string> columns_;
};

std::string units_for(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::CfiSweep:
      return "tau,T s; delta_omega,omega rad/s; cfi,stderr,qfi,fit,molmer_bound s^2";
    case ExperimentKind::BmseSweep:
      return "tau,T s; delta_omega rad/s; bmse,stderr,qfi_bound (rad/s)^2; rmse rad/s; cfi_fit s^2";
    case ExperimentKind::Oci:
      return "T s; delta_omega rad/s; oci_bmse,prior_var,qfi_bound (rad/s)^2; rmse rad/s";
    case ExperimentKind::Cascaded:
      return "T s; delta_omega rad/s; bmse,stderr,qfi_bound (rad/s)^2; rmse rad/s; fisher_opt s^2";
    case ExperimentKind::Threshold:
      return "tau,T s; delta_omega rad/s; predicted_bmse (rad/s)^2; cfi s^2";
    case ExperimentKind::Light:
      return "tau,T s; omega rad/s; mean_jx,var_jx spin units; sensitivity,qfi_limit (rad/s)^2";
  }
  return "";
}

double fit_information(const ProtocolParams& p) {
  return analytic_information(p.has_strong() ? InformationKind::FitWeakWithStrong
                                             : InformationKind::FitWeakOnly,
                              p)
      .value;
}

double molmer_bound(const ProtocolParams& p) {
  if (p.g == 0.0) return std::numeric_limits<double>::infinity();
  return analytic_information(InformationKind::MolmerBound, p).value;
}

Cell text(std::string_view s) { return std::string(s); }

void run_cfi(const RunConfig& c, const std::vector<SweepPoint>& points, RecordWriter& w,
             int workers) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::uint64_t seed = derive_seed(c.seed, i);
    for (ProtocolMode mode : c.modes) {
      ProtocolParams p = points[i].params;
      p.mode = mode;
      CfiOptions options{c.full_records, workers};
      const InformationEstimate info =
          points[i].omega ? cfi_monte_carlo(p, *points[i].omega, c.K, seed, options)
                          : cfi_prior_averaged(p, 0.0, p.delta_omega, c.K, seed, options);
      const double qfi = 4.0 * p.N * p.T * p.T;
      w.row({p.g, p.tau, p.T, static_cast<long long>(p.N), p.delta_omega, p.p_e,
             text(to_string(mode)), points[i].omega ? Cell(*points[i].omega) : text("prior"),
             static_cast<long long>(c.K), p.eta(), info.value, info.std_error, qfi,
             fit_information(p), molmer_bound(p)});
    }
  }
}

void run_bmse(const RunConfig& c, const std::vector<SweepPoint>& points, RecordWriter& w,
              int workers) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::uint64_t seed = derive_seed(c.seed, i);
    for (ProtocolMode mode : c.modes) {
      ProtocolParams p = points[i].params;
      p.mode = mode;
      const Prior prior = Prior::from_params(p);
      const BmseResult r = bmse_experiment(p, prior, c.estimator, c.reps, seed, {true, workers});
      const double qfi_bound = 1.0 / (4.0 * p.N * p.T * p.T);
      const double rmse = std::sqrt(r.bmse);
      w.row({p.g, p.tau, p.T, static_cast<long long>(p.N), p.delta_omega, p.p_e,
             text(to_string(mode)), text(to_string(r.estimator)), static_cast<long long>(r.reps),
             p.eta(), r.bmse, r.std_error, rmse, rmse / prior.width(), qfi_bound,
             fit_information(p), qfi_bound / r.bmse, static_cast<long long>(r.degenerate)});
    }
  }
}

void run_oci(const std::vector<SweepPoint>& points, RecordWriter& w) {
  for (const SweepPoint& pt : points) {
    const ProtocolParams& p = pt.params;
    const OciResult r = oci_bound(p.N, p.T, p.delta_omega);
    w.row({static_cast<long long>(p.N), p.T, p.delta_omega, p.delta_omega * p.T, r.bmse,
           std::sqrt(r.bmse), r.prior_variance, 1.0 / (4.0 * p.N * p.T * p.T), r.residual});
  }
}

void run_cascaded(const RunConfig& c, const std::vector<SweepPoint>& points, RecordWriter& w,
                  int workers) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    const ProtocolParams& p = points[i].params;
    const Prior prior{0.0, p.delta_omega};
    const CascadedResult r = cascaded_bmse(p.N, p.T, prior, c.reps, derive_seed(c.seed, i), workers);
    const double fisher = r.feasible ? cascaded_fisher_closed_form(p.N, r.chosen_M, p.T) : 0.0;
    w.row({static_cast<long long>(p.N), p.T, p.delta_omega, p.delta_omega * p.T,
           static_cast<long long>(c.reps), static_cast<long long>(r.chosen_M), r.bmse, r.std_error,
           std::sqrt(r.bmse), fisher, 1.0 / (4.0 * p.N * p.T * p.T),
           static_cast<long long>(r.feasible ? 1 : 0)});
  }
}

void run_threshold(const RunConfig& c, const std::vector<SweepPoint>& points, RecordWriter& w) {
  for (const SweepPoint& pt : points) {
    for (ProtocolMode mode : c.modes) {
      ProtocolParams p = pt.params;
      p.mode = mode;
      const ThresholdModel m = threshold_model(p, pt.epsilon, c.condition);
      w.row({p.g, p.tau, p.T, static_cast<long long>(p.N), p.delta_omega, p.p_e,
             text(to_string(mode)), pt.epsilon,
             text(c.condition == ThresholdCondition::MainText ? "main-text" : "second-order"),
             p.eta(), m.q, m.predicted_bmse, m.cfi, m.required_N_eta, m.N_eta});
    }
  }
}

void run_light(const std::vector<SweepPoint>& points, RecordWriter& w) {
  for (const SweepPoint& pt : points) {
    const ProtocolParams& p = pt.params;
    const int steps = p.steps();
    const double T = steps * p.tau;
    const double omega = *pt.omega;
    const CollectiveMoments m = propagate_collective_moments(pt.chi_tp, omega, p.tau, steps, p.N);
    w.row({static_cast<long long>(p.N), p.tau, omega, pt.chi_tp, static_cast<long long>(steps), T,
           m.mean(0), m.covariance()(0, 0),
           light_closed_form_variance(pt.chi_tp, omega, p.tau, steps, p.N),
           light_sensitivity(pt.chi_tp, omega, p.tau, steps, p.N), 1.0 / (4.0 * p.N * T * T)});
  }
}

}  // namespace

std::unique_ptr<RecordWriter> make_csv_writer(std::ostream& out) {
  return std::make_unique<CsvWriter>(out);
}

std::unique_ptr<RecordWriter> make_json_writer(std::ostream& out) {
  return std::make_unique<JsonWriter>(out);
}

const std::vector<std::string>& experiment_columns(ExperimentKind kind) {
  static const std::map<ExperimentKind, std::vector<std::string>> columns = {
      {ExperimentKind::CfiSweep,
       {"g", "tau", "T", "N", "delta_omega", "p_e", "mode", "omega", "K", "eta", "cfi", "stderr",
        "qfi", "fit", "molmer_bound"}},
      {ExperimentKind::BmseSweep,
       {"g", "tau", "T", "N", "delta_omega", "p_e", "mode", "estimator", "reps", "eta", "bmse",
        "stderr", "rmse", "rmse_over_prior_width", "qfi_bound", "cfi_fit", "inv_bmse_over_qfi",
        "degenerate"}},
      {ExperimentKind::Oci,
       {"N", "T", "delta_omega", "delta_omega_T", "oci_bmse", "rmse", "prior_var", "qfi_bound",
        "residual"}},
      {ExperimentKind::Cascaded,
       {"N", "T", "delta_omega", "delta_omega_T", "reps", "chosen_M", "bmse", "stderr", "rmse",
        "fisher_opt", "qfi_bound", "feasible"}},
      {ExperimentKind::Threshold,
       {"g", "tau", "T", "N", "delta_omega", "p_e", "mode", "epsilon", "condition", "eta", "q",
        "predicted_bmse", "cfi", "required_N_eta", "N_eta"}},
      {ExperimentKind::Light,
       {"N", "tau", "omega", "chi_tp", "steps", "T", "mean_jx", "var_jx", "closed_form_var",
        "sensitivity", "qfi_limit"}},
  };
  return columns.at(kind);
}

void check_guards(const RunConfig& config, int workers) {
  const int live = std::max(1, workers);
  for (const SweepPoint& pt : config.points()) {
    const ProtocolParams& p = pt.params;
    switch (config.experiment) {
      case ExperimentKind::Oci:
        if (p.N > kMaxOciQubits) {
          throw GuardError(fmt::format("oci limited to N <= {}, got N={}", kMaxOciQubits, p.N));
        }
        break;
      case ExperimentKind::BmseSweep:
      case ExperimentKind::CfiSweep: {
        if (config.experiment == ExperimentKind::CfiSweep && !config.full_records) break;
        const double bytes = static_cast<double>(p.N) * p.steps() * live;
        if (bytes > kMemoryLimitBytes) {
          throw GuardError(fmt::format("records would need {:.3g} GB (N={}, steps={}, workers={})",
                                       bytes / 1e9, p.N, p.steps(), live));
        }
        break;
      }
      case ExperimentKind::Cascaded:
      case ExperimentKind::Threshold:
      case ExperimentKind::Light:
        break;
    }
  }
}

void run_experiment(const RunConfig& config, RecordWriter& writer, int workers) {
  const std::vector<SweepPoint> points = config.points();
  check_guards(config, workers);
  RecordMetadata meta;
  meta.version = WEAKCLOCK_VERSION;
  meta.experiment = std::string(to_string(config.experiment));
  meta.seed = config.seed;
  meta.config_hash = config_hash(config);
  meta.units = units_for(config.experiment);
  writer.begin(meta, experiment_columns(config.experiment));
  switch (config.experiment) {
    case ExperimentKind::CfiSweep: run_cfi(config, points, writer, workers); break;
    case ExperimentKind::BmseSweep: run_bmse(config, points, writer, workers); break;
    case ExperimentKind::Oci: run_oci(points, writer); break;
    case ExperimentKind::Cascaded: run_cascaded(config, points, writer, workers); break;
    case ExperimentKind::Threshold: run_threshold(config, points, writer); break;
    case ExperimentKind::Light: run_light(points, writer); break;
  }
  writer.finish();
}

void run_to_path(const RunConfig& config, const std::string& path, int workers) {
  if (path.empty()) throw ConfigError("out", 0, "no output path given");
  auto make = [&](std::ostream& os) {
    return config.format == OutputFormat::Csv ? make_csv_writer(os) : make_json_writer(os);
  };
  if (path == "-") {
    auto writer = make(std::cout);
    run_experiment(config, *writer, workers);
    return;
  }
  // Refuse oversized runs before anything is created on disk.
  check_guards(config, workers);
  const std::string partial = path + ".partial";
  {
    std::ofstream out(partial, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + partial + " for writing");
    auto writer = make(out);
    run_experiment(config, *writer, workers);
    out.close();
    if (!out) throw Error("failed writing " + partial);
  }
  std::filesystem::rename(partial, path);
}

}  // namespace weakclock

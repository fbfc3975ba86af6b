#pragma once

#include <cstdint>
#include <memory>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "weakclock/config.hpp"

namespace weakclock {

using Cell = std::variant<double, long long, std::string>;
using Row = std::vector<Cell>;

struct RecordMetadata {
  std::string version;
  std::string experiment;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::string units;
};

/// Receives rows in sweep order.
class RecordWriter {
 public:
  virtual ~RecordWriter() = default;
  virtual void begin(const RecordMetadata& metadata, const std::vector<std::string>& columns) = 0;
  virtual void row(const Row& row) = 0;
  virtual void finish() = 0;
};

/// '#' metadata lines, a header row, then one comma-separated row per point.
/// Each row is flushed as soon as it is written.
std::unique_ptr<RecordWriter> make_csv_writer(std::ostream& out);
/// {"metadata": {...}, "columns": [...], "rows": [{column: value}, ...]},
/// written on finish().
std::unique_ptr<RecordWriter> make_json_writer(std::ostream& out);

/// Stable header of each experiment's record.
const std::vector<std::string>& experiment_columns(ExperimentKind kind);

/// Refuses, with GuardError, configurations whose size limits would be hit
/// mid-run (OCI beyond 512 qubits, more than 8 GB of live records).
void check_guards(const RunConfig& config, int workers);

/// Runs every sweep point (and every mode, for mode: both) and hands rows to
/// the writer. Point i uses the seed derive_seed(config.seed, i). The output
/// does not depend on the worker count.
void run_experiment(const RunConfig& config, RecordWriter& writer, int workers = 1);

/// Writes to path + ".partial" and renames it to path once every row is
/// written; a failed run leaves the ".partial" file behind. Path "-" writes
/// to standard output.
void run_to_path(const RunConfig& config, const std::string& path, int workers = 1);

}  // namespace weakclock

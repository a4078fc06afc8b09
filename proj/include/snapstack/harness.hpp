#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "snapstack/config.hpp"
#include "snapstack/data.hpp"
#include "snapstack/snapshots.hpp"
#include "snapstack/stacking.hpp"

namespace snapstack {

struct DataBundle {
  Dataset train;
  Dataset val;
  Dataset test;  // never used for weighting
};

DataBundle build_data(const ExperimentConfig& cfg);
MlpArchitecture build_arch(const ExperimentConfig& cfg, const DataBundle& data);

// Capture plan covering every configured policy plus the compare offset.
CapturePlan build_capture_plan(const ExperimentConfig& cfg, std::size_t train_rows);

// --- train ----------------------------------------------------------------

struct TrainOutput {
  TrainRun run;
  std::filesystem::path store_path;
  std::filesystem::path sidecar_path;
};

TrainOutput cmd_train(const ExperimentConfig& cfg, const DataBundle& data, const std::filesystem::path& store_path,
                      std::ostream& log);

// JSON run metadata written next to a store. Only `created_at` varies
// between identical runs.
std::string make_sidecar(const ExperimentConfig& cfg, const DataBundle& data, const SnapshotStore& store);

// Loads a store and checks it against the configuration (architecture,
// schedule and, when a sidecar exists, the dataset fingerprints).
SnapshotStore load_checked_store(const std::filesystem::path& store_path, const ExperimentConfig& cfg,
                                 const DataBundle& data);

// --- policies ---------------------------------------------------------------

enum class Policy : std::uint8_t { min, mid, min_mid, window, offset };

std::string to_string(Policy p);
Policy parse_policy(const std::string& s);

struct PolicyParams {
  std::size_t window_half_width = 0;
  long offset_steps = 0;
};

Selection select_policy(const SnapshotStore& store, Policy policy, const PolicyParams& params);

// --- sweeps -----------------------------------------------------------------

struct SweepCell {
  double tau = 1.0;
  std::size_t n_models = 0;
  Metrics metrics;
};

struct SweepResult {
  std::vector<double> taus;
  std::vector<std::size_t> ns;
  std::vector<SweepCell> cells;  // tau-major, skipped n values absent
  std::string policy;
  std::string source;
  std::vector<std::string> warnings;
};

// For each (tau, n): temperature-weighted ensemble of the LAST n selected
// snapshots, evaluated on `test`.
SweepResult sweep_temperature(const SnapshotStore& store, const Dataset& test, Policy policy,
                              const PolicyParams& params, LossSource source, const std::vector<double>& taus,
                              const std::vector<std::size_t>& ns);

struct OffsetRow {
  long offset = 0;
  double tau = 1.0;
  std::size_t n_models = 0;
  Metrics metrics;
};

struct OffsetSweep {
  std::vector<OffsetRow> rows;
  std::string source;
  std::vector<std::string> warnings;
};

OffsetSweep sweep_offset(const SnapshotStore& store, const Dataset& test, const std::vector<long>& offsets,
                         double tau, LossSource source);

// --- compare ----------------------------------------------------------------

struct CompareRow {
  std::string model;  // Single, Ensemble, Snapshot, SWA
  std::string type;
  std::size_t n_models = 0;
  std::optional<double> tau;
  Metrics metrics;
  std::size_t train_iters = 0;  // SGD iterations needed to produce the row
};

struct CompareResult {
  std::vector<CompareRow> rows;
  std::size_t snapshot_run_iterations = 0;
  double capture_run_seconds = 0.0;
  double plain_run_seconds = 0.0;
  std::vector<std::string> warnings;
};

CompareResult cmd_compare(const ExperimentConfig& cfg, const DataBundle& data, std::ostream& log);

// --- CSV / Markdown ---------------------------------------------------------

// Shortest decimal string that round-trips.
std::string format_double(double v);

std::string sweep_csv(const SweepResult& r);
std::string offset_csv(const OffsetSweep& r);
std::string compare_csv(const CompareResult& r);
std::string compare_markdown(const CompareResult& r);

class ReportError : public IoError {
 public:
  using IoError::IoError;
};

// Markdown summary of sweep/compare CSVs: best cells (all ties listed) per
// sweep and a comparison block.
std::string cmd_report(const std::vector<std::filesystem::path>& csv_paths);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace snapstack

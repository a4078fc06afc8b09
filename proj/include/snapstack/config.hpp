#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "snapstack/schedule.hpp"
#include "snapstack/snapshots.hpp"
#include "snapstack/stacking.hpp"

namespace snapstack {

struct DatasetConfig {
  std::string kind = "blobs";  // "blobs" or "idx"

  // blobs
  std::size_t num_classes = 3;
  std::size_t per_class = 250;       // before the train/validation split
  std::size_t test_per_class = 200;  // held-out test draw
  std::size_t dim = 8;
  double spread = 1.0;

  // idx
  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
  std::optional<std::size_t> limit;
  std::optional<std::size_t> test_limit;
  std::size_t idx_classes = 10;
};

enum class OffsetUnit : std::uint8_t { iterations, epochs };

struct ExperimentConfig {
  std::string run_id = "run";
  std::uint64_t seed = 1;
  DatasetConfig dataset;
  double val_fraction = 0.2;
  std::vector<std::size_t> hidden = {32};
  CycleConfig schedule;
  std::size_t batch_size = 64;

  CapturePolicies capture{true, true, 2, {10}};
  OffsetUnit offset_unit = OffsetUnit::iterations;

  LossSource source = LossSource::train;
  std::vector<double> tau_grid = {0.1, 0.3, 0.5, 0.9, 1.0, 2.0, 5.0, 10.0, 1000.0};
  std::vector<std::size_t> n_grid;  // empty: 1..completed cycles

  std::size_t independent_models = 5;
  long compare_offset = 10;

  // Throws InputError naming the offending field.
  void validate() const;

  std::vector<std::size_t> effective_n_grid() const;

  // Offsets in iterations, given the training-set size (needed when the
  // configured unit is epochs).
  long steps_in_iterations(long steps, std::size_t train_rows) const;

  // run_id with the seed appended, e.g. "blobs-s7".
  std::string tagged_run_id() const;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Non-fatal configuration notes (for example a degenerate cycle length).
std::vector<std::string> config_warnings(const ExperimentConfig& cfg);

}  // namespace snapstack

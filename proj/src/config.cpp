#include "snapstack/config.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <json.hpp>

#include "snapstack/errors.hpp"

namespace snapstack {

using nlohmann::json;

namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw InputError("unknown config key '" + where + it.key() + "'");
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  const auto& d = dataset;
  if (d.kind == "blobs") {
    if (d.num_classes < 2) throw InputError("dataset.num_classes must be >= 2");
    if (d.per_class < 1 || d.test_per_class < 1) throw InputError("dataset.per_class must be >= 1");
    if (d.dim < 2) throw InputError("dataset.dim must be >= 2");
    if (!(d.spread > 0.0)) throw InputError("dataset.spread must be > 0");
  } else if (d.kind == "idx") {
    if (d.train_images.empty() || d.train_labels.empty() || d.test_images.empty() || d.test_labels.empty()) {
      throw InputError("dataset: idx mode needs train_images, train_labels, test_images and test_labels");
    }
    if (d.idx_classes < 2) throw InputError("dataset.num_classes must be >= 2");
  } else {
    throw InputError("dataset.kind must be 'blobs' or 'idx'");
  }
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw InputError("split.val_fraction must lie in (0, 1)");
  for (std::size_t h : hidden) {
    if (h == 0) throw InputError("arch.hidden sizes must be >= 1");
  }
  try {
    schedule.validate();
  } catch (const InputError& e) {
    throw InputError(std::string("schedule: ") + e.what());
  }
  if (batch_size == 0) throw InputError("training.batch_size must be >= 1");
  if (2 * capture.window_half_width + 1 > schedule.cycle_len) {
    throw InputError("capture.window_s does not fit in one cycle");
  }
  for (double t : tau_grid) {
    if (!(t > 0.0) || !std::isfinite(t)) throw InputError("stacking.tau_grid values must be > 0");
  }
  if (tau_grid.empty()) throw InputError("stacking.tau_grid must not be empty");
  for (std::size_t n : n_grid) {
    if (n < 1 || n > schedule.completed_cycles()) {
      throw InputError("stacking.n_grid values must lie in [1, " + std::to_string(schedule.completed_cycles()) + "]");
    }
  }
  if (independent_models < 1) throw InputError("compare.independent_models must be >= 1");
}

std::vector<std::size_t> ExperimentConfig::effective_n_grid() const {
  if (!n_grid.empty()) return n_grid;
  std::vector<std::size_t> out;
  for (std::size_t n = 1; n <= schedule.completed_cycles(); ++n) out.push_back(n);
  return out;
}

long ExperimentConfig::steps_in_iterations(long steps, std::size_t train_rows) const {
  if (offset_unit == OffsetUnit::iterations) return steps;
  const std::size_t per_epoch = std::max<std::size_t>(1, train_rows / std::min(batch_size, train_rows));
  return steps * static_cast<long>(per_epoch);
}

std::string ExperimentConfig::tagged_run_id() const { return run_id + "-s" + std::to_string(seed); }

ExperimentConfig parse_config(const std::string& json_text) {
  ExperimentConfig c;
  try {
    const json j = json::parse(json_text);
    reject_unknown(j, {"run_id", "seed", "dataset", "split", "arch", "schedule", "training", "capture", "stacking",
                       "compare"},
                   "");
    read(j, "run_id", c.run_id);
    read(j, "seed", c.seed);
    if (j.contains("dataset")) {
      const json& d = j.at("dataset");
      reject_unknown(d, {"kind", "num_classes", "per_class", "test_per_class", "dim", "spread", "train_images",
                         "train_labels", "test_images", "test_labels", "limit", "test_limit"},
                     "dataset.");
      read(d, "kind", c.dataset.kind);
      read(d, "num_classes", c.dataset.num_classes);
      c.dataset.idx_classes = c.dataset.kind == "idx" ? d.value("num_classes", std::size_t{10}) : c.dataset.num_classes;
      read(d, "per_class", c.dataset.per_class);
      read(d, "test_per_class", c.dataset.test_per_class);
      read(d, "dim", c.dataset.dim);
      read(d, "spread", c.dataset.spread);
      read(d, "train_images", c.dataset.train_images);
      read(d, "train_labels", c.dataset.train_labels);
      read(d, "test_images", c.dataset.test_images);
      read(d, "test_labels", c.dataset.test_labels);
      if (d.contains("limit")) c.dataset.limit = d.at("limit").get<std::size_t>();
      if (d.contains("test_limit")) c.dataset.test_limit = d.at("test_limit").get<std::size_t>();
    }
    if (j.contains("split")) {
      reject_unknown(j.at("split"), {"val_fraction"}, "split.");
      read(j.at("split"), "val_fraction", c.val_fraction);
    }
    if (j.contains("arch")) {
      reject_unknown(j.at("arch"), {"hidden"}, "arch.");
      read(j.at("arch"), "hidden", c.hidden);
    }
    if (j.contains("schedule")) {
      const json& s = j.at("schedule");
      reject_unknown(s, {"alpha_min", "alpha_max", "cycle_len", "cycles", "total_iters"}, "schedule.");
      read(s, "alpha_min", c.schedule.alpha_min);
      read(s, "alpha_max", c.schedule.alpha_max);
      read(s, "cycle_len", c.schedule.cycle_len);
      if (s.contains("cycles") && s.contains("total_iters")) {
        throw InputError("schedule: give either cycles or total_iters, not both");
      }
      if (s.contains("cycles")) {
        c.schedule.total_iters = s.at("cycles").get<std::size_t>() * c.schedule.cycle_len;
      } else if (s.contains("total_iters")) {
        c.schedule.total_iters = s.at("total_iters").get<std::size_t>();
      } else {
        c.schedule.total_iters = 5 * c.schedule.cycle_len;
      }
    }
    if (j.contains("training")) {
      reject_unknown(j.at("training"), {"batch_size"}, "training.");
      read(j.at("training"), "batch_size", c.batch_size);
    }
    if (j.contains("capture")) {
      const json& p = j.at("capture");
      reject_unknown(p, {"min", "mid", "window_s", "offsets", "offset_unit"}, "capture.");
      read(p, "min", c.capture.minima);
      read(p, "mid", c.capture.midpoints);
      read(p, "window_s", c.capture.window_half_width);
      read(p, "offsets", c.capture.offsets);
      if (p.contains("offset_unit")) {
        const std::string u = p.at("offset_unit").get<std::string>();
        if (u == "iterations") {
          c.offset_unit = OffsetUnit::iterations;
        } else if (u == "epochs") {
          c.offset_unit = OffsetUnit::epochs;
        } else {
          throw InputError("capture.offset_unit must be 'iterations' or 'epochs'");
        }
      }
    }
    if (j.contains("stacking")) {
      const json& s = j.at("stacking");
      reject_unknown(s, {"source", "tau_grid", "n_grid"}, "stacking.");
      if (s.contains("source")) c.source = parse_loss_source(s.at("source").get<std::string>());
      read(s, "tau_grid", c.tau_grid);
      read(s, "n_grid", c.n_grid);
    }
    if (j.contains("compare")) {
      reject_unknown(j.at("compare"), {"independent_models", "offset"}, "compare.");
      read(j.at("compare"), "independent_models", c.independent_models);
      read(j.at("compare"), "offset", c.compare_offset);
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_config(text);
}

std::vector<std::string> config_warnings(const ExperimentConfig& cfg) {
  std::vector<std::string> out;
  if (cfg.schedule.cycle_len < 4) {
    out.push_back("cycle_len " + std::to_string(cfg.schedule.cycle_len) +
                  " is degenerate: midpoints may coincide with minima");
  }
  if (cfg.schedule.total_iters % cfg.schedule.cycle_len != 0) {
    out.push_back("total_iters is not a multiple of cycle_len; the trailing partial cycle yields no snapshot");
  }
  return out;
}

}  // namespace snapstack

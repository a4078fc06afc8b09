// snapstack: train cyclical-LR runs, collect snapshots and evaluate
// training-time stacked ensembles.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "snapstack/config.hpp"
#include "snapstack/errors.hpp"
#include "snapstack/harness.hpp"

namespace fs = std::filesystem;
using namespace snapstack;

namespace {

enum ExitCode { kOk = 0, kValidation = 1, kRuntime = 2, kIo = 3 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Override the config seed");
  cmd->add_option("--out-dir", c.out_dir, "Directory for outputs");
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();
  return cfg;
}

fs::path default_store(const ExperimentConfig& cfg, const std::string& out_dir) {
  return fs::path(out_dir) / (cfg.tagged_run_id() + ".snap");
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Snapshot ensembles with training-time stacking"};
  app.require_subcommand(1);

  Common train_opts;
  std::string train_store;
  auto* train = app.add_subcommand("train", "Train one cyclical-LR run and write its snapshot store");
  add_common(train, train_opts);
  train->add_option("--store", train_store, "Store path (default <out-dir>/<run_id>-s<seed>.snap)");

  Common sweep_opts;
  std::string sweep_store, policy = "min", source;
  std::vector<double> taus;
  std::vector<std::size_t> ns;
  std::optional<std::size_t> window_s;
  std::optional<long> steps;
  auto* sweep = app.add_subcommand("sweep-temp", "Accuracy over temperature x ensemble size");
  add_common(sweep, sweep_opts);
  sweep->add_option("--store", sweep_store, "Snapshot store (default from config)");
  sweep->add_option("--policy", policy, "min | mid | min+mid | window | offset");
  sweep->add_option("--source", source, "train | validation (default from config)");
  sweep->add_option("--taus", taus, "Temperature grid (default from config)")->delimiter(',');
  sweep->add_option("--ns", ns, "Ensemble sizes (default 1..cycles)")->delimiter(',');
  sweep->add_option("--window-s", window_s, "Window half-width for the window policy");
  sweep->add_option("--steps", steps, "Offset in iterations for the offset policy");

  Common offset_opts;
  std::string offset_store, offset_source;
  std::vector<long> offsets;
  double offset_tau = 1.0;
  auto* offset = app.add_subcommand("sweep-offset", "Accuracy vs. capture offset from the LR minimum");
  add_common(offset, offset_opts);
  offset->add_option("--store", offset_store, "Snapshot store (default from config)");
  offset->add_option("--offsets", offsets, "Offsets in iterations (default: configured capture offsets and 0)")->delimiter(',');
  offset->add_option("--tau", offset_tau, "Temperature");
  offset->add_option("--source", offset_source, "train | validation (default from config)");

  Common compare_opts;
  auto* compare = app.add_subcommand("compare", "Single, independent, snapshot and SWA comparison table");
  add_common(compare, compare_opts);

  std::vector<std::string> report_inputs;
  std::string report_out;
  auto* report = app.add_subcommand("report", "Markdown summary of sweep and compare CSVs");
  report->add_option("csv", report_inputs, "CSV files")->required();
  report->add_option("--out", report_out, "Write the report here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*train) {
      const ExperimentConfig cfg = resolve(train_opts);
      const DataBundle data = build_data(cfg);
      const fs::path store = train_store.empty() ? default_store(cfg, train_opts.out_dir) : fs::path(train_store);
      const TrainOutput out = cmd_train(cfg, data, store, std::cout);
      std::cout << "wrote " << out.store_path.string() << " and " << out.sidecar_path.string() << "\n";
    } else if (*sweep) {
      const ExperimentConfig cfg = resolve(sweep_opts);
      const DataBundle data = build_data(cfg);
      const fs::path store_path = sweep_store.empty() ? default_store(cfg, sweep_opts.out_dir) : fs::path(sweep_store);
      const SnapshotStore store = load_checked_store(store_path, cfg, data);
      const Policy p = parse_policy(policy);
      const LossSource src = source.empty() ? cfg.source : parse_loss_source(source);
      PolicyParams params;
      params.window_half_width = window_s.value_or(cfg.capture.window_half_width);
      params.offset_steps = steps.value_or(cfg.steps_in_iterations(cfg.compare_offset, data.train.size()));
      const SweepResult r = sweep_temperature(store, data.test, p, params, src, taus.empty() ? cfg.tau_grid : taus,
                                              ns.empty() ? cfg.effective_n_grid() : ns);
      print_warnings(r.warnings);
      const fs::path out = fs::path(sweep_opts.out_dir) / ("sweep_temp_" + r.policy + "_" + r.source + ".csv");
      write_text(out, sweep_csv(r));
      std::cout << "wrote " << out.string() << " (" << r.cells.size() << " cells)\n";
    } else if (*offset) {
      const ExperimentConfig cfg = resolve(offset_opts);
      const DataBundle data = build_data(cfg);
      const fs::path store_path =
          offset_store.empty() ? default_store(cfg, offset_opts.out_dir) : fs::path(offset_store);
      const SnapshotStore store = load_checked_store(store_path, cfg, data);
      if (offsets.empty()) {
        offsets.push_back(0);
        for (long o : cfg.capture.offsets) offsets.push_back(cfg.steps_in_iterations(o, data.train.size()));
      }
      const LossSource src = offset_source.empty() ? cfg.source : parse_loss_source(offset_source);
      const OffsetSweep r = sweep_offset(store, data.test, offsets, offset_tau, src);
      print_warnings(r.warnings);
      const fs::path out = fs::path(offset_opts.out_dir) / ("sweep_offset_" + r.source + ".csv");
      write_text(out, offset_csv(r));
      std::cout << "wrote " << out.string() << " (" << r.rows.size() << " rows)\n";
    } else if (*compare) {
      const ExperimentConfig cfg = resolve(compare_opts);
      const DataBundle data = build_data(cfg);
      const CompareResult r = cmd_compare(cfg, data, std::cerr);
      const fs::path dir(compare_opts.out_dir);
      write_text(dir / "compare.csv", compare_csv(r));
      write_text(dir / "compare.md", compare_markdown(r));
      std::cout << compare_markdown(r);
    } else if (*report) {
      std::vector<fs::path> paths(report_inputs.begin(), report_inputs.end());
      const std::string md = cmd_report(paths);
      if (report_out.empty()) {
        std::cout << md;
      } else {
        write_text(report_out, md);
      }
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const TrainingError& e) {
    std::cerr << "training error: " << e.what() << "\n";
    return kRuntime;
  } catch (const SelectionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}

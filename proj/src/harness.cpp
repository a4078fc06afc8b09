#include "snapstack/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <map>
#include <set>
#include <sstream>

#include "snapstack/errors.hpp"

namespace snapstack {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<Snapshot> last_n(const std::vector<Snapshot>& all, std::size_t n) {
  return {all.end() - static_cast<std::ptrdiff_t>(n), all.end()};
}

struct Scored {
  double tau = 0.0;
  Metrics metrics;
};

// Highest accuracy over the grid; ties go to lower NLL, then grid order.
template <typename EvalFn>
Scored best_over_taus(const std::vector<double>& taus, EvalFn&& eval) {
  Scored best;
  bool first = true;
  for (double tau : taus) {
    const Metrics m = eval(tau);
    if (first || m.accuracy > best.metrics.accuracy ||
        (m.accuracy == best.metrics.accuracy && m.mean_nll < best.metrics.mean_nll)) {
      best = {tau, m};
      first = false;
    }
  }
  return best;
}

}  // namespace

// --- data and plan ------------------------------------------------------------

DataBundle build_data(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto& d = cfg.dataset;
  DataBundle out;
  Dataset pool;
  if (d.kind == "blobs") {
    pool = make_blobs(d.num_classes, d.per_class, d.dim, d.spread, cfg.seed, 0);
    out.test = make_blobs(d.num_classes, d.test_per_class, d.dim, d.spread, cfg.seed, 1);
  } else {
    pool = load_idx(d.train_images, d.train_labels, d.limit, d.idx_classes);
    out.test = load_idx(d.test_images, d.test_labels, d.test_limit, d.idx_classes);
  }
  Split parts = split(pool, {cfg.val_fraction, cfg.seed});
  out.train = std::move(parts.train);
  out.val = std::move(parts.val);
  return out;
}

MlpArchitecture build_arch(const ExperimentConfig& cfg, const DataBundle& data) {
  MlpArchitecture arch;
  arch.layer_sizes.push_back(data.train.dim);
  arch.layer_sizes.insert(arch.layer_sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  arch.layer_sizes.push_back(data.train.num_classes);
  arch.validate();
  return arch;
}

CapturePlan build_capture_plan(const ExperimentConfig& cfg, std::size_t train_rows) {
  CapturePolicies p = cfg.capture;
  p.minima = true;  // the baseline policy is always available
  for (long& o : p.offsets) o = cfg.steps_in_iterations(o, train_rows);
  p.offsets.push_back(cfg.steps_in_iterations(cfg.compare_offset, train_rows));
  const auto len = static_cast<long>(cfg.schedule.cycle_len);
  for (long o : p.offsets) {
    if (o >= len || -o >= len) {
      throw InputError("capture offset " + std::to_string(o) + " iterations crosses into a neighbouring cycle");
    }
  }
  return make_capture_plan(cfg.schedule, p);
}

// --- train --------------------------------------------------------------------

std::string make_sidecar(const ExperimentConfig& cfg, const DataBundle& data, const SnapshotStore& store) {
  json j;
  j["run_id"] = store.run_id;
  j["seed"] = cfg.seed;
  j["format_version"] = kStoreVersion;
  j["arch"] = store.arch.layer_sizes;
  j["schedule"] = {{"alpha_min", store.cfg.alpha_min},
                   {"alpha_max", store.cfg.alpha_max},
                   {"cycle_len", store.cfg.cycle_len},
                   {"total_iters", store.cfg.total_iters}};
  j["batch_size"] = cfg.batch_size;
  j["dataset_fingerprint"] = {{"train", fingerprint(data.train)},
                              {"val", fingerprint(data.val)},
                              {"test", fingerprint(data.test)}};
  j["snapshot_count"] = store.snapshots.size();
  j["created_at"] = utc_timestamp();
  return j.dump(2) + "\n";
}

TrainOutput cmd_train(const ExperimentConfig& cfg, const DataBundle& data, const std::filesystem::path& store_path,
                      std::ostream& log) {
  for (const std::string& w : config_warnings(cfg)) log << "warning: " << w << "\n";
  const MlpArchitecture arch = build_arch(cfg, data);
  const CapturePlan plan = build_capture_plan(cfg, data.train.size());

  TrainOutput out;
  out.run = train_with_capture(arch, data.train, data.val, cfg.schedule, cfg.seed, plan, {cfg.batch_size},
                               cfg.tagged_run_id());
  out.store_path = store_path;
  out.sidecar_path = store_path;
  out.sidecar_path += ".json";
  if (store_path.has_parent_path()) std::filesystem::create_directories(store_path.parent_path());
  save_store(out.run.store, out.store_path);
  write_text(out.sidecar_path, make_sidecar(cfg, data, out.run.store));

  log << "run " << out.run.store.run_id << ": " << out.run.sgd_iterations << " iterations, "
      << out.run.store.snapshots.size() << " snapshots\n";
  log << "cycle  iter  lr  train_nll  val_nll\n";
  std::size_t cycle = 0;
  for (const Snapshot& s : out.run.store.snapshots) {
    if (!s.tags.has(CaptureTag::min)) continue;
    log << ++cycle << "  " << s.iter << "  " << format_double(s.lr_at_capture) << "  " << fixed(s.train_nll, 6)
        << "  " << fixed(s.val_nll, 6) << "\n";
  }
  return out;
}

SnapshotStore load_checked_store(const std::filesystem::path& store_path, const ExperimentConfig& cfg,
                                 const DataBundle& data) {
  SnapshotStore store = load_store(store_path, build_arch(cfg, data));
  if (!(store.cfg == cfg.schedule)) {
    throw InputError(store_path.string() + ": schedule differs from the configuration");
  }
  std::filesystem::path sidecar = store_path;
  sidecar += ".json";
  if (std::filesystem::exists(sidecar)) {
    std::ifstream in(sidecar);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw IoError(sidecar.string() + ": " + e.what());
    }
    const json fp = j.value("dataset_fingerprint", json::object());
    if (fp.value("train", std::string{}) != fingerprint(data.train) ||
        fp.value("val", std::string{}) != fingerprint(data.val)) {
      throw InputError(store_path.string() + ": store was trained on different data than this configuration builds");
    }
  }
  return store;
}

// --- policies -----------------------------------------------------------------

std::string to_string(Policy p) {
  switch (p) {
    case Policy::min: return "min";
    case Policy::mid: return "mid";
    case Policy::min_mid: return "min+mid";
    case Policy::window: return "window";
    case Policy::offset: return "offset";
  }
  return "unknown";
}

Policy parse_policy(const std::string& s) {
  if (s == "min") return Policy::min;
  if (s == "mid") return Policy::mid;
  if (s == "min+mid" || s == "middle") return Policy::min_mid;
  if (s == "window") return Policy::window;
  if (s == "offset") return Policy::offset;
  throw InputError("unknown policy '" + s + "' (expected min, mid, min+mid, window or offset)");
}

Selection select_policy(const SnapshotStore& store, Policy policy, const PolicyParams& params) {
  switch (policy) {
    case Policy::min: return select_min(store);
    case Policy::mid: return select_mid(store);
    case Policy::min_mid: return select_min_mid(store);
    case Policy::window: return select_window(store, params.window_half_width);
    case Policy::offset: return select_offset(store, params.offset_steps);
  }
  throw InputError("unknown policy");
}

// --- sweeps -------------------------------------------------------------------

SweepResult sweep_temperature(const SnapshotStore& store, const Dataset& test, Policy policy,
                              const PolicyParams& params, LossSource source, const std::vector<double>& taus,
                              const std::vector<std::size_t>& ns) {
  Selection sel = select_policy(store, policy, params);
  SweepResult r;
  r.taus = taus;
  r.ns = ns;
  r.policy = to_string(policy);
  r.source = to_string(source);
  r.warnings = sel.warnings;
  const std::size_t available = sel.snapshots.size();
  for (std::size_t n : ns) {
    if (n == 0 || n > available) {
      r.warnings.push_back("n_models=" + std::to_string(n) + " exceeds the " + std::to_string(available) +
                           " available snapshots, skipped");
    }
  }
  for (double tau : taus) {
    for (std::size_t n : ns) {
      if (n == 0 || n > available) continue;
      const std::vector<Snapshot> members = last_n(sel.snapshots, n);
      const EnsembleModel ens = build_ensemble(members, {WeightRule::temperature, tau, source});
      r.cells.push_back({tau, n, evaluate(predictor(ens), test)});
    }
  }
  return r;
}

OffsetSweep sweep_offset(const SnapshotStore& store, const Dataset& test, const std::vector<long>& offsets,
                         double tau, LossSource source) {
  OffsetSweep r;
  r.source = to_string(source);
  for (long off : offsets) {
    Selection sel;
    try {
      sel = select_offset(store, off);
    } catch (const SelectionError& e) {
      r.warnings.push_back(std::string(e.what()) + ", row skipped");
      continue;
    } catch (const InputError& e) {
      r.warnings.push_back(std::string(e.what()) + ", row skipped");
      continue;
    }
    r.warnings.insert(r.warnings.end(), sel.warnings.begin(), sel.warnings.end());
    const EnsembleModel ens = build_ensemble(sel.snapshots, {WeightRule::temperature, tau, source});
    r.rows.push_back({off, tau, sel.snapshots.size(), evaluate(predictor(ens), test)});
  }
  return r;
}

// --- compare ------------------------------------------------------------------

CompareResult cmd_compare(const ExperimentConfig& cfg, const DataBundle& data, std::ostream& log) {
  for (const std::string& w : config_warnings(cfg)) log << "warning: " << w << "\n";
  const MlpArchitecture arch = build_arch(cfg, data);
  const std::size_t T = cfg.schedule.total_iters;
  CompareResult out;

  const CapturePlan plan = build_capture_plan(cfg, data.train.size());
  auto start = Clock::now();
  const TrainRun run =
      train_with_capture(arch, data.train, data.val, cfg.schedule, cfg.seed, plan, {cfg.batch_size}, cfg.tagged_run_id());
  out.capture_run_seconds = seconds_since(start);
  out.snapshot_run_iterations = run.sgd_iterations;
  const SnapshotStore& store = run.store;

  out.rows.push_back({"Single", "final", 1, std::nullopt, evaluate(predictor(run.final_params), data.test), T});

  // Independent ensemble: one full training per member, seeds seed, seed+1, ...
  std::vector<Snapshot> independent;
  for (std::size_t i = 0; i < cfg.independent_models; ++i) {
    start = Clock::now();
    TrainRun member = train_with_capture(arch, data.train, data.val, cfg.schedule, cfg.seed + i, {},
                                         {cfg.batch_size}, cfg.tagged_run_id() + "-ind" + std::to_string(i));
    if (i == 0) out.plain_run_seconds = seconds_since(start);
    Snapshot s;
    s.params = std::move(member.final_params);
    s.iter = T - 1;
    s.tags = CaptureTag::min;
    independent.push_back(std::move(s));
  }
  {
    const EnsembleModel ens = build_ensemble(independent, {WeightRule::equal, 1.0, LossSource::train});
    out.rows.push_back({"Ensemble", "individual", independent.size(), std::nullopt, evaluate(predictor(ens), data.test),
                        T * independent.size()});
  }

  auto add_snapshot_rows = [&](const std::string& label, const Selection& sel, bool with_val) {
    out.warnings.insert(out.warnings.end(), sel.warnings.begin(), sel.warnings.end());
    const auto& members = sel.snapshots;
    const EnsembleModel eq = build_ensemble(members, {WeightRule::equal, 1.0, LossSource::train});
    out.rows.push_back({"Snapshot", label + ", eq", members.size(), std::nullopt, evaluate(predictor(eq), data.test), T});
    for (LossSource src : {LossSource::train, LossSource::validation}) {
      if (src == LossSource::validation && !with_val) continue;
      const Scored best = best_over_taus(cfg.tau_grid, [&](double tau) {
        return evaluate(predictor(build_ensemble(members, {WeightRule::temperature, tau, src})), data.test);
      });
      const std::string suffix = src == LossSource::validation ? ", val" : "";
      out.rows.push_back({"Snapshot", label + ", stack" + suffix, members.size(), best.tau, best.metrics, T});
    }
  };

  const long offset = cfg.steps_in_iterations(cfg.compare_offset, data.train.size());
  add_snapshot_rows("min", select_min(store), true);
  add_snapshot_rows(std::to_string(offset) + " steps", select_offset(store, offset), false);
  if (cfg.capture.midpoints) add_snapshot_rows("middle", select_min_mid(store), false);
  if (cfg.capture.window_half_width > 0) {
    try {
      add_snapshot_rows("window s=" + std::to_string(cfg.capture.window_half_width),
                        select_window(store, cfg.capture.window_half_width), false);
    } catch (const SelectionError& e) {
      out.warnings.push_back(e.what());
    }
  }

  {
    const std::vector<Snapshot> mins = select_min(store).snapshots;
    const ParamVector eq = swa_average(mins, weights_equal(mins.size()));
    out.rows.push_back({"SWA", "min, eq", mins.size(), std::nullopt, evaluate(predictor(eq), data.test), T});
    const Scored best = best_over_taus(cfg.tau_grid, [&](double tau) {
      const EnsembleModel ens = build_ensemble(mins, {WeightRule::temperature, tau, cfg.source});
      return evaluate(predictor(swa_average(mins, ens.weights())), data.test);
    });
    out.rows.push_back({"SWA", "min, stack", mins.size(), best.tau, best.metrics, T});
  }

  for (const std::string& w : out.warnings) log << "warning: " << w << "\n";
  log << "snapshot run: " << out.snapshot_run_iterations << " SGD iterations, " << fixed(out.capture_run_seconds, 3)
      << " s with capture; plain run " << fixed(out.plain_run_seconds, 3) << " s\n";
  return out;
}

// --- CSV / Markdown -----------------------------------------------------------

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

std::string sweep_csv(const SweepResult& r) {
  std::string out = "tau,n_models,accuracy,mean_nll,policy,source\n";
  for (const SweepCell& c : r.cells) {
    out += format_double(c.tau) + "," + std::to_string(c.n_models) + "," + fixed(c.metrics.accuracy, 6) + "," +
           fixed(c.metrics.mean_nll, 9) + "," + r.policy + "," + r.source + "\n";
  }
  return out;
}

std::string offset_csv(const OffsetSweep& r) {
  std::string out = "offset,tau,n_models,accuracy,mean_nll,policy,source\n";
  for (const OffsetRow& row : r.rows) {
    out += std::to_string(row.offset) + "," + format_double(row.tau) + "," + std::to_string(row.n_models) + "," +
           fixed(row.metrics.accuracy, 6) + "," + fixed(row.metrics.mean_nll, 9) + ",offset," + r.source + "\n";
  }
  return out;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string compare_csv(const CompareResult& r) {
  std::string out = "model,type,n_models,tau,accuracy,mean_nll,train_iters\n";
  for (const CompareRow& row : r.rows) {
    out += csv_field(row.model) + "," + csv_field(row.type) + "," + std::to_string(row.n_models) + "," +
           (row.tau ? format_double(*row.tau) : std::string("-")) + "," + fixed(row.metrics.accuracy, 6) + "," +
           fixed(row.metrics.mean_nll, 9) + "," + std::to_string(row.train_iters) + "\n";
  }
  return out;
}

std::string compare_markdown(const CompareResult& r) {
  std::ostringstream md;
  md << "| Model | Type | Number of models | tau | Accuracy, % | Mean NLL | SGD iterations |\n";
  md << "|---|---|---|---|---|---|---|\n";
  for (const CompareRow& row : r.rows) {
    md << "| " << row.model << " | " << row.type << " | " << row.n_models << " | "
       << (row.tau ? format_double(*row.tau) : std::string("-")) << " | " << fixed(100.0 * row.metrics.accuracy, 2)
       << " | " << fixed(row.metrics.mean_nll, 4) << " | " << row.train_iters << " |\n";
  }
  return md.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.close();
  if (!out) throw IoError("cannot write " + path.string());
}

// --- report -------------------------------------------------------------------

namespace {

struct CsvTable {
  std::filesystem::path path;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw ReportError(path.string() + ": missing required column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
  }
  bool has(const std::string& name) const { return std::find(header.begin(), header.end(), name) != header.end(); }

  double number(std::size_t row, const std::string& name) const {
    const std::string& cell = rows[row][column(name)];
    double v = 0.0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
      throw ReportError(path.string() + ": row " + std::to_string(row + 2) + ", column '" + name +
                        "': not a number: '" + cell + "'");
    }
    return v;
  }
  const std::string& text(std::size_t row, const std::string& name) const { return rows[row][column(name)]; }
};

// Comma-separated fields; double quotes protect commas, "" is a literal quote.
std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cell));
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  out.push_back(std::move(cell));
  return out;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  CsvTable t;
  t.path = path;
  std::string line;
  if (!std::getline(in, line)) throw ReportError(path.string() + ": empty file, no header");
  t.header = split_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != t.header.size()) {
      throw ReportError(path.string() + ": row " + std::to_string(t.rows.size() + 2) + " has " +
                        std::to_string(cells.size()) + " fields, header has " + std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

void report_temperature(const CsvTable& t, std::ostringstream& md, std::ostringstream& summary) {
  for (const char* c : {"tau", "n_models", "accuracy", "mean_nll", "policy", "source"}) t.column(c);
  const std::string policy = t.rows.empty() ? "?" : t.text(0, "policy");
  const std::string source = t.rows.empty() ? "?" : t.text(0, "source");
  md << "## Temperature sweep: policy " << policy << ", source " << source << " (`" << t.path.filename().string()
     << "`)\n\n";
  if (t.rows.empty()) {
    md << "No cells.\n\n";
    return;
  }

  std::vector<double> taus;
  std::set<long> ns;
  std::map<std::pair<double, long>, double> acc;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const double tau = t.number(i, "tau");
    const auto n = static_cast<long>(t.number(i, "n_models"));
    if (std::find(taus.begin(), taus.end(), tau) == taus.end()) taus.push_back(tau);
    ns.insert(n);
    acc[{tau, n}] = t.number(i, "accuracy");
  }
  md << "| tau \\ n |";
  for (long n : ns) md << " " << n << " |";
  md << "\n|---|";
  for (std::size_t i = 0; i < ns.size(); ++i) md << "---|";
  md << "\n";
  for (double tau : taus) {
    md << "| " << format_double(tau) << " |";
    for (long n : ns) {
      const auto it = acc.find({tau, n});
      md << " " << (it == acc.end() ? std::string("-") : fixed(100.0 * it->second, 2)) << " |";
    }
    md << "\n";
  }

  double best = -1.0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) best = std::max(best, t.number(i, "accuracy"));
  md << "\nBest accuracy " << fixed(100.0 * best, 2) << "% at:";
  std::size_t first_best = 0;
  bool found = false;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (t.number(i, "accuracy") != best) continue;
    if (!found) first_best = i;
    found = true;
    md << " (tau=" << t.text(i, "tau") << ", n=" << t.text(i, "n_models") << ")";
  }
  md << "\n\n";

  const std::string val = source == "validation" ? ", val" : "";
  summary << "| Snapshot | " << policy << ", stack" << val << " | " << t.text(first_best, "n_models") << " | "
          << t.text(first_best, "tau") << " | " << fixed(100.0 * best, 2) << " |\n";
  // The largest temperature approximates equal weighting.
  const double tau_max = *std::max_element(taus.begin(), taus.end());
  if (tau_max >= 1000.0) {
    const long n_max = *ns.rbegin();
    const auto it = acc.find({tau_max, n_max});
    if (it != acc.end()) {
      summary << "| Snapshot | " << policy << ", eq" << val << " (tau=" << format_double(tau_max) << ") | " << n_max
              << " | - | " << fixed(100.0 * it->second, 2) << " |\n";
    }
  }
}

void report_offset(const CsvTable& t, std::ostringstream& md, std::ostringstream& summary) {
  for (const char* c : {"offset", "tau", "n_models", "accuracy", "mean_nll"}) t.column(c);
  md << "## Offset sweep (`" << t.path.filename().string() << "`)\n\n";
  md << "| offset | tau | n_models | accuracy, % | mean NLL |\n|---|---|---|---|---|\n";
  double best = -1.0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    md << "| " << t.text(i, "offset") << " | " << t.text(i, "tau") << " | " << t.text(i, "n_models") << " | "
       << fixed(100.0 * t.number(i, "accuracy"), 2) << " | " << t.text(i, "mean_nll") << " |\n";
    best = std::max(best, t.number(i, "accuracy"));
  }
  if (t.rows.empty()) {
    md << "\nNo rows.\n\n";
    return;
  }
  md << "\nBest accuracy " << fixed(100.0 * best, 2) << "% at offset:";
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (t.number(i, "accuracy") != best) continue;
    md << " " << t.text(i, "offset");
    summary << "| Snapshot | " << t.text(i, "offset") << " steps, stack | " << t.text(i, "n_models") << " | "
            << t.text(i, "tau") << " | " << fixed(100.0 * best, 2) << " |\n";
  }
  md << "\n\n";
}

void report_compare(const CsvTable& t, std::ostringstream& md, std::ostringstream& summary) {
  for (const char* c : {"model", "type", "n_models", "tau", "accuracy", "mean_nll", "train_iters"}) t.column(c);
  md << "## Comparison (`" << t.path.filename().string() << "`)\n\n";
  md << "| Model | Type | Number of models | tau | Accuracy, % | Mean NLL | SGD iterations |\n";
  md << "|---|---|---|---|---|---|---|\n";
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const std::string acc = fixed(100.0 * t.number(i, "accuracy"), 2);
    md << "| " << t.text(i, "model") << " | " << t.text(i, "type") << " | " << t.text(i, "n_models") << " | "
       << t.text(i, "tau") << " | " << acc << " | " << t.text(i, "mean_nll") << " | " << t.text(i, "train_iters")
       << " |\n";
    summary << "| " << t.text(i, "model") << " | " << t.text(i, "type") << " | " << t.text(i, "n_models") << " | "
            << t.text(i, "tau") << " | " << acc << " |\n";
  }
  md << "\n";
}

}  // namespace

std::string cmd_report(const std::vector<std::filesystem::path>& csv_paths) {
  if (csv_paths.empty()) throw InputError("report: no CSV files given");
  std::ostringstream md;
  std::ostringstream summary;
  md << "# Snapshot ensemble report\n\n";
  for (const auto& path : csv_paths) {
    const CsvTable t = read_csv(path);
    if (t.has("offset")) {
      report_offset(t, md, summary);
    } else if (t.has("model")) {
      report_compare(t, md, summary);
    } else {
      report_temperature(t, md, summary);
    }
  }
  md << "## Summary\n\n| Model | Type | Number of models | tau | Accuracy, % |\n|---|---|---|---|---|\n"
     << summary.str();
  return md.str();
}

}  // namespace snapstack

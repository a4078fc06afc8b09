#include "snapstack/snapshots.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>
#include <random>

namespace snapstack {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void check_compatible(const MlpArchitecture& arch, const Dataset& data, const char* name) {
  data.validate();
  if (data.dim != arch.input_dim() || data.num_classes != arch.num_classes()) {
    throw InputError(std::string(name) + " dataset is incompatible with the architecture");
  }
}

void gather_rows(const Dataset& src, std::span<const std::size_t> idx, Dataset& dst) {
  dst.features.resize(idx.size() * src.dim);
  dst.labels.resize(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto r = src.row(idx[i]);
    std::copy(r.begin(), r.end(), dst.features.begin() + static_cast<std::ptrdiff_t>(i * src.dim));
    dst.labels[i] = src.labels[idx[i]];
  }
}

Selection select_tagged(const SnapshotStore& store, const std::vector<std::size_t>& iters, CaptureTag tag,
                        const char* name) {
  Selection sel;
  for (std::size_t it : iters) {
    const Snapshot* s = store.find(it);
    if (s != nullptr && s->tags.has(tag)) {
      sel.snapshots.push_back(*s);
    } else {
      sel.warnings.push_back(std::string(name) + ": no snapshot captured at iteration " + std::to_string(it));
    }
  }
  if (sel.snapshots.empty()) {
    throw SelectionError(std::string("store '") + store.run_id + "' has no " + name + "-tagged snapshots");
  }
  return sel;
}

}  // namespace

std::string to_string(TagSet tags) {
  std::string out;
  auto add = [&](CaptureTag t, const char* name) {
    if (!tags.has(t)) return;
    if (!out.empty()) out += '+';
    out += name;
  };
  add(CaptureTag::min, "min");
  add(CaptureTag::mid, "mid");
  add(CaptureTag::window, "window");
  add(CaptureTag::offset, "offset");
  return out.empty() ? "none" : out;
}

const Snapshot* SnapshotStore::find(std::size_t iter) const {
  auto it = std::lower_bound(snapshots.begin(), snapshots.end(), iter,
                             [](const Snapshot& s, std::size_t i) { return s.iter < i; });
  return (it != snapshots.end() && it->iter == iter) ? &*it : nullptr;
}

CapturePlan make_capture_plan(const CycleConfig& cfg, const CapturePolicies& policies) {
  cfg.validate();
  CapturePlan plan;
  const auto add = [&](long long it, CaptureTag tag) {
    if (it < 0 || it >= static_cast<long long>(cfg.total_iters)) return;
    plan[static_cast<std::size_t>(it)] |= tag;
  };
  const auto minima = cycle_minima(cfg);
  if (policies.minima) {
    for (std::size_t m : minima) add(static_cast<long long>(m), CaptureTag::min);
  }
  if (policies.midpoints) {
    for (std::size_t m : cycle_midpoints(cfg)) add(static_cast<long long>(m), CaptureTag::mid);
  }
  if (policies.window_half_width > 0) {
    const auto s = static_cast<long long>(policies.window_half_width);
    for (std::size_t m : minima) {
      for (long long d = -s; d <= s; ++d) add(static_cast<long long>(m) + d, CaptureTag::window);
    }
  }
  for (long steps : policies.offsets) {
    for (std::size_t m : minima) add(static_cast<long long>(m) + steps, CaptureTag::offset);
  }
  return plan;
}

TrainRun train_with_capture(const MlpArchitecture& arch, const Dataset& train, const Dataset& val,
                            const CycleConfig& cfg, std::uint64_t seed, const CapturePlan& plan,
                            const TrainOptions& options, std::string run_id) {
  arch.validate();
  cfg.validate();
  check_compatible(arch, train, "training");
  check_compatible(arch, val, "validation");
  if (options.batch_size == 0) throw InputError("batch_size must be >= 1");
  if (!plan.empty() && plan.rbegin()->first >= cfg.total_iters) {
    throw InputError("capture plan iteration " + std::to_string(plan.rbegin()->first) + " is outside the run");
  }

  TrainRun run;
  run.store.run_id = std::move(run_id);
  run.store.arch = arch;
  run.store.cfg = cfg;

  ParamVector params = init_params(arch, splitmix64(seed));
  std::mt19937_64 shuffle_rng(splitmix64(seed ^ 0x5deece66dULL));

  const std::size_t m = train.size();
  const std::size_t bs = std::min(options.batch_size, m);
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), shuffle_rng);
  std::size_t pos = 0;

  Dataset batch;
  batch.dim = train.dim;
  batch.num_classes = train.num_classes;

  auto next_capture = plan.begin();
  for (std::size_t t = 0; t < cfg.total_iters; ++t) {
    if (pos + bs > m) {
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      pos = 0;
    }
    gather_rows(train, std::span<const std::size_t>(order).subspan(pos, bs), batch);
    pos += bs;

    double loss = 0.0;
    const ParamVector grad = backward(params, batch, &loss);
    if (!std::isfinite(loss)) throw TrainingError(t, "training loss is not finite");
    const double lr = lr_at(cfg, t);
    try {
      sgd_step_inplace(params, grad, lr);
    } catch (const TrainingError& e) {
      throw TrainingError(t, "SGD step produced a non-finite parameter");
    }
    ++run.sgd_iterations;

    if (next_capture != plan.end() && next_capture->first == t) {
      Snapshot snap;
      snap.params = params;
      snap.iter = t;
      snap.lr_at_capture = lr;
      snap.train_nll = nll_loss(params, train);
      snap.val_nll = nll_loss(params, val);
      snap.tags = next_capture->second;
      if (!std::isfinite(snap.train_nll) || !std::isfinite(snap.val_nll)) {
        throw TrainingError(t, "captured snapshot has a non-finite loss");
      }
      run.store.snapshots.push_back(std::move(snap));
      ++next_capture;
    }
  }
  run.final_params = std::move(params);
  return run;
}

Selection select_min(const SnapshotStore& store) {
  return select_tagged(store, cycle_minima(store.cfg), CaptureTag::min, "min");
}

Selection select_mid(const SnapshotStore& store) {
  return select_tagged(store, cycle_midpoints(store.cfg), CaptureTag::mid, "mid");
}

Selection select_min_mid(const SnapshotStore& store) {
  Selection a = select_min(store);
  Selection b = select_mid(store);
  Selection out;
  std::merge(a.snapshots.begin(), a.snapshots.end(), b.snapshots.begin(), b.snapshots.end(),
             std::back_inserter(out.snapshots), [](const Snapshot& x, const Snapshot& y) { return x.iter < y.iter; });
  out.warnings = std::move(a.warnings);
  out.warnings.insert(out.warnings.end(), b.warnings.begin(), b.warnings.end());
  return out;
}

Selection select_window(const SnapshotStore& store, std::size_t half_width) {
  if (2 * half_width + 1 > store.cfg.cycle_len) {
    throw InputError("window half-width " + std::to_string(half_width) + " does not fit in a cycle of " +
                     std::to_string(store.cfg.cycle_len));
  }
  Selection sel;
  for (std::size_t m : cycle_minima(store.cfg)) {
    if (m < half_width || m + half_width >= store.cfg.total_iters) {
      sel.warnings.push_back("window: cycle ending at iteration " + std::to_string(m) +
                             " is truncated by the run boundary, skipped");
      continue;
    }
    const Snapshot* best = nullptr;
    bool complete = true;
    for (std::size_t it = m - half_width; it <= m + half_width; ++it) {
      const Snapshot* s = store.find(it);
      if (s == nullptr) {
        complete = false;
        break;
      }
      if (best == nullptr || s->val_nll < best->val_nll) best = s;
    }
    if (!complete) {
      sel.warnings.push_back("window: cycle ending at iteration " + std::to_string(m) +
                             " has an incomplete capture window, skipped");
      continue;
    }
    sel.snapshots.push_back(*best);
  }
  if (sel.snapshots.empty()) {
    throw SelectionError("store '" + store.run_id + "' has no complete capture window of half-width " +
                         std::to_string(half_width));
  }
  return sel;
}

Selection select_offset(const SnapshotStore& store, long steps) {
  const auto len = static_cast<long long>(store.cfg.cycle_len);
  if (steps >= len || -static_cast<long long>(steps) >= len) {
    throw InputError("offset " + std::to_string(steps) + " crosses into a neighbouring cycle (cycle_len " +
                     std::to_string(len) + ")");
  }
  Selection sel;
  for (std::size_t m : cycle_minima(store.cfg)) {
    const long long target = static_cast<long long>(m) + steps;
    if (target < 0 || target >= static_cast<long long>(store.cfg.total_iters)) {
      sel.warnings.push_back("offset: iteration " + std::to_string(target) + " lies outside the run, cycle skipped");
      continue;
    }
    const Snapshot* s = store.find(static_cast<std::size_t>(target));
    if (s == nullptr) {
      throw SelectionError("store '" + store.run_id + "' did not capture iteration " + std::to_string(target) +
                           " (offset " + std::to_string(steps) + ")");
    }
    sel.snapshots.push_back(*s);
  }
  if (sel.snapshots.empty()) {
    throw SelectionError("offset " + std::to_string(steps) + " selects no snapshots");
  }
  return sel;
}

// --- serialization -------------------------------------------------------

namespace {

std::uint64_t fnv1a(const unsigned char* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  std::vector<unsigned char>& buffer() { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& buf) : buf_(buf) {}

  std::uint8_t u8() { need(1); return buf_[pos_++]; }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{buf_[pos_++]} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{buf_[pos_++]} << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(buf_.begin() + static_cast<std::ptrdiff_t>(pos_), buf_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return buf_.size() - pos_; }

  void need(std::size_t n) const {
    if (remaining() < n) {
      throw StoreError(StoreError::Kind::truncated, "snapshot store truncated at byte " + std::to_string(pos_));
    }
  }

 private:
  const std::vector<unsigned char>& buf_;
  std::size_t pos_ = 0;
};

[[noreturn]] void malformed(const std::string& what) {
  throw StoreError(StoreError::Kind::malformed, "malformed snapshot store: " + what);
}

constexpr std::size_t kMaxLayers = 64;
constexpr std::uint64_t kMaxLayerWidth = 1u << 24;
constexpr std::size_t kSnapshotHeaderBytes = 8 + 8 + 8 + 8 + 1 + 8;

}  // namespace

std::vector<unsigned char> encode_store(const SnapshotStore& store) {
  Writer w;
  w.bytes(kStoreMagic, sizeof kStoreMagic);
  w.u32(kStoreVersion);
  w.u32(static_cast<std::uint32_t>(store.run_id.size()));
  w.bytes(store.run_id.data(), store.run_id.size());
  w.u32(static_cast<std::uint32_t>(store.arch.layer_sizes.size()));
  for (std::size_t n : store.arch.layer_sizes) w.u64(n);
  w.u8(static_cast<std::uint8_t>(store.arch.hidden_activation));
  w.f64(store.cfg.alpha_min);
  w.f64(store.cfg.alpha_max);
  w.u64(store.cfg.cycle_len);
  w.u64(store.cfg.total_iters);
  w.u64(store.snapshots.size());
  for (const Snapshot& s : store.snapshots) {
    w.u64(s.iter);
    w.f64(s.lr_at_capture);
    w.f64(s.train_nll);
    w.f64(s.val_nll);
    w.u8(s.tags.bits());
    w.u64(s.params.values.size());
    for (double v : s.params.values) w.f64(v);
  }
  const std::uint64_t sum = fnv1a(w.buffer().data(), w.buffer().size());
  w.u64(sum);
  return std::move(w.buffer());
}

SnapshotStore decode_store(const std::vector<unsigned char>& bytes) {
  Reader r(bytes);
  if (bytes.size() < sizeof kStoreMagic || !std::equal(kStoreMagic, kStoreMagic + sizeof kStoreMagic, bytes.begin())) {
    throw StoreError(StoreError::Kind::bad_magic, "not a snapshot store (bad magic)");
  }
  r.str(sizeof kStoreMagic);
  const std::uint32_t version = r.u32();
  if (version != kStoreVersion) {
    throw StoreError(StoreError::Kind::bad_version, "unsupported snapshot store version " + std::to_string(version) +
                                                        " (expected " + std::to_string(kStoreVersion) + ")");
  }

  SnapshotStore store;
  const std::uint32_t id_len = r.u32();
  store.run_id = r.str(id_len);

  const std::uint32_t n_sizes = r.u32();
  if (n_sizes < 2 || n_sizes > kMaxLayers) malformed("layer count " + std::to_string(n_sizes));
  for (std::uint32_t i = 0; i < n_sizes; ++i) {
    const std::uint64_t n = r.u64();
    if (n == 0 || n > kMaxLayerWidth) malformed("layer width " + std::to_string(n));
    store.arch.layer_sizes.push_back(n);
  }
  const std::uint8_t act = r.u8();
  if (act != static_cast<std::uint8_t>(Activation::relu)) malformed("unknown activation " + std::to_string(act));
  store.arch.hidden_activation = Activation::relu;

  store.cfg.alpha_min = r.f64();
  store.cfg.alpha_max = r.f64();
  store.cfg.cycle_len = r.u64();
  store.cfg.total_iters = r.u64();
  try {
    store.cfg.validate();
  } catch (const InputError& e) {
    malformed(e.what());
  }

  const std::uint64_t count = r.u64();
  const std::size_t expected_params = store.arch.param_count();
  if (count > r.remaining() / kSnapshotHeaderBytes) {
    throw StoreError(StoreError::Kind::truncated,
                     "snapshot store declares " + std::to_string(count) + " snapshots but is too short");
  }
  store.snapshots.reserve(count);
  for (std::uint64_t k = 0; k < count; ++k) {
    Snapshot s;
    s.iter = r.u64();
    s.lr_at_capture = r.f64();
    s.train_nll = r.f64();
    s.val_nll = r.f64();
    const std::uint8_t tags = r.u8();
    const std::uint64_t n_params = r.u64();
    if (n_params != expected_params) {
      throw StoreError(StoreError::Kind::arch_mismatch,
                       "snapshot " + std::to_string(k) + " has " + std::to_string(n_params) +
                           " parameters, architecture needs " + std::to_string(expected_params));
    }
    if (tags == 0 || (tags & ~kAllTagBits) != 0) malformed("invalid tag bits " + std::to_string(tags));
    if (s.iter >= store.cfg.total_iters) malformed("snapshot iteration beyond the run");
    if (!store.snapshots.empty() && s.iter <= store.snapshots.back().iter) {
      malformed("snapshot iterations are not strictly increasing");
    }
    if (!(std::isfinite(s.train_nll) && s.train_nll >= 0.0 && std::isfinite(s.val_nll) && s.val_nll >= 0.0)) {
      malformed("snapshot loss is negative or non-finite");
    }
    s.tags = TagSet::from_bits(tags);
    r.need(n_params * 8);
    s.params.arch = store.arch;
    s.params.values.resize(n_params);
    for (double& v : s.params.values) {
      v = r.f64();
      if (!std::isfinite(v)) malformed("non-finite parameter");
    }
    store.snapshots.push_back(std::move(s));
  }

  const std::size_t body = r.pos();
  const std::uint64_t sum = r.u64();
  if (sum != fnv1a(bytes.data(), body)) malformed("checksum mismatch");
  if (r.remaining() != 0) malformed(std::to_string(r.remaining()) + " trailing bytes");
  return store;
}

void save_store(const SnapshotStore& store, const std::filesystem::path& path) {
  const std::vector<unsigned char> bytes = encode_store(store);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw IoError("cannot write snapshot store " + path.string());
}

SnapshotStore load_store(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StoreError(StoreError::Kind::unreadable, "cannot open snapshot store " + path.string());
  const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_store(bytes);
}

SnapshotStore load_store(const std::filesystem::path& path, const MlpArchitecture& expected) {
  SnapshotStore store = load_store(path);
  if (store.arch != expected) {
    throw StoreError(StoreError::Kind::arch_mismatch, path.string() + ": architecture does not match the configuration");
  }
  return store;
}

}  // namespace snapstack

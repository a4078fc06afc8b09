#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "snapstack/errors.hpp"
#include "snapstack/nn.hpp"
#include "snapstack/schedule.hpp"

namespace snapstack {

// Why an iteration was captured. One iteration can serve several policies
// (a cycle minimum is also the centre of its window), so tags combine.
enum class CaptureTag : std::uint8_t { min = 1, mid = 2, window = 4, offset = 8 };

class TagSet {
 public:
  constexpr TagSet() = default;
  constexpr TagSet(CaptureTag t) : bits_(static_cast<std::uint8_t>(t)) {}  // NOLINT: implicit by intent
  static constexpr TagSet from_bits(std::uint8_t bits) { TagSet s; s.bits_ = bits; return s; }

  constexpr bool has(CaptureTag t) const { return (bits_ & static_cast<std::uint8_t>(t)) != 0; }
  constexpr TagSet& operator|=(TagSet o) { bits_ |= o.bits_; return *this; }
  constexpr std::uint8_t bits() const { return bits_; }
  constexpr bool empty() const { return bits_ == 0; }

  friend constexpr TagSet operator|(TagSet a, TagSet b) { return a |= b; }
  friend constexpr bool operator==(TagSet, TagSet) = default;

 private:
  std::uint8_t bits_ = 0;
};

inline constexpr std::uint8_t kAllTagBits = 0x0f;

std::string to_string(TagSet tags);

struct Snapshot {
  ParamVector params;
  std::size_t iter = 0;
  double lr_at_capture = 0.0;
  double train_nll = 0.0;
  double val_nll = 0.0;
  TagSet tags;

  friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

struct SnapshotStore {
  std::string run_id;
  MlpArchitecture arch;
  CycleConfig cfg;
  std::vector<Snapshot> snapshots;  // strictly increasing iter

  // Pointer into `snapshots` or nullptr.
  const Snapshot* find(std::size_t iter) const;

  friend bool operator==(const SnapshotStore&, const SnapshotStore&) = default;
};

// Iteration -> reasons for capturing it.
using CapturePlan = std::map<std::size_t, TagSet>;

struct CapturePolicies {
  bool minima = true;
  bool midpoints = false;
  std::size_t window_half_width = 0;  // 0 disables window capture
  std::vector<long> offsets;          // steps from each minimum; may be negative
};

// Union of the iterations every enabled policy needs, clipped to the run.
CapturePlan make_capture_plan(const CycleConfig& cfg, const CapturePolicies& policies);

struct TrainOptions {
  std::size_t batch_size = 64;
};

struct TrainRun {
  SnapshotStore store;
  ParamVector final_params;
  std::size_t sgd_iterations = 0;
};

// One SGD run over cfg.total_iters iterations with lr_at(cfg, t). The
// snapshot for iteration t holds the parameters after that iteration's step.
// Mini-batches come from a per-epoch shuffle seeded by `seed`.
TrainRun train_with_capture(const MlpArchitecture& arch, const Dataset& train, const Dataset& val,
                            const CycleConfig& cfg, std::uint64_t seed, const CapturePlan& plan,
                            const TrainOptions& options = {}, std::string run_id = "run");

// Selected snapshots in trajectory order, plus notes on cycles that had to
// be skipped.
struct Selection {
  std::vector<Snapshot> snapshots;
  std::vector<std::string> warnings;
};

Selection select_min(const SnapshotStore& store);
Selection select_mid(const SnapshotStore& store);
// Minima and midpoints together, two per cycle.
Selection select_min_mid(const SnapshotStore& store);
// Per cycle, the lowest val_nll among the 2s+1 iterations centred on the
// minimum; ties go to the earliest iteration.
Selection select_window(const SnapshotStore& store, std::size_t half_width);
// Per cycle, the snapshot `steps` iterations after the minimum.
Selection select_offset(const SnapshotStore& store, long steps);

class StoreError : public IoError {
 public:
  enum class Kind { unreadable, bad_magic, bad_version, truncated, malformed, arch_mismatch };

  StoreError(Kind kind, const std::string& what) : IoError(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

inline constexpr char kStoreMagic[8] = {'S', 'N', 'A', 'P', 'S', 'T', 'K', '\0'};
inline constexpr std::uint32_t kStoreVersion = 1;

std::vector<unsigned char> encode_store(const SnapshotStore& store);
SnapshotStore decode_store(const std::vector<unsigned char>& bytes);

void save_store(const SnapshotStore& store, const std::filesystem::path& path);
SnapshotStore load_store(const std::filesystem::path& path);
// Also rejects a store whose architecture differs from `expected`.
SnapshotStore load_store(const std::filesystem::path& path, const MlpArchitecture& expected);

}  // namespace snapstack

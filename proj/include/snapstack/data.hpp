#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>

#include "snapstack/errors.hpp"
#include "snapstack/nn.hpp"

namespace snapstack {

// Gaussian class clusters. Centers depend only on `seed`; `sample_stream`
// selects an independent noise stream around the same centers, which is how
// a disjoint held-out test set is drawn.
Dataset make_blobs(std::size_t num_classes, std::size_t per_class, std::size_t dim, double spread,
                   std::uint64_t seed, std::uint64_t sample_stream = 0);

class IdxError : public IoError {
 public:
  enum class Kind { unreadable, bad_magic, count_mismatch, truncated, bad_label };

  IdxError(Kind kind, const std::string& what) : IoError(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

// Reads an IDX image/label file pair. Pixels are scaled to [0, 1].
// num_classes defaults to max label + 1.
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 std::optional<std::size_t> limit = std::nullopt,
                 std::optional<std::size_t> num_classes = std::nullopt);

// Writes `data` as an IDX pair with rows x cols images. Features must be
// multiples of 1/255 in [0, 1]; used for fixtures and for exporting subsets.
void write_idx(const Dataset& data, std::size_t rows, std::size_t cols,
               const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

struct SplitSpec {
  double val_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct Split {
  Dataset train;
  Dataset val;
};

// Seeded permutation into ceil(m * (1 - f)) training rows and the rest.
Split split(const Dataset& data, const SplitSpec& spec);

// Rows [first, first + count) of `data`.
Dataset subset(const Dataset& data, std::size_t first, std::size_t count);

// FNV-1a over labels and the raw feature bytes; hex string.
std::string fingerprint(const Dataset& data);

}  // namespace snapstack

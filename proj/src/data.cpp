#include "snapstack/data.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <vector>

namespace snapstack {

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxError(IdxError::Kind::unreadable, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t pos, const std::filesystem::path& path) {
  if (buf.size() < pos + 4) {
    throw IdxError(IdxError::Kind::truncated, path.string() + ": header truncated");
  }
  return (std::uint32_t{buf[pos]} << 24) | (std::uint32_t{buf[pos + 1]} << 16) |
         (std::uint32_t{buf[pos + 2]} << 8) | std::uint32_t{buf[pos + 3]};
}

void put_be32(std::vector<unsigned char>& buf, std::uint32_t v) {
  buf.push_back(static_cast<unsigned char>(v >> 24));
  buf.push_back(static_cast<unsigned char>(v >> 16));
  buf.push_back(static_cast<unsigned char>(v >> 8));
  buf.push_back(static_cast<unsigned char>(v));
}

void write_file(const std::filesystem::path& path, const std::vector<unsigned char>& buf) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("cannot write " + path.string());
}

}  // namespace

Dataset make_blobs(std::size_t num_classes, std::size_t per_class, std::size_t dim, double spread,
                   std::uint64_t seed, std::uint64_t sample_stream) {
  if (num_classes < 2) throw InputError("make_blobs: num_classes must be >= 2");
  if (per_class < 1) throw InputError("make_blobs: per_class must be >= 1");
  if (dim < 2) throw InputError("make_blobs: dim must be >= 2");
  if (!(spread > 0.0) || !std::isfinite(spread)) throw InputError("make_blobs: spread must be > 0");

  std::mt19937_64 center_rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<double> centers(num_classes * dim);
  for (double& c : centers) c = unit(center_rng);

  std::seed_seq seq{seed, sample_stream, std::uint64_t{0x5eed}};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> noise(0.0, spread);

  Dataset out;
  out.dim = dim;
  out.num_classes = num_classes;
  out.features.reserve(num_classes * per_class * dim);
  out.labels.reserve(num_classes * per_class);
  // Interleave classes so that prefixes stay roughly balanced.
  for (std::size_t i = 0; i < per_class; ++i) {
    for (std::size_t k = 0; k < num_classes; ++k) {
      for (std::size_t d = 0; d < dim; ++d) out.features.push_back(centers[k * dim + d] + noise(rng));
      out.labels.push_back(static_cast<std::uint32_t>(k));
    }
  }
  return out;
}

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 std::optional<std::size_t> limit, std::optional<std::size_t> num_classes) {
  const std::vector<unsigned char> img = read_file(images_path);
  const std::vector<unsigned char> lab = read_file(labels_path);

  const std::uint32_t img_magic = read_be32(img, 0, images_path);
  if (img_magic != kIdxImageMagic) {
    char msg[64];
    std::snprintf(msg, sizeof msg, ": bad image magic 0x%08x", img_magic);
    throw IdxError(IdxError::Kind::bad_magic, images_path.string() + msg);
  }
  const std::uint32_t lab_magic = read_be32(lab, 0, labels_path);
  if (lab_magic != kIdxLabelMagic) {
    char msg[64];
    std::snprintf(msg, sizeof msg, ": bad label magic 0x%08x", lab_magic);
    throw IdxError(IdxError::Kind::bad_magic, labels_path.string() + msg);
  }

  const std::size_t n_images = read_be32(img, 4, images_path);
  const std::size_t rows = read_be32(img, 8, images_path);
  const std::size_t cols = read_be32(img, 12, images_path);
  const std::size_t n_labels = read_be32(lab, 4, labels_path);
  if (n_images != n_labels) {
    throw IdxError(IdxError::Kind::count_mismatch, "image count " + std::to_string(n_images) +
                                                       " does not match label count " + std::to_string(n_labels));
  }
  const std::size_t dim = rows * cols;
  if (dim == 0) throw IdxError(IdxError::Kind::bad_magic, images_path.string() + ": zero image size");
  if (img.size() - 16 < n_images * dim) {
    throw IdxError(IdxError::Kind::truncated, images_path.string() + ": pixel payload truncated");
  }
  if (lab.size() - 8 < n_labels) {
    throw IdxError(IdxError::Kind::truncated, labels_path.string() + ": label payload truncated");
  }

  const std::size_t m = limit ? std::min(*limit, n_images) : n_images;
  if (m == 0) throw InputError("load_idx: no rows to load");

  Dataset out;
  out.dim = dim;
  out.features.resize(m * dim);
  out.labels.resize(m);
  for (std::size_t i = 0; i < m * dim; ++i) out.features[i] = static_cast<double>(img[16 + i]) / 255.0;
  std::uint32_t max_label = 0;
  for (std::size_t i = 0; i < m; ++i) {
    out.labels[i] = lab[8 + i];
    max_label = std::max(max_label, out.labels[i]);
  }
  out.num_classes = num_classes.value_or(std::size_t{max_label} + 1);
  if (max_label >= out.num_classes) {
    throw IdxError(IdxError::Kind::bad_label, labels_path.string() + ": label " + std::to_string(max_label) +
                                                  " exceeds class count " + std::to_string(out.num_classes));
  }
  return out;
}

void write_idx(const Dataset& data, std::size_t rows, std::size_t cols, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path) {
  data.validate();
  if (rows * cols != data.dim) throw InputError("write_idx: rows * cols must equal the feature dimension");
  std::vector<unsigned char> img;
  img.reserve(16 + data.features.size());
  put_be32(img, kIdxImageMagic);
  put_be32(img, static_cast<std::uint32_t>(data.size()));
  put_be32(img, static_cast<std::uint32_t>(rows));
  put_be32(img, static_cast<std::uint32_t>(cols));
  for (double v : data.features) {
    const double px = std::round(v * 255.0);
    if (px < 0.0 || px > 255.0) throw InputError("write_idx: feature outside [0, 1]");
    img.push_back(static_cast<unsigned char>(px));
  }
  std::vector<unsigned char> lab;
  put_be32(lab, kIdxLabelMagic);
  put_be32(lab, static_cast<std::uint32_t>(data.size()));
  for (std::uint32_t y : data.labels) {
    if (y > 255) throw InputError("write_idx: label does not fit in a byte");
    lab.push_back(static_cast<unsigned char>(y));
  }
  write_file(images_path, img);
  write_file(labels_path, lab);
}

Dataset subset(const Dataset& data, std::size_t first, std::size_t count) {
  Dataset out;
  out.dim = data.dim;
  out.num_classes = data.num_classes;
  out.features.assign(data.features.begin() + static_cast<std::ptrdiff_t>(first * data.dim),
                      data.features.begin() + static_cast<std::ptrdiff_t>((first + count) * data.dim));
  out.labels.assign(data.labels.begin() + static_cast<std::ptrdiff_t>(first),
                    data.labels.begin() + static_cast<std::ptrdiff_t>(first + count));
  return out;
}

Split split(const Dataset& data, const SplitSpec& spec) {
  if (!(spec.val_fraction > 0.0 && spec.val_fraction < 1.0)) {
    throw InputError("split: val_fraction must lie in (0, 1)");
  }
  const std::size_t m = data.size();
  // ceil(m * (1 - f)) == m - floor(m * f); the epsilon absorbs representation
  // error in f (0.2 * 100 must give 20).
  const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(m) * spec.val_fraction + 1e-9));
  const std::size_t n_train = m - n_val;
  if (n_val == 0 || n_val >= n_train) {
    throw InputError("split: " + std::to_string(m) + " rows cannot give a nonempty validation set smaller than training");
  }

  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  std::shuffle(perm.begin(), perm.end(), rng);

  auto gather = [&](std::size_t first, std::size_t count) {
    Dataset out;
    out.dim = data.dim;
    out.num_classes = data.num_classes;
    out.features.reserve(count * data.dim);
    out.labels.reserve(count);
    for (std::size_t i = first; i < first + count; ++i) {
      const auto r = data.row(perm[i]);
      out.features.insert(out.features.end(), r.begin(), r.end());
      out.labels.push_back(data.labels[perm[i]]);
    }
    return out;
  };
  return {gather(0, n_train), gather(n_train, n_val)};
}

std::string fingerprint(const Dataset& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= 0x100000001b3ULL;
    }
  };
  mix(data.dim);
  mix(data.num_classes);
  for (std::uint32_t y : data.labels) mix(y);
  for (double v : data.features) mix(std::bit_cast<std::uint64_t>(v));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace snapstack

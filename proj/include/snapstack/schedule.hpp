#pragma once

#include <cstddef>
#include <vector>

namespace snapstack {

// Cosine cyclical learning rate indexed by SGD iteration. Each cycle starts
// at alpha_max and decays to alpha_min on its last iteration, then restarts.
struct CycleConfig {
  double alpha_min = 0.001;
  double alpha_max = 0.1;
  std::size_t cycle_len = 200;
  std::size_t total_iters = 1000;

  // 0 < alpha_min < alpha_max, cycle_len >= 2, total_iters >= cycle_len.
  void validate() const;
  std::size_t completed_cycles() const { return total_iters / cycle_len; }

  friend bool operator==(const CycleConfig&, const CycleConfig&) = default;
};

double lr_at(const CycleConfig& cfg, std::size_t t);

// Last iteration of every completed cycle.
std::vector<std::size_t> cycle_minima(const CycleConfig& cfg);

// First iteration of every completed cycle whose rate is at or below
// (alpha_max + alpha_min) / 2. With cycle_len == 2 this is the minimum itself.
std::vector<std::size_t> cycle_midpoints(const CycleConfig& cfg);

}  // namespace snapstack

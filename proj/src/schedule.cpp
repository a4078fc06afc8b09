#include "snapstack/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "snapstack/errors.hpp"

namespace snapstack {

void CycleConfig::validate() const {
  if (!(alpha_min > 0.0) || !std::isfinite(alpha_max) || !(alpha_min < alpha_max)) {
    throw InputError("schedule requires 0 < alpha_min < alpha_max");
  }
  if (cycle_len < 2) throw InputError("schedule cycle_len must be >= 2");
  if (total_iters < cycle_len) throw InputError("schedule total_iters must be >= cycle_len");
}

double lr_at(const CycleConfig& cfg, std::size_t t) {
  if (t >= cfg.total_iters) {
    throw InputError("iteration " + std::to_string(t) + " outside schedule of " +
                     std::to_string(cfg.total_iters) + " iterations");
  }
  const double u = static_cast<double>(t % cfg.cycle_len) / static_cast<double>(cfg.cycle_len - 1);
  const double w = 0.5 * (1.0 + std::cos(std::numbers::pi * u));
  // alpha_min + w * (alpha_max - alpha_min), written so that w == 1 and w == 0
  // reproduce the endpoints exactly.
  const double lr = cfg.alpha_min * (1.0 - w) + cfg.alpha_max * w;
  return std::clamp(lr, cfg.alpha_min, cfg.alpha_max);
}

std::vector<std::size_t> cycle_minima(const CycleConfig& cfg) {
  std::vector<std::size_t> out;
  for (std::size_t c = 1; c <= cfg.completed_cycles(); ++c) out.push_back(c * cfg.cycle_len - 1);
  return out;
}

std::vector<std::size_t> cycle_midpoints(const CycleConfig& cfg) {
  // lr <= midpoint  <=>  cos(pi * u) <= 0  <=>  2 * r >= cycle_len - 1,
  // with r the position inside the cycle. Evaluated in integers so that a
  // cos(pi/2) rounding residue cannot shift the crossing by one step.
  const std::size_t r = cfg.cycle_len / 2;  // ceil((cycle_len - 1) / 2)
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < cfg.completed_cycles(); ++c) out.push_back(c * cfg.cycle_len + r);
  return out;
}

}  // namespace snapstack

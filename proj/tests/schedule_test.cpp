#include "snapstack/schedule.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "snapstack/errors.hpp"

namespace snapstack {
namespace {

CycleConfig random_config(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> lo(1e-5, 0.05);
  std::uniform_real_distribution<double> span(1e-4, 1.0);
  std::uniform_int_distribution<std::size_t> len(2, 300);
  std::uniform_int_distribution<std::size_t> cycles(1, 6);
  std::uniform_int_distribution<std::size_t> extra(0, 50);
  CycleConfig cfg;
  cfg.alpha_min = lo(rng);
  cfg.alpha_max = cfg.alpha_min + span(rng);
  cfg.cycle_len = len(rng);
  cfg.total_iters = cfg.cycle_len * cycles(rng) + std::min(extra(rng), cfg.cycle_len - 1);
  return cfg;
}

TEST(LrAt, Endpoints) {
  const CycleConfig cfg{0.001, 0.1, 100, 300};
  EXPECT_EQ(lr_at(cfg, 0), 0.1);
  EXPECT_EQ(lr_at(cfg, 99), 0.001);
  EXPECT_EQ(lr_at(cfg, 100), 0.1);
  EXPECT_EQ(lr_at(cfg, 299), 0.001);
}

TEST(LrAt, CosineMidpoint) {
  const CycleConfig cfg{0.001, 0.1, 101, 101};
  EXPECT_NEAR(lr_at(cfg, 50), 0.0505, 1e-15);
}

TEST(LrAt, OutOfRange) {
  const CycleConfig cfg{0.001, 0.1, 10, 30};
  EXPECT_THROW(lr_at(cfg, 30), InputError);
}

TEST(CycleConfig, Validation) {
  EXPECT_THROW((CycleConfig{0.1, 0.1, 10, 10}.validate()), InputError);
  EXPECT_THROW((CycleConfig{0.0, 0.1, 10, 10}.validate()), InputError);
  EXPECT_THROW((CycleConfig{0.01, 0.1, 1, 10}.validate()), InputError);
  EXPECT_THROW((CycleConfig{0.01, 0.1, 10, 9}.validate()), InputError);
  EXPECT_NO_THROW((CycleConfig{0.01, 0.1, 2, 2}.validate()));
}

TEST(CycleMinima, Examples) {
  EXPECT_EQ(cycle_minima({0.001, 0.1, 100, 300}), (std::vector<std::size_t>{99, 199, 299}));
  EXPECT_EQ(cycle_minima({0.001, 0.1, 100, 150}), (std::vector<std::size_t>{99}));
}

TEST(CycleMidpoints, Examples) {
  EXPECT_EQ(cycle_midpoints({0.001, 0.1, 101, 303}), (std::vector<std::size_t>{50, 151, 252}));
  // Two points per cycle: the midpoint falls on the minimum.
  const CycleConfig tiny{0.001, 0.1, 2, 6};
  EXPECT_EQ(cycle_midpoints(tiny), cycle_minima(tiny));
}

TEST(ScheduleProperties, RandomConfigs) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const CycleConfig cfg = random_config(rng);
    const double mid = (cfg.alpha_max + cfg.alpha_min) / 2.0;

    for (std::size_t t = 0; t < cfg.total_iters; ++t) {
      const double lr = lr_at(cfg, t);
      ASSERT_GE(lr, cfg.alpha_min);
      ASSERT_LE(lr, cfg.alpha_max);
      if (t % cfg.cycle_len == 0) ASSERT_EQ(lr, cfg.alpha_max);
      if (t % cfg.cycle_len == cfg.cycle_len - 1) ASSERT_EQ(lr, cfg.alpha_min);
      if (t % cfg.cycle_len != 0) ASSERT_LE(lr, lr_at(cfg, t - 1));
      if (t + cfg.cycle_len < cfg.total_iters) ASSERT_EQ(lr, lr_at(cfg, t + cfg.cycle_len));
    }

    const auto minima = cycle_minima(cfg);
    const auto mids = cycle_midpoints(cfg);
    ASSERT_EQ(minima.size(), cfg.total_iters / cfg.cycle_len);
    ASSERT_EQ(mids.size(), minima.size());
    ASSERT_TRUE(std::is_sorted(minima.begin(), minima.end()));
    ASSERT_TRUE(std::is_sorted(mids.begin(), mids.end()));
    for (std::size_t m : minima) ASSERT_EQ(lr_at(cfg, m), cfg.alpha_min);
    for (std::size_t i = 0; i < mids.size(); ++i) {
      const std::size_t t = mids[i];
      ASSERT_EQ(t / cfg.cycle_len, i);
      // crossing: at or below the midpoint rate (up to rounding), the previous
      // iteration of the cycle still above it
      ASSERT_LE(lr_at(cfg, t), mid + 4e-16 * cfg.alpha_max);
      if (t % cfg.cycle_len != 0) {
        ASSERT_GT(lr_at(cfg, t - 1), mid);
        ASSERT_LE(std::fabs(lr_at(cfg, t) - mid), lr_at(cfg, t - 1) - lr_at(cfg, t));
      }
    }
    if (cfg.cycle_len >= 4) {
      for (std::size_t m : mids) ASSERT_EQ(std::count(minima.begin(), minima.end(), m), 0);
    }
  }
}

}  // namespace
}  // namespace snapstack

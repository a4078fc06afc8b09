#include "snapstack/nn.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "snapstack/errors.hpp"
#include "test_util.hpp"

namespace snapstack {
namespace {

using testing::random_dataset;
using testing::random_params;

MlpArchitecture arch_of(std::vector<std::size_t> sizes) { return MlpArchitecture{std::move(sizes)}; }

TEST(MlpArchitecture, ParamCountAndValidation) {
  EXPECT_EQ(arch_of({2, 2}).param_count(), 6u);
  EXPECT_EQ(arch_of({8, 32, 3}).param_count(), 8u * 32 + 32 + 32 * 3 + 3);
  EXPECT_THROW(arch_of({4}).validate(), InputError);
  EXPECT_THROW(arch_of({4, 0, 2}).validate(), InputError);
}

TEST(Forward, ZeroParamsGiveUniform) {
  const auto arch = arch_of({3, 5, 4});
  const ParamVector p{std::vector<double>(arch.param_count(), 0.0), arch};
  const std::vector<double> x{0.3, -2.0, 7.0};
  for (double v : forward(p, x)) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Forward, HandComputedSoftmax) {
  // W = [[10, 0], [0, 10]], b = 0, x = (1, 0): logits (10, 0).
  const ParamVector p{{10, 0, 0, 10, 0, 0}, arch_of({2, 2})};
  const std::vector<double> out = forward(p, std::vector<double>{1.0, 0.0});
  EXPECT_NEAR(out[0], 0.99995460213129761, 1e-15);
  EXPECT_NEAR(out[1], 4.5397868702434395e-05, 1e-18);
}

TEST(Forward, OutputsOnSimplex) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const auto arch = arch_of({4, 6, 5});
    const ParamVector p = random_params(arch, rng, 3.0);
    const Dataset x = random_dataset(1, 4, 5, rng);
    const std::vector<double> out = forward(p, x.row(0));
    const double sum = std::accumulate(out.begin(), out.end(), 0.0);
    EXPECT_NEAR(sum, 1.0, 1e-12);
    for (double v : out) EXPECT_GE(v, 0.0);
  }
}

TEST(Forward, DimensionMismatch) {
  const auto arch = arch_of({3, 2});
  const ParamVector p{std::vector<double>(arch.param_count(), 0.0), arch};
  EXPECT_THROW(forward(p, std::vector<double>{1.0, 2.0}), InputError);
  ParamVector short_p = p;
  short_p.values.pop_back();
  EXPECT_THROW(forward(short_p, std::vector<double>{1.0, 2.0, 3.0}), InputError);
}

TEST(NllLoss, ZeroParamsGiveLogK) {
  std::mt19937_64 rng(3);
  const auto arch = arch_of({2, 3});
  const ParamVector p{std::vector<double>(arch.param_count(), 0.0), arch};
  EXPECT_DOUBLE_EQ(nll_loss(p, random_dataset(17, 2, 3, rng)), std::log(3.0));
}

TEST(NllLoss, PerfectPredictorIsZero) {
  const ParamVector p{{100, 0, 0, 100, 0, 0}, arch_of({2, 2})};
  const Dataset d{{1, 0, 0, 1}, {0, 1}, 2, 2};
  EXPECT_EQ(nll_loss(p, d), 0.0);
  const ParamVector g = backward(p, d);
  double norm = 0.0;
  for (double v : g.values) norm += v * v;
  EXPECT_LT(std::sqrt(norm), 1e-6);
}

TEST(NllLoss, MatchesHandComputation) {
  // [2 -> 2], W = [[1, -1], [0.5, 2]], b = [0.1, -0.2].
  const ParamVector p{{1, -1, 0.5, 2, 0.1, -0.2}, arch_of({2, 2})};
  const Dataset d{{1, 2, -1, 0.5, 0, -3}, {0, 1, 1}, 2, 2};
  // Per example: logits z, nll = logsumexp(z) - z_y.
  //  x=(1,2):    z = (1 - 2 + .1, .5 + 4 - .2)  = (-0.9, 4.3),  y=0
  //  x=(-1,.5):  z = (-1 - .5 + .1, -.5 + 1 - .2) = (-1.4, 0.3), y=1
  //  x=(0,-3):   z = (3 + .1, -6 - .2)          = (3.1, -6.2), y=1
  auto nll = [](double z0, double z1, int y) {
    const double lse = std::log(std::exp(z0) + std::exp(z1));
    return lse - (y == 0 ? z0 : z1);
  };
  const double expected = (nll(-0.9, 4.3, 0) + nll(-1.4, 0.3, 1) + nll(3.1, -6.2, 1)) / 3.0;
  EXPECT_NEAR(nll_loss(p, d), expected, 1e-12);
}

TEST(NllLoss, EqualsMeanOfForwardTrueClass) {
  // nll_loss has its own batched kernel; covers widening and narrowing layers.
  std::mt19937_64 rng(5);
  for (const auto& sizes : std::vector<std::vector<std::size_t>>{{3, 7, 4}, {6, 2, 5}, {4, 4}, {2, 9, 3, 8, 2}}) {
    const auto arch = arch_of(sizes);
    for (int trial = 0; trial < 20; ++trial) {
      const ParamVector p = random_params(arch, rng);
      const Dataset d = random_dataset(9, sizes.front(), sizes.back(), rng);
      double total = 0.0;
      for (std::size_t j = 0; j < d.size(); ++j) total -= std::log(forward(p, d.row(j))[d.labels[j]]);
      EXPECT_NEAR(nll_loss(p, d), total / 9.0, 1e-12);
    }
  }
}

TEST(NllLoss, ConfidentWrongPredictionStaysFinite) {
  const ParamVector p{{1000, 0, 0, 1000, 0, 0}, arch_of({2, 2})};
  const Dataset d{{1, 0}, {1}, 2, 2};
  const double loss = nll_loss(p, d);
  EXPECT_TRUE(std::isfinite(loss));
  EXPECT_NEAR(loss, -std::log(kProbabilityFloor), 1e-9);
}

// Central differences of the mean NLL, evaluated coordinate by coordinate.
std::vector<double> numerical_gradient(const ParamVector& p, const Dataset& d, double h) {
  std::vector<double> g(p.values.size());
  ParamVector probe = p;
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    probe.values[i] = p.values[i] + h;
    const double up = nll_loss(probe, d);
    probe.values[i] = p.values[i] - h;
    const double down = nll_loss(probe, d);
    probe.values[i] = p.values[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

TEST(Backward, MatchesFiniteDifferences) {
  std::mt19937_64 rng(2024);
  const std::vector<MlpArchitecture> archs{arch_of({3, 4}), arch_of({3, 5, 4}), arch_of({2, 4, 3, 3})};
  std::uniform_int_distribution<std::size_t> batch(1, 8);
  for (int trial = 0; trial < 100; ++trial) {
    const MlpArchitecture& arch = archs[static_cast<std::size_t>(trial) % archs.size()];
    const ParamVector p = random_params(arch, rng);
    const Dataset d = random_dataset(batch(rng), arch.input_dim(), arch.num_classes(), rng);
    const ParamVector g = backward(p, d);
    const std::vector<double> fd = numerical_gradient(p, d, 1e-5);
    for (std::size_t i = 0; i < fd.size(); ++i) {
      const double denom = std::max({std::fabs(g.values[i]), std::fabs(fd[i]), 1e-6});
      EXPECT_LT(std::fabs(g.values[i] - fd[i]) / denom, 1e-4) << "trial " << trial << " coord " << i;
    }
  }
}

TEST(Backward, ReportsBatchLoss) {
  std::mt19937_64 rng(8);
  const auto arch = arch_of({3, 5, 2});
  const ParamVector p = random_params(arch, rng);
  const Dataset d = random_dataset(6, 3, 2, rng);
  double loss = -1.0;
  backward(p, d, &loss);
  EXPECT_NEAR(loss, nll_loss(p, d), 1e-14);
}

TEST(Backward, DuplicatedBatchGivesSameGradient) {
  std::mt19937_64 rng(9);
  const auto arch = arch_of({3, 6, 3});
  const ParamVector p = random_params(arch, rng);
  const Dataset d = random_dataset(5, 3, 3, rng);
  Dataset twice = d;
  twice.features.insert(twice.features.end(), d.features.begin(), d.features.end());
  twice.labels.insert(twice.labels.end(), d.labels.begin(), d.labels.end());
  const ParamVector g1 = backward(p, d);
  const ParamVector g2 = backward(p, twice);
  for (std::size_t i = 0; i < g1.size(); ++i) EXPECT_NEAR(g1.values[i], g2.values[i], 1e-14);
}

TEST(SgdStep, Arithmetic) {
  const auto arch = arch_of({1, 1});
  const ParamVector p{{1.0, 2.0}, arch};
  const ParamVector g{{0.5, -1.0}, arch};
  const ParamVector out = sgd_step(p, g, 0.1);
  EXPECT_DOUBLE_EQ(out.values[0], 0.95);
  EXPECT_DOUBLE_EQ(out.values[1], 2.1);
  EXPECT_EQ(sgd_step(p, ParamVector{{0.0, 0.0}, arch}, 0.3), p);
}

TEST(SgdStep, RejectsBadInputs) {
  const auto arch = arch_of({1, 1});
  const ParamVector p{{1.0, 2.0}, arch};
  EXPECT_THROW(sgd_step(p, ParamVector{{1.0, 1.0}, arch}, 0.0), InputError);
  EXPECT_THROW(sgd_step(p, ParamVector{{1.0, 1.0, 1.0}, arch}, 0.1), InputError);
  EXPECT_THROW(sgd_step(p, ParamVector{{1e308, 0.0}, arch}, 1e10), TrainingError);
}

TEST(SgdStep, IsLinearInLearningRate) {
  std::mt19937_64 rng(4);
  const auto arch = arch_of({3, 4, 2});
  for (int trial = 0; trial < 50; ++trial) {
    const ParamVector p = random_params(arch, rng);
    const ParamVector g = random_params(arch, rng);
    std::uniform_real_distribution<double> lr(1e-4, 1.0);
    const double a = lr(rng), b = lr(rng);
    const ParamVector two = sgd_step(sgd_step(p, g, a), g, b);
    const ParamVector one = sgd_step(p, g, a + b);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(two.values[i], one.values[i], 1e-12);
  }
}

TEST(SgdStep, DescendsConvexQuadratic) {
  // f(theta) = 1/2 sum_i c_i theta_i^2, gradient c_i theta_i. Any lr < 2 / max c
  // shrinks every coordinate's magnitude, so f decreases monotonically.
  const auto arch = arch_of({2, 2});
  const std::vector<double> c{0.5, 1.0, 2.0, 3.0, 4.0, 5.0};
  auto f = [&](const ParamVector& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) s += 0.5 * c[i] * p.values[i] * p.values[i];
    return s;
  };
  ParamVector p{{1, -2, 3, -4, 5, -6}, arch};
  double prev = f(p);
  for (int step = 0; step < 200; ++step) {
    ParamVector g{std::vector<double>(6), arch};
    for (std::size_t i = 0; i < c.size(); ++i) g.values[i] = c[i] * p.values[i];
    p = sgd_step(p, g, 0.3);
    const double now = f(p);
    EXPECT_LT(now, prev);
    prev = now;
  }
  EXPECT_LT(prev, 1e-10);
}

TEST(InitParams, DeterministicAndSeedSensitive) {
  const auto arch = arch_of({8, 32, 3});
  EXPECT_EQ(init_params(arch, 42), init_params(arch, 42));
  EXPECT_NE(init_params(arch, 42).values, init_params(arch, 43).values);
}

TEST(InitParams, ZeroMeanFanInScaledWeightsAndZeroBiases) {
  const auto arch = arch_of({1000, 100});
  const ParamVector p = init_params(arch, 7);
  const std::size_t n = 1000 * 100;
  double mean = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean += p.values[i];
    sq += p.values[i] * p.values[i];
  }
  mean /= static_cast<double>(n);
  const double sigma = std::sqrt(2.0 / 1000.0);
  EXPECT_LT(std::fabs(mean), 3.0 * sigma / std::sqrt(static_cast<double>(n)));
  EXPECT_NEAR(std::sqrt(sq / static_cast<double>(n)), sigma, 0.02 * sigma);
  for (std::size_t i = n; i < p.size(); ++i) EXPECT_EQ(p.values[i], 0.0);
}

TEST(Training, FullBatchSeparatesLinearlySeparableData) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Dataset d;
  d.dim = 2;
  d.num_classes = 2;
  while (d.size() < 100) {
    const double x = u(rng), y = u(rng);
    if (std::fabs(x + 0.5 * y) < 0.1) continue;  // margin
    d.features.push_back(x);
    d.features.push_back(y);
    d.labels.push_back(x + 0.5 * y > 0 ? 1 : 0);
  }
  ParamVector p = init_params(arch_of({2, 8, 2}), 3);
  for (int it = 0; it < 500; ++it) sgd_step_inplace(p, backward(p, d), 0.5);
  std::size_t correct = 0;
  for (std::size_t j = 0; j < d.size(); ++j) {
    const auto out = forward(p, d.row(j));
    correct += static_cast<std::size_t>(std::max_element(out.begin(), out.end()) - out.begin()) == d.labels[j];
  }
  EXPECT_EQ(correct, d.size());
}

}  // namespace
}  // namespace snapstack

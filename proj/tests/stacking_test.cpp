#include "snapstack/stacking.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "snapstack/errors.hpp"
#include "test_util.hpp"

namespace snapstack {
namespace {

using testing::make_snapshot;
using testing::random_dataset;
using testing::random_params;

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

void expect_normalized(const std::vector<double>& w) {
  for (double v : w) EXPECT_GT(v, 0.0);
  EXPECT_NEAR(sum(w), static_cast<double>(w.size()), 1e-9);
}

TEST(WeightsEqual, Basic) {
  EXPECT_EQ(weights_equal(3), (std::vector<double>{1, 1, 1}));
  EXPECT_EQ(weights_equal(1), (std::vector<double>{1}));
  EXPECT_THROW(weights_equal(0), InputError);
}

TEST(WeightsInverseLoss, Arithmetic) {
  const auto w = weights_inverse_loss(std::vector<double>{1, 2, 4});
  EXPECT_NEAR(w[0], 12.0 / 7.0, 1e-15);
  EXPECT_NEAR(w[1], 6.0 / 7.0, 1e-15);
  EXPECT_NEAR(w[2], 3.0 / 7.0, 1e-15);
  for (double v : weights_inverse_loss(std::vector<double>{0.7, 0.7, 0.7})) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(WeightsInverseLoss, RejectsNonPositive) {
  EXPECT_THROW(weights_inverse_loss(std::vector<double>{1.0, 0.0}), InputError);
  EXPECT_THROW(weights_inverse_loss(std::vector<double>{1.0, -2.0}), InputError);
  EXPECT_THROW(weights_inverse_loss(std::vector<double>{1.0, NAN}), InputError);
}

TEST(WeightsLikelihood, Arithmetic) {
  for (double v : weights_likelihood(std::vector<double>{-1, -1, -1})) EXPECT_DOUBLE_EQ(v, 1.0);
  const auto w = weights_likelihood(std::vector<double>{std::log(2.0), 0.0});
  EXPECT_NEAR(w[0], 4.0 / 3.0, 1e-15);
  EXPECT_NEAR(w[1], 2.0 / 3.0, 1e-15);
}

TEST(WeightsTemperature, Arithmetic) {
  const auto w = weights_temperature(std::vector<double>{0.0, -std::log(2.0)}, 1.0);
  EXPECT_NEAR(w[0], 4.0 / 3.0, 1e-15);
  EXPECT_NEAR(w[1], 2.0 / 3.0, 1e-15);
  EXPECT_THROW(weights_temperature(std::vector<double>{0.0}, 0.0), InputError);
  EXPECT_THROW(weights_temperature(std::vector<double>{0.0}, -1.0), InputError);
  EXPECT_THROW(weights_temperature(std::vector<double>{INFINITY}, 1.0), InputError);
}

TEST(WeightsTemperature, HighTemperatureApproachesEqual) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ell(-5.0, 0.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> l(2 + static_cast<std::size_t>(trial) % 20);
    for (double& v : l) v = ell(rng);
    for (double v : weights_temperature(l, 1000.0)) EXPECT_LT(std::fabs(v - 1.0), 0.01);
  }
}

TEST(WeightsTemperature, LowTemperatureSelectsBest) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ell(-3.0, 0.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> l(2 + static_cast<std::size_t>(trial) % 10);
    for (double& v : l) v = ell(rng);
    const auto best = static_cast<std::size_t>(std::max_element(l.begin(), l.end()) - l.begin());
    // keep the maximum unique by a margin
    for (std::size_t i = 0; i < l.size(); ++i) {
      if (i != best) l[i] = std::min(l[i], l[best] - 0.05);
    }
    const auto w = weights_temperature(l, 1e-3);
    EXPECT_GT(w[best], 0.999 * static_cast<double>(l.size()));
    expect_normalized(w);
  }
}

TEST(WeightProperties, PositiveNormalizedMonotoneShiftInvariant) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> nll(1e-3, 8.0);
  std::uniform_real_distribution<double> log_tau(-3.0, 3.0);
  std::uniform_real_distribution<double> shift(-10.0, 10.0);
  std::uniform_real_distribution<double> log_tau_shift(-1.0, 3.0);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial) % 12;
    std::vector<double> losses(n), ll(n);
    for (std::size_t i = 0; i < n; ++i) {
      losses[i] = nll(rng);
      ll[i] = -losses[i];
    }
    const double tau = std::pow(10.0, log_tau(rng));

    const auto wi = weights_inverse_loss(losses);
    const auto wt = weights_temperature(ll, tau);
    expect_normalized(wi);
    expect_normalized(wt);
    expect_normalized(weights_likelihood(ll));

    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (losses[i] < losses[j]) {
          EXPECT_GE(wi[i], wi[j]);
          EXPECT_GE(wt[i], wt[j]);
        }
      }
    }

    std::vector<double> shifted(ll);
    const double c = shift(rng);
    for (double& v : shifted) v += c;
    // Rounding of l + c is amplified by 1 / tau, so the tolerance check uses
    // tau >= 0.1; the dyadic case below is exact for any tau.
    const double tau_s = std::pow(10.0, log_tau_shift(rng));
    const auto ws = weights_temperature(shifted, tau_s);
    const auto w0 = weights_temperature(ll, tau_s);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(ws[i], w0[i], 1e-12);

    const double spread = *std::max_element(ll.begin(), ll.end()) - *std::min_element(ll.begin(), ll.end());
    const double bound = std::expm1(spread / 1000.0) * static_cast<double>(n);
    for (double v : weights_temperature(ll, 1000.0)) EXPECT_LE(std::fabs(v - 1.0), bound + 1e-15);
  }
}

TEST(WeightProperties, DyadicShiftIsExact) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> ticks(-8192, 0);
  std::uniform_int_distribution<int> shift(-50, 50);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> ll(6), shifted(6);
    const int c = shift(rng);
    for (std::size_t i = 0; i < ll.size(); ++i) {
      ll[i] = ticks(rng) / 1024.0;
      shifted[i] = ll[i] + c;
    }
    EXPECT_EQ(weights_temperature(ll, 1e-3), weights_temperature(shifted, 1e-3));
    EXPECT_EQ(weights_temperature(ll, 0.9), weights_temperature(shifted, 0.9));
  }
}

TEST(WeightProperties, ExtremeSpreadStaysPositive) {
  const auto w = weights_temperature(std::vector<double>{0.0, -800.0, -5000.0}, 1e-3);
  expect_normalized(w);
  EXPECT_NEAR(w[0], 3.0, 1e-12);
}

TEST(BuildEnsemble, Rules) {
  const std::vector<Snapshot> snaps{make_snapshot({0, 1}, 1, 0.5, 0.9), make_snapshot({1, 0}, 2, 0.25, 0.3),
                                    make_snapshot({1, 1}, 3, 1.0, 0.6)};
  EXPECT_EQ(build_ensemble(snaps, {WeightRule::equal, 1.0, LossSource::train}).weights(),
            (std::vector<double>{1, 1, 1}));

  const auto like = build_ensemble(snaps, {WeightRule::likelihood, 7.0, LossSource::validation});
  const auto temp = build_ensemble(snaps, {WeightRule::temperature, 1.0, LossSource::validation});
  EXPECT_EQ(like.weights(), temp.weights());

  const auto inv = build_ensemble(snaps, {WeightRule::inverse_loss, 1.0, LossSource::train}).weights();
  EXPECT_EQ(inv, weights_inverse_loss(std::vector<double>{0.5, 0.25, 1.0}));
  const auto val = build_ensemble(snaps, {WeightRule::temperature, 0.5, LossSource::validation}).weights();
  EXPECT_EQ(val, weights_temperature(std::vector<double>{-0.9, -0.3, -0.6}, 0.5));

  for (auto rule : {WeightRule::equal, WeightRule::inverse_loss, WeightRule::likelihood, WeightRule::temperature}) {
    const auto one = build_ensemble(std::span(snaps).first(1), {rule, 0.3, LossSource::train});
    EXPECT_EQ(one.weights(), (std::vector<double>{1.0}));
  }
  EXPECT_THROW(build_ensemble({}, {}), InputError);
  EXPECT_THROW(build_ensemble(snaps, {WeightRule::temperature, 0.0, LossSource::train}), InputError);
}

Snapshot constant_output_member(double p0) {
  // [1 -> 2] with zero weights; biases set the softmax output.
  Snapshot s;
  s.params = ParamVector{{0.0, 0.0, std::log(p0), std::log(1.0 - p0)}, MlpArchitecture{{1, 2}}};
  s.train_nll = s.val_nll = 1.0;
  return s;
}

TEST(EnsemblePredict, HandSetOutputs) {
  EnsembleModel ens;
  ens.members = {{constant_output_member(0.8), 1.5}, {constant_output_member(0.2), 0.5}};
  const auto out = ensemble_predict(ens, std::vector<double>{3.0});
  EXPECT_NEAR(out[0], 0.65, 1e-12);
  EXPECT_NEAR(out[1], 0.35, 1e-12);
}

TEST(EnsemblePredict, AlgebraicIdentities) {
  std::mt19937_64 rng(4);
  const MlpArchitecture arch{{3, 5, 4}};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Snapshot> snaps;
    for (int k = 0; k < 4; ++k) {
      Snapshot s;
      s.params = random_params(arch, rng, 2.0);
      s.train_nll = 0.1 + 0.3 * k;
      s.val_nll = 0.2 + 0.1 * k;
      snaps.push_back(s);
    }
    const Dataset x = random_dataset(1, 3, 4, rng);

    // N = 1 equals the member's forward exactly.
    const auto single = build_ensemble(std::span(snaps).first(1), {WeightRule::temperature, 0.5, LossSource::train});
    EXPECT_EQ(ensemble_predict(single, x.row(0)), forward(snaps[0].params, x.row(0)));

    // Equal weights give the arithmetic mean of member outputs.
    const auto eq = build_ensemble(snaps, {WeightRule::equal, 1.0, LossSource::train});
    std::vector<double> mean(4, 0.0);
    for (const auto& s : snaps) {
      const auto p = forward(s.params, x.row(0));
      for (std::size_t c = 0; c < 4; ++c) mean[c] += p[c] / 4.0;
    }
    const auto out = ensemble_predict(eq, x.row(0));
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(out[c], mean[c], 1e-12);

    // Any weighting stays on the simplex.
    const auto stacked = build_ensemble(snaps, {WeightRule::temperature, 0.05, LossSource::validation});
    const auto ps = ensemble_predict(stacked, x.row(0));
    for (double v : ps) EXPECT_GE(v, 0.0);
    EXPECT_NEAR(sum(ps), 1.0, 1e-9);

    // Identical members: any weights reproduce the single forward.
    std::vector<Snapshot> same(3, snaps[1]);
    same[0].train_nll = 0.1;
    same[2].train_nll = 2.0;
    const auto ident = build_ensemble(same, {WeightRule::temperature, 0.3, LossSource::train});
    const auto pi = ensemble_predict(ident, x.row(0));
    const auto pf = forward(snaps[1].params, x.row(0));
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(pi[c], pf[c], 1e-12);
  }
}

TEST(SwaAverage, Arithmetic) {
  const Snapshot a = make_snapshot({0, 2}, 1, 1, 1);
  const Snapshot b = make_snapshot({2, 0}, 2, 1, 1);
  const std::vector<Snapshot> pair{a, b};
  EXPECT_EQ(swa_average(pair, weights_equal(2)).values, (std::vector<double>{1, 1}));
  const auto w = swa_average(pair, std::vector<double>{1.8, 0.2}).values;
  EXPECT_NEAR(w[0], 0.2, 1e-12);
  EXPECT_NEAR(w[1], 1.8, 1e-12);

  const std::vector<Snapshot> same(5, make_snapshot({0.3, -1.7, 2.5, 4.0}, 1, 1, 1));
  EXPECT_EQ(swa_average(same, weights_equal(5)), same[0].params);

  EXPECT_THROW(swa_average(pair, std::vector<double>{1.0}), InputError);
  const std::vector<Snapshot> mixed{a, make_snapshot({1, 2, 3, 4}, 3, 1, 1)};
  EXPECT_THROW(swa_average(mixed, weights_equal(2)), InputError);
}

TEST(Evaluate, PerfectAndUniform) {
  const Dataset d{{1, 0, 0, 1, 1, 0}, {0, 1, 0}, 2, 2};
  const ParamVector perfect{{100, 0, 0, 100, 0, 0}, MlpArchitecture{{2, 2}}};
  EXPECT_EQ(evaluate(predictor(perfect), d).accuracy, 1.0);

  const PredictFn uniform = [](std::span<const double>) { return std::vector<double>(5, 0.2); };
  Dataset five{{0, 0, 0}, {4, 2, 0}, 1, 5};
  const Metrics m = evaluate(uniform, five);
  EXPECT_NEAR(m.mean_nll, std::log(5.0), 1e-15);
  // All classes tie: argmax picks class 0.
  EXPECT_EQ(m.correct, 1u);
}

TEST(Evaluate, MatchesBruteForceRecount) {
  std::mt19937_64 rng(6);
  const MlpArchitecture arch{{3, 6, 3}};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Snapshot> snaps;
    for (int k = 0; k < 3; ++k) {
      Snapshot s;
      s.params = random_params(arch, rng);
      s.train_nll = 0.5 + k;
      snaps.push_back(s);
    }
    const auto ens = build_ensemble(snaps, {WeightRule::temperature, 0.7, LossSource::train});
    const Dataset d = random_dataset(15, 3, 3, rng);
    std::size_t correct = 0;
    for (std::size_t j = 0; j < d.size(); ++j) {
      const auto p = ensemble_predict(ens, d.row(j));
      std::size_t best = 0;
      for (std::size_t c = 1; c < p.size(); ++c) {
        if (p[c] > p[best]) best = c;
      }
      correct += best == d.labels[j];
    }
    const Metrics m = evaluate(predictor(ens), d);
    EXPECT_EQ(m.correct, correct);
    EXPECT_EQ(m.accuracy, static_cast<double>(correct) / 15.0);
  }
}

TEST(Names, RoundTrip) {
  for (auto r : {WeightRule::equal, WeightRule::inverse_loss, WeightRule::likelihood, WeightRule::temperature}) {
    EXPECT_EQ(parse_weight_rule(to_string(r)), r);
  }
  EXPECT_EQ(parse_loss_source("validation"), LossSource::validation);
  EXPECT_EQ(parse_loss_source("train"), LossSource::train);
  EXPECT_THROW(parse_loss_source("test"), InputError);
}

}  // namespace
}  // namespace snapstack

#pragma once

// Training-time stacking: ensemble weights computed from per-snapshot losses
// that are already known at capture time.
//
// Every weight rule returns strictly positive weights normalised so that they
// sum to N, the number of members. The ensemble prediction
//
//   f(x) = (1/N) * sum_k w_k * f_k(x)
//
// is then a convex combination of the member softmax outputs, and equal
// weighting is exactly w_k = 1.
//
// Likelihood-based rules work on the MEAN per-example log-likelihood
// l_i = -mean_nll_i rather than the product over the sample, which would
// underflow to zero for any realistic sample size.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "snapstack/nn.hpp"
#include "snapstack/snapshots.hpp"

namespace snapstack {

enum class WeightRule : std::uint8_t { equal, inverse_loss, likelihood, temperature };
enum class LossSource : std::uint8_t { train, validation };

struct WeightingSpec {
  WeightRule rule = WeightRule::equal;
  double tau = 1.0;  // only read by WeightRule::temperature
  LossSource source = LossSource::train;

  void validate() const;
};

std::string to_string(WeightRule rule);
std::string to_string(LossSource source);
WeightRule parse_weight_rule(const std::string& s);
LossSource parse_loss_source(const std::string& s);

std::vector<double> weights_equal(std::size_t n);

// w_i proportional to 1 / l_i. Every loss must be > 0.
std::vector<double> weights_inverse_loss(std::span<const double> losses);

// w_i proportional to exp(l_i); identical to weights_temperature(l, 1).
std::vector<double> weights_likelihood(std::span<const double> log_liks);

// w_i proportional to exp((l_i - max_j l_j) / tau). Large tau tends to equal
// weights, small tau puts all the mass on the best member. Raw weights are
// floored at the smallest normal double so no member drops to exactly zero.
std::vector<double> weights_temperature(std::span<const double> log_liks, double tau);

struct EnsembleMember {
  Snapshot snapshot;
  double weight = 1.0;
};

struct EnsembleModel {
  std::vector<EnsembleMember> members;

  std::size_t size() const { return members.size(); }
  std::vector<double> weights() const;
};

EnsembleModel build_ensemble(std::span<const Snapshot> snapshots, const WeightingSpec& spec);

std::vector<double> ensemble_predict(const EnsembleModel& ens, std::span<const double> x);

// Weighted parameter-space average (1/N) * sum_k w_k * theta_k.
ParamVector swa_average(std::span<const Snapshot> snapshots, std::span<const double> weights);

struct Metrics {
  double accuracy = 0.0;
  double mean_nll = 0.0;
  std::size_t correct = 0;
  std::size_t count = 0;
};

using PredictFn = std::function<std::vector<double>(std::span<const double>)>;

// Argmax accuracy (ties to the lowest class index) and mean NLL with the
// same probability floor as nll_loss.
Metrics evaluate(const PredictFn& predict, const Dataset& data);

PredictFn predictor(const ParamVector& params);
PredictFn predictor(const EnsembleModel& ens);

std::size_t argmax(std::span<const double> probs);

}  // namespace snapstack

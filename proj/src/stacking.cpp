#include "snapstack/stacking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "snapstack/errors.hpp"
#include "summation.hpp"

namespace snapstack {

namespace {

std::vector<double> normalize_to_count(std::vector<double> raw) {
  double total = 0.0;
  for (double v : raw) total += v;
  const double scale = static_cast<double>(raw.size()) / total;
  for (double& v : raw) v *= scale;
  return raw;
}

void require_nonempty(std::size_t n, const char* what) {
  if (n == 0) throw InputError(std::string(what) + ": need at least one member");
}

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw InputError(std::string(what) + ": non-finite input");
  }
}

}  // namespace

void WeightingSpec::validate() const {
  if (rule == WeightRule::temperature && !(tau > 0.0 && std::isfinite(tau))) {
    throw InputError("temperature weighting needs tau > 0");
  }
}

std::string to_string(WeightRule rule) {
  switch (rule) {
    case WeightRule::equal: return "equal";
    case WeightRule::inverse_loss: return "inverse_loss";
    case WeightRule::likelihood: return "likelihood";
    case WeightRule::temperature: return "temperature";
  }
  return "unknown";
}

std::string to_string(LossSource source) { return source == LossSource::train ? "train" : "validation"; }

WeightRule parse_weight_rule(const std::string& s) {
  if (s == "equal") return WeightRule::equal;
  if (s == "inverse_loss") return WeightRule::inverse_loss;
  if (s == "likelihood") return WeightRule::likelihood;
  if (s == "temperature") return WeightRule::temperature;
  throw InputError("unknown weighting rule '" + s + "'");
}

LossSource parse_loss_source(const std::string& s) {
  if (s == "train") return LossSource::train;
  if (s == "validation" || s == "val") return LossSource::validation;
  throw InputError("unknown likelihood source '" + s + "'");
}

std::vector<double> weights_equal(std::size_t n) {
  require_nonempty(n, "weights_equal");
  return std::vector<double>(n, 1.0);
}

std::vector<double> weights_inverse_loss(std::span<const double> losses) {
  require_nonempty(losses.size(), "weights_inverse_loss");
  require_finite(losses, "weights_inverse_loss");
  std::vector<double> raw;
  raw.reserve(losses.size());
  for (double l : losses) {
    if (!(l > 0.0)) throw InputError("weights_inverse_loss: losses must be > 0");
    raw.push_back(1.0 / l);
  }
  return normalize_to_count(std::move(raw));
}

std::vector<double> weights_likelihood(std::span<const double> log_liks) {
  return weights_temperature(log_liks, 1.0);
}

std::vector<double> weights_temperature(std::span<const double> log_liks, double tau) {
  require_nonempty(log_liks.size(), "weights_temperature");
  require_finite(log_liks, "weights_temperature");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InputError("weights_temperature: tau must be > 0");
  const double best = *std::max_element(log_liks.begin(), log_liks.end());
  std::vector<double> raw;
  raw.reserve(log_liks.size());
  for (double l : log_liks) {
    raw.push_back(std::max(std::exp((l - best) / tau), std::numeric_limits<double>::min()));
  }
  return normalize_to_count(std::move(raw));
}

std::vector<double> EnsembleModel::weights() const {
  std::vector<double> w;
  w.reserve(members.size());
  for (const auto& m : members) w.push_back(m.weight);
  return w;
}

EnsembleModel build_ensemble(std::span<const Snapshot> snapshots, const WeightingSpec& spec) {
  require_nonempty(snapshots.size(), "build_ensemble");
  spec.validate();
  std::vector<double> losses;
  losses.reserve(snapshots.size());
  for (const Snapshot& s : snapshots) {
    losses.push_back(spec.source == LossSource::train ? s.train_nll : s.val_nll);
  }
  std::vector<double> log_liks(losses.size());
  std::transform(losses.begin(), losses.end(), log_liks.begin(), [](double l) { return -l; });

  std::vector<double> w;
  switch (spec.rule) {
    case WeightRule::equal: w = weights_equal(snapshots.size()); break;
    case WeightRule::inverse_loss: w = weights_inverse_loss(losses); break;
    case WeightRule::likelihood: w = weights_likelihood(log_liks); break;
    case WeightRule::temperature: w = weights_temperature(log_liks, spec.tau); break;
  }

  EnsembleModel ens;
  ens.members.reserve(snapshots.size());
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    if (snapshots[i].params.arch != snapshots.front().params.arch) {
      throw InputError("build_ensemble: members have different architectures");
    }
    ens.members.push_back({snapshots[i], w[i]});
  }
  return ens;
}

std::vector<double> ensemble_predict(const EnsembleModel& ens, std::span<const double> x) {
  require_nonempty(ens.size(), "ensemble_predict");
  std::vector<double> out;
  for (const auto& m : ens.members) {
    const std::vector<double> p = forward(m.snapshot.params, x);
    if (out.empty()) out.assign(p.size(), 0.0);
    for (std::size_t c = 0; c < p.size(); ++c) out[c] += m.weight * p[c];
  }
  const double inv_n = 1.0 / static_cast<double>(ens.size());
  for (double& v : out) v *= inv_n;
  return out;
}

ParamVector swa_average(std::span<const Snapshot> snapshots, std::span<const double> weights) {
  require_nonempty(snapshots.size(), "swa_average");
  if (weights.size() != snapshots.size()) throw InputError("swa_average: one weight per snapshot required");
  const ParamVector& first = snapshots.front().params;
  for (const Snapshot& s : snapshots) {
    if (s.params.arch != first.arch || s.params.values.size() != first.values.size()) {
      throw InputError("swa_average: snapshots have different architectures");
    }
  }
  // theta_0 + (1/N) sum_k w_k (theta_k - theta_0), which equals the weighted
  // mean when the weights sum to N and returns theta_0 exactly when all
  // members coincide.
  const double inv_n = 1.0 / static_cast<double>(snapshots.size());
  ParamVector out = first;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < snapshots.size(); ++k) {
      acc += weights[k] * (snapshots[k].params.values[i] - first.values[i]);
    }
    out.values[i] += acc * inv_n;
  }
  return out;
}

std::size_t argmax(std::span<const double> probs) {
  return static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

Metrics evaluate(const PredictFn& predict, const Dataset& data) {
  if (data.size() == 0) throw InputError("evaluate: dataset is empty");
  Metrics m;
  detail::CompensatedSum nll;
  for (std::size_t j = 0; j < data.size(); ++j) {
    const std::vector<double> p = predict(data.row(j));
    const std::uint32_t y = data.labels[j];
    if (y >= p.size()) throw InputError("evaluate: label outside the predictor's class range");
    if (argmax(p) == y) ++m.correct;
    nll.add(-std::log(std::max(p[y], kProbabilityFloor)));
  }
  m.count = data.size();
  m.accuracy = static_cast<double>(m.correct) / static_cast<double>(m.count);
  m.mean_nll = nll.value() / static_cast<double>(m.count);
  return m;
}

PredictFn predictor(const ParamVector& params) {
  auto p = std::make_shared<const ParamVector>(params);
  return [p](std::span<const double> x) { return forward(*p, x); };
}

PredictFn predictor(const EnsembleModel& ens) {
  auto e = std::make_shared<const EnsembleModel>(ens);
  return [e](std::span<const double> x) { return ensemble_predict(*e, x); };
}

}  // namespace snapstack

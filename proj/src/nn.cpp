#include "snapstack/nn.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "snapstack/errors.hpp"
#include "summation.hpp"

namespace snapstack {

namespace {

// Per-layer activations for one example; acts[0] is the input.
struct Activations {
  std::vector<std::vector<double>> acts;

  explicit Activations(const MlpArchitecture& arch) {
    acts.reserve(arch.layer_sizes.size());
    for (std::size_t n : arch.layer_sizes) acts.emplace_back(n, 0.0);
  }
};

void softmax_inplace(std::vector<double>& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double& v : z) {
    v = std::exp(v - mx);
    total += v;
  }
  for (double& v : z) v /= total;
}

// Fills ws.acts; the last entry holds the softmax probabilities.
void forward_into(const ParamVector& params, std::span<const double> x, Activations& ws) {
  const auto& sizes = params.arch.layer_sizes;
  std::copy(x.begin(), x.end(), ws.acts[0].begin());
  const double* p = params.values.data();
  const std::size_t layers = sizes.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = sizes[l];
    const std::size_t out = sizes[l + 1];
    const double* w = p;
    const double* b = p + in * out;
    const std::vector<double>& a = ws.acts[l];
    std::vector<double>& z = ws.acts[l + 1];
    for (std::size_t o = 0; o < out; ++o) {
      const double* wr = w + o * in;
      double acc = b[o];
      for (std::size_t i = 0; i < in; ++i) acc += wr[i] * a[i];
      z[o] = acc;
    }
    if (l + 1 < layers) {
      for (double& v : z) v = v > 0.0 ? v : 0.0;
    } else {
      softmax_inplace(z);
    }
    p += in * out + out;
  }
}

void check_input(const ParamVector& params, std::size_t dim) {
  if (params.values.size() != params.arch.param_count()) {
    throw InputError("parameter vector length " + std::to_string(params.values.size()) +
                     " does not match architecture (" +
                     std::to_string(params.arch.param_count()) + ")");
  }
  if (dim != params.arch.input_dim()) {
    throw InputError("input dimension " + std::to_string(dim) + " does not match architecture input " +
                     std::to_string(params.arch.input_dim()));
  }
}

void check_data(const ParamVector& params, const Dataset& data) {
  if (data.size() == 0) throw InputError("dataset is empty");
  check_input(params, data.dim);
  if (data.num_classes != params.arch.num_classes()) {
    throw InputError("dataset has " + std::to_string(data.num_classes) + " classes, architecture outputs " +
                     std::to_string(params.arch.num_classes()));
  }
}

double true_class_nll(const std::vector<double>& probs, std::uint32_t label) {
  return -std::log(std::max(probs[label], kProbabilityFloor));
}

}  // namespace

std::size_t MlpArchitecture::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    n += layer_sizes[l] * layer_sizes[l + 1] + layer_sizes[l + 1];
  }
  return n;
}

void MlpArchitecture::validate() const {
  if (layer_sizes.size() < 2) throw InputError("architecture needs at least input and output layers");
  for (std::size_t n : layer_sizes) {
    if (n == 0) throw InputError("architecture layer sizes must be >= 1");
  }
}

void ParamVector::validate() const {
  arch.validate();
  if (values.size() != arch.param_count()) {
    throw InputError("parameter vector length " + std::to_string(values.size()) +
                     " does not match architecture (" + std::to_string(arch.param_count()) + ")");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw InputError("parameter vector contains a non-finite value");
  }
}

void Dataset::validate() const {
  if (labels.empty()) throw InputError("dataset is empty");
  if (dim == 0) throw InputError("dataset feature dimension is zero");
  if (features.size() != labels.size() * dim) {
    throw InputError("feature matrix has " + std::to_string(features.size()) + " entries, expected " +
                     std::to_string(labels.size() * dim));
  }
  if (num_classes == 0) throw InputError("dataset has zero classes");
  for (std::uint32_t y : labels) {
    if (y >= num_classes) throw InputError("label " + std::to_string(y) + " out of range");
  }
  for (double v : features) {
    if (!std::isfinite(v)) throw InputError("dataset contains a non-finite feature");
  }
}

std::vector<double> forward(const ParamVector& params, std::span<const double> x) {
  check_input(params, x.size());
  Activations ws(params.arch);
  forward_into(params, x, ws);
  return ws.acts.back();
}

double nll_loss(const ParamVector& params, const Dataset& data) {
  check_data(params, data);
  // Every row shares one parameter vector. Widening layers are transposed
  // once up front so their inner loop runs over contiguous outputs and
  // vectorizes; narrowing layers keep the row-major dot product.
  const auto& sizes = params.arch.layer_sizes;
  const std::size_t layers = sizes.size() - 1;
  std::vector<std::vector<double>> wt(layers);
  std::vector<const double*> weights(layers), bias(layers);
  const double* p = params.values.data();
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = sizes[l], out = sizes[l + 1];
    weights[l] = p;
    if (out >= in) {
      wt[l].resize(in * out);
      for (std::size_t o = 0; o < out; ++o) {
        for (std::size_t i = 0; i < in; ++i) wt[l][i * out + o] = p[o * in + i];
      }
      weights[l] = wt[l].data();
    }
    bias[l] = p + in * out;
    p += in * out + out;
  }

  Activations ws(params.arch);
  detail::CompensatedSum total;
  for (std::size_t j = 0; j < data.size(); ++j) {
    const auto x = data.row(j);
    std::copy(x.begin(), x.end(), ws.acts[0].begin());
    for (std::size_t l = 0; l < layers; ++l) {
      const std::size_t in = sizes[l], out = sizes[l + 1];
      const double* __restrict a = ws.acts[l].data();
      double* __restrict z = ws.acts[l + 1].data();
      const double* __restrict w = weights[l];
      if (out >= in) {
        std::copy(bias[l], bias[l] + out, z);
        for (std::size_t i = 0; i < in; ++i) {
          const double ai = a[i];
          const double* __restrict wc = w + i * out;
          for (std::size_t o = 0; o < out; ++o) z[o] += wc[o] * ai;
        }
      } else {
        for (std::size_t o = 0; o < out; ++o) {
          const double* __restrict wr = w + o * in;
          double acc = bias[l][o];
          for (std::size_t i = 0; i < in; ++i) acc += wr[i] * a[i];
          z[o] = acc;
        }
      }
      if (l + 1 < layers) {
        for (std::size_t o = 0; o < out; ++o) z[o] = z[o] > 0.0 ? z[o] : 0.0;
      } else {
        softmax_inplace(ws.acts[l + 1]);
      }
    }
    total.add(true_class_nll(ws.acts.back(), data.labels[j]));
  }
  return total.value() / static_cast<double>(data.size());
}

ParamVector backward(const ParamVector& params, const Dataset& batch, double* loss) {
  check_data(params, batch);
  const auto& sizes = params.arch.layer_sizes;
  const std::size_t layers = sizes.size() - 1;

  // Offsets of each layer's weight block in the flat vector.
  std::vector<std::size_t> offset(layers);
  for (std::size_t l = 0, off = 0; l < layers; ++l) {
    offset[l] = off;
    off += sizes[l] * sizes[l + 1] + sizes[l + 1];
  }

  ParamVector grad{std::vector<double>(params.values.size(), 0.0), params.arch};
  Activations ws(params.arch);
  std::vector<std::vector<double>> delta;
  delta.reserve(sizes.size());
  for (std::size_t n : sizes) delta.emplace_back(n, 0.0);

  detail::CompensatedSum total;
  for (std::size_t j = 0; j < batch.size(); ++j) {
    forward_into(params, batch.row(j), ws);
    const std::uint32_t y = batch.labels[j];
    if (loss != nullptr) total.add(true_class_nll(ws.acts.back(), y));

    delta[layers] = ws.acts[layers];
    delta[layers][y] -= 1.0;

    for (std::size_t l = layers; l-- > 0;) {
      const std::size_t in = sizes[l];
      const std::size_t out = sizes[l + 1];
      const double* w = params.values.data() + offset[l];
      double* gw = grad.values.data() + offset[l];
      double* gb = gw + in * out;
      const std::vector<double>& a = ws.acts[l];
      const std::vector<double>& d = delta[l + 1];
      for (std::size_t o = 0; o < out; ++o) {
        const double dv = d[o];
        if (dv == 0.0) continue;
        double* gr = gw + o * in;
        for (std::size_t i = 0; i < in; ++i) gr[i] += dv * a[i];
        gb[o] += dv;
      }
      if (l == 0) break;
      std::vector<double>& dprev = delta[l];
      std::fill(dprev.begin(), dprev.end(), 0.0);
      for (std::size_t o = 0; o < out; ++o) {
        const double dv = d[o];
        if (dv == 0.0) continue;
        const double* wr = w + o * in;
        for (std::size_t i = 0; i < in; ++i) dprev[i] += wr[i] * dv;
      }
      // ReLU derivative: zero where the activation was clipped.
      for (std::size_t i = 0; i < in; ++i) {
        if (a[i] <= 0.0) dprev[i] = 0.0;
      }
    }
  }

  const double inv_m = 1.0 / static_cast<double>(batch.size());
  for (double& g : grad.values) g *= inv_m;
  if (loss != nullptr) *loss = total.value() * inv_m;
  return grad;
}

void sgd_step_inplace(ParamVector& params, const ParamVector& gradient, double lr) {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw InputError("learning rate must be positive and finite");
  if (gradient.values.size() != params.values.size() || gradient.arch != params.arch) {
    throw InputError("gradient shape does not match parameters");
  }
  bool finite = true;
  for (std::size_t i = 0; i < params.values.size(); ++i) {
    params.values[i] -= lr * gradient.values[i];
    finite = finite && std::isfinite(params.values[i]);
  }
  if (!finite) throw TrainingError(0, "SGD step produced a non-finite parameter");
}

ParamVector sgd_step(const ParamVector& params, const ParamVector& gradient, double lr) {
  ParamVector out = params;
  sgd_step_inplace(out, gradient, lr);
  return out;
}

ParamVector init_params(const MlpArchitecture& arch, std::uint64_t seed) {
  arch.validate();
  ParamVector params{std::vector<double>(arch.param_count(), 0.0), arch};
  std::mt19937_64 rng(seed);
  double* p = params.values.data();
  for (std::size_t l = 0; l < arch.num_layers(); ++l) {
    const std::size_t in = arch.layer_sizes[l];
    const std::size_t out = arch.layer_sizes[l + 1];
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(in)));
    for (std::size_t i = 0; i < in * out; ++i) p[i] = dist(rng);
    p += in * out + out;  // biases stay zero
  }
  return params;
}

}  // namespace snapstack

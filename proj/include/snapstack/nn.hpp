#pragma once

// Minimal feedforward classifier: dense layers with ReLU hidden activations,
// softmax output, mean negative log-likelihood loss and plain SGD.
//
// Parameters are stored as one flat vector. For every layer l with fan-in
// `in` and fan-out `out` the layout is the row-major weight matrix W_l
// (out x in) followed by the bias b_l (out).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace snapstack {

enum class Activation : std::uint8_t { relu = 0 };

struct MlpArchitecture {
  // input dim, hidden dims..., number of classes
  std::vector<std::size_t> layer_sizes;
  Activation hidden_activation = Activation::relu;

  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t num_classes() const { return layer_sizes.back(); }
  std::size_t num_layers() const { return layer_sizes.size() - 1; }
  std::size_t param_count() const;

  // Throws InputError on fewer than two sizes or a zero size.
  void validate() const;

  friend bool operator==(const MlpArchitecture&, const MlpArchitecture&) = default;
};

struct ParamVector {
  std::vector<double> values;
  MlpArchitecture arch;

  std::size_t size() const { return values.size(); }

  // Length matches the architecture and every entry is finite.
  void validate() const;

  friend bool operator==(const ParamVector&, const ParamVector&) = default;
};

// Row-major feature matrix with one class label per row.
struct Dataset {
  std::vector<double> features;
  std::vector<std::uint32_t> labels;
  std::size_t dim = 0;
  std::size_t num_classes = 0;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * dim, dim};
  }

  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Floor applied to the true-class probability before taking the log.
inline constexpr double kProbabilityFloor = 1e-300;

std::vector<double> forward(const ParamVector& params, std::span<const double> x);

// Mean over examples of -log p(y | x).
double nll_loss(const ParamVector& params, const Dataset& data);

// Gradient of the mean NLL over `batch`. When `loss` is non-null it receives
// the batch mean NLL computed on the same forward pass.
ParamVector backward(const ParamVector& params, const Dataset& batch, double* loss = nullptr);

// params - lr * gradient. Throws TrainingError(0, ...) on a non-finite result;
// callers that know the iteration rethrow with it.
ParamVector sgd_step(const ParamVector& params, const ParamVector& gradient, double lr);

// In-place form used by the training loop.
void sgd_step_inplace(ParamVector& params, const ParamVector& gradient, double lr);

// He-style init: weights ~ N(0, 2 / fan_in), biases zero.
ParamVector init_params(const MlpArchitecture& arch, std::uint64_t seed);

}  // namespace snapstack

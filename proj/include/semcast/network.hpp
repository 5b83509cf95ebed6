#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semcast/matrix.hpp"
#include "semcast/param_vector.hpp"

namespace semcast {

enum class Activation { linear, relu, sigmoid, tanh, softmax };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

struct LayerSpec {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::linear;
};

// Feed-forward stack of biased dense layers.
class NetworkSpec {
 public:
  NetworkSpec() = default;
  // Throws DimensionError if adjacent dims disagree or softmax is not last.
  explicit NetworkSpec(std::vector<LayerSpec> layers);

  const std::vector<LayerSpec>& layers() const { return layers_; }
  std::size_t depth() const { return layers_.size(); }
  std::size_t input_dim() const { return layers_.front().in; }
  std::size_t output_dim() const { return layers_.back().out; }
  std::size_t parameter_count() const { return layout_size(layout()); }
  std::vector<LayerShape> layout() const;

 private:
  std::vector<LayerSpec> layers_;
};

// Post-activation outputs of every layer for one batch; activations[0] is the
// input, activations.back() the network output.
struct ForwardCache {
  std::vector<Matrix> activations;
  std::uint64_t fingerprint = 0;

  const Matrix& output() const { return activations.back(); }
  const Matrix& layer_output(std::size_t layer) const { return activations.at(layer + 1); }
};

ForwardCache forward(const NetworkSpec& spec, const ParamVector& params, const Matrix& input);
std::vector<double> forward(const NetworkSpec& spec, const ParamVector& params, std::span<const double> input);

struct BackwardResult {
  GradVector grad;
  Matrix input_grad;  // empty unless requested
};

// Reverse pass for a loss whose gradient w.r.t. the network output is
// `upstream`. Throws StaleCacheError if `cache` was not produced by
// forward(spec, params, ...).
BackwardResult backward(const NetworkSpec& spec, const ParamVector& params, const ForwardCache& cache,
                        const Matrix& upstream, bool want_input_grad = true);

// p' = p - lr * g. Throws NonFiniteError (carrying `step`) on non-finite
// gradients.
ParamVector sgd_step(const ParamVector& params, const GradVector& grads, double lr, std::size_t step = 0);

// Weights ~ U(-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))), biases 0.
ParamVector glorot_init(const NetworkSpec& spec, std::uint64_t seed);

// Central differences (f(p+h e_i) - f(p-h e_i)) / 2h for every coordinate.
GradVector finite_diff_grad(const std::function<double(const ParamVector&)>& loss, const ParamVector& params,
                            double step);

}  // namespace semcast

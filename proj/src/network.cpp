#include "semcast/network.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>

#include "semcast/error.hpp"
#include "semcast/kernels.hpp"
#include "semcast/rng.hpp"

namespace semcast {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::softmax: return "softmax";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  for (auto a : {Activation::linear, Activation::relu, Activation::sigmoid, Activation::tanh, Activation::softmax}) {
    if (to_string(a) == name) return a;
  }
  throw Error("unknown activation '" + std::string(name) + "'");
}

NetworkSpec::NetworkSpec(std::vector<LayerSpec> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw DimensionError("network needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& s = layers_[l];
    if (s.in == 0 || s.out == 0) throw DimensionError("layer " + std::to_string(l) + " has a zero dimension");
    if (l > 0 && layers_[l - 1].out != s.in) {
      throw DimensionError("layer " + std::to_string(l) + " expects " + std::to_string(s.in) +
                           " inputs but layer " + std::to_string(l - 1) + " produces " +
                           std::to_string(layers_[l - 1].out));
    }
    if (s.activation == Activation::softmax && l + 1 != layers_.size()) {
      throw DimensionError("softmax is only allowed on the final layer (found on layer " + std::to_string(l) + ")");
    }
  }
}

std::vector<LayerShape> NetworkSpec::layout() const {
  std::vector<LayerShape> out;
  out.reserve(layers_.size());
  for (const auto& s : layers_) {
    out.push_back({static_cast<std::uint32_t>(s.out), static_cast<std::uint32_t>(s.in), true});
  }
  return out;
}

namespace {

// Cheap identity of (spec, params): layout plus a strided sample of values.
std::uint64_t fingerprint(const NetworkSpec& spec, const ParamVector& params) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  };
  for (const auto& l : spec.layers()) {
    mix(l.in);
    mix(l.out);
    mix(static_cast<std::uint64_t>(l.activation));
  }
  const auto values = params.values();
  const std::size_t stride = std::max<std::size_t>(1, values.size() / 1024);
  for (std::size_t i = 0; i < values.size(); i += stride) mix(std::bit_cast<std::uint64_t>(values[i]));
  if (!values.empty()) mix(std::bit_cast<std::uint64_t>(values.back()));
  return h;
}

void check_params(const NetworkSpec& spec, const ParamVector& params) {
  if (params.layout() != spec.layout()) {
    throw DimensionError("parameter layout does not match network spec (" + std::to_string(params.size()) +
                         " values vs " + std::to_string(spec.parameter_count()) + " expected)");
  }
}

void apply_activation(Activation act, Matrix& z) {
  switch (act) {
    case Activation::linear: return;
    case Activation::relu:
      for (auto& v : z.storage()) v = v > 0.0 ? v : 0.0;
      return;
    case Activation::sigmoid:
      for (auto& v : z.storage()) v = 1.0 / (1.0 + std::exp(-v));
      return;
    case Activation::tanh:
      for (auto& v : z.storage()) v = std::tanh(v);
      return;
    case Activation::softmax:
      for (std::size_t r = 0; r < z.rows(); ++r) {
        auto row = z.row(r);
        const double mx = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (auto& v : row) {
          v = std::exp(v - mx);
          sum += v;
        }
        for (auto& v : row) v /= sum;
      }
      return;
  }
}

// In place: delta <- delta * act'(z), expressed through the activation output a.
void activation_backward(Activation act, const Matrix& a, Matrix& delta) {
  auto& d = delta.storage();
  const auto& y = a.storage();
  switch (act) {
    case Activation::linear: return;
    case Activation::relu:
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = y[i] > 0.0 ? d[i] : 0.0;
      return;
    case Activation::sigmoid:
      for (std::size_t i = 0; i < d.size(); ++i) d[i] *= y[i] * (1.0 - y[i]);
      return;
    case Activation::tanh:
      for (std::size_t i = 0; i < d.size(); ++i) d[i] *= 1.0 - y[i] * y[i];
      return;
    case Activation::softmax:
      for (std::size_t r = 0; r < delta.rows(); ++r) {
        auto g = delta.row(r);
        auto p = a.row(r);
        double dot = 0.0;
        for (std::size_t c = 0; c < g.size(); ++c) dot += g[c] * p[c];
        for (std::size_t c = 0; c < g.size(); ++c) g[c] = p[c] * (g[c] - dot);
      }
      return;
  }
}

}  // namespace

ForwardCache forward(const NetworkSpec& spec, const ParamVector& params, const Matrix& input) {
  check_params(spec, params);
  if (input.cols() != spec.input_dim()) {
    throw DimensionError("layer 0 expects " + std::to_string(spec.input_dim()) + " inputs, got " +
                         std::to_string(input.cols()));
  }
  ForwardCache cache;
  cache.activations.reserve(spec.depth() + 1);
  cache.activations.push_back(input);
  for (std::size_t l = 0; l < spec.depth(); ++l) {
    const auto& layer = spec.layers()[l];
    Matrix z(input.rows(), layer.out);
    kernels::parallel::dense_forward(cache.activations.back().view(), params.weight(l), params.bias(l), z.view());
    apply_activation(layer.activation, z);
    cache.activations.push_back(std::move(z));
  }
  cache.fingerprint = fingerprint(spec, params);
  return cache;
}

std::vector<double> forward(const NetworkSpec& spec, const ParamVector& params, std::span<const double> input) {
  Matrix x(1, input.size());
  std::copy(input.begin(), input.end(), x.data());
  return forward(spec, params, x).output().storage();
}

BackwardResult backward(const NetworkSpec& spec, const ParamVector& params, const ForwardCache& cache,
                        const Matrix& upstream, bool want_input_grad) {
  check_params(spec, params);
  if (cache.activations.size() != spec.depth() + 1) {
    throw StaleCacheError("forward cache missing or built for a different network");
  }
  if (cache.fingerprint != fingerprint(spec, params)) {
    throw StaleCacheError("forward cache is stale: parameters changed since forward()");
  }
  const std::size_t batch = cache.activations.front().rows();
  if (upstream.rows() != batch || upstream.cols() != spec.output_dim()) {
    throw DimensionError("upstream gradient has shape " + std::to_string(upstream.rows()) + "x" +
                         std::to_string(upstream.cols()) + ", expected " + std::to_string(batch) + "x" +
                         std::to_string(spec.output_dim()));
  }

  BackwardResult result{zeros_like(params), {}};
  Matrix delta = upstream;
  for (std::size_t l = spec.depth(); l-- > 0;) {
    const auto& layer = spec.layers()[l];
    activation_backward(layer.activation, cache.activations[l + 1], delta);
    kernels::parallel::dense_grad_params(cache.activations[l].view(), delta.view(), result.grad.weight(l),
                                         result.grad.bias(l));
    if (l > 0 || want_input_grad) {
      Matrix prev(batch, layer.in);
      kernels::parallel::dense_grad_input(delta.view(), params.weight(l), prev.view());
      delta = std::move(prev);
    }
  }
  if (want_input_grad) result.input_grad = std::move(delta);
  return result;
}

ParamVector sgd_step(const ParamVector& params, const GradVector& grads, double lr, std::size_t step) {
  if (grads.layout() != params.layout()) throw DimensionError("gradient layout does not match parameters");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw Error("learning rate must be finite and non-negative");
  ParamVector out = params;
  auto p = out.values();
  auto g = grads.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!std::isfinite(g[i])) {
      throw NonFiniteError("non-finite gradient at index " + std::to_string(i) + " (step " + std::to_string(step) + ")",
                           step);
    }
    p[i] -= lr * g[i];
  }
  return out;
}

ParamVector glorot_init(const NetworkSpec& spec, std::uint64_t seed) {
  ParamVector params(spec.layout());
  Rng rng = derive_stream(seed, {tag(StreamPurpose::init)});
  for (std::size_t l = 0; l < spec.depth(); ++l) {
    const auto& s = spec.layers()[l];
    const double bound = std::sqrt(6.0 / static_cast<double>(s.in + s.out));
    std::uniform_real_distribution<double> u(-bound, bound);
    auto w = params.weight(l);
    for (std::size_t i = 0; i < w.rows * w.cols; ++i) w.data[i] = u(rng);
  }
  return params;
}

GradVector finite_diff_grad(const std::function<double(const ParamVector&)>& loss, const ParamVector& params,
                            double step) {
  GradVector grad = zeros_like(params);
  ParamVector probe = params;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + step;
    const double up = loss(probe);
    probe[i] = orig - step;
    const double down = loss(probe);
    probe[i] = orig;
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

}  // namespace semcast

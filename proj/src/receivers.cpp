#include "semcast/receivers.hpp"

#include <cmath>
#include <string>

#include "semcast/error.hpp"

namespace semcast {

void ReceiverSpec::validate(std::size_t bits, const ImageDims& dims, std::size_t classes) const {
  channel.validate();
  if (net.depth() == 0) throw DimensionError("receiver has no network");
  if (net.input_dim() != bits)
    throw DimensionError("decoder input " + std::to_string(net.input_dim()) + " != B = " + std::to_string(bits));
  const auto head = net.layers().back().activation;
  if (task == TaskKind::reconstruction && (net.output_dim() != dims.size() || head != Activation::sigmoid))
    throw DimensionError("reconstruction decoder must end in a sigmoid layer of width C*H*W");
  if (task == TaskKind::classification && (net.output_dim() != classes || head != Activation::softmax))
    throw DimensionError("classification decoder must end in a softmax layer of width " + std::to_string(classes));
}

NetworkSpec default_decoder_net(TaskKind task, std::size_t bits, const ImageDims& dims, std::size_t classes,
                                std::size_t hidden) {
  if (task == TaskKind::reconstruction) {
    if (hidden == 0) hidden = 256;
    return NetworkSpec({{bits, hidden, Activation::relu}, {hidden, dims.size(), Activation::sigmoid}});
  }
  if (hidden == 0) hidden = 32;
  return NetworkSpec({{bits, hidden, Activation::relu}, {hidden, classes, Activation::softmax}});
}

Matrix decode(const Matrix& received, const ReceiverSpec& spec, const ParamVector& phi) {
  if (received.cols() != spec.net.input_dim())
    throw DimensionError("received length " + std::to_string(received.cols()) + " != decoder input " +
                         std::to_string(spec.net.input_dim()));
  return forward(spec.net, phi, received).output();
}

TaskLoss task_loss(TaskKind task, const Batch& targets, const Matrix& output) {
  if (task == TaskKind::reconstruction)
    return {mse_loss(targets.images.view(), output.view()), mse_grad(targets.images.view(), output.view())};
  const Matrix p = targets.one_hot(output.cols());
  return {ce_loss(p.view(), output.view()), ce_grad(p.view(), output.view())};
}

std::vector<double> task_metrics(TaskKind task, const Batch& targets, const Matrix& output, ClassReward reward) {
  std::vector<double> m(output.rows());
  for (std::size_t t = 0; t < output.rows(); ++t)
    m[t] = task_metric(task, {targets.images.row(t), targets.labels[t]}, output.row(t), reward);
  return m;
}

double decoder_step(const ReceiverSpec& spec, ParamVector& phi, const ReceivedBatch& batch, double lr,
                    std::size_t step) {
  const auto cache = forward(spec.net, phi, batch.received);
  const auto loss = task_loss(spec.task, batch.targets, cache.output());
  if (!std::isfinite(loss.value))
    throw NonFiniteError("decoder loss is not finite at local step " + std::to_string(step), step);
  const auto grads = backward(spec.net, phi, cache, loss.grad, false);
  phi = sgd_step(phi, grads.grad, lr, step);
  return loss.value;
}

ParamVector local_update(const ReceiverSpec& spec, ParamVector phi, const ReceiverSampler& sampler,
                         std::size_t kappa, double lr, Rng& rng) {
  for (std::size_t k = 0; k < kappa; ++k) decoder_step(spec, phi, sampler(k, rng), lr, k);
  return phi;
}

}  // namespace semcast

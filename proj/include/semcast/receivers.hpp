#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "semcast/channel.hpp"
#include "semcast/data.hpp"
#include "semcast/metrics.hpp"
#include "semcast/network.hpp"

namespace semcast {

struct ReceiverSpec {
  TaskKind task = TaskKind::reconstruction;
  NetworkSpec net;
  ChannelConfig channel;

  // Throws DimensionError unless the net maps `bits` inputs to an output that
  // fits the task (sigmoid image head or softmax class head).
  void validate(std::size_t bits, const ImageDims& dims, std::size_t classes) const;
};

// Reconstruction: bits -> hidden relu -> C*H*W sigmoid.
// Classification: bits -> hidden relu -> classes softmax.
NetworkSpec default_decoder_net(TaskKind task, std::size_t bits, const ImageDims& dims, std::size_t classes,
                                std::size_t hidden = 0);

// Received signals (T x B) -> task output (T x C*H*W or T x classes).
Matrix decode(const Matrix& received, const ReceiverSpec& spec, const ParamVector& phi);

struct TaskLoss {
  double value = 0.0;
  Matrix grad;  // d value / d output
};

// MSE against the images or CE against one-hot labels.
TaskLoss task_loss(TaskKind task, const Batch& targets, const Matrix& output);

// Per-sample metric for every row of `output`.
std::vector<double> task_metrics(TaskKind task, const Batch& targets, const Matrix& output,
                                 ClassReward reward = ClassReward::probability);

struct ReceivedBatch {
  Matrix received;  // T x B
  Batch targets;
};

// Draws a fresh batch pushed through the frozen encoder and this receiver's
// channel. Must not touch encoder parameters.
using ReceiverSampler = std::function<ReceivedBatch(std::size_t step, Rng& rng)>;

// One SGD step of phi on `batch`; returns the pre-step loss.
double decoder_step(const ReceiverSpec& spec, ParamVector& phi, const ReceivedBatch& batch, double lr,
                    std::size_t step);

// kappa decoder_step calls, each on sampler(k, rng). Throws NonFiniteError
// carrying k when the loss is not finite.
ParamVector local_update(const ReceiverSpec& spec, ParamVector phi, const ReceiverSampler& sampler,
                         std::size_t kappa, double lr, Rng& rng);

}  // namespace semcast

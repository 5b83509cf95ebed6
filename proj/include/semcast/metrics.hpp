#pragma once

#include <span>

#include "semcast/data.hpp"
#include "semcast/matrix.hpp"

namespace semcast {

// Per-pixel mean squared error, averaged over the batch.
double mse_loss(ConstMatrixView target, ConstMatrixView output);
// d mse_loss / d output
Matrix mse_grad(ConstMatrixView target, ConstMatrixView output);

// -(1/T) sum_t sum_c p_tc log max(q_tc, 1e-12). Throws DimensionError if a
// row of q is not a distribution within 1e-6.
double ce_loss(ConstMatrixView p, ConstMatrixView q);
// d ce_loss / d q
Matrix ce_grad(ConstMatrixView p, ConstMatrixView q);

inline constexpr double kPsnrCap = 100.0;

// 10 log10(max_val^2 / mse); kPsnrCap when mse < 1e-12.
double psnr(std::span<const double> a, std::span<const double> b, double max_val = 1.0);

// Global-window SSIM with population moments, C1 = (0.01 L)^2, C2 = (0.03 L)^2,
// clamped to [0,1].
double ssim(std::span<const double> a, std::span<const double> b, double dynamic_range = 1.0);

enum class ClassReward { probability, indicator };

// Reconstruction: ssim(image, output). Classification: output[label], or
// 1{argmax output == label} with ClassReward::indicator.
double task_metric(TaskKind kind, const Sample& sample, std::span<const double> output,
                   ClassReward reward = ClassReward::probability);

std::size_t argmax(std::span<const double> v);

}  // namespace semcast

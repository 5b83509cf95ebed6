#include "semcast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "semcast/error.hpp"

namespace semcast {

namespace {

constexpr double kProbFloor = 1e-12;

void same_shape(ConstMatrixView a, ConstMatrixView b, const char* what) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw DimensionError(std::string(what) + ": shape " + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                         " vs " + std::to_string(b.rows) + "x" + std::to_string(b.cols));
}

void check_distribution(ConstMatrixView q) {
  for (std::size_t t = 0; t < q.rows; ++t) {
    double sum = 0.0;
    for (std::size_t c = 0; c < q.cols; ++c) {
      if (q(t, c) < -1e-6) throw DimensionError("ce_loss: negative probability in row " + std::to_string(t));
      sum += q(t, c);
    }
    if (std::abs(sum - 1.0) > 1e-6)
      throw DimensionError("ce_loss: row " + std::to_string(t) + " sums to " + std::to_string(sum));
  }
}

}  // namespace

double mse_loss(ConstMatrixView target, ConstMatrixView output) {
  same_shape(target, output, "mse_loss");
  double total = 0.0;
  for (std::size_t i = 0; i < target.rows * target.cols; ++i) {
    const double d = output.data[i] - target.data[i];
    total += d * d;
  }
  return total / static_cast<double>(target.rows * target.cols);
}

Matrix mse_grad(ConstMatrixView target, ConstMatrixView output) {
  same_shape(target, output, "mse_grad");
  Matrix g(target.rows, target.cols);
  const double scale = 2.0 / static_cast<double>(target.rows * target.cols);
  for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] = scale * (output.data[i] - target.data[i]);
  return g;
}

double ce_loss(ConstMatrixView p, ConstMatrixView q) {
  same_shape(p, q, "ce_loss");
  check_distribution(q);
  double total = 0.0;
  for (std::size_t i = 0; i < p.rows * p.cols; ++i)
    if (p.data[i] != 0.0) total -= p.data[i] * std::log(std::max(q.data[i], kProbFloor));
  return total / static_cast<double>(p.rows);
}

Matrix ce_grad(ConstMatrixView p, ConstMatrixView q) {
  same_shape(p, q, "ce_grad");
  Matrix g(p.rows, p.cols);
  const double inv_t = 1.0 / static_cast<double>(p.rows);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (p.data[i] != 0.0 && q.data[i] > kProbFloor) g.data()[i] = -inv_t * p.data[i] / q.data[i];
  return g;
}

double psnr(std::span<const double> a, std::span<const double> b, double max_val) {
  if (a.size() != b.size() || a.empty()) throw DimensionError("psnr: size mismatch");
  double mse = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mse += (a[i] - b[i]) * (a[i] - b[i]);
  mse /= static_cast<double>(a.size());
  if (mse < 1e-12) return kPsnrCap;
  return 10.0 * std::log10(max_val * max_val / mse);
}

double ssim(std::span<const double> a, std::span<const double> b, double dynamic_range) {
  if (a.size() != b.size() || a.empty()) throw DimensionError("ssim: size mismatch");
  const double n = static_cast<double>(a.size());
  double mu_a = 0.0, mu_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mu_a += a[i];
    mu_b += b[i];
  }
  mu_a /= n;
  mu_b /= n;
  double var_a = 0.0, var_b = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - mu_a, db = b[i] - mu_b;
    var_a += da * da;
    var_b += db * db;
    cov += da * db;
  }
  var_a /= n;
  var_b /= n;
  cov /= n;
  const double c1 = (0.01 * dynamic_range) * (0.01 * dynamic_range);
  const double c2 = (0.03 * dynamic_range) * (0.03 * dynamic_range);
  const double s = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
  return std::clamp(s, 0.0, 1.0);
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

double task_metric(TaskKind kind, const Sample& sample, std::span<const double> output, ClassReward reward) {
  switch (kind) {
    case TaskKind::reconstruction:
      return ssim(sample.image, output);
    case TaskKind::classification:
      if (sample.label >= output.size()) throw DimensionError("task_metric: label outside output range");
      if (reward == ClassReward::indicator) return argmax(output) == sample.label ? 1.0 : 0.0;
      return std::clamp(output[sample.label], 0.0, 1.0);
  }
  throw Error("task_metric: unknown task kind " + std::to_string(static_cast<int>(kind)));
}

}  // namespace semcast

#include "semcast/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <string>

namespace semcast::kernels {

namespace parallel {

namespace {

constexpr std::size_t kRowBlock = 4;
constexpr std::ptrdiff_t kBlock = 4;

// 4 batch rows x 4 output units; each of the 16 dot products accumulates in
// its own lane-parallel register.
inline void forward_tile(ConstMatrixView x, ConstMatrixView weight, const double* bias, MatrixView y,
                         std::size_t t, std::size_t o) {
  const std::size_t in = weight.cols;
  const double* x0 = x.row(t);
  const double* x1 = x.row(t + 1);
  const double* x2 = x.row(t + 2);
  const double* x3 = x.row(t + 3);
  const double* w0 = weight.row(o);
  const double* w1 = weight.row(o + 1);
  const double* w2 = weight.row(o + 2);
  const double* w3 = weight.row(o + 3);
  double s00 = 0, s01 = 0, s02 = 0, s03 = 0, s10 = 0, s11 = 0, s12 = 0, s13 = 0;
  double s20 = 0, s21 = 0, s22 = 0, s23 = 0, s30 = 0, s31 = 0, s32 = 0, s33 = 0;
#pragma omp simd reduction(+ : s00, s01, s02, s03, s10, s11, s12, s13, s20, s21, s22, s23, s30, s31, s32, s33)
  for (std::size_t i = 0; i < in; ++i) {
    const double a0 = x0[i], a1 = x1[i], a2 = x2[i], a3 = x3[i];
    const double b0 = w0[i], b1 = w1[i], b2 = w2[i], b3 = w3[i];
    s00 += a0 * b0; s01 += a0 * b1; s02 += a0 * b2; s03 += a0 * b3;
    s10 += a1 * b0; s11 += a1 * b1; s12 += a1 * b2; s13 += a1 * b3;
    s20 += a2 * b0; s21 += a2 * b1; s22 += a2 * b2; s23 += a2 * b3;
    s30 += a3 * b0; s31 += a3 * b1; s32 += a3 * b2; s33 += a3 * b3;
  }
  const double c0 = bias ? bias[o] : 0.0, c1 = bias ? bias[o + 1] : 0.0;
  const double c2 = bias ? bias[o + 2] : 0.0, c3 = bias ? bias[o + 3] : 0.0;
  double* y0 = y.row(t);
  double* y1 = y.row(t + 1);
  double* y2 = y.row(t + 2);
  double* y3 = y.row(t + 3);
  y0[o] = s00 + c0; y0[o + 1] = s01 + c1; y0[o + 2] = s02 + c2; y0[o + 3] = s03 + c3;
  y1[o] = s10 + c0; y1[o + 1] = s11 + c1; y1[o + 2] = s12 + c2; y1[o + 3] = s13 + c3;
  y2[o] = s20 + c0; y2[o + 1] = s21 + c1; y2[o + 2] = s22 + c2; y2[o + 3] = s23 + c3;
  y3[o] = s30 + c0; y3[o + 1] = s31 + c1; y3[o + 2] = s32 + c2; y3[o + 3] = s33 + c3;
}

inline void forward_single(ConstMatrixView x, ConstMatrixView weight, const double* bias, MatrixView y,
                           std::size_t t, std::size_t o) {
  const double* xr = x.row(t);
  const double* w = weight.row(o);
  double s = 0.0;
#pragma omp simd reduction(+ : s)
  for (std::size_t i = 0; i < weight.cols; ++i) s += xr[i] * w[i];
  y(t, o) = s + (bias ? bias[o] : 0.0);
}

}  // namespace

void dense_forward(ConstMatrixView x, ConstMatrixView weight, const double* bias, MatrixView y) {
  const std::size_t batch = x.rows;
  const std::size_t outputs = weight.rows;
  const std::size_t full_t = batch - batch % kRowBlock;
  const std::size_t full_o = outputs - outputs % kRowBlock;
  const auto o_blocks = static_cast<std::ptrdiff_t>((outputs + kRowBlock - 1) / kRowBlock);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ob = 0; ob < o_blocks; ++ob) {
    const std::size_t o0 = static_cast<std::size_t>(ob) * kRowBlock;
    if (o0 < full_o) {
      for (std::size_t t = 0; t < full_t; t += kRowBlock) forward_tile(x, weight, bias, y, t, o0);
      for (std::size_t t = full_t; t < batch; ++t)
        for (std::size_t o = o0; o < o0 + kRowBlock; ++o) forward_single(x, weight, bias, y, t, o);
    } else {
      for (std::size_t t = 0; t < batch; ++t)
        for (std::size_t o = o0; o < outputs; ++o) forward_single(x, weight, bias, y, t, o);
    }
  }
}

void dense_grad_input(ConstMatrixView dy, ConstMatrixView weight, MatrixView dx) {
  const auto batch = static_cast<std::ptrdiff_t>(dy.rows);
  const std::size_t outputs = weight.rows;
  const std::size_t in = weight.cols;
  const std::ptrdiff_t blocks = (batch + kBlock - 1) / kBlock;

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
    const std::ptrdiff_t t0 = blk * kBlock;
    const std::ptrdiff_t t1 = std::min(batch, t0 + kBlock);
    for (std::ptrdiff_t t = t0; t < t1; ++t) {
      double* d = dx.row(t);
      for (std::size_t i = 0; i < in; ++i) d[i] = 0.0;
    }
    if (t1 - t0 == kBlock) {
      double* d0 = dx.row(t0);
      double* d1 = dx.row(t0 + 1);
      double* d2 = dx.row(t0 + 2);
      double* d3 = dx.row(t0 + 3);
      for (std::size_t o = 0; o < outputs; ++o) {
        const double* w = weight.row(o);
        const double a0 = dy(t0, o), a1 = dy(t0 + 1, o), a2 = dy(t0 + 2, o), a3 = dy(t0 + 3, o);
#pragma omp simd
        for (std::size_t i = 0; i < in; ++i) {
          const double wi = w[i];
          d0[i] += a0 * wi;
          d1[i] += a1 * wi;
          d2[i] += a2 * wi;
          d3[i] += a3 * wi;
        }
      }
    } else {
      for (std::ptrdiff_t t = t0; t < t1; ++t) {
        double* d = dx.row(t);
        for (std::size_t o = 0; o < outputs; ++o) {
          const double* w = weight.row(o);
          const double a = dy(t, o);
#pragma omp simd
          for (std::size_t i = 0; i < in; ++i) d[i] += a * w[i];
        }
      }
    }
  }
}

void dense_grad_params(ConstMatrixView x, ConstMatrixView dy, MatrixView dweight, double* dbias) {
  const std::size_t batch = x.rows;
  const auto outputs = static_cast<std::ptrdiff_t>(dweight.rows);
  const std::size_t in = dweight.cols;
  const std::ptrdiff_t blocks = (outputs + kBlock - 1) / kBlock;

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
    const std::ptrdiff_t o0 = blk * kBlock;
    const std::ptrdiff_t o1 = std::min(outputs, o0 + kBlock);
    for (std::ptrdiff_t o = o0; o < o1; ++o) {
      double* g = dweight.row(o);
      for (std::size_t i = 0; i < in; ++i) g[i] = 0.0;
    }
    if (o1 - o0 == kBlock) {
      double* g0 = dweight.row(o0);
      double* g1 = dweight.row(o0 + 1);
      double* g2 = dweight.row(o0 + 2);
      double* g3 = dweight.row(o0 + 3);
      for (std::size_t t = 0; t < batch; ++t) {
        const double* xr = x.row(t);
        const double a0 = dy(t, o0), a1 = dy(t, o0 + 1), a2 = dy(t, o0 + 2), a3 = dy(t, o0 + 3);
#pragma omp simd
        for (std::size_t i = 0; i < in; ++i) {
          const double xi = xr[i];
          g0[i] += a0 * xi;
          g1[i] += a1 * xi;
          g2[i] += a2 * xi;
          g3[i] += a3 * xi;
        }
      }
    } else {
      for (std::ptrdiff_t o = o0; o < o1; ++o) {
        double* g = dweight.row(o);
        for (std::size_t t = 0; t < batch; ++t) {
          const double* xr = x.row(t);
          const double a = dy(t, o);
#pragma omp simd
          for (std::size_t i = 0; i < in; ++i) g[i] += a * xr[i];
        }
      }
    }
    if (dbias) {
      for (std::ptrdiff_t o = o0; o < o1; ++o) {
        double acc = 0.0;
        for (std::size_t t = 0; t < batch; ++t) acc += dy(t, o);
        dbias[o] = acc;
      }
    }
  }
}

}  // namespace parallel

void set_thread_count(int threads) {
  if (const char* env = std::getenv("SEMCAST_THREADS"); env && *env) {
    threads = std::stoi(env);
  }
  omp_set_num_threads(threads > 0 ? threads : 1);
}

int thread_count() { return omp_get_max_threads(); }

}  // namespace semcast::kernels

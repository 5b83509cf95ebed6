#include "semcast/kernels.hpp"

namespace semcast::kernels::reference {

void dense_forward(ConstMatrixView x, ConstMatrixView weight, const double* bias, MatrixView y) {
  for (std::size_t t = 0; t < x.rows; ++t) {
    for (std::size_t o = 0; o < weight.rows; ++o) {
      double acc = bias ? bias[o] : 0.0;
      for (std::size_t i = 0; i < weight.cols; ++i) acc += x(t, i) * weight(o, i);
      y(t, o) = acc;
    }
  }
}

void dense_grad_input(ConstMatrixView dy, ConstMatrixView weight, MatrixView dx) {
  for (std::size_t t = 0; t < dy.rows; ++t) {
    for (std::size_t i = 0; i < weight.cols; ++i) {
      double acc = 0.0;
      for (std::size_t o = 0; o < weight.rows; ++o) acc += dy(t, o) * weight(o, i);
      dx(t, i) = acc;
    }
  }
}

void dense_grad_params(ConstMatrixView x, ConstMatrixView dy, MatrixView dweight, double* dbias) {
  for (std::size_t o = 0; o < dweight.rows; ++o) {
    for (std::size_t i = 0; i < dweight.cols; ++i) {
      double acc = 0.0;
      for (std::size_t t = 0; t < x.rows; ++t) acc += dy(t, o) * x(t, i);
      dweight(o, i) = acc;
    }
    if (dbias) {
      double acc = 0.0;
      for (std::size_t t = 0; t < dy.rows; ++t) acc += dy(t, o);
      dbias[o] = acc;
    }
  }
}

}  // namespace semcast::kernels::reference

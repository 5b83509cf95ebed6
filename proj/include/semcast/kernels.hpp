#pragma once

#include "semcast/matrix.hpp"

// Dense-layer kernels. A layer with `in` inputs and `out` outputs stores its
// weight as an (out x in) row-major block; activations are (batch x features).
//
// `reference` is the plain serial triple loop, kept as the oracle for the
// blocked OpenMP kernels in `parallel`. The parallel kernels assign each
// output element to exactly one thread and accumulate in a fixed order, so
// their results do not depend on the thread count.
namespace semcast::kernels {

namespace reference {

// y = x * W^T + b   (bias may be null)
void dense_forward(ConstMatrixView x, ConstMatrixView weight, const double* bias, MatrixView y);

// dx = dy * W
void dense_grad_input(ConstMatrixView dy, ConstMatrixView weight, MatrixView dx);

// dW = dy^T * x ; db = column sums of dy   (dbias may be null)
void dense_grad_params(ConstMatrixView x, ConstMatrixView dy, MatrixView dweight, double* dbias);

}  // namespace reference

namespace parallel {

void dense_forward(ConstMatrixView x, ConstMatrixView weight, const double* bias, MatrixView y);
void dense_grad_input(ConstMatrixView dy, ConstMatrixView weight, MatrixView dx);
void dense_grad_params(ConstMatrixView x, ConstMatrixView dy, MatrixView dweight, double* dbias);

}  // namespace parallel

// Thread control for the parallel kernels. SEMCAST_THREADS, when set,
// overrides the requested count.
void set_thread_count(int threads);
int thread_count();

}  // namespace semcast::kernels

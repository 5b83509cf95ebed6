// Serial reference vs OpenMP dense kernels at the shapes the desk-scale
// encoder and reconstruction decoder actually run (batch 64).
#include <benchmark/benchmark.h>

#include <random>

#include "semcast/kernels.hpp"

namespace {

using semcast::Matrix;
namespace ref = semcast::kernels::reference;
namespace par = semcast::kernels::parallel;

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(rows, cols);
  for (auto& v : m.storage()) v = u(rng);
  return m;
}

template <auto Kernel>
void BM_forward(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const auto in = static_cast<std::size_t>(state.range(1));
  const auto out = static_cast<std::size_t>(state.range(2));
  Matrix x = random_matrix(batch, in, 1), w = random_matrix(out, in, 2), y(batch, out);
  std::vector<double> b(out, 0.1);
  for (auto _ : state) {
    Kernel(x.view(), w.view(), b.data(), y.view());
    benchmark::DoNotOptimize(y.data());
  }
  state.counters["GFLOPS"] = benchmark::Counter(2.0 * batch * in * out / 1e9, benchmark::Counter::kIsIterationInvariantRate);
}

template <auto Kernel>
void BM_grad_input(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const auto in = static_cast<std::size_t>(state.range(1));
  const auto out = static_cast<std::size_t>(state.range(2));
  Matrix dy = random_matrix(batch, out, 3), w = random_matrix(out, in, 4), dx(batch, in);
  for (auto _ : state) {
    Kernel(dy.view(), w.view(), dx.view());
    benchmark::DoNotOptimize(dx.data());
  }
  state.counters["GFLOPS"] = benchmark::Counter(2.0 * batch * in * out / 1e9, benchmark::Counter::kIsIterationInvariantRate);
}

template <auto Kernel>
void BM_grad_params(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const auto in = static_cast<std::size_t>(state.range(1));
  const auto out = static_cast<std::size_t>(state.range(2));
  Matrix x = random_matrix(batch, in, 5), dy = random_matrix(batch, out, 6), dw(out, in);
  std::vector<double> db(out);
  for (auto _ : state) {
    Kernel(x.view(), dy.view(), dw.view(), db.data());
    benchmark::DoNotOptimize(dw.data());
  }
  state.counters["GFLOPS"] = benchmark::Counter(2.0 * batch * in * out / 1e9, benchmark::Counter::kIsIterationInvariantRate);
}

void shapes(benchmark::internal::Benchmark* b) {
  b->Args({64, 784, 256})->Args({64, 256, 784})->Args({64, 128, 256});
}

BENCHMARK(BM_forward<ref::dense_forward>)->Apply(shapes);
BENCHMARK(BM_forward<par::dense_forward>)->Apply(shapes);
BENCHMARK(BM_grad_input<ref::dense_grad_input>)->Apply(shapes);
BENCHMARK(BM_grad_input<par::dense_grad_input>)->Apply(shapes);
BENCHMARK(BM_grad_params<ref::dense_grad_params>)->Apply(shapes);
BENCHMARK(BM_grad_params<par::dense_grad_params>)->Apply(shapes);

}  // namespace

BENCHMARK_MAIN();

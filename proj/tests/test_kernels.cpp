#include <random>
#include <tuple>
#include <vector>

#include "doctest.h"
#include "semcast/kernels.hpp"
#include "test_util.hpp"

using namespace semcast;
using semcast::testing::first_mismatch;
using semcast::testing::random_matrix;

namespace {

// Shapes chosen to hit full 4x4 tiles, ragged edges and degenerate sizes.
const std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> kShapes = {
    {1, 1, 1}, {3, 5, 2}, {4, 4, 4}, {7, 13, 9}, {64, 784, 256}, {65, 33, 10}, {6, 128, 3}};

}  // namespace

TEST_CASE("parallel dense_forward matches the serial reference") {
  std::mt19937_64 rng(11);
  for (auto [batch, in, out] : kShapes) {
    Matrix x = random_matrix(batch, in, rng), w = random_matrix(out, in, rng), b = random_matrix(1, out, rng);
    Matrix y_ref(batch, out), y_par(batch, out);
    kernels::reference::dense_forward(x.view(), w.view(), b.data(), y_ref.view());
    kernels::parallel::dense_forward(x.view(), w.view(), b.data(), y_par.view());
    CHECK(first_mismatch(y_ref.storage(), y_par.storage(), 1e-12, 1e-12) == -1);

    kernels::reference::dense_forward(x.view(), w.view(), nullptr, y_ref.view());
    kernels::parallel::dense_forward(x.view(), w.view(), nullptr, y_par.view());
    CHECK(first_mismatch(y_ref.storage(), y_par.storage(), 1e-12, 1e-12) == -1);
  }
}

TEST_CASE("parallel backward kernels match the serial reference") {
  std::mt19937_64 rng(12);
  for (auto [batch, in, out] : kShapes) {
    Matrix x = random_matrix(batch, in, rng), w = random_matrix(out, in, rng), dy = random_matrix(batch, out, rng);

    Matrix dx_ref(batch, in), dx_par(batch, in);
    kernels::reference::dense_grad_input(dy.view(), w.view(), dx_ref.view());
    kernels::parallel::dense_grad_input(dy.view(), w.view(), dx_par.view());
    CHECK(first_mismatch(dx_ref.storage(), dx_par.storage(), 1e-12, 1e-12) == -1);

    Matrix dw_ref(out, in), dw_par(out, in);
    std::vector<double> db_ref(out), db_par(out);
    kernels::reference::dense_grad_params(x.view(), dy.view(), dw_ref.view(), db_ref.data());
    kernels::parallel::dense_grad_params(x.view(), dy.view(), dw_par.view(), db_par.data());
    CHECK(first_mismatch(dw_ref.storage(), dw_par.storage(), 1e-12, 1e-12) == -1);
    CHECK(first_mismatch(db_ref, db_par, 1e-12, 1e-12) == -1);
  }
}

TEST_CASE("parallel kernels are bit-identical across thread counts") {
  std::mt19937_64 rng(13);
  Matrix x = random_matrix(37, 101, rng), w = random_matrix(23, 101, rng), dy = random_matrix(37, 23, rng);
  auto run = [&] {
    Matrix y(37, 23), dx(37, 101), dw(23, 101);
    std::vector<double> db(23);
    kernels::parallel::dense_forward(x.view(), w.view(), nullptr, y.view());
    kernels::parallel::dense_grad_input(dy.view(), w.view(), dx.view());
    kernels::parallel::dense_grad_params(x.view(), dy.view(), dw.view(), db.data());
    return std::make_tuple(y, dx, dw, db);
  };
  const int before = kernels::thread_count();
  kernels::set_thread_count(1);
  auto one = run();
  kernels::set_thread_count(4);
  auto four = run();
  kernels::set_thread_count(before);
  CHECK(std::get<0>(one) == std::get<0>(four));
  CHECK(std::get<1>(one) == std::get<1>(four));
  CHECK(std::get<2>(one) == std::get<2>(four));
  CHECK(std::get<3>(one) == std::get<3>(four));
}

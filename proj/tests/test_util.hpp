#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <string>

#include "semcast/matrix.hpp"

namespace semcast::testing {

// |a - b| <= rel * max(|a|, |b|) + abs_floor
inline bool rel_close(double a, double b, double rel, double abs_floor = 1e-9) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs_floor;
}

// Index of the first mismatching entry, or -1.
inline long first_mismatch(std::span<const double> a, std::span<const double> b, double rel,
                           double abs_floor = 1e-9) {
  if (a.size() != b.size()) return 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!rel_close(a[i], b[i], rel, abs_floor)) return static_cast<long>(i);
  return -1;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (auto& v : m.storage()) v = u(rng);
  return m;
}

}  // namespace semcast::testing

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "semcast/matrix.hpp"

namespace semcast {

// One dense block: a (rows x cols) weight matrix, optionally followed by
// `rows` bias entries.
struct LayerShape {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  bool has_bias = true;

  std::size_t weight_count() const { return std::size_t{rows} * cols; }
  std::size_t size() const { return weight_count() + (has_bias ? rows : 0); }

  friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

std::size_t layout_size(std::span<const LayerShape> layout);

struct ParamTag {};
struct GradTag {};

// Flat storage of every trainable scalar of one network, laid out layer by
// layer (weights row-major, then biases). ParamVector and GradVector share the
// representation but are distinct types so they cannot be mixed up.
template <class Tag>
class FlatVector {
 public:
  FlatVector() = default;
  explicit FlatVector(std::vector<LayerShape> layout);
  FlatVector(std::vector<LayerShape> layout, std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& storage() { return values_; }
  const std::vector<double>& storage() const { return values_; }
  const std::vector<LayerShape>& layout() const { return layout_; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::size_t layer_offset(std::size_t layer) const;
  MatrixView weight(std::size_t layer);
  ConstMatrixView weight(std::size_t layer) const;
  // Null when the layer has no bias.
  double* bias(std::size_t layer);
  const double* bias(std::size_t layer) const;

  bool all_finite() const;
  bool same_layout(const auto& other) const { return layout_ == other.layout(); }

  friend bool operator==(const FlatVector&, const FlatVector&) = default;

 private:
  std::vector<LayerShape> layout_;
  std::vector<double> values_;
};

using ParamVector = FlatVector<ParamTag>;
using GradVector = FlatVector<GradTag>;

extern template class FlatVector<ParamTag>;
extern template class FlatVector<GradTag>;

GradVector zeros_like(const ParamVector& params);

// Order-sensitive 64-bit digest of the values (used for equality checks on
// large vectors, e.g. "encoder unchanged").
std::uint64_t checksum(std::span<const double> values);

// Checkpoint format: u32 layer count, then (rows, cols, has_bias) as u32 per
// layer, then the values as little-endian IEEE-754 binary64.
void write_checkpoint(std::ostream& out, const ParamVector& params);
ParamVector read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const ParamVector& params);
ParamVector load_checkpoint(const std::string& path);

}  // namespace semcast

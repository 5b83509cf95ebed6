#include "semcast/param_vector.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "semcast/error.hpp"

namespace semcast {

std::size_t layout_size(std::span<const LayerShape> layout) {
  std::size_t n = 0;
  for (const auto& l : layout) n += l.size();
  return n;
}

template <class Tag>
FlatVector<Tag>::FlatVector(std::vector<LayerShape> layout)
    : layout_(std::move(layout)), values_(layout_size(layout_), 0.0) {}

template <class Tag>
FlatVector<Tag>::FlatVector(std::vector<LayerShape> layout, std::vector<double> values)
    : layout_(std::move(layout)), values_(std::move(values)) {
  if (values_.size() != layout_size(layout_)) {
    throw DimensionError("parameter count " + std::to_string(values_.size()) + " does not match layout size " +
                         std::to_string(layout_size(layout_)));
  }
}

template <class Tag>
std::size_t FlatVector<Tag>::layer_offset(std::size_t layer) const {
  std::size_t off = 0;
  for (std::size_t l = 0; l < layer; ++l) off += layout_[l].size();
  return off;
}

template <class Tag>
MatrixView FlatVector<Tag>::weight(std::size_t layer) {
  const auto& s = layout_.at(layer);
  return {values_.data() + layer_offset(layer), s.rows, s.cols};
}

template <class Tag>
ConstMatrixView FlatVector<Tag>::weight(std::size_t layer) const {
  const auto& s = layout_.at(layer);
  return {values_.data() + layer_offset(layer), s.rows, s.cols};
}

template <class Tag>
double* FlatVector<Tag>::bias(std::size_t layer) {
  const auto& s = layout_.at(layer);
  return s.has_bias ? values_.data() + layer_offset(layer) + s.weight_count() : nullptr;
}

template <class Tag>
const double* FlatVector<Tag>::bias(std::size_t layer) const {
  const auto& s = layout_.at(layer);
  return s.has_bias ? values_.data() + layer_offset(layer) + s.weight_count() : nullptr;
}

template <class Tag>
bool FlatVector<Tag>::all_finite() const {
  for (double v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

template class FlatVector<ParamTag>;
template class FlatVector<GradTag>;

GradVector zeros_like(const ParamVector& params) { return GradVector(params.layout()); }

std::uint64_t checksum(std::span<const double> values) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : values) {
    h ^= std::bit_cast<std::uint64_t>(v);
    h *= 0x100000001b3ULL;
    h ^= h >> 29;
  }
  return h;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError("checkpoint truncated in layout header");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{b[i]} << (8 * i);
  return v;
}

}  // namespace

void write_checkpoint(std::ostream& out, const ParamVector& params) {
  put_u32(out, static_cast<std::uint32_t>(params.layout().size()));
  for (const auto& l : params.layout()) {
    put_u32(out, l.rows);
    put_u32(out, l.cols);
    put_u32(out, l.has_bias ? 1u : 0u);
  }
  for (double v : params.values()) put_f64(out, v);
}

ParamVector read_checkpoint(std::istream& in) {
  const std::uint32_t layers = get_u32(in);
  if (layers > (1u << 16)) throw FormatError("implausible layer count " + std::to_string(layers));
  std::vector<LayerShape> layout(layers);
  for (auto& l : layout) {
    l.rows = get_u32(in);
    l.cols = get_u32(in);
    const std::uint32_t bias = get_u32(in);
    if (bias > 1) throw FormatError("bias flag must be 0 or 1, got " + std::to_string(bias));
    l.has_bias = bias == 1;
  }
  std::vector<double> values(layout_size(layout));
  std::vector<unsigned char> raw(values.size() * 8);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw FormatError("checkpoint truncated: expected " + std::to_string(values.size()) + " values");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= std::uint64_t{raw[i * 8 + b]} << (8 * b);
    values[i] = std::bit_cast<double>(v);
  }
  return ParamVector(std::move(layout), std::move(values));
}

void save_checkpoint(const std::string& path, const ParamVector& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  write_checkpoint(out, params);
  if (!out) throw Error("write failed: " + path);
}

ParamVector load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path);
  return read_checkpoint(in);
}

}  // namespace semcast

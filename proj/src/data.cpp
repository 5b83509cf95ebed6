#include "semcast/data.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <iterator>
#include <numeric>
#include <string>

#include "semcast/error.hpp"

namespace semcast {

std::string_view to_string(TaskKind k) {
  switch (k) {
    case TaskKind::reconstruction: return "reconstruction";
    case TaskKind::classification: return "classification";
  }
  return "?";
}

TaskKind parse_task_kind(std::string_view name) {
  for (auto k : {TaskKind::reconstruction, TaskKind::classification})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown task '" + std::string(name) + "' (expected reconstruction or classification)");
}

Dataset::Dataset(Matrix images, std::vector<std::uint8_t> labels, std::size_t classes, ImageDims dims, Split split)
    : images_(std::move(images)), labels_(std::move(labels)), classes_(classes), dims_(dims), split_(split) {
  if (labels_.empty()) throw DimensionError("dataset is empty");
  if (images_.rows() != labels_.size())
    throw DimensionError("dataset has " + std::to_string(images_.rows()) + " images but " +
                         std::to_string(labels_.size()) + " labels");
  if (images_.cols() != dims_.size())
    throw DimensionError("image width " + std::to_string(images_.cols()) + " does not match C*H*W = " +
                         std::to_string(dims_.size()));
  for (double v : images_.storage())
    if (!(v >= 0.0 && v <= 1.0)) throw DimensionError("pixel value outside [0,1]");
  for (auto l : labels_)
    if (l >= classes_) throw DimensionError("label " + std::to_string(l) + " >= class count " + std::to_string(classes_));
}

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<unsigned char>& buf, std::size_t offset, const std::filesystem::path& path) {
  if (buf.size() < offset + 4) throw FormatError(path.string() + ": truncated header");
  return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

void expect_magic(std::uint32_t actual, std::uint32_t expected, const std::filesystem::path& path) {
  if (actual != expected)
    throw FormatError(path.string() + ": bad IDX magic, expected " + std::to_string(expected) + " got " +
                      std::to_string(actual));
}

}  // namespace

Dataset load_mnist_idx(const std::filesystem::path& images, const std::filesystem::path& labels, Split split,
                       std::size_t limit) {
  const auto ibuf = read_file(images);
  const auto lbuf = read_file(labels);
  expect_magic(be32(ibuf, 0, images), 2051, images);
  expect_magic(be32(lbuf, 0, labels), 2049, labels);

  const std::size_t n_img = be32(ibuf, 4, images);
  const std::size_t rows = be32(ibuf, 8, images);
  const std::size_t cols = be32(ibuf, 12, images);
  const std::size_t n_lab = be32(lbuf, 4, labels);
  if (n_img != n_lab)
    throw FormatError("image count " + std::to_string(n_img) + " != label count " + std::to_string(n_lab));
  const std::size_t pixels = rows * cols;
  if (ibuf.size() < 16 + n_img * pixels)
    throw FormatError(images.string() + ": truncated, header promises " + std::to_string(n_img) + " images");
  if (lbuf.size() < 8 + n_lab) throw FormatError(labels.string() + ": truncated, header promises " +
                                                 std::to_string(n_lab) + " labels");

  const std::size_t n = limit > 0 ? std::min(limit, n_img) : n_img;
  Matrix x(n, pixels);
  std::vector<std::uint8_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < pixels; ++p) x(i, p) = ibuf[16 + i * pixels + p] / 255.0;
    y[i] = lbuf[8 + i];
    if (y[i] > 9) throw FormatError(labels.string() + ": label " + std::to_string(y[i]) + " at index " +
                                    std::to_string(i) + " is not a digit");
  }
  return Dataset(std::move(x), std::move(y), 10, {1, rows, cols}, split);
}

Matrix synth_prototypes(std::size_t dim, std::size_t classes, std::uint64_t seed) {
  if (dim == 0 || classes == 0) throw DimensionError("synthetic dataset needs positive dim and classes");
  Rng rng = derive_stream(seed, {tag(StreamPurpose::init), 0});
  std::normal_distribution<double> normal(0.5, 0.25);
  Matrix proto(classes, dim);
  for (auto& v : proto.storage()) v = std::clamp(normal(rng), 0.0, 1.0);
  return proto;
}

Dataset synth_dataset(std::size_t n, std::size_t dim, std::size_t classes, std::uint64_t seed, double noise) {
  if (n == 0) throw DimensionError("synthetic dataset needs n > 0");
  const Matrix proto = synth_prototypes(dim, classes, seed);
  Rng rng = derive_stream(seed, {tag(StreamPurpose::init), 1});
  std::normal_distribution<double> normal(0.0, noise);
  Matrix x(n, dim);
  std::vector<std::uint8_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<std::uint8_t>(i % classes);
    for (std::size_t p = 0; p < dim; ++p) x(i, p) = std::clamp(proto(y[i], p) + normal(rng), 0.0, 1.0);
  }
  return Dataset(std::move(x), std::move(y), classes, {1, 1, dim}, Split::train);
}

Matrix Batch::one_hot(std::size_t classes) const {
  Matrix p(labels.size(), classes);
  for (std::size_t t = 0; t < labels.size(); ++t) p(t, labels[t]) = 1.0;
  return p;
}

Batch sample_batch(const Dataset& data, std::size_t batch_size, Rng& rng, bool flip) {
  const std::size_t n = data.size();
  Batch b;
  b.indices.resize(batch_size);
  if (batch_size <= n) {
    // partial Fisher-Yates
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t t = 0; t < batch_size; ++t) {
      std::uniform_int_distribution<std::size_t> pick(t, n - 1);
      std::swap(perm[t], perm[pick(rng)]);
      b.indices[t] = perm[t];
    }
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (auto& i : b.indices) i = pick(rng);
  }

  const auto& dims = data.dims();
  const bool can_flip = flip && dims.square();
  b.images = Matrix(batch_size, dims.size());
  b.labels.resize(batch_size);
  for (std::size_t t = 0; t < batch_size; ++t) {
    const auto src = data.images().row(b.indices[t]);
    auto dst = b.images.row(t);
    b.labels[t] = data.labels()[b.indices[t]];
    if (can_flip && (rng() & 1)) {
      for (std::size_t c = 0; c < dims.channels; ++c)
        for (std::size_t r = 0; r < dims.height; ++r) {
          const std::size_t base = (c * dims.height + r) * dims.width;
          for (std::size_t col = 0; col < dims.width; ++col) dst[base + col] = src[base + dims.width - 1 - col];
        }
    } else {
      std::copy(src.begin(), src.end(), dst.begin());
    }
  }
  return b;
}

Batch slice_batch(const Dataset& data, std::size_t begin, std::size_t end) {
  end = std::min(end, data.size());
  if (begin >= end) throw DimensionError("empty slice");
  Batch b;
  b.images = Matrix(end - begin, data.dims().size());
  for (std::size_t i = begin; i < end; ++i) {
    const auto src = data.images().row(i);
    std::copy(src.begin(), src.end(), b.images.row(i - begin).begin());
    b.labels.push_back(data.labels()[i]);
    b.indices.push_back(i);
  }
  return b;
}

}  // namespace semcast

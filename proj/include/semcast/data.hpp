#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "semcast/matrix.hpp"
#include "semcast/rng.hpp"

namespace semcast {

enum class TaskKind { reconstruction, classification };

std::string_view to_string(TaskKind k);
TaskKind parse_task_kind(std::string_view name);

enum class Split { train, test };

struct ImageDims {
  std::size_t channels = 1;
  std::size_t height = 28;
  std::size_t width = 28;

  std::size_t size() const { return channels * height * width; }
  bool square() const { return height == width; }
  friend bool operator==(const ImageDims&, const ImageDims&) = default;
};

struct Sample {
  std::span<const double> image;
  std::uint8_t label = 0;
};

// Immutable after construction; safe to share read-only across threads.
class Dataset {
 public:
  // Throws DimensionError on empty input, width mismatch, pixels outside
  // [0,1] or labels >= classes.
  Dataset(Matrix images, std::vector<std::uint8_t> labels, std::size_t classes, ImageDims dims, Split split);

  std::size_t size() const { return labels_.size(); }
  std::size_t classes() const { return classes_; }
  const ImageDims& dims() const { return dims_; }
  Split split() const { return split_; }
  const Matrix& images() const { return images_; }
  const std::vector<std::uint8_t>& labels() const { return labels_; }
  Sample operator[](std::size_t i) const { return {images_.row(i), labels_[i]}; }

 private:
  Matrix images_;
  std::vector<std::uint8_t> labels_;
  std::size_t classes_;
  ImageDims dims_;
  Split split_;
};

// Big-endian IDX pair (image magic 2051, label magic 2049). Pixels are scaled
// by 1/255. `limit` > 0 keeps only the first `limit` samples.
Dataset load_mnist_idx(const std::filesystem::path& images, const std::filesystem::path& labels, Split split,
                       std::size_t limit = 0);

// Class prototypes ~ N(0.5, 0.25^2) per pixel, samples = prototype + N(0, noise^2),
// both clipped to [0,1]. Labels cycle 0..classes-1 so counts differ by at most one.
Dataset synth_dataset(std::size_t n, std::size_t dim, std::size_t classes, std::uint64_t seed, double noise = 0.05);

// Prototypes used by synth_dataset for the same (dim, classes, seed).
Matrix synth_prototypes(std::size_t dim, std::size_t classes, std::uint64_t seed);

struct Batch {
  Matrix images;                     // T x (C*H*W)
  std::vector<std::uint8_t> labels;  // T
  std::vector<std::size_t> indices;  // rows of the source dataset

  std::size_t size() const { return labels.size(); }
  Matrix one_hot(std::size_t classes) const;
};

// T distinct samples when T <= size(), otherwise drawn with replacement.
// With `flip`, square images are mirrored left-right with probability 1/2.
Batch sample_batch(const Dataset& data, std::size_t batch_size, Rng& rng, bool flip = false);

// Rows [begin, end) in order, no augmentation.
Batch slice_batch(const Dataset& data, std::size_t begin, std::size_t end);

}  // namespace semcast

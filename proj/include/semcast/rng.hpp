#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace semcast {

using Rng = std::mt19937_64;

// Independent stream keyed by the master seed and a tag path such as
// (epoch, iteration, purpose, receiver). Equal keys give equal streams.
inline Rng derive_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  std::vector<std::uint32_t> words;
  words.reserve(2 * (tags.size() + 1));
  auto push = [&words](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  for (auto t : tags) push(t);
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

// 64-bit seed for a sub-component (e.g. one network's initializer).
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  return derive_stream(seed, tags)();
}

// Stream purposes used in derive_stream tag paths.
enum class StreamPurpose : std::uint64_t {
  decoder_batch = 1,
  inner_batch = 2,
  final_batch = 3,
  heldout = 4,
  evaluation = 5,
  init = 6,
};

inline std::uint64_t tag(StreamPurpose p) { return static_cast<std::uint64_t>(p); }

}  // namespace semcast

#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace qemine {

// Hashed character n-gram featurizer settings.
struct FeaturizerConfig {
  std::vector<std::uint32_t> ngramOrders{1, 2, 3, 4};
  std::uint32_t hashDim = 32768;  // F, power of two
  std::uint64_t hashSeed = 0;

  // Throws ContractViolation when F is not a power of two or the order set is
  // empty or contains 0.
  void validate() const;
  bool operator==(const FeaturizerConfig&) const = default;
};

// Sparse vector with strictly increasing indices.
struct FeatureVector {
  std::vector<std::uint32_t> indices;
  std::vector<double> values;

  std::size_t nnz() const { return indices.size(); }
  bool empty() const { return indices.empty(); }
  double norm() const;
  bool operator==(const FeatureVector&) const = default;
};

// Word-boundary marker (U+2581) wrapped around every word before n-gram
// extraction.
inline constexpr std::string_view kWordMarker = "\xE2\x96\x81";

// 64-bit FNV-1a over `bytes`. A nonzero seed first feeds its eight
// little-endian bytes through the same recurrence.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0);

// Counts all configured character n-grams (over code points of each
// marker-wrapped, ASCII-lowercased word), hashes them into F buckets and
// L2-normalizes. Whitespace-only text gives the zero vector.
FeatureVector featurize(std::string_view text, const FeaturizerConfig& config);

}  // namespace qemine

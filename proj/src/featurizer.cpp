#include "qemine/featurizer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "qemine/error.hpp"

namespace qemine {
namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Byte length of the UTF-8 sequence starting with `lead`. Invalid lead bytes
// count as single-byte characters.
std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

}  // namespace

void FeaturizerConfig::validate() const {
  if (hashDim == 0 || (hashDim & (hashDim - 1)) != 0) {
    throw ContractViolation("hash dimension " + std::to_string(hashDim) + " is not a power of two");
  }
  if (ngramOrders.empty()) throw ContractViolation("n-gram order set is empty");
  for (auto n : ngramOrders) {
    if (n == 0) throw ContractViolation("n-gram order 0 is invalid");
  }
}

double FeatureVector::norm() const {
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return std::sqrt(sum);
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = kFnvOffset;
  if (seed != 0) {
    for (int i = 0; i < 8; ++i) {
      h ^= (seed >> (8 * i)) & 0xFFu;
      h *= kFnvPrime;
    }
  }
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

FeatureVector featurize(std::string_view text, const FeaturizerConfig& config) {
  config.validate();
  const std::uint64_t mask = config.hashDim - 1;
  std::map<std::uint32_t, double> counts;

  std::string marked;
  std::vector<std::size_t> offsets;  // code point start offsets into `marked`
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && is_space(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos >= text.size()) break;
    std::size_t end = pos;
    while (end < text.size() && !is_space(static_cast<unsigned char>(text[end]))) ++end;

    marked.assign(kWordMarker);
    for (std::size_t i = pos; i < end; ++i) {
      const auto c = static_cast<unsigned char>(text[i]);
      marked.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    }
    marked.append(kWordMarker);
    pos = end;

    offsets.clear();
    for (std::size_t i = 0; i < marked.size();) {
      offsets.push_back(i);
      i += utf8_length(static_cast<unsigned char>(marked[i]));
    }
    const std::size_t chars = offsets.size();
    offsets.push_back(marked.size());

    for (auto order : config.ngramOrders) {
      if (order > chars) continue;
      for (std::size_t s = 0; s + order <= chars; ++s) {
        const std::size_t b = offsets[s];
        const std::size_t e = std::min(offsets[s + order], marked.size());
        const auto h = fnv1a64(std::string_view(marked).substr(b, e - b), config.hashSeed);
        counts[static_cast<std::uint32_t>(h & mask)] += 1.0;
      }
    }
  }

  FeatureVector fv;
  double sumsq = 0.0;
  for (const auto& [idx, c] : counts) sumsq += c * c;
  if (sumsq == 0.0) return fv;
  const double inv = 1.0 / std::sqrt(sumsq);
  fv.indices.reserve(counts.size());
  fv.values.reserve(counts.size());
  for (const auto& [idx, c] : counts) {
    fv.indices.push_back(idx);
    fv.values.push_back(c * inv);
  }
  return fv;
}

}  // namespace qemine

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "qemine/corpus.hpp"

namespace qemine {

struct AugmentConfig {
  int negativesPerSource = 3;  // n
  double qualityCutoff = 0.7;
  std::uint64_t seed = 42;

  void validate() const;
};

enum class LabelKind { kBinary, kContinuous };

struct AugmentedDataset {
  std::vector<LabeledPair> positives;  // I
  std::vector<LabeledPair> negatives;  // sampled mismatches first, then demoted originals
  LabelKind labelKind = LabelKind::kBinary;

  // (source index, target index) of every sampled negative, parallel to the
  // first sampledCount() entries of `negatives`.
  std::vector<std::pair<std::size_t, std::size_t>> sampledOrigins;
  std::size_t sampledCount() const { return sampledOrigins.size(); }
  std::size_t demotedCount() const { return negatives.size() - sampledOrigins.size(); }

  // positives followed by negatives
  std::vector<LabeledPair> all() const;
};

// For every source i, n distinct targets j != i, uniform without replacement,
// in draw order. Throws ConfigError when fewer than n + 1 records exist.
std::vector<std::vector<std::size_t>> sample_negative_targets(std::size_t count, int n,
                                                              std::uint64_t seed);

// Binary filtration sets: originals scoring below the cutoff move from I to
// the negative set; sampled mismatches are labelled 0, the rest of I 1.
AugmentedDataset augment_filtration(std::span<const QERecord> records, const AugmentConfig& config);

// Scorer augmentation: all originals keep their scores, sampled mismatches
// get score 0. No cutoff demotion.
AugmentedDataset augment_scorer(std::span<const QERecord> records, const AugmentConfig& config);

// As QE records (positives then negatives) for training consumption and the
// QE TSV writer.
std::vector<QERecord> to_qe_records(const AugmentedDataset& data);
void save_augmented(const std::filesystem::path& path, const AugmentedDataset& data);

}  // namespace qemine

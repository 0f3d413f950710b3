#include "qemine/augment.hpp"

#include <unordered_map>

#include "qemine/error.hpp"
#include "qemine/rng.hpp"

namespace qemine {
namespace {

constexpr std::uint64_t kNegativeStream = 500;

AugmentedDataset sample_negatives(std::span<const QERecord> records, const AugmentConfig& config) {
  config.validate();
  const auto draws = sample_negative_targets(records.size(), config.negativesPerSource, config.seed);
  AugmentedDataset out;
  out.negatives.reserve(records.size() * static_cast<std::size_t>(config.negativesPerSource));
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (auto j : draws[i]) {
      out.negatives.push_back({records[i].source, records[j].target, 0.0});
      out.sampledOrigins.emplace_back(i, j);
    }
  }
  return out;
}

}  // namespace

void AugmentConfig::validate() const {
  if (negativesPerSource < 1) throw ConfigError("negatives per source must be >= 1");
  if (!(qualityCutoff >= 0.0 && qualityCutoff <= 1.0)) throw ConfigError("quality cutoff must lie in [0,1]");
}

std::vector<LabeledPair> AugmentedDataset::all() const {
  std::vector<LabeledPair> out(positives);
  out.insert(out.end(), negatives.begin(), negatives.end());
  return out;
}

std::vector<std::vector<std::size_t>> sample_negative_targets(std::size_t count, int n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("negatives per source must be >= 1");
  const auto want = static_cast<std::size_t>(n);
  if (count < want + 1) {
    throw ConfigError("need at least " + std::to_string(want + 1) + " records to draw " + std::to_string(want) +
                      " distinct negatives per source, got " + std::to_string(count));
  }
  Rng rng = Rng::derive(seed, kNegativeStream);
  std::vector<std::vector<std::size_t>> out(count);
  const std::size_t pool = count - 1;  // every index except the source itself
  std::unordered_map<std::size_t, std::size_t> swapped;
  for (std::size_t i = 0; i < count; ++i) {
    // Partial Fisher-Yates over the virtual array [0, pool); slot c maps to
    // index c, skipping i.
    swapped.clear();
    auto slot = [&](std::size_t c) {
      auto it = swapped.find(c);
      return it == swapped.end() ? c : it->second;
    };
    auto& picks = out[i];
    picks.reserve(want);
    for (std::size_t t = 0; t < want; ++t) {
      const std::size_t r = t + rng.below(pool - t);
      const std::size_t chosen = slot(r);
      swapped[r] = slot(t);
      picks.push_back(chosen < i ? chosen : chosen + 1);
    }
  }
  return out;
}

AugmentedDataset augment_filtration(std::span<const QERecord> records, const AugmentConfig& config) {
  auto out = sample_negatives(records, config);
  out.labelKind = LabelKind::kBinary;
  for (const auto& r : records) {
    if (r.score < config.qualityCutoff) {
      out.negatives.push_back({r.source, r.target, 0.0});
    } else {
      out.positives.push_back({r.source, r.target, 1.0});
    }
  }
  return out;
}

AugmentedDataset augment_scorer(std::span<const QERecord> records, const AugmentConfig& config) {
  auto out = sample_negatives(records, config);
  out.labelKind = LabelKind::kContinuous;
  for (const auto& r : records) out.positives.push_back({r.source, r.target, r.score});
  return out;
}

std::vector<QERecord> to_qe_records(const AugmentedDataset& data) {
  std::vector<QERecord> out;
  out.reserve(data.positives.size() + data.negatives.size());
  for (const auto& p : data.positives) out.push_back({p.source, p.target, p.label});
  for (const auto& p : data.negatives) out.push_back({p.source, p.target, p.label});
  return out;
}

void save_augmented(const std::filesystem::path& path, const AugmentedDataset& data) {
  save_qe(path, to_qe_records(data));
}

}  // namespace qemine

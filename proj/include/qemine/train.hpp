#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qemine/corpus.hpp"
#include "qemine/encoder.hpp"
#include "qemine/optimizer.hpp"

namespace qemine {

struct TrainConfig {
  int multitaskEpochs = 3;
  int finetuneEpochs = 1;
  // Epoch count for the single-objective trainers (filtration, alignment,
  // feature head).
  int epochs = 3;
  std::size_t batchSize = 32;
  AdamConfig adam;
  std::uint64_t seed = 42;
  std::vector<Task> tasks{Task::kQE, Task::kSTS, Task::kNLI};

  // Phase-1 early stopping on validation Pearson. When set, multitaskEpochs
  // is ignored and phase 1 runs until `convergencePatience` epochs pass
  // without improvement (at most `maxEpochs`); the best epoch is kept.
  bool untilConvergence = false;
  int convergencePatience = 3;
  int maxEpochs = 50;

  double heldOutFraction = 0.1;  // alignment evaluation split

  // Shape of freshly initialised encoders.
  FeaturizerConfig featurizer;
  std::uint32_t hidden = 256;
  std::uint32_t dim = 128;
  double initScale = 0.1;

  bool has_task(Task t) const;
  // Throws ConfigError.
  void validate() const;
};

struct ContrastiveConfig {
  double margin = 1.0;
  void validate() const;
};

struct HistoryRow {
  int epoch = 0;
  std::string task;
  double meanLoss = 0.0;
  bool operator==(const HistoryRow&) const = default;
};
using History = std::vector<HistoryRow>;

// CSV `epoch,task,mean_loss` with a header line.
void write_history_csv(std::ostream& out, const History& history);
void save_history_csv(const std::filesystem::path& path, const History& history);

struct MultitaskResult {
  EncoderModel model;
  HeadSet heads;
  History history;
};

// Phase 1: `multitaskEpochs` epochs of round-robin batches over the enabled
// tasks (QE, STS, NLI order). One epoch is one full pass over the largest
// enabled dataset; smaller datasets are reshuffled and recycled.
// Phase 2: `finetuneEpochs` epochs on QE only, updating the backbone and the
// QE head. STS and NLI heads are never touched in phase 2.
// `validation` is only consulted when `untilConvergence` is set.
MultitaskResult multitask_train(std::span<const QERecord> qe, std::span<const STSRecord> sts,
                                std::span<const NLIRecord> nli, const TrainConfig& config,
                                std::span<const QERecord> validation = {});

// Fresh encoder trained on positives (label 1) and negatives (label 0) to
// minimise the mean contrastive loss over embedding cosine similarity.
EncoderModel train_filtration(std::span<const LabeledPair> positives,
                              std::span<const LabeledPair> negatives, const TrainConfig& config,
                              const ContrastiveConfig& contrastive, History* history = nullptr);

struct AlignResult {
  EncoderModel model;
  double heldOutCosineBefore = 0.0;
  double heldOutCosineAfter = 0.0;
  History history;
};

// Minimises sum(1 - cos(G(source), G(target))) on the training split, with
// target-side embeddings treated as constants (recomputed each batch, no
// gradient). A `heldOutFraction` share of the pairs is kept aside to report
// mean cosine before and after.
AlignResult align_encoders(const EncoderModel& encoder, const ParallelSet& parallel,
                           const TrainConfig& config);

// Two-layer head over concatenated frozen-backbone pair features.
struct FeatureHead {
  std::uint32_t input = 0;
  std::uint32_t hidden = 64;
  std::vector<float> W1;  // hidden x input
  std::vector<float> b1;  // hidden
  std::vector<float> w2;  // hidden
  float b2 = 0.0f;

  static FeatureHead random(std::uint32_t input, std::uint32_t hidden, std::uint64_t seed);
  double forward(std::span<const double> features) const;
  bool operator==(const FeatureHead&) const = default;
};

// Backbones in STS, NLI, QE order.
struct FeatureQePredictor {
  std::vector<EncoderModel> backbones;
  FeatureHead head;

  std::vector<double> features(std::string_view source, std::string_view target) const;
  double predict(std::string_view source, std::string_view target) const;
};

FeatureQePredictor train_multiqe_feature(const EncoderModel& stsBackbone,
                                         const EncoderModel& nliBackbone,
                                         const EncoderModel& qeBackbone,
                                         std::span<const QERecord> qeData, const TrainConfig& config,
                                         History* history = nullptr);

}  // namespace qemine

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qemine/corpus.hpp"
#include "qemine/encoder.hpp"
#include "qemine/kernels.hpp"

namespace qemine {

struct ScoreMatrix {
  Matrix values;
  std::vector<std::string> rowIds;
  std::vector<std::string> colIds;
};

// The QE scoring model: an encoder plus the QE head of its head set.
struct Scorer {
  const EncoderModel& model;
  const RegressionHead& head;
};

struct MiningConfig {
  std::size_t topN = 10;
  std::optional<double> threshold;  // nullopt = tune on a training split
  Exec exec = Exec::kParallel;

  void validate() const;
};

struct MinedPair {
  std::string idA;
  std::string idB;
  double score = 0.0;
  bool operator==(const MinedPair&) const = default;
};

struct MiningResult {
  std::vector<MinedPair> pairs;  // ordered by side-A position
  double threshold = 0.0;
  std::size_t candidateCount = 0;  // pairs scored in stage 2
  std::size_t forwardCount = 0;
  std::size_t backwardCount = 0;
  std::size_t intersectionCount = 0;
};

// Candidate pair by side positions.
struct ScoredPair {
  std::size_t a = 0;
  std::size_t b = 0;
  double score = 0.0;
  bool operator==(const ScoredPair&) const = default;
};

// (i, j) = QE score of (references[i], hypotheses[j]).
ScoreMatrix score_matrix(const Scorer& scorer, std::span<const std::string> references,
                         std::span<const std::string> hypotheses, Exec exec = Exec::kParallel);

// Column of each row's maximum; ties go to the lowest column.
std::vector<std::size_t> mine_tatoeba(const Matrix& matrix);

// Fraction of rows whose prediction is the diagonal.
double tatoeba_accuracy(std::span<const std::size_t> predicted);

// Pairwise cosine matrix of the filtration embeddings.
Matrix embed_and_similarity(const EncoderModel& filtration, std::span<const std::string> sideA,
                            std::span<const std::string> sideB, Exec exec = Exec::kParallel);

struct Candidates {
  std::vector<std::vector<std::size_t>> perRow;  // top-n columns of each row
  std::vector<std::vector<std::size_t>> perCol;  // top-n rows of each column
};

// Indices of the n largest entries per row and per column, best first; ties
// go to the lower index. n >= dimension yields every index.
Candidates topn_candidates(const Matrix& sim, std::size_t n);

// Sorted union of all (row, col) candidate pairs, scores left at 0.
std::vector<ScoredPair> candidate_union(const Candidates& candidates);

// Scores every candidate with the QE head over precomputed scorer embeddings.
void score_candidates(std::span<ScoredPair> pairs, const Matrix& embA, const Matrix& embB,
                      const RegressionHead& head, Exec exec = Exec::kParallel);

struct Selection {
  std::vector<ScoredPair> pairs;  // forward ∩ backward, ordered by a
  std::size_t forwardCount = 0;
  std::size_t backwardCount = 0;
};

// Forward: each A's best-scoring candidate B if its score >= threshold.
// Backward: each B's best-scoring candidate A likewise. Result: intersection.
// Ties go to the lower index.
Selection select_mutual_best(std::span<const ScoredPair> scored, std::size_t sizeA, std::size_t sizeB,
                             double threshold);

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

PRF f1_score(const std::set<std::pair<std::size_t, std::size_t>>& predicted,
             const std::set<std::pair<std::size_t, std::size_t>>& gold);
PRF f1_score(std::span<const std::pair<std::string, std::string>> predicted,
             std::span<const std::pair<std::string, std::string>> gold);

// Threshold maximising the F1 of the mutual-best selection rule over the
// grid {0.00, 0.01, ..., 1.00} plus every distinct candidate score. Ties go
// to the largest threshold. Throws ConfigError on empty gold.
double tune_threshold(std::span<const ScoredPair> scored, std::size_t sizeA, std::size_t sizeB,
                      const std::set<std::pair<std::size_t, std::size_t>>& gold);

// Scored stage-2 candidates of a corpus (stage 1 + stage 2, no selection).
std::vector<ScoredPair> bucc_candidates(const BuccCorpus& corpus, const EncoderModel& filtration,
                                        const Scorer& scorer, const MiningConfig& config);

std::set<std::pair<std::size_t, std::size_t>> gold_positions(const BuccCorpus& corpus);

// Two-stage mining. An unset threshold is tuned on `training` (its gold);
// without a training corpus that is a ConfigError.
MiningResult mine_bucc(const BuccCorpus& corpus, const EncoderModel& filtration, const Scorer& scorer,
                       const MiningConfig& config, const BuccCorpus* training = nullptr);

// `idA\tidB\tscore` per line.
void write_mining_tsv(std::ostream& out, const MiningResult& result);

}  // namespace qemine

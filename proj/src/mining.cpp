#include "qemine/mining.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "qemine/error.hpp"

namespace qemine {
namespace {

std::vector<FeatureVector> featurize_all(std::span<const std::string> texts, const FeaturizerConfig& config) {
  std::vector<FeatureVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(featurize(t, config));
  return out;
}

Matrix embed(const EncoderModel& model, std::span<const std::string> texts, Exec exec) {
  const auto fvs = featurize_all(texts, model.config);
  return encode_batch(model, fvs, exec);
}

std::vector<std::string> sentences(const BuccSide& side) {
  std::vector<std::string> out;
  out.reserve(side.size());
  for (const auto& e : side.entries()) out.push_back(e.sentence);
  return out;
}

// Best-first order of `count` entries read through `value`; ties by index.
template <typename ValueFn>
std::vector<std::size_t> top_indices(std::size_t count, std::size_t n, ValueFn value) {
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const std::size_t keep = std::min(n, count);
  auto better = [&](std::size_t x, std::size_t y) {
    const double vx = value(x), vy = value(y);
    return vx > vy || (vx == vy && x < y);
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(), better);
  idx.resize(keep);
  return idx;
}

}  // namespace

void MiningConfig::validate() const {
  if (topN < 1) throw ConfigError("top-n must be >= 1");
  if (threshold && !(*threshold >= 0.0 && *threshold <= 1.0)) throw ConfigError("threshold must lie in [0,1]");
}

ScoreMatrix score_matrix(const Scorer& scorer, std::span<const std::string> references,
                         std::span<const std::string> hypotheses, Exec exec) {
  if (references.empty() || hypotheses.empty()) throw ContractViolation("score_matrix: empty sentence list");
  ScoreMatrix out;
  const auto ea = embed(scorer.model, references, exec);
  const auto eb = embed(scorer.model, hypotheses, exec);
  out.values = pair_scores(ea, eb, scorer.head, exec);
  for (std::size_t i = 0; i < references.size(); ++i) out.rowIds.push_back(std::to_string(i));
  for (std::size_t j = 0; j < hypotheses.size(); ++j) out.colIds.push_back(std::to_string(j));
  return out;
}

std::vector<std::size_t> mine_tatoeba(const Matrix& matrix) {
  std::vector<std::size_t> out(matrix.rows, 0);
  for (std::size_t i = 0; i < matrix.rows; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < matrix.cols; ++j) {
      if (matrix.at(i, j) > matrix.at(i, best)) best = j;
    }
    out[i] = best;
  }
  return out;
}

double tatoeba_accuracy(std::span<const std::size_t> predicted) {
  if (predicted.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == i ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

Matrix embed_and_similarity(const EncoderModel& filtration, std::span<const std::string> sideA,
                            std::span<const std::string> sideB, Exec exec) {
  const auto ea = kernels::normalize_rows(embed(filtration, sideA, exec));
  const auto eb = kernels::normalize_rows(embed(filtration, sideB, exec));
  return inner_products(ea, eb, exec);
}

Candidates topn_candidates(const Matrix& sim, std::size_t n) {
  if (n < 1) throw ConfigError("top-n must be >= 1");
  Candidates out;
  out.perRow.resize(sim.rows);
  out.perCol.resize(sim.cols);
  for (std::size_t i = 0; i < sim.rows; ++i) {
    out.perRow[i] = top_indices(sim.cols, n, [&](std::size_t j) { return sim.at(i, j); });
  }
  for (std::size_t j = 0; j < sim.cols; ++j) {
    out.perCol[j] = top_indices(sim.rows, n, [&](std::size_t i) { return sim.at(i, j); });
  }
  return out;
}

std::vector<ScoredPair> candidate_union(const Candidates& candidates) {
  std::vector<ScoredPair> out;
  for (std::size_t i = 0; i < candidates.perRow.size(); ++i) {
    for (auto j : candidates.perRow[i]) out.push_back({i, j, 0.0});
  }
  for (std::size_t j = 0; j < candidates.perCol.size(); ++j) {
    for (auto i : candidates.perCol[j]) out.push_back({i, j, 0.0});
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return std::tie(x.a, x.b) < std::tie(y.a, y.b); });
  out.erase(std::unique(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.a == y.a && x.b == y.b; }),
            out.end());
  return out;
}

void score_candidates(std::span<ScoredPair> pairs, const Matrix& embA, const Matrix& embB,
                      const RegressionHead& head, Exec exec) {
  if (embA.cols != embB.cols || head.weights.size() != regression_feature_size(embA.cols)) {
    throw ContractViolation("score_candidates: embedding/head dimension mismatch");
  }
  for (const auto& p : pairs) {
    if (p.a >= embA.rows || p.b >= embB.rows) throw ContractViolation("score_candidates: index out of range");
  }
  const auto n = static_cast<std::ptrdiff_t>(pairs.size());
  if (exec == Exec::kSerial) {
    for (auto& p : pairs) p.score = regression_head_score(head, embA.row(p.a), embB.row(p.b));
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    auto& p = pairs[static_cast<std::size_t>(k)];
    p.score = regression_head_score(head, embA.row(p.a), embB.row(p.b));
  }
}

Selection select_mutual_best(std::span<const ScoredPair> scored, std::size_t sizeA, std::size_t sizeB,
                             double threshold) {
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> bestForA(sizeA, kNone), bestForB(sizeB, kNone);
  auto better = [&](std::size_t cand, std::size_t incumbent, std::size_t candIdx, std::size_t incIdx) {
    if (incumbent == kNone) return true;
    const double cs = scored[cand].score, is = scored[incumbent].score;
    return cs > is || (cs == is && candIdx < incIdx);
  };
  for (std::size_t k = 0; k < scored.size(); ++k) {
    const auto& p = scored[k];
    if (p.a >= sizeA || p.b >= sizeB) throw ContractViolation("select_mutual_best: index out of range");
    auto& fa = bestForA[p.a];
    if (better(k, fa, p.b, fa == kNone ? 0 : scored[fa].b)) fa = k;
    auto& fb = bestForB[p.b];
    if (better(k, fb, p.a, fb == kNone ? 0 : scored[fb].a)) fb = k;
  }
  Selection out;
  for (std::size_t a = 0; a < sizeA; ++a) {
    const auto k = bestForA[a];
    if (k == kNone || scored[k].score < threshold) continue;
    ++out.forwardCount;
    if (bestForB[scored[k].b] == k) out.pairs.push_back(scored[k]);
  }
  for (std::size_t b = 0; b < sizeB; ++b) {
    const auto k = bestForB[b];
    if (k != kNone && scored[k].score >= threshold) ++out.backwardCount;
  }
  return out;
}

PRF f1_score(const std::set<std::pair<std::size_t, std::size_t>>& predicted,
             const std::set<std::pair<std::size_t, std::size_t>>& gold) {
  PRF out;
  if (predicted.empty() || gold.empty()) return out;
  std::size_t tp = 0;
  for (const auto& p : predicted) tp += gold.contains(p) ? 1 : 0;
  if (tp == 0) return out;
  out.precision = static_cast<double>(tp) / static_cast<double>(predicted.size());
  out.recall = static_cast<double>(tp) / static_cast<double>(gold.size());
  out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  return out;
}

PRF f1_score(std::span<const std::pair<std::string, std::string>> predicted,
             std::span<const std::pair<std::string, std::string>> gold) {
  const std::set<std::pair<std::string, std::string>> p(predicted.begin(), predicted.end());
  const std::set<std::pair<std::string, std::string>> g(gold.begin(), gold.end());
  PRF out;
  if (p.empty() || g.empty()) return out;
  std::size_t tp = 0;
  for (const auto& x : p) tp += g.contains(x) ? 1 : 0;
  if (tp == 0) return out;
  out.precision = static_cast<double>(tp) / static_cast<double>(p.size());
  out.recall = static_cast<double>(tp) / static_cast<double>(g.size());
  out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  return out;
}

double tune_threshold(std::span<const ScoredPair> scored, std::size_t sizeA, std::size_t sizeB,
                      const std::set<std::pair<std::size_t, std::size_t>>& gold) {
  if (gold.empty()) throw ConfigError("threshold tuning needs a non-empty gold set");
  // Mutual pairs once, then filtered per threshold.
  const auto mutual = select_mutual_best(scored, sizeA, sizeB, -std::numeric_limits<double>::infinity()).pairs;

  std::vector<double> grid;
  for (int k = 0; k <= 100; ++k) grid.push_back(k / 100.0);
  for (const auto& p : scored) grid.push_back(p.score);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  double bestF1 = -1.0;
  double bestThreshold = 0.0;
  std::set<std::pair<std::size_t, std::size_t>> chosen;
  for (double t : grid) {
    chosen.clear();
    for (const auto& p : mutual) {
      if (p.score >= t) chosen.emplace(p.a, p.b);
    }
    const double f1 = f1_score(chosen, gold).f1;
    if (f1 >= bestF1) {  // ascending grid: >= keeps the largest tied threshold
      bestF1 = f1;
      bestThreshold = t;
    }
  }
  return bestThreshold;
}

std::vector<ScoredPair> bucc_candidates(const BuccCorpus& corpus, const EncoderModel& filtration,
                                        const Scorer& scorer, const MiningConfig& config) {
  config.validate();
  const auto a = sentences(corpus.sideA);
  const auto b = sentences(corpus.sideB);
  if (a.empty() || b.empty()) throw ConfigError("BUCC corpus has an empty side");
  const auto sim = embed_and_similarity(filtration, a, b, config.exec);
  auto pairs = candidate_union(topn_candidates(sim, config.topN));
  const auto ea = embed(scorer.model, a, config.exec);
  const auto eb = embed(scorer.model, b, config.exec);
  score_candidates(pairs, ea, eb, scorer.head, config.exec);
  return pairs;
}

std::set<std::pair<std::size_t, std::size_t>> gold_positions(const BuccCorpus& corpus) {
  std::set<std::pair<std::size_t, std::size_t>> out;
  for (const auto& [ida, idb] : corpus.gold) {
    const auto pa = corpus.sideA.position(ida);
    const auto pb = corpus.sideB.position(idb);
    if (!pa || !pb) throw ConsistencyError("gold link '" + ida + "\t" + idb + "' names an unknown id");
    out.emplace(*pa, *pb);
  }
  return out;
}

MiningResult mine_bucc(const BuccCorpus& corpus, const EncoderModel& filtration, const Scorer& scorer,
                       const MiningConfig& config, const BuccCorpus* training) {
  config.validate();
  MiningResult result;
  if (config.threshold) {
    result.threshold = *config.threshold;
  } else {
    if (training == nullptr || training->gold.empty()) {
      throw ConfigError("threshold is 'auto' but no training split with gold links was given");
    }
    const auto trainPairs = bucc_candidates(*training, filtration, scorer, config);
    result.threshold =
        tune_threshold(trainPairs, training->sideA.size(), training->sideB.size(), gold_positions(*training));
  }

  const auto pairs = bucc_candidates(corpus, filtration, scorer, config);
  const auto sel = select_mutual_best(pairs, corpus.sideA.size(), corpus.sideB.size(), result.threshold);
  result.candidateCount = pairs.size();
  result.forwardCount = sel.forwardCount;
  result.backwardCount = sel.backwardCount;
  result.intersectionCount = sel.pairs.size();
  for (const auto& p : sel.pairs) {
    result.pairs.push_back({corpus.sideA.entries()[p.a].id, corpus.sideB.entries()[p.b].id, p.score});
  }
  return result;
}

void write_mining_tsv(std::ostream& out, const MiningResult& result) {
  for (const auto& p : result.pairs) out << p.idA << '\t' << p.idB << '\t' << format_real(p.score) << '\n';
}

}  // namespace qemine

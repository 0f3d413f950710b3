#include "qemine/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>

#include "qemine/backprop.hpp"
#include "qemine/error.hpp"
#include "qemine/kernels.hpp"
#include "qemine/losses.hpp"
#include "qemine/rng.hpp"
#include "qemine/stats.hpp"

namespace qemine {
namespace {

// Stream ids for Rng::derive.
constexpr std::uint64_t kHeadInitStream = 11;
constexpr std::uint64_t kTaskStreamBase = 100;
constexpr std::uint64_t kFiltrationStream = 200;
constexpr std::uint64_t kAlignSplitStream = 300;
constexpr std::uint64_t kAlignBatchStream = 301;
constexpr std::uint64_t kFeatureInitStream = 400;
constexpr std::uint64_t kFeatureBatchStream = 401;

struct PairFeatures {
  std::vector<FeatureVector> a;
  std::vector<FeatureVector> b;
  std::vector<double> labels;

  std::size_t size() const { return labels.size(); }
};

template <typename Record, typename Fn>
PairFeatures featurize_pairs(std::span<const Record> records, const FeaturizerConfig& config, Fn extract) {
  PairFeatures out;
  out.a.reserve(records.size());
  out.b.reserve(records.size());
  out.labels.reserve(records.size());
  for (const auto& r : records) {
    auto [sa, sb, label] = extract(r);
    out.a.push_back(featurize(sa, config));
    out.b.push_back(featurize(sb, config));
    out.labels.push_back(label);
  }
  return out;
}

// Shuffled index stream over one dataset. A batch never straddles two passes;
// the permutation is redrawn at the start of every pass.
class BatchStream {
 public:
  BatchStream(std::size_t size, Rng rng) : order_(size), rng_(std::move(rng)) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    cursor_ = size;
  }

  std::span<const std::size_t> next(std::size_t batchSize) {
    if (cursor_ >= order_.size()) {
      std::iota(order_.begin(), order_.end(), std::size_t{0});
      rng_.shuffle(std::span<std::size_t>(order_));
      cursor_ = 0;
    }
    const std::size_t n = std::min(batchSize, order_.size() - cursor_);
    std::span<const std::size_t> batch(order_.data() + cursor_, n);
    cursor_ += n;
    return batch;
  }

  std::size_t batches_per_pass(std::size_t batchSize) const {
    return (order_.size() + batchSize - 1) / batchSize;
  }

 private:
  std::vector<std::size_t> order_;
  Rng rng_;
  std::size_t cursor_;
};

struct LossTally {
  double sum = 0.0;
  std::size_t count = 0;
  double mean() const { return count == 0 ? 0.0 : sum / static_cast<double>(count); }
};

// Mutable training state shared by the two multitask phases.
struct MultitaskState {
  EncoderModel model;
  HeadSet heads;
  Adam adam;
  EncoderGrads grads;
  RegressionHeadGrads qeGrads;
  RegressionHeadGrads stsGrads;
  NliHeadGrads nliGrads;

  MultitaskState(EncoderModel m, HeadSet h, const AdamConfig& adamConfig)
      : model(std::move(m)),
        heads(std::move(h)),
        adam(adamConfig),
        grads(model),
        qeGrads(model.dim),
        stsGrads(model.dim),
        nliGrads(model.dim) {}

  double regression_batch(const PairFeatures& data, std::span<const std::size_t> batch, Task task) {
    grads.clear();
    auto& head = task == Task::kQE ? heads.qe : heads.sts;
    auto& hg = task == Task::kQE ? qeGrads : stsGrads;
    hg.clear();
    const double scale = 1.0 / static_cast<double>(batch.size());
    double sum = 0.0;
    for (auto i : batch) {
      sum += regression_example(model, head, data.a[i], data.b[i], data.labels[i], scale, grads, hg);
    }
    step_encoder(adam, model, grads);
    step_regression_head(adam, std::string(task_name(task)), head, hg);
    return sum;
  }

  double nli_batch(const PairFeatures& data, std::span<const std::size_t> batch) {
    grads.clear();
    nliGrads.clear();
    const double scale = 1.0 / static_cast<double>(batch.size());
    double sum = 0.0;
    for (auto i : batch) {
      sum += nli_example(model, heads.nli, data.a[i], data.b[i], static_cast<int>(data.labels[i]), scale,
                         grads, nliGrads);
    }
    step_encoder(adam, model, grads);
    step_nli_head(adam, heads.nli, nliGrads);
    return sum;
  }
};

double validation_pearson(const EncoderModel& model, const HeadSet& heads, const PairFeatures& val) {
  std::vector<double> preds(val.size());
  const auto ea = encode_batch(model, val.a);
  const auto eb = encode_batch(model, val.b);
  for (std::size_t i = 0; i < val.size(); ++i) preds[i] = regression_head_score(heads.qe, ea.row(i), eb.row(i));
  try {
    return pearson(preds, val.labels);
  } catch (const Error&) {
    return -std::numeric_limits<double>::infinity();
  }
}

}  // namespace

bool TrainConfig::has_task(Task t) const { return std::find(tasks.begin(), tasks.end(), t) != tasks.end(); }

void TrainConfig::validate() const {
  if (multitaskEpochs < 0 || finetuneEpochs < 0 || epochs < 0) throw ConfigError("epoch counts must be >= 0");
  if (batchSize < 1) throw ConfigError("batch size must be >= 1");
  if (tasks.empty()) throw ConfigError("task set is empty");
  if (!(adam.learningRate > 0.0)) throw ConfigError("learning rate must be positive");
  if (convergencePatience < 1 || maxEpochs < 1) throw ConfigError("convergence settings must be >= 1");
  if (!(heldOutFraction > 0.0 && heldOutFraction < 1.0)) throw ConfigError("held-out fraction must be in (0,1)");
  try {
    featurizer.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(e.what());
  }
  if (hidden == 0 || dim == 0) throw ConfigError("encoder sizes must be positive");
}

void ContrastiveConfig::validate() const {
  if (!(margin > 0.0 && margin <= 1.0)) throw ConfigError("contrastive margin must lie in (0, 1]");
}

void write_history_csv(std::ostream& out, const History& history) {
  out << "epoch,task,mean_loss\n";
  for (const auto& row : history) out << row.epoch << ',' << row.task << ',' << format_real(row.meanLoss) << '\n';
}

void save_history_csv(const std::filesystem::path& path, const History& history) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  write_history_csv(out, history);
}

MultitaskResult multitask_train(std::span<const QERecord> qe, std::span<const STSRecord> sts,
                                std::span<const NLIRecord> nli, const TrainConfig& config,
                                std::span<const QERecord> validation) {
  config.validate();
  for (Task t : config.tasks) {
    const std::size_t n = t == Task::kQE ? qe.size() : (t == Task::kSTS ? sts.size() : nli.size());
    if (n == 0) throw ConfigError("enabled task '" + std::string(task_name(t)) + "' has an empty dataset");
  }
  if (config.finetuneEpochs > 0 && qe.empty()) throw ConfigError("fine-tuning requires a QE dataset");
  if (config.untilConvergence && validation.empty()) {
    throw ConfigError("training until convergence requires a validation set");
  }

  const auto& fc = config.featurizer;
  const auto qeData = featurize_pairs(qe, fc, [](const QERecord& r) {
    return std::tuple<std::string_view, std::string_view, double>(r.source, r.target, r.score);
  });
  const auto stsData = featurize_pairs(sts, fc, [](const STSRecord& r) {
    return std::tuple<std::string_view, std::string_view, double>(r.sentence1, r.sentence2, r.similarity);
  });
  const auto nliData = featurize_pairs(nli, fc, [](const NLIRecord& r) {
    return std::tuple<std::string_view, std::string_view, double>(r.premise, r.hypothesis,
                                                                  static_cast<double>(r.label));
  });
  const auto valData = featurize_pairs(validation, fc, [](const QERecord& r) {
    return std::tuple<std::string_view, std::string_view, double>(r.source, r.target, r.score);
  });

  auto model = EncoderModel::random(fc, config.hidden, config.dim, config.seed, config.initScale);
  Rng headRng = Rng::derive(config.seed, kHeadInitStream);
  auto heads = HeadSet::random(config.dim, headRng, 0.01);
  MultitaskState state(std::move(model), std::move(heads), config.adam);

  BatchStream qeStream(qeData.size(), Rng::derive(config.seed, kTaskStreamBase + 0));
  BatchStream stsStream(stsData.size(), Rng::derive(config.seed, kTaskStreamBase + 1));
  BatchStream nliStream(nliData.size(), Rng::derive(config.seed, kTaskStreamBase + 2));
  const std::size_t B = config.batchSize;

  std::size_t rounds = 0;
  if (config.has_task(Task::kQE)) rounds = std::max(rounds, qeStream.batches_per_pass(B));
  if (config.has_task(Task::kSTS)) rounds = std::max(rounds, stsStream.batches_per_pass(B));
  if (config.has_task(Task::kNLI)) rounds = std::max(rounds, nliStream.batches_per_pass(B));

  MultitaskResult result;
  const int phase1Epochs = config.untilConvergence ? config.maxEpochs : config.multitaskEpochs;
  double bestScore = -std::numeric_limits<double>::infinity();
  int sinceBest = 0;
  std::optional<std::pair<EncoderModel, HeadSet>> best;
  int epoch = 0;

  for (; epoch < phase1Epochs; ++epoch) {
    LossTally tq, ts, tn;
    for (std::size_t r = 0; r < rounds; ++r) {
      if (config.has_task(Task::kQE)) {
        auto batch = qeStream.next(B);
        tq.sum += state.regression_batch(qeData, batch, Task::kQE);
        tq.count += batch.size();
      }
      if (config.has_task(Task::kSTS)) {
        auto batch = stsStream.next(B);
        ts.sum += state.regression_batch(stsData, batch, Task::kSTS);
        ts.count += batch.size();
      }
      if (config.has_task(Task::kNLI)) {
        auto batch = nliStream.next(B);
        tn.sum += state.nli_batch(nliData, batch);
        tn.count += batch.size();
      }
    }
    if (config.has_task(Task::kQE)) result.history.push_back({epoch + 1, "qe", tq.mean()});
    if (config.has_task(Task::kSTS)) result.history.push_back({epoch + 1, "sts", ts.mean()});
    if (config.has_task(Task::kNLI)) result.history.push_back({epoch + 1, "nli", tn.mean()});

    if (config.untilConvergence) {
      const double score = validation_pearson(state.model, state.heads, valData);
      if (score > bestScore) {
        bestScore = score;
        sinceBest = 0;
        best.emplace(state.model, state.heads);
      } else if (++sinceBest >= config.convergencePatience) {
        ++epoch;
        break;
      }
    }
  }
  if (best) {
    state.model = std::move(best->first);
    state.heads = std::move(best->second);
  }

  for (int k = 0; k < config.finetuneEpochs; ++k) {
    LossTally tq;
    for (std::size_t r = 0; r < qeStream.batches_per_pass(B); ++r) {
      auto batch = qeStream.next(B);
      tq.sum += state.regression_batch(qeData, batch, Task::kQE);
      tq.count += batch.size();
    }
    result.history.push_back({epoch + k + 1, "qe", tq.mean()});
  }

  result.model = std::move(state.model);
  result.heads = std::move(state.heads);
  return result;
}

EncoderModel train_filtration(std::span<const LabeledPair> positives,
                              std::span<const LabeledPair> negatives, const TrainConfig& config,
                              const ContrastiveConfig& contrastive, History* history) {
  config.validate();
  contrastive.validate();
  if (positives.empty() || negatives.empty()) {
    throw ConfigError("filtration training needs non-empty positive and negative sets");
  }
  std::vector<LabeledPair> all(positives.begin(), positives.end());
  for (auto& p : all) p.label = 1.0;
  for (const auto& n : negatives) all.push_back({n.source, n.target, 0.0});
  const auto data = featurize_pairs(std::span<const LabeledPair>(all), config.featurizer, [](const LabeledPair& r) {
    return std::tuple<std::string_view, std::string_view, double>(r.source, r.target, r.label);
  });

  auto model = EncoderModel::random(config.featurizer, config.hidden, config.dim, config.seed, config.initScale);
  Adam adam(config.adam);
  EncoderGrads grads(model);
  BatchStream stream(data.size(), Rng::derive(config.seed, kFiltrationStream));
  const std::size_t B = config.batchSize;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    LossTally tally;
    for (std::size_t r = 0; r < stream.batches_per_pass(B); ++r) {
      auto batch = stream.next(B);
      grads.clear();
      const double scale = 1.0 / static_cast<double>(batch.size());
      for (auto i : batch) {
        tally.sum += contrastive_example(model, data.a[i], data.b[i], static_cast<int>(data.labels[i]),
                                         contrastive.margin, scale, grads);
      }
      tally.count += batch.size();
      step_encoder(adam, model, grads);
    }
    if (history) history->push_back({epoch + 1, "contrastive", tally.mean()});
  }
  return model;
}

AlignResult align_encoders(const EncoderModel& encoder, const ParallelSet& parallel,
                           const TrainConfig& config) {
  config.validate();
  encoder.validate();
  const std::size_t K = parallel.size();
  const auto heldOut = static_cast<std::size_t>(std::floor(static_cast<double>(K) * config.heldOutFraction));
  if (heldOut < 1) {
    throw ConfigError("held-out split of " + std::to_string(K) + " pairs at fraction " +
                      format_real(config.heldOutFraction) + " is empty");
  }
  if (heldOut >= K) throw ConfigError("no training pairs left after the held-out split");

  std::vector<std::size_t> order(K);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng splitRng = Rng::derive(config.seed, kAlignSplitStream);
  splitRng.shuffle(std::span<std::size_t>(order));

  const auto& fc = encoder.config;
  std::vector<FeatureVector> src(K), tgt(K);
  for (std::size_t i = 0; i < K; ++i) {
    src[i] = featurize(parallel.pairs[i].first, fc);
    tgt[i] = featurize(parallel.pairs[i].second, fc);
  }
  const std::span<const std::size_t> evalIdx(order.data(), heldOut);
  const std::span<const std::size_t> trainIdx(order.data() + heldOut, K - heldOut);

  auto mean_cosine = [&](const EncoderModel& m) {
    double sum = 0.0;
    for (auto i : evalIdx) sum += cosine_similarity(encode(m, src[i]), encode(m, tgt[i]));
    return sum / static_cast<double>(evalIdx.size());
  };

  AlignResult result;
  result.model = encoder;
  result.heldOutCosineBefore = mean_cosine(encoder);

  Adam adam(config.adam);
  EncoderGrads grads(result.model);
  BatchStream stream(trainIdx.size(), Rng::derive(config.seed, kAlignBatchStream));
  const std::size_t B = config.batchSize;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    LossTally tally;
    for (std::size_t r = 0; r < stream.batches_per_pass(B); ++r) {
      auto batch = stream.next(B);
      grads.clear();
      const double scale = 1.0 / static_cast<double>(batch.size());
      for (auto bi : batch) {
        const auto i = trainIdx[bi];
        const auto target = encode(result.model, tgt[i]);
        tally.sum += alignment_example(result.model, src[i], target, scale, grads);
      }
      tally.count += batch.size();
      step_encoder(adam, result.model, grads);
    }
    result.history.push_back({epoch + 1, "alignment", tally.mean()});
  }
  result.heldOutCosineAfter = mean_cosine(result.model);
  return result;
}

FeatureHead FeatureHead::random(std::uint32_t input, std::uint32_t hidden, std::uint64_t seed) {
  FeatureHead h;
  h.input = input;
  h.hidden = hidden;
  h.W1.resize(static_cast<std::size_t>(hidden) * input);
  h.b1.assign(hidden, 0.0f);
  h.w2.resize(hidden);
  Rng rng = Rng::derive(seed, kFeatureInitStream);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(input));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (auto& w : h.W1) w = static_cast<float>(rng.normal() * s1);
  for (auto& w : h.w2) w = static_cast<float>(rng.normal() * s2);
  return h;
}

double FeatureHead::forward(std::span<const double> features) const {
  if (features.size() != input) throw ContractViolation("feature head input size mismatch");
  double z = b2;
  for (std::size_t h = 0; h < hidden; ++h) {
    const float* row = W1.data() + h * input;
    double a = b1[h];
    for (std::size_t i = 0; i < input; ++i) a += row[i] * features[i];
    z += w2[h] * std::tanh(a);
  }
  return logistic(z);
}

std::vector<double> FeatureQePredictor::features(std::string_view source, std::string_view target) const {
  std::vector<double> out;
  for (const auto& m : backbones) {
    const auto f = regression_features(encode_text(m, source), encode_text(m, target));
    out.insert(out.end(), f.begin(), f.end());
  }
  return out;
}

double FeatureQePredictor::predict(std::string_view source, std::string_view target) const {
  return head.forward(features(source, target));
}

FeatureQePredictor train_multiqe_feature(const EncoderModel& stsBackbone,
                                         const EncoderModel& nliBackbone,
                                         const EncoderModel& qeBackbone,
                                         std::span<const QERecord> qeData, const TrainConfig& config,
                                         History* history) {
  config.validate();
  if (stsBackbone.dim != nliBackbone.dim || stsBackbone.dim != qeBackbone.dim) {
    throw ContractViolation("backbone embedding dimensions differ: " + std::to_string(stsBackbone.dim) + ", " +
                            std::to_string(nliBackbone.dim) + ", " + std::to_string(qeBackbone.dim));
  }
  if (qeData.empty()) throw ConfigError("feature head training needs QE data");
  stsBackbone.validate();
  nliBackbone.validate();
  qeBackbone.validate();

  FeatureQePredictor predictor;
  predictor.backbones = {stsBackbone, nliBackbone, qeBackbone};
  const auto input = static_cast<std::uint32_t>(3 * regression_feature_size(qeBackbone.dim));
  predictor.head = FeatureHead::random(input, 64, config.seed);

  std::vector<std::vector<double>> feats;
  feats.reserve(qeData.size());
  for (const auto& r : qeData) {
    if (!(r.score >= 0.0 && r.score <= 1.0)) throw ContractViolation("QE label outside [0,1]");
    feats.push_back(predictor.features(r.source, r.target));
  }

  auto& head = predictor.head;
  const std::size_t H = head.hidden;
  Adam adam(config.adam);
  std::vector<double> gW1(head.W1.size()), gb1(H), gw2(H), hidden(H);
  double gb2 = 0.0;
  BatchStream stream(feats.size(), Rng::derive(config.seed, kFeatureBatchStream));
  const std::size_t B = config.batchSize;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    LossTally tally;
    for (std::size_t r = 0; r < stream.batches_per_pass(B); ++r) {
      auto batch = stream.next(B);
      std::fill(gW1.begin(), gW1.end(), 0.0);
      std::fill(gb1.begin(), gb1.end(), 0.0);
      std::fill(gw2.begin(), gw2.end(), 0.0);
      gb2 = 0.0;
      const double scale = 1.0 / static_cast<double>(batch.size());
      for (auto i : batch) {
        const auto& x = feats[i];
        double z = head.b2;
        for (std::size_t h = 0; h < H; ++h) {
          const float* row = head.W1.data() + h * input;
          double a = head.b1[h];
          for (std::size_t k = 0; k < input; ++k) a += row[k] * x[k];
          hidden[h] = std::tanh(a);
          z += head.w2[h] * hidden[h];
        }
        const double p = logistic(z);
        const auto l = regression_loss(p, qeData[i].score);
        tally.sum += l.loss;
        const double dz = scale * l.grad * p * (1.0 - p);
        gb2 += dz;
        for (std::size_t h = 0; h < H; ++h) {
          gw2[h] += dz * hidden[h];
          const double da = dz * head.w2[h] * (1.0 - hidden[h] * hidden[h]);
          gb1[h] += da;
          double* grow = gW1.data() + h * input;
          for (std::size_t k = 0; k < input; ++k) grow[k] += da * x[k];
        }
      }
      tally.count += batch.size();
      adam.step("feature.W1", head.W1, gW1);
      adam.step("feature.b1", head.b1, gb1);
      adam.step("feature.w2", head.w2, gw2);
      adam.step("feature.b2", std::span<float>(&head.b2, 1), std::span<const double>(&gb2, 1));
    }
    if (history) history->push_back({epoch + 1, "feature-qe", tally.mean()});
  }
  return predictor;
}

}  // namespace qemine

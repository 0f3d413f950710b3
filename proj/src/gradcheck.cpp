#include "qemine/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>

#include "qemine/backprop.hpp"
#include "qemine/corpus.hpp"
#include "qemine/losses.hpp"
#include "qemine/rng.hpp"

namespace qemine {
namespace {

constexpr double kDenominatorFloor = 1e-8;
constexpr double kHingeExclusion = 0.05;
constexpr std::size_t kExamples = 3;

double rel_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), kDenominatorFloor});
  return std::abs(analytic - numeric) / denom;
}

std::string random_text(Rng& rng) {
  const std::size_t words = 2 + rng.below(4);
  std::string out;
  for (std::size_t w = 0; w < words; ++w) {
    if (w) out.push_back(' ');
    const std::size_t len = 2 + rng.below(5);
    for (std::size_t k = 0; k < len; ++k) out.push_back(static_cast<char>('a' + rng.below(8)));
  }
  return out;
}

// Central difference on a float parameter, over the float-rounded step.
double float_difference(float& param, double eps, const std::function<double()>& loss) {
  const float saved = param;
  const float plus = static_cast<float>(static_cast<double>(saved) + eps);
  const float minus = static_cast<float>(static_cast<double>(saved) - eps);
  param = plus;
  const double lp = loss();
  param = minus;
  const double lm = loss();
  param = saved;
  return (lp - lm) / (static_cast<double>(plus) - static_cast<double>(minus));
}

double check_block(std::span<float> params, std::span<const double> analytic, double eps,
                   const std::function<double()>& loss) {
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double numeric = float_difference(params[i], eps, loss);
    worst = std::max(worst, rel_error(analytic[i], numeric));
  }
  return worst;
}

}  // namespace

std::string_view loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::kQeMse:
      return "qe-mse";
    case LossKind::kStsMse:
      return "sts-mse";
    case LossKind::kNliCrossEntropy:
      return "nli-ce";
    case LossKind::kContrastive:
      return "contrastive";
    case LossKind::kAlignment:
      return "alignment";
  }
  return "unknown";
}

std::optional<LossKind> parse_loss_kind(std::string_view name) {
  for (auto k : {LossKind::kQeMse, LossKind::kStsMse, LossKind::kNliCrossEntropy, LossKind::kContrastive,
                 LossKind::kAlignment}) {
    if (loss_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

double GradCheckReport::max_error() const {
  double m = 0.0;
  for (const auto& b : blocks) m = std::max(m, b.maxRelError);
  return m;
}

GradCheckReport grad_check(LossKind kind, std::uint64_t seed, double epsilon) {
  GradCheckReport report;
  report.kind = kind;
  report.epsilon = epsilon;

  Rng rng = Rng::derive(seed, 0x67726164ULL);
  FeaturizerConfig fc;
  fc.ngramOrders = {1, 2, 3};
  fc.hashDim = 64;
  fc.hashSeed = seed;
  auto model = EncoderModel::random(fc, 6, 4, rng.next(), 0.7);
  for (auto& b : model.b1) b = static_cast<float>(0.3 * rng.normal());
  for (auto& b : model.b2) b = static_cast<float>(0.3 * rng.normal());
  auto heads = HeadSet::random(model.dim, rng, 0.7);
  heads.qe.bias = static_cast<float>(0.2 * rng.normal());
  heads.sts.bias = static_cast<float>(0.2 * rng.normal());
  const double margin = 0.3 + 0.7 * rng.uniform();

  std::vector<std::string> textA(kExamples), textB(kExamples);
  std::vector<FeatureVector> fa(kExamples), fb(kExamples);
  std::vector<double> labels(kExamples);
  for (std::size_t e = 0; e < kExamples; ++e) {
    while (true) {
      textA[e] = random_text(rng);
      textB[e] = random_text(rng);
      fa[e] = featurize(textA[e], fc);
      fb[e] = featurize(textB[e], fc);
      switch (kind) {
        case LossKind::kQeMse:
        case LossKind::kStsMse:
          labels[e] = rng.uniform();
          break;
        case LossKind::kNliCrossEntropy:
          labels[e] = static_cast<double>(rng.below(3));
          break;
        case LossKind::kContrastive:
          labels[e] = static_cast<double>(rng.below(2));
          break;
        case LossKind::kAlignment:
          labels[e] = 0.0;
          break;
      }
      if (kind == LossKind::kContrastive && labels[e] == 1.0) {
        const double D = cosine_similarity(encode(model, fa[e]), encode(model, fb[e]));
        if (std::abs(margin - D) < kHingeExclusion) {
          ++report.excludedSamples;
          continue;
        }
      }
      break;
    }
  }

  std::vector<std::vector<double>> targets;
  if (kind == LossKind::kAlignment) {
    for (std::size_t e = 0; e < kExamples; ++e) targets.push_back(encode(model, fb[e]));
  }

  // Analytic gradients of the mean loss.
  EncoderGrads grads(model);
  RegressionHeadGrads regGrads(model.dim);
  NliHeadGrads nliGrads(model.dim);
  const double scale = 1.0 / kExamples;
  for (std::size_t e = 0; e < kExamples; ++e) {
    switch (kind) {
      case LossKind::kQeMse:
        regression_example(model, heads.qe, fa[e], fb[e], labels[e], scale, grads, regGrads);
        break;
      case LossKind::kStsMse:
        regression_example(model, heads.sts, fa[e], fb[e], labels[e], scale, grads, regGrads);
        break;
      case LossKind::kNliCrossEntropy:
        nli_example(model, heads.nli, fa[e], fb[e], static_cast<int>(labels[e]), scale, grads, nliGrads);
        break;
      case LossKind::kContrastive:
        contrastive_example(model, fa[e], fb[e], static_cast<int>(labels[e]), margin, scale, grads);
        break;
      case LossKind::kAlignment:
        alignment_example(model, fa[e], targets[e], scale, grads);
        break;
    }
  }

  // Loss through the public forward path.
  const std::function<double()> loss = [&]() {
    double sum = 0.0;
    for (std::size_t e = 0; e < kExamples; ++e) {
      switch (kind) {
        case LossKind::kQeMse:
          sum += regression_loss(forward_heads(model, heads, textA[e], textB[e], Task::kQE).score, labels[e]).loss;
          break;
        case LossKind::kStsMse:
          sum += regression_loss(forward_heads(model, heads, textA[e], textB[e], Task::kSTS).score, labels[e]).loss;
          break;
        case LossKind::kNliCrossEntropy:
          sum += nli_loss(forward_heads(model, heads, textA[e], textB[e], Task::kNLI).probs,
                          static_cast<int>(labels[e]))
                     .loss;
          break;
        case LossKind::kContrastive:
          sum += contrastive_loss(cosine_similarity(encode_text(model, textA[e]), encode_text(model, textB[e])),
                                  static_cast<int>(labels[e]), margin)
                     .loss;
          break;
        case LossKind::kAlignment: {
          const std::pair<std::vector<double>, std::vector<double>> pair{encode_text(model, textA[e]), targets[e]};
          sum += alignment_loss(std::span(&pair, 1)).loss;
          break;
        }
      }
    }
    return sum / kExamples;
  };

  report.blocks.push_back({"encoder.W1", check_block(model.W1, grads.W1, epsilon, loss)});
  report.blocks.push_back({"encoder.b1", check_block(model.b1, grads.b1, epsilon, loss)});
  report.blocks.push_back({"encoder.W2", check_block(model.W2, grads.W2, epsilon, loss)});
  report.blocks.push_back({"encoder.b2", check_block(model.b2, grads.b2, epsilon, loss)});

  if (kind == LossKind::kQeMse || kind == LossKind::kStsMse) {
    auto& head = kind == LossKind::kQeMse ? heads.qe : heads.sts;
    const std::string name(kind == LossKind::kQeMse ? "qe" : "sts");
    report.blocks.push_back({name + ".weights", check_block(head.weights, regGrads.w, epsilon, loss)});
    report.blocks.push_back(
        {name + ".bias", check_block(std::span<float>(&head.bias, 1), std::span<const double>(&regGrads.b, 1),
                                     epsilon, loss)});
    // dLoss/dPrediction of the squared error itself.
    double worst = 0.0;
    for (std::size_t e = 0; e < kExamples; ++e) {
      const double p = 0.1 + 0.8 * rng.uniform();
      const auto l = regression_loss(p, labels[e]);
      const double numeric = (regression_loss(p + epsilon, labels[e]).loss - regression_loss(p - epsilon, labels[e]).loss) /
                             (2 * epsilon);
      worst = std::max(worst, rel_error(l.grad, numeric));
    }
    report.blocks.push_back({"prediction", worst});
  }
  if (kind == LossKind::kNliCrossEntropy) {
    report.blocks.push_back({"nli.weights", check_block(heads.nli.weights, nliGrads.w, epsilon, loss)});
  }
  if (kind == LossKind::kContrastive) {
    double worst = 0.0;
    for (int y = 0; y <= 1; ++y) {
      for (int s = 0; s < 8; ++s) {
        double D = -1.0 + 2.0 * rng.uniform();
        if (y == 1 && std::abs(margin - D) < kHingeExclusion) continue;
        const auto l = contrastive_loss(D, y, margin);
        const double numeric =
            (contrastive_loss(D + epsilon, y, margin).loss - contrastive_loss(D - epsilon, y, margin).loss) /
            (2 * epsilon);
        worst = std::max(worst, rel_error(l.grad, numeric));
      }
    }
    report.blocks.push_back({"similarity", worst});
  }
  if (kind == LossKind::kAlignment) {
    // Gradient with respect to the embeddings x_i directly.
    std::vector<std::pair<std::vector<double>, std::vector<double>>> pairs;
    for (std::size_t e = 0; e < kExamples; ++e) pairs.emplace_back(encode(model, fa[e]), targets[e]);
    const auto analytic = alignment_loss(pairs);
    double worst = 0.0;
    for (std::size_t e = 0; e < kExamples; ++e) {
      for (std::size_t i = 0; i < pairs[e].first.size(); ++i) {
        const double saved = pairs[e].first[i];
        pairs[e].first[i] = saved + epsilon;
        const double lp = alignment_loss(pairs).loss;
        pairs[e].first[i] = saved - epsilon;
        const double lm = alignment_loss(pairs).loss;
        pairs[e].first[i] = saved;
        worst = std::max(worst, rel_error(analytic.grads[e][i], (lp - lm) / (2 * epsilon)));
      }
    }
    report.blocks.push_back({"embedding", worst});
  }
  return report;
}

void write_gradcheck_csv(std::ostream& out, const GradCheckReport& report) {
  out << "block,max_rel_error\n";
  for (const auto& b : report.blocks) out << b.name << ',' << format_real(b.maxRelError) << '\n';
}

}  // namespace qemine

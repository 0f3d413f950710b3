#include "qemine/backprop.hpp"

#include <algorithm>
#include <cmath>

#include "qemine/losses.hpp"

namespace qemine {
namespace {

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

EncoderGrads::EncoderGrads(const EncoderModel& model)
    : W1(model.W1.size(), 0.0),
      b1(model.b1.size(), 0.0),
      W2(model.W2.size(), 0.0),
      b2(model.b2.size(), 0.0),
      touchedMask(model.features(), 0),
      features(model.features()),
      hidden(model.hidden) {}

void EncoderGrads::clear() {
  for (auto k : touched) {
    for (std::size_t h = 0; h < hidden; ++h) W1[h * features + k] = 0.0;
    touchedMask[k] = 0;
  }
  touched.clear();
  std::fill(b1.begin(), b1.end(), 0.0);
  std::fill(W2.begin(), W2.end(), 0.0);
  std::fill(b2.begin(), b2.end(), 0.0);
}

void RegressionHeadGrads::clear() {
  std::fill(w.begin(), w.end(), 0.0);
  b = 0.0;
}

void NliHeadGrads::clear() { std::fill(w.begin(), w.end(), 0.0); }

void backward_encoder(const EncoderModel& model, const FeatureVector& fv,
                      const EncoderActivations& act, std::span<const double> dEmbedding,
                      EncoderGrads& grads) {
  const std::size_t H = model.hidden;
  const std::size_t d = model.dim;
  const std::size_t F = model.features();
  std::vector<double> dHidden(H, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    const double g = dEmbedding[j];
    if (g == 0.0) continue;
    grads.b2[j] += g;
    const float* w = model.W2.data() + j * H;
    double* gw = grads.W2.data() + j * H;
    for (std::size_t h = 0; h < H; ++h) {
      gw[h] += g * act.hidden[h];
      dHidden[h] += g * w[h];
    }
  }
  for (auto k : fv.indices) {
    if (!grads.touchedMask[k]) {
      grads.touchedMask[k] = 1;
      grads.touched.push_back(k);
    }
  }
  for (std::size_t h = 0; h < H; ++h) {
    const double da = dHidden[h] * (1.0 - act.hidden[h] * act.hidden[h]);
    grads.b1[h] += da;
    double* row = grads.W1.data() + h * F;
    for (std::size_t n = 0; n < fv.indices.size(); ++n) row[fv.indices[n]] += da * fv.values[n];
  }
}

double regression_example(const EncoderModel& model, const RegressionHead& head,
                          const FeatureVector& a, const FeatureVector& b, double label,
                          double scale, EncoderGrads& grads, RegressionHeadGrads& headGrads) {
  const auto actA = encode_with_activations(model, a);
  const auto actB = encode_with_activations(model, b);
  const auto& u = actA.embedding;
  const auto& v = actB.embedding;
  const std::size_t d = u.size();
  const auto f = regression_features(u, v);

  double z = head.bias;
  for (std::size_t i = 0; i < f.size(); ++i) z += head.weights[i] * f[i];
  const double p = logistic(z);
  const auto l = regression_loss(p, label);
  const double dz = scale * l.grad * p * (1.0 - p);

  for (std::size_t i = 0; i < f.size(); ++i) headGrads.w[i] += dz * f[i];
  headGrads.b += dz;

  std::vector<double> du(d, 0.0), dv(d, 0.0), cu(d), cv(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double wAbs = dz * head.weights[i];
    const double wMul = dz * head.weights[d + i];
    const double s = sign(u[i] - v[i]);
    du[i] += wAbs * s + wMul * v[i];
    dv[i] += -wAbs * s + wMul * u[i];
  }
  const double wCos = dz * head.weights[2 * d];
  if (wCos != 0.0) {
    cosine_gradients(u, v, cu, cv);
    for (std::size_t i = 0; i < d; ++i) {
      du[i] += wCos * cu[i];
      dv[i] += wCos * cv[i];
    }
  }
  backward_encoder(model, a, actA, du, grads);
  backward_encoder(model, b, actB, dv, grads);
  return l.loss;
}

double nli_example(const EncoderModel& model, const NliHead& head, const FeatureVector& a,
                   const FeatureVector& b, int label, double scale, EncoderGrads& grads,
                   NliHeadGrads& headGrads) {
  const auto actA = encode_with_activations(model, a);
  const auto actB = encode_with_activations(model, b);
  const auto& u = actA.embedding;
  const auto& v = actB.embedding;
  const std::size_t d = u.size();
  const auto f = nli_features(u, v);
  const auto probs = nli_head_probs(head, u, v);
  const auto l = nli_loss(probs, label);

  const std::size_t stride = f.size() + 1;
  std::vector<double> df(f.size(), 0.0);
  for (std::size_t c = 0; c < 3; ++c) {
    // softmax + cross-entropy: dLoss/dlogit = p - onehot
    const double dz = scale * (probs[c] - (static_cast<int>(c) == label ? 1.0 : 0.0));
    const float* w = head.weights.data() + c * stride;
    double* gw = headGrads.w.data() + c * stride;
    for (std::size_t i = 0; i < f.size(); ++i) {
      gw[i] += dz * f[i];
      df[i] += dz * w[i];
    }
    gw[f.size()] += dz;
  }

  std::vector<double> du(d), dv(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double s = sign(u[i] - v[i]);
    du[i] = df[i] + df[2 * d + i] * s + df[3 * d + i] * v[i];
    dv[i] = df[d + i] - df[2 * d + i] * s + df[3 * d + i] * u[i];
  }
  backward_encoder(model, a, actA, du, grads);
  backward_encoder(model, b, actB, dv, grads);
  return l.loss;
}

double contrastive_example(const EncoderModel& model, const FeatureVector& a,
                           const FeatureVector& b, int label, double margin, double scale,
                           EncoderGrads& grads) {
  const auto actA = encode_with_activations(model, a);
  const auto actB = encode_with_activations(model, b);
  const double D = cosine_similarity(actA.embedding, actB.embedding);
  const auto l = contrastive_loss(D, label, margin);
  if (l.grad != 0.0) {
    const std::size_t d = actA.embedding.size();
    std::vector<double> du(d), dv(d);
    cosine_gradients(actA.embedding, actB.embedding, du, dv);
    const double g = scale * l.grad;
    for (std::size_t i = 0; i < d; ++i) {
      du[i] *= g;
      dv[i] *= g;
    }
    backward_encoder(model, a, actA, du, grads);
    backward_encoder(model, b, actB, dv, grads);
  }
  return l.loss;
}

double alignment_example(const EncoderModel& model, const FeatureVector& source,
                         std::span<const double> target, double scale, EncoderGrads& grads) {
  const auto act = encode_with_activations(model, source);
  const std::size_t d = act.embedding.size();
  const double loss = 1.0 - cosine_similarity(act.embedding, target);
  std::vector<double> dx(d), dy(d);
  cosine_gradients(act.embedding, target, dx, dy);
  for (auto& g : dx) g *= -scale;
  backward_encoder(model, source, act, dx, grads);
  return loss;
}

void step_encoder(Adam& adam, EncoderModel& model, const EncoderGrads& grads) {
  adam.step("encoder.W1", model.W1, grads.W1);
  adam.step("encoder.b1", model.b1, grads.b1);
  adam.step("encoder.W2", model.W2, grads.W2);
  adam.step("encoder.b2", model.b2, grads.b2);
}

void step_regression_head(Adam& adam, const std::string& name, RegressionHead& head,
                          const RegressionHeadGrads& grads) {
  adam.step(name + ".weights", head.weights, grads.w);
  adam.step(name + ".bias", std::span<float>(&head.bias, 1), std::span<const double>(&grads.b, 1));
}

void step_nli_head(Adam& adam, NliHead& head, const NliHeadGrads& grads) {
  adam.step("nli.weights", head.weights, grads.w);
}

}  // namespace qemine

#pragma once

#include <span>
#include <vector>

#include "qemine/encoder.hpp"
#include "qemine/optimizer.hpp"

namespace qemine {

// Dense gradient buffers for one encoder. W1 gradients are sparse in the
// feature axis; clear() resets only the touched columns.
struct EncoderGrads {
  std::vector<double> W1, b1, W2, b2;
  std::vector<std::uint32_t> touched;
  std::vector<std::uint8_t> touchedMask;
  std::size_t features = 0;
  std::size_t hidden = 0;

  explicit EncoderGrads(const EncoderModel& model);
  void clear();
};

struct RegressionHeadGrads {
  std::vector<double> w;
  double b = 0.0;
  explicit RegressionHeadGrads(std::size_t dim) : w(regression_feature_size(dim), 0.0) {}
  void clear();
};

struct NliHeadGrads {
  std::vector<double> w;
  explicit NliHeadGrads(std::size_t dim) : w(3 * (nli_feature_size(dim) + 1), 0.0) {}
  void clear();
};

// Accumulates dLoss/dEmbedding back into the encoder gradients.
void backward_encoder(const EncoderModel& model, const FeatureVector& fv,
                      const EncoderActivations& act, std::span<const double> dEmbedding,
                      EncoderGrads& grads);

// Each *_example function runs one forward/backward pass, adds `scale` times
// the example's gradient to the buffers and returns the unscaled loss.
double regression_example(const EncoderModel& model, const RegressionHead& head,
                          const FeatureVector& a, const FeatureVector& b, double label,
                          double scale, EncoderGrads& grads, RegressionHeadGrads& headGrads);

double nli_example(const EncoderModel& model, const NliHead& head, const FeatureVector& a,
                   const FeatureVector& b, int label, double scale, EncoderGrads& grads,
                   NliHeadGrads& headGrads);

double contrastive_example(const EncoderModel& model, const FeatureVector& a,
                           const FeatureVector& b, int label, double margin, double scale,
                           EncoderGrads& grads);

// `target` is a constant embedding; only the source side is differentiated.
double alignment_example(const EncoderModel& model, const FeatureVector& source,
                         std::span<const double> target, double scale, EncoderGrads& grads);

void step_encoder(Adam& adam, EncoderModel& model, const EncoderGrads& grads);
void step_regression_head(Adam& adam, const std::string& name, RegressionHead& head,
                          const RegressionHeadGrads& grads);
void step_nli_head(Adam& adam, NliHead& head, const NliHeadGrads& grads);

}  // namespace qemine

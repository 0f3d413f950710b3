#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "qemine/featurizer.hpp"

namespace qemine {

class Rng;

enum class Task : std::uint8_t { kQE = 0, kSTS = 1, kNLI = 2 };

std::string_view task_name(Task task);

// The embedding network: e = W2 * tanh(W1 * x + b1) + b2.
// Weights are stored as 32-bit floats (the on-disk precision); arithmetic is
// carried out in double.
struct EncoderModel {
  FeaturizerConfig config;
  std::uint32_t hidden = 256;  // H
  std::uint32_t dim = 128;     // d
  std::vector<float> W1;       // H x F, row-major
  std::vector<float> b1;       // H
  std::vector<float> W2;       // d x H, row-major
  std::vector<float> b2;       // d

  std::uint32_t features() const { return config.hashDim; }

  // Gaussian initialisation: W1 ~ N(0, inputScale^2), W2 ~ N(0, 1/H), zero
  // biases.
  static EncoderModel random(const FeaturizerConfig& config, std::uint32_t hidden,
                             std::uint32_t dim, std::uint64_t seed, double inputScale = 0.1);

  // Throws ContractViolation on inconsistent sizes or non-finite weights.
  void validate() const;
  bool operator==(const EncoderModel&) const = default;
};

// Linear regression head over the 2d+1 pair features, squashed by the
// logistic function.
struct RegressionHead {
  std::vector<float> weights;  // 2d + 1
  float bias = 0.0f;
  bool operator==(const RegressionHead&) const = default;
};

// Softmax classifier over the 4d NLI pair features. Row-major 3 x (4d+1); the
// last column of each row is its bias.
struct NliHead {
  std::vector<float> weights;
  bool operator==(const NliHead&) const = default;
};

struct HeadSet {
  RegressionHead qe;
  RegressionHead sts;
  NliHead nli;

  static HeadSet zeros(std::uint32_t dim);
  static HeadSet random(std::uint32_t dim, Rng& rng, double scale = 0.1);
  void validate(std::uint32_t dim) const;
  bool operator==(const HeadSet&) const = default;
};

inline std::size_t regression_feature_size(std::size_t dim) { return 2 * dim + 1; }
inline std::size_t nli_feature_size(std::size_t dim) { return 4 * dim; }

// u . v / (|u| |v|); 0 when either norm is 0. Throws ContractViolation on a
// size mismatch.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

// [|u - v|, u * v, cos(u, v)]
std::vector<double> regression_features(std::span<const double> u, std::span<const double> v);
// [u, v, |u - v|, u * v]
std::vector<double> nli_features(std::span<const double> u, std::span<const double> v);

double logistic(double z);

// Hidden activations kept for the backward pass.
struct EncoderActivations {
  std::vector<double> hidden;     // tanh(W1 x + b1)
  std::vector<double> embedding;  // W2 hidden + b2
};

EncoderActivations encode_with_activations(const EncoderModel& model, const FeatureVector& fv);
std::vector<double> encode(const EncoderModel& model, const FeatureVector& fv);
std::vector<double> encode_text(const EncoderModel& model, std::string_view text);

double regression_head_score(const RegressionHead& head, std::span<const double> u,
                             std::span<const double> v);
std::array<double, 3> nli_head_probs(const NliHead& head, std::span<const double> u,
                                     std::span<const double> v);

struct Prediction {
  Task task = Task::kQE;
  double score = 0.0;                   // QE / STS
  std::array<double, 3> probs{};        // NLI
};

Prediction forward_heads(const EncoderModel& model, const HeadSet& heads, std::string_view textA,
                         std::string_view textB, Task task);

// Binary model file (magic QEM1). Throws FormatError on bad magic/version and
// CorruptionError on truncation or checksum mismatch.
void save_model(const std::filesystem::path& path, const EncoderModel& model, const HeadSet& heads);
struct LoadedModel {
  EncoderModel model;
  HeadSet heads;
};
LoadedModel load_model(const std::filesystem::path& path);

std::vector<std::uint8_t> serialize_model(const EncoderModel& model, const HeadSet& heads);
LoadedModel deserialize_model(std::span<const std::uint8_t> bytes);

}  // namespace qemine

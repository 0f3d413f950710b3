#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "qemine/encoder.hpp"

namespace qemine {

struct ScalarLoss {
  double loss = 0.0;
  double grad = 0.0;  // dLoss / dPrediction
};

// Squared error (p - y)^2 for the QE and STS heads. Label must lie in [0, 1].
ScalarLoss regression_loss(double prediction, double label);

struct NliLoss {
  double loss = 0.0;
  std::array<double, 3> grad{};  // dLoss / dProbability
};

// Cross-entropy -log p[label].
NliLoss nli_loss(const std::array<double, 3>& probs, int label);

// Per-task dispatch. For QE/STS `label` is the target score, for NLI the
// class index. Returns the loss and dLoss/dPrediction (one entry for the
// regression tasks, three for NLI).
struct TaskLoss {
  double loss = 0.0;
  std::vector<double> grad;
};
TaskLoss task_loss(Task task, const Prediction& prediction, double label);

// Margin contrastive loss over a similarity D with label Y (1 = positive):
//   (1 - Y) * D^2 / 2 + Y * max(0, m - D)^2 / 2
// At the hinge point D = m the subgradient 0 is returned.
ScalarLoss contrastive_loss(double similarity, int label, double margin);

// Gradients of cos(u, v) with respect to u and v. Zero when either norm is 0.
void cosine_gradients(std::span<const double> u, std::span<const double> v,
                      std::span<double> du, std::span<double> dv);

struct AlignmentLoss {
  double loss = 0.0;
  std::vector<std::vector<double>> grads;  // dLoss / dx_i
};

// Sum over pairs of 1 - cos(x_i, y_i). The y_i are constants; gradients flow
// into the x_i only. A zero-norm member contributes loss 1 and no gradient.
AlignmentLoss alignment_loss(std::span<const std::pair<std::vector<double>, std::vector<double>>> pairs);

}  // namespace qemine

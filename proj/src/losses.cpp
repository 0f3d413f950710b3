#include "qemine/losses.hpp"

#include <cmath>
#include <string>

#include "qemine/error.hpp"

namespace qemine {

ScalarLoss regression_loss(double prediction, double label) {
  if (!(label >= 0.0 && label <= 1.0)) {
    throw ContractViolation("regression label " + std::to_string(label) + " outside [0,1]");
  }
  const double diff = prediction - label;
  return {diff * diff, 2.0 * diff};
}

NliLoss nli_loss(const std::array<double, 3>& probs, int label) {
  if (label < 0 || label > 2) throw ContractViolation("NLI label " + std::to_string(label) + " not in {0,1,2}");
  NliLoss out;
  const double p = probs[static_cast<std::size_t>(label)];
  out.loss = -std::log(p);
  out.grad[static_cast<std::size_t>(label)] = -1.0 / p;
  return out;
}

TaskLoss task_loss(Task task, const Prediction& prediction, double label) {
  if (task == Task::kNLI) {
    if (label != 0.0 && label != 1.0 && label != 2.0) {
      throw ContractViolation("NLI label must be 0, 1 or 2");
    }
    const auto l = nli_loss(prediction.probs, static_cast<int>(label));
    return {l.loss, {l.grad.begin(), l.grad.end()}};
  }
  const auto l = regression_loss(prediction.score, label);
  return {l.loss, {l.grad}};
}

ScalarLoss contrastive_loss(double similarity, int label, double margin) {
  const double D = similarity;
  if (label == 0) return {0.5 * D * D, D};
  const double gap = std::max(0.0, margin - D);
  return {0.5 * gap * gap, -gap};
}

void cosine_gradients(std::span<const double> u, std::span<const double> v,
                      std::span<double> du, std::span<double> dv) {
  double dot = 0.0, nu2 = 0.0, nv2 = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu2 += u[i] * u[i];
    nv2 += v[i] * v[i];
  }
  if (nu2 == 0.0 || nv2 == 0.0) {
    std::fill(du.begin(), du.end(), 0.0);
    std::fill(dv.begin(), dv.end(), 0.0);
    return;
  }
  const double nu = std::sqrt(nu2), nv = std::sqrt(nv2);
  const double inv = 1.0 / (nu * nv);
  const double cos = dot * inv;
  for (std::size_t i = 0; i < u.size(); ++i) {
    du[i] = v[i] * inv - cos * u[i] / nu2;
    dv[i] = u[i] * inv - cos * v[i] / nv2;
  }
}

AlignmentLoss alignment_loss(std::span<const std::pair<std::vector<double>, std::vector<double>>> pairs) {
  AlignmentLoss out;
  out.grads.reserve(pairs.size());
  for (const auto& [x, y] : pairs) {
    if (x.size() != y.size()) throw ContractViolation("alignment pair dimension mismatch");
    out.loss += 1.0 - cosine_similarity(x, y);
    std::vector<double> dx(x.size()), dy(y.size());
    cosine_gradients(x, y, dx, dy);
    for (auto& g : dx) g = -g;
    out.grads.push_back(std::move(dx));
  }
  return out;
}

}  // namespace qemine

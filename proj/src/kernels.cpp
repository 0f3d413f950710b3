#include "qemine/kernels.hpp"

#include <cmath>

#include "qemine/error.hpp"

namespace qemine {
namespace {

void copy_row(Matrix& out, std::size_t r, const std::vector<double>& v) {
  std::copy(v.begin(), v.end(), out.row(r).begin());
}

void check_inner(const Matrix& a, const Matrix& b) {
  if (a.cols != b.cols) throw ContractViolation("embedding dimension mismatch between sides");
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline void adam_element(float& p, double g, double& m, double& v, double b1, double b2, double lr,
                         double c1, double c2, double eps) {
  m = b1 * m + (1.0 - b1) * g;
  v = b2 * v + (1.0 - b2) * g * g;
  const double mhat = m / c1;
  const double vhat = v / c2;
  p = static_cast<float>(static_cast<double>(p) - lr * mhat / (std::sqrt(vhat) + eps));
}

}  // namespace

namespace kernels {

Matrix encode_batch_serial(const EncoderModel& model, std::span<const FeatureVector> inputs) {
  Matrix out(inputs.size(), model.dim);
  for (std::size_t i = 0; i < inputs.size(); ++i) copy_row(out, i, encode(model, inputs[i]));
  return out;
}

Matrix encode_batch_omp(const EncoderModel& model, std::span<const FeatureVector> inputs) {
  Matrix out(inputs.size(), model.dim);
  const auto n = static_cast<std::ptrdiff_t>(inputs.size());
  // Index check before the parallel region.
  for (const auto& fv : inputs) {
    for (auto idx : fv.indices) {
      if (idx >= model.features()) throw ContractViolation("feature index outside model dimension");
    }
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    copy_row(out, static_cast<std::size_t>(i), encode(model, inputs[static_cast<std::size_t>(i)]));
  }
  return out;
}

Matrix normalize_rows(const Matrix& m) {
  Matrix out = m;
  for (std::size_t r = 0; r < out.rows; ++r) {
    auto row = out.row(r);
    const double n = std::sqrt(dot(row, row));
    if (n == 0.0) continue;
    for (auto& x : row) x /= n;
  }
  return out;
}

Matrix inner_products_serial(const Matrix& a, const Matrix& b) {
  check_inner(a, b);
  Matrix out(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < b.rows; ++j) out.at(i, j) = dot(a.row(i), b.row(j));
  }
  return out;
}

Matrix inner_products_omp(const Matrix& a, const Matrix& b) {
  check_inner(a, b);
  Matrix out(a.rows, b.rows);
  const auto n = static_cast<std::ptrdiff_t>(a.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    for (std::size_t j = 0; j < b.rows; ++j) out.at(r, j) = dot(a.row(r), b.row(j));
  }
  return out;
}

Matrix pair_scores_serial(const Matrix& a, const Matrix& b, const RegressionHead& head) {
  check_inner(a, b);
  Matrix out(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < b.rows; ++j) out.at(i, j) = regression_head_score(head, a.row(i), b.row(j));
  }
  return out;
}

Matrix pair_scores_omp(const Matrix& a, const Matrix& b, const RegressionHead& head) {
  check_inner(a, b);
  if (head.weights.size() != regression_feature_size(a.cols)) {
    throw ContractViolation("regression head size mismatch");
  }
  Matrix out(a.rows, b.rows);
  const auto n = static_cast<std::ptrdiff_t>(a.rows);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    for (std::size_t j = 0; j < b.rows; ++j) out.at(r, j) = regression_head_score(head, a.row(r), b.row(j));
  }
  return out;
}

void adam_update_serial(std::span<float> params, std::span<const double> grads, std::span<double> m,
                        std::span<double> v, const AdamStep& s) {
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    adam_element(params[i], grads[i], m[i], v[i], s.beta1, s.beta2, s.learningRate, c1, c2, s.epsilon);
  }
}

void adam_update_omp(std::span<float> params, std::span<const double> grads, std::span<double> m,
                     std::span<double> v, const AdamStep& s) {
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  const auto n = static_cast<std::ptrdiff_t>(params.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    adam_element(params[k], grads[k], m[k], v[k], s.beta1, s.beta2, s.learningRate, c1, c2, s.epsilon);
  }
}

}  // namespace kernels

Matrix encode_batch(const EncoderModel& model, std::span<const FeatureVector> inputs, Exec exec) {
  return exec == Exec::kSerial ? kernels::encode_batch_serial(model, inputs)
                               : kernels::encode_batch_omp(model, inputs);
}

Matrix inner_products(const Matrix& a, const Matrix& b, Exec exec) {
  return exec == Exec::kSerial ? kernels::inner_products_serial(a, b) : kernels::inner_products_omp(a, b);
}

Matrix pair_scores(const Matrix& a, const Matrix& b, const RegressionHead& head, Exec exec) {
  return exec == Exec::kSerial ? kernels::pair_scores_serial(a, b, head)
                               : kernels::pair_scores_omp(a, b, head);
}

}  // namespace qemine

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qemine/encoder.hpp"

namespace qemine {

// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  bool operator==(const Matrix&) const = default;
};

// Every kernel below exists twice: a serial reference and an OpenMP variant.
// Both compute each output element with the same scalar code and agree bit
// for bit at any thread count.
enum class Exec { kSerial, kParallel };

namespace kernels {

// One embedding per row.
Matrix encode_batch_serial(const EncoderModel& model, std::span<const FeatureVector> inputs);
Matrix encode_batch_omp(const EncoderModel& model, std::span<const FeatureVector> inputs);

// Rows scaled to unit L2 norm; zero rows stay zero.
Matrix normalize_rows(const Matrix& m);

// (i, j) = <a_i, b_j> over already-normalized rows.
Matrix inner_products_serial(const Matrix& a, const Matrix& b);
Matrix inner_products_omp(const Matrix& a, const Matrix& b);

// (i, j) = regression head score of the embedding pair (a_i, b_j).
Matrix pair_scores_serial(const Matrix& a, const Matrix& b, const RegressionHead& head);
Matrix pair_scores_omp(const Matrix& a, const Matrix& b, const RegressionHead& head);

struct AdamStep {
  double learningRate;
  double beta1;
  double beta2;
  double epsilon;
  long step;  // t >= 1, for bias correction
};

// In-place adaptive-moment update of one parameter block.
void adam_update_serial(std::span<float> params, std::span<const double> grads,
                        std::span<double> m, std::span<double> v, const AdamStep& s);
void adam_update_omp(std::span<float> params, std::span<const double> grads,
                     std::span<double> m, std::span<double> v, const AdamStep& s);

}  // namespace kernels

Matrix encode_batch(const EncoderModel& model, std::span<const FeatureVector> inputs,
                    Exec exec = Exec::kParallel);
Matrix inner_products(const Matrix& a, const Matrix& b, Exec exec = Exec::kParallel);
Matrix pair_scores(const Matrix& a, const Matrix& b, const RegressionHead& head,
                   Exec exec = Exec::kParallel);

}  // namespace qemine

#include <doctest.h>

#include <omp.h>

#include <cmath>

#include "qemine/kernels.hpp"
#include "qemine/rng.hpp"

using namespace qemine;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (auto& x : m.data) x = rng.normal();
  return m;
}

std::vector<FeatureVector> random_inputs(std::size_t n, const FeaturizerConfig& c, Rng& rng) {
  std::vector<FeatureVector> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string s;
    for (std::size_t k = 0, len = 3 + rng.below(30); k < len; ++k)
      s.push_back(rng.below(5) == 0 ? ' ' : static_cast<char>('a' + rng.below(26)));
    out.push_back(featurize(s, c));
  }
  return out;
}

}  // namespace

TEST_CASE("serial and OpenMP kernels agree bit for bit") {
  Rng rng(17);
  FeaturizerConfig fc;
  fc.hashDim = 1024;
  const auto model = EncoderModel::random(fc, 32, 12, 5, 0.3);
  RegressionHead head;
  head.weights.resize(2 * 12 + 1);
  for (auto& w : head.weights) w = static_cast<float>(rng.normal());
  head.bias = 0.25f;

  for (int threads : {1, 3, 8}) {
    omp_set_num_threads(threads);
    for (std::size_t n : {1u, 7u, 64u}) {
      const auto inputs = random_inputs(n, fc, rng);
      const auto es = kernels::encode_batch_serial(model, inputs);
      CHECK(es == kernels::encode_batch_omp(model, inputs));

      const auto a = kernels::normalize_rows(random_matrix(n, 12, rng));
      const auto b = kernels::normalize_rows(random_matrix(n + 3, 12, rng));
      CHECK(kernels::inner_products_serial(a, b) == kernels::inner_products_omp(a, b));

      const auto ea = random_matrix(n, 12, rng), eb = random_matrix(n + 2, 12, rng);
      CHECK(kernels::pair_scores_serial(ea, eb, head) == kernels::pair_scores_omp(ea, eb, head));

      std::vector<float> p1(n * 50), p2;
      std::vector<double> g(p1.size()), m1(p1.size()), v1(p1.size());
      for (auto& x : p1) x = static_cast<float>(rng.normal());
      for (auto& x : g) x = rng.normal();
      p2 = p1;
      auto m2 = m1, v2 = v1;
      for (long t = 1; t <= 3; ++t) {
        kernels::AdamStep s{0.01, 0.9, 0.999, 1e-8, t};
        kernels::adam_update_serial(p1, g, m1, v1, s);
        kernels::adam_update_omp(p2, g, m2, v2, s);
      }
      CHECK(p1 == p2);
      CHECK(m1 == m2);
      CHECK(v1 == v2);
    }
  }
  omp_set_num_threads(omp_get_num_procs());
}

TEST_CASE("kernels match their scalar definitions") {
  Rng rng(4);
  FeaturizerConfig fc;
  fc.hashDim = 512;
  const auto model = EncoderModel::random(fc, 20, 6, 9, 0.4);
  const auto inputs = random_inputs(10, fc, rng);
  const auto e = encode_batch(model, inputs);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto row = encode(model, inputs[i]);
    for (std::size_t j = 0; j < row.size(); ++j) CHECK(e.at(i, j) == row[j]);
  }

  const auto a = random_matrix(10, 6, rng), b = random_matrix(10, 6, rng);
  const auto sim = inner_products(kernels::normalize_rows(a), kernels::normalize_rows(b));
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 10; ++j)
      CHECK(sim.at(i, j) == doctest::Approx(cosine_similarity(a.row(i), b.row(j))).epsilon(1e-12));

  RegressionHead head;
  head.weights.assign(13, 0.1f);
  const auto ps = pair_scores(a, b, head);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 10; ++j) CHECK(ps.at(i, j) == regression_head_score(head, a.row(i), b.row(j)));
}

TEST_CASE("normalize_rows keeps zero rows") {
  Matrix m(2, 3);
  m.at(1, 0) = 3;
  m.at(1, 1) = 4;
  const auto n = kernels::normalize_rows(m);
  CHECK(n.at(0, 0) == 0.0);
  CHECK(n.at(1, 0) == doctest::Approx(0.6));
  CHECK(n.at(1, 1) == doctest::Approx(0.8));
}

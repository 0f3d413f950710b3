#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numeric>

#include "qemine/encoder.hpp"
#include "qemine/error.hpp"
#include "qemine/rng.hpp"
#include "support.hpp"

using namespace qemine;

namespace {

EncoderModel small_model(std::uint64_t seed) {
  FeaturizerConfig c;
  c.hashDim = 256;
  auto m = EncoderModel::random(c, 16, 8, seed, 0.5);
  Rng rng(seed + 1);
  for (auto& b : m.b1) b = static_cast<float>(0.2 * rng.normal());
  for (auto& b : m.b2) b = static_cast<float>(0.2 * rng.normal());
  return m;
}

// Dense straight-line recomputation.
std::vector<double> encode_oracle(const EncoderModel& m, const FeatureVector& fv) {
  const std::size_t F = m.features();
  std::vector<double> x(F, 0.0);
  for (std::size_t n = 0; n < fv.nnz(); ++n) x[fv.indices[n]] = fv.values[n];
  std::vector<double> h(m.hidden);
  for (std::size_t i = 0; i < m.hidden; ++i) {
    double a = m.b1[i];
    for (std::size_t k = 0; k < F; ++k) a += static_cast<double>(m.W1[i * F + k]) * x[k];
    h[i] = std::tanh(a);
  }
  std::vector<double> e(m.dim);
  for (std::size_t j = 0; j < m.dim; ++j) {
    double a = m.b2[j];
    for (std::size_t i = 0; i < m.hidden; ++i) a += static_cast<double>(m.W2[j * m.hidden + i]) * h[i];
    e[j] = a;
  }
  return e;
}

}  // namespace

TEST_CASE("encode matches the dense oracle") {
  const auto m = small_model(3);
  for (const char* text : {"hello world", "a", "zzz yyy xxx", ""}) {
    const auto fv = featurize(text, m.config);
    const auto got = encode(m, fv);
    const auto want = encode_oracle(m, fv);
    REQUIRE(got.size() == want.size());
    for (std::size_t j = 0; j < got.size(); ++j) CHECK(got[j] == doctest::Approx(want[j]).epsilon(1e-12));
    CHECK(got == encode(m, fv));
  }
}

TEST_CASE("zero input gives W2 tanh(b1) + b2") {
  const auto m = small_model(4);
  const auto e = encode(m, FeatureVector{});
  for (std::size_t j = 0; j < m.dim; ++j) {
    double a = m.b2[j];
    for (std::size_t i = 0; i < m.hidden; ++i) a += static_cast<double>(m.W2[j * m.hidden + i]) * std::tanh(static_cast<double>(m.b1[i]));
    CHECK(e[j] == doctest::Approx(a).epsilon(1e-12));
  }
}

TEST_CASE("encode rejects out-of-range feature indices") {
  const auto m = small_model(5);
  FeatureVector fv;
  fv.indices = {300};
  fv.values = {1.0};
  CHECK_THROWS_AS(encode(m, fv), ContractViolation);
}

TEST_CASE("cosine similarity") {
  const std::vector<double> a{1, 0}, b{0, 1}, c{1, 2}, d{2, 4}, z{0, 0};
  CHECK(cosine_similarity(a, a) == 1.0);
  CHECK(cosine_similarity(a, b) == 0.0);
  CHECK(cosine_similarity(c, d) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine_similarity(a, z) == 0.0);
  CHECK_THROWS_AS(cosine_similarity(a, std::vector<double>{1, 2, 3}), ContractViolation);

  Rng rng(8);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> u(5), v(5);
    for (auto& x : u) x = rng.normal();
    for (auto& x : v) x = rng.normal();
    const double alpha = 0.1 + rng.uniform() * 10, beta = 0.1 + rng.uniform() * 10;
    std::vector<double> su = u, sv = v;
    for (auto& x : su) x *= alpha;
    for (auto& x : sv) x *= beta;
    const double cuv = cosine_similarity(u, v);
    CHECK(cuv >= -1.0);
    CHECK(cuv <= 1.0);
    CHECK(cosine_similarity(u, u) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(cuv == cosine_similarity(v, u));
    CHECK(cosine_similarity(su, sv) == doctest::Approx(cuv).epsilon(1e-12));
  }
}

TEST_CASE("forward heads") {
  const auto m = small_model(6);
  Rng rng(2);
  const auto heads = HeadSet::random(m.dim, rng, 0.5);

  SUBCASE("identical sentences use |u-v| = 0 and cos = 1") {
    const auto u = encode_text(m, "same text");
    double z = heads.qe.bias + heads.qe.weights[2 * m.dim];
    for (std::size_t i = 0; i < m.dim; ++i) z += heads.qe.weights[m.dim + i] * u[i] * u[i];
    const auto p = forward_heads(m, heads, "same text", "same text", Task::kQE);
    CHECK(p.score == doctest::Approx(logistic(z)).epsilon(1e-12));
  }
  SUBCASE("zero heads give 0.5") {
    const auto zero = HeadSet::zeros(m.dim);
    CHECK(forward_heads(m, zero, "a b", "c d", Task::kQE).score == 0.5);
    CHECK(forward_heads(m, zero, "a b", "c d", Task::kSTS).score == 0.5);
  }
  SUBCASE("outputs stay in range") {
    for (int t = 0; t < 30; ++t) {
      const std::string a = "w" + std::to_string(rng.below(1000)), b = "v" + std::to_string(rng.below(1000));
      const auto q = forward_heads(m, heads, a, b, Task::kQE).score;
      CHECK(q > 0.0);
      CHECK(q < 1.0);
      const auto n = forward_heads(m, heads, a, b, Task::kNLI).probs;
      for (double p : n) CHECK(p >= 0.0);
      CHECK(std::abs(n[0] + n[1] + n[2] - 1.0) <= 1e-12);
    }
  }
  SUBCASE("head score equals the feature dot product") {
    const auto u = encode_text(m, "left side"), v = encode_text(m, "right side");
    const auto f = regression_features(u, v);
    double z = heads.qe.bias;
    for (std::size_t i = 0; i < f.size(); ++i) z += heads.qe.weights[i] * f[i];
    CHECK(regression_head_score(heads.qe, u, v) == doctest::Approx(logistic(z)).epsilon(1e-14));
  }
}

TEST_CASE("model file round trip") {
  testing::TempDir dir;
  const auto m = small_model(7);
  Rng rng(3);
  const auto heads = HeadSet::random(m.dim, rng, 0.3);
  save_model(dir / "m.qem", m, heads);
  const auto loaded = load_model(dir / "m.qem");
  CHECK(loaded.model == m);
  CHECK(loaded.heads == heads);
  save_model(dir / "m2.qem", loaded.model, loaded.heads);
  CHECK(testing::read_file(dir / "m.qem") == testing::read_file(dir / "m2.qem"));
}

TEST_CASE("model file corruption") {
  const auto m = small_model(8);
  const auto heads = HeadSet::zeros(m.dim);
  auto bytes = serialize_model(m, heads);

  SUBCASE("bad magic") {
    bytes[0] = 'X';
    CHECK_THROWS_AS(deserialize_model(bytes), FormatError);
  }
  SUBCASE("bad version") {
    bytes[4] = 9;
    CHECK_THROWS_AS(deserialize_model(bytes), FormatError);
  }
  SUBCASE("short payload") {
    bytes.resize(bytes.size() / 2);
    CHECK_THROWS_AS(deserialize_model(bytes), CorruptionError);
  }
  SUBCASE("flipped weight bit") {
    bytes[bytes.size() / 2] ^= 0x10;
    CHECK_THROWS_AS(deserialize_model(bytes), CorruptionError);
  }
  SUBCASE("trailing bytes") {
    bytes.push_back(0);
    CHECK_THROWS_AS(deserialize_model(bytes), CorruptionError);
  }
}

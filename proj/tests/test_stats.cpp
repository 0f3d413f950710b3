#include <doctest.h>

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <sstream>

#include "qemine/error.hpp"
#include "qemine/rng.hpp"
#include "qemine/stats.hpp"
#include "support.hpp"

using namespace qemine;

namespace {

// Williams t from the published formula, p from Boost's Student t.
WilliamsResult williams_oracle(double r12, double r13, double r23, int n) {
  const double K = 1 - r12 * r12 - r13 * r13 - r23 * r23 + 2 * r12 * r13 * r23;
  const double denom = 2 * K * (n - 1) / (n - 3) + (r13 + r23) * (r13 + r23) / 4 * std::pow(1 - r12, 3);
  const double t = (r13 - r23) * std::sqrt((n - 1) * (1 + r12) / denom);
  boost::math::students_t dist(n - 3);
  return {t, n - 3, boost::math::cdf(boost::math::complement(dist, t))};
}

}  // namespace

TEST_CASE("pearson") {
  const std::vector<double> x{1, 2, 3, 4};
  CHECK(pearson(x, std::vector<double>{3, 5, 7, 9}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pearson(x, std::vector<double>{-1, -2, -3, -4}) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(pearson(x, std::vector<double>{1, 3, 2, 4}) == doctest::Approx(0.8).epsilon(1e-14));
  CHECK_THROWS_AS(pearson(x, std::vector<double>{2, 2, 2, 2}), RangeError);
  CHECK_THROWS_AS(pearson(x, std::vector<double>{1, 2, 3}), ContractViolation);
}

TEST_CASE("pearson is invariant under positive affine maps") {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> a(30), b(30), c(30);
    for (std::size_t i = 0; i < 30; ++i) {
      a[i] = rng.normal();
      b[i] = a[i] + rng.normal();
    }
    const double s = 0.1 + 5 * rng.uniform(), o = rng.normal() * 3;
    for (std::size_t i = 0; i < 30; ++i) c[i] = s * b[i] + o;
    CHECK(std::abs(pearson(a, b) - pearson(a, c)) <= 1e-12);
  }
}

TEST_CASE("williams matches the reference computation") {
  Rng rng(77);
  int checked = 0;
  while (checked < 20) {
    const double r12 = -0.9 + 1.8 * rng.uniform();
    const double r13 = -0.9 + 1.8 * rng.uniform();
    const double r23 = -0.9 + 1.8 * rng.uniform();
    const int n = 4 + static_cast<int>(rng.below(500));
    const double K = 1 - r12 * r12 - r13 * r13 - r23 * r23 + 2 * r12 * r13 * r23;
    if (K < 0) {
      CHECK_THROWS_AS(williams_test(r12, r13, r23, n), ContractViolation);
      continue;
    }
    const auto got = williams_test(r12, r13, r23, n);
    const auto want = williams_oracle(r12, r13, r23, n);
    CHECK(got.df == want.df);
    CHECK(std::abs(got.t - want.t) <= 1e-6);
    CHECK(std::abs(got.p - want.p) <= 1e-6);
    ++checked;
  }
}

TEST_CASE("williams edge cases") {
  const auto w = williams_test(0.3, 0.5, 0.5, 50);
  CHECK(w.t == 0.0);
  CHECK(w.p == 0.5);
  const auto a = williams_test(0.4, 0.7, 0.5, 40);
  const auto b = williams_test(0.4, 0.5, 0.7, 40);
  CHECK(a.t == doctest::Approx(-b.t).epsilon(1e-15));
  CHECK_THROWS_AS(williams_test(0.4, 0.7, 0.5, 3), ContractViolation);
  CHECK_THROWS_AS(williams_test(0.99, 0.99, -0.99, 40), ContractViolation);
  CHECK_THROWS_AS(williams_test(1.0, 0.5, 0.5, 40), ContractViolation);
}

TEST_CASE("t tail") {
  for (double df : {1.0, 2.0, 7.0, 30.0}) CHECK(t_tail(0.0, df) == 0.5);
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    const double t = rng.normal() * 4, df = 1 + static_cast<double>(rng.below(60));
    CHECK(std::abs(t_tail(t, df) + t_tail(-t, df) - 1.0) <= 1e-12);
    boost::math::students_t dist(df);
    CHECK(t_tail(t, df) == doctest::Approx(boost::math::cdf(boost::math::complement(dist, t))).epsilon(1e-9));
  }
  CHECK(std::abs(t_tail(2.0, 10) - testing::t_tail_integral(2.0, 10)) <= 1e-4);
  CHECK(std::abs(t_tail(2.0, 10) - 0.0367) <= 1e-4);
  // p decreases as t grows
  double prev = 1.0;
  for (double t = -5; t <= 5; t += 0.25) {
    const double p = t_tail(t, 12);
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("histogram boundary rules") {
  auto counts = [](const std::vector<HistogramBin>& bins) {
    std::vector<std::size_t> c;
    for (const auto& b : bins) c.push_back(b.count);
    return c;
  };
  CHECK(counts(score_histogram(std::vector<double>{0, 0.5, 1}, 2)) == std::vector<std::size_t>{1, 2});
  CHECK(counts(score_histogram(std::vector<double>(7, 1.0), 4)) == std::vector<std::size_t>{0, 0, 0, 7});
  CHECK_THROWS_AS(score_histogram(std::vector<double>{1.5}, 4), RangeError);
  CHECK_THROWS_AS(score_histogram(std::vector<double>{-0.01}, 4), RangeError);

  // Every edge k/bins lands in bin k.
  for (int bins : {3, 7, 10, 13}) {
    for (int k = 0; k < bins; ++k) {
      const std::vector<double> s{static_cast<double>(k) / bins};
      const auto c = counts(score_histogram(s, bins));
      CHECK(c[k] == 1);
    }
  }
}

TEST_CASE("uniform histogram stays within five sigma") {
  Rng rng(2024);
  std::vector<double> s(1000);
  for (auto& x : s) x = rng.uniform();
  const auto bins = score_histogram(s, 10);
  const double sigma = std::sqrt(1000 * 0.1 * 0.9);
  std::size_t total = 0;
  for (const auto& b : bins) {
    CHECK(std::abs(static_cast<double>(b.count) - 100.0) <= 5 * sigma);
    total += b.count;
  }
  CHECK(total == 1000);
  std::ostringstream csv;
  write_histogram_csv(csv, bins);
  CHECK(csv.str().rfind("bin_lo,bin_hi,count\n0,0.1,", 0) == 0);
}

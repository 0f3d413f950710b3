#include <doctest.h>

#include <set>

#include "qemine/augment.hpp"
#include "qemine/error.hpp"
#include "qemine/rng.hpp"
#include "support.hpp"

using namespace qemine;

namespace {

std::vector<QERecord> records(std::size_t n, std::uint64_t seed, double floor = 0.0) {
  Rng rng(seed);
  std::vector<QERecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({"src" + std::to_string(i), "tgt" + std::to_string(i), floor + (1 - floor) * rng.uniform()});
  }
  return out;
}

}  // namespace

TEST_CASE("filtration counts") {
  std::vector<QERecord> r{{"a", "A", 0.9}, {"b", "B", 0.8}, {"c", "C", 1.0}, {"d", "D", 0.7}};
  auto d = augment_filtration(r, AugmentConfig{3, 0.7, 1});
  CHECK(d.positives.size() == 4);
  CHECK(d.negatives.size() == 12);

  r[1].score = 0.6;
  d = augment_filtration(r, AugmentConfig{3, 0.7, 1});
  CHECK(d.positives.size() == 3);
  CHECK(d.sampledCount() == 12);
  CHECK(d.demotedCount() == 1);
  CHECK(d.negatives.size() == 13);
  CHECK(d.negatives.back() == LabeledPair{"b", "B", 0.0});
  for (const auto& p : d.positives) CHECK(p.label == 1.0);
  for (const auto& p : d.negatives) CHECK(p.label == 0.0);
}

TEST_CASE("too few records") {
  const auto r = records(3, 1);
  CHECK_THROWS_AS(augment_filtration(r, AugmentConfig{3, 0.7, 1}), ConfigError);
  CHECK_THROWS_AS(augment_scorer(r, AugmentConfig{3, 0.7, 1}), ConfigError);
  CHECK_NOTHROW(augment_scorer(r, AugmentConfig{2, 0.7, 1}));
}

TEST_CASE("scorer mode keeps scores and zeroes negatives") {
  const auto r = records(20, 4);
  const auto d = augment_scorer(r, AugmentConfig{3, 0.7, 9});
  CHECK(d.labelKind == LabelKind::kContinuous);
  REQUIRE(d.positives.size() == r.size());
  for (std::size_t i = 0; i < r.size(); ++i) CHECK(d.positives[i] == LabeledPair{r[i].source, r[i].target, r[i].score});
  CHECK(d.negatives.size() == 60);
  for (const auto& p : d.negatives) CHECK(p.label == 0.0);
}

TEST_CASE("sampling never pairs a sentence with itself") {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const std::size_t count = 4 + seed % 13;
    const int n = 1 + static_cast<int>(seed % 3);
    const auto s = sample_negative_targets(count, n, seed);
    REQUIRE(s.size() == count);
    for (std::size_t i = 0; i < count; ++i) {
      REQUIRE(s[i].size() == static_cast<std::size_t>(n));
      std::set<std::size_t> distinct(s[i].begin(), s[i].end());
      CHECK(distinct.size() == s[i].size());
      CHECK(!distinct.contains(i));
      for (auto j : s[i]) CHECK(j < count);
    }
  }
}

TEST_CASE("sampling is roughly uniform") {
  // 10 records, n=1: each of the 9 other targets should be drawn about equally.
  std::vector<std::size_t> hits(10, 0);
  for (std::uint64_t seed = 0; seed < 9000; ++seed) hits[sample_negative_targets(10, 1, seed)[0][0]]++;
  CHECK(hits[0] == 0);
  for (std::size_t j = 1; j < 10; ++j) CHECK(std::abs(static_cast<double>(hits[j]) - 1000.0) < 5 * std::sqrt(1000.0));
}

TEST_CASE("augmentation invariants over random inputs") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto r = records(5 + seed, seed);
    const int n = 1 + static_cast<int>(seed % 4);
    const AugmentConfig c{n, 0.7, seed};
    for (bool binary : {true, false}) {
      const auto d = binary ? augment_filtration(r, c) : augment_scorer(r, c);
      CHECK(d.sampledCount() == static_cast<std::size_t>(n) * r.size());
      for (std::size_t k = 0; k < d.sampledCount(); ++k) {
        const auto [i, j] = d.sampledOrigins[k];
        CHECK(i != j);
        CHECK(d.negatives[k].source == r[i].source);
        CHECK(d.negatives[k].target == r[j].target);
      }
      const auto again = binary ? augment_filtration(r, c) : augment_scorer(r, c);
      CHECK(again.positives == d.positives);
      CHECK(again.negatives == d.negatives);
      if (binary) {
        std::size_t low = 0;
        for (const auto& q : r) low += q.score < 0.7;
        CHECK(d.demotedCount() == low);
        CHECK(d.positives.size() + low == r.size());
        for (std::size_t k = d.sampledCount(); k < d.negatives.size(); ++k) {
          const auto& p = d.negatives[k];
          CHECK(std::count(d.positives.begin(), d.positives.end(), LabeledPair{p.source, p.target, 1.0}) == 0);
          CHECK(std::count(d.negatives.begin() + d.sampledCount(), d.negatives.end(), p) == 1);
        }
      } else {
        CHECK(d.demotedCount() == 0);
      }
    }
  }
}

TEST_CASE("saved augmentation is deterministic") {
  testing::TempDir dir;
  const auto r = records(50, 3);
  save_augmented(dir / "a.tsv", augment_scorer(r, AugmentConfig{3, 0.7, 42}));
  save_augmented(dir / "b.tsv", augment_scorer(r, AugmentConfig{3, 0.7, 42}));
  save_augmented(dir / "c.tsv", augment_scorer(r, AugmentConfig{3, 0.7, 43}));
  CHECK(testing::read_file(dir / "a.tsv") == testing::read_file(dir / "b.tsv"));
  CHECK(testing::read_file(dir / "a.tsv") != testing::read_file(dir / "c.tsv"));
  const auto loaded = load_qe(dir / "a.tsv");
  CHECK(loaded.size() == 200);
}

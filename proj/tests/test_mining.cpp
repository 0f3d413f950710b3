#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

#include "qemine/error.hpp"
#include "qemine/mining.hpp"
#include "qemine/rng.hpp"
#include "support.hpp"

using namespace qemine;

namespace {

struct Fixture {
  EncoderModel model;
  HeadSet heads;

  explicit Fixture(std::uint64_t seed, std::uint32_t F = 512) {
    FeaturizerConfig c;
    c.hashDim = F;
    model = EncoderModel::random(c, 32, 8, seed, 0.5);
    Rng rng(seed + 100);
    heads = HeadSet::random(8, rng, 0.5);
  }
  Scorer scorer() const { return {model, heads.qe}; }
};

std::string random_sentence(Rng& rng, char lo = 'a', int span = 26) {
  std::string s;
  for (std::size_t w = 0, n = 2 + rng.below(5); w < n; ++w) {
    if (w) s.push_back(' ');
    for (std::size_t k = 0, len = 2 + rng.below(5); k < len; ++k)
      s.push_back(static_cast<char>(lo + rng.below(static_cast<std::uint64_t>(span))));
  }
  return s;
}

BuccCorpus random_corpus(std::size_t na, std::size_t nb, Rng& rng) {
  BuccCorpus c;
  for (std::size_t i = 0; i < na; ++i) c.sideA.add("a" + std::to_string(i), random_sentence(rng));
  for (std::size_t j = 0; j < nb; ++j) c.sideB.add("b" + std::to_string(j), random_sentence(rng));
  return c;
}

std::vector<std::vector<double>> to_rows(const Matrix& m) {
  std::vector<std::vector<double>> out(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) out[i].assign(m.row(i).begin(), m.row(i).end());
  return out;
}

std::vector<std::string> texts(const BuccSide& side) {
  std::vector<std::string> out;
  for (const auto& e : side.entries()) out.push_back(e.sentence);
  return out;
}

}  // namespace

TEST_CASE("score matrix equals independent scorer calls") {
  Fixture f(1);
  Rng rng(2);
  std::vector<std::string> refs, hyps;
  for (int i = 0; i < 5; ++i) {
    refs.push_back(random_sentence(rng));
    hyps.push_back(random_sentence(rng));
  }
  const auto m = score_matrix(f.scorer(), refs, hyps);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      CHECK(m.values.at(i, j) == doctest::Approx(forward_heads(f.model, f.heads, refs[i], hyps[j], Task::kQE).score)
                                     .epsilon(1e-14));
  CHECK(m.values == score_matrix(f.scorer(), refs, hyps, Exec::kSerial).values);
  const auto one = score_matrix(f.scorer(), std::vector<std::string>{refs[0]}, std::vector<std::string>{hyps[0]});
  CHECK(one.values.rows == 1);
  CHECK(one.values.at(0, 0) == doctest::Approx(forward_heads(f.model, f.heads, refs[0], hyps[0], Task::kQE).score));
}

TEST_CASE("tatoeba argmax") {
  Matrix id(4, 4);
  for (std::size_t i = 0; i < 4; ++i) id.at(i, i) = 1.0;
  CHECK(mine_tatoeba(id) == std::vector<std::size_t>{0, 1, 2, 3});

  Matrix tie(1, 3);
  tie.data = {0.2, 0.9, 0.9};
  CHECK(mine_tatoeba(tie) == std::vector<std::size_t>{1});

  Rng rng(5);
  Matrix r(20, 20);
  for (auto& x : r.data) x = rng.uniform();
  const auto picks = mine_tatoeba(r);
  Matrix mono = r;
  for (auto& x : mono.data) x = std::exp(3 * x) - 7;
  CHECK(mine_tatoeba(mono) == picks);
  for (std::size_t i = 0; i < 20; ++i) {
    const auto row = r.row(i);
    CHECK(picks[i] == static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin()));
  }
}

TEST_CASE("tatoeba accuracy") {
  CHECK(tatoeba_accuracy(std::vector<std::size_t>{0, 1, 2}) == 1.0);
  CHECK(tatoeba_accuracy(std::vector<std::size_t>{1, 2, 0}) == 0.0);
  CHECK(tatoeba_accuracy(std::vector<std::size_t>{0, 2, 2, 3}) == 0.75);
}

TEST_CASE("embed and similarity") {
  Fixture f(3);
  Rng rng(4);
  std::vector<std::string> a, b;
  for (int i = 0; i < 10; ++i) {
    a.push_back(random_sentence(rng));
    b.push_back(random_sentence(rng));
  }
  b[3] = a[7];
  const auto sim = embed_and_similarity(f.model, a, b);
  CHECK(std::abs(sim.at(7, 3) - 1.0) <= 1e-6);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 10; ++j)
      CHECK(std::abs(sim.at(i, j) - cosine_similarity(encode_text(f.model, a[i]), encode_text(f.model, b[j]))) <=
            1e-6);
}

TEST_CASE("top-n candidates") {
  Matrix m(1, 3);
  m.data = {0.1, 0.5, 0.3};
  auto c = topn_candidates(m, 2);
  CHECK(c.perRow[0] == std::vector<std::size_t>{1, 2});
  c = topn_candidates(m, 5);
  CHECK(c.perRow[0].size() == 3);

  Rng rng(8);
  Matrix r(30, 30);
  for (auto& x : r.data) x = std::round(rng.uniform() * 20) / 20;  // ties on purpose
  c = topn_candidates(r, 5);
  for (std::size_t i = 0; i < 30; ++i) {
    std::vector<std::size_t> idx(30);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto x, auto y) { return r.at(i, x) > r.at(i, y); });
    idx.resize(5);
    CHECK(c.perRow[i] == idx);
  }
  for (std::size_t j = 0; j < 30; ++j) {
    std::vector<std::size_t> idx(30);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto x, auto y) { return r.at(x, j) > r.at(y, j); });
    idx.resize(5);
    CHECK(c.perCol[j] == idx);
  }
}

TEST_CASE("two-stage mining equals brute force with full candidates") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    Rng rng(seed);
    Fixture f(seed + 10);
    const std::size_t na = 5 + rng.below(30), nb = 5 + rng.below(30);
    const auto corpus = random_corpus(na, nb, rng);
    MiningConfig c;
    c.topN = std::max(na, nb);
    c.threshold = 0.0;
    const auto got = mine_bucc(corpus, f.model, f.scorer(), c);
    const auto full = score_matrix(f.scorer(), texts(corpus.sideA), texts(corpus.sideB));
    const auto want = testing::mutual_best_oracle(to_rows(full.values), 0.0);
    std::set<std::pair<std::size_t, std::size_t>> have;
    for (const auto& p : got.pairs) have.emplace(*corpus.sideA.position(p.idA), *corpus.sideB.position(p.idB));
    CHECK(have == want);
  }
}

TEST_CASE("mining properties") {
  Rng rng(31);
  Fixture f(32);
  const auto corpus = random_corpus(25, 20, rng);
  MiningConfig c;
  c.topN = 4;

  SUBCASE("raising the threshold never adds pairs") {
    std::set<std::pair<std::string, std::string>> prev;
    bool first = true;
    for (double t = 0.0; t <= 1.0; t += 0.05) {
      c.threshold = t;
      const auto r = mine_bucc(corpus, f.model, f.scorer(), c);
      std::set<std::pair<std::string, std::string>> now;
      for (const auto& p : r.pairs) {
        CHECK(p.score >= t);
        now.emplace(p.idA, p.idB);
      }
      if (!first) CHECK(std::includes(prev.begin(), prev.end(), now.begin(), now.end()));
      prev = now;
      first = false;
    }
  }
  SUBCASE("threshold 1 with scores below 1 is empty") {
    c.threshold = 1.0;
    CHECK(mine_bucc(corpus, f.model, f.scorer(), c).pairs.empty());
  }
  SUBCASE("swapping sides transposes the result") {
    c.threshold = 0.2;
    BuccCorpus swapped;
    swapped.sideA = corpus.sideB;
    swapped.sideB = corpus.sideA;
    const auto r1 = mine_bucc(corpus, f.model, f.scorer(), c);
    const auto r2 = mine_bucc(swapped, f.model, f.scorer(), c);
    std::set<std::pair<std::string, std::string>> s1, s2;
    for (const auto& p : r1.pairs) s1.emplace(p.idA, p.idB);
    for (const auto& p : r2.pairs) s2.emplace(p.idB, p.idA);
    CHECK(s1 == s2);
  }
  SUBCASE("serial and parallel paths agree") {
    c.threshold = 0.1;
    const auto a = mine_bucc(corpus, f.model, f.scorer(), c);
    c.exec = Exec::kSerial;
    const auto b = mine_bucc(corpus, f.model, f.scorer(), c);
    CHECK(a.pairs == b.pairs);
  }
  SUBCASE("auto threshold needs a training corpus") {
    c.threshold.reset();
    CHECK_THROWS_AS(mine_bucc(corpus, f.model, f.scorer(), c), ConfigError);
  }
}

TEST_CASE("planted pairs are recovered exactly") {
  FeaturizerConfig fc;
  fc.hashDim = 4096;
  fc.ngramOrders = {2, 3};  // no marker-only grams, so disjoint alphabets share nothing
  const auto model = EncoderModel::random(fc, 128, 64, 5, 0.1);
  HeadSet heads = HeadSet::zeros(64);
  heads.qe.weights[2 * 64] = 20.0f;  // cosine feature
  heads.qe.bias = -10.0f;
  const Scorer scorer{model, heads.qe};

  Rng rng(6);
  BuccCorpus corpus;
  // Distractors draw letters from disjoint ranges on each side.
  for (int i = 0; i < 30; ++i) corpus.sideA.add("a" + std::to_string(i), random_sentence(rng, 'a', 8));
  for (int i = 0; i < 30; ++i) corpus.sideB.add("b" + std::to_string(i), random_sentence(rng, 'k', 8));
  std::set<std::pair<std::string, std::string>> planted;
  for (int k = 0; k < 5; ++k) {
    const auto s = random_sentence(rng, 'u', 6);
    corpus.sideA.add("pa" + std::to_string(k), s);
    corpus.sideB.add("pb" + std::to_string(k), s);
    planted.emplace("pa" + std::to_string(k), "pb" + std::to_string(k));
  }
  MiningConfig c;
  c.topN = 10;
  c.threshold = 0.999;
  const auto r = mine_bucc(corpus, model, scorer, c);
  std::set<std::pair<std::string, std::string>> got;
  for (const auto& p : r.pairs) got.emplace(p.idA, p.idB);
  CHECK(got == planted);
}

TEST_CASE("f1 score") {
  std::set<std::pair<std::size_t, std::size_t>> g{{0, 0}, {1, 1}, {2, 2}, {3, 3}};
  auto prf = f1_score(g, g);
  CHECK(prf.precision == 1.0);
  CHECK(prf.recall == 1.0);
  CHECK(prf.f1 == 1.0);
  prf = f1_score(std::set<std::pair<std::size_t, std::size_t>>{{0, 0}, {1, 2}}, g);
  CHECK(prf.precision == 0.5);
  CHECK(prf.recall == 0.25);
  CHECK(prf.f1 == doctest::Approx(1.0 / 3));
  prf = f1_score(std::set<std::pair<std::size_t, std::size_t>>{}, g);
  CHECK(prf.f1 == 0.0);
}

TEST_CASE("threshold tuning") {
  SUBCASE("single candidate equal to gold") {
    const std::vector<ScoredPair> one{{0, 0, 0.637}};
    const double t = tune_threshold(one, 1, 1, {{0, 0}});
    CHECK(t == 0.637);
  }
  SUBCASE("empty gold") {
    const std::vector<ScoredPair> one{{0, 0, 0.5}};
    CHECK_THROWS_AS(tune_threshold(one, 1, 1, {}), ConfigError);
  }
  SUBCASE("optimal against the exhaustive sweep") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(seed);
      const std::size_t na = 5 + rng.below(20), nb = 5 + rng.below(20);
      std::vector<ScoredPair> cands;
      for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < nb; ++j)
          if (rng.below(3) == 0) cands.push_back({i, j, rng.uniform()});
      std::set<std::pair<std::size_t, std::size_t>> gold;
      for (std::size_t k = 0; k < 1 + rng.below(6); ++k) gold.emplace(rng.below(na), rng.below(nb));
      const double t = tune_threshold(cands, na, nb, gold);
      auto f1_at = [&](double th) {
        std::set<std::pair<std::size_t, std::size_t>> s;
        for (const auto& p : select_mutual_best(cands, na, nb, th).pairs) s.emplace(p.a, p.b);
        return f1_score(s, gold).f1;
      };
      double best = 0.0;
      for (int k = 0; k <= 100; ++k) best = std::max(best, f1_at(k / 100.0));
      for (const auto& p : cands) best = std::max(best, f1_at(p.score));
      CHECK(f1_at(t) == best);
    }
  }
}

TEST_CASE("mining output format") {
  MiningResult r;
  r.pairs = {{"a-1", "b-2", 0.75}, {"a-3", "b-1", 0.5}};
  std::ostringstream out;
  write_mining_tsv(out, r);
  CHECK(out.str() == "a-1\tb-2\t0.75\na-3\tb-1\t0.5\n");
}

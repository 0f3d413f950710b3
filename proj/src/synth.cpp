#include "qemine/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <set>

#include "qemine/error.hpp"
#include "qemine/rng.hpp"

namespace qemine {
namespace {

constexpr std::uint64_t kVocabStream = 600;
constexpr std::uint64_t kQeStream = 601;
constexpr std::uint64_t kTatoebaStream = 602;
constexpr std::uint64_t kBuccStream = 603;
constexpr std::uint64_t kParallelStream = 604;
constexpr std::uint64_t kStsStream = 605;
constexpr std::uint64_t kNliStream = 606;

std::string random_word(Rng& rng) {
  const std::size_t len = 3 + rng.below(5);
  std::string w(len, 'a');
  for (auto& c : w) c = static_cast<char>('a' + rng.below(26));
  return w;
}

std::vector<std::string> fresh_words(std::size_t count, Rng& rng, std::set<std::string>& used) {
  std::vector<std::string> out;
  out.reserve(count);
  while (out.size() < count) {
    auto w = random_word(rng);
    if (used.insert(w).second) out.push_back(std::move(w));
  }
  return out;
}

std::string join(const std::vector<std::string>& words, const std::vector<std::size_t>& idx) {
  std::string out;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (k) out.push_back(' ');
    out += words[idx[k]];
  }
  return out;
}

std::string side_id(char side, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%c-%06zu", side, i);
  return buf;
}

}  // namespace

void SynthConfig::validate() const {
  if (vocabularySize < 2) throw ConfigError("vocabulary size must be >= 2");
  if (minLength < 1 || maxLength < minLength) throw ConfigError("invalid sentence length range");
  if (!(corruptionRate >= 0.0 && corruptionRate <= 1.0)) throw ConfigError("corruption rate must lie in [0,1]");
}

SynthLanguage::SynthLanguage(const SynthConfig& config) : config_(config) {
  config.validate();
  Rng rng = Rng::derive(config.seed, kVocabStream);
  std::set<std::string> used;
  source_ = fresh_words(config.vocabularySize, rng, used);
  target_ = fresh_words(config.vocabularySize, rng, used);
  noise_ = fresh_words(config.vocabularySize, rng, used);
}

std::vector<std::size_t> SynthLanguage::sample_sentence(Rng& rng) const {
  const std::size_t len = config_.minLength + rng.below(config_.maxLength - config_.minLength + 1);
  std::vector<std::size_t> words(len);
  for (auto& w : words) w = rng.below(source_.size());
  return words;
}

std::string SynthLanguage::render_source(const std::vector<std::size_t>& words) const { return join(source_, words); }

std::string SynthLanguage::render_target(const std::vector<std::size_t>& words) const { return join(target_, words); }

std::pair<std::string, std::size_t> SynthLanguage::corrupt_translation(const std::vector<std::size_t>& words,
                                                                       double rate, Rng& rng) const {
  std::string out;
  std::size_t corrupted = 0;
  for (std::size_t k = 0; k < words.size(); ++k) {
    if (k) out.push_back(' ');
    // both draws happen for every word
    const double u = rng.uniform();
    const std::size_t noise = rng.below(noise_.size());
    if (u < rate) {
      out += noise_[noise];
      ++corrupted;
    } else {
      out += target_[words[k]];
    }
  }
  return {out, corrupted};
}

SynthCorpus generate_corpus(const SynthConfig& config, std::size_t count) {
  config.validate();
  if (count < 10) throw ConfigError("synthetic corpus needs count >= 10");
  const SynthLanguage lang(config);
  SynthCorpus corpus;

  Rng qeRng = Rng::derive(config.seed, kQeStream);
  corpus.qe.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto words = lang.sample_sentence(qeRng);
    auto [target, corrupted] = lang.corrupt_translation(words, config.corruptionRate, qeRng);
    const double label = 1.0 - static_cast<double>(corrupted) / static_cast<double>(words.size());
    corpus.qe.push_back({lang.render_source(words), std::move(target), label});
  }

  const std::size_t tatoebaSize = config.tatoebaSize ? config.tatoebaSize : std::max<std::size_t>(10, count / 5);
  Rng tRng = Rng::derive(config.seed, kTatoebaStream);
  for (std::size_t i = 0; i < tatoebaSize; ++i) {
    const auto words = lang.sample_sentence(tRng);
    corpus.tatoeba.references.push_back(lang.render_source(words));
    corpus.tatoeba.hypotheses.push_back(lang.render_target(words));
  }

  Rng pRng = Rng::derive(config.seed, kParallelStream);
  for (std::size_t i = 0; i < count; ++i) {
    const auto words = lang.sample_sentence(pRng);
    corpus.parallel.pairs.emplace_back(lang.render_source(words), lang.render_target(words));
  }

  const std::size_t buccSize = config.buccSize ? config.buccSize : std::max<std::size_t>(10, count / 2);
  const std::size_t buccGold = std::min(buccSize, config.buccGold ? config.buccGold : std::max<std::size_t>(1, buccSize / 5));
  Rng bRng = Rng::derive(config.seed, kBuccStream);
  std::vector<std::string> sideA, sideB;
  for (std::size_t i = 0; i < buccGold; ++i) {
    const auto words = lang.sample_sentence(bRng);
    sideA.push_back(lang.render_source(words));
    sideB.push_back(lang.render_target(words));
  }
  for (std::size_t i = buccGold; i < buccSize; ++i) {
    sideA.push_back(lang.render_source(lang.sample_sentence(bRng)));
    sideB.push_back(lang.render_target(lang.sample_sentence(bRng)));
  }
  std::vector<std::size_t> permA(buccSize), permB(buccSize);
  std::iota(permA.begin(), permA.end(), std::size_t{0});
  std::iota(permB.begin(), permB.end(), std::size_t{0});
  bRng.shuffle(std::span<std::size_t>(permA));
  bRng.shuffle(std::span<std::size_t>(permB));
  // permX[position] = generated sentence index
  std::vector<std::size_t> posA(buccSize), posB(buccSize);
  for (std::size_t p = 0; p < buccSize; ++p) {
    posA[permA[p]] = p;
    posB[permB[p]] = p;
    corpus.bucc.sideA.add(side_id('a', p), sideA[permA[p]]);
    corpus.bucc.sideB.add(side_id('b', p), sideB[permB[p]]);
  }
  for (std::size_t g = 0; g < buccGold; ++g) {
    corpus.bucc.gold.emplace_back(side_id('a', posA[g]), side_id('b', posB[g]));
  }
  std::sort(corpus.bucc.gold.begin(), corpus.bucc.gold.end());

  // Monolingual auxiliary sets in the target language.
  Rng sRng = Rng::derive(config.seed, kStsStream);
  for (std::size_t i = 0; i < count; ++i) {
    const auto a = lang.sample_sentence(sRng);
    auto b = a;
    std::size_t kept = 0;
    for (auto& w : b) {
      if (sRng.uniform() < 0.5) {
        w = sRng.below(lang.target_words().size());
      } else {
        ++kept;
      }
    }
    const double sim = 5.0 * static_cast<double>(kept) / static_cast<double>(a.size());
    corpus.sts.push_back({lang.render_target(a), lang.render_target(b), sim / 5.0});
  }
  Rng nRng = Rng::derive(config.seed, kNliStream);
  for (std::size_t i = 0; i < count; ++i) {
    const auto premise = lang.sample_sentence(nRng);
    const auto kind = static_cast<NliLabel>(nRng.below(3));
    std::vector<std::size_t> hyp;
    switch (kind) {
      case NliLabel::kEntailment:  // a contiguous part of the premise
        hyp.assign(premise.begin(), premise.begin() + static_cast<std::ptrdiff_t>(std::max<std::size_t>(2, premise.size() / 2)));
        break;
      case NliLabel::kNeutral:  // half premise, half new material
        hyp.assign(premise.begin(), premise.begin() + static_cast<std::ptrdiff_t>(premise.size() / 2));
        for (std::size_t k = 0; k < 3; ++k) hyp.push_back(nRng.below(lang.target_words().size()));
        break;
      case NliLabel::kContradiction:  // unrelated sentence
        hyp = lang.sample_sentence(nRng);
        break;
    }
    corpus.nli.push_back({lang.render_target(premise), lang.render_target(hyp), kind});
  }
  return corpus;
}

void save_synth(const std::filesystem::path& dir, const SynthCorpus& corpus) {
  std::filesystem::create_directories(dir);
  save_qe(dir / "qe.tsv", corpus.qe);
  save_sts(dir / "sts.tsv", corpus.sts);
  save_nli(dir / "nli.tsv", corpus.nli);
  save_parallel(dir / "parallel.tsv", corpus.parallel);
  save_tatoeba(dir / "tatoeba.src", dir / "tatoeba.tgt", corpus.tatoeba);
  save_bucc(dir / "bucc.a.tsv", dir / "bucc.b.tsv", dir / "bucc.gold.tsv", corpus.bucc);
}

}  // namespace qemine

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "qemine/corpus.hpp"

namespace qemine {

struct SynthConfig {
  std::size_t vocabularySize = 200;
  std::size_t minLength = 3;
  std::size_t maxLength = 12;
  double corruptionRate = 0.3;
  std::uint64_t seed = 42;
  // Zero selects a size derived from the record count.
  std::size_t tatoebaSize = 0;   // default max(10, count / 5)
  std::size_t buccSize = 0;      // sentences per side, default max(10, count / 2)
  std::size_t buccGold = 0;      // injected pairs, default max(1, buccSize / 5)

  void validate() const;
};

// Two toy languages: random source words, a bijective word cipher into the
// target language, and a separate pool of noise words used for corruption.
class Rng;

class SynthLanguage {
 public:
  explicit SynthLanguage(const SynthConfig& config);

  const std::vector<std::string>& source_words() const { return source_; }
  const std::vector<std::string>& target_words() const { return target_; }
  const std::vector<std::string>& noise_words() const { return noise_; }

  // Word indices of a random source sentence.
  std::vector<std::size_t> sample_sentence(Rng& rng) const;
  std::string render_source(const std::vector<std::size_t>& words) const;
  std::string render_target(const std::vector<std::size_t>& words) const;

  // Translation with each word independently replaced by a noise word with
  // probability `rate`. Returns the text and the number of replaced words.
  std::pair<std::string, std::size_t> corrupt_translation(const std::vector<std::size_t>& words, double rate,
                                                          Rng& rng) const;

 private:
  SynthConfig config_;
  std::vector<std::string> source_;
  std::vector<std::string> target_;
  std::vector<std::string> noise_;
};

struct SynthCorpus {
  std::vector<QERecord> qe;  // label = 1 - corrupted fraction
  TatoebaSet tatoeba;        // clean translations, fresh sentences
  BuccCorpus bucc;           // clean pairs injected among unrelated sentences
  ParallelSet parallel;      // clean pairs, `count` of them
  std::vector<STSRecord> sts;  // target-language pairs scored by word overlap
  std::vector<NLIRecord> nli;  // target-language premise/hypothesis pairs
};

// Throws ConfigError for count < 10 or an invalid config.
SynthCorpus generate_corpus(const SynthConfig& config, std::size_t count);

// Writes qe.tsv, sts.tsv, nli.tsv, parallel.tsv, tatoeba.src, tatoeba.tgt,
// bucc.a.tsv, bucc.b.tsv and bucc.gold.tsv into `dir`.
void save_synth(const std::filesystem::path& dir, const SynthCorpus& corpus);

}  // namespace qemine

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace qemine {

// Source/target pair with a quality score in [0, 1].
struct QERecord {
  std::string source;
  std::string target;
  double score = 0.0;

  bool operator==(const QERecord&) const = default;
};

// Sentence pair with similarity in [0, 1] (raw 0-5 label divided by 5).
struct STSRecord {
  std::string sentence1;
  std::string sentence2;
  double similarity = 0.0;

  bool operator==(const STSRecord&) const = default;
};

enum class NliLabel : std::uint8_t { kEntailment = 0, kNeutral = 1, kContradiction = 2 };

std::string_view nli_label_name(NliLabel label);

struct NLIRecord {
  std::string premise;
  std::string hypothesis;
  NliLabel label = NliLabel::kEntailment;

  bool operator==(const NLIRecord&) const = default;
};

// A sentence pair with an assigned training label: a binary filtration label
// or a continuous quality score.
struct LabeledPair {
  std::string source;
  std::string target;
  double label = 0.0;

  bool operator==(const LabeledPair&) const = default;
};

// Ordered parallel sentences; the target side is the pivot ("English") side.
struct ParallelSet {
  std::vector<std::pair<std::string, std::string>> pairs;

  std::size_t size() const { return pairs.size(); }
  bool operator==(const ParallelSet&) const = default;
};

// Equal-length reference/hypothesis lists; line i of one side translates
// line i of the other.
struct TatoebaSet {
  std::vector<std::string> references;
  std::vector<std::string> hypotheses;

  std::size_t size() const { return references.size(); }
  bool operator==(const TatoebaSet&) const = default;
};

// One side of a BUCC corpus. Keeps file order and an id index.
class BuccSide {
 public:
  struct Entry {
    std::string id;
    std::string sentence;
    bool operator==(const Entry&) const = default;
  };

  // Throws FormatError on a duplicate id.
  void add(std::string id, std::string sentence);

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool contains(const std::string& id) const { return index_.contains(id); }
  // Position of `id` in file order, if present.
  std::optional<std::size_t> position(const std::string& id) const;
  const std::string& sentence(const std::string& id) const;

  bool operator==(const BuccSide& other) const { return entries_ == other.entries_; }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct BuccCorpus {
  BuccSide sideA;
  BuccSide sideB;
  std::vector<std::pair<std::string, std::string>> gold;

  // Throws ConsistencyError if a gold id is missing from its side, FormatError
  // on a repeated gold link.
  void validate() const;
  bool operator==(const BuccCorpus&) const = default;
};

// Readers. Each throws the error types from error.hpp with 1-based line
// numbers where a line is at fault, and IoError when the file can't be read.
std::vector<QERecord> load_qe(const std::filesystem::path& path, bool normalize = false);
std::vector<STSRecord> load_sts(const std::filesystem::path& path);
std::vector<NLIRecord> load_nli(const std::filesystem::path& path);
TatoebaSet load_tatoeba(const std::filesystem::path& pathA, const std::filesystem::path& pathB);
// An empty gold path loads the two sides only.
BuccCorpus load_bucc(const std::filesystem::path& pathA, const std::filesystem::path& pathB,
                     const std::filesystem::path& goldPath = {});
// Two-column `source\ttarget` TSV.
ParallelSet load_parallel(const std::filesystem::path& path);

// Stream variants used by the file readers.
std::vector<QERecord> parse_qe(std::istream& in, bool normalize = false);
std::vector<STSRecord> parse_sts(std::istream& in);
std::vector<NLIRecord> parse_nli(std::istream& in);
ParallelSet parse_parallel(std::istream& in);

// Min-max rescale of scores to [0, 1]. Throws RangeError if all scores are
// equal (the rescale is undefined).
void normalize_scores(std::vector<QERecord>& records);

// Writers. Numbers are written in shortest round-trip form.
void save_qe(const std::filesystem::path& path, const std::vector<QERecord>& records);
void save_sts(const std::filesystem::path& path, const std::vector<STSRecord>& records);
void save_nli(const std::filesystem::path& path, const std::vector<NLIRecord>& records);
void save_tatoeba(const std::filesystem::path& pathA, const std::filesystem::path& pathB,
                  const TatoebaSet& set);
void save_bucc(const std::filesystem::path& pathA, const std::filesystem::path& pathB,
               const std::filesystem::path& goldPath, const BuccCorpus& corpus);
void save_parallel(const std::filesystem::path& path, const ParallelSet& set);

void write_qe(std::ostream& out, const std::vector<QERecord>& records);

// Shortest decimal representation that parses back to `value` exactly.
std::string format_real(double value);

}  // namespace qemine

#include "qemine/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "qemine/error.hpp"

namespace qemine {
namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      cols.push_back(line.substr(start));
      break;
    }
    cols.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cols;
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  });
}

// Reads every line; strips a trailing CR. A final newline does not produce an
// extra empty line.
std::vector<std::string> read_lines(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

double parse_real(std::string_view field, std::size_t lineNo) {
  double value = 0.0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || field.empty() || !std::isfinite(value)) {
    throw ParseError("unparseable number '" + std::string(field) + "'", lineNo);
  }
  return value;
}

std::vector<std::string_view> expect_columns(std::string_view line, std::size_t want,
                                             std::size_t lineNo) {
  auto cols = split_tabs(line);
  if (cols.size() != want) {
    throw ParseError("expected " + std::to_string(want) + " tab-separated columns, got " +
                         std::to_string(cols.size()),
                     lineNo);
  }
  return cols;
}

void require_text(std::string_view text, std::string_view what, std::size_t lineNo) {
  if (blank(text)) throw ParseError(std::string(what) + " is empty", lineNo);
}

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> read_sentences(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_lines(in);
}

}  // namespace

std::string format_real(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  (void)ec;
  return std::string(buf, ptr);
}

std::string_view nli_label_name(NliLabel label) {
  switch (label) {
    case NliLabel::kEntailment:
      return "entailment";
    case NliLabel::kNeutral:
      return "neutral";
    case NliLabel::kContradiction:
      return "contradiction";
  }
  return "unknown";
}

void BuccSide::add(std::string id, std::string sentence) {
  if (index_.contains(id)) throw FormatError("duplicate id '" + id + "'");
  index_.emplace(id, entries_.size());
  entries_.push_back({std::move(id), std::move(sentence)});
}

std::optional<std::size_t> BuccSide::position(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& BuccSide::sentence(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw ConsistencyError("unknown id '" + id + "'");
  return entries_[it->second].sentence;
}

void BuccCorpus::validate() const {
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& [a, b] : gold) {
    if (!sideA.contains(a)) throw ConsistencyError("gold id '" + a + "' not found on side A");
    if (!sideB.contains(b)) throw ConsistencyError("gold id '" + b + "' not found on side B");
    if (!seen.insert({a, b}).second) {
      throw FormatError("repeated gold link '" + a + "\t" + b + "'");
    }
  }
}

void normalize_scores(std::vector<QERecord>& records) {
  if (records.empty()) return;
  auto [lo, hi] = std::minmax_element(records.begin(), records.end(),
                                      [](const auto& a, const auto& b) { return a.score < b.score; });
  const double min = lo->score;
  const double span = hi->score - min;
  if (!(span > 0.0)) throw RangeError("cannot min-max normalize: all scores are equal");
  for (auto& r : records) r.score = (r.score - min) / span;
}

std::vector<QERecord> parse_qe(std::istream& in, bool normalize) {
  std::vector<QERecord> records;
  const auto lines = read_lines(in);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t lineNo = i + 1;
    auto cols = expect_columns(lines[i], 3, lineNo);
    require_text(cols[0], "source", lineNo);
    require_text(cols[1], "target", lineNo);
    const double score = parse_real(cols[2], lineNo);
    if (!normalize && (score < 0.0 || score > 1.0)) {
      throw RangeError("score " + std::string(cols[2]) + " outside [0,1]", lineNo);
    }
    records.push_back({std::string(cols[0]), std::string(cols[1]), score});
  }
  if (normalize) normalize_scores(records);
  return records;
}

std::vector<STSRecord> parse_sts(std::istream& in) {
  std::vector<STSRecord> records;
  const auto lines = read_lines(in);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t lineNo = i + 1;
    auto cols = expect_columns(lines[i], 3, lineNo);
    require_text(cols[0], "sentence1", lineNo);
    require_text(cols[1], "sentence2", lineNo);
    const double raw = parse_real(cols[2], lineNo);
    if (raw < 0.0 || raw > 5.0) {
      throw RangeError("similarity " + std::string(cols[2]) + " outside [0,5]", lineNo);
    }
    records.push_back({std::string(cols[0]), std::string(cols[1]), raw / 5.0});
  }
  return records;
}

std::vector<NLIRecord> parse_nli(std::istream& in) {
  std::vector<NLIRecord> records;
  const auto lines = read_lines(in);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t lineNo = i + 1;
    auto cols = expect_columns(lines[i], 3, lineNo);
    require_text(cols[0], "premise", lineNo);
    require_text(cols[1], "hypothesis", lineNo);
    const std::string name = lower_ascii(cols[2]);
    NliLabel label;
    if (name == "entailment") {
      label = NliLabel::kEntailment;
    } else if (name == "neutral") {
      label = NliLabel::kNeutral;
    } else if (name == "contradiction") {
      label = NliLabel::kContradiction;
    } else {
      throw ParseError("unknown NLI label '" + std::string(cols[2]) + "'", lineNo);
    }
    records.push_back({std::string(cols[0]), std::string(cols[1]), label});
  }
  return records;
}

ParallelSet parse_parallel(std::istream& in) {
  ParallelSet set;
  const auto lines = read_lines(in);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t lineNo = i + 1;
    auto cols = expect_columns(lines[i], 2, lineNo);
    require_text(cols[0], "source", lineNo);
    require_text(cols[1], "target", lineNo);
    set.pairs.emplace_back(std::string(cols[0]), std::string(cols[1]));
  }
  if (set.pairs.empty()) throw ParseError("parallel set is empty", 0);
  return set;
}

std::vector<QERecord> load_qe(const std::filesystem::path& path, bool normalize) {
  auto in = open_in(path);
  return parse_qe(in, normalize);
}

std::vector<STSRecord> load_sts(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_sts(in);
}

std::vector<NLIRecord> load_nli(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_nli(in);
}

ParallelSet load_parallel(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_parallel(in);
}

TatoebaSet load_tatoeba(const std::filesystem::path& pathA, const std::filesystem::path& pathB) {
  TatoebaSet set{read_sentences(pathA), read_sentences(pathB)};
  if (set.references.size() != set.hypotheses.size()) {
    throw AlignmentError("line counts differ: " + std::to_string(set.references.size()) + " in " +
                         pathA.string() + " vs " + std::to_string(set.hypotheses.size()) + " in " +
                         pathB.string());
  }
  if (set.references.empty()) {
    throw AlignmentError("TATOEBA files are empty: 0 vs 0 lines");
  }
  return set;
}

BuccCorpus load_bucc(const std::filesystem::path& pathA, const std::filesystem::path& pathB,
                     const std::filesystem::path& goldPath) {
  BuccCorpus corpus;
  auto read_side = [](const std::filesystem::path& path, BuccSide& side) {
    auto in = open_in(path);
    const auto lines = read_lines(in);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      auto cols = expect_columns(lines[i], 2, i + 1);
      if (cols[0].empty()) throw ParseError("empty id", i + 1);
      try {
        side.add(std::string(cols[0]), std::string(cols[1]));
      } catch (const FormatError& e) {
        throw FormatError(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
      }
    }
  };
  read_side(pathA, corpus.sideA);
  read_side(pathB, corpus.sideB);
  if (goldPath.empty()) return corpus;

  auto in = open_in(goldPath);
  const auto lines = read_lines(in);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto cols = expect_columns(lines[i], 2, i + 1);
    corpus.gold.emplace_back(std::string(cols[0]), std::string(cols[1]));
  }
  corpus.validate();
  return corpus;
}

void write_qe(std::ostream& out, const std::vector<QERecord>& records) {
  for (const auto& r : records) {
    out << r.source << '\t' << r.target << '\t' << format_real(r.score) << '\n';
  }
}

void save_qe(const std::filesystem::path& path, const std::vector<QERecord>& records) {
  auto out = open_out(path);
  write_qe(out, records);
}

void save_sts(const std::filesystem::path& path, const std::vector<STSRecord>& records) {
  auto out = open_out(path);
  for (const auto& r : records) {
    // Pick the raw value whose reload reproduces `similarity` bit-exactly.
    double raw = r.similarity * 5.0;
    for (int step = 0; step < 4 && raw / 5.0 != r.similarity; ++step) {
      raw = std::nextafter(raw, raw / 5.0 < r.similarity ? 10.0 : -10.0);
    }
    out << r.sentence1 << '\t' << r.sentence2 << '\t' << format_real(raw) << '\n';
  }
}

void save_nli(const std::filesystem::path& path, const std::vector<NLIRecord>& records) {
  auto out = open_out(path);
  for (const auto& r : records) {
    out << r.premise << '\t' << r.hypothesis << '\t' << nli_label_name(r.label) << '\n';
  }
}

void save_tatoeba(const std::filesystem::path& pathA, const std::filesystem::path& pathB,
                  const TatoebaSet& set) {
  auto a = open_out(pathA);
  for (const auto& s : set.references) a << s << '\n';
  auto b = open_out(pathB);
  for (const auto& s : set.hypotheses) b << s << '\n';
}

void save_bucc(const std::filesystem::path& pathA, const std::filesystem::path& pathB,
               const std::filesystem::path& goldPath, const BuccCorpus& corpus) {
  auto a = open_out(pathA);
  for (const auto& e : corpus.sideA.entries()) a << e.id << '\t' << e.sentence << '\n';
  auto b = open_out(pathB);
  for (const auto& e : corpus.sideB.entries()) b << e.id << '\t' << e.sentence << '\n';
  auto g = open_out(goldPath);
  for (const auto& [ida, idb] : corpus.gold) g << ida << '\t' << idb << '\n';
}

void save_parallel(const std::filesystem::path& path, const ParallelSet& set) {
  auto out = open_out(path);
  for (const auto& [s, t] : set.pairs) out << s << '\t' << t << '\n';
}

}  // namespace qemine

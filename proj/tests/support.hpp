#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <utility>
#include <vector>

namespace testing {

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("qemine-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Plain FNV-1a 64, written from the published constants.
inline std::uint64_t fnv_oracle(const std::string& bytes, std::uint64_t seed) {
  std::uint64_t h = 14695981039346656037ULL;
  auto feed = [&](unsigned char c) {
    h ^= c;
    h *= 1099511628211ULL;
  };
  if (seed != 0) {
    for (int i = 0; i < 8; ++i) feed(static_cast<unsigned char>((seed >> (8 * i)) & 0xFF));
  }
  for (unsigned char c : bytes) feed(c);
  return h;
}

// Exhaustive mutual best match over a full score matrix; ties to lower index.
inline std::set<std::pair<std::size_t, std::size_t>> mutual_best_oracle(
    const std::vector<std::vector<double>>& s, double threshold) {
  const std::size_t rows = s.size();
  const std::size_t cols = rows ? s[0].size() : 0;
  std::vector<std::size_t> rowBest(rows), colBest(cols);
  for (std::size_t i = 0; i < rows; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < cols; ++j)
      if (s[i][j] > s[i][best]) best = j;
    rowBest[i] = best;
  }
  for (std::size_t j = 0; j < cols; ++j) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < rows; ++i)
      if (s[i][j] > s[best][j]) best = i;
    colBest[j] = best;
  }
  std::set<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < rows; ++i) {
    const std::size_t j = rowBest[i];
    if (colBest[j] == i && s[i][j] >= threshold) out.emplace(i, j);
  }
  return out;
}

// Composite Simpson integration of the Student t density over [t, upper].
inline double t_tail_integral(double t, double df) {
  const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * M_PI);
  auto pdf = [&](double x) { return c * std::pow(1 + x * x / df, -(df + 1) / 2); };
  // Substitute x = t + u / (1 - u) to map [t, inf) onto [0, 1).
  const int n = 200000;
  const double h = 1.0 / n;
  double sum = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double u = k * h;
    double f = 0.0;
    if (k < n) {
      const double x = t + u / (1 - u);
      f = pdf(x) / ((1 - u) * (1 - u));
    }
    const double w = (k == 0 || k == n) ? 1 : (k % 2 ? 4 : 2);
    sum += w * f;
  }
  return sum * h / 3;
}

}  // namespace testing

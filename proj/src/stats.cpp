#include "qemine/stats.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "qemine/corpus.hpp"
#include "qemine/error.hpp"

namespace qemine {
namespace {

// Lentz's method for the continued fraction of I_x(a, b) (valid for
// x < (a+1)/(a+b+2)).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  return h;
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ContractViolation("pearson: inputs differ in length");
  if (x.size() < 3) throw ContractViolation("pearson: need at least 3 observations");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw RangeError("pearson: correlation undefined for constant input");
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double lbeta = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  const double front = std::exp(lbeta + a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double t_tail(double t, double df) {
  if (!(df >= 1.0)) throw ContractViolation("t_tail: degrees of freedom must be >= 1");
  if (t == 0.0) return 0.5;
  if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
  // P(|T| > |t|) = I_{df/(df+t^2)}(df/2, 1/2)
  const double x = df / (df + t * t);
  const double twoSided = regularized_incomplete_beta(df / 2.0, 0.5, x);
  return t > 0.0 ? 0.5 * twoSided : 1.0 - 0.5 * twoSided;
}

WilliamsResult williams_test(double r12, double r13, double r23, int n) {
  for (double r : {r12, r13, r23}) {
    if (!(r > -1.0 && r < 1.0)) throw ContractViolation("williams_test: correlations must lie in (-1, 1)");
  }
  if (n < 4) throw ContractViolation("williams_test: n must be >= 4");
  const double K = 1.0 - r12 * r12 - r13 * r13 - r23 * r23 + 2.0 * r12 * r13 * r23;
  if (K < 0.0) throw ContractViolation("williams_test: correlation matrix is not positive semidefinite");
  const double nm1 = n - 1.0;
  const double nm3 = n - 3.0;
  const double sum = r13 + r23;
  const double denom = 2.0 * K * nm1 / nm3 + (sum * sum / 4.0) * std::pow(1.0 - r12, 3);
  WilliamsResult out;
  out.df = n - 3;
  const double diff = r13 - r23;
  if (diff == 0.0) {
    out.t = 0.0;
    out.p = 0.5;
    return out;
  }
  out.t = diff * std::sqrt(nm1 * (1.0 + r12) / denom);
  out.p = t_tail(out.t, out.df);
  return out;
}

std::vector<HistogramBin> score_histogram(std::span<const double> scores, int bins) {
  if (bins < 1) throw ContractViolation("histogram needs at least one bin");
  const auto nb = static_cast<std::size_t>(bins);
  std::vector<HistogramBin> out(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    out[k].lo = static_cast<double>(k) / bins;
    out[k].hi = static_cast<double>(k + 1) / bins;
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double s = scores[i];
    if (!(s >= 0.0 && s <= 1.0)) {
      throw RangeError("score " + format_real(s) + " outside [0,1] at index " + std::to_string(i));
    }
    auto k = static_cast<std::size_t>(std::min(std::floor(s * bins), static_cast<double>(nb - 1)));
    // settle against the emitted edges
    while (k + 1 < nb && s >= out[k + 1].lo) ++k;
    while (k > 0 && s < out[k].lo) --k;
    ++out[k].count;
  }
  return out;
}

void write_histogram_csv(std::ostream& out, const std::vector<HistogramBin>& bins) {
  out << "bin_lo,bin_hi,count\n";
  for (const auto& b : bins) out << format_real(b.lo) << ',' << format_real(b.hi) << ',' << b.count << '\n';
}

}  // namespace qemine

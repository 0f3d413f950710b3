#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace qemine {

// Sample Pearson correlation. Requires equal lengths >= 3 and non-constant
// inputs; throws ContractViolation / RangeError otherwise.
double pearson(std::span<const double> x, std::span<const double> y);

struct WilliamsResult {
  double t = 0.0;
  int df = 0;
  double p = 0.5;  // one-tailed P(T > t)
};

// Williams test for the difference between two dependent correlations r13
// and r23 that share variable 3, given the correlation r12 between the two
// competing variables and the sample size n:
//
//   K = 1 - r12^2 - r13^2 - r23^2 + 2 r12 r13 r23
//   t = (r13 - r23) * sqrt( (n-1)(1+r12) /
//                           (2K (n-1)/(n-3) + ((r13+r23)^2 / 4)(1-r12)^3) )
//
// with n - 3 degrees of freedom.
WilliamsResult williams_test(double r12, double r13, double r23, int n);

// Upper tail P(T > t) of Student's t with `df` degrees of freedom.
double t_tail(double t, double df);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double regularized_incomplete_beta(double a, double b, double x);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
};

// Equal-width bins over [0, 1]; each bin is [lo, hi) except the last, which
// is [lo, 1]. Throws RangeError for scores outside [0, 1].
std::vector<HistogramBin> score_histogram(std::span<const double> scores, int bins);

// CSV `bin_lo,bin_hi,count` with a header line.
void write_histogram_csv(std::ostream& out, const std::vector<HistogramBin>& bins);

}  // namespace qemine

#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lmtraj {

// Raised when a rank correlation has zero rank variance in either input.
class UndefinedCorrelation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class UTestMethod { Exact, NormalApproximation };

std::string to_string(UTestMethod m);

struct UTestResult {
  double u_statistic = 0.0;  // U of the first (hypothesised larger) sample
  double p_value = 1.0;
  UTestMethod method = UTestMethod::Exact;
  std::string direction = "sample_b > sample_a";
};

// Both samples at or below this size use the exact permutation distribution.
inline constexpr std::size_t kExactUTestMaxSize = 12;

/// One-tailed Mann-Whitney U test of H1: sample_b is stochastically greater
/// than sample_a.
///
/// Small samples get the exact conditional permutation distribution of the
/// mid-rank sum, which stays exact in the presence of ties. Larger samples use
/// the normal approximation with tie-corrected variance and a continuity
/// correction.
UTestResult mann_whitney_one_tailed(std::span<const double> sample_b, std::span<const double> sample_a,
                                    std::size_t exact_max = kExactUTestMaxSize);

// 1-based ranks with ties sharing their average rank.
std::vector<double> average_ranks(std::span<const double> x);

// Pearson correlation of average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

// Two-sided p-value of Welch's unequal-variance t test.
double unpaired_t_test(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> x);
double median(std::vector<double> x);

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;  // population standard deviation
  double ci_low = 0.0;
  double ci_high = 0.0;
};

// Mean with a normal-approximation 95% interval (mean +/- 1.96 s/sqrt(n),
// sample s). With n < 2 the interval collapses to the mean.
Summary summarize(std::span<const double> x);

}  // namespace lmtraj

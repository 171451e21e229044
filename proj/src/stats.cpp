#include "lmtraj/stats.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace lmtraj {

std::string to_string(UTestMethod m) {
  return m == UTestMethod::Exact ? "exact" : "normal-approximation";
}

std::vector<double> average_ranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && x[order[j]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

namespace {

// P(doubled rank sum of a random size-k subset >= observed) over all C(N, k)
// subsets of the pooled doubled ranks.
double exact_upper_tail(const std::vector<long>& doubled_ranks, std::size_t k, long observed) {
  const long max_sum = std::accumulate(doubled_ranks.begin(), doubled_ranks.end(), 0L);
  // ways[j][s]: number of j-subsets of the items seen so far with sum s.
  std::vector<std::vector<double>> ways(k + 1, std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
  ways[0][0] = 1.0;
  std::size_t seen = 0;
  for (long r : doubled_ranks) {
    ++seen;
    for (std::size_t j = std::min(k, seen); j >= 1; --j) {
      auto& dst = ways[j];
      const auto& src = ways[j - 1];
      for (long s = max_sum; s >= r; --s) dst[static_cast<std::size_t>(s)] += src[static_cast<std::size_t>(s - r)];
    }
  }
  double total = 0.0, tail = 0.0;
  for (long s = 0; s <= max_sum; ++s) {
    const double w = ways[k][static_cast<std::size_t>(s)];
    total += w;
    if (s >= observed) tail += w;
  }
  return tail / total;
}

}  // namespace

UTestResult mann_whitney_one_tailed(std::span<const double> sample_b, std::span<const double> sample_a,
                                    std::size_t exact_max) {
  if (sample_b.empty() || sample_a.empty()) throw std::invalid_argument("mann_whitney_one_tailed: empty sample");
  const std::size_t nb = sample_b.size(), na = sample_a.size(), n = nb + na;
  std::vector<double> pooled(sample_b.begin(), sample_b.end());
  pooled.insert(pooled.end(), sample_a.begin(), sample_a.end());
  for (double v : pooled) {
    if (std::isnan(v)) throw std::invalid_argument("mann_whitney_one_tailed: NaN in sample");
  }
  const auto ranks = average_ranks(pooled);
  const double rank_sum_b = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(nb), 0.0);

  UTestResult res;
  res.u_statistic = rank_sum_b - 0.5 * static_cast<double>(nb * (nb + 1));

  if (nb <= exact_max && na <= exact_max) {
    std::vector<long> doubled(n);
    for (std::size_t i = 0; i < n; ++i) doubled[i] = std::lround(2.0 * ranks[i]);
    const long observed = std::lround(2.0 * rank_sum_b);
    res.method = UTestMethod::Exact;
    res.p_value = exact_upper_tail(doubled, nb, observed);
    return res;
  }

  res.method = UTestMethod::NormalApproximation;
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double dn = static_cast<double>(n);
  const double mu = 0.5 * static_cast<double>(na) * static_cast<double>(nb);
  const double var = static_cast<double>(na) * static_cast<double>(nb) / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
  if (var <= 0.0) {
    res.p_value = 1.0;
    return res;
  }
  const double z = (res.u_statistic - mu - 0.5) / std::sqrt(var);
  res.p_value = std::clamp(0.5 * std::erfc(z / std::sqrt(2.0)), std::numeric_limits<double>::min(), 1.0);
  return res;
}

double mean(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("mean of empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double median(std::vector<double> x) {
  if (x.empty()) throw std::invalid_argument("median of empty sample");
  std::sort(x.begin(), x.end());
  const std::size_t m = x.size() / 2;
  return x.size() % 2 == 1 ? x[m] : 0.5 * (x[m - 1] + x[m]);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
  if (x.size() < 3) throw std::invalid_argument("spearman: need at least 3 points");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double mx = mean(rx), my = mean(ry);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mx, dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelation("spearman: constant series has no rank variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double unpaired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("unpaired_t_test: need at least 2 values per sample");
  const double ma = mean(a), mb = mean(b);
  auto sample_var = [](std::span<const double> x, double m) {
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
  };
  const double qa = sample_var(a, ma) / static_cast<double>(a.size());
  const double qb = sample_var(b, mb) / static_cast<double>(b.size());
  const double se2 = qa + qb;
  if (!(se2 > 0.0)) throw std::domain_error("unpaired_t_test: degenerate (zero) variance in both samples");
  const double t = (ma - mb) / std::sqrt(se2);
  const double df = se2 * se2 / (qa * qa / static_cast<double>(a.size() - 1) + qb * qb / static_cast<double>(b.size() - 1));
  const boost::math::students_t dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

Summary summarize(std::span<const double> x) {
  Summary s;
  s.n = x.size();
  if (x.empty()) return s;
  s.mean = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - s.mean) * (v - s.mean);
  s.sd = std::sqrt(ss / static_cast<double>(x.size()));
  double half = 0.0;
  if (x.size() >= 2) half = 1.96 * std::sqrt(ss / static_cast<double>(x.size() - 1)) / std::sqrt(static_cast<double>(x.size()));
  s.ci_low = s.mean - half;
  s.ci_high = s.mean + half;
  return s;
}

}  // namespace lmtraj

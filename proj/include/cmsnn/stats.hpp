#pragma once

#include <span>
#include <vector>

namespace cmsnn {

// Two-sample Mann-Whitney U. Ranks are midranks over the pooled samples, so
// U_a + U_b = |a|*|b| holds exactly (midranks are half-integers, which
// doubles represent without rounding). The two-sided p-value comes from the
// normal approximation with tie-corrected variance and continuity
// correction; mann_whitney_exact enumerates the full permutation null for
// small samples and serves as the oracle the approximation is tested
// against. A degenerate pooled sample (every value identical) has zero
// variance under the null and reports p = 1.
struct MannWhitneyResult {
  double u_a = 0.0;
  double u_b = 0.0;
  double p = 1.0;  // two-sided
};

MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

// Exact permutation enumeration; requires |a| + |b| <= 20 to keep the
// C(n, |a|) walk tractable.
MannWhitneyResult mann_whitney_exact(std::span<const double> a, std::span<const double> b);

// p' = min(1, m * p). m must cover at least the given list.
std::vector<double> bonferroni(const std::vector<double>& pvals, int m);

// Order statistics on a copy of the data (linear interpolation between
// order statistics, the common "type 7" rule).
double quantile(std::vector<double> values, double q);
double median(std::vector<double> values);

// Box geometry under the 1.5*IQR whisker convention.
struct BoxStats {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double whisker_lo = 0.0;
  double whisker_hi = 0.0;
  std::vector<double> outliers;
};

BoxStats box_stats(const std::vector<double>& values);

}  // namespace cmsnn

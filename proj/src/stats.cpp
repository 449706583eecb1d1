#include "cmsnn/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cmsnn/errors.hpp"

namespace cmsnn {

namespace {

struct RankSummary {
  std::vector<double> ranks;  // midranks of the pooled sample, pooled order
  double tie_term = 0.0;      // sum over tie groups of (t^3 - t)
};

RankSummary midranks(std::span<const double> pooled_sorted) {
  RankSummary s;
  const std::size_t n = pooled_sorted.size();
  s.ranks.resize(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && pooled_sorted[j + 1] == pooled_sorted[i]) ++j;
    const double tied = static_cast<double>(j - i + 1);
    const double rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t t = i; t <= j; ++t) s.ranks[t] = rank;
    if (tied > 1.0) s.tie_term += tied * tied * tied - tied;
    i = j + 1;
  }
  return s;
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

// Ranks of sample a within the pooled multiset, plus the tie term.
struct PooledRanks {
  double rank_sum_a = 0.0;
  double tie_term = 0.0;
};

PooledRanks pooled_rank_sum(std::span<const double> a, std::span<const double> b) {
  std::vector<std::pair<double, int>> pooled;  // value, group
  pooled.reserve(a.size() + b.size());
  for (double v : a) pooled.emplace_back(v, 0);
  for (double v : b) pooled.emplace_back(v, 1);
  std::stable_sort(pooled.begin(), pooled.end(),
                   [](const auto& p, const auto& q) { return p.first < q.first; });
  std::vector<double> values(pooled.size());
  for (std::size_t i = 0; i < pooled.size(); ++i) values[i] = pooled[i].first;
  const RankSummary rs = midranks(values);
  PooledRanks out;
  out.tie_term = rs.tie_term;
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    if (pooled[i].second == 0) out.rank_sum_a += rs.ranks[i];
  }
  return out;
}

}  // namespace

MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ContractError("mann_whitney_u: both samples must be non-empty");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double n = na + nb;
  const PooledRanks pr = pooled_rank_sum(a, b);

  MannWhitneyResult res;
  res.u_a = pr.rank_sum_a - na * (na + 1.0) / 2.0;
  res.u_b = na * nb - res.u_a;

  const double mu = na * nb / 2.0;
  const double tie_correction = pr.tie_term / (n * (n - 1.0));
  const double var = na * nb / 12.0 * ((n + 1.0) - tie_correction);
  if (!(var > 0.0)) {
    res.p = 1.0;  // every pooled value identical
    return res;
  }
  const double diff = res.u_a - mu;
  // continuity correction shrinks the statistic half a unit toward the mean
  const double cc = diff > 0.0 ? -0.5 : (diff < 0.0 ? 0.5 : 0.0);
  const double z = (diff + cc) / std::sqrt(var);
  res.p = std::min(1.0, 2.0 * normal_sf(std::abs(z)));
  return res;
}

MannWhitneyResult mann_whitney_exact(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) {
    throw ContractError("mann_whitney_exact: both samples must be non-empty");
  }
  const int na = static_cast<int>(a.size());
  const int nb = static_cast<int>(b.size());
  const int n = na + nb;
  if (n > 20) {
    throw ContractError("mann_whitney_exact: pooled size " + std::to_string(n) +
                        " too large for enumeration");
  }

  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::sort(pooled.begin(), pooled.end());
  const RankSummary rs = midranks(pooled);

  MannWhitneyResult res;
  {
    const PooledRanks pr = pooled_rank_sum(a, b);
    res.u_a = pr.rank_sum_a - na * (na + 1.0) / 2.0;
    res.u_b = static_cast<double>(na) * nb - res.u_a;
  }

  // Walk every assignment of na pooled positions to group a and tally the
  // null distribution of U.
  const double mu = static_cast<double>(na) * nb / 2.0;
  const double u_low = std::min(res.u_a, res.u_b);
  const double u_high = static_cast<double>(na) * nb - u_low;
  constexpr double kEps = 1e-9;

  std::vector<int> pick(na);
  std::iota(pick.begin(), pick.end(), 0);
  long long total = 0, extreme = 0;
  for (;;) {
    double rank_sum = 0.0;
    for (int idx : pick) rank_sum += rs.ranks[idx];
    const double u = rank_sum - na * (na + 1.0) / 2.0;
    ++total;
    if (u <= u_low + kEps || u >= u_high - kEps) ++extreme;
    // next combination in lexicographic order
    int i = na - 1;
    while (i >= 0 && pick[i] == n - na + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (int j = i + 1; j < na; ++j) pick[j] = pick[j - 1] + 1;
  }
  res.p = std::min(1.0, static_cast<double>(extreme) / static_cast<double>(total));
  (void)mu;
  return res;
}

std::vector<double> bonferroni(const std::vector<double>& pvals, int m) {
  if (m < static_cast<int>(pvals.size())) {
    throw ContractError("bonferroni: m = " + std::to_string(m) + " but " +
                        std::to_string(pvals.size()) + " p-values were given");
  }
  std::vector<double> adjusted;
  adjusted.reserve(pvals.size());
  for (double p : pvals) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ContractError("bonferroni: p-value " + std::to_string(p) + " outside [0, 1]");
    }
    adjusted.push_back(std::min(1.0, m * p));
  }
  return adjusted;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ContractError("quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw ContractError("quantile: q outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

BoxStats box_stats(const std::vector<double>& values) {
  if (values.empty()) throw ContractError("box_stats: empty sample");
  BoxStats s;
  s.median = quantile(values, 0.5);
  s.q1 = quantile(values, 0.25);
  s.q3 = quantile(values, 0.75);
  const double iqr = s.q3 - s.q1;
  const double lo_fence = s.q1 - 1.5 * iqr;
  const double hi_fence = s.q3 + 1.5 * iqr;
  s.whisker_lo = s.q3;
  s.whisker_hi = s.q1;
  bool any_in = false;
  for (double v : values) {
    if (v >= lo_fence && v <= hi_fence) {
      if (!any_in) {
        s.whisker_lo = s.whisker_hi = v;
        any_in = true;
      } else {
        s.whisker_lo = std::min(s.whisker_lo, v);
        s.whisker_hi = std::max(s.whisker_hi, v);
      }
    } else {
      s.outliers.push_back(v);
    }
  }
  std::sort(s.outliers.begin(), s.outliers.end());
  return s;
}

}  // namespace cmsnn

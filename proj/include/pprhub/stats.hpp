#pragma once

// Small statistics toolbox: moments, least squares, and a two-sample
// Kolmogorov-Smirnov test. The KS statistic is computed on an integer grid
// (multiples of 1/(n1*n2)) so ties and comparisons are exact. For samples of
// at most 100 points each the p-value is exact, obtained by counting
// labellings of the pooled multiset with a lattice DP; larger samples use the
// classic asymptotic tail with the Stephens small-sample correction.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "pprhub/common.hpp"

namespace pprhub {

inline double mean(const std::vector<double>& v) {
  require(!v.empty(), "mean of empty sample");
  double s = 0.0;
  for (const double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sample_variance(const std::vector<double>& v) {
  require(v.size() >= 2, "sample variance needs at least two points");
  const double m = mean(v);
  double s = 0.0;
  for (const double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x,
                        const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2,
          "line fit needs two same-length samples");
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  require(sxx > 0.0, "line fit needs non-constant x");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  bool exact = false;
};

namespace detail {

inline double ks_asymptotic_pvalue(double d, std::size_t n1, std::size_t n2) {
  if (d <= 0.0) return 1.0;
  const double ne =
      static_cast<double>(n1) * static_cast<double>(n2) / (n1 + n2);
  const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 200; ++k) {
    const double term =
        2.0 * sign * std::exp(-2.0 * lambda * lambda * k * k);
    sum += term;
    if (std::abs(term) < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(sum, 0.0, 1.0);
}

/// P(D >= observed) over uniform labellings of the pooled sorted multiset,
/// where observed is the integer statistic d_num on the n1*n2 grid. States
/// whose running CDF gap already reaches d_num are pruned; the survivors are
/// exactly the labellings with a strictly smaller maximum gap.
inline double ks_exact_pvalue(const std::vector<double>& pooled_sorted,
                              std::size_t n1, std::size_t n2,
                              std::int64_t d_num) {
  const std::size_t n = pooled_sorted.size();
  std::vector<std::vector<long double>> binom(n + 1);
  for (std::size_t r = 0; r <= n; ++r) {
    binom[r].assign(r + 1, 1.0L);
    for (std::size_t c = 1; c < r; ++c)
      binom[r][c] = binom[r - 1][c - 1] + binom[r - 1][c];
  }
  std::vector<long double> cur(n1 + 1, 0.0L), nxt(n1 + 1, 0.0L);
  cur[0] = 1.0L;
  std::size_t consumed = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t run_end = i;
    while (run_end < n && pooled_sorted[run_end] == pooled_sorted[i])
      ++run_end;
    const std::size_t g = run_end - i;
    std::fill(nxt.begin(), nxt.end(), 0.0L);
    for (std::size_t k = 0; k <= std::min(consumed, n1); ++k) {
      if (cur[k] == 0.0L) continue;
      const std::size_t j = consumed - k;
      for (std::size_t a = 0; a <= g; ++a) {
        if (k + a > n1 || j + (g - a) > n2) continue;
        nxt[k + a] += cur[k] * binom[g][a];
      }
    }
    consumed += g;
    for (std::size_t k = 0; k <= std::min(consumed, n1); ++k) {
      const std::size_t j = consumed - k;
      if (j > n2) continue;
      const std::int64_t gap = std::abs(static_cast<std::int64_t>(k * n2) -
                                        static_cast<std::int64_t>(j * n1));
      if (gap >= d_num) nxt[k] = 0.0L;
    }
    cur.swap(nxt);
    i = run_end;
  }
  const long double surviving = cur[n1];
  const long double total = binom[n][n1];
  const long double p = 1.0L - surviving / total;
  return std::clamp(static_cast<double>(p), 0.0, 1.0);
}

}  // namespace detail

inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  require(!a.empty() && !b.empty(), "KS test needs non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const std::size_t n1 = a.size(), n2 = b.size();
  std::int64_t d_num = 0;
  std::size_t i = 0, j = 0;
  while (i < n1 || j < n2) {
    const double x =
        (i < n1 && (j >= n2 || a[i] <= b[j])) ? a[i] : b[j];
    while (i < n1 && a[i] == x) ++i;
    while (j < n2 && b[j] == x) ++j;
    d_num = std::max(d_num, std::abs(static_cast<std::int64_t>(i * n2) -
                                     static_cast<std::int64_t>(j * n1)));
  }
  KsResult res;
  res.n1 = n1;
  res.n2 = n2;
  res.statistic = static_cast<double>(d_num) /
                  (static_cast<double>(n1) * static_cast<double>(n2));
  if (d_num == 0) {
    res.p_value = 1.0;
    res.exact = true;
    return res;
  }
  if (n1 <= 100 && n2 <= 100) {
    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::sort(pooled.begin(), pooled.end());
    res.p_value = detail::ks_exact_pvalue(pooled, n1, n2, d_num);
    res.exact = true;
  } else {
    res.p_value = detail::ks_asymptotic_pvalue(res.statistic, n1, n2);
    res.exact = false;
  }
  return res;
}

}  // namespace pprhub

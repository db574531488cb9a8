#pragma once

// Definition-level reference implementations used to validate the optimized
// code paths. Quadratic or exponential on purpose.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace dean::oracle {

// Fraction of (anomaly, normal) pairs ordered correctly, ties worth 1/2.
inline double pairwise_auc(std::span<const double> s, std::span<const int> y) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      pairs += 1.0;
      if (s[i] > s[j]) wins += 1.0;
      else if (s[i] == s[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

// Average precision straight from the definition: for every distinct score
// threshold t (descending), precision and recall of {score >= t}.
inline double threshold_ap(std::span<const double> s, std::span<const int> y) {
  std::vector<double> thresholds(s.begin(), s.end());
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  double positives = 0.0;
  for (int l : y) positives += l;
  double ap = 0.0;
  double prev_recall = 0.0;
  for (double t : thresholds) {
    double tp = 0.0, selected = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] >= t) {
        selected += 1.0;
        tp += y[i];
      }
    }
    const double recall = tp / positives;
    ap += (tp / selected) * (recall - prev_recall);
    prev_recall = recall;
  }
  return ap;
}

// Two-sided / one-sided Wilcoxon p by enumerating all 2^m sign patterns of the
// nonzero differences. Ranks are doubled so ties stay integral.
inline double enumerated_wilcoxon_p(std::span<const double> d, int alternative /* 0 two, 1 greater, 2 less */) {
  std::vector<double> abs_d;
  std::vector<bool> positive;
  for (double x : d) {
    if (x == 0.0) continue;
    abs_d.push_back(std::abs(x));
    positive.push_back(x > 0.0);
  }
  const std::size_t m = abs_d.size();
  std::vector<long long> rank2(m);
  for (std::size_t i = 0; i < m; ++i) {
    long long less = 0, equal = 0;
    for (std::size_t j = 0; j < m; ++j) {
      if (abs_d[j] < abs_d[i]) ++less;
      else if (abs_d[j] == abs_d[i]) ++equal;
    }
    rank2[i] = 2 * less + equal + 1;  // twice the average rank
  }
  long long total = 0, observed = 0;
  for (std::size_t i = 0; i < m; ++i) {
    total += rank2[i];
    if (positive[i]) observed += rank2[i];
  }
  const long long lo = std::min(observed, total - observed);
  double hits = 0.0;
  for (std::uint64_t pattern = 0; pattern < (std::uint64_t{1} << m); ++pattern) {
    long long w = 0;
    for (std::size_t i = 0; i < m; ++i) {
      if (pattern >> i & 1U) w += rank2[i];
    }
    bool hit = false;
    if (alternative == 0) hit = std::min(w, total - w) <= lo;
    else if (alternative == 1) hit = w >= observed;
    else hit = w <= observed;
    if (hit) hits += 1.0;
  }
  return std::min(1.0, std::ldexp(hits, -static_cast<int>(m)));
}

}  // namespace dean::oracle

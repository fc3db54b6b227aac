// SPDX-License-Identifier: Apache-2.0

#include "moments.hpp"

#include <algorithm>
#include <numeric>

namespace nrwe {

double mean(const Vector& v) {
  if (v.size() == 0) fail(ErrorCode::DimensionMismatch, "mean of empty vector");
  return v.sum() / static_cast<double>(v.size());
}

double variance(const Vector& v) {
  const double m = mean(v);
  return (v.array() - m).square().sum() / static_cast<double>(v.size());
}

double covariance(const Vector& a, const Vector& b) {
  if (a.size() != b.size())
    fail(ErrorCode::DimensionMismatch, "covariance of vectors with unequal length");
  if (a.size() < 2)
    fail(ErrorCode::DimensionMismatch, "covariance needs length >= 2");
  const double ma = mean(a), mb = mean(b);
  return ((a.array() - ma) * (b.array() - mb)).sum() / static_cast<double>(a.size());
}

MomentSet moments(const DataMatrix& d) {
  MomentSet m;
  m.mean_t = mean(d.t);
  m.var_t = variance(d.t);
  m.cov_yt = covariance(d.y, d.t);
  return m;
}

double abel_covariance(const Vector& t, const Vector& y) {
  const Eigen::Index n = t.size();
  if (y.size() != n)
    fail(ErrorCode::DimensionMismatch, "abel_covariance length mismatch");
  if (n < 2) fail(ErrorCode::DimensionMismatch, "abel_covariance needs length >= 2");

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&t](Eigen::Index a, Eigen::Index b) { return t[a] < t[b]; });

  const double tbar = mean(t);
  // D_i = (1/n) sum_{j>i} (t_(j) - tbar), built as a reverse running sum.
  double suffix = 0.0;
  double result = 0.0;
  for (Eigen::Index i = n - 1; i >= 1; --i) {
    suffix += t[order[i]] - tbar;
    result += (suffix / static_cast<double>(n)) * (y[order[i]] - y[order[i - 1]]);
  }
  return result;
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) fail(ErrorCode::DimensionMismatch, "quantile of empty sample");
  if (p <= 0.0) return sorted.front();
  if (p >= 1.0) return sorted.back();
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

}  // namespace nrwe

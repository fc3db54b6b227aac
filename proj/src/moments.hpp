// SPDX-License-Identifier: Apache-2.0

#ifndef NRWE_MOMENTS_HPP
#define NRWE_MOMENTS_HPP

#include "data.hpp"

namespace nrwe {

// All moments are population-normalized (divisor n), so in-sample
// decomposition identities hold exactly.

double mean(const Vector& v);
double variance(const Vector& v);
double covariance(const Vector& a, const Vector& b);

struct MomentSet {
  double mean_t = 0.0;
  double var_t = 0.0;
  double cov_yt = 0.0;
};

MomentSet moments(const DataMatrix& d);

/// Cov(T, Y) by Abel summation over T-sorted pairs (the discrete analog of
/// the integration-by-parts step): sum_i D_i (y_(i+1) - y_(i)) with
/// D_i = (1/n) sum_{j>i} (t_(j) - tbar). Ties in T are ordered stably by
/// input index.
double abel_covariance(const Vector& t, const Vector& y);

/// Empirical quantile with linear interpolation on the sorted sample.
double quantile_sorted(const std::vector<double>& sorted, double p);

}  // namespace nrwe

#endif  // NRWE_MOMENTS_HPP

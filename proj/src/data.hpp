// SPDX-License-Identifier: Apache-2.0

#ifndef NRWE_DATA_HPP
#define NRWE_DATA_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "errors.hpp"

namespace nrwe {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Sample container: outcome y, treatment t, controls x (first column
/// identically 1). All columns share length n.
struct DataMatrix {
  Vector y;
  Vector t;
  Matrix x;  // n rows, first column constant 1
  std::vector<std::string> control_names;

  Eigen::Index n() const { return y.size(); }

  void validate() const {
    if (t.size() != n() || x.rows() != n())
      fail(ErrorCode::DimensionMismatch, "columns of DataMatrix have unequal length");
    if (n() < x.cols() + 1 + 2)
      fail(ErrorCode::TooFewObservations,
           "need at least 2 more rows than regressors");
    auto finite = [](double v) { return std::isfinite(v); };
    for (Eigen::Index i = 0; i < n(); ++i) {
      if (!finite(y[i]) || !finite(t[i]))
        fail(ErrorCode::DomainError, "non-finite entry in y or t at row " + std::to_string(i));
      for (Eigen::Index j = 0; j < x.cols(); ++j)
        if (!finite(x(i, j)))
          fail(ErrorCode::DomainError, "non-finite entry in x at row " + std::to_string(i));
      if (x(i, 0) != 1.0)
        fail(ErrorCode::InvalidArgument, "first control column must be identically 1");
    }
  }
};

/// 64-bit FNV-1a over raw column bytes; used to pin fitted models to the
/// sample they were fitted on.
inline std::uint64_t data_fingerprint(const DataMatrix& d) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const double* p, Eigen::Index count) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(p);
    for (Eigen::Index i = 0; i < count * static_cast<Eigen::Index>(sizeof(double)); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  };
  mix(d.t.data(), d.t.size());
  mix(d.x.data(), d.x.size());
  h ^= static_cast<std::uint64_t>(d.n());
  return h;
}

struct GridSpec {
  int points = 512;
  double quantile_lo = 0.001;
  double quantile_hi = 0.999;
};

}  // namespace nrwe

#endif  // NRWE_DATA_HPP

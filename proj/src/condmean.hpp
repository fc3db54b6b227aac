// SPDX-License-Identifier: Apache-2.0

#ifndef NRWE_CONDMEAN_HPP
#define NRWE_CONDMEAN_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "data.hpp"
#include "ols.hpp"

namespace nrwe {

enum class CondMeanMethod { Linear, Binned, LocalLinear };

struct MethodOptions {
  std::optional<int> bins;          // binned: per-control bin count override
  std::optional<double> bandwidth;  // local_linear: shared bandwidth override
};

/// Fitted model for mu(X) = E[T|X].
///  - linear: predictions are exactly pi_hat * X, so Delta == 0 identically.
///  - binned: equal-frequency bins per non-constant control (cross product
///    for several controls); bin value is the exact within-bin mean of T.
///  - local_linear: product Gaussian kernel, Silverman bandwidths, evaluated
///    at the sample points only.
class CondMeanModel {
 public:
  CondMeanMethod method() const { return method_; }
  std::uint64_t fingerprint() const { return fingerprint_; }
  Eigen::Index fitted_n() const { return fitted_n_; }

  /// mu_hat at every fitted sample point, in input row order.
  const Vector& fitted_values() const { return fitted_values_; }

  /// Cell index per observation (binned method; Linear/LocalLinear have a
  /// single cell 0). Cells are compact: 0..cell_count()-1, each nonempty.
  const std::vector<int>& cell_of() const { return cell_of_; }
  int cell_count() const { return cell_count_; }

  std::string to_json() const;

  // filled by fit_cond_mean
  CondMeanMethod method_ = CondMeanMethod::Linear;
  std::uint64_t fingerprint_ = 0;
  Eigen::Index fitted_n_ = 0;
  Vector fitted_values_;
  std::vector<int> cell_of_;
  int cell_count_ = 1;
  Vector pi_;                                   // linear
  std::vector<std::vector<double>> bin_edges_;  // binned, per control
  std::vector<double> cell_means_;              // binned
  std::vector<double> bandwidths_;              // local_linear
};

struct DeltaSeries {
  Vector values;          // mu_hat(X_i) - pi_hat X_i
  double variance = 0.0;  // population-normalized
  double cov_with_y = 0.0;
  Vector pi_fit;          // pi_hat used (coefficients of T on X)
  Vector linear_fit;      // pi_hat X_i
};

CondMeanModel fit_cond_mean(const DataMatrix& data, CondMeanMethod method,
                            const MethodOptions& options = {});

DeltaSeries delta_series(const DataMatrix& data, const CondMeanModel& model);

/// Binned profile of E[T | x_j] against one control column.
struct ProfilePoint {
  double x_lo = 0.0;
  double x_hi = 0.0;
  double x_mid = 0.0;
  double mean_t = 0.0;
  long count = 0;
  bool sparse = false;  // fewer than 5 observations
};

std::vector<ProfilePoint> profile_cond_mean(const DataMatrix& data,
                                            int control_index, int bins);

/// Default equal-frequency bin count: ceil(n^(1/3)) capped at 256.
int default_bin_count(Eigen::Index n);

}  // namespace nrwe

#endif  // NRWE_CONDMEAN_HPP

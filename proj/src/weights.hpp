// SPDX-License-Identifier: Apache-2.0

#ifndef NRWE_WEIGHTS_HPP
#define NRWE_WEIGHTS_HPP

#include <string>
#include <vector>

#include "condmean.hpp"
#include "data.hpp"

namespace nrwe {

/// Sampled weight function w(t) with its trapezoid mass over the grid.
struct WeightCurve {
  std::vector<double> grid;    // strictly increasing
  std::vector<double> values;  // w(t) >= 0
  double mass = 0.0;

  std::string to_csv() const;  // two columns: t,w
};

double trapezoid(const std::vector<double>& grid, const std::vector<double>& values);

/// Grid for weight curves: `points` uniform values between the 0.1% and
/// 99.9% empirical quantiles of t, extended to the exact min/max so the
/// mass accounting covers the full support.
std::vector<double> weight_grid(const Vector& t, const GridSpec& spec);

/// Univariate Yitzhaki weights evaluated on the grid:
/// w(g) = [(1/n) sum_{t_j > g} (t_j - tbar)] / Var(t).
WeightCurve yitzhaki_weights_empirical(const Vector& t, const GridSpec& spec);

/// Closed-form conditional weight for Gaussian treatment noise:
/// sigma * phi((t - h_of_x)/sigma) / denom.
double gaussian_conditional_weights(double t, double h_of_x, double sigma,
                                    double denom);

enum class WeightFieldMode { Nrwe, Ols };

/// Per-cell conditional weight curves sharing one t-grid and one
/// denominator: E[Var(T|X)] in NRWE mode, plus Var(Delta) in OLS mode.
struct ConditionalWeightField {
  std::vector<double> grid;
  std::vector<WeightCurve> cells;        // values already divided by `denominator`
  std::vector<double> cell_mass_share;   // observation share per cell
  std::vector<long> cell_counts;
  double denominator = 0.0;
  WeightFieldMode mode = WeightFieldMode::Nrwe;

  /// E_X[ integral of w(t,X) dt ] by trapezoid + cell shares.
  double total_mass() const;
};

ConditionalWeightField conditional_weight_field(const DataMatrix& data,
                                                const CondMeanModel& cond_mean,
                                                WeightFieldMode mode,
                                                const GridSpec& spec = {});

double normal_pdf(double z);

}  // namespace nrwe

#endif  // NRWE_WEIGHTS_HPP

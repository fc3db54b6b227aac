// SPDX-License-Identifier: Apache-2.0

#ifndef NRWE_DECOMPOSITION_HPP
#define NRWE_DECOMPOSITION_HPP

#include <string>
#include <vector>

#include "condmean.hpp"
#include "data.hpp"

namespace nrwe {

/// The coefficient decomposition report. All terms share the OLS denominator
/// Var(T - pi X), so beta = weighted_effect + misspec_bias holds exactly
/// in-sample; the finite-sample cross term 2 Cov(T - mu, Delta) is reported
/// separately.
struct Decomposition {
  double beta = 0.0;             // multivariate OLS coefficient on T (via FWL)
  double weighted_effect = 0.0;  // Cov(Y, T - mu(X)) / denom_ols
  double misspec_bias = 0.0;     // Cov(Y, Delta(X)) / denom_ols
  double nrwe = 0.0;             // Cov(Y, T - mu(X)) / Var(T - mu(X))
  double attenuation = 0.0;      // nrwe - weighted_effect
  double denom_ols = 0.0;        // Var(T - pi X)
  double e_var_t_given_x = 0.0;  // Var(T - mu(X))
  double var_delta = 0.0;
  double cross_term = 0.0;       // 2 Cov(T - mu, Delta)
  std::string mu_source;         // "oracle" | "linear" | "binned" | "local_linear"

  std::string to_json() const;
  std::string to_csv_row(bool with_header) const;
};

/// Decompose with mu given as per-observation values (oracle h(X_i) or a
/// fitted model's predictions).
Decomposition decompose_with_mu(const DataMatrix& data, const Vector& mu_values,
                                const std::string& mu_source);

Decomposition decompose(const DataMatrix& data, const CondMeanModel& mu);

struct LocalCell {
  int cell = 0;
  long count = 0;
  double beta_x = 0.0;  // within-cell OLS slope of Y on T
  double w1 = 0.0;      // Var(T|cell) / (E[Var(T|X)] + Var(Delta))
  double mass = 0.0;    // observation share
};

struct LocalDecomposition {
  std::vector<LocalCell> cells;
  double beta_delta = 0.0;  // slope of Y on Delta (0 when Var(Delta)=0)
  double w0 = 0.0;
  double recombined_beta = 0.0;
  double beta_full = 0.0;
  double e_var_t_given_x = 0.0;
  double var_delta = 0.0;

  std::string to_json() const;
};

/// Corollary-style recombination over the model's cells (binned model).
LocalDecomposition corollary1_decompose(const DataMatrix& data,
                                        const CondMeanModel& mu);

}  // namespace nrwe

#endif  // NRWE_DECOMPOSITION_HPP

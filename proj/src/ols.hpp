// SPDX-License-Identifier: Apache-2.0

#ifndef NRWE_OLS_HPP
#define NRWE_OLS_HPP

#include <string>
#include <vector>

#include "data.hpp"

namespace nrwe {

struct OlsFit {
  Vector coefficients;
  Vector residuals;
  Vector fitted;
  std::vector<std::string> regressor_names;
};

/// Least squares of lhs on the given regressor matrix via column-pivoted
/// Householder QR. SingularDesign when the implied Gram condition number
/// exceeds 1e12.
OlsFit ols_fit(const Vector& lhs, const Matrix& regressors,
               std::vector<std::string> names = {});

/// Regress y and t columns of `data` per Frisch-Waugh-Lovell: residualize T
/// on the controls (with constant) and return the simple-regression slope of
/// Y on that residual, which equals the multivariate coefficient on T.
struct FwlResult {
  Vector t_resid;
  Vector t_fitted;  // pi X, the projection of T on the controls
  double beta_fwl = 0.0;
  Vector pi;  // projection coefficients of T on the controls
};

FwlResult fwl_residualize(const DataMatrix& data);

}  // namespace nrwe

#endif  // NRWE_OLS_HPP

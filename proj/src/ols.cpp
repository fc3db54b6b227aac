// SPDX-License-Identifier: Apache-2.0

#include "ols.hpp"

#include <cmath>
#include <limits>

#include "moments.hpp"

namespace nrwe {

namespace {
constexpr double kGramConditionLimit = 1e12;
constexpr double kDegenerateTreatmentRatio = 1e-14;
}  // namespace

OlsFit ols_fit(const Vector& lhs, const Matrix& regressors,
               std::vector<std::string> names) {
  if (lhs.size() != regressors.rows())
    fail(ErrorCode::DimensionMismatch, "lhs and regressors row counts differ");
  if (regressors.cols() == 0)
    fail(ErrorCode::InvalidArgument, "no regressors");
  if (lhs.size() < regressors.cols() + 2)
    fail(ErrorCode::TooFewObservations, "need n >= number of regressors + 2");

  Eigen::ColPivHouseholderQR<Matrix> qr(regressors);
  const auto& r = qr.matrixR();
  double rmax = 0.0, rmin = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < regressors.cols(); ++j) {
    const double d = std::abs(r(j, j));
    rmax = std::max(rmax, d);
    rmin = std::min(rmin, d);
  }
  // cond(Gram) = cond(X)^2 up to the QR estimate.
  if (rmin == 0.0 || (rmax / rmin) * (rmax / rmin) > kGramConditionLimit)
    fail(ErrorCode::SingularDesign, "regressor Gram matrix is numerically singular");

  OlsFit fit;
  fit.coefficients = qr.solve(lhs);
  fit.fitted = regressors * fit.coefficients;
  fit.residuals = lhs - fit.fitted;
  if (names.empty()) {
    for (Eigen::Index j = 0; j < regressors.cols(); ++j)
      names.push_back("x" + std::to_string(j));
  }
  fit.regressor_names = std::move(names);
  return fit;
}

FwlResult fwl_residualize(const DataMatrix& data) {
  OlsFit proj = ols_fit(data.t, data.x);
  FwlResult out;
  out.pi = proj.coefficients;
  out.t_resid = proj.residuals;
  out.t_fitted = proj.fitted;
  const double var_resid = variance(out.t_resid);
  // <= so a constant treatment (Var(T) = 0) still trips the guard
  if (var_resid <= kDegenerateTreatmentRatio * variance(data.t))
    fail(ErrorCode::DegenerateTreatment,
         "treatment has (numerically) no variation beyond the controls");
  out.beta_fwl = covariance(data.y, out.t_resid) / var_resid;
  return out;
}

}  // namespace nrwe

// SPDX-License-Identifier: Apache-2.0

#include "decomposition.hpp"

#include <sstream>

#include <nlohmann/json.hpp>

#include "format.hpp"
#include "moments.hpp"

namespace nrwe {

namespace {
constexpr double kDegenerateTreatmentRatio = 1e-14;
}

Decomposition decompose_with_mu(const DataMatrix& data, const Vector& mu_values,
                                const std::string& mu_source) {
  data.validate();
  if (mu_values.size() != data.n())
    fail(ErrorCode::DimensionMismatch, "mu values length mismatch");

  FwlResult fwl = fwl_residualize(data);
  Decomposition d;
  d.mu_source = mu_source;
  d.beta = fwl.beta_fwl;
  d.denom_ols = variance(fwl.t_resid);

  const Vector t_minus_mu = data.t - mu_values;
  const Vector delta = mu_values - fwl.t_fitted;

  d.e_var_t_given_x = variance(t_minus_mu);
  // <= so a constant treatment (Var(T) = 0) still trips the guard
  if (d.e_var_t_given_x <= kDegenerateTreatmentRatio * variance(data.t))
    fail(ErrorCode::DegenerateTreatment, "Var(T - mu(X)) is numerically zero");
  d.var_delta = variance(delta);
  d.cross_term = 2.0 * covariance(t_minus_mu, delta);

  const double cov_y_tmu = covariance(data.y, t_minus_mu);
  d.weighted_effect = cov_y_tmu / d.denom_ols;
  d.misspec_bias = covariance(data.y, delta) / d.denom_ols;
  d.nrwe = cov_y_tmu / d.e_var_t_given_x;
  d.attenuation = d.nrwe - d.weighted_effect;
  return d;
}

Decomposition decompose(const DataMatrix& data, const CondMeanModel& mu) {
  if (mu.fingerprint() != data_fingerprint(data))
    fail(ErrorCode::FingerprintMismatch, "model was fitted on different data");
  const char* source = "linear";
  if (mu.method() == CondMeanMethod::Binned) source = "binned";
  if (mu.method() == CondMeanMethod::LocalLinear) source = "local_linear";
  return decompose_with_mu(data, mu.fitted_values(), source);
}

LocalDecomposition corollary1_decompose(const DataMatrix& data,
                                        const CondMeanModel& mu) {
  if (mu.fingerprint() != data_fingerprint(data))
    fail(ErrorCode::FingerprintMismatch, "model was fitted on different data");
  const Eigen::Index n = data.n();
  const int cells = mu.cell_count();
  const auto& cell_of = mu.cell_of();

  struct Acc {
    double st = 0, sy = 0, stt = 0, sty = 0;
    long count = 0;
  };
  std::vector<Acc> acc(static_cast<std::size_t>(cells));
  for (Eigen::Index i = 0; i < n; ++i) {
    auto& a = acc[static_cast<std::size_t>(cell_of[static_cast<std::size_t>(i)])];
    a.st += data.t[i];
    a.sy += data.y[i];
    a.stt += data.t[i] * data.t[i];
    a.sty += data.t[i] * data.y[i];
    a.count += 1;
  }

  LocalDecomposition out;
  double e_var = 0.0;
  for (int c = 0; c < cells; ++c) {
    const auto& a = acc[static_cast<std::size_t>(c)];
    if (a.count < 10)
      fail(ErrorCode::SparseCell,
           "cell " + std::to_string(c) + " has fewer than 10 observations");
    const double nc = static_cast<double>(a.count);
    const double var_t = a.stt / nc - (a.st / nc) * (a.st / nc);
    if (var_t <= 0.0)
      fail(ErrorCode::DegenerateCell,
           "cell " + std::to_string(c) + " has zero within-cell Var(T)");
    const double cov_yt = a.sty / nc - (a.st / nc) * (a.sy / nc);
    LocalCell cell;
    cell.cell = c;
    cell.count = a.count;
    cell.beta_x = cov_yt / var_t;
    cell.mass = nc / static_cast<double>(n);
    cell.w1 = var_t;  // scaled below once the denominator is known
    out.cells.push_back(cell);
    e_var += cell.mass * var_t;
  }

  DeltaSeries delta = delta_series(data, mu);
  out.e_var_t_given_x = e_var;
  out.var_delta = delta.variance;
  const double denom = e_var + delta.variance;
  for (auto& cell : out.cells) cell.w1 /= denom;
  out.w0 = delta.variance / denom;
  out.beta_delta = delta.variance > 0.0 ? delta.cov_with_y / delta.variance : 0.0;

  double recombined = 0.0;
  for (const auto& cell : out.cells) recombined += cell.beta_x * cell.w1 * cell.mass;
  recombined += out.beta_delta * out.w0;
  out.recombined_beta = recombined;
  out.beta_full = fwl_residualize(data).beta_fwl;
  return out;
}

std::string Decomposition::to_json() const {
  nlohmann::json j;
  j["beta"] = beta;
  j["weighted_effect"] = weighted_effect;
  j["misspec_bias"] = misspec_bias;
  j["nrwe"] = nrwe;
  j["attenuation"] = attenuation;
  j["denom_ols"] = denom_ols;
  j["e_var_t_given_x"] = e_var_t_given_x;
  j["var_delta"] = var_delta;
  j["cross_term"] = cross_term;
  j["mu_source"] = mu_source;
  return j.dump(2);
}

std::string Decomposition::to_csv_row(bool with_header) const {
  std::ostringstream out;
  if (with_header)
    out << "beta,weighted_effect,misspec_bias,nrwe,attenuation,denom_ols,"
           "e_var_t_given_x,var_delta,cross_term,mu_source\n";
  out << format_g17(beta) << ',' << format_g17(weighted_effect) << ','
      << format_g17(misspec_bias) << ',' << format_g17(nrwe) << ','
      << format_g17(attenuation) << ',' << format_g17(denom_ols) << ','
      << format_g17(e_var_t_given_x) << ',' << format_g17(var_delta) << ','
      << format_g17(cross_term) << ',' << mu_source << '\n';
  return out.str();
}

std::string LocalDecomposition::to_json() const {
  nlohmann::json j;
  j["recombined_beta"] = recombined_beta;
  j["beta_full"] = beta_full;
  j["beta_delta"] = beta_delta;
  j["w0"] = w0;
  j["e_var_t_given_x"] = e_var_t_given_x;
  j["var_delta"] = var_delta;
  auto arr = nlohmann::json::array();
  for (const auto& c : cells) {
    arr.push_back({{"cell", c.cell},
                   {"count", c.count},
                   {"beta_x", c.beta_x},
                   {"w1", c.w1},
                   {"mass", c.mass}});
  }
  j["cells"] = arr;
  return j.dump(2);
}

}  // namespace nrwe

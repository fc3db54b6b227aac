// SPDX-License-Identifier: Apache-2.0

#include "condmean.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

#include "moments.hpp"

namespace nrwe {

int default_bin_count(Eigen::Index n) {
  const int count = static_cast<int>(std::ceil(std::cbrt(static_cast<double>(n))));
  return std::min(count, 256);
}

namespace {

constexpr int kMaxCells = 4096;

std::vector<int> nonconstant_controls(const DataMatrix& data) {
  std::vector<int> cols;
  for (Eigen::Index j = 1; j < data.x.cols(); ++j) {
    const double v = variance(data.x.col(j));
    if (v > 0.0) cols.push_back(static_cast<int>(j));
  }
  return cols;
}

std::vector<double> equal_frequency_edges(const Vector& column, int bins) {
  std::vector<double> sorted(column.data(), column.data() + column.size());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> edges;
  for (int k = 1; k < bins; ++k) {
    edges.push_back(quantile_sorted(sorted, static_cast<double>(k) / bins));
  }
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

int bin_index(const std::vector<double>& edges, double v) {
  // edges partition the line into edges.size()+1 bins; v == edge goes left
  return static_cast<int>(std::upper_bound(edges.begin(), edges.end(), v) -
                          edges.begin());
}

void fit_linear(const DataMatrix& data, CondMeanModel& model) {
  OlsFit fit = ols_fit(data.t, data.x);
  model.pi_ = fit.coefficients;
  model.fitted_values_ = fit.fitted;
  model.cell_of_.assign(static_cast<std::size_t>(data.n()), 0);
  model.cell_count_ = 1;
}

void fit_binned(const DataMatrix& data, const MethodOptions& options,
                CondMeanModel& model) {
  const auto cols = nonconstant_controls(data);
  const Eigen::Index n = data.n();
  if (cols.empty()) {
    const double tbar = mean(data.t);
    model.fitted_values_ = Vector::Constant(n, tbar);
    model.cell_of_.assign(static_cast<std::size_t>(n), 0);
    model.cell_count_ = 1;
    model.cell_means_ = {tbar};
    return;
  }
  int per_control = options.bins.value_or(default_bin_count(n));
  if (per_control < 1)
    fail(ErrorCode::InvalidArgument, "bin count must be positive");
  const int dims = static_cast<int>(cols.size());
  double total = std::pow(static_cast<double>(per_control), dims);
  if (total > kMaxCells)
    per_control = std::max(
        1, static_cast<int>(std::floor(std::pow(double(kMaxCells), 1.0 / dims))));

  model.bin_edges_.clear();
  for (int c : cols)
    model.bin_edges_.push_back(equal_frequency_edges(data.x.col(c), per_control));

  // mixed-radix raw cell id, then compact to nonempty cells in id order
  std::vector<long> raw(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    long id = 0;
    for (int d = 0; d < dims; ++d) {
      const auto& edges = model.bin_edges_[static_cast<std::size_t>(d)];
      id = id * (static_cast<long>(edges.size()) + 1) +
           bin_index(edges, data.x(i, cols[static_cast<std::size_t>(d)]));
    }
    raw[static_cast<std::size_t>(i)] = id;
  }
  std::map<long, int> compact;
  for (long id : raw) compact.emplace(id, 0);
  int next = 0;
  for (auto& [id, idx] : compact) idx = next++;
  model.cell_count_ = next;
  model.cell_of_.resize(static_cast<std::size_t>(n));

  std::vector<double> sums(static_cast<std::size_t>(next), 0.0);
  std::vector<long> counts(static_cast<std::size_t>(next), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int cell = compact[raw[static_cast<std::size_t>(i)]];
    model.cell_of_[static_cast<std::size_t>(i)] = cell;
    sums[static_cast<std::size_t>(cell)] += data.t[i];
    counts[static_cast<std::size_t>(cell)] += 1;
  }
  model.cell_means_.resize(static_cast<std::size_t>(next));
  for (int c = 0; c < next; ++c)
    model.cell_means_[static_cast<std::size_t>(c)] =
        sums[static_cast<std::size_t>(c)] / static_cast<double>(counts[static_cast<std::size_t>(c)]);

  model.fitted_values_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i)
    model.fitted_values_[i] =
        model.cell_means_[static_cast<std::size_t>(model.cell_of_[static_cast<std::size_t>(i)])];
}

void fit_local_linear(const DataMatrix& data, const MethodOptions& options,
                      CondMeanModel& model) {
  const auto cols = nonconstant_controls(data);
  const Eigen::Index n = data.n();
  if (cols.empty()) {
    const double tbar = mean(data.t);
    model.fitted_values_ = Vector::Constant(n, tbar);
    model.cell_of_.assign(static_cast<std::size_t>(n), 0);
    model.cell_count_ = 1;
    return;
  }
  const int dims = static_cast<int>(cols.size());
  if (dims > 3)
    fail(ErrorCode::UnsupportedDimension,
         "local_linear supports at most 3 non-constant controls");

  model.bandwidths_.clear();
  for (int d = 0; d < dims; ++d) {
    if (options.bandwidth) {
      model.bandwidths_.push_back(*options.bandwidth);
    } else {
      const double sd = std::sqrt(variance(data.x.col(cols[static_cast<std::size_t>(d)])));
      model.bandwidths_.push_back(
          1.06 * sd * std::pow(static_cast<double>(n), -1.0 / (4.0 + dims)));
    }
    if (model.bandwidths_.back() <= 0.0)
      fail(ErrorCode::InvalidScale, "non-positive bandwidth");
  }

  model.fitted_values_.resize(n);
  Matrix z(n, dims + 1);
  z.col(0).setOnes();
  Vector w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double logk = 0.0;
      for (int d = 0; d < dims; ++d) {
        const double u = (data.x(j, cols[static_cast<std::size_t>(d)]) -
                          data.x(i, cols[static_cast<std::size_t>(d)])) /
                         model.bandwidths_[static_cast<std::size_t>(d)];
        logk -= 0.5 * u * u;
        z(j, d + 1) = data.x(j, cols[static_cast<std::size_t>(d)]) -
                      data.x(i, cols[static_cast<std::size_t>(d)]);
      }
      w[j] = std::exp(logk);
    }
    const Vector sw = w.array().sqrt();
    Matrix zw = z.array().colwise() * sw.array();
    Vector tw = data.t.array() * sw.array();
    Eigen::ColPivHouseholderQR<Matrix> qr(zw);
    if (qr.rank() < dims + 1) {
      model.fitted_values_[i] = (w.array() * data.t.array()).sum() / w.sum();
    } else {
      Vector coef = qr.solve(tw);
      model.fitted_values_[i] = coef[0];
    }
  }
  model.cell_of_.assign(static_cast<std::size_t>(n), 0);
  model.cell_count_ = 1;
}

}  // namespace

CondMeanModel fit_cond_mean(const DataMatrix& data, CondMeanMethod method,
                            const MethodOptions& options) {
  data.validate();
  CondMeanModel model;
  model.method_ = method;
  model.fingerprint_ = data_fingerprint(data);
  model.fitted_n_ = data.n();
  if (method != CondMeanMethod::Linear && data.n() < 50)
    fail(ErrorCode::TooFewObservations,
         "nonparametric conditional mean needs n >= 50");
  switch (method) {
    case CondMeanMethod::Linear: fit_linear(data, model); break;
    case CondMeanMethod::Binned: fit_binned(data, options, model); break;
    case CondMeanMethod::LocalLinear: fit_local_linear(data, options, model); break;
  }
  return model;
}

DeltaSeries delta_series(const DataMatrix& data, const CondMeanModel& model) {
  if (model.fingerprint() != data_fingerprint(data) || model.fitted_n() != data.n())
    fail(ErrorCode::FingerprintMismatch, "model was fitted on different data");
  DeltaSeries out;
  OlsFit proj = ols_fit(data.t, data.x);
  out.pi_fit = proj.coefficients;
  out.linear_fit = proj.fitted;
  if (model.method() == CondMeanMethod::Linear) {
    // identically zero by construction, not merely numerically
    out.values = Vector::Zero(data.n());
    out.variance = 0.0;
    out.cov_with_y = 0.0;
    return out;
  }
  out.values = model.fitted_values() - out.linear_fit;
  out.variance = variance(out.values);
  out.cov_with_y = covariance(data.y, out.values);
  return out;
}

std::vector<ProfilePoint> profile_cond_mean(const DataMatrix& data,
                                            int control_index, int bins) {
  data.validate();
  if (control_index < 0 || control_index >= data.x.cols())
    fail(ErrorCode::InvalidArgument, "control index out of range");
  const Vector col = data.x.col(control_index);
  if (variance(col) <= 0.0)
    fail(ErrorCode::InvalidArgument, "requested control column is constant");
  if (bins < 1) fail(ErrorCode::InvalidArgument, "bins must be positive");

  const double lo = col.minCoeff();
  const double hi = col.maxCoeff();
  const double width = (hi - lo) / bins;
  std::vector<ProfilePoint> profile(static_cast<std::size_t>(bins));
  for (int b = 0; b < bins; ++b) {
    auto& p = profile[static_cast<std::size_t>(b)];
    p.x_lo = lo + b * width;
    p.x_hi = lo + (b + 1) * width;
    p.x_mid = 0.5 * (p.x_lo + p.x_hi);
  }
  std::vector<double> sums(static_cast<std::size_t>(bins), 0.0);
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    int b = width > 0.0 ? static_cast<int>((col[i] - lo) / width) : 0;
    b = std::clamp(b, 0, bins - 1);
    sums[static_cast<std::size_t>(b)] += data.t[i];
    profile[static_cast<std::size_t>(b)].count += 1;
  }
  for (int b = 0; b < bins; ++b) {
    auto& p = profile[static_cast<std::size_t>(b)];
    p.mean_t = p.count > 0 ? sums[static_cast<std::size_t>(b)] / p.count
                           : std::numeric_limits<double>::quiet_NaN();
    p.sparse = p.count < 5;
  }
  return profile;
}

std::string CondMeanModel::to_json() const {
  nlohmann::json j;
  switch (method_) {
    case CondMeanMethod::Linear: j["method"] = "linear"; break;
    case CondMeanMethod::Binned: j["method"] = "binned"; break;
    case CondMeanMethod::LocalLinear: j["method"] = "local_linear"; break;
  }
  j["n"] = fitted_n_;
  j["fingerprint"] = fingerprint_;
  j["cell_count"] = cell_count_;
  if (method_ == CondMeanMethod::Linear)
    j["pi"] = std::vector<double>(pi_.data(), pi_.data() + pi_.size());
  if (method_ == CondMeanMethod::Binned) {
    j["edges"] = bin_edges_;
    j["means"] = cell_means_;
  }
  if (method_ == CondMeanMethod::LocalLinear) j["bandwidths"] = bandwidths_;
  return j.dump(2);
}

}  // namespace nrwe

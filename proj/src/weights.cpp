// SPDX-License-Identifier: Apache-2.0

#include "weights.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "format.hpp"
#include "moments.hpp"

namespace nrwe {

namespace {
constexpr double kNegativeWeightTolerance = 1e-12;

double clamp_weight(double w) {
  if (w < -kNegativeWeightTolerance)
    fail(ErrorCode::DomainError, "weight value below -1e-12: " + format_g17(w));
  return std::max(w, 0.0);
}

// Suffix-sum evaluator for the partial-sum numerator
// (1/n) sum_{t_j > g} (t_j - center_j) over a t-sorted sample.
struct PartialSum {
  std::vector<double> sorted_t;
  std::vector<double> suffix;  // suffix[i] = sum_{j >= i} (t_j - center_j)
  double n = 0.0;

  PartialSum(std::vector<std::pair<double, double>> t_and_center, double divisor_n)
      : n(divisor_n) {
    std::stable_sort(t_and_center.begin(), t_and_center.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    const std::size_t m = t_and_center.size();
    sorted_t.resize(m);
    suffix.resize(m + 1, 0.0);
    for (std::size_t i = m; i-- > 0;) {
      sorted_t[i] = t_and_center[i].first;
      suffix[i] = suffix[i + 1] + (t_and_center[i].first - t_and_center[i].second);
    }
  }

  double at(double g) const {
    const auto it = std::upper_bound(sorted_t.begin(), sorted_t.end(), g);
    return suffix[static_cast<std::size_t>(it - sorted_t.begin())] / n;
  }
};

}  // namespace

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
}

double trapezoid(const std::vector<double>& grid, const std::vector<double>& values) {
  if (grid.size() != values.size())
    fail(ErrorCode::DimensionMismatch, "trapezoid grid/value size mismatch");
  double acc = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i)
    acc += 0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]);
  return acc;
}

std::vector<double> weight_grid(const Vector& t, const GridSpec& spec) {
  if (spec.points < 2) fail(ErrorCode::InvalidArgument, "grid needs >= 2 points");
  std::vector<double> sorted(t.data(), t.data() + t.size());
  std::sort(sorted.begin(), sorted.end());
  const double lo = quantile_sorted(sorted, spec.quantile_lo);
  const double hi = quantile_sorted(sorted, spec.quantile_hi);
  std::vector<double> grid;
  // subdivided extensions to the exact min/max keep the tail quadrature
  // error second-order in the extension length
  const int ext = std::max(1, spec.points / 32);
  grid.reserve(static_cast<std::size_t>(spec.points + 2 * ext));
  if (sorted.front() < lo)
    for (int i = 0; i < ext; ++i)
      grid.push_back(sorted.front() + (lo - sorted.front()) * i / ext);
  if (hi > lo) {
    for (int i = 0; i < spec.points; ++i)
      grid.push_back(lo + (hi - lo) * i / (spec.points - 1));
  } else {
    grid.push_back(lo);
  }
  if (sorted.back() > grid.back()) {
    const double base = grid.back();
    for (int i = 1; i <= ext; ++i)
      grid.push_back(base + (sorted.back() - base) * i / ext);
  }
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.size() < 2)
    fail(ErrorCode::DegenerateTreatment, "treatment support is a single point");
  return grid;
}

WeightCurve yitzhaki_weights_empirical(const Vector& t, const GridSpec& spec) {
  const double var_t = variance(t);
  if (var_t <= 0.0)
    fail(ErrorCode::DegenerateTreatment, "Var(t) = 0 in Yitzhaki weights");
  const double tbar = mean(t);
  std::vector<std::pair<double, double>> pairs;
  pairs.reserve(static_cast<std::size_t>(t.size()));
  for (Eigen::Index i = 0; i < t.size(); ++i) pairs.emplace_back(t[i], tbar);
  PartialSum ps(std::move(pairs), static_cast<double>(t.size()));

  WeightCurve curve;
  curve.grid = weight_grid(t, spec);
  curve.values.reserve(curve.grid.size());
  for (double g : curve.grid) curve.values.push_back(clamp_weight(ps.at(g) / var_t));
  curve.mass = trapezoid(curve.grid, curve.values);
  return curve;
}

double gaussian_conditional_weights(double t, double h_of_x, double sigma,
                                    double denom) {
  if (sigma <= 0.0) fail(ErrorCode::InvalidScale, "sigma must be positive");
  if (denom <= 0.0) fail(ErrorCode::InvalidScale, "denominator must be positive");
  return sigma * normal_pdf((t - h_of_x) / sigma) / denom;
}

ConditionalWeightField conditional_weight_field(const DataMatrix& data,
                                                const CondMeanModel& cond_mean,
                                                WeightFieldMode mode,
                                                const GridSpec& spec) {
  if (cond_mean.fingerprint() != data_fingerprint(data))
    fail(ErrorCode::FingerprintMismatch, "cond_mean was fitted on different data");
  const Eigen::Index n = data.n();
  const int cells = cond_mean.cell_count();
  const auto& cell_of = cond_mean.cell_of();
  const Vector& mu = cond_mean.fitted_values();

  std::vector<long> counts(static_cast<std::size_t>(cells), 0);
  for (Eigen::Index i = 0; i < n; ++i)
    counts[static_cast<std::size_t>(cell_of[static_cast<std::size_t>(i)])] += 1;
  {
    std::string sparse;
    for (int c = 0; c < cells; ++c)
      if (counts[static_cast<std::size_t>(c)] < 10)
        sparse += (sparse.empty() ? "" : ",") + std::to_string(c);
    if (!sparse.empty())
      fail(ErrorCode::SparseCell, "cells below 10 observations: " + sparse);
  }

  // E[Var(T|X)] as the count-weighted mean of within-cell variances of T.
  std::vector<std::vector<std::pair<double, double>>> per_cell(
      static_cast<std::size_t>(cells));
  for (Eigen::Index i = 0; i < n; ++i)
    per_cell[static_cast<std::size_t>(cell_of[static_cast<std::size_t>(i)])]
        .emplace_back(data.t[i], mu[i]);

  double e_var = 0.0;
  for (int c = 0; c < cells; ++c) {
    const auto& obs = per_cell[static_cast<std::size_t>(c)];
    double m = 0.0;
    for (const auto& [tv, muv] : obs) m += tv;
    m /= static_cast<double>(obs.size());
    double v = 0.0;
    for (const auto& [tv, muv] : obs) v += (tv - m) * (tv - m);
    v /= static_cast<double>(obs.size());
    e_var += v * static_cast<double>(obs.size()) / static_cast<double>(n);
  }
  if (e_var <= 0.0)
    fail(ErrorCode::DegenerateTreatment, "E[Var(T|X)] is zero");

  double denom = e_var;
  if (mode == WeightFieldMode::Ols) {
    DeltaSeries delta = delta_series(data, cond_mean);
    denom += delta.variance;
  }

  ConditionalWeightField field;
  field.mode = mode;
  field.denominator = denom;
  field.grid = weight_grid(data.t, spec);
  field.cell_counts = counts;
  field.cells.reserve(static_cast<std::size_t>(cells));
  field.cell_mass_share.reserve(static_cast<std::size_t>(cells));
  for (int c = 0; c < cells; ++c) {
    auto& obs = per_cell[static_cast<std::size_t>(c)];
    const double nc = static_cast<double>(obs.size());
    PartialSum ps(std::move(obs), nc);
    WeightCurve curve;
    curve.grid = field.grid;
    curve.values.reserve(field.grid.size());
    for (double g : field.grid) curve.values.push_back(clamp_weight(ps.at(g) / denom));
    curve.mass = trapezoid(curve.grid, curve.values);
    field.cells.push_back(std::move(curve));
    field.cell_mass_share.push_back(nc / static_cast<double>(n));
  }
  return field;
}

double ConditionalWeightField::total_mass() const {
  double acc = 0.0;
  for (std::size_t c = 0; c < cells.size(); ++c)
    acc += cell_mass_share[c] * cells[c].mass;
  return acc;
}

std::string WeightCurve::to_csv() const {
  std::ostringstream out;
  out << "t,w\n";
  for (std::size_t i = 0; i < grid.size(); ++i)
    out << format_g17(grid[i]) << ',' << format_g17(values[i]) << '\n';
  return out.str();
}

}  // namespace nrwe

// SPDX-License-Identifier: Apache-2.0

#include "efficiency.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "rng.hpp"
#include "weights.hpp"

namespace nrwe {

namespace {

constexpr double kSupportCut = 1e-12;  // relative to max f
constexpr double kProjectionTol = 1e-10;
constexpr int kProjectionMaxIter = 100;

Vector trapezoid_weights(const std::vector<double>& grid) {
  const std::size_t n = grid.size();
  Vector w = Vector::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t i = 1; i < n; ++i) {
    const double half = 0.5 * (grid[i] - grid[i - 1]);
    w[static_cast<Eigen::Index>(i - 1)] += half;
    w[static_cast<Eigen::Index>(i)] += half;
  }
  return w;
}

}  // namespace

double GridDensity::quad2d(const Matrix& values) const {
  return wt.transpose() * values * wx;
}

void GridDensity::finalize() {
  if (t_grid.size() < 3 || x_grid.size() < 2)
    fail(ErrorCode::InvalidArgument, "grid too small");
  if (f.rows() != static_cast<Eigen::Index>(t_grid.size()) ||
      f.cols() != static_cast<Eigen::Index>(x_grid.size()))
    fail(ErrorCode::DimensionMismatch, "density matrix does not match the grids");
  if ((f.array() < 0.0).any())
    fail(ErrorCode::DegenerateDensity, "negative density value");
  wt = trapezoid_weights(t_grid);
  wx = trapezoid_weights(x_grid);
  const double total = quad2d(f);
  if (total <= 0.0) fail(ErrorCode::DegenerateDensity, "density has zero mass");
  f /= total;

  const auto nx = static_cast<Eigen::Index>(x_grid.size());
  const auto nt = static_cast<Eigen::Index>(t_grid.size());
  f_x.resize(nx);
  mu_x.resize(nx);
  Vector t(nt);
  for (Eigen::Index i = 0; i < nt; ++i) t[i] = t_grid[static_cast<std::size_t>(i)];
  for (Eigen::Index j = 0; j < nx; ++j) {
    f_x[j] = wt.dot(f.col(j));
    if (f_x[j] <= 0.0)
      fail(ErrorCode::DegenerateDensity,
           "zero marginal density at x index " + std::to_string(j));
    mu_x[j] = wt.dot((t.array() * f.col(j).array()).matrix()) / f_x[j];
  }
  e_var = 0.0;
  for (Eigen::Index j = 0; j < nx; ++j) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < nt; ++i) {
      const double d = t[i] - mu_x[j];
      acc += wt[i] * d * d * f(i, j);
    }
    e_var += wx[j] * acc;
  }
  if (e_var <= 0.0) fail(ErrorCode::DegenerateDensity, "E[Var(T|X)] <= 0");
}

GridDensity make_gaussian_grid_density(const Expr& h, const Expr& sigma,
                                       double x_lo, double x_hi, int t_points,
                                       int x_points) {
  if (!(x_hi > x_lo)) fail(ErrorCode::InvalidArgument, "x range is empty");
  if (t_points < 8 || x_points < 2)
    fail(ErrorCode::InvalidArgument, "grid too small");
  GridDensity d;
  d.x_grid.resize(static_cast<std::size_t>(x_points));
  for (int j = 0; j < x_points; ++j)
    d.x_grid[static_cast<std::size_t>(j)] =
        x_lo + (x_hi - x_lo) * j / (x_points - 1);

  double t_lo = std::numeric_limits<double>::infinity();
  double t_hi = -t_lo;
  std::vector<double> hx(static_cast<std::size_t>(x_points));
  std::vector<double> sx(static_cast<std::size_t>(x_points));
  for (int j = 0; j < x_points; ++j) {
    const double xv = d.x_grid[static_cast<std::size_t>(j)];
    hx[static_cast<std::size_t>(j)] = h.eval(0.0, xv);
    const double s = sigma.eval(0.0, xv);
    if (s <= 0.0) fail(ErrorCode::InvalidScale, "sigma(x) must be positive");
    sx[static_cast<std::size_t>(j)] = s;
    t_lo = std::min(t_lo, hx[static_cast<std::size_t>(j)] - 8.0 * s);
    t_hi = std::max(t_hi, hx[static_cast<std::size_t>(j)] + 8.0 * s);
  }

  d.t_grid.resize(static_cast<std::size_t>(t_points));
  for (int i = 0; i < t_points; ++i)
    d.t_grid[static_cast<std::size_t>(i)] =
        t_lo + (t_hi - t_lo) * i / (t_points - 1);

  d.f.resize(t_points, x_points);
  for (int j = 0; j < x_points; ++j) {
    const double hj = hx[static_cast<std::size_t>(j)];
    const double sj = sx[static_cast<std::size_t>(j)];
    for (int i = 0; i < t_points; ++i) {
      const double z = (d.t_grid[static_cast<std::size_t>(i)] - hj) / sj;
      d.f(i, j) = normal_pdf(z) / sj;  // f_X uniform; normalized in finalize()
    }
  }
  d.finalize();
  return d;
}

WeightGrid nrwe_star_weights(const GridDensity& density) {
  if (density.e_var <= 0.0)
    fail(ErrorCode::DegenerateDensity, "E_X[Var(T|X)] <= 0");
  const auto nt = static_cast<Eigen::Index>(density.t_grid.size());
  const auto nx = static_cast<Eigen::Index>(density.x_grid.size());
  WeightGrid w;
  w.k.resize(nt, nx);
  for (Eigen::Index j = 0; j < nx; ++j)
    for (Eigen::Index i = 0; i < nt; ++i)
      w.k(i, j) = (density.t_grid[static_cast<std::size_t>(i)] - density.mu_x[j]) *
                  density.f(i, j) / density.e_var;
  w.a = integrate_k_from_top(w.k, density.t_grid);
  w.exact_k = true;
  return w;
}

Matrix integrate_k_from_top(const Matrix& k, const std::vector<double>& t_grid) {
  const Eigen::Index nt = k.rows();
  Matrix a = Matrix::Zero(nt, k.cols());
  for (Eigen::Index j = 0; j < k.cols(); ++j) {
    for (Eigen::Index i = nt - 2; i >= 0; --i) {
      const double dt = t_grid[static_cast<std::size_t>(i + 1)] -
                        t_grid[static_cast<std::size_t>(i)];
      a(i, j) = a(i + 1, j) + 0.5 * (k(i, j) + k(i + 1, j)) * dt;
    }
  }
  return a;
}

Matrix neg_dt_central(const Matrix& a, const std::vector<double>& t_grid) {
  const Eigen::Index nt = a.rows();
  Matrix k(nt, a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    k(0, j) = -(a(1, j) - a(0, j)) / (t_grid[1] - t_grid[0]);
    for (Eigen::Index i = 1; i < nt - 1; ++i)
      k(i, j) = -(a(i + 1, j) - a(i - 1, j)) /
                (t_grid[static_cast<std::size_t>(i + 1)] -
                 t_grid[static_cast<std::size_t>(i - 1)]);
    k(nt - 1, j) = -(a(nt - 1, j) - a(nt - 2, j)) /
                   (t_grid[static_cast<std::size_t>(nt - 1)] -
                    t_grid[static_cast<std::size_t>(nt - 2)]);
  }
  return k;
}

WeightGrid weight_grid_from_a(const Matrix& a, const GridDensity& density) {
  if (a.rows() != static_cast<Eigen::Index>(density.t_grid.size()) ||
      a.cols() != static_cast<Eigen::Index>(density.x_grid.size()))
    fail(ErrorCode::DimensionMismatch, "weight grid does not match the density grid");
  WeightGrid w;
  w.a = a;
  w.k = neg_dt_central(a, density.t_grid);
  w.exact_k = false;
  return w;
}

double WeightGrid::mass(const GridDensity& density) const {
  return density.quad2d(a);
}

double variance_bound(const WeightGrid& a, const GridDensity& density,
                      double sigma2) {
  if (sigma2 < 0.0) fail(ErrorCode::InvalidScale, "sigma2 must be non-negative");
  const double fmax = density.f.maxCoeff();
  const double cut = kSupportCut * fmax;
  const double kmax = a.k.array().abs().maxCoeff();
  double acc = 0.0;
  for (Eigen::Index j = 0; j < density.f.cols(); ++j) {
    for (Eigen::Index i = 0; i < density.f.rows(); ++i) {
      if (density.f(i, j) <= cut) {
        if (std::abs(a.k(i, j)) > 1e-10 * kmax)
          fail(ErrorCode::SupportViolation,
               "k is nonzero where the density vanishes");
        continue;
      }
      acc += density.wt[i] * density.wx[j] * a.k(i, j) * a.k(i, j) / density.f(i, j);
    }
  }
  return sigma2 * acc;
}

namespace {

// Projection in the 1/f inner product keeps the iterate supported on f:
// the representer of each constraint is proportional to f.
void project_constraints(Matrix& k, const GridDensity& d) {
  const Eigen::Index nt = k.rows();
  const Eigen::Index nx = k.cols();
  Vector t(nt);
  for (Eigen::Index i = 0; i < nt; ++i) t[i] = d.t_grid[static_cast<std::size_t>(i)];
  const double t_moment_norm = [&] {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < nx; ++j)
      for (Eigen::Index i = 0; i < nt; ++i)
        acc += d.wt[i] * d.wx[j] * t[i] * t[i] * d.f(i, j);
    return acc;
  }();

  for (int iter = 0; iter < kProjectionMaxIter; ++iter) {
    double residual = 0.0;
    // family 1: zero mass per x column
    for (Eigen::Index j = 0; j < nx; ++j) {
      const double v = d.wt.dot(k.col(j));
      residual = std::max(residual, std::abs(v));
      k.col(j) -= (v / d.f_x[j]) * d.f.col(j);
    }
    // family 2: zero global t moment
    double m = 0.0;
    for (Eigen::Index j = 0; j < nx; ++j)
      for (Eigen::Index i = 0; i < nt; ++i)
        m += d.wt[i] * d.wx[j] * t[i] * k(i, j);
    residual = std::max(residual, std::abs(m));
    const double lambda = m / t_moment_norm;
    for (Eigen::Index j = 0; j < nx; ++j)
      for (Eigen::Index i = 0; i < nt; ++i)
        k(i, j) -= lambda * t[i] * d.f(i, j);
    if (residual < kProjectionTol) return;
  }
  fail(ErrorCode::ProjectionFailure,
       "constraint projection did not converge in 100 iterations");
}

Matrix smooth_random_field(const GridDensity& d, CounterRng& rng) {
  const auto nt = static_cast<Eigen::Index>(d.t_grid.size());
  const auto nx = static_cast<Eigen::Index>(d.x_grid.size());
  const double t_lo = d.t_grid.front(), t_hi = d.t_grid.back();
  const double x_lo = d.x_grid.front(), x_hi = d.x_grid.back();
  Matrix field = Matrix::Zero(nt, nx);
  const int bumps = 8;
  for (int b = 0; b < bumps; ++b) {
    const double amp = rng.next_uniform(-1.0, 1.0);
    const double ct = rng.next_uniform(t_lo + 0.1 * (t_hi - t_lo), t_hi - 0.1 * (t_hi - t_lo));
    const double cx = rng.next_uniform(x_lo, x_hi);
    const double st = rng.next_uniform(0.05, 0.25) * (t_hi - t_lo);
    const double sx = rng.next_uniform(0.1, 0.5) * (x_hi - x_lo + 1e-12);
    for (Eigen::Index j = 0; j < nx; ++j) {
      const double zx = (d.x_grid[static_cast<std::size_t>(j)] - cx) / sx;
      for (Eigen::Index i = 0; i < nt; ++i) {
        const double zt = (d.t_grid[static_cast<std::size_t>(i)] - ct) / st;
        field(i, j) += amp * std::exp(-0.5 * (zt * zt + zx * zx));
      }
    }
  }
  return field;
}

}  // namespace

Matrix constraint_projected_perturbation(const GridDensity& density,
                                         std::uint64_t seed) {
  CounterRng rng(seed);
  // modulate by f so the perturbation lives on the support of the density
  Matrix k = smooth_random_field(density, rng).cwiseProduct(density.f) /
             density.f.maxCoeff();
  project_constraints(k, density);
  return k;
}

MinimizerReport minimizer_check(const GridDensity& density, double sigma2,
                                int n_perturbations, std::uint64_t seed) {
  if (n_perturbations < 1)
    fail(ErrorCode::InvalidArgument, "need at least one perturbation");
  WeightGrid star = nrwe_star_weights(density);
  MinimizerReport report;
  report.v_star = variance_bound(star, density, sigma2);
  report.v_min_formula = sigma2 / density.e_var;

  const std::vector<double>& t_grid = density.t_grid;
  report.excesses.reserve(static_cast<std::size_t>(n_perturbations));
  for (int p = 0; p < n_perturbations; ++p) {
    const Matrix k_delta = constraint_projected_perturbation(
        density, CounterRng::split(seed, static_cast<std::uint64_t>(p)));
    WeightGrid perturbed;
    perturbed.k = star.k + k_delta;
    perturbed.a = integrate_k_from_top(perturbed.k, t_grid);
    perturbed.exact_k = true;
    report.excesses.push_back(variance_bound(perturbed, density, sigma2) -
                              report.v_star);
  }

  std::vector<double> sorted = report.excesses;
  std::sort(sorted.begin(), sorted.end());
  report.min_excess = sorted.front();
  report.median_excess = sorted[sorted.size() / 2];

  // quadratic scaling probe on the first perturbation
  {
    const Matrix k_delta =
        constraint_projected_perturbation(density, CounterRng::split(seed, 0));
    auto excess_at = [&](double eps) {
      WeightGrid g;
      g.k = star.k + eps * k_delta;
      g.a = integrate_k_from_top(g.k, t_grid);
      g.exact_k = true;
      return variance_bound(g, density, sigma2) - report.v_star;
    };
    const double e2 = excess_at(1e-2);
    const double e3 = excess_at(1e-3);
    report.scaling_ratio = e3 != 0.0 ? e2 / e3 : 0.0;
  }

  report.pass = report.min_excess >= -1e-8;
  return report;
}

UniquenessReport uniqueness_probe(const WeightGrid& a, const GridDensity& density,
                                  int basis_size) {
  if (basis_size < 1) fail(ErrorCode::InvalidArgument, "basis_size must be >= 1");
  const WeightGrid star = nrwe_star_weights(density);
  const Matrix diff = a.a - star.a;
  const auto nt = static_cast<Eigen::Index>(density.t_grid.size());
  const auto nx = static_cast<Eigen::Index>(density.x_grid.size());
  const double t_lo = density.t_grid.front(), t_hi = density.t_grid.back();
  const double x_lo = density.x_grid.front(), x_hi = density.x_grid.back();

  // x-basis: low-order polynomials plus quartile indicators
  const int n_poly = 3;
  const int n_indicator = 4;
  auto g_basis = [&](int idx, double x) -> double {
    if (idx < n_poly) return std::pow(x, idx);
    const int q = idx - n_poly;
    const double lo = x_lo + (x_hi - x_lo) * q / n_indicator;
    const double hi = x_lo + (x_hi - x_lo) * (q + 1) / n_indicator;
    return (x >= lo && (x < hi || q == n_indicator - 1)) ? 1.0 : 0.0;
  };

  // t-bumps: cos^2 windows; D integrates phi_i(t) g_j(x) against (a - a*)
  const double width = (t_hi - t_lo) / basis_size;
  auto bump = [&](int i, double t) -> double {
    const double c = t_lo + width * (i + 0.5);
    const double z = (t - c) / width;  // support |z| < 1
    if (std::abs(z) >= 1.0) return 0.0;
    const double cz = std::cos(0.5 * M_PI * z);
    return cz * cz;
  };

  UniquenessReport report;
  for (int bi = 0; bi < basis_size; ++bi) {
    Vector phi(nt);
    for (Eigen::Index i = 0; i < nt; ++i)
      phi[i] = bump(bi, density.t_grid[static_cast<std::size_t>(i)]);
    for (int gj = 0; gj < n_poly + n_indicator; ++gj) {
      double d_val = 0.0;
      for (Eigen::Index j = 0; j < nx; ++j) {
        const double g = g_basis(gj, density.x_grid[static_cast<std::size_t>(j)]);
        if (g == 0.0) continue;
        double col = 0.0;
        for (Eigen::Index i = 0; i < nt; ++i)
          col += density.wt[i] * phi[i] * diff(i, j);
        d_val += density.wx[j] * g * col;
      }
      if (std::abs(d_val) > report.max_discrepancy) {
        report.max_discrepancy = std::abs(d_val);
        report.witness_bump = bi;
        report.witness_basis = gj;
      }
    }
  }
  report.pass = report.max_discrepancy <= 1e-6;
  return report;
}

std::string MinimizerReport::to_json() const {
  nlohmann::json j;
  j["v_star"] = v_star;
  j["v_min_formula"] = v_min_formula;
  j["min_excess"] = min_excess;
  j["median_excess"] = median_excess;
  j["scaling_ratio"] = scaling_ratio;
  j["n_perturbations"] = excesses.size();
  j["pass"] = pass;
  return j.dump(2);
}

std::string UniquenessReport::to_json() const {
  nlohmann::json j;
  j["max_discrepancy"] = max_discrepancy;
  j["witness_bump"] = witness_bump;
  j["witness_basis"] = witness_basis;
  j["pass"] = pass;
  return j.dump(2);
}

}  // namespace nrwe

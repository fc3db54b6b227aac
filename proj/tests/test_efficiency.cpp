// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <set>

#include "efficiency.hpp"
#include "expr.hpp"
#include "rng.hpp"
#include "weights.hpp"

using namespace nrwe;

namespace {

const std::set<std::string> kX = {"x"};

GridDensity unit_gaussian_density(int nt = 512, int nx = 64) {
  return make_gaussian_grid_density(parse_expr("sin(x)", kX), parse_expr("1", kX),
                                    0.0, 5.0, nt, nx);
}

/// Heteroskedastic density: Var(T|x) = 1 + 2x on x in [0,1], E_X[Var] = 2.
GridDensity heteroskedastic_density(int nt = 512, int nx = 64) {
  return make_gaussian_grid_density(parse_expr("x", kX),
                                    parse_expr("sqrt(1 + 2*x)", kX), 0.0, 1.0,
                                    nt, nx);
}

}  // namespace

TEST_CASE("gaussian grid density normalizes and exposes correct moments") {
  const auto d = unit_gaussian_density();
  CHECK(d.quad2d(d.f) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(d.e_var == doctest::Approx(1.0).epsilon(1e-6));
  // marginal f_X is uniform on [0,5]
  for (Eigen::Index j = 0; j < d.f_x.size(); ++j)
    REQUIRE(d.f_x[j] == doctest::Approx(0.2).epsilon(1e-8));
  // conditional mean tracks h(x) = sin(x)
  for (std::size_t j = 0; j < d.x_grid.size(); ++j)
    REQUIRE(d.mu_x[static_cast<Eigen::Index>(j)] ==
            doctest::Approx(std::sin(d.x_grid[j])).epsilon(1e-8));
}

TEST_CASE("heteroskedastic density averages the conditional variances") {
  const auto d = heteroskedastic_density();
  CHECK(d.e_var == doctest::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("negative density entries are rejected") {
  GridDensity d;
  d.t_grid = {0, 1, 2};
  d.x_grid = {0, 1};
  d.f.resize(3, 2);
  d.f.setConstant(0.5);
  d.f(1, 1) = -0.1;
  CHECK_THROWS_AS(d.finalize(), Error);
}

TEST_CASE("optimal weights specialize to phi for a standard normal conditional") {
  // nearly-point-mass x with h = 0, sigma = 1: a*(t) = phi(t)
  const auto d = make_gaussian_grid_density(parse_expr("0", kX),
                                            parse_expr("1", kX), 0.0, 0.01,
                                            1024, 2);
  const auto star = nrwe_star_weights(d);
  // a(t,x) integrates to 1 over (t,x): per unit x-mass the curve is phi
  double sup = 0.0;
  for (std::size_t i = 0; i < d.t_grid.size(); ++i)
    sup = std::max(sup, std::abs(star.a(static_cast<Eigen::Index>(i), 0) / d.f_x[0] -
                                 normal_pdf(d.t_grid[i])));
  CHECK(sup < 1e-4);
}

TEST_CASE("optimal weights peak at the conditional mean per column") {
  const auto d = unit_gaussian_density();
  const auto star = nrwe_star_weights(d);
  for (Eigen::Index j = 0; j < star.a.cols(); ++j) {
    Eigen::Index argmax = 0;
    star.a.col(j).maxCoeff(&argmax);
    const double step = d.t_grid[1] - d.t_grid[0];
    REQUIRE(std::abs(d.t_grid[static_cast<std::size_t>(argmax)] - d.mu_x[j]) <=
            2.0 * step);
  }
}

TEST_CASE("optimal weights satisfy boundary, normalization, and constraints") {
  for (const auto& d : {unit_gaussian_density(), heteroskedastic_density()}) {
    const auto star = nrwe_star_weights(d);
    const double amax = star.a.array().abs().maxCoeff();
    // (R1) decay at the t boundaries
    CHECK(star.a.row(0).cwiseAbs().maxCoeff() <= 1e-8 * amax);
    CHECK(star.a.row(star.a.rows() - 1).cwiseAbs().maxCoeff() <= 1e-8 * amax);
    // (R2) unit mass
    CHECK(star.mass(d) == doctest::Approx(1.0).epsilon(1e-6));
    // zero k-mass per column
    for (Eigen::Index j = 0; j < star.k.cols(); ++j)
      REQUIRE(std::abs(d.wt.dot(star.k.col(j))) <= 1e-6);
    // unit t-moment of k
    double m = 0.0;
    for (Eigen::Index j = 0; j < star.k.cols(); ++j)
      for (Eigen::Index i = 0; i < star.k.rows(); ++i)
        m += d.wt[i] * d.wx[j] * d.t_grid[static_cast<std::size_t>(i)] * star.k(i, j);
    CHECK(m == doctest::Approx(1.0).epsilon(1e-4));
    // nonnegativity
    CHECK(star.a.minCoeff() >= -1e-10);
  }
}

TEST_CASE("reconstruction duality recovers a* from the stored k") {
  const auto d = unit_gaussian_density();
  const auto star = nrwe_star_weights(d);
  const Matrix rebuilt = integrate_k_from_top(star.k, d.t_grid);
  CHECK((rebuilt - star.a).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("finite-difference k agrees with the closed form to grid accuracy") {
  const auto d = unit_gaussian_density(1024, 32);
  const auto star = nrwe_star_weights(d);
  const Matrix k_fd = neg_dt_central(star.a, d.t_grid);
  const double step = d.t_grid[1] - d.t_grid[0];
  const double kmax = star.k.array().abs().maxCoeff();
  // interior points only: one-sided boundary differences are O(h)
  double sup = 0.0;
  for (Eigen::Index j = 0; j < star.k.cols(); ++j)
    for (Eigen::Index i = 1; i < star.k.rows() - 1; ++i)
      sup = std::max(sup, std::abs(k_fd(i, j) - star.k(i, j)));
  CHECK(sup <= 2.0 * step * step * kmax / (step * step) * step);  // O(h^2) scale
  CHECK(sup <= 0.01 * kmax);
}

TEST_CASE("variance bound hits the closed-form minimum at a*") {
  const auto d = unit_gaussian_density();  // E[Var(T|X)] = 1
  const auto star = nrwe_star_weights(d);
  const double v = variance_bound(star, d, 1.0);
  CHECK(std::abs(v - 1.0) <= 1e-4);
  CHECK(variance_bound(star, d, 0.0) == 0.0);
  CHECK(variance_bound(star, d, 2.5) == doctest::Approx(2.5 * v).epsilon(1e-12));
}

TEST_CASE("the quadratic expansion of V is exact for feasible perturbations") {
  const auto d = unit_gaussian_density();
  const auto star = nrwe_star_weights(d);
  const double v_star = variance_bound(star, d, 1.0);
  const Matrix k_delta = constraint_projected_perturbation(d, 77);
  WeightGrid delta_only;
  delta_only.k = k_delta;
  delta_only.a = integrate_k_from_top(k_delta, d.t_grid);
  delta_only.exact_k = true;
  const double quad_term = variance_bound(delta_only, d, 1.0);
  WeightGrid perturbed;
  perturbed.k = star.k + k_delta;
  perturbed.a = integrate_k_from_top(perturbed.k, d.t_grid);
  perturbed.exact_k = true;
  const double v = variance_bound(perturbed, d, 1.0);
  // cross term vanishes by the Lagrange conditions
  CHECK(v == doctest::Approx(v_star + quad_term).epsilon(1e-9));
  CHECK(quad_term > 0.0);
}

TEST_CASE("support violations are detected") {
  const auto d = unit_gaussian_density();
  auto star = nrwe_star_weights(d);
  star.k(0, 0) = 1.0;  // t boundary, 8 sigma out: f below the support cut
  bool caught = false;
  try {
    variance_bound(star, d, 1.0);
  } catch (const Error& e) {
    caught = true;
    CHECK(e.code() == ErrorCode::SupportViolation);
  }
  CHECK(caught);
}

TEST_CASE("projected perturbations satisfy both constraint families") {
  const auto d = heteroskedastic_density();
  for (std::uint64_t s : {1ull, 2ull, 3ull}) {
    const Matrix k = constraint_projected_perturbation(d, s);
    for (Eigen::Index j = 0; j < k.cols(); ++j)
      REQUIRE(std::abs(d.wt.dot(k.col(j))) <= 1e-9);
    double m = 0.0;
    for (Eigen::Index j = 0; j < k.cols(); ++j)
      for (Eigen::Index i = 0; i < k.rows(); ++i)
        m += d.wt[i] * d.wx[j] * d.t_grid[static_cast<std::size_t>(i)] * k(i, j);
    REQUIRE(std::abs(m) <= 1e-9);
    REQUIRE(k.array().abs().maxCoeff() > 0.0);
  }
}

TEST_CASE("minimizer check passes with quadratic scaling") {
  const auto d = unit_gaussian_density();
  const auto report = minimizer_check(d, 1.0, 25, 42);
  CHECK(report.pass);
  CHECK(report.min_excess >= -1e-8);
  CHECK(report.min_excess > 0.0);  // nonzero perturbations strictly increase V
  CHECK(std::abs(report.v_star - report.v_min_formula) <=
        1e-4 * report.v_min_formula);
  CHECK(report.scaling_ratio == doctest::Approx(100.0).epsilon(0.05));
}

TEST_CASE("uniqueness probe accepts the optimum itself") {
  const auto d = heteroskedastic_density();
  const auto star = nrwe_star_weights(d);
  const auto report = uniqueness_probe(star, d, 16);
  CHECK(report.pass);
  CHECK(report.max_discrepancy <= 1e-8);
}

TEST_CASE("per-x-normalized weights are exposed by a witness") {
  // normalize each column to unit t-mass on a density with heterogeneous
  // Var(T|x); the resulting estimand differs and some test function sees it
  const auto d = heteroskedastic_density();
  const auto star = nrwe_star_weights(d);
  Matrix a_px = star.a;
  for (Eigen::Index j = 0; j < a_px.cols(); ++j) {
    const double col_mass = d.wt.dot(a_px.col(j)) / d.f_x[j];
    a_px.col(j) *= 1.0 / col_mass;  // unit mass per column in t
  }
  // rescale to global unit mass so only the shape differs
  WeightGrid alt = weight_grid_from_a(a_px, d);
  alt.a /= d.quad2d(alt.a);
  alt.k = neg_dt_central(alt.a, d.t_grid);
  const auto report = uniqueness_probe(alt, d, 16);
  CHECK_FALSE(report.pass);
  CHECK(report.max_discrepancy > 1e-3);
  CHECK(report.witness_bump >= 0);
  CHECK(report.witness_basis >= 0);
}

TEST_CASE("a mean-zero ripple is exposed by a witness") {
  const auto d = unit_gaussian_density();
  const auto star = nrwe_star_weights(d);
  Matrix a_r = star.a;
  const double t_lo = d.t_grid.front(), t_hi = d.t_grid.back();
  const double c1 = t_lo + 0.45 * (t_hi - t_lo);
  const double c2 = t_lo + 0.55 * (t_hi - t_lo);
  const double s = 0.03 * (t_hi - t_lo);
  const double amp = 0.05 * star.a.maxCoeff();
  for (Eigen::Index j = 0; j < a_r.cols(); ++j)
    for (Eigen::Index i = 0; i < a_r.rows(); ++i) {
      const double t = d.t_grid[static_cast<std::size_t>(i)];
      const double z1 = (t - c1) / s;
      const double z2 = (t - c2) / s;
      a_r(i, j) += amp * (std::exp(-0.5 * z1 * z1) - std::exp(-0.5 * z2 * z2));
    }
  WeightGrid alt = weight_grid_from_a(a_r, d);
  // the two opposite bumps cancel: total mass is unchanged
  CHECK(alt.mass(d) == doctest::Approx(star.mass(d)).epsilon(1e-8));
  const auto report = uniqueness_probe(alt, d, 16);
  CHECK_FALSE(report.pass);
  CHECK(report.max_discrepancy > 1e-3);
}

TEST_CASE("reports serialize to JSON") {
  const auto d = unit_gaussian_density(128, 16);
  const auto rep = minimizer_check(d, 1.0, 3, 7);
  CHECK(rep.to_json().find("v_star") != std::string::npos);
  const auto star = nrwe_star_weights(d);
  CHECK(uniqueness_probe(star, d, 8).to_json().find("max_discrepancy") !=
        std::string::npos);
}

// SPDX-License-Identifier: Apache-2.0

#include "dgp.hpp"

#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "condmean.hpp"
#include "format.hpp"
#include "rng.hpp"

namespace nrwe {

void DgpSpec::validate() const {
  if (h.empty() || g.empty())
    fail(ErrorCode::InvalidArgument, "DgpSpec requires both h and g expressions");
  if (sigma_nu <= 0.0) fail(ErrorCode::InvalidScale, "sigma_nu must be positive");
  if (sigma_eps < 0.0) fail(ErrorCode::InvalidScale, "sigma_eps must be non-negative");
  if (x_dist.kind == XDist::Kind::Uniform && !(x_dist.b > x_dist.a))
    fail(ErrorCode::InvalidArgument, "uniform x_dist needs a < b");
  if (x_dist.kind == XDist::Kind::Normal && !(x_dist.b > 0.0))
    fail(ErrorCode::InvalidArgument, "normal x_dist needs sd > 0");
}

std::string DgpSpec::to_json() const {
  nlohmann::json j;
  j["h"] = h_source;
  j["g"] = g_source;
  j["sigma_nu"] = sigma_nu;
  j["sigma_eps"] = sigma_eps;
  if (x_dist.kind == XDist::Kind::Uniform)
    j["x_dist"] = {{"uniform", {x_dist.a, x_dist.b}}};
  else
    j["x_dist"] = {{"normal", {x_dist.a, x_dist.b}}};
  j["seed"] = seed;
  return j.dump();
}

DgpSpec DgpSpec::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("bad DGP spec JSON: ") + e.what());
  }
  DgpSpec spec;
  try {
    spec.h_source = j.at("h").get<std::string>();
    spec.g_source = j.at("g").get<std::string>();
    spec.sigma_nu = j.value("sigma_nu", 1.0);
    spec.sigma_eps = j.value("sigma_eps", 1.0);
    spec.seed = j.value("seed", std::uint64_t{42});
    if (j.contains("x_dist")) {
      const auto& d = j.at("x_dist");
      if (d.contains("uniform")) {
        spec.x_dist.kind = XDist::Kind::Uniform;
        spec.x_dist.a = d.at("uniform").at(0).get<double>();
        spec.x_dist.b = d.at("uniform").at(1).get<double>();
      } else if (d.contains("normal")) {
        spec.x_dist.kind = XDist::Kind::Normal;
        spec.x_dist.a = d.at("normal").at(0).get<double>();
        spec.x_dist.b = d.at("normal").at(1).get<double>();
      } else {
        fail(ErrorCode::ParseError, "x_dist must be {\"uniform\":[a,b]} or {\"normal\":[m,s]}");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("bad DGP spec JSON: ") + e.what());
  }
  spec.h = parse_expr(spec.h_source, {"x"});
  spec.g = parse_expr(spec.g_source, {"t", "x"});
  spec.validate();
  return spec;
}

DgpSpec DgpSpec::preset(const std::string& name) {
  DgpSpec spec;
  if (name == "table1-row1") {
    spec.h_source = "exp(x)";
    spec.g_source = "sin(t)^2 + x";
  } else if (name == "table1-row2") {
    spec.h_source = "exp(x)";
    spec.g_source = "t + exp(x)";
  } else if (name == "table1-row3") {
    spec.h_source = "sin(x)";
    spec.g_source = "sin(x)^2 + x^2";
  } else {
    fail(ErrorCode::InvalidArgument, "unknown DGP preset '" + name + "'");
  }
  spec.h = parse_expr(spec.h_source, {"x"});
  spec.g = parse_expr(spec.g_source, {"t", "x"});
  spec.sigma_nu = 1.0;
  spec.sigma_eps = 1.0;
  spec.x_dist = {XDist::Kind::Uniform, 0.0, 5.0};
  spec.seed = 42;
  return spec;
}

DataMatrix simulate_draws_seeded(const DgpSpec& spec, long n, std::uint64_t seed) {
  spec.validate();
  if (n < 1) fail(ErrorCode::InvalidArgument, "n must be >= 1");
  CounterRng rng(seed);
  DataMatrix d;
  d.y.resize(n);
  d.t.resize(n);
  d.x.resize(n, 2);
  d.x.col(0).setOnes();
  d.control_names = {"const", "x"};
  for (long i = 0; i < n; ++i) {
    double xv;
    if (spec.x_dist.kind == XDist::Kind::Uniform)
      xv = rng.next_uniform(spec.x_dist.a, spec.x_dist.b);
    else
      xv = spec.x_dist.a + spec.x_dist.b * rng.next_normal();
    const double nu = rng.next_normal();
    const double eps = rng.next_normal();
    const double tv = spec.h.eval(0.0, xv) + spec.sigma_nu * nu;
    d.x(i, 1) = xv;
    d.t[i] = tv;
    d.y[i] = spec.g.eval(tv, xv) + spec.sigma_eps * eps;
  }
  return d;
}

DataMatrix simulate_draws(const DgpSpec& spec, long n) {
  return simulate_draws_seeded(spec, n, spec.seed);
}

double nrwe_from_derivative_oracle(const DgpSpec& spec, long n, std::uint64_t seed) {
  spec.validate();
  const Expr dg_dt = spec.g.differentiate("t");
  const DataMatrix d = simulate_draws_seeded(spec, n, seed);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < d.n(); ++i) acc += dg_dt.eval(d.t[i], d.x(i, 1));
  return acc / static_cast<double>(n);
}

const std::vector<std::string>& MonteCarloReport::column_names() {
  static const std::vector<std::string> names = {
      "nrwe_derivative", "beta",       "misspec_bias", "weighted_effect",
      "attenuation",     "nrwe_moment", "denom_ols",   "e_var_t_given_x",
      "var_delta",       "cross_term"};
  return names;
}

namespace {

std::vector<double> report_columns(const ReplicationRow& r) {
  const auto& d = r.decomposition;
  // attenuation against the derivative-oracle NRWE, matching the table's
  // definition (NRWE minus the weighted effect)
  return {r.nrwe_derivative,
          d.beta,
          d.misspec_bias,
          d.weighted_effect,
          r.nrwe_derivative - d.weighted_effect,
          d.nrwe,
          d.denom_ols,
          d.e_var_t_given_x,
          d.var_delta,
          d.cross_term};
}

ReplicationRow run_replication(const DgpSpec& spec, long n, int rep, MuMode mu_mode) {
  const std::uint64_t sub_seed =
      CounterRng::split(spec.seed, static_cast<std::uint64_t>(rep));
  DataMatrix data = simulate_draws_seeded(spec, n, sub_seed);

  ReplicationRow row;
  row.replication = rep;
  if (mu_mode == MuMode::Oracle) {
    Vector mu(data.n());
    for (Eigen::Index i = 0; i < data.n(); ++i) mu[i] = spec.h.eval(0.0, data.x(i, 1));
    row.decomposition = decompose_with_mu(data, mu, "oracle");
  } else {
    CondMeanMethod method = CondMeanMethod::Linear;
    if (mu_mode == MuMode::EstimatedBinned) method = CondMeanMethod::Binned;
    if (mu_mode == MuMode::EstimatedLocalLinear) method = CondMeanMethod::LocalLinear;
    CondMeanModel model = fit_cond_mean(data, method);
    row.decomposition = decompose(data, model);
  }

  const Expr dg_dt = spec.g.differentiate("t");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) acc += dg_dt.eval(data.t[i], data.x(i, 1));
  row.nrwe_derivative = acc / static_cast<double>(data.n());
  return row;
}

}  // namespace

MonteCarloReport monte_carlo(const DgpSpec& spec, long n, int reps, MuMode mu_mode,
                             int threads) {
  spec.validate();
  if (reps < 2) fail(ErrorCode::InvalidArgument, "reps must be >= 2");
  MonteCarloReport report;
  report.n = n;
  report.reps = reps;
  report.seed = spec.seed;
  report.dgp_json = spec.to_json();
  report.rows.resize(static_cast<std::size_t>(reps));

  if (threads < 1) threads = 1;
  threads = std::min<int>(threads, reps);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&](int start) {
    for (int rep = start; rep < reps; rep += threads) {
      try {
        report.rows[static_cast<std::size_t>(rep)] =
            run_replication(spec, n, rep, mu_mode);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) {
          try {
            std::rethrow_exception(std::current_exception());
          } catch (const Error& e) {
            first_error = std::make_exception_ptr(
                Error(e.code(), "replication " + std::to_string(rep) + ": " + e.what()));
          } catch (...) {
            first_error = std::current_exception();
          }
        }
        return;
      }
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int s = 0; s < threads; ++s) pool.emplace_back(worker, s);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  // fixed-order reductions so means are bit-stable regardless of thread count
  const std::size_t cols = MonteCarloReport::column_names().size();
  report.means.assign(cols, 0.0);
  report.sds.assign(cols, 0.0);
  for (const auto& row : report.rows) {
    const auto vals = report_columns(row);
    for (std::size_t c = 0; c < cols; ++c) report.means[c] += vals[c];
  }
  for (std::size_t c = 0; c < cols; ++c) report.means[c] /= reps;
  for (const auto& row : report.rows) {
    const auto vals = report_columns(row);
    for (std::size_t c = 0; c < cols; ++c) {
      const double d = vals[c] - report.means[c];
      report.sds[c] += d * d;
    }
  }
  for (std::size_t c = 0; c < cols; ++c)
    report.sds[c] = std::sqrt(report.sds[c] / reps);
  return report;
}

std::string MonteCarloReport::to_report_csv() const {
  std::ostringstream out;
  out << "replication";
  for (const auto& name : column_names()) out << ',' << name;
  out << '\n';
  for (const auto& row : rows) {
    out << row.replication;
    for (double v : report_columns(row)) out << ',' << format_g17(v);
    out << '\n';
  }
  return out.str();
}

std::string MonteCarloReport::to_summary_json() const {
  nlohmann::json j;
  j["n"] = n;
  j["reps"] = reps;
  j["seed"] = seed;
  j["dgp"] = nlohmann::json::parse(dgp_json);
  const auto& names = column_names();
  nlohmann::json means_j, sds_j;
  for (std::size_t c = 0; c < names.size(); ++c) {
    means_j[names[c]] = means[c];
    sds_j[names[c]] = sds[c];
  }
  j["means"] = means_j;
  j["sds"] = sds_j;
  return j.dump(2);
}

}  // namespace nrwe

// SPDX-License-Identifier: Apache-2.0

#ifndef NRWE_DGP_HPP
#define NRWE_DGP_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "data.hpp"
#include "decomposition.hpp"
#include "expr.hpp"

namespace nrwe {

struct XDist {
  enum class Kind { Uniform, Normal } kind = Kind::Uniform;
  double a = 0.0;  // lower bound | mean
  double b = 1.0;  // upper bound | sd
};

/// Simulation design: T = h(X) + sigma_nu * Z1, Y = g(T,X) + sigma_eps * Z2.
struct DgpSpec {
  Expr h;  // in x
  Expr g;  // in (t, x)
  std::string h_source;
  std::string g_source;
  double sigma_nu = 1.0;
  double sigma_eps = 1.0;
  XDist x_dist;
  std::uint64_t seed = 42;

  void validate() const;
  std::string to_json() const;
  static DgpSpec from_json(const std::string& text);
  /// "table1-row1" | "table1-row2" | "table1-row3"
  static DgpSpec preset(const std::string& name);
};

DataMatrix simulate_draws(const DgpSpec& spec, long n);
DataMatrix simulate_draws_seeded(const DgpSpec& spec, long n, std::uint64_t seed);

/// Mean of the symbolic dg/dt over a fresh seeded draw; the density-equals-
/// weights shortcut behind this requires Gaussian treatment noise, which the
/// DgpSpec enforces by construction.
double nrwe_from_derivative_oracle(const DgpSpec& spec, long n, std::uint64_t seed);

enum class MuMode { Oracle, EstimatedLinear, EstimatedBinned, EstimatedLocalLinear };

struct ReplicationRow {
  int replication = 0;
  Decomposition decomposition;
  double nrwe_derivative = 0.0;  // derivative-oracle NRWE for this draw
};

struct MonteCarloReport {
  std::vector<ReplicationRow> rows;
  // column order matches csv_header()
  std::vector<double> means;
  std::vector<double> sds;
  long n = 0;
  int reps = 0;
  std::uint64_t seed = 0;
  std::string dgp_json;

  static const std::vector<std::string>& column_names();
  std::string to_report_csv() const;   // one row per replication
  std::string to_summary_json() const;
};

MonteCarloReport monte_carlo(const DgpSpec& spec, long n, int reps, MuMode mu_mode,
                             int threads = 1);

}  // namespace nrwe

#endif  // NRWE_DGP_HPP

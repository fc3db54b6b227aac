// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Talks to the library exclusively through the C API
// so the shared-library surface stays honest; local JSON handling is only for
// report plumbing.

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "nrwe/nrwe.h"

using nlohmann::json;

namespace {

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

LogLevel log_level() {
  const char* env = std::getenv("NRWE_LOG");
  if (env == nullptr) return LogLevel::Error;
  if (std::strcmp(env, "debug") == 0) return LogLevel::Debug;
  if (std::strcmp(env, "info") == 0) return LogLevel::Info;
  return LogLevel::Error;
}

void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::Info) std::fprintf(stderr, "[info] %s\n", msg.c_str());
}

void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::Debug) std::fprintf(stderr, "[debug] %s\n", msg.c_str());
}

// Exit codes: 0 success, 2 input/config error, 3 numeric/degeneracy error.
int exit_code_for(nrwe_status status) {
  switch (status) {
    case NRWE_OK: return 0;
    case NRWE_ERR_INPUT: return 2;
    default: return 3;
  }
}

[[noreturn]] void die(nrwe_status status) {
  std::fprintf(stderr, "error: %s\n", nrwe_last_error());
  std::exit(exit_code_for(status));
}

void check(nrwe_status status) {
  if (status != NRWE_OK) die(status);
}

struct StringOut {
  char* value = nullptr;
  ~StringOut() { nrwe_string_free(value); }
  std::string str() const { return value == nullptr ? std::string() : value; }
};

struct DatasetHandle {
  nrwe_dataset* ds = nullptr;
  ~DatasetHandle() { nrwe_dataset_free(ds); }
};

void write_file_or_die(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::fprintf(stderr, "error: cannot write '%s'\n", path.c_str());
    std::exit(2);
  }
  out << content;
}

std::string read_file_or_die(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::fprintf(stderr, "error: cannot open '%s'\n", path.c_str());
    std::exit(2);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string out_path(const std::string& out_dir, const std::string& name) {
  if (out_dir.empty() || out_dir == ".") return name;
  return out_dir + "/" + name;
}

// Shared data-source flags: either a CSV file with named columns or a DGP
// preset / JSON spec file plus a sample size.
struct DataSourceOpts {
  std::string input;
  std::string outcome = "y";
  std::string treatment = "t";
  std::string controls = "x";
  std::string dgp;
  std::string spec_path;
  long n = 10000;
  unsigned long long seed = 42;
};

void add_data_source_flags(CLI::App* cmd, DataSourceOpts& o) {
  cmd->add_option("--input", o.input, "input CSV path (header row required)");
  cmd->add_option("--outcome", o.outcome, "outcome column name");
  cmd->add_option("--treatment", o.treatment, "treatment column name");
  cmd->add_option("--controls", o.controls, "comma-separated control column names");
  cmd->add_option("--dgp", o.dgp, "DGP preset (table1-row1|row2|row3)");
  cmd->add_option("--spec", o.spec_path, "DGP spec JSON file");
  cmd->add_option("--n", o.n, "sample size for simulated input");
  cmd->add_option("--seed", o.seed, "RNG seed (counter-based splitmix64 stream)");
}

std::string dgp_text(const DataSourceOpts& o) {
  if (!o.spec_path.empty()) return read_file_or_die(o.spec_path);
  return o.dgp;
}

nrwe_dataset* acquire_dataset(const DataSourceOpts& o) {
  nrwe_dataset* ds = nullptr;
  if (!o.input.empty()) {
    log_info("loading " + o.input);
    check(nrwe_dataset_from_csv(o.input.c_str(), o.outcome.c_str(),
                                o.treatment.c_str(), o.controls.c_str(), &ds));
  } else if (!o.dgp.empty() || !o.spec_path.empty()) {
    const auto text = dgp_text(o);
    log_info("simulating n=" + std::to_string(o.n));
    check(nrwe_dataset_simulate(text.c_str(), o.n, o.seed, &ds));
  } else {
    std::fprintf(stderr, "error: provide --input or --dgp/--spec\n");
    std::exit(2);
  }
  log_debug("dataset rows=" + std::to_string(nrwe_dataset_rows(ds)));
  return ds;
}

json method_options(const std::string& cond_mean, int bins,
                    const std::string& oracle_h) {
  json opts = json::object();
  std::string m = cond_mean;
  if (m == "local-linear") m = "local_linear";
  opts["cond_mean"] = m;
  if (bins > 0) opts["bins"] = bins;
  if (!oracle_h.empty()) opts["oracle_h"] = oracle_h;
  return opts;
}

// Flat decomposition report as a two-line CSV, field order fixed.
std::string decomposition_csv(const json& report) {
  static const char* fields[] = {"beta", "weighted_effect", "misspec_bias",
                                 "nrwe", "attenuation", "denom_ols",
                                 "e_var_t_given_x", "var_delta", "cross_term"};
  std::string header, row;
  for (const char* f : fields) {
    if (!header.empty()) {
      header += ',';
      row += ',';
    }
    header += f;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", report.at(f).get<double>());
    row += buf;
  }
  header += ",mu_source";
  row += ',' + report.at("mu_source").get<std::string>();
  return header + '\n' + row + '\n';
}

int cmd_decompose(const DataSourceOpts& src, const std::string& cond_mean,
                  int bins, const std::string& oracle_h,
                  const std::string& out_dir) {
  DatasetHandle data;
  data.ds = acquire_dataset(src);
  const auto opts = method_options(cond_mean, bins, oracle_h);
  StringOut report;
  check(nrwe_decompose(data.ds, opts.dump().c_str(), &report.value));
  const json parsed = json::parse(report.str());
  write_file_or_die(out_path(out_dir, "decomposition.json"), report.str());
  write_file_or_die(out_path(out_dir, "decomposition.csv"),
                    decomposition_csv(parsed));
  std::printf("beta=%.17g weighted_effect=%.17g misspec_bias=%.17g\n",
              parsed.at("beta").get<double>(),
              parsed.at("weighted_effect").get<double>(),
              parsed.at("misspec_bias").get<double>());
  return 0;
}

int cmd_simulate(const DataSourceOpts& src, int reps, int threads,
                 const std::string& mu, const std::string& out_dir) {
  json cfg;
  const auto text = dgp_text(src);
  if (text.empty()) {
    std::fprintf(stderr, "error: provide --dgp or --spec\n");
    std::exit(2);
  }
  cfg["dgp"] = text;
  cfg["n"] = src.n;
  cfg["reps"] = reps;
  cfg["seed"] = src.seed;
  cfg["threads"] = threads;
  std::string m = mu;
  if (m == "local-linear") m = "local_linear";
  cfg["mu"] = m;
  log_info("monte carlo: n=" + std::to_string(src.n) +
           " reps=" + std::to_string(reps));
  StringOut result;
  check(nrwe_monte_carlo(cfg.dump().c_str(), &result.value));
  const json parsed = json::parse(result.str());
  write_file_or_die(out_path(out_dir, "report.csv"),
                    parsed.at("report_csv").get<std::string>());
  write_file_or_die(out_path(out_dir, "summary.json"),
                    parsed.at("summary").dump(2) + "\n");
  std::printf("wrote report.csv and summary.json (reps=%d)\n", reps);
  return 0;
}

int cmd_weights(const DataSourceOpts& src, const std::string& cond_mean,
                int bins, const std::string& mode, int grid_points,
                const std::string& out_dir) {
  DatasetHandle data;
  data.ds = acquire_dataset(src);

  json curve_opts;
  curve_opts["grid_points"] = grid_points;
  StringOut curve;
  check(nrwe_yitzhaki_curve(data.ds, curve_opts.dump().c_str(), &curve.value));
  write_file_or_die(out_path(out_dir, "yitzhaki.csv"), curve.str());

  auto field_opts = method_options(cond_mean, bins, "");
  field_opts["mode"] = mode;
  field_opts["grid_points"] = grid_points;
  StringOut field;
  check(nrwe_weight_field(data.ds, field_opts.dump().c_str(), &field.value));
  write_file_or_die(out_path(out_dir, "weight_field.json"), field.str() + "\n");
  std::printf("wrote yitzhaki.csv and weight_field.json\n");
  return 0;
}

int cmd_diagnose(const DataSourceOpts& src, int bins, const std::string& out_dir) {
  DatasetHandle data;
  data.ds = acquire_dataset(src);
  std::vector<std::string> names;
  {
    std::string rest = src.controls;
    std::size_t pos = 0;
    while (pos <= rest.size()) {
      const auto comma = rest.find(',', pos);
      const auto len = (comma == std::string::npos ? rest.size() : comma) - pos;
      if (len > 0) names.push_back(rest.substr(pos, len));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  }
  if (src.input.empty()) names = {"x"};  // simulated designs have one control
  for (const auto& name : names) {
    json opts;
    opts["control"] = name;
    if (bins > 0) opts["bins"] = bins;
    StringOut profile;
    check(nrwe_profile(data.ds, opts.dump().c_str(), &profile.value));
    write_file_or_die(out_path(out_dir, "profile_" + name + ".csv"), profile.str());
    std::printf("wrote profile_%s.csv\n", name.c_str());
  }
  return 0;
}

int cmd_verify_efficiency(const std::string& grid, const std::string& h,
                          const std::string& sigma, double sigma2,
                          int n_perturbations, unsigned long long seed,
                          const std::string& out_dir) {
  int t_grid = 512, x_grid = 64;
  if (!grid.empty()) {
    const auto xpos = grid.find('x');
    if (xpos == std::string::npos || xpos == 0 || xpos + 1 >= grid.size()) {
      std::fprintf(stderr, "error: --grid must look like 512x64\n");
      std::exit(2);
    }
    t_grid = std::atoi(grid.substr(0, xpos).c_str());
    x_grid = std::atoi(grid.substr(xpos + 1).c_str());
    if (t_grid < 8 || x_grid < 2) {
      std::fprintf(stderr, "error: --grid dimensions too small\n");
      std::exit(2);
    }
  }
  json cfg;
  cfg["t_grid"] = t_grid;
  cfg["x_grid"] = x_grid;
  cfg["h"] = h;
  cfg["sigma"] = sigma;
  cfg["sigma2"] = sigma2;
  cfg["n_perturbations"] = n_perturbations;
  cfg["seed"] = seed;
  log_info("verifying efficiency on " + std::to_string(t_grid) + "x" +
           std::to_string(x_grid) + " grid");
  StringOut result;
  check(nrwe_verify_efficiency(cfg.dump().c_str(), &result.value));
  const json parsed = json::parse(result.str());
  write_file_or_die(out_path(out_dir, "efficiency.json"), result.str() + "\n");
  std::printf("%s\n", parsed.at("pass").get<bool>() ? "PASS" : "FAIL");
  return parsed.at("pass").get<bool>() ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Regression decomposition toolkit: splits an OLS coefficient into a "
      "weighted treatment effect plus misspecification bias, emits the "
      "implied weight curves, and verifies the efficiency bound numerically.\n"
      "Randomness: counter-mode splitmix64 keyed by --seed; replication r "
      "uses the sub-stream split(seed, r). Identical flags give byte-identical "
      "outputs."};
  app.require_subcommand(1);

  std::string out_dir = ".";
  app.add_option("--out-dir", out_dir, "output directory (must exist)")
      ->capture_default_str();

  // decompose
  DataSourceOpts dec_src;
  std::string dec_cond_mean = "binned";
  int dec_bins = 0;
  std::string dec_oracle_h;
  auto* dec = app.add_subcommand(
      "decompose", "decompose the OLS coefficient on the treatment");
  add_data_source_flags(dec, dec_src);
  dec->add_option("--cond-mean", dec_cond_mean,
                  "conditional-mean method: linear|binned|local-linear")
      ->capture_default_str();
  dec->add_option("--bins", dec_bins, "bin count per control (binned method)");
  dec->add_option("--oracle-h", dec_oracle_h,
                  "expression in x used as the true E[T|X]");

  // simulate
  DataSourceOpts sim_src;
  int sim_reps = 10;
  int sim_threads = 0;
  std::string sim_mu = "oracle";
  auto* sim = app.add_subcommand(
      "simulate", "run a seeded replication study for a DGP");
  add_data_source_flags(sim, sim_src);
  sim->add_option("--reps", sim_reps, "replications")->capture_default_str();
  sim->add_option("--threads", sim_threads,
                  "worker threads (0 = available parallelism)");
  sim->add_option("--mu", sim_mu,
                  "conditional mean per replication: oracle|linear|binned|local-linear")
      ->capture_default_str();

  // weights
  DataSourceOpts w_src;
  std::string w_cond_mean = "binned";
  int w_bins = 0;
  std::string w_mode = "nrwe";
  int w_grid_points = 512;
  auto* wts = app.add_subcommand(
      "weights", "emit the univariate weight curve and the conditional field");
  add_data_source_flags(wts, w_src);
  wts->add_option("--cond-mean", w_cond_mean, "conditional-mean method")
      ->capture_default_str();
  wts->add_option("--bins", w_bins, "bin count per control");
  wts->add_option("--mode", w_mode, "denominator mode: nrwe|ols")
      ->capture_default_str();
  wts->add_option("--grid-points", w_grid_points, "t-grid resolution")
      ->capture_default_str();

  // diagnose
  DataSourceOpts diag_src;
  int diag_bins = 0;
  auto* diag = app.add_subcommand(
      "diagnose", "emit binned E[T|x_j] profiles per control");
  add_data_source_flags(diag, diag_src);
  diag->add_option("--bins", diag_bins, "profile bin count");

  // verify-efficiency
  std::string eff_grid = "512x64";
  std::string eff_h = "sin(x)";
  std::string eff_sigma = "1";
  double eff_sigma2 = 1.0;
  int eff_perturbations = 100;
  unsigned long long eff_seed = 42;
  auto* eff = app.add_subcommand(
      "verify-efficiency",
      "check the variance bound, minimality, and uniqueness on a grid");
  eff->add_option("--grid", eff_grid, "TxX grid, e.g. 512x64")
      ->capture_default_str();
  eff->add_option("--h-expr", eff_h, "conditional-mean expression in x")
      ->capture_default_str();
  eff->add_option("--sigma", eff_sigma, "treatment noise sd expression in x")
      ->capture_default_str();
  eff->add_option("--sigma2", eff_sigma2, "outcome noise variance")
      ->capture_default_str();
  eff->add_option("--perturbations", eff_perturbations,
                  "constraint-projected random perturbations")
      ->capture_default_str();
  eff->add_option("--seed", eff_seed, "RNG seed")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  if (dec->parsed())
    return cmd_decompose(dec_src, dec_cond_mean, dec_bins, dec_oracle_h, out_dir);
  if (sim->parsed())
    return cmd_simulate(sim_src, sim_reps, sim_threads, sim_mu, out_dir);
  if (wts->parsed())
    return cmd_weights(w_src, w_cond_mean, w_bins, w_mode, w_grid_points, out_dir);
  if (diag->parsed()) return cmd_diagnose(diag_src, diag_bins, out_dir);
  if (eff->parsed())
    return cmd_verify_efficiency(eff_grid, eff_h, eff_sigma, eff_sigma2,
                                 eff_perturbations, eff_seed, out_dir);
  return 2;
}

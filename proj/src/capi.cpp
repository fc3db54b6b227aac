// SPDX-License-Identifier: Apache-2.0

#include "nrwe/nrwe.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "condmean.hpp"
#include "csv.hpp"
#include "data.hpp"
#include "decomposition.hpp"
#include "dgp.hpp"
#include "efficiency.hpp"
#include "errors.hpp"
#include "expr.hpp"
#include "format.hpp"
#include "weights.hpp"

using nlohmann::json;

struct nrwe_dataset {
  nrwe::DataMatrix data;
};

namespace {

thread_local std::string g_last_error;

nrwe_status status_for(nrwe::ErrorCode code) {
  using EC = nrwe::ErrorCode;
  switch (code) {
    case EC::ParseError:
    case EC::UnknownIdentifier:
    case EC::InvalidArgument:
    case EC::IoError:
    case EC::DimensionMismatch:
    case EC::UnsupportedDimension:
      return NRWE_ERR_INPUT;
    default:
      return NRWE_ERR_NUMERIC;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out != nullptr) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename Fn>
nrwe_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return NRWE_OK;
  } catch (const nrwe::Error& e) {
    g_last_error = e.what();
    return status_for(e.code());
  } catch (const json::exception& e) {
    g_last_error = std::string("ParseError: ") + e.what();
    return NRWE_ERR_INPUT;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return NRWE_ERR_INTERNAL;
  }
}

json parse_options(const char* options_json) {
  if (options_json == nullptr || *options_json == '\0') return json::object();
  json j = json::parse(options_json);
  if (!j.is_object())
    nrwe::fail(nrwe::ErrorCode::InvalidArgument, "options must be a JSON object");
  return j;
}

nrwe::CondMeanMethod method_from_name(const std::string& name) {
  if (name == "linear") return nrwe::CondMeanMethod::Linear;
  if (name == "binned") return nrwe::CondMeanMethod::Binned;
  if (name == "local_linear" || name == "local-linear")
    return nrwe::CondMeanMethod::LocalLinear;
  nrwe::fail(nrwe::ErrorCode::InvalidArgument,
             "unknown cond_mean method '" + name + "'");
}

nrwe::MethodOptions method_options_from(const json& opts) {
  nrwe::MethodOptions mo;
  if (opts.contains("bins")) mo.bins = opts.at("bins").get<int>();
  if (opts.contains("bandwidth")) mo.bandwidth = opts.at("bandwidth").get<double>();
  return mo;
}

nrwe::CondMeanModel fit_from_options(const nrwe::DataMatrix& data, const json& opts) {
  const auto method =
      method_from_name(opts.value("cond_mean", std::string("binned")));
  return nrwe::fit_cond_mean(data, method, method_options_from(opts));
}

/// Oracle mu: evaluate an expression of x at each row's first non-constant
/// control. Restricted to single-control designs.
nrwe::Vector oracle_mu(const nrwe::DataMatrix& data, const std::string& h_source) {
  if (data.x.cols() != 2)
    nrwe::fail(nrwe::ErrorCode::UnsupportedDimension,
               "oracle_h requires exactly one non-constant control");
  const auto h = nrwe::parse_expr(h_source, {"x"});
  nrwe::Vector mu(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i)
    mu[i] = h.eval(0.0, data.x(i, 1));
  return mu;
}

nrwe::DgpSpec spec_from_json_value(const json& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s.rfind("table1-", 0) == 0) return nrwe::DgpSpec::preset(s);
    return nrwe::DgpSpec::from_json(s);
  }
  return nrwe::DgpSpec::from_json(v.dump());
}

json weight_field_to_json(const nrwe::ConditionalWeightField& field) {
  json out;
  out["grid"] = field.grid;
  out["denominator"] = field.denominator;
  out["mode"] = field.mode == nrwe::WeightFieldMode::Nrwe ? "nrwe" : "ols";
  out["cell_counts"] = field.cell_counts;
  out["cell_mass_share"] = field.cell_mass_share;
  json cells = json::array();
  for (const auto& cell : field.cells) {
    json c;
    c["values"] = cell.values;
    c["mass"] = cell.mass;
    cells.push_back(std::move(c));
  }
  out["cells"] = std::move(cells);
  out["total_mass"] = field.total_mass();
  return out;
}

}  // namespace

extern "C" {

const char* nrwe_version(void) { return "1.0.0"; }

const char* nrwe_last_error(void) { return g_last_error.c_str(); }

void nrwe_string_free(char* s) { std::free(s); }

nrwe_status nrwe_dataset_from_csv(const char* path, const char* outcome,
                                  const char* treatment, const char* controls,
                                  nrwe_dataset** out) {
  return guarded([&] {
    if (path == nullptr || outcome == nullptr || treatment == nullptr ||
        out == nullptr)
      nrwe::fail(nrwe::ErrorCode::InvalidArgument, "null argument");
    std::vector<std::string> control_names;
    if (controls != nullptr && *controls != '\0') {
      std::string rest(controls);
      std::size_t pos = 0;
      while (pos <= rest.size()) {
        const auto comma = rest.find(',', pos);
        const auto len = (comma == std::string::npos ? rest.size() : comma) - pos;
        if (len > 0) control_names.push_back(rest.substr(pos, len));
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
    }
    auto table = nrwe::read_csv(path);
    auto ds = std::make_unique<nrwe_dataset>();
    ds->data = nrwe::data_from_csv(table, outcome, treatment, control_names);
    *out = ds.release();
  });
}

nrwe_status nrwe_dataset_simulate(const char* dgp, long n,
                                  unsigned long long seed, nrwe_dataset** out) {
  return guarded([&] {
    if (dgp == nullptr || out == nullptr)
      nrwe::fail(nrwe::ErrorCode::InvalidArgument, "null argument");
    auto spec = spec_from_json_value(json(std::string(dgp)));
    if (seed != 0) spec.seed = seed;
    auto ds = std::make_unique<nrwe_dataset>();
    ds->data = nrwe::simulate_draws(spec, n);
    *out = ds.release();
  });
}

void nrwe_dataset_free(nrwe_dataset* ds) { delete ds; }

long nrwe_dataset_rows(const nrwe_dataset* ds) {
  return ds == nullptr ? 0 : static_cast<long>(ds->data.n());
}

nrwe_status nrwe_dataset_to_csv(const nrwe_dataset* ds, char** out) {
  return guarded([&] {
    if (ds == nullptr || out == nullptr)
      nrwe::fail(nrwe::ErrorCode::InvalidArgument, "null argument");
    *out = dup_string(nrwe::data_to_csv(ds->data));
  });
}

nrwe_status nrwe_decompose(const nrwe_dataset* ds, const char* options_json,
                           char** out) {
  return guarded([&] {
    if (ds == nullptr || out == nullptr)
      nrwe::fail(nrwe::ErrorCode::InvalidArgument, "null argument");
    const auto opts = parse_options(options_json);
    nrwe::Decomposition dec;
    if (opts.contains("oracle_h")) {
      const auto mu = oracle_mu(ds->data, opts.at("oracle_h").get<std::string>());
      dec = nrwe::decompose_with_mu(ds->data, mu, "oracle");
    } else {
      const auto model = fit_from_options(ds->data, opts);
      dec = nrwe::decompose(ds->data, model);
    }
    *out = dup_string(dec.to_json());
  });
}

nrwe_status nrwe_corollary1(const nrwe_dataset* ds, const char* options_json,
                            char** out) {
  return guarded([&] {
    if (ds == nullptr || out == nullptr)
      nrwe::fail(nrwe::ErrorCode::InvalidArgument, "null argument");
    const auto opts = parse_options(options_json);
    const auto model = fit_from_options(ds->data, opts);
    const auto local = nrwe::corollary1_decompose(ds->data, model);
    *out = dup_string(local.to_json());
  });
}

nrwe_status nrwe_yitzhaki_curve(const nrwe_dataset* ds, const char* options_json,
                                char** out) {
  return guarded([&] {
    if (ds == nullptr || out == nullptr)
      nrwe::fail(nrwe::ErrorCode::InvalidArgument, "null argument");
    const auto opts = parse_options(options_json);
    nrwe::GridSpec grid;
    grid.points = opts.value("grid_points", grid.points);
    const auto curve = nrwe::yitzhaki_weights_empirical(ds->data.t, grid);
    *out = dup_string(curve.to_csv());
  });
}

nrwe_status nrwe_weight_field(const nrwe_dataset* ds, const char* options_json,
                              char** out) {
  return guarded([&] {
    if (ds == nullptr || out == nullptr)
      nrwe::fail(nrwe::ErrorCode::InvalidArgument, "null argument");
    auto opts = parse_options(options_json);
    if (!opts.contains("cond_mean")) opts["cond_mean"] = "binned";
    const auto mode_name = opts.value("mode", std::string("nrwe"));
    nrwe::WeightFieldMode mode;
    if (mode_name == "nrwe") {
      mode = nrwe::WeightFieldMode::Nrwe;
    } else if (mode_name == "ols") {
      mode = nrwe::WeightFieldMode::Ols;
    } else {
      nrwe::fail(nrwe::ErrorCode::InvalidArgument,
                 "mode must be 'nrwe' or 'ols', got '" + mode_name + "'");
    }
    nrwe::GridSpec grid;
    grid.points = opts.value("grid_points", grid.points);
    const auto model = fit_from_options(ds->data, opts);
    const auto field = nrwe::conditional_weight_field(ds->data, model, mode, grid);
    *out = dup_string(weight_field_to_json(field).dump(2));
  });
}

nrwe_status nrwe_profile(const nrwe_dataset* ds, const char* options_json,
                         char** out) {
  return guarded([&] {
    if (ds == nullptr || out == nullptr)
      nrwe::fail(nrwe::ErrorCode::InvalidArgument, "null argument");
    const auto opts = parse_options(options_json);
    int control_index = 1;
    if (opts.contains("control")) {
      const auto& c = opts.at("control");
      if (c.is_number_integer()) {
        control_index = c.get<int>();
      } else {
        const auto name = c.get<std::string>();
        control_index = -1;
        for (std::size_t j = 0; j < ds->data.control_names.size(); ++j)
          if (ds->data.control_names[j] == name)
            control_index = static_cast<int>(j);
        if (control_index < 0)
          nrwe::fail(nrwe::ErrorCode::InvalidArgument,
                     "control '" + name + "' not found");
      }
    }
    const int bins =
        opts.value("bins", nrwe::default_bin_count(ds->data.n()));
    const auto points = nrwe::profile_cond_mean(ds->data, control_index, bins);
    std::string csv = "x_lo,x_hi,x_mid,mean_t,count,sparse\n";
    for (const auto& p : points) {
      csv += nrwe::format_g17(p.x_lo) + ',' + nrwe::format_g17(p.x_hi) + ',' +
             nrwe::format_g17(p.x_mid) + ',' + nrwe::format_g17(p.mean_t) + ',' +
             std::to_string(p.count) + ',' + (p.sparse ? "1" : "0") + '\n';
    }
    *out = dup_string(csv);
  });
}

nrwe_status nrwe_cond_mean_fit(const nrwe_dataset* ds, const char* options_json,
                               char** out) {
  return guarded([&] {
    if (ds == nullptr || out == nullptr)
      nrwe::fail(nrwe::ErrorCode::InvalidArgument, "null argument");
    const auto opts = parse_options(options_json);
    const auto model = fit_from_options(ds->data, opts);
    *out = dup_string(model.to_json());
  });
}

nrwe_status nrwe_monte_carlo(const char* config_json, char** out) {
  return guarded([&] {
    if (config_json == nullptr || out == nullptr)
      nrwe::fail(nrwe::ErrorCode::InvalidArgument, "null argument");
    const json cfg = json::parse(config_json);
    if (!cfg.contains("dgp"))
      nrwe::fail(nrwe::ErrorCode::InvalidArgument, "config requires 'dgp'");
    auto spec = spec_from_json_value(cfg.at("dgp"));
    if (cfg.contains("seed")) spec.seed = cfg.at("seed").get<std::uint64_t>();
    const long n = cfg.value("n", 10000L);
    const int reps = cfg.value("reps", 10);
    int threads = cfg.value("threads", 0);
    if (threads <= 0)
      threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads <= 0) threads = 1;
    const auto mu_name = cfg.value("mu", std::string("oracle"));
    nrwe::MuMode mu_mode;
    if (mu_name == "oracle") {
      mu_mode = nrwe::MuMode::Oracle;
    } else if (mu_name == "linear") {
      mu_mode = nrwe::MuMode::EstimatedLinear;
    } else if (mu_name == "binned") {
      mu_mode = nrwe::MuMode::EstimatedBinned;
    } else if (mu_name == "local_linear" || mu_name == "local-linear") {
      mu_mode = nrwe::MuMode::EstimatedLocalLinear;
    } else {
      nrwe::fail(nrwe::ErrorCode::InvalidArgument,
                 "unknown mu mode '" + mu_name + "'");
    }
    const auto report = nrwe::monte_carlo(spec, n, reps, mu_mode, threads);
    json result;
    result["summary"] = json::parse(report.to_summary_json());
    result["report_csv"] = report.to_report_csv();
    *out = dup_string(result.dump(2));
  });
}

nrwe_status nrwe_verify_efficiency(const char* config_json, char** out) {
  return guarded([&] {
    if (out == nullptr)
      nrwe::fail(nrwe::ErrorCode::InvalidArgument, "null argument");
    json cfg = json::object();
    if (config_json != nullptr && *config_json != '\0')
      cfg = json::parse(config_json);
    const int t_grid = cfg.value("t_grid", 512);
    const int x_grid = cfg.value("x_grid", 64);
    const auto h_src = cfg.value("h", std::string("sin(x)"));
    const auto sigma_src = cfg.value("sigma", std::string("1"));
    double x_lo = 0.0, x_hi = 5.0;
    if (cfg.contains("x_range")) {
      const auto& r = cfg.at("x_range");
      x_lo = r.at(0).get<double>();
      x_hi = r.at(1).get<double>();
    }
    const double sigma2 = cfg.value("sigma2", 1.0);
    const int n_pert = cfg.value("n_perturbations", 100);
    const int basis = cfg.value("basis_size", 16);
    const auto seed = cfg.value("seed", std::uint64_t{42});

    const auto h = nrwe::parse_expr(h_src, {"x"});
    const auto sigma = nrwe::parse_expr(sigma_src, {"x"});
    const auto density =
        nrwe::make_gaussian_grid_density(h, sigma, x_lo, x_hi, t_grid, x_grid);
    const auto star = nrwe::nrwe_star_weights(density);
    const auto minimizer =
        nrwe::minimizer_check(density, sigma2, n_pert, seed);
    const auto uniqueness = nrwe::uniqueness_probe(star, density, basis);

    json result;
    result["h"] = h_src;
    result["sigma"] = sigma_src;
    result["t_grid"] = t_grid;
    result["x_grid"] = x_grid;
    result["sigma2"] = sigma2;
    result["optimal_mass"] = star.mass(density);
    result["e_var_t_given_x"] = density.e_var;
    result["minimizer"] = json::parse(minimizer.to_json());
    result["uniqueness"] = json::parse(uniqueness.to_json());
    result["pass"] = minimizer.pass && uniqueness.pass;
    *out = dup_string(result.dump(2));
  });
}

}  // extern "C"

// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>
#include <nrwe/nrwe.h>

using nlohmann::json;

namespace {

/// RAII holder for API-allocated strings.
struct ApiString {
  char* s = nullptr;
  ~ApiString() { nrwe_string_free(s); }
  std::string str() const { return s ? std::string(s) : std::string(); }
};

struct Dataset {
  nrwe_dataset* ds = nullptr;
  ~Dataset() { nrwe_dataset_free(ds); }
};

std::string write_temp_csv(const std::string& name, const std::string& body) {
  const std::string path = "/tmp/" + name;
  std::ofstream out(path);
  out << body;
  return path;
}

}  // namespace

TEST_CASE("version string is present") {
  const char* v = nrwe_version();
  REQUIRE(v != nullptr);
  CHECK(std::string(v).find('.') != std::string::npos);
}

TEST_CASE("null arguments are rejected without crashing") {
  CHECK(nrwe_dataset_simulate(nullptr, 100, 1, nullptr) == NRWE_ERR_INPUT);
  CHECK(nrwe_dataset_from_csv(nullptr, "y", "t", "x", nullptr) == NRWE_ERR_INPUT);
  CHECK(nrwe_decompose(nullptr, "{}", nullptr) == NRWE_ERR_INPUT);
  CHECK(nrwe_dataset_rows(nullptr) == 0);
  nrwe_dataset_free(nullptr);    // must be a no-op
  nrwe_string_free(nullptr);     // must be a no-op
}

TEST_CASE("simulate, row count, and CSV round trip") {
  Dataset d;
  REQUIRE(nrwe_dataset_simulate("table1-row2", 500, 7, &d.ds) == NRWE_OK);
  CHECK(nrwe_dataset_rows(d.ds) == 500);
  ApiString csv;
  REQUIRE(nrwe_dataset_to_csv(d.ds, &csv.s) == NRWE_OK);
  const std::string path = write_temp_csv("nrwe_capi_roundtrip.csv", csv.str());

  Dataset back;
  REQUIRE(nrwe_dataset_from_csv(path.c_str(), "y", "t", "x", &back.ds) == NRWE_OK);
  CHECK(nrwe_dataset_rows(back.ds) == 500);
  ApiString again;
  REQUIRE(nrwe_dataset_to_csv(back.ds, &again.s) == NRWE_OK);
  CHECK(again.str() == csv.str());
  std::remove(path.c_str());
}

TEST_CASE("simulate accepts an inline JSON spec and honors the seed override") {
  const char* spec =
      "{\"h\":\"2*x\",\"g\":\"t + x\",\"sigma_nu\":1.0,\"sigma_eps\":1.0,"
      "\"x_dist\":{\"uniform\":[0,1]},\"seed\":5}";
  Dataset a, b, c;
  REQUIRE(nrwe_dataset_simulate(spec, 200, 0, &a.ds) == NRWE_OK);  // keeps seed 5
  REQUIRE(nrwe_dataset_simulate(spec, 200, 5, &b.ds) == NRWE_OK);
  REQUIRE(nrwe_dataset_simulate(spec, 200, 6, &c.ds) == NRWE_OK);
  ApiString sa, sb, sc;
  REQUIRE(nrwe_dataset_to_csv(a.ds, &sa.s) == NRWE_OK);
  REQUIRE(nrwe_dataset_to_csv(b.ds, &sb.s) == NRWE_OK);
  REQUIRE(nrwe_dataset_to_csv(c.ds, &sc.s) == NRWE_OK);
  CHECK(sa.str() == sb.str());
  CHECK(sa.str() != sc.str());
}

TEST_CASE("decompose returns the full report and additivity holds") {
  Dataset d;
  REQUIRE(nrwe_dataset_simulate("table1-row2", 50000, 3, &d.ds) == NRWE_OK);
  ApiString out;
  REQUIRE(nrwe_decompose(d.ds, "{\"cond_mean\":\"binned\"}", &out.s) == NRWE_OK);
  const auto j = json::parse(out.str());
  for (const char* key :
       {"beta", "weighted_effect", "misspec_bias", "nrwe", "attenuation",
        "denom_ols", "e_var_t_given_x", "var_delta", "cross_term", "mu_source"})
    REQUIRE(j.contains(key));
  const double beta = j["beta"].get<double>();
  CHECK(std::abs(beta - (j["weighted_effect"].get<double>() +
                         j["misspec_bias"].get<double>())) <=
        1e-10 * (1.0 + std::abs(beta)));
  CHECK(beta == doctest::Approx(1.997).epsilon(0.02));
}

TEST_CASE("linear conditional mean collapses the bias exactly through the API") {
  const char* spec =
      "{\"h\":\"1 + 3*x\",\"g\":\"2*t + x\",\"sigma_nu\":1.0,\"sigma_eps\":1.0,"
      "\"x_dist\":{\"uniform\":[0,5]},\"seed\":21}";
  Dataset d;
  REQUIRE(nrwe_dataset_simulate(spec, 20000, 0, &d.ds) == NRWE_OK);
  ApiString out;
  REQUIRE(nrwe_decompose(d.ds, "{\"cond_mean\":\"linear\"}", &out.s) == NRWE_OK);
  const auto j = json::parse(out.str());
  CHECK(j["misspec_bias"].get<double>() == 0.0);
  CHECK(j["var_delta"].get<double>() == 0.0);
  CHECK(j["nrwe"].get<double>() == j["beta"].get<double>());
}

TEST_CASE("oracle_h option routes through the expression oracle") {
  Dataset d;
  REQUIRE(nrwe_dataset_simulate("table1-row3", 50000, 9, &d.ds) == NRWE_OK);
  ApiString out;
  REQUIRE(nrwe_decompose(d.ds, "{\"oracle_h\":\"sin(x)\"}", &out.s) == NRWE_OK);
  const auto j = json::parse(out.str());
  CHECK(j["mu_source"].get<std::string>() == "oracle");
  CHECK(j["beta"].get<double>() == doctest::Approx(-0.512).epsilon(0.08));
}

TEST_CASE("corollary recombination is returned as JSON") {
  Dataset d;
  REQUIRE(nrwe_dataset_simulate("table1-row1", 50000, 2, &d.ds) == NRWE_OK);
  ApiString out;
  REQUIRE(nrwe_corollary1(d.ds, "{\"bins\":16}", &out.s) == NRWE_OK);
  const auto j = json::parse(out.str());
  REQUIRE(j.contains("recombined_beta"));
  REQUIRE(j.contains("beta_full"));
  CHECK(std::abs(j["recombined_beta"].get<double>() -
                 j["beta_full"].get<double>()) < 0.05);
}

TEST_CASE("yitzhaki curve comes back as two-column CSV") {
  Dataset d;
  REQUIRE(nrwe_dataset_simulate("table1-row2", 5000, 4, &d.ds) == NRWE_OK);
  ApiString out;
  REQUIRE(nrwe_yitzhaki_curve(d.ds, "{\"grid_points\":64}", &out.s) == NRWE_OK);
  CHECK(out.str().rfind("t,w\n", 0) == 0);
}

TEST_CASE("weight field JSON carries cells, masses, and the mode") {
  Dataset d;
  REQUIRE(nrwe_dataset_simulate("table1-row1", 50000, 6, &d.ds) == NRWE_OK);
  ApiString out;
  REQUIRE(nrwe_weight_field(d.ds, "{\"mode\":\"nrwe\",\"bins\":16}", &out.s) ==
          NRWE_OK);
  const auto j = json::parse(out.str());
  REQUIRE(j.contains("cells"));
  REQUIRE(j.contains("total_mass"));
  CHECK(j["total_mass"].get<double>() == doctest::Approx(1.0).epsilon(1e-2));
}

TEST_CASE("profile CSV has the documented header") {
  Dataset d;
  REQUIRE(nrwe_dataset_simulate("table1-row1", 20000, 8, &d.ds) == NRWE_OK);
  ApiString out;
  REQUIRE(nrwe_profile(d.ds, "{\"control\":\"x\",\"bins\":16}", &out.s) ==
          NRWE_OK);
  CHECK(out.str().rfind("x_lo,x_hi,x_mid,mean_t,count,sparse", 0) == 0);
}

TEST_CASE("cond mean fit serializes a reusable model document") {
  Dataset d;
  REQUIRE(nrwe_dataset_simulate("table1-row1", 20000, 8, &d.ds) == NRWE_OK);
  ApiString out;
  REQUIRE(nrwe_cond_mean_fit(d.ds, "{\"cond_mean\":\"binned\"}", &out.s) ==
          NRWE_OK);
  CHECK(out.str().find("binned") != std::string::npos);
}

TEST_CASE("missing CSV column is an input error naming the column") {
  const std::string path = write_temp_csv("nrwe_capi_missing.csv",
                                          "y,t,z\n1,2,3\n4,5,6\n");
  nrwe_dataset* ds = nullptr;
  CHECK(nrwe_dataset_from_csv(path.c_str(), "y", "t", "x", &ds) ==
        NRWE_ERR_INPUT);
  CHECK(std::string(nrwe_last_error()).find("x") != std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("malformed expression is an input error with an offset") {
  nrwe_dataset* ds = nullptr;
  CHECK(nrwe_dataset_simulate("{\"h\":\"exp(x)\",\"g\":\"sin(t\"}", 100, 1,
                              &ds) == NRWE_ERR_INPUT);
  CHECK(std::string(nrwe_last_error()).find("offset") != std::string::npos);
}

TEST_CASE("degenerate treatment is a numeric error") {
  const std::string path = write_temp_csv(
      "nrwe_capi_degenerate.csv",
      "y,t,x\n1,2,0\n2,2,1\n3,2,0\n4,2,1\n5,2,0\n6,2,1\n7,2,0\n8,2,1\n"
      "1,2,0\n2,2,1\n3,2,0\n4,2,1\n5,2,0\n6,2,1\n7,2,0\n8,2,1\n"
      "1,2,0\n2,2,1\n3,2,0\n4,2,1\n5,2,0\n6,2,1\n7,2,0\n8,2,1\n"
      "1,2,0\n2,2,1\n3,2,0\n4,2,1\n5,2,0\n6,2,1\n7,2,0\n8,2,1\n");
  Dataset d;
  REQUIRE(nrwe_dataset_from_csv(path.c_str(), "y", "t", "x", &d.ds) == NRWE_OK);
  ApiString out;
  CHECK(nrwe_decompose(d.ds, "{\"cond_mean\":\"linear\"}", &out.s) ==
        NRWE_ERR_NUMERIC);
  CHECK(std::string(nrwe_last_error()).find("Degenerate") != std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("unknown option values are input errors") {
  Dataset d;
  REQUIRE(nrwe_dataset_simulate("table1-row2", 1000, 1, &d.ds) == NRWE_OK);
  ApiString out;
  CHECK(nrwe_decompose(d.ds, "{\"cond_mean\":\"spline\"}", &out.s) ==
        NRWE_ERR_INPUT);
  CHECK(nrwe_decompose(d.ds, "not json", &out.s) == NRWE_ERR_INPUT);
}

TEST_CASE("monte carlo returns a summary and a per-replication CSV") {
  ApiString out;
  REQUIRE(nrwe_monte_carlo(
              "{\"dgp\":\"table1-row2\",\"n\":4000,\"reps\":5,\"seed\":11,"
              "\"mu\":\"oracle\",\"threads\":2}",
              &out.s) == NRWE_OK);
  const auto j = json::parse(out.str());
  REQUIRE(j.contains("summary"));
  REQUIRE(j.contains("report_csv"));
  const std::string csv = j["report_csv"].get<std::string>();
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
  CHECK(j["summary"]["reps"].get<int>() == 5);
}

TEST_CASE("efficiency verification passes on the default gaussian density") {
  ApiString out;
  REQUIRE(nrwe_verify_efficiency(
              "{\"t_grid\":256,\"x_grid\":32,\"h\":\"sin(x)\",\"sigma\":\"1\","
              "\"x_range\":[0,5],\"sigma2\":1.0,\"n_perturbations\":10,"
              "\"basis_size\":8,\"seed\":3}",
              &out.s) == NRWE_OK);
  const auto j = json::parse(out.str());
  CHECK(j["pass"].get<bool>());
  CHECK(j["optimal_mass"].get<double>() == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(j["minimizer"]["min_excess"].get<double>() >= -1e-8);
  CHECK(j["uniqueness"]["max_discrepancy"].get<double>() <= 1e-6);
}

TEST_CASE("error paths leave the last-error message in place") {
  nrwe_dataset* ds = nullptr;
  REQUIRE(nrwe_dataset_simulate("table1-row9", 100, 1, &ds) == NRWE_ERR_INPUT);
  CHECK(std::string(nrwe_last_error()).find("table1-row9") != std::string::npos);
}

#include <doctest.h>

#include "hypolab/runner.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>

using namespace hypolab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream is(path);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

}  // namespace

TEST_CASE("empty config yields field-level diagnostics") {
  std::vector<std::string> errors;
  parse_config(json::object(), errors);
  CHECK(!errors.empty());
  errors.clear();
  json j = {{"mode", "frobnicate"}};
  parse_config(j, errors);
  REQUIRE(!errors.empty());
  CHECK(errors.front().find("mode") != std::string::npos);
}

TEST_CASE("identical config and seed produce byte-identical output") {
  json j = {{"mode", "certify"}, {"certify.suite", "matrix4"}, {"certify.samples", 50},
            {"seed", 4}};
  std::vector<std::string> errors;
  auto cfg = parse_config(j, errors);
  REQUIRE(errors.empty());
  cfg.outdir = "test_out/det_a";
  run(cfg);
  cfg.outdir = "test_out/det_b";
  run(cfg);
  CHECK(slurp("test_out/det_a/certificate_suite.csv") ==
        slurp("test_out/det_b/certificate_suite.csv"));
}

TEST_CASE("single-point sweep degenerates to a run") {
  json j = {{"mode", "certify"}, {"certify.M", json::array({1.0})}, {"certify.kappa", 1.0},
            {"seed", 1}};
  auto recs = sweep(j, "test_out/sweep_single");
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].headline.at("lambda_bar") >= 0.025);
  CHECK(fs::exists("test_out/sweep_single/aggregate.csv"));
}

TEST_CASE("certify sweep over M is monotone nonincreasing") {
  json j = {{"mode", "certify"}, {"certify.M", json::array({0.0, 0.5, 1.0, 2.0})},
            {"certify.kappa", 1.0}, {"seed", 1}};
  auto recs = sweep(j, "test_out/sweep_M");
  REQUIRE(recs.size() == 4);
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& r : recs) {
    const double v = r.headline.at("lambda_bar");
    CHECK(v <= prev * (1 + 1e-9));
    prev = v;
  }
}

TEST_CASE("run record lists the produced files") {
  json j = {{"mode", "certify"}, {"certify.M", 1.0}, {"certify.kappa", 1.0}, {"seed", 2}};
  std::vector<std::string> errors;
  auto cfg = parse_config(j, errors);
  REQUIRE(errors.empty());
  cfg.outdir = "test_out/record";
  auto rec = run(cfg);
  CHECK(rec.headline.at("lambda_bar") >= 0.025);
  for (const auto& f : rec.files) {
    CHECK(fs::exists(f));
    CHECK(fs::file_size(f) > 0);
  }
  CHECK(fs::exists("test_out/record/record.json"));
}

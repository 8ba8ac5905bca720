#include "hypolab/runner.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>

namespace {

nlohmann::json load_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file: " + path);
  nlohmann::json j;
  is >> j;
  return j;
}

int do_validate(const std::string& path, bool quiet) {
  auto j = load_json(path);
  std::vector<std::string> errors;
  // arrays are legal for sweep; strip them before run-validation
  nlohmann::json flat = j;
  for (const auto& [k, vs] : hypolab::swept_parameters(j)) flat[k] = vs.front();
  hypolab::parse_config(flat, errors);
  for (const auto& e : errors) std::cerr << "config error: " << e << "\n";
  if (errors.empty() && !quiet) std::cout << "config ok\n";
  return errors.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hypolab: hypocoercivity laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::string outdir_override;

  auto* prun = app.add_subcommand("run", "run one experiment from a config file");
  prun->add_option("config", config_path, "flat JSON config")->required();
  prun->add_option("--out", outdir_override, "output directory override");

  auto* psweep = app.add_subcommand("sweep", "run a parameter sweep");
  psweep->add_option("config", config_path, "flat JSON config with array-valued keys")->required();
  psweep->add_option("--out", outdir_override, "output directory override");

  auto* pval = app.add_subcommand("validate", "validate a config file");
  pval->add_option("config", config_path, "flat JSON config")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (pval->parsed()) return do_validate(config_path, false);

    auto j = load_json(config_path);
    if (prun->parsed()) {
      std::vector<std::string> errors;
      hypolab::ExperimentConfig cfg = hypolab::parse_config(j, errors);
      if (!errors.empty()) {
        for (const auto& e : errors) std::cerr << "config error: " << e << "\n";
        return 1;
      }
      if (!outdir_override.empty()) cfg.outdir = outdir_override;
      auto rec = hypolab::run(cfg);
      for (const auto& [k, v] : rec.headline) std::cout << k << " = " << v << "\n";
      for (const auto& [k, v] : rec.verdicts)
        std::cout << k << " = " << (v ? "pass" : "FAIL") << "\n";
      return rec.negative_result ? 2 : 0;
    }
    // sweep
    std::string outdir = outdir_override;
    if (outdir.empty()) {
      if (const char* env = std::getenv("HYPOLAB_OUT"))
        outdir = env;
      else if (j.contains("output.dir") && j["output.dir"].is_string())
        outdir = j["output.dir"].get<std::string>();
      else
        outdir = "out";
    }
    std::string agg;
    auto recs = hypolab::sweep(j, outdir, &agg);
    std::cout << "sweep complete: " << recs.size() << " runs, aggregate " << agg << "\n";
    bool any_negative = false;
    for (const auto& r : recs) any_negative = any_negative || r.negative_result;
    return any_negative ? 2 : 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

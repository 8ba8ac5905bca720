#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace hypolab {

/// Flat configuration: dotted keys, scalar values; array values mark swept
/// parameters (at most two).
struct ExperimentConfig {
  std::string mode;
  std::map<std::string, double> num;
  std::map<std::string, std::string> str;
  unsigned seed = 1;
  std::string outdir = "out";

  double get(const std::string& key, double fallback) const;
  std::string gets(const std::string& key, const std::string& fallback) const;
};

struct RunRecord {
  ExperimentConfig config;
  std::string version;
  double wall_clock_s = 0;
  std::vector<std::string> files;
  std::map<std::string, double> headline;
  std::map<std::string, bool> verdicts;
  bool negative_result = false;  // a certificate legitimately failed
};

/// Parse + validate a flat JSON config; collects field-level problems.
ExperimentConfig parse_config(const nlohmann::json& j, std::vector<std::string>& errors);
std::vector<std::pair<std::string, std::vector<double>>> swept_parameters(const nlohmann::json& j);

RunRecord run(const ExperimentConfig& cfg);

/// Independent runs over the cross product of the swept values, aggregate CSV
/// with one row per run in lexicographic order of the swept values.
std::vector<RunRecord> sweep(const nlohmann::json& config_json, const std::string& outdir,
                             std::string* aggregate_csv_path = nullptr);

void write_record_json(const RunRecord& rec, const std::string& path);

}  // namespace hypolab

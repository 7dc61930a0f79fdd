#pragma once

#include <json.hpp>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ppcm/problems.hpp"

namespace ppcm {

/// Everything one experiment needs. Settable from a JSON config file and
/// from command-line flags; flags win on conflict.
struct ExperimentConfig {
  std::string problem = "lsq";  // lsq | toy | file
  std::string instance_path;    // manifest.json path when problem == file
  int m = 2000;                 // desk-scale defaults
  int n = 100;
  int p = 2;
  std::uint64_t seed = 1;
  std::string topology = "complete";  // complete | ring | star | er:<prob>
  std::vector<std::string> methods = {"ppcm"};
  double eta = 0.9;
  double gamma = 1.9;
  double tol = 1e-3;
  int max_iters = 10000;
  double wagm_step_c = 1e-4;
  bool wagm_fixed_step = false;
  double extragradient_beta = 0.5;
  std::string constraint = "none";  // none | box:<lo>:<hi> | ball:<r>
  std::string out_dir = ".";
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// Per-method outcome. Accuracy is measured per agent against the direct
/// least-squares solution and averaged.
struct MethodResult {
  std::string method;
  bool converged = false;
  int iterations = 0;
  double seconds = 0.0;
  double l2_error = std::numeric_limits<double>::quiet_NaN();
  double linf_error = std::numeric_limits<double>::quiet_NaN();
  double consensus_gap = std::numeric_limits<double>::quiet_NaN();
  std::string error;  // empty on success
};

struct ComparisonReport {
  ExperimentConfig config;
  double oracle_seconds = 0.0;
  double oracle_gradient_residual = 0.0;
  std::string scale_note;
  std::vector<MethodResult> methods;
};

nlohmann::json report_to_json(const ComparisonReport& report);
ComparisonReport report_from_json(const nlohmann::json& j, const std::string& origin);

/// Writes instance_B.txt, instance_b.txt and manifest.json into out_dir.
void cmd_generate(const ExperimentConfig& cfg);

/// Runs every requested method against the oracle solution and writes
/// report.json plus one trace_<method>.csv per method into out_dir.
/// Method failures are recorded in the report; the run continues.
ComparisonReport cmd_run(const ExperimentConfig& cfg);

/// Merges reports into one table sorted by (method, p). Returns the text
/// rendering; also writes a CSV next to it when csv_out is nonempty.
std::string cmd_compare(const std::vector<std::string>& report_paths,
                        const std::string& csv_out);

/// Supported method names, in canonical order.
const std::vector<std::string>& known_methods();

}  // namespace ppcm

#include <CLI11.hpp>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "ppcm/bench.hpp"
#include "ppcm/errors.hpp"
#include "ppcm/io.hpp"

namespace {

// Flags the user typed beat values from --config. CLI11 has already written
// parsed flags into cfg, so only fields the user did not pass are restored
// from the file.
void merge_config_file(CLI::App& cmd, const std::string& path,
                       ppcm::ExperimentConfig& cfg) {
  ppcm::ExperimentConfig from_file;
  try {
    from_file = ppcm::config_from_json(nlohmann::json::parse(ppcm::read_text_file(path)));
  } catch (const nlohmann::json::exception& ex) {
    throw ppcm::SchemaMismatch(path + ": " + ex.what());
  }
  const auto keep_cli = [&](const std::string& flag) {
    const CLI::Option* opt = cmd.get_option_no_throw(flag);
    return opt != nullptr && opt->count() > 0;
  };
  if (!keep_cli("--problem")) cfg.problem = from_file.problem;
  if (!keep_cli("--instance")) cfg.instance_path = from_file.instance_path;
  if (!keep_cli("--m")) cfg.m = from_file.m;
  if (!keep_cli("--n")) cfg.n = from_file.n;
  if (!keep_cli("--p")) cfg.p = from_file.p;
  if (!keep_cli("--seed")) cfg.seed = from_file.seed;
  if (!keep_cli("--topology")) cfg.topology = from_file.topology;
  if (!keep_cli("--method")) cfg.methods = from_file.methods;
  if (!keep_cli("--eta")) cfg.eta = from_file.eta;
  if (!keep_cli("--gamma")) cfg.gamma = from_file.gamma;
  if (!keep_cli("--tol")) cfg.tol = from_file.tol;
  if (!keep_cli("--max-iters")) cfg.max_iters = from_file.max_iters;
  if (!keep_cli("--wagm-step-c")) cfg.wagm_step_c = from_file.wagm_step_c;
  if (!keep_cli("--wagm-fixed-step")) cfg.wagm_fixed_step = from_file.wagm_fixed_step;
  if (!keep_cli("--beta")) cfg.extragradient_beta = from_file.extragradient_beta;
  if (!keep_cli("--constraint")) cfg.constraint = from_file.constraint;
  if (!keep_cli("--out")) cfg.out_dir = from_file.out_dir;
}

void add_common_flags(CLI::App& cmd, ppcm::ExperimentConfig& cfg,
                      std::string& config_path) {
  cmd.add_option("--config", config_path, "JSON config file; flags win on conflict");
  cmd.add_option("--problem", cfg.problem, "lsq | toy | file");
  cmd.add_option("--instance", cfg.instance_path, "manifest.json of a stored instance");
  cmd.add_option("--m", cfg.m, "rows of the least-squares system");
  cmd.add_option("--n", cfg.n, "unknowns");
  cmd.add_option("--p", cfg.p, "number of agents");
  cmd.add_option("--seed", cfg.seed, "instance seed");
  cmd.add_option("--topology", cfg.topology, "complete | ring | star | er:<prob>");
  cmd.add_option("--method", cfg.methods,
                 "methods to run (comma separated or repeated)")
      ->delimiter(',');
  cmd.add_option("--eta", cfg.eta, "acceptance ratio bound in (0,1)");
  cmd.add_option("--gamma", cfg.gamma, "adaptive step relaxation in [1,2)");
  cmd.add_option("--tol", cfg.tol, "stopping tolerance");
  cmd.add_option("--max-iters", cfg.max_iters, "iteration cap");
  cmd.add_option("--wagm-step-c", cfg.wagm_step_c, "WAGM step constant c in c/(k+1)");
  cmd.add_flag("--wagm-fixed-step", cfg.wagm_fixed_step,
               "use a fixed WAGM step c instead of c/(k+1)");
  cmd.add_option("--beta", cfg.extragradient_beta, "extragradient step size");
  cmd.add_option("--constraint", cfg.constraint, "none | box:<lo>:<hi> | ball:<r>");
  cmd.add_option("--out", cfg.out_dir, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed consensus optimization benchmark"};
  app.require_subcommand(1);

  ppcm::ExperimentConfig gen_cfg;
  std::string gen_config_path;
  CLI::App* gen = app.add_subcommand("generate", "write a least-squares instance to disk");
  add_common_flags(*gen, gen_cfg, gen_config_path);

  ppcm::ExperimentConfig run_cfg;
  std::string run_config_path;
  CLI::App* run = app.add_subcommand("run", "run solvers and write report + traces");
  add_common_flags(*run, run_cfg, run_config_path);

  std::vector<std::string> report_paths;
  std::string compare_csv = "compare.csv";
  CLI::App* compare = app.add_subcommand("compare", "merge run reports into one table");
  compare->add_option("reports", report_paths, "report.json files")->required();
  compare->add_option("--csv", compare_csv, "merged CSV output path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      if (!gen_config_path.empty()) merge_config_file(*gen, gen_config_path, gen_cfg);
      ppcm::cmd_generate(gen_cfg);
      std::cout << "instance written to " << gen_cfg.out_dir << '\n';
      return 0;
    }
    if (run->parsed()) {
      if (!run_config_path.empty()) merge_config_file(*run, run_config_path, run_cfg);
      const ppcm::ComparisonReport report = ppcm::cmd_run(run_cfg);
      for (const auto& m : report.methods) {
        if (!m.error.empty()) {
          std::cout << m.method << ": error: " << m.error << '\n';
        } else {
          std::cout << m.method << ": " << (m.converged ? "converged" : "not converged")
                    << " in " << m.iterations << " iterations, l2 error "
                    << ppcm::format_double(m.l2_error) << '\n';
        }
      }
      std::cout << "report written to " << report.config.out_dir << "/report.json\n";
      // A single requested method that failed makes the whole run fail.
      if (report.methods.size() == 1 && !report.methods.front().error.empty()) return 1;
      return 0;
    }
    if (compare->parsed()) {
      std::cout << ppcm::cmd_compare(report_paths, compare_csv);
      return 0;
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  return 0;
}

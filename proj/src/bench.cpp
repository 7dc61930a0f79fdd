#include "ppcm/bench.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iomanip>
#include <sstream>
#include <tuple>

#include "ppcm/errors.hpp"
#include "ppcm/io.hpp"
#include "ppcm/runtime.hpp"
#include "ppcm/vi_solver.hpp"

namespace ppcm {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> names = {
      "ppcm", "ppcm_central_unit", "ppcm_central_adaptive", "wagm", "extragradient"};
  return names;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  try {
    if (j.contains("problem")) cfg.problem = j["problem"].get<std::string>();
    if (j.contains("instance_path")) cfg.instance_path = j["instance_path"].get<std::string>();
    if (j.contains("m")) cfg.m = j["m"].get<int>();
    if (j.contains("n")) cfg.n = j["n"].get<int>();
    if (j.contains("p")) cfg.p = j["p"].get<int>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("topology")) cfg.topology = j["topology"].get<std::string>();
    if (j.contains("methods")) cfg.methods = j["methods"].get<std::vector<std::string>>();
    if (j.contains("eta")) cfg.eta = j["eta"].get<double>();
    if (j.contains("gamma")) cfg.gamma = j["gamma"].get<double>();
    if (j.contains("tol")) cfg.tol = j["tol"].get<double>();
    if (j.contains("max_iters")) cfg.max_iters = j["max_iters"].get<int>();
    if (j.contains("wagm_step_c")) cfg.wagm_step_c = j["wagm_step_c"].get<double>();
    if (j.contains("wagm_fixed_step")) cfg.wagm_fixed_step = j["wagm_fixed_step"].get<bool>();
    if (j.contains("extragradient_beta"))
      cfg.extragradient_beta = j["extragradient_beta"].get<double>();
    if (j.contains("constraint")) cfg.constraint = j["constraint"].get<std::string>();
    if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
  } catch (const json::exception& ex) {
    throw SchemaMismatch(std::string("experiment config: ") + ex.what());
  }
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  return json{{"problem", cfg.problem},
              {"instance_path", cfg.instance_path},
              {"m", cfg.m},
              {"n", cfg.n},
              {"p", cfg.p},
              {"seed", cfg.seed},
              {"topology", cfg.topology},
              {"methods", cfg.methods},
              {"eta", cfg.eta},
              {"gamma", cfg.gamma},
              {"tol", cfg.tol},
              {"max_iters", cfg.max_iters},
              {"wagm_step_c", cfg.wagm_step_c},
              {"wagm_fixed_step", cfg.wagm_fixed_step},
              {"extragradient_beta", cfg.extragradient_beta},
              {"constraint", cfg.constraint},
              {"out_dir", cfg.out_dir}};
}

namespace {

Topology parse_topology(const std::string& spec, int p, std::uint64_t seed) {
  if (spec == "complete") return build_topology(TopologyKind::Complete, p, seed);
  if (spec == "ring") return build_topology(TopologyKind::Ring, p, seed);
  if (spec == "star") return build_topology(TopologyKind::Star, p, seed);
  if (spec.rfind("er:", 0) == 0) {
    const double prob = std::stod(spec.substr(3));
    return build_topology(TopologyKind::ErdosRenyi, p, seed, prob);
  }
  throw Error("unknown topology: " + spec);
}

std::optional<ConvexSet> parse_constraint(const std::string& spec, int n) {
  if (spec.empty() || spec == "none") return std::nullopt;
  if (spec.rfind("box:", 0) == 0) {
    const auto rest = spec.substr(4);
    const auto colon = rest.find(':');
    if (colon == std::string::npos) throw Error("constraint box needs box:<lo>:<hi>");
    const double lo = std::stod(rest.substr(0, colon));
    const double hi = std::stod(rest.substr(colon + 1));
    ConvexSet s = Box{Eigen::VectorXd::Constant(n, lo), Eigen::VectorXd::Constant(n, hi)};
    validate_set(s);
    return s;
  }
  if (spec.rfind("ball:", 0) == 0) {
    const double radius = std::stod(spec.substr(5));
    ConvexSet s = Ball{Eigen::VectorXd::Zero(n), radius};
    validate_set(s);
    return s;
  }
  throw Error("unknown constraint: " + spec);
}

LsqInstance load_instance(const std::string& manifest_path) {
  json manifest;
  try {
    manifest = json::parse(read_text_file(manifest_path));
  } catch (const json::exception& ex) {
    throw SchemaMismatch("manifest " + manifest_path + ": " + ex.what());
  }
  LsqInstance inst;
  try {
    const fs::path dir = fs::path(manifest_path).parent_path();
    inst.B = load_matrix((dir / manifest.at("files").at("B").get<std::string>()).string());
    inst.b = load_vector((dir / manifest.at("files").at("b").get<std::string>()).string());
    inst.seed = manifest.at("seed").get<std::uint64_t>();
    for (const auto& range : manifest.at("partition"))
      inst.partition.emplace_back(range[0].get<int>(), range[1].get<int>());
  } catch (const json::exception& ex) {
    throw SchemaMismatch("manifest " + manifest_path + ": " + ex.what());
  }
  if (inst.partition.empty() || inst.partition.back().second != inst.B.rows())
    throw SchemaMismatch("manifest " + manifest_path + ": partition does not cover B");
  return inst;
}

struct PreparedProblem {
  LsqInstance instance;
  ConsensusProblem problem;
  Topology topology;
};

PreparedProblem prepare_problem(ExperimentConfig& cfg) {
  PreparedProblem prep;
  if (cfg.problem == "toy") {
    std::tie(prep.instance, prep.problem) = toy_problem();
    cfg.m = 2;
    cfg.n = 1;
    cfg.p = 2;
    cfg.topology = "complete";
    prep.topology = prep.problem.graph.topology;
  } else if (cfg.problem == "lsq") {
    prep.topology = parse_topology(cfg.topology, cfg.p, cfg.seed);
    std::tie(prep.instance, prep.problem) =
        generate_lsq(cfg.m, cfg.n, cfg.p, cfg.seed, prep.topology);
  } else if (cfg.problem == "file") {
    prep.instance = load_instance(cfg.instance_path);
    cfg.m = static_cast<int>(prep.instance.B.rows());
    cfg.n = static_cast<int>(prep.instance.B.cols());
    cfg.p = static_cast<int>(prep.instance.partition.size());
    cfg.seed = prep.instance.seed;
    prep.topology = parse_topology(cfg.topology, cfg.p, cfg.seed);
    prep.problem = lsq_consensus_problem(prep.instance, prep.topology);
  } else {
    throw Error("unknown problem kind: " + cfg.problem);
  }
  if (const auto shared = parse_constraint(cfg.constraint, cfg.n)) {
    prep.problem = lsq_consensus_problem(prep.instance, prep.topology, &*shared);
  }
  return prep;
}

MethodResult run_method(const std::string& name, const ConsensusProblem& cp,
                        const Eigen::VectorXd& x_star, const ExperimentConfig& cfg) {
  MethodResult res;
  res.method = name;
  const int p = cp.p();
  const int n = cp.n;

  const auto fill_errors = [&](const Eigen::VectorXd& x_stacked) {
    double l2 = 0.0, linf = 0.0;
    for (int i = 0; i < p; ++i) {
      const Eigen::VectorXd diff =
          x_stacked.segment(static_cast<Eigen::Index>(i) * n, n) - x_star;
      l2 += diff.norm();
      linf += diff.lpNorm<Eigen::Infinity>();
    }
    res.l2_error = l2 / p;
    res.linf_error = linf / p;
    res.consensus_gap = consensus_gap(cp, x_stacked);
  };

  if (name == "ppcm" || name == "wagm") {
    SimulationConfig sim_cfg;
    sim_cfg.eta = cfg.eta;
    sim_cfg.tol = cfg.tol;
    sim_cfg.max_iters = cfg.max_iters;
    sim_cfg.method = name == "ppcm" ? Method::Ppcm : Method::Wagm;
    sim_cfg.wagm_step_c = cfg.wagm_step_c;
    sim_cfg.wagm_fixed_step = cfg.wagm_fixed_step;
    sim_cfg.seed = cfg.seed;
    sim_cfg.record_states = false;
    const auto [states, transcript] = simulate(cp, sim_cfg, &x_star);
    res.converged = transcript.status == TerminationStatus::Converged;
    res.iterations = transcript.total_rounds;
    res.seconds = transcript.wall_seconds;
    Eigen::VectorXd stacked(cp.stacked_size());
    for (const auto& st : states)
      stacked.segment(static_cast<Eigen::Index>(st.id) * n, n) = st.x;
    fill_errors(stacked);
    write_text_file((fs::path(cfg.out_dir) / ("trace_" + name + ".csv")).string(),
                    transcript_csv(transcript));
    return res;
  }

  if (name == "ppcm_central_unit" || name == "ppcm_central_adaptive") {
    SolverConfig sol_cfg;
    sol_cfg.eta = cfg.eta;
    sol_cfg.gamma = cfg.gamma;
    sol_cfg.tol = cfg.tol;
    sol_cfg.max_iters = cfg.max_iters;
    sol_cfg.step_mode =
        name == "ppcm_central_unit" ? StepMode::Unit : StepMode::Adaptive;
    auto [u, report] = solve(cp, sol_cfg, make_start_point(cp));
    report.method = name;
    res.converged = report.converged();
    res.iterations = report.total_iters;
    res.seconds = report.wall_seconds;
    fill_errors(u.x);
    write_text_file((fs::path(cfg.out_dir) / ("trace_" + name + ".csv")).string(),
                    run_report_csv(report));
    return res;
  }

  if (name == "extragradient") {
    auto [u, report] = extragradient_solve(cp, cfg.extragradient_beta, cfg.tol,
                                           cfg.max_iters, make_start_point(cp));
    res.converged = report.converged();
    res.iterations = report.total_iters;
    res.seconds = report.wall_seconds;
    fill_errors(u.x);
    write_text_file((fs::path(cfg.out_dir) / ("trace_" + name + ".csv")).string(),
                    run_report_csv(report));
    return res;
  }

  throw Error("unknown method: " + name);
}

}  // namespace

void cmd_generate(const ExperimentConfig& cfg) {
  if (cfg.problem != "lsq")
    throw Error("generate: only the lsq problem writes instance files");
  const auto topology = parse_topology(cfg.topology, cfg.p, cfg.seed);
  const auto [inst, cp] = generate_lsq(cfg.m, cfg.n, cfg.p, cfg.seed, topology);
  (void)cp;

  fs::create_directories(cfg.out_dir);
  const fs::path dir(cfg.out_dir);
  save_matrix((dir / "instance_B.txt").string(), inst.B);
  save_vector((dir / "instance_b.txt").string(), inst.b);

  json partition = json::array();
  for (const auto& [begin, end] : inst.partition) partition.push_back({begin, end});
  const json manifest{{"m", cfg.m},
                      {"n", cfg.n},
                      {"p", cfg.p},
                      {"seed", cfg.seed},
                      {"partition", partition},
                      {"topology", topology_to_json(topology)},
                      {"files", json{{"B", "instance_B.txt"}, {"b", "instance_b.txt"}}}};
  write_text_file((dir / "manifest.json").string(), manifest.dump(2) + "\n");
}

ComparisonReport cmd_run(const ExperimentConfig& cfg0) {
  ExperimentConfig cfg = cfg0;
  fs::create_directories(cfg.out_dir);
  PreparedProblem prep = prepare_problem(cfg);

  ComparisonReport report;
  report.scale_note =
      "accuracy is the per-agent distance to the direct least-squares solve, "
      "averaged over agents; wall-clock fields are informational only";

  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::VectorXd x_star = oracle_solve(prep.instance);
  report.oracle_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report.oracle_gradient_residual =
      (prep.instance.B.transpose() * (prep.instance.B * x_star - prep.instance.b))
          .lpNorm<Eigen::Infinity>();

  for (const auto& name : cfg.methods) {
    try {
      report.methods.push_back(run_method(name, prep.problem, x_star, cfg));
    } catch (const std::exception& ex) {
      MethodResult failed;
      failed.method = name;
      failed.error = ex.what();
      report.methods.push_back(std::move(failed));
    }
  }

  report.config = cfg;
  write_text_file((fs::path(cfg.out_dir) / "report.json").string(),
                  report_to_json(report).dump(2) + "\n");
  return report;
}

json report_to_json(const ComparisonReport& report) {
  json methods = json::array();
  for (const auto& m : report.methods) {
    methods.push_back(json{{"method", m.method},
                           {"converged", m.converged},
                           {"iterations", m.iterations},
                           {"seconds", m.seconds},
                           {"l2_error", m.l2_error},
                           {"linf_error", m.linf_error},
                           {"consensus_gap", m.consensus_gap},
                           {"error", m.error}});
  }
  return json{{"config", config_to_json(report.config)},
              {"oracle", json{{"seconds", report.oracle_seconds},
                              {"gradient_residual", report.oracle_gradient_residual}}},
              {"scale_note", report.scale_note},
              {"methods", std::move(methods)}};
}

ComparisonReport report_from_json(const json& j, const std::string& origin) {
  ComparisonReport report;
  try {
    report.config = config_from_json(j.at("config"));
    report.oracle_seconds = j.at("oracle").at("seconds").get<double>();
    report.oracle_gradient_residual = j.at("oracle").at("gradient_residual").get<double>();
    report.scale_note = j.value("scale_note", "");
    for (const auto& m : j.at("methods")) {
      MethodResult res;
      res.method = m.at("method").get<std::string>();
      res.converged = m.at("converged").get<bool>();
      res.iterations = m.at("iterations").get<int>();
      res.seconds = m.at("seconds").get<double>();
      res.l2_error = m.at("l2_error").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                : m.at("l2_error").get<double>();
      res.linf_error = m.at("linf_error").is_null()
                           ? std::numeric_limits<double>::quiet_NaN()
                           : m.at("linf_error").get<double>();
      res.consensus_gap = m.at("consensus_gap").is_null()
                              ? std::numeric_limits<double>::quiet_NaN()
                              : m.at("consensus_gap").get<double>();
      res.error = m.value("error", "");
      report.methods.push_back(std::move(res));
    }
  } catch (const json::exception& ex) {
    throw SchemaMismatch(origin + ": " + ex.what());
  }
  return report;
}

std::string cmd_compare(const std::vector<std::string>& report_paths,
                        const std::string& csv_out) {
  if (report_paths.empty()) throw Error("compare: need at least one report");

  struct Row {
    std::string method;
    int p = 0;
    MethodResult res;
    double oracle_seconds = 0.0;
  };
  std::vector<Row> rows;
  for (const auto& path : report_paths) {
    json j;
    try {
      j = json::parse(read_text_file(path));
    } catch (const json::exception& ex) {
      throw SchemaMismatch(path + ": " + ex.what());
    }
    const ComparisonReport rep = report_from_json(j, path);
    for (const auto& m : rep.methods)
      rows.push_back(Row{m.method, rep.config.p, m, rep.oracle_seconds});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.method, a.p) < std::tie(b.method, b.p);
  });

  std::ostringstream text;
  std::ostringstream csv;
  csv << "method,p,iterations,seconds,l2_error,linf_error,consensus_gap,converged\n";
  text << std::left << std::setw(24) << "method" << std::right << std::setw(6) << "p"
       << std::setw(12) << "iters" << std::setw(14) << "seconds" << std::setw(15)
       << "l2_error" << std::setw(15) << "linf_error" << std::setw(15) << "gap"
       << std::setw(12) << "converged" << '\n';
  for (const auto& row : rows) {
    text << std::left << std::setw(24) << row.method << std::right << std::setw(6)
         << row.p << std::setw(12) << row.res.iterations << std::setw(14)
         << std::setprecision(5) << row.res.seconds << std::setw(15)
         << std::setprecision(4) << std::scientific << row.res.l2_error
         << std::setw(15) << row.res.linf_error << std::setw(15)
         << row.res.consensus_gap << std::defaultfloat << std::setw(12)
         << (row.res.error.empty() ? (row.res.converged ? "yes" : "no") : "error")
         << '\n';
    csv << row.method << ',' << row.p << ',' << row.res.iterations << ','
        << format_double(row.res.seconds) << ',' << format_double(row.res.l2_error)
        << ',' << format_double(row.res.linf_error) << ','
        << format_double(row.res.consensus_gap) << ','
        << (row.res.converged ? "true" : "false") << '\n';
  }
  if (!csv_out.empty()) write_text_file(csv_out, csv.str());
  return text.str();
}

}  // namespace ppcm

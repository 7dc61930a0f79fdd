#include "ppcm/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ppcm/errors.hpp"

namespace ppcm {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << content;
  if (!out) throw Error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void save_matrix(const std::string& path, const Eigen::MatrixXd& m) {
  std::ostringstream out;
  out << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ' ';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

Eigen::MatrixXd load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open for reading: " + path);
  Eigen::Index rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows < 1 || cols < 1)
    throw SchemaMismatch("matrix file " + path + ": bad header");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      if (!(in >> m(i, j)))
        throw SchemaMismatch("matrix file " + path + ": truncated data");
  return m;
}

void save_vector(const std::string& path, const Eigen::VectorXd& v) {
  save_matrix(path, v);
}

Eigen::VectorXd load_vector(const std::string& path) {
  const Eigen::MatrixXd m = load_matrix(path);
  if (m.cols() != 1) throw SchemaMismatch("vector file " + path + ": expected 1 column");
  return m.col(0);
}

json topology_to_json(const Topology& t) {
  json edges = json::array();
  for (const auto& [i, j] : t.edges) edges.push_back({i, j});
  return json{{"p", t.p}, {"edges", edges}};
}

Topology topology_from_json(const json& j) {
  Topology t;
  try {
    t.p = j.at("p").get<int>();
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw SchemaMismatch("topology: bad edge");
      t.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
  } catch (const json::exception& ex) {
    throw SchemaMismatch(std::string("topology json: ") + ex.what());
  }
  for (auto& [a, b] : t.edges) {
    if (a == b || a < 0 || b < 0 || a >= t.p || b >= t.p)
      throw SchemaMismatch("topology json: invalid edge endpoints");
    if (a > b) std::swap(a, b);
  }
  std::sort(t.edges.begin(), t.edges.end());
  return t;
}

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Eigen::VectorXd vec_from_json(const json& arr) {
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  return v;
}

}  // namespace

json set_to_json(const ConvexSet& s) {
  return std::visit(
      [](const auto& set) -> json {
        using T = std::decay_t<decltype(set)>;
        if constexpr (std::is_same_v<T, WholeSpace>) {
          return json{{"variant", "whole_space"}, {"dim", set.dim}};
        } else if constexpr (std::is_same_v<T, Box>) {
          return json{{"variant", "box"},
                      {"lower", vec_to_json(set.lower)},
                      {"upper", vec_to_json(set.upper)}};
        } else if constexpr (std::is_same_v<T, Ball>) {
          return json{{"variant", "ball"},
                      {"center", vec_to_json(set.center)},
                      {"radius", set.radius}};
        } else if constexpr (std::is_same_v<T, NonnegOrthant>) {
          return json{{"variant", "nonneg_orthant"}, {"dim", set.dim}};
        } else {
          return json{{"variant", "halfspace"},
                      {"normal", vec_to_json(set.normal)},
                      {"offset", set.offset}};
        }
      },
      s);
}

ConvexSet set_from_json(const json& j) {
  ConvexSet s;
  try {
    const std::string variant = j.at("variant").get<std::string>();
    if (variant == "whole_space") {
      s = WholeSpace{j.at("dim").get<int>()};
    } else if (variant == "box") {
      s = Box{vec_from_json(j.at("lower")), vec_from_json(j.at("upper"))};
    } else if (variant == "ball") {
      s = Ball{vec_from_json(j.at("center")), j.at("radius").get<double>()};
    } else if (variant == "nonneg_orthant") {
      s = NonnegOrthant{j.at("dim").get<int>()};
    } else if (variant == "halfspace") {
      s = Halfspace{vec_from_json(j.at("normal")), j.at("offset").get<double>()};
    } else {
      throw SchemaMismatch("convex set json: unknown variant " + variant);
    }
  } catch (const json::exception& ex) {
    throw SchemaMismatch(std::string("convex set json: ") + ex.what());
  }
  validate_set(s);
  return s;
}

json run_report_to_json(const RunReport& report) {
  json iters = json::array();
  for (const auto& d : report.iterations) {
    json entry{{"iter", d.iter},
               {"E", d.e_stop},
               {"max_mu", d.mu.size() ? d.mu.maxCoeff() : 0.0},
               {"mu", vec_to_json(d.mu)},
               {"alpha_star", d.alpha_star},
               {"pred_distance", d.pred_distance},
               {"objective", d.objective},
               {"consensus_gap", d.consensus_gap},
               {"inner_retries", d.inner_retries}};
    if (d.contraction_slack) entry["contraction_slack"] = *d.contraction_slack;
    iters.push_back(std::move(entry));
  }
  const json config{{"eta", report.config.eta},
                    {"gamma", report.config.gamma},
                    {"step_mode",
                     report.config.step_mode == StepMode::Unit ? "unit" : "adaptive"},
                    {"tol", report.config.tol},
                    {"max_iters", report.config.max_iters},
                    {"max_inner_retries", report.config.max_inner_retries},
                    {"r_init", report.config.r_init},
                    {"r_max", report.config.r_max}};
  return json{{"method", report.method},
              {"config", config},
              {"status", report.converged() ? "converged" : "max_iters_exceeded"},
              {"total_iters", report.total_iters},
              {"final_E", report.final_e},
              {"seconds", report.wall_seconds},
              {"iterations", std::move(iters)}};
}

std::string run_report_csv(const RunReport& report) {
  std::ostringstream out;
  out << "iter,E,maxMu,alphaStar,predDistance,objective,consensusGap\n";
  for (const auto& d : report.iterations) {
    out << d.iter << ',' << format_double(d.e_stop) << ','
        << format_double(d.mu.size() ? d.mu.maxCoeff() : 0.0) << ','
        << format_double(d.alpha_star) << ',' << format_double(d.pred_distance)
        << ',' << format_double(d.objective) << ','
        << format_double(d.consensus_gap) << '\n';
  }
  return out.str();
}

json transcript_to_json(const Transcript& t) {
  json rounds = json::array();
  for (const auto& r : t.rounds) {
    json agents = json::array();
    for (const auto& a : r.agents) {
      agents.push_back(json{{"x", vec_to_json(a.x)},
                            {"lambda", vec_to_json(a.lambda)},
                            {"r", a.r},
                            {"mu", a.mu},
                            {"local_E", a.local_e}});
    }
    rounds.push_back(json{{"round", r.round},
                          {"global_E", r.global_e},
                          {"consensus_gap", r.consensus_gap},
                          {"max_mu", r.max_mu},
                          {"max_r", r.max_r},
                          {"objective", r.objective},
                          {"payload_messages", r.payload_messages},
                          {"error_reports", r.error_reports},
                          {"verdicts", r.verdicts},
                          {"agents", std::move(agents)}});
  }
  json summary{{"method", t.method == Method::Ppcm ? "ppcm" : "wagm"},
               {"status", t.status == TerminationStatus::Converged
                              ? "converged"
                              : "max_iters_exceeded"},
               {"total_rounds", t.total_rounds},
               {"final_global_E", t.final_global_e},
               {"seconds", t.wall_seconds}};
  if (!t.final_errors_l2.empty()) summary["final_errors_l2"] = t.final_errors_l2;
  return json{{"summary", std::move(summary)}, {"rounds", std::move(rounds)}};
}

std::string transcript_csv(const Transcript& t) {
  std::ostringstream out;
  out << "round,globalE,consensusGap,maxMu,maxR,objective\n";
  for (const auto& r : t.rounds) {
    out << r.round << ',' << format_double(r.global_e) << ','
        << format_double(r.consensus_gap) << ',' << format_double(r.max_mu)
        << ',' << format_double(r.max_r) << ',' << format_double(r.objective)
        << '\n';
  }
  return out.str();
}

}  // namespace ppcm

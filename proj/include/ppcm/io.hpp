#pragma once

#include <Eigen/Dense>
#include <json.hpp>
#include <string>

#include "ppcm/convex_set.hpp"
#include "ppcm/graph.hpp"
#include "ppcm/runtime.hpp"
#include "ppcm/vi_solver.hpp"

namespace ppcm {

/// Formats a double so that parsing it back recovers the exact value.
std::string format_double(double v);

// Plain-text matrix format: a "rows cols" header line, then one line per
// row with space-separated full-precision entries.
void save_matrix(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd load_matrix(const std::string& path);
void save_vector(const std::string& path, const Eigen::VectorXd& v);
Eigen::VectorXd load_vector(const std::string& path);

nlohmann::json topology_to_json(const Topology& t);
Topology topology_from_json(const nlohmann::json& j);

nlohmann::json set_to_json(const ConvexSet& s);
ConvexSet set_from_json(const nlohmann::json& j);

nlohmann::json run_report_to_json(const RunReport& report);
/// Columns: iter,E,maxMu,alphaStar,predDistance,objective,consensusGap.
std::string run_report_csv(const RunReport& report);

nlohmann::json transcript_to_json(const Transcript& t);
/// Columns: round,globalE,consensusGap,maxMu,maxR,objective.
std::string transcript_csv(const Transcript& t);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace ppcm

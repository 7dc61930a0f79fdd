#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <variant>
#include <vector>

#include "ppcm/problems.hpp"
#include "ppcm/vi_solver.hpp"

namespace ppcm {

// Deterministic synchronous simulator of the decentralized solver. Agents
// are sequential processes that exchange state only through the message bus;
// a round is a fixed sequence of phases with a barrier between them:
//
//   phase A  (x, lambda) exchange -> self-tuning local prediction
//   phase B  x~ exchange          -> dual update
//   phase C  new-lambda exchange  -> local correction
//   reduce   local errors to the coordinator, verdict broadcast back
//
// The reduce step is an addition over the purely local stopping rule: it
// makes all agents stop on the same round instead of deadlocking the
// exchanges when their local errors cross the tolerance at different times.

enum class Method { Ppcm, Wagm };

struct SimulationConfig {
  double eta = 0.9;
  double tol = 1e-3;
  double r_init = 1.0;
  int max_iters = 10000;
  int max_inner_retries = 50;
  Method method = Method::Ppcm;
  double wagm_step_c = 1e-4;
  bool wagm_fixed_step = false;  // alpha_k = c instead of c/(k+1); no convergence claim
  std::uint64_t seed = 0;
  bool record_states = true;
};

struct PhaseAMessage {
  int sender = 0;
  Eigen::VectorXd x;
  Eigen::VectorXd lambda;
};
struct PhaseBMessage {
  int sender = 0;
  Eigen::VectorXd x_tilde;
};
struct PhaseCMessage {
  int sender = 0;
  Eigen::VectorXd lambda_next;
};
struct ErrorReportMessage {
  int sender = 0;
  double local_e = 0.0;
};
struct VerdictMessage {
  bool stop = false;
};

using Message = std::variant<PhaseAMessage, PhaseBMessage, PhaseCMessage,
                             ErrorReportMessage, VerdictMessage>;

/// Reliable in-order loss-free transport with per-round accounting.
/// Inboxes come back sorted by sender so agent arithmetic has a fixed
/// summation order regardless of send order.
class MessageBus {
 public:
  explicit MessageBus(int agent_count);

  void send(int from, int to, Message msg);
  /// Drains and returns the inbox of one agent, sorted by sender.
  std::vector<Message> collect(int agent);

  std::size_t payload_messages() const { return payload_count_; }
  std::size_t error_reports() const { return report_count_; }
  std::size_t verdicts() const { return verdict_count_; }
  /// (from, to) -> count of payload messages this round.
  const std::map<std::pair<int, int>, int>& payload_log() const { return payload_log_; }
  void start_round();

 private:
  std::vector<std::vector<std::pair<int, Message>>> inboxes_;
  std::map<std::pair<int, int>, int> payload_log_;
  std::size_t payload_count_ = 0;
  std::size_t report_count_ = 0;
  std::size_t verdict_count_ = 0;
};

/// One agent's complete local view. Nothing outside `neighbors` ever feeds
/// its update rules.
struct AgentState {
  int id = 0;
  Eigen::VectorXd x;
  Eigen::VectorXd lambda;
  double r = 1.0;
  double mu = 0.0;       // last accepted gradient ratio
  double local_e = 0.0;  // local stopping error of the last round
  AgentProblem problem;
  std::vector<std::pair<int, double>> neighbors;  // (id, edge weight), ascending

  // Scratch carried between phases of the current round.
  Eigen::VectorXd x_tilde;
  Eigen::VectorXd lambda_next;
};

struct AgentSnapshot {
  Eigen::VectorXd x;
  Eigen::VectorXd lambda;
  double r = 0.0;
  double mu = 0.0;
  double local_e = 0.0;
};

struct RoundRecord {
  int round = 0;
  double global_e = 0.0;
  double consensus_gap = 0.0;
  double max_mu = 0.0;
  double max_r = 0.0;
  double objective = 0.0;
  std::size_t payload_messages = 0;
  std::size_t error_reports = 0;
  std::size_t verdicts = 0;
  std::vector<AgentSnapshot> agents;  // only when record_states
};

struct Transcript {
  Method method = Method::Ppcm;
  std::vector<RoundRecord> rounds;
  TerminationStatus status = TerminationStatus::MaxItersExceeded;
  int total_rounds = 0;
  double final_global_e = 0.0;
  double wall_seconds = 0.0;
  std::vector<double> final_errors_l2;  // per-agent error vs reference, when given
};

/// Owns the agents and the bus; advances one synchronous round at a time.
class Simulation {
 public:
  Simulation(const ConsensusProblem& cp, SimulationConfig cfg,
             const Eigen::VectorXd* x0_stacked = nullptr,
             const Eigen::VectorXd* lambda0_stacked = nullptr);

  /// Runs one full round of the configured method and returns the global
  /// error agreed through the reduction. Throws InnerLoopStall or
  /// ScalingOverflow naming the failing agent.
  double round();

  const std::vector<AgentState>& states() const { return states_; }
  const MessageBus& bus() const { return bus_; }
  int rounds_done() const { return rounds_done_; }
  bool stop_agreed() const { return stop_agreed_; }

  Eigen::VectorXd stacked_x() const;
  Eigen::VectorXd stacked_lambda() const;

 private:
  double round_ppcm();
  double round_wagm();
  double reduce_and_broadcast();

  const ConsensusProblem& cp_;
  SimulationConfig cfg_;
  double rho_ = 1.0;
  std::vector<AgentState> states_;
  MessageBus bus_;
  int rounds_done_ = 0;
  bool stop_agreed_ = false;
};

/// Runs rounds until the agreed global error drops to tol or max_iters is
/// hit. With a reference block, the summary records per-agent L2 errors.
std::pair<std::vector<AgentState>, Transcript> simulate(
    const ConsensusProblem& cp, const SimulationConfig& cfg,
    const Eigen::VectorXd* reference_block = nullptr,
    const Eigen::VectorXd* x0_stacked = nullptr,
    const Eigen::VectorXd* lambda0_stacked = nullptr);

/// Max over edges of ||x_i - x_j||_inf across agent states.
double consensus_gap(const std::vector<AgentState>& states, const Topology& topology);

}  // namespace ppcm

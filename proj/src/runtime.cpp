#include "ppcm/runtime.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "ppcm/errors.hpp"

namespace ppcm {

namespace {

constexpr double kRMin = 1e-12;
constexpr double kRMax = 1e12;
constexpr int kCoordinator = 0;

template <class T>
const T* find_from(const std::vector<Message>& inbox, int sender) {
  for (const auto& m : inbox) {
    if (const T* msg = std::get_if<T>(&m); msg && msg->sender == sender) return msg;
  }
  return nullptr;
}

}  // namespace

MessageBus::MessageBus(int agent_count)
    : inboxes_(static_cast<std::size_t>(agent_count)) {}

void MessageBus::send(int from, int to, Message msg) {
  if (to < 0 || to >= static_cast<int>(inboxes_.size()))
    throw ShapeMismatch("message bus: unknown recipient");
  if (std::holds_alternative<ErrorReportMessage>(msg)) {
    ++report_count_;
  } else if (std::holds_alternative<VerdictMessage>(msg)) {
    ++verdict_count_;
  } else {
    ++payload_count_;
    ++payload_log_[{from, to}];
  }
  inboxes_[static_cast<std::size_t>(to)].emplace_back(from, std::move(msg));
}

std::vector<Message> MessageBus::collect(int agent) {
  auto& box = inboxes_[static_cast<std::size_t>(agent)];
  std::stable_sort(box.begin(), box.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Message> out;
  out.reserve(box.size());
  for (auto& [from, msg] : box) out.push_back(std::move(msg));
  box.clear();
  return out;
}

void MessageBus::start_round() {
  payload_count_ = 0;
  report_count_ = 0;
  verdict_count_ = 0;
  payload_log_.clear();
}

Simulation::Simulation(const ConsensusProblem& cp, SimulationConfig cfg,
                       const Eigen::VectorXd* x0_stacked,
                       const Eigen::VectorXd* lambda0_stacked)
    : cp_(cp), cfg_(std::move(cfg)), rho_(cp.laplacian.rho), bus_(cp.p()) {
  const int p = cp.p();
  const int n = cp.n;
  if (cp.constraint_rhs.cwiseAbs().maxCoeff() != 0.0)
    throw Error("simulation: agents implement the consensus constraint only "
                "(zero right-hand side)");
  if (cfg_.method == Method::Wagm) {
    // Uniform 1/p averaging weights are row-stochastic only when every agent
    // hears everyone else each round.
    const int expected = p * (p - 1) / 2;
    if (static_cast<int>(cp.graph.topology.edges.size()) != expected)
      throw TopologyUnsupported("wagm: 1/p averaging weights need a complete graph");
  }
  const auto nbr_lists = cp.graph.topology.neighbor_lists();
  states_.reserve(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) {
    AgentState st;
    st.id = i;
    st.problem = cp.agents[static_cast<std::size_t>(i)];
    if (x0_stacked) {
      st.x = x0_stacked->segment(static_cast<Eigen::Index>(i) * n, n);
    } else {
      st.x = project(st.problem.set, Eigen::VectorXd::Zero(n));
    }
    if (lambda0_stacked) {
      st.lambda = lambda0_stacked->segment(static_cast<Eigen::Index>(i) * n, n);
    } else {
      st.lambda = Eigen::VectorXd::Zero(n);
    }
    st.r = cfg_.r_init;
    for (int j : nbr_lists[static_cast<std::size_t>(i)])
      st.neighbors.emplace_back(j, cp.graph.weights(i, j));
    states_.push_back(std::move(st));
  }
}

double Simulation::round() {
  bus_.start_round();
  const double global_e =
      cfg_.method == Method::Ppcm ? round_ppcm() : round_wagm();
  ++rounds_done_;
  return global_e;
}

double Simulation::round_ppcm() {
  const int n = cp_.n;

  // Phase A: neighbors exchange current primal and dual blocks.
  for (auto& st : states_)
    for (const auto& nbr : st.neighbors)
      bus_.send(st.id, nbr.first, PhaseAMessage{st.id, st.x, st.lambda});

  for (auto& st : states_) {
    const auto inbox = bus_.collect(st.id);
    // Dual coupling from the local view: sum_j a_ij (lambda_i - lambda_j).
    Eigen::VectorXd coupling = Eigen::VectorXd::Zero(n);
    for (const auto& [j, w] : st.neighbors) {
      const auto* msg = find_from<PhaseAMessage>(inbox, j);
      if (!msg) throw Error("ppcm round: missing phase A message");
      coupling += w * (st.lambda - msg->lambda);
    }
    // Self-tuning prediction: raise r until the gradient ratio passes.
    const Eigen::VectorXd grad_x = st.problem.objective->gradient(st.x);
    int retries = 0;
    for (;;) {
      st.x_tilde =
          project(st.problem.set, st.x - (grad_x - coupling) / st.r);
      const double den = (st.x - st.x_tilde).norm();
      if (den == 0.0) {
        st.mu = 0.0;
        break;
      }
      const Eigen::VectorXd grad_tilde = st.problem.objective->gradient(st.x_tilde);
      st.mu = (grad_x - grad_tilde).norm() / (st.r * den);
      if (st.mu <= cfg_.eta) break;
      if (retries >= cfg_.max_inner_retries)
        throw InnerLoopStall("ppcm round: agent " + std::to_string(st.id) +
                             " failed the acceptance test after " +
                             std::to_string(retries) + " retries");
      st.r = st.r * (1.5 * std::max(1.0, st.mu));
      if (st.r > kRMax)
        throw ScalingOverflow("ppcm round: r overflow at agent " +
                              std::to_string(st.id));
      ++retries;
    }
  }

  // Phase B: exchange predictors, then the local dual update.
  for (auto& st : states_)
    for (const auto& nbr : st.neighbors)
      bus_.send(st.id, nbr.first, PhaseBMessage{st.id, st.x_tilde});

  for (auto& st : states_) {
    const auto inbox = bus_.collect(st.id);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
    for (const auto& [j, w] : st.neighbors) {
      const auto* msg = find_from<PhaseBMessage>(inbox, j);
      if (!msg) throw Error("ppcm round: missing phase B message");
      acc += w * (st.x_tilde - msg->x_tilde);
    }
    const double s = cfg_.eta * cfg_.eta * st.r / rho_;
    st.lambda_next = st.lambda - s * acc;
  }

  // Phase C: exchange updated duals, then the local correction.
  for (auto& st : states_)
    for (const auto& nbr : st.neighbors)
      bus_.send(st.id, nbr.first, PhaseCMessage{st.id, st.lambda_next});

  for (auto& st : states_) {
    const auto inbox = bus_.collect(st.id);
    Eigen::VectorXd coupling = Eigen::VectorXd::Zero(n);
    for (const auto& [j, w] : st.neighbors) {
      const auto* msg = find_from<PhaseCMessage>(inbox, j);
      if (!msg) throw Error("ppcm round: missing phase C message");
      coupling += w * (st.lambda_next - msg->lambda_next);
    }
    const Eigen::VectorXd grad_tilde = st.problem.objective->gradient(st.x_tilde);
    const Eigen::VectorXd x_next =
        project(st.problem.set, st.x - (grad_tilde - coupling) / st.r);

    st.local_e = std::max((st.x - st.x_tilde).lpNorm<Eigen::Infinity>(),
                          (st.lambda - st.lambda_next).lpNorm<Eigen::Infinity>());
    // Zero ratios (x == x~ exactly) carry no curvature information; see
    // adjust_r_down.
    if (st.mu > 0.0 && st.mu <= 0.5) st.r = std::max(kRMin, st.r * (st.mu / 0.7));
    st.x = x_next;
    st.lambda = st.lambda_next;
  }

  return reduce_and_broadcast();
}

double Simulation::round_wagm() {
  const int p = cp_.p();
  const int n = cp_.n;

  for (auto& st : states_)
    for (const auto& nbr : st.neighbors)
      bus_.send(st.id, nbr.first, PhaseAMessage{st.id, st.x, st.lambda});

  const int k = rounds_done_;
  const double alpha =
      cfg_.wagm_fixed_step ? cfg_.wagm_step_c
                           : cfg_.wagm_step_c / static_cast<double>(k + 1);

  for (auto& st : states_) {
    const auto inbox = bus_.collect(st.id);
    // Doubly stochastic averaging with w_ij = 1/p, the agent's own block
    // included; on a complete graph this is the plain mean. Accumulation
    // runs in global id order so every agent computes the same bits.
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    std::size_t next_nbr = 0;
    for (int j = 0; j < p; ++j) {
      if (j == st.id) {
        y += st.x / static_cast<double>(p);
        continue;
      }
      if (next_nbr >= st.neighbors.size() || st.neighbors[next_nbr].first != j)
        throw Error("wagm round: agent " + std::to_string(st.id) +
                    " is missing neighbor " + std::to_string(j));
      ++next_nbr;
      const auto* msg = find_from<PhaseAMessage>(inbox, j);
      if (!msg) throw Error("wagm round: missing phase A message");
      y += msg->x / static_cast<double>(p);
    }
    const Eigen::VectorXd x_next =
        project(st.problem.set, y - alpha * st.problem.objective->gradient(y));
    st.local_e = (x_next - st.x).norm();
    st.x = x_next;
  }

  return reduce_and_broadcast();
}

double Simulation::reduce_and_broadcast() {
  for (auto& st : states_)
    bus_.send(st.id, kCoordinator, ErrorReportMessage{st.id, st.local_e});

  double global_e = 0.0;
  const auto reports = bus_.collect(kCoordinator);
  int seen = 0;
  for (const auto& m : reports) {
    if (const auto* rep = std::get_if<ErrorReportMessage>(&m)) {
      global_e = std::max(global_e, rep->local_e);
      ++seen;
    }
  }
  if (seen != cp_.p()) throw Error("reduction: missing error reports");

  const bool stop = global_e <= cfg_.tol;
  for (auto& st : states_) bus_.send(kCoordinator, st.id, VerdictMessage{stop});
  stop_agreed_ = false;
  for (auto& st : states_) {
    const auto inbox = bus_.collect(st.id);
    for (const auto& m : inbox)
      if (const auto* v = std::get_if<VerdictMessage>(&m)) stop_agreed_ = v->stop;
  }
  return global_e;
}

Eigen::VectorXd Simulation::stacked_x() const {
  Eigen::VectorXd out(cp_.stacked_size());
  for (const auto& st : states_)
    out.segment(static_cast<Eigen::Index>(st.id) * cp_.n, cp_.n) = st.x;
  return out;
}

Eigen::VectorXd Simulation::stacked_lambda() const {
  Eigen::VectorXd out(cp_.stacked_size());
  for (const auto& st : states_)
    out.segment(static_cast<Eigen::Index>(st.id) * cp_.n, cp_.n) = st.lambda;
  return out;
}

std::pair<std::vector<AgentState>, Transcript> simulate(
    const ConsensusProblem& cp, const SimulationConfig& cfg,
    const Eigen::VectorXd* reference_block,
    const Eigen::VectorXd* x0_stacked,
    const Eigen::VectorXd* lambda0_stacked) {
  Simulation sim(cp, cfg, x0_stacked, lambda0_stacked);
  Transcript transcript;
  transcript.method = cfg.method;
  const auto t0 = std::chrono::steady_clock::now();

  for (int round = 0; round < cfg.max_iters; ++round) {
    const double global_e = sim.round();

    RoundRecord rec;
    rec.round = round;
    rec.global_e = global_e;
    rec.consensus_gap = consensus_gap(sim.states(), cp.graph.topology);
    rec.objective = consensus_objective(cp, sim.stacked_x());
    rec.payload_messages = sim.bus().payload_messages();
    rec.error_reports = sim.bus().error_reports();
    rec.verdicts = sim.bus().verdicts();
    for (const auto& st : sim.states()) {
      rec.max_mu = std::max(rec.max_mu, st.mu);
      rec.max_r = std::max(rec.max_r, st.r);
      if (cfg.record_states)
        rec.agents.push_back(AgentSnapshot{st.x, st.lambda, st.r, st.mu, st.local_e});
    }
    transcript.rounds.push_back(std::move(rec));

    if (sim.stop_agreed()) {
      transcript.status = TerminationStatus::Converged;
      break;
    }
  }

  transcript.total_rounds = static_cast<int>(transcript.rounds.size());
  transcript.final_global_e =
      transcript.rounds.empty() ? 0.0 : transcript.rounds.back().global_e;
  transcript.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (reference_block) {
    for (const auto& st : sim.states())
      transcript.final_errors_l2.push_back((st.x - *reference_block).norm());
  }
  return {sim.states(), std::move(transcript)};
}

double consensus_gap(const std::vector<AgentState>& states, const Topology& topology) {
  double gap = 0.0;
  for (const auto& [i, j] : topology.edges) {
    gap = std::max(gap, (states[static_cast<std::size_t>(i)].x -
                         states[static_cast<std::size_t>(j)].x)
                            .lpNorm<Eigen::Infinity>());
  }
  return gap;
}

}  // namespace ppcm

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ppcm/errors.hpp"
#include "ppcm/io.hpp"
#include "ppcm/problems.hpp"
#include "ppcm/runtime.hpp"
#include "ppcm/vi_solver.hpp"

namespace py = pybind11;
using namespace ppcm;

namespace {

TopologyKind kind_from_string(const std::string& kind) {
  if (kind == "complete") return TopologyKind::Complete;
  if (kind == "ring") return TopologyKind::Ring;
  if (kind == "star") return TopologyKind::Star;
  if (kind == "erdos_renyi") return TopologyKind::ErdosRenyi;
  throw Error("unknown topology kind: " + kind);
}

SolverConfig make_solver_config(double eta, double gamma, const std::string& step_mode,
                                double tol, int max_iters, bool record_iterates) {
  SolverConfig cfg;
  cfg.eta = eta;
  cfg.gamma = gamma;
  if (step_mode == "unit") {
    cfg.step_mode = StepMode::Unit;
  } else if (step_mode == "adaptive") {
    cfg.step_mode = StepMode::Adaptive;
  } else {
    throw Error("step_mode must be 'unit' or 'adaptive'");
  }
  cfg.tol = tol;
  cfg.max_iters = max_iters;
  cfg.record_iterates = record_iterates;
  return cfg;
}

// The constraint variant is held behind a single binding type so the
// automatic variant conversion does not apply.
struct SetHandle {
  ConvexSet set;
};

}  // namespace

PYBIND11_MODULE(_ppcm, m) {
  m.doc() = "Projection-based prediction-correction solvers for distributed "
            "consensus optimization";

  py::register_exception<Error>(m, "PpcmError");

  // ---- graphs -------------------------------------------------------------
  py::class_<Topology>(m, "Topology")
      .def_readonly("p", &Topology::p)
      .def_readonly("edges", &Topology::edges)
      .def("neighbor_lists", &Topology::neighbor_lists);

  py::class_<WeightedGraph>(m, "WeightedGraph")
      .def_readonly("topology", &WeightedGraph::topology)
      .def_readonly("weights", &WeightedGraph::weights)
      .def_readonly("uniform", &WeightedGraph::uniform);

  py::class_<LaplacianMatrix>(m, "LaplacianMatrix")
      .def_readonly("entries", &LaplacianMatrix::entries)
      .def_readonly("rho", &LaplacianMatrix::rho);

  m.def(
      "build_topology",
      [](const std::string& kind, int p, std::uint64_t seed, double prob) {
        return build_topology(kind_from_string(kind), p, seed, prob);
      },
      py::arg("kind"), py::arg("p"), py::arg("seed") = 0, py::arg("prob") = 0.5);
  m.def("adjacency_uniform", &adjacency_uniform);
  m.def("laplacian", &laplacian);
  m.def("algebraic_connectivity", &algebraic_connectivity);
  m.def("apply_consensus_operator", &apply_consensus_operator, py::arg("laplacian"),
        py::arg("x"), py::arg("n"));
  m.def("is_connected", &is_connected);

  // ---- convex sets ----------------------------------------------------------
  py::class_<SetHandle>(m, "ConvexSet")
      .def_property_readonly("dim",
                             [](const SetHandle& s) { return dimension(s.set); });

  m.def("whole_space", [](int n) { return SetHandle{WholeSpace{n}}; });
  m.def("box", [](const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    SetHandle s{Box{lo, hi}};
    validate_set(s.set);
    return s;
  });
  m.def("ball", [](const Eigen::VectorXd& center, double radius) {
    SetHandle s{Ball{center, radius}};
    validate_set(s.set);
    return s;
  });
  m.def("nonneg_orthant", [](int n) { return SetHandle{NonnegOrthant{n}}; });
  m.def("halfspace", [](const Eigen::VectorXd& normal, double offset) {
    SetHandle s{Halfspace{normal, offset}};
    validate_set(s.set);
    return s;
  });
  m.def(
      "project",
      [](const SetHandle& s, const Eigen::VectorXd& v) { return project(s.set, v); },
      py::arg("set"), py::arg("v"));
  m.def(
      "contains",
      [](const SetHandle& s, const Eigen::VectorXd& v, double tol) {
        return contains(s.set, v, tol);
      },
      py::arg("set"), py::arg("v"), py::arg("tol") = 0.0);

  // ---- problems -------------------------------------------------------------
  py::class_<QuadraticObjective, std::shared_ptr<QuadraticObjective>>(
      m, "QuadraticObjective")
      .def(py::init<Eigen::MatrixXd, Eigen::VectorXd>(), py::arg("B"), py::arg("b"))
      .def_property_readonly("dim", &QuadraticObjective::dim)
      .def("value", &QuadraticObjective::value)
      .def("gradient", &QuadraticObjective::gradient)
      .def("lipschitz_bound",
           [](const QuadraticObjective& q) { return *q.lipschitz_bound(); });

  py::class_<LsqInstance>(m, "LsqInstance")
      .def_readonly("B", &LsqInstance::B)
      .def_readonly("b", &LsqInstance::b)
      .def_readonly("partition", &LsqInstance::partition)
      .def_readonly("seed", &LsqInstance::seed);

  py::class_<ConsensusProblem>(m, "ConsensusProblem")
      .def_property_readonly("p", &ConsensusProblem::p)
      .def_readonly("n", &ConsensusProblem::n)
      .def_property_readonly("topology",
                             [](const ConsensusProblem& cp) { return cp.graph.topology; });

  m.def(
      "generate_lsq",
      [](int m_rows, int n, int p, std::uint64_t seed) {
        return generate_lsq(m_rows, n, p, seed);
      },
      py::arg("m"), py::arg("n"), py::arg("p"), py::arg("seed"));
  m.def(
      "lsq_consensus_problem",
      [](const LsqInstance& inst, const Topology& t, const SetHandle* shared) {
        return lsq_consensus_problem(inst, t, shared ? &shared->set : nullptr);
      },
      py::arg("instance"), py::arg("topology"), py::arg("shared_set") = nullptr);
  m.def("toy_problem", &toy_problem);
  m.def("oracle_solve", &oracle_solve);
  m.def("consensus_objective", &consensus_objective);

  // ---- solvers ----------------------------------------------------------------
  py::class_<RunReport>(m, "RunReport")
      .def_property_readonly("converged", &RunReport::converged)
      .def_readonly("total_iters", &RunReport::total_iters)
      .def_readonly("final_e", &RunReport::final_e)
      .def_readonly("seconds", &RunReport::wall_seconds)
      .def("to_json", [](const RunReport& r) { return run_report_to_json(r).dump(); });

  py::class_<Transcript>(m, "Transcript")
      .def_property_readonly(
          "converged",
          [](const Transcript& t) { return t.status == TerminationStatus::Converged; })
      .def_readonly("total_rounds", &Transcript::total_rounds)
      .def_readonly("final_global_e", &Transcript::final_global_e)
      .def_readonly("final_errors_l2", &Transcript::final_errors_l2)
      .def("to_json", [](const Transcript& t) { return transcript_to_json(t).dump(); })
      .def("to_csv", &transcript_csv);

  m.def(
      "solve",
      [](const ConsensusProblem& cp, double eta, double gamma,
         const std::string& step_mode, double tol, int max_iters) {
        const SolverConfig cfg =
            make_solver_config(eta, gamma, step_mode, tol, max_iters, false);
        auto [u, report] = solve(cp, cfg, make_start_point(cp));
        return py::make_tuple(u.x, u.lambda, report);
      },
      py::arg("problem"), py::arg("eta") = 0.9, py::arg("gamma") = 1.9,
      py::arg("step_mode") = "unit", py::arg("tol") = 1e-3,
      py::arg("max_iters") = 10000);
  m.def(
      "extragradient_solve",
      [](const ConsensusProblem& cp, double beta, double tol, int max_iters) {
        auto [u, report] = extragradient_solve(cp, beta, tol, max_iters,
                                               make_start_point(cp));
        return py::make_tuple(u.x, u.lambda, report);
      },
      py::arg("problem"), py::arg("beta") = 0.5, py::arg("tol") = 1e-3,
      py::arg("max_iters") = 10000);
  m.def(
      "vi_residual",
      [](const ConsensusProblem& cp, const Eigen::VectorXd& x,
         const Eigen::VectorXd& lam) {
        return vi_residual(PrimalDualPoint{x, lam}, cp);
      },
      py::arg("problem"), py::arg("x"), py::arg("lam"));
  m.def(
      "consensus_gap",
      [](const ConsensusProblem& cp, const Eigen::VectorXd& x) {
        return consensus_gap(cp, x);
      },
      py::arg("problem"), py::arg("x"));

  // ---- distributed runtime ------------------------------------------------------
  m.def(
      "simulate",
      [](const ConsensusProblem& cp, const std::string& method, double eta, double tol,
         int max_iters, double wagm_step_c, const Eigen::VectorXd* reference) {
        SimulationConfig cfg;
        cfg.eta = eta;
        cfg.tol = tol;
        cfg.max_iters = max_iters;
        cfg.wagm_step_c = wagm_step_c;
        cfg.record_states = false;
        if (method == "ppcm") {
          cfg.method = Method::Ppcm;
        } else if (method == "wagm") {
          cfg.method = Method::Wagm;
        } else {
          throw Error("method must be 'ppcm' or 'wagm'");
        }
        auto [states, transcript] = simulate(cp, cfg, reference);
        Eigen::VectorXd x(cp.stacked_size()), lam(cp.stacked_size());
        for (const auto& st : states) {
          x.segment(static_cast<Eigen::Index>(st.id) * cp.n, cp.n) = st.x;
          lam.segment(static_cast<Eigen::Index>(st.id) * cp.n, cp.n) = st.lambda;
        }
        return py::make_tuple(x, lam, transcript);
      },
      py::arg("problem"), py::arg("method") = "ppcm", py::arg("eta") = 0.9,
      py::arg("tol") = 1e-3, py::arg("max_iters") = 10000,
      py::arg("wagm_step_c") = 1e-4, py::arg("reference") = nullptr);
}

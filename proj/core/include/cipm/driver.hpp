#pragma once

#include <vector>

#include "cipm/agent.hpp"
#include "cipm/config.hpp"
#include "cipm/linesearch.hpp"
#include "cipm/transport.hpp"

namespace cipm {

/// One accepted iteration of either solve engine. `exchanges` counts the
/// root broadcasts this iteration consumed (5 + 2 * trials for the
/// message-passing engine, more when iterate snapshots are on, zero for
/// the centralized engine).
struct IterationRecord {
  int iter = 0;
  double eta_hat = 0.0;       // surrogate gap after the step
  double r_dual_norm = 0.0;   // stationarity residual at the new point
  double r_primal_norm = 0.0; // equality residual at the new point
  double alpha = 0.0;
  double delta = 0.0;         // perturbation the step was computed with
  int trials = 0;
  long exchanges = 0;
  double wall_sec = 0.0;
  double residual_before = 0.0;
  double residual_after = 0.0;
  Vector x; // accepted shared point
};

struct Trace {
  std::vector<IterationRecord> rows;
  Status status = Status::MaxIterations;
  long setup_exchanges = 0;
  long loop_exchanges = 0;
  long teardown_exchanges = 0;
  double wall_sec = 0.0;

  /// Root-side view of every message, in send/receive order. Empty for
  /// the centralized engine.
  std::vector<MessageLogEntry> messages;

  /// Pre-step snapshots, one per iteration, when
  /// SolverConfig::collect_iterates is set.
  std::vector<Iterate> iterates;
};

struct Solution {
  Vector x;
  std::vector<Vector> x_agents;
  std::vector<double> agent_objectives; // h_i at each agent's final slice
  Status status = Status::MaxIterations;
  int iterations = 0;
  double objective_sum = 0.0;
  double objective_avg = 0.0;
};

struct SolveResult {
  Solution solution;
  Trace trace;
};

/// Runs the interior-point solve with the root and the N agents coupled
/// only through the wire protocol: per iteration one upward fold of the
/// reduced terms (Q_i, q_i), one shared-direction broadcast, and scalar
/// folds for the step-size search, the surrogate gap, and termination.
/// No agent data beyond those p-sized payloads ever reaches the root.
///
/// Leaf-side singular factorizations and root-side singular folds end the
/// run with Status::SingularSystem; a stalled backtracking search ends it
/// with Status::LineSearchFailure. Malformed traffic throws ProtocolError
/// and an unusable starting point throws UnsupportedInitializationError.
SolveResult solve_distributed(const RelaxedProblem& prob,
                              const SolverConfig& cfg,
                              TransportKind transport = TransportKind::Sequential);

/// One direction computed through the wire protocol at an arbitrary
/// strictly feasible iterate (using it.delta), with the full per-agent
/// direction pulled back through diagnostic dumps. Probing tool for
/// comparing against direct solves of the same Newton system.
Direction message_passing_direction(const RelaxedProblem& prob,
                                    const Iterate& it);

} // namespace cipm

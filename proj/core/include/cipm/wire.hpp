#pragma once

#include <string>
#include <vector>

namespace cipm {

/// Every exchange is one root broadcast followed by one reply per leaf.
/// Payloads are dense row-major float64; their sizes depend only on the
/// shared dimension p, never on any leaf's data sizes. The two Inspect
/// kinds are diagnostics (their dumps are leaf-sized) and are never sent
/// in production runs.
enum class MessageKind : int {
  // root -> leaf
  Init,            // [epsilon, eps_feas, eps_d, x0(p)]
  StartIter,       // [delta]
  Direction,       // [dx(p)]
  Baseline,        // []
  TrialFeas,       // [alpha]
  TrialResidual,   // [all_feasible, alpha]
  Accept,          // [alpha]
  Gap,             // [eta_hat, delta_next, r_dual_norm, r_primal_norm]
  Final,           // [x(p)]
  Abort,           // [status code]
  InspectIterate,  // []
  InspectDirection,// []
  // leaf -> root
  InitReply,       // [eta0_share]
  Upward,          // [Q(p*p), q(p)]
  DualCap,         // [alpha_cap]
  Share,           // [global_block(p), sq_dual, sq_cent, sq_primal]
  Flag,            // [0|1]
  EtaHat,          // [eta_share]
  Vote,            // [0|1]
  FinalState,      // [h_value, consensus x(p) as tracked by the leaf]
  IterateDump,     // [x_i(p), t_i, z, v, lambda]
  DirectionDump,   // [dx_i(p), dt_i, dz, dv, dlambda]
  ErrorReply,      // [code]
};

std::string to_string(MessageKind k);

/// Leaf-side failure codes carried by ErrorReply.
enum class LeafError : int {
  SingularKkt = 1,
  Infeasible = 2,
  Protocol = 3,
  BadInit = 4,
};

struct WireMessage {
  int agent_id = -1;   // -1 denotes the root
  long round_id = 0;
  MessageKind kind = MessageKind::Abort;
  std::vector<double> payload;
};

} // namespace cipm

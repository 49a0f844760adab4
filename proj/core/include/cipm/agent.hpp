#pragma once

#include <utility>

#include "cipm/kkt.hpp"
#include "cipm/transport.hpp"
#include "cipm/wire.hpp"

namespace cipm {

/// This agent's upward terms for the shared-direction system. With the
/// local solve written as dy = u1 + U1 dx, dv = u2 + U2 dx,
///
///   Q = H_gg + U1' H_ll U1 + U1' H_lg + H_lg' U1
///   q = r_g  + U1' r_l + H_lg' u1 + U1' H_ll u1
///
/// and the root direction solves (sum Q) dx = -(sum q). The quadratic-form
/// version keeps Q symmetric under roundoff; it collapses to the Schur
/// complement H_gg + H_lg' U1 because A U1 = 0.
std::pair<Matrix, Vector> schur_terms(const HessianBlocks& H,
                                      const LocalKktResult& kkt,
                                      const LinearTerm& lt);

/// One leaf of the star. Holds the agent's subproblem and primal-dual
/// slice, and advances them in lock step with the root's messages. Never
/// sees another agent's data; everything it reveals travels in replies
/// whose sizes depend only on the shared dimension p.
///
/// handle() is total: leaf-side failures come back as ErrorReply rather
/// than escaping into the transport.
class LeafAgent {
 public:
  LeafAgent(int id, LocalSubproblem sp, bool ridge_fallback = false);

  /// Starts at an arbitrary slice instead of waiting for Init; used to
  /// probe directions at points other than the standard start.
  LeafAgent(int id, LocalSubproblem sp, double epsilon, Vector x,
            AgentState st, bool ridge_fallback = false);

  WireMessage handle(const WireMessage& msg);

  /// Binds this agent as a transport handler. The agent must outlive the
  /// transport.
  LeafHandler handler() {
    return [this](const WireMessage& m) { return handle(m); };
  }

  int id() const { return id_; }
  const LocalSubproblem& subproblem() const { return sp_; }
  const AgentState& state() const { return st_; }
  const Vector& shared_point() const { return x_; }
  const AgentDirection& direction() const { return dir_; }

 private:
  enum class Phase { Fresh, Ready, Factored, Directed, Accepted, Finished };

  WireMessage dispatch(const WireMessage& msg);
  WireMessage reply(const WireMessage& req, MessageKind kind,
                    std::vector<double> payload) const;
  void require(bool ok, const char* what) const;
  void expect_payload(const WireMessage& msg, std::size_t size) const;

  WireMessage on_init(const WireMessage& msg);
  WireMessage on_start_iter(const WireMessage& msg);
  WireMessage on_direction(const WireMessage& msg);
  WireMessage on_baseline(const WireMessage& msg);
  WireMessage on_trial_feas(const WireMessage& msg);
  WireMessage on_trial_residual(const WireMessage& msg);
  WireMessage on_accept(const WireMessage& msg);
  WireMessage on_gap(const WireMessage& msg);
  WireMessage on_final(const WireMessage& msg);
  WireMessage on_inspect_iterate(const WireMessage& msg) const;
  WireMessage on_inspect_direction(const WireMessage& msg) const;

  int id_ = 0;
  LocalSubproblem sp_;
  bool ridge_fallback_ = false;

  double epsilon_ = 0.0;
  double eps_feas_ = 0.0;
  double eps_d_ = 0.0;

  Vector x_;
  AgentState st_;
  double delta_ = 0.0;
  int iteration_ = 0;
  Phase phase_ = Phase::Fresh;

  HessianBlocks H_;
  LocalResiduals res_;
  LinearTerm lt_;
  LocalKktResult kkt_;
  Vector dx_;
  AgentDirection dir_;
};

} // namespace cipm

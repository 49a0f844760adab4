#include "cipm/driver.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <memory>

#include <Eigen/LU>

#include "cipm/errors.hpp"

namespace cipm {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kMinRootRcond = 1e-14;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<double> to_payload(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

MessageKind expected_reply(MessageKind down) {
  switch (down) {
    case MessageKind::Init: return MessageKind::InitReply;
    case MessageKind::StartIter: return MessageKind::Upward;
    case MessageKind::Direction: return MessageKind::DualCap;
    case MessageKind::Baseline: return MessageKind::Share;
    case MessageKind::TrialFeas: return MessageKind::Flag;
    case MessageKind::TrialResidual: return MessageKind::Share;
    case MessageKind::Accept: return MessageKind::EtaHat;
    case MessageKind::Gap: return MessageKind::Vote;
    case MessageKind::Final: return MessageKind::FinalState;
    case MessageKind::Abort: return MessageKind::FinalState;
    case MessageKind::InspectIterate: return MessageKind::IterateDump;
    case MessageKind::InspectDirection: return MessageKind::DirectionDump;
    default: return MessageKind::ErrorReply;
  }
}

/// Sends one broadcast and gathers the replies in leaf-index order,
/// verifying echoes. ErrorReply passes through for the caller to map.
std::vector<WireMessage> broadcast(Transport& tr, long round, MessageKind kind,
                                   const std::vector<double>& payload) {
  const Index n = tr.leaf_count();
  for (Index i = 0; i < n; ++i) {
    WireMessage msg;
    msg.agent_id = static_cast<int>(i);
    msg.round_id = round;
    msg.kind = kind;
    msg.payload = payload;
    tr.send_to_leaf(static_cast<int>(i), msg);
  }
  std::vector<WireMessage> replies;
  replies.reserve(static_cast<std::size_t>(n));
  const MessageKind want = expected_reply(kind);
  for (Index i = 0; i < n; ++i) {
    WireMessage r = tr.recv_from_leaf(static_cast<int>(i));
    if (r.round_id != round)
      throw ProtocolError(static_cast<int>(i),
                          "agent " + std::to_string(i) + " echoed round " +
                              std::to_string(r.round_id) + ", expected " +
                              std::to_string(round));
    if (r.kind != want && r.kind != MessageKind::ErrorReply)
      throw ProtocolError(static_cast<int>(i),
                          "agent " + std::to_string(i) + " replied " +
                              to_string(r.kind) + " to " + to_string(kind));
    replies.push_back(std::move(r));
  }
  return replies;
}

void expect_reply_size(const WireMessage& r, std::size_t size) {
  if (r.payload.size() != size)
    throw ProtocolError(r.agent_id,
                        to_string(r.kind) + " from agent " +
                            std::to_string(r.agent_id) + " has " +
                            std::to_string(r.payload.size()) +
                            " values, expected " + std::to_string(size));
}

void fold_upward(const std::vector<WireMessage>& replies, Index p, Matrix& Q,
                 Vector& q) {
  Q = Matrix::Zero(p, p);
  q = Vector::Zero(p);
  for (const WireMessage& r : replies) {
    expect_reply_size(r, static_cast<std::size_t>(p * p + p));
    Q += Eigen::Map<const Matrix>(r.payload.data(), p, p);
    q += Eigen::Map<const Vector>(r.payload.data() + p * p, p);
  }
}

ResidualNorms fold_shares(const std::vector<WireMessage>& replies, Index p) {
  std::vector<ResidualShare> shares(replies.size());
  for (std::size_t i = 0; i < replies.size(); ++i) {
    const WireMessage& r = replies[i];
    expect_reply_size(r, static_cast<std::size_t>(p) + 3);
    shares[i].global_block = Eigen::Map<const Vector>(r.payload.data(), p);
    shares[i].sq_dual = r.payload[static_cast<std::size_t>(p)];
    shares[i].sq_cent = r.payload[static_cast<std::size_t>(p) + 1];
    shares[i].sq_primal = r.payload[static_cast<std::size_t>(p) + 2];
  }
  return fold_residual_shares(shares);
}

double fold_scalars(const std::vector<WireMessage>& replies) {
  double sum = 0.0;
  for (const WireMessage& r : replies) {
    expect_reply_size(r, 1);
    sum += r.payload[0];
  }
  return sum;
}

[[noreturn]] void throw_leaf_failure(const WireMessage& r) {
  const int code = static_cast<int>(r.payload.empty() ? 0.0 : r.payload[0]);
  const std::string who = "agent " + std::to_string(r.agent_id);
  switch (static_cast<LeafError>(code)) {
    case LeafError::BadInit:
      throw UnsupportedInitializationError(
          who + " could not build a strictly feasible start");
    case LeafError::Infeasible:
      throw FeasibilityError(who + " reported an infeasible iterate");
    case LeafError::SingularKkt:
      throw SingularKktError(r.agent_id, who + " hit a singular local system");
    default:
      throw ProtocolError(r.agent_id, who + " rejected the message");
  }
}

/// Control-flow token for ends of the run that are statuses, not errors.
struct AbortRun {
  Status status;
};

class Root {
 public:
  Root(const RelaxedProblem& prob, const SolverConfig& cfg,
       TransportKind kind)
      : prob_(prob), cfg_(cfg), m_total_(prob.total_ineq_count()) {
    cfg_.validate();
    const Index n = prob_.agent_count();
    leaves_.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i)
      leaves_.push_back(std::make_unique<LeafAgent>(
          static_cast<int>(i), prob_.agents[static_cast<std::size_t>(i)],
          cfg_.ridge_fallback));
    std::vector<LeafHandler> handlers;
    handlers.reserve(static_cast<std::size_t>(n));
    for (auto& leaf : leaves_) handlers.push_back(leaf->handler());
    if (kind == TransportKind::Queue)
      transport_ = std::make_unique<QueueTransport>(std::move(handlers),
                                                    cfg_.recv_timeout_sec);
    else
      transport_ =
          std::make_unique<SequentialTransport>(std::move(handlers));
  }

  SolveResult run();

 private:
  /// Broadcast plus gather; leaf failures become exceptions here, except
  /// singular local systems, which end the run with a status.
  std::vector<WireMessage> exchange(MessageKind kind,
                                    const std::vector<double>& payload) {
    auto replies = broadcast(*transport_, round_++, kind, payload);
    for (const WireMessage& r : replies) {
      if (r.kind != MessageKind::ErrorReply) continue;
      const int code = static_cast<int>(r.payload.empty() ? 0.0 : r.payload[0]);
      if (static_cast<LeafError>(code) == LeafError::SingularKkt)
        throw AbortRun{Status::SingularSystem};
      throw_leaf_failure(r);
    }
    return replies;
  }

  void snapshot_iterate(const Vector& x, double delta, int iter) {
    auto dumps = exchange(MessageKind::InspectIterate, {});
    Iterate it;
    it.x = x;
    it.delta = delta;
    it.iteration = iter;
    it.agents.resize(dumps.size());
    for (std::size_t i = 0; i < dumps.size(); ++i) {
      const LocalSubproblem& sp = prob_.agents[i];
      const WireMessage& r = dumps[i];
      expect_reply_size(r, static_cast<std::size_t>(sp.p + sp.extra_dim +
                                                    sp.ineq_count +
                                                    sp.eq_count + 1));
      const double* d = r.payload.data();
      AgentState& st = it.agents[i];
      st.x_i = Eigen::Map<const Vector>(d, sp.p);
      st.t_i = Eigen::Map<const Vector>(d + sp.p, sp.extra_dim);
      st.z = Eigen::Map<const Vector>(d + sp.p + sp.extra_dim, sp.ineq_count);
      st.v = Eigen::Map<const Vector>(d + sp.p + sp.extra_dim + sp.ineq_count,
                                      sp.eq_count);
      st.lambda = r.payload.back();
    }
    trace_.iterates.push_back(std::move(it));
  }

  SolveResult assemble(Status status, const Vector& x, bool converged,
                       Clock::time_point t_start);

  const RelaxedProblem& prob_;
  SolverConfig cfg_;
  Index m_total_ = 0;
  std::vector<std::unique_ptr<LeafAgent>> leaves_;
  std::unique_ptr<Transport> transport_;
  long round_ = 0;
  Trace trace_;
};

SolveResult Root::run() {
  const auto t_start = Clock::now();
  const Index p = prob_.p;

  Vector x = cfg_.x0.value_or(Vector::Zero(p));
  if (x.size() != p)
    throw InvalidConfigError("starting point has dimension " +
                             std::to_string(x.size()) + ", problem has " +
                             std::to_string(p));

  Status status = Status::MaxIterations;
  bool converged = false;
  long iter_exchanges = 0;
  double delta = 0.0;

  try {
    std::vector<double> init_payload = {prob_.epsilon, cfg_.eps_feas,
                                        cfg_.eps_d};
    init_payload.insert(init_payload.end(), x.data(), x.data() + p);
    double eta = fold_scalars(exchange(MessageKind::Init, init_payload));
    trace_.setup_exchanges = 1;
    delta = update_perturbation(eta, m_total_, cfg_.mu);

    for (int iter = 1; iter <= cfg_.max_iter; ++iter) {
      const auto t_iter = Clock::now();
      iter_exchanges = 0;

      auto up = exchange(MessageKind::StartIter, {delta});
      ++iter_exchanges;
      Matrix Q;
      Vector q;
      fold_upward(up, p, Q, q);
      Eigen::PartialPivLU<Matrix> lu(Q);
      if (!(lu.rcond() >= kMinRootRcond))
        throw AbortRun{Status::SingularSystem};
      const Vector dx = lu.solve(-q);

      if (cfg_.collect_iterates) {
        snapshot_iterate(x, delta, iter);
        ++iter_exchanges;
      }

      auto caps = exchange(MessageKind::Direction, to_payload(dx));
      ++iter_exchanges;
      double alpha = 1.0;
      for (const WireMessage& r : caps) {
        expect_reply_size(r, 1);
        alpha = std::min(alpha, r.payload[0]);
      }

      auto base = exchange(MessageKind::Baseline, {});
      ++iter_exchanges;
      const ResidualNorms before = fold_shares(base, p);

      int trials = 0;
      bool accepted = false;
      ResidualNorms after;
      while (true) {
        ++trials;
        auto flags = exchange(MessageKind::TrialFeas, {alpha});
        ++iter_exchanges;
        bool all_feasible = true;
        for (const WireMessage& r : flags) {
          expect_reply_size(r, 1);
          all_feasible = all_feasible && (r.payload[0] != 0.0);
        }
        auto trial = exchange(MessageKind::TrialResidual,
                              {all_feasible ? 1.0 : 0.0, alpha});
        ++iter_exchanges;
        if (all_feasible) {
          after = fold_shares(trial, p);
          if (after.total <= (1.0 - cfg_.alpha_ls * alpha) * before.total) {
            accepted = true;
            break;
          }
        }
        alpha *= cfg_.beta;
        if (alpha < cfg_.min_step) break;
      }
      if (!accepted) throw AbortRun{Status::LineSearchFailure};

      eta = fold_scalars(exchange(MessageKind::Accept, {alpha}));
      ++iter_exchanges;
      const double delta_next = update_perturbation(eta, m_total_, cfg_.mu);
      x += alpha * dx;

      auto votes = exchange(MessageKind::Gap,
                            {eta, delta_next, after.dual, after.primal});
      ++iter_exchanges;
      const bool stop = check_termination(after.primal, after.dual, eta,
                                          cfg_.eps_feas, cfg_.eps_d);
      for (const WireMessage& r : votes) {
        expect_reply_size(r, 1);
        if ((r.payload[0] != 0.0) != stop)
          throw ProtocolError(r.agent_id,
                              "agent " + std::to_string(r.agent_id) +
                                  " voted against the folded scalars");
      }

      IterationRecord row;
      row.iter = iter;
      row.eta_hat = eta;
      row.r_dual_norm = after.dual;
      row.r_primal_norm = after.primal;
      row.alpha = alpha;
      row.delta = delta;
      row.trials = trials;
      row.exchanges = iter_exchanges;
      row.wall_sec = seconds_since(t_iter);
      row.residual_before = before.total;
      row.residual_after = after.total;
      row.x = x;
      trace_.rows.push_back(std::move(row));
      trace_.loop_exchanges += iter_exchanges;
      iter_exchanges = 0;

      delta = delta_next;
      if (stop) {
        status = Status::Converged;
        converged = true;
        break;
      }
    }
  } catch (const AbortRun& abort) {
    trace_.loop_exchanges += iter_exchanges;
    status = abort.status;
  }

  if (cfg_.collect_iterates && delta > 0.0) {
    snapshot_iterate(x, delta, static_cast<int>(trace_.rows.size()) + 1);
    ++trace_.loop_exchanges;
  }
  return assemble(status, x, converged, t_start);
}

SolveResult Root::assemble(Status status, const Vector& x, bool converged,
                           Clock::time_point t_start) {
  const Index p = prob_.p;
  const std::size_t n = leaves_.size();

  std::vector<WireMessage> finals;
  if (converged) {
    finals = broadcast(*transport_, round_++, MessageKind::Final,
                       to_payload(x));
  } else {
    finals = broadcast(*transport_, round_++, MessageKind::Abort,
                       {static_cast<double>(status)});
  }
  trace_.teardown_exchanges = 1;

  SolveResult out;
  out.solution.x = x;
  out.solution.status = status;
  out.solution.iterations = static_cast<int>(trace_.rows.size());
  out.solution.x_agents.resize(n);
  out.solution.agent_objectives.resize(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const WireMessage& r = finals[i];
    if (r.kind == MessageKind::FinalState &&
        r.payload.size() == static_cast<std::size_t>(p) + 1) {
      out.solution.agent_objectives[i] = r.payload[0];
      out.solution.x_agents[i] =
          Eigen::Map<const Vector>(r.payload.data() + 1, p);
    } else {
      out.solution.agent_objectives[i] =
          std::numeric_limits<double>::quiet_NaN();
      out.solution.x_agents[i] = Vector::Constant(
          p, std::numeric_limits<double>::quiet_NaN());
    }
    sum += out.solution.agent_objectives[i];
  }
  out.solution.objective_sum = sum;
  out.solution.objective_avg = sum / static_cast<double>(n);

  trace_.status = status;
  trace_.wall_sec = seconds_since(t_start);
  trace_.messages = transport_->log();
  out.trace = std::move(trace_);
  return out;
}

} // namespace

SolveResult solve_distributed(const RelaxedProblem& prob,
                              const SolverConfig& cfg,
                              TransportKind transport) {
  Root root(prob, cfg, transport);
  return root.run();
}

Direction message_passing_direction(const RelaxedProblem& prob,
                                    const Iterate& it) {
  const Index n = prob.agent_count();
  const Index p = prob.p;
  if (it.x.size() != p ||
      static_cast<Index>(it.agents.size()) != n)
    throw DimensionError("iterate does not match the problem layout");
  if (it.delta <= 0.0)
    throw InvalidInputError("iterate carries a non-positive perturbation");

  std::vector<std::unique_ptr<LeafAgent>> leaves;
  leaves.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    leaves.push_back(std::make_unique<LeafAgent>(
        static_cast<int>(i), prob.agents[static_cast<std::size_t>(i)],
        prob.epsilon, it.x, it.agents[static_cast<std::size_t>(i)]));
  std::vector<LeafHandler> handlers;
  handlers.reserve(static_cast<std::size_t>(n));
  for (auto& leaf : leaves) handlers.push_back(leaf->handler());
  SequentialTransport tr(std::move(handlers));

  long round = 0;
  auto exchange = [&](MessageKind kind, const std::vector<double>& payload) {
    auto replies = broadcast(tr, round++, kind, payload);
    for (const WireMessage& r : replies)
      if (r.kind == MessageKind::ErrorReply) throw_leaf_failure(r);
    return replies;
  };

  auto up = exchange(MessageKind::StartIter, {it.delta});
  Matrix Q;
  Vector q;
  fold_upward(up, p, Q, q);
  Eigen::PartialPivLU<Matrix> lu(Q);
  if (!(lu.rcond() >= kMinRootRcond))
    throw SingularRootError("folded direction system is singular");
  Direction out;
  out.dx = lu.solve(-q);

  exchange(MessageKind::Direction, to_payload(out.dx));

  auto dumps = exchange(MessageKind::InspectDirection, {});
  out.agents.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const LocalSubproblem& sp = prob.agents[static_cast<std::size_t>(i)];
    const WireMessage& r = dumps[static_cast<std::size_t>(i)];
    expect_reply_size(r, static_cast<std::size_t>(sp.p + sp.extra_dim +
                                                  sp.ineq_count +
                                                  sp.eq_count + 1));
    const double* d = r.payload.data();
    AgentDirection& ad = out.agents[static_cast<std::size_t>(i)];
    ad.dx_i = Eigen::Map<const Vector>(d, sp.p);
    ad.dt_i = Eigen::Map<const Vector>(d + sp.p, sp.extra_dim);
    ad.dz = Eigen::Map<const Vector>(d + sp.p + sp.extra_dim, sp.ineq_count);
    ad.dv = Eigen::Map<const Vector>(d + sp.p + sp.extra_dim + sp.ineq_count,
                                     sp.eq_count);
    ad.dlambda = r.payload.back();
  }
  return out;
}

} // namespace cipm

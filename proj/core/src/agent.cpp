#include "cipm/agent.hpp"

#include <cstring>

#include "cipm/errors.hpp"

namespace cipm {

std::pair<Matrix, Vector> schur_terms(const HessianBlocks& H,
                                      const LocalKktResult& kkt,
                                      const LinearTerm& lt) {
  const Matrix HllU1 = H.H_ll * kkt.U1;
  Matrix Q = H.H_gg + kkt.U1.transpose() * HllU1 +
             kkt.U1.transpose() * H.H_lg + H.H_lg.transpose() * kkt.U1;
  Q = ((Q + Q.transpose()) * 0.5).eval();
  Vector q = lt.r_g + kkt.U1.transpose() * lt.r_l +
             H.H_lg.transpose() * kkt.u1 + kkt.U1.transpose() * (H.H_ll * kkt.u1);
  return {std::move(Q), std::move(q)};
}

namespace {

Vector map_payload(const std::vector<double>& payload, std::size_t offset,
                   Index n) {
  return Eigen::Map<const Vector>(payload.data() + offset, n);
}

void append(std::vector<double>& payload, const Vector& v) {
  payload.insert(payload.end(), v.data(), v.data() + v.size());
}

void append(std::vector<double>& payload, const Matrix& m) {
  payload.insert(payload.end(), m.data(), m.data() + m.size());
}

} // namespace

LeafAgent::LeafAgent(int id, LocalSubproblem sp, bool ridge_fallback)
    : id_(id), sp_(std::move(sp)), ridge_fallback_(ridge_fallback) {
  sp_.check_wellformed();
}

LeafAgent::LeafAgent(int id, LocalSubproblem sp, double epsilon, Vector x,
                     AgentState st, bool ridge_fallback)
    : id_(id),
      sp_(std::move(sp)),
      ridge_fallback_(ridge_fallback),
      epsilon_(epsilon),
      x_(std::move(x)),
      st_(std::move(st)),
      phase_(Phase::Ready) {
  sp_.check_wellformed();
  if (epsilon_ <= 0.0) throw InvalidInputError("epsilon must be positive");
  if (x_.size() != sp_.p || st_.x_i.size() != sp_.p ||
      st_.t_i.size() != sp_.extra_dim || st_.z.size() != sp_.ineq_count ||
      st_.v.size() != sp_.eq_count)
    throw DimensionError("injected state does not match the subproblem");
}

WireMessage LeafAgent::handle(const WireMessage& msg) {
  try {
    return dispatch(msg);
  } catch (const SingularKktError&) {
    return reply(msg, MessageKind::ErrorReply,
                 {static_cast<double>(LeafError::SingularKkt)});
  } catch (const UnsupportedInitializationError&) {
    return reply(msg, MessageKind::ErrorReply,
                 {static_cast<double>(LeafError::BadInit)});
  } catch (const FeasibilityError&) {
    return reply(msg, MessageKind::ErrorReply,
                 {static_cast<double>(LeafError::Infeasible)});
  } catch (const std::exception&) {
    return reply(msg, MessageKind::ErrorReply,
                 {static_cast<double>(LeafError::Protocol)});
  }
}

WireMessage LeafAgent::dispatch(const WireMessage& msg) {
  switch (msg.kind) {
    case MessageKind::Init: return on_init(msg);
    case MessageKind::StartIter: return on_start_iter(msg);
    case MessageKind::Direction: return on_direction(msg);
    case MessageKind::Baseline: return on_baseline(msg);
    case MessageKind::TrialFeas: return on_trial_feas(msg);
    case MessageKind::TrialResidual: return on_trial_residual(msg);
    case MessageKind::Accept: return on_accept(msg);
    case MessageKind::Gap: return on_gap(msg);
    case MessageKind::Final:
    case MessageKind::Abort: return on_final(msg);
    case MessageKind::InspectIterate: return on_inspect_iterate(msg);
    case MessageKind::InspectDirection: return on_inspect_direction(msg);
    default:
      throw ProtocolError(id_, "leaf received non-root message kind " +
                                   to_string(msg.kind));
  }
}

WireMessage LeafAgent::reply(const WireMessage& req, MessageKind kind,
                             std::vector<double> payload) const {
  WireMessage out;
  out.agent_id = id_;
  out.round_id = req.round_id;
  out.kind = kind;
  out.payload = std::move(payload);
  return out;
}

void LeafAgent::require(bool ok, const char* what) const {
  if (!ok) throw ProtocolError(id_, what);
}

void LeafAgent::expect_payload(const WireMessage& msg,
                               std::size_t size) const {
  if (msg.payload.size() != size)
    throw ProtocolError(id_, to_string(msg.kind) + " payload has " +
                                 std::to_string(msg.payload.size()) +
                                 " values, expected " + std::to_string(size));
}

WireMessage LeafAgent::on_init(const WireMessage& msg) {
  expect_payload(msg, 3 + static_cast<std::size_t>(sp_.p));
  epsilon_ = msg.payload[0];
  eps_feas_ = msg.payload[1];
  eps_d_ = msg.payload[2];
  if (epsilon_ <= 0.0 || eps_feas_ <= 0.0 || eps_d_ <= 0.0)
    throw ProtocolError(id_, "init carried non-positive tolerances");

  x_ = map_payload(msg.payload, 3, sp_.p);
  st_.x_i = x_;
  if (sp_.extra_dim > 0) {
    if (!sp_.initial_extra)
      throw UnsupportedInitializationError(
          "subproblem has auxiliaries but no initializer for them");
    st_.t_i = sp_.initial_extra(st_.x_i);
    if (st_.t_i.size() != sp_.extra_dim)
      throw UnsupportedInitializationError(
          "auxiliary initializer returned the wrong dimension");
  } else {
    st_.t_i.resize(0);
  }
  st_.z = Vector::Ones(sp_.ineq_count);
  st_.v = Vector::Zero(sp_.eq_count);
  st_.lambda = 1.0;

  if (sp_.ineq_count > 0) {
    const Vector g = sp_.ineq_value(st_.stacked());
    if (!(g.array() < 0.0).all())
      throw UnsupportedInitializationError(
          "starting point is not strictly feasible");
  }

  iteration_ = 0;
  phase_ = Phase::Ready;
  return reply(msg, MessageKind::InitReply,
               {surrogate_gap_local(sp_, x_, st_, epsilon_)});
}

WireMessage LeafAgent::on_start_iter(const WireMessage& msg) {
  require(phase_ == Phase::Ready, "start-iter outside the ready phase");
  expect_payload(msg, 1);
  delta_ = msg.payload[0];
  require(delta_ > 0.0, "start-iter carried a non-positive perturbation");
  ++iteration_;

  H_ = assemble_local_hessian(sp_, x_, st_, epsilon_);
  res_ = eval_residuals(sp_, x_, st_, delta_, epsilon_);
  lt_ = assemble_linear_term(sp_, x_, st_, res_, epsilon_);
  kkt_ = solve_local_kkt(H_, sp_.A, lt_.r_l, res_.r_primal, id_,
                         ridge_fallback_, iteration_);

  auto [Q, q] = schur_terms(H_, kkt_, lt_);
  std::vector<double> payload;
  payload.reserve(static_cast<std::size_t>(sp_.p * sp_.p + sp_.p));
  append(payload, Q);
  append(payload, q);
  phase_ = Phase::Factored;
  return reply(msg, MessageKind::Upward, std::move(payload));
}

WireMessage LeafAgent::on_direction(const WireMessage& msg) {
  require(phase_ == Phase::Factored, "direction before upward terms");
  require(kkt_.iteration == iteration_, "direction against stale factors");
  expect_payload(msg, static_cast<std::size_t>(sp_.p));
  dx_ = map_payload(msg.payload, 0, sp_.p);

  const Vector dy = kkt_.u1 + kkt_.U1 * dx_;
  dir_.dx_i = dy.head(sp_.p);
  dir_.dt_i = dy.tail(sp_.extra_dim);
  dir_.dv = kkt_.u2 + kkt_.U2 * dx_;
  dual_directions(sp_, x_, st_, res_, epsilon_, dy, dx_, dir_.dz,
                  dir_.dlambda);

  phase_ = Phase::Directed;
  return reply(msg, MessageKind::DualCap,
               {dual_step_cap(st_, dir_.dz, dir_.dlambda)});
}

WireMessage LeafAgent::on_baseline(const WireMessage& msg) {
  require(phase_ == Phase::Directed, "baseline outside the search phase");
  expect_payload(msg, 0);
  const ResidualShare share =
      residual_share(sp_, x_, st_, delta_, epsilon_);
  std::vector<double> payload;
  append(payload, share.global_block);
  payload.push_back(share.sq_dual);
  payload.push_back(share.sq_cent);
  payload.push_back(share.sq_primal);
  return reply(msg, MessageKind::Share, std::move(payload));
}

WireMessage LeafAgent::on_trial_feas(const WireMessage& msg) {
  require(phase_ == Phase::Directed, "trial outside the search phase");
  expect_payload(msg, 1);
  const double alpha = msg.payload[0];
  const bool ok = trial_feasible(sp_, x_, st_, dir_, dx_, alpha, epsilon_);
  return reply(msg, MessageKind::Flag, {ok ? 1.0 : 0.0});
}

WireMessage LeafAgent::on_trial_residual(const WireMessage& msg) {
  require(phase_ == Phase::Directed, "trial outside the search phase");
  expect_payload(msg, 2);
  const bool all_feasible = msg.payload[0] != 0.0;
  const double alpha = msg.payload[1];

  std::vector<double> payload;
  if (all_feasible) {
    AgentState trial = st_;
    advance_state(trial, dir_, alpha);
    const Vector x_trial = x_ + alpha * dx_;
    const ResidualShare share =
        residual_share(sp_, x_trial, trial, delta_, epsilon_);
    append(payload, share.global_block);
    payload.push_back(share.sq_dual);
    payload.push_back(share.sq_cent);
    payload.push_back(share.sq_primal);
  } else {
    payload.assign(static_cast<std::size_t>(sp_.p) + 3, 0.0);
  }
  return reply(msg, MessageKind::Share, std::move(payload));
}

WireMessage LeafAgent::on_accept(const WireMessage& msg) {
  require(phase_ == Phase::Directed, "accept outside the search phase");
  expect_payload(msg, 1);
  const double alpha = msg.payload[0];
  require(alpha > 0.0, "accept carried a non-positive step");
  advance_state(st_, dir_, alpha);
  x_ += alpha * dx_;
  phase_ = Phase::Accepted;
  return reply(msg, MessageKind::EtaHat,
               {surrogate_gap_local(sp_, x_, st_, epsilon_)});
}

WireMessage LeafAgent::on_gap(const WireMessage& msg) {
  require(phase_ == Phase::Accepted, "gap report before an accepted step");
  expect_payload(msg, 4);
  const double eta_hat = msg.payload[0];
  delta_ = msg.payload[1];
  const double r_dual_norm = msg.payload[2];
  const double r_primal_norm = msg.payload[3];
  const bool stop = check_termination(r_primal_norm, r_dual_norm, eta_hat,
                                      eps_feas_, eps_d_);
  phase_ = Phase::Ready;
  return reply(msg, MessageKind::Vote, {stop ? 1.0 : 0.0});
}

WireMessage LeafAgent::on_final(const WireMessage& msg) {
  require(phase_ != Phase::Fresh, "finalize before init");
  if (msg.kind == MessageKind::Final) {
    expect_payload(msg, static_cast<std::size_t>(sp_.p));
  } else {
    expect_payload(msg, 1);
  }
  phase_ = Phase::Finished;
  std::vector<double> payload;
  payload.push_back(sp_.value(st_.stacked()));
  append(payload, x_);
  return reply(msg, MessageKind::FinalState, std::move(payload));
}

WireMessage LeafAgent::on_inspect_iterate(const WireMessage& msg) const {
  require(phase_ != Phase::Fresh, "inspect before init");
  expect_payload(msg, 0);
  std::vector<double> payload;
  append(payload, st_.x_i);
  append(payload, st_.t_i);
  append(payload, st_.z);
  append(payload, st_.v);
  payload.push_back(st_.lambda);
  return reply(msg, MessageKind::IterateDump, std::move(payload));
}

WireMessage LeafAgent::on_inspect_direction(const WireMessage& msg) const {
  require(phase_ == Phase::Directed || phase_ == Phase::Accepted,
          "inspect-direction before a direction exists");
  expect_payload(msg, 0);
  std::vector<double> payload;
  append(payload, dir_.dx_i);
  append(payload, dir_.dt_i);
  append(payload, dir_.dz);
  append(payload, dir_.dv);
  payload.push_back(dir_.dlambda);
  return reply(msg, MessageKind::DirectionDump, std::move(payload));
}

} // namespace cipm

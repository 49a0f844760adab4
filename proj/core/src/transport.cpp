#include "cipm/transport.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <optional>
#include <thread>

#include "cipm/errors.hpp"

namespace cipm {

void Transport::send_to_leaf(int leaf, const WireMessage& msg) {
  if (leaf < 0 || leaf >= leaf_count())
    throw ProtocolError(leaf, "send to unknown leaf " + std::to_string(leaf));
  log_.push_back({leaf, true, msg.kind, msg.payload.size()});
  do_send(leaf, msg);
}

WireMessage Transport::recv_from_leaf(int leaf) {
  if (leaf < 0 || leaf >= leaf_count())
    throw ProtocolError(leaf, "recv from unknown leaf " + std::to_string(leaf));
  WireMessage msg = do_recv(leaf);
  log_.push_back({leaf, false, msg.kind, msg.payload.size()});
  return msg;
}

struct SequentialTransport::Impl {
  std::vector<LeafHandler> handlers;
  std::vector<std::deque<WireMessage>> replies;
};

SequentialTransport::SequentialTransport(std::vector<LeafHandler> handlers)
    : impl_(std::make_unique<Impl>()) {
  impl_->replies.resize(handlers.size());
  impl_->handlers = std::move(handlers);
}

SequentialTransport::~SequentialTransport() = default;

Index SequentialTransport::leaf_count() const {
  return static_cast<Index>(impl_->handlers.size());
}

void SequentialTransport::do_send(int leaf, const WireMessage& msg) {
  impl_->replies[static_cast<std::size_t>(leaf)].push_back(
      impl_->handlers[static_cast<std::size_t>(leaf)](msg));
}

WireMessage SequentialTransport::do_recv(int leaf) {
  auto& q = impl_->replies[static_cast<std::size_t>(leaf)];
  if (q.empty())
    throw ProtocolError(leaf, "agent " + std::to_string(leaf) +
                                  " has no pending reply");
  WireMessage msg = std::move(q.front());
  q.pop_front();
  return msg;
}

namespace {

/// Blocking FIFO with shutdown. pop() returns nullopt once closed and
/// drained; timed_pop() additionally gives up after the deadline.
class Channel {
 public:
  void push(WireMessage msg) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      q_.push_back(std::move(msg));
    }
    cv_.notify_one();
  }

  std::optional<WireMessage> pop() {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [&] { return !q_.empty() || closed_; });
    return take();
  }

  std::optional<WireMessage> timed_pop(double timeout_sec) {
    std::unique_lock<std::mutex> lock(mu_);
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration<double>(timeout_sec);
    if (!cv_.wait_until(lock, deadline,
                        [&] { return !q_.empty() || closed_; }))
      return std::nullopt;
    return take();
  }

  void close() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      closed_ = true;
    }
    cv_.notify_all();
  }

 private:
  std::optional<WireMessage> take() {
    if (q_.empty()) return std::nullopt; // closed and drained
    WireMessage msg = std::move(q_.front());
    q_.pop_front();
    return msg;
  }

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<WireMessage> q_;
  bool closed_ = false;
};

} // namespace

struct QueueTransport::Impl {
  std::vector<std::unique_ptr<Channel>> down, up;
  std::vector<std::thread> workers;
  double timeout_sec = 30.0;

  void shutdown() {
    for (auto& c : down) c->close();
    for (auto& t : workers)
      if (t.joinable()) t.join();
    for (auto& c : up) c->close();
  }
};

QueueTransport::QueueTransport(std::vector<LeafHandler> handlers,
                               double timeout_sec)
    : impl_(std::make_unique<Impl>()) {
  impl_->timeout_sec = timeout_sec;
  const std::size_t n = handlers.size();
  for (std::size_t i = 0; i < n; ++i) {
    impl_->down.push_back(std::make_unique<Channel>());
    impl_->up.push_back(std::make_unique<Channel>());
  }
  for (std::size_t i = 0; i < n; ++i) {
    LeafHandler handler = std::move(handlers[i]);
    Channel* down = impl_->down[i].get();
    Channel* up = impl_->up[i].get();
    impl_->workers.emplace_back([handler = std::move(handler), down, up] {
      while (auto msg = down->pop()) up->push(handler(*msg));
    });
  }
}

QueueTransport::~QueueTransport() { impl_->shutdown(); }

Index QueueTransport::leaf_count() const {
  return static_cast<Index>(impl_->workers.size());
}

void QueueTransport::do_send(int leaf, const WireMessage& msg) {
  impl_->down[static_cast<std::size_t>(leaf)]->push(msg);
}

WireMessage QueueTransport::do_recv(int leaf) {
  auto msg = impl_->up[static_cast<std::size_t>(leaf)]->timed_pop(
      impl_->timeout_sec);
  if (!msg)
    throw ProtocolError(leaf, "agent " + std::to_string(leaf) +
                                  " sent nothing within " +
                                  std::to_string(impl_->timeout_sec) +
                                  " seconds");
  return std::move(*msg);
}

std::string to_string(MessageKind k) {
  switch (k) {
    case MessageKind::Init: return "init";
    case MessageKind::StartIter: return "start-iter";
    case MessageKind::Direction: return "direction";
    case MessageKind::Baseline: return "baseline";
    case MessageKind::TrialFeas: return "trial-feas";
    case MessageKind::TrialResidual: return "trial-residual";
    case MessageKind::Accept: return "accept";
    case MessageKind::Gap: return "gap";
    case MessageKind::Final: return "final";
    case MessageKind::Abort: return "abort";
    case MessageKind::InspectIterate: return "inspect-iterate";
    case MessageKind::InspectDirection: return "inspect-direction";
    case MessageKind::InitReply: return "init-reply";
    case MessageKind::Upward: return "upward";
    case MessageKind::DualCap: return "dual-cap";
    case MessageKind::Share: return "share";
    case MessageKind::Flag: return "flag";
    case MessageKind::EtaHat: return "eta-hat";
    case MessageKind::Vote: return "vote";
    case MessageKind::FinalState: return "final-state";
    case MessageKind::IterateDump: return "iterate-dump";
    case MessageKind::DirectionDump: return "direction-dump";
    case MessageKind::ErrorReply: return "error";
  }
  return "unknown";
}

} // namespace cipm

#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "cipm/types.hpp"
#include "cipm/wire.hpp"

namespace cipm {

using LeafHandler = std::function<WireMessage(const WireMessage&)>;

/// A record of one message as seen from the root's side of the links.
struct MessageLogEntry {
  int leaf = 0;
  bool down = true;
  MessageKind kind = MessageKind::Abort;
  std::size_t payload_size = 0;
};

/// Star-shaped duplex channels between one root and N leaves. Links are
/// FIFO and deliver exactly once; the root is the only caller of this
/// interface. Leaves never share state with the root or each other; all
/// coupling flows through these messages.
class Transport {
 public:
  virtual ~Transport() = default;

  void send_to_leaf(int leaf, const WireMessage& msg);
  WireMessage recv_from_leaf(int leaf);

  virtual Index leaf_count() const = 0;

  const std::vector<MessageLogEntry>& log() const { return log_; }

 protected:
  virtual void do_send(int leaf, const WireMessage& msg) = 0;
  virtual WireMessage do_recv(int leaf) = 0;

 private:
  std::vector<MessageLogEntry> log_;
};

/// Runs each leaf handler inline at delivery time, on the caller's
/// thread, in the order the root sends. Replies queue per link.
class SequentialTransport final : public Transport {
 public:
  explicit SequentialTransport(std::vector<LeafHandler> handlers);
  ~SequentialTransport() override;

  Index leaf_count() const override;

 protected:
  void do_send(int leaf, const WireMessage& msg) override;
  WireMessage do_recv(int leaf) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One worker thread per leaf, coupled through mutex-guarded FIFO
/// queues. Receives block up to `timeout_sec`, then fail with a
/// ProtocolError naming the silent agent. Destruction closes the down
/// queues and joins the workers.
class QueueTransport final : public Transport {
 public:
  QueueTransport(std::vector<LeafHandler> handlers, double timeout_sec);
  ~QueueTransport() override;

  Index leaf_count() const override;

 protected:
  void do_send(int leaf, const WireMessage& msg) override;
  WireMessage do_recv(int leaf) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

} // namespace cipm

#pragma once

#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "hyjob/message.hpp"

namespace hyjob::transport {

/// One end of a bidirectional, per-peer FIFO message link. An endpoint is
/// used by one control loop at a time, except that close() may be called
/// from anywhere to unblock a pending receive().
class Endpoint {
 public:
  virtual ~Endpoint() = default;
  /// Reliable; throws Error(PeerClosed) once either side has closed.
  virtual void send(const Message& m) = 0;
  /// Blocks for the next message; throws Error(PeerClosed) when the peer
  /// has closed and everything it sent has been received.
  virtual Message receive() = 0;
  virtual void close() = 0;
};

class Listener {
 public:
  virtual ~Listener() = default;
  /// Blocks for the next inbound connection; throws PeerClosed after close().
  virtual std::unique_ptr<Endpoint> accept() = 0;
  virtual const std::string& address() const = 0;
  virtual void close() = 0;
};

class Network {
 public:
  virtual ~Network() = default;
  virtual std::unique_ptr<Listener> listen() = 0;
  /// Throws Error(ConnectFailed).
  virtual std::unique_ptr<Endpoint> connect(const std::string& address) = 0;
};

/// In-process endpoints passing messages through shared queues. Addresses
/// look like "inproc:<n>".
class InprocNetwork final : public Network {
 public:
  std::unique_ptr<Listener> listen() override;
  std::unique_ptr<Endpoint> connect(const std::string& address) override;

  /// Two directly connected endpoints, without a listener.
  static std::pair<std::unique_ptr<Endpoint>, std::unique_ptr<Endpoint>> pair();

 private:
  struct Backlog;
  friend class InprocListener;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Backlog>> listeners_;
  std::uint64_t next_ = 1;
};

/// TCP with the length-prefixed frame format; addresses are "host:port".
class TcpNetwork final : public Network {
 public:
  explicit TcpNetwork(std::string bind_host = "127.0.0.1") : host_(std::move(bind_host)) {}
  std::unique_ptr<Listener> listen() override;
  std::unique_ptr<Endpoint> connect(const std::string& address) override;

 private:
  std::string host_;
};

}  // namespace hyjob::transport

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>

#include "hyjob/transport.hpp"

namespace hyjob::transport {
namespace {

std::string errno_text() { return std::strerror(errno); }

std::pair<std::string, std::string> split_address(const std::string& address) {
  auto colon = address.rfind(':');
  if (colon == std::string::npos) fail(ErrorCode::ConnectFailed, "address needs host:port: " + address);
  return {address.substr(0, colon), address.substr(colon + 1)};
}

class TcpEndpoint final : public Endpoint {
 public:
  explicit TcpEndpoint(int fd) : fd_(fd) {
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }
  ~TcpEndpoint() override {
    close();
    ::close(fd_);
  }

  void send(const Message& m) override {
    std::lock_guard lock(send_mu_);
    buffer_.clear();
    encode_into(m, buffer_);
    std::size_t sent = 0;
    while (sent < buffer_.size()) {
      auto n = ::send(fd_, buffer_.data() + sent, buffer_.size() - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail(ErrorCode::PeerClosed, "send failed: " + errno_text());
      }
      sent += static_cast<std::size_t>(n);
    }
  }

  Message receive() override {
    std::uint8_t prefix[4];
    read_exact(prefix, 4);
    std::uint32_t length = 0;
    for (int i = 0; i < 4; ++i) length |= static_cast<std::uint32_t>(prefix[i]) << (8 * i);
    body_.resize(length);
    read_exact(body_.data(), length);
    return decode_body(body_);
  }

  void close() override {
    if (!closed_.exchange(true)) ::shutdown(fd_, SHUT_RDWR);
  }

 private:
  void read_exact(std::uint8_t* dst, std::size_t n) {
    std::size_t got = 0;
    while (got < n) {
      auto r = ::recv(fd_, dst + got, n - got, 0);
      if (r == 0) fail(ErrorCode::PeerClosed, "tcp peer closed");
      if (r < 0) {
        if (errno == EINTR) continue;
        fail(ErrorCode::PeerClosed, "recv failed: " + errno_text());
      }
      got += static_cast<std::size_t>(r);
    }
  }

  int fd_;
  std::atomic<bool> closed_{false};
  std::mutex send_mu_;
  Bytes buffer_;
  Bytes body_;
};

class TcpListener final : public Listener {
 public:
  TcpListener(int fd, std::string address) : fd_(fd), address_(std::move(address)) {}
  ~TcpListener() override {
    close();
    ::close(fd_);
  }

  std::unique_ptr<Endpoint> accept() override {
    while (true) {
      int c = ::accept(fd_, nullptr, nullptr);
      if (c >= 0) return std::make_unique<TcpEndpoint>(c);
      if (errno == EINTR) continue;
      fail(ErrorCode::PeerClosed, "listener closed: " + errno_text());
    }
  }

  const std::string& address() const override { return address_; }

  void close() override {
    if (!closed_.exchange(true)) ::shutdown(fd_, SHUT_RDWR);
  }

 private:
  int fd_;
  std::string address_;
  std::atomic<bool> closed_{false};
};

}  // namespace

std::unique_ptr<Listener> TcpNetwork::listen() {
  int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) fail(ErrorCode::ConnectFailed, "socket: " + errno_text());
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = 0;
  if (::inet_pton(AF_INET, host_.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    fail(ErrorCode::ConnectFailed, "bad bind host " + host_);
  }
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(fd, 64) < 0) {
    auto why = errno_text();
    ::close(fd);
    fail(ErrorCode::ConnectFailed, "bind/listen: " + why);
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  return std::make_unique<TcpListener>(fd, host_ + ":" + std::to_string(ntohs(addr.sin_port)));
}

std::unique_ptr<Endpoint> TcpNetwork::connect(const std::string& address) {
  auto [host, port] = split_address(address);
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), port.c_str(), &hints, &res) != 0 || !res) {
    fail(ErrorCode::ConnectFailed, "cannot resolve " + address);
  }
  int fd = ::socket(res->ai_family, res->ai_socktype | SOCK_CLOEXEC, res->ai_protocol);
  if (fd < 0) {
    ::freeaddrinfo(res);
    fail(ErrorCode::ConnectFailed, "socket: " + errno_text());
  }
  int rc;
  do {
    rc = ::connect(fd, res->ai_addr, res->ai_addrlen);
  } while (rc < 0 && errno == EINTR);
  ::freeaddrinfo(res);
  if (rc < 0) {
    auto why = errno_text();
    ::close(fd);
    fail(ErrorCode::ConnectFailed, "connect to " + address + ": " + why);
  }
  return std::make_unique<TcpEndpoint>(fd);
}

}  // namespace hyjob::transport

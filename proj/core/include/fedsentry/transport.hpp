#pragma once

#include <cstdint>

#include "fedsentry/federation.hpp"
#include "fedsentry/protocol.hpp"

namespace fedsentry {

// Framed message stream over a connected TCP socket. Receive failures
// (peer gone, malformed frame, oversized frame) surface as ProtocolError.
class Connection {
 public:
  Connection() noexcept = default;
  explicit Connection(int fd) noexcept : fd_(fd) {}
  ~Connection();

  Connection(Connection&& other) noexcept;
  Connection& operator=(Connection&& other) noexcept;
  Connection(const Connection&) = delete;
  Connection& operator=(const Connection&) = delete;

  static Connection connect_local(std::uint16_t port);

  bool open() const noexcept { return fd_ >= 0; }
  int fd() const noexcept { return fd_; }
  void send(const RoundMessage& message);
  RoundMessage recv();
  void close() noexcept;

 private:
  int fd_ = -1;
};

// Loopback listener on an ephemeral port.
class ServerSocket {
 public:
  ServerSocket();
  ~ServerSocket();

  ServerSocket(const ServerSocket&) = delete;
  ServerSocket& operator=(const ServerSocket&) = delete;

  std::uint16_t port() const noexcept { return port_; }
  Connection accept_one();

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

}  // namespace fedsentry

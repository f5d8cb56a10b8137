#include "fedsentry/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <string>
#include <utility>
#include <vector>

namespace fedsentry {
namespace {

constexpr std::uint32_t kMaxPayloadBytes = 64u * 1024u * 1024u;

[[noreturn]] void throw_errno(const std::string& what) {
  throw ProtocolError(what + ": " + std::strerror(errno));
}

void write_all(int fd, const std::uint8_t* data, std::size_t size) {
  std::size_t sent = 0;
  while (sent < size) {
    const ssize_t n = ::send(fd, data + sent, size - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("send failed");
    }
    sent += static_cast<std::size_t>(n);
  }
}

void read_all(int fd, std::uint8_t* data, std::size_t size) {
  std::size_t got = 0;
  while (got < size) {
    const ssize_t n = ::recv(fd, data + got, size - got, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("recv failed");
    }
    if (n == 0) {
      throw ProtocolError("connection closed mid-frame");
    }
    got += static_cast<std::size_t>(n);
  }
}

}  // namespace

Connection::~Connection() { close(); }

Connection::Connection(Connection&& other) noexcept : fd_(other.fd_) {
  other.fd_ = -1;
}

Connection& Connection::operator=(Connection&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.fd_;
    other.fd_ = -1;
  }
  return *this;
}

Connection Connection::connect_local(std::uint16_t port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) {
    throw_errno("socket failed");
  }
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
    const int saved = errno;
    ::close(fd);
    errno = saved;
    throw_errno("connect failed");
  }
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return Connection(fd);
}

void Connection::send(const RoundMessage& message) {
  if (!open()) {
    throw ProtocolError("send on closed connection");
  }
  const std::vector<std::uint8_t> frame = encode_message(message);
  write_all(fd_, frame.data(), frame.size());
}

RoundMessage Connection::recv() {
  if (!open()) {
    throw ProtocolError("recv on closed connection");
  }
  std::uint8_t header[kFrameHeaderSize];
  read_all(fd_, header, sizeof(header));
  const auto parsed = decode_header({header, sizeof(header)});
  if (const auto* err = std::get_if<DecodeError>(&parsed)) {
    throw ProtocolError("bad frame header (" + to_string(err->kind) + ")");
  }
  const FrameHeader info = std::get<FrameHeader>(parsed);
  if (info.payload_size > kMaxPayloadBytes) {
    throw ProtocolError("frame payload exceeds limit");
  }
  std::vector<std::uint8_t> frame(kFrameHeaderSize + info.payload_size);
  std::memcpy(frame.data(), header, kFrameHeaderSize);
  read_all(fd_, frame.data() + kFrameHeaderSize, info.payload_size);
  auto decoded = decode_message(frame);
  if (const auto* err = std::get_if<DecodeError>(&decoded)) {
    throw ProtocolError("bad frame (" + to_string(err->kind) + ")");
  }
  return std::move(std::get<RoundMessage>(decoded));
}

void Connection::close() noexcept {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

ServerSocket::ServerSocket() {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) {
    throw_errno("socket failed");
  }
  const int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = 0;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  if (::bind(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
    throw_errno("bind failed");
  }
  if (::listen(fd_, 64) != 0) {
    throw_errno("listen failed");
  }
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len) != 0) {
    throw_errno("getsockname failed");
  }
  port_ = ntohs(bound.sin_port);
}

ServerSocket::~ServerSocket() {
  if (fd_ >= 0) {
    ::close(fd_);
  }
}

Connection ServerSocket::accept_one() {
  while (true) {
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      throw_errno("accept failed");
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return Connection(fd);
  }
}

}  // namespace fedsentry

// Copyright 2026 The epir Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// TCP database server and client for the wire protocol. POSIX only. One
// synchronous request/response exchange at a time per connection; each
// connection gets its own thread.

#ifndef EPIR_SERVICE_HPP_
#define EPIR_SERVICE_HPP_

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "epir/core.hpp"
#include "epir/error.hpp"
#include "epir/mechanisms.hpp"
#include "epir/messages.hpp"
#include "epir/server.hpp"
#include "epir/wire.hpp"

namespace epir {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  std::string ToString() const { return host + ":" + std::to_string(port); }

  // "host:port"; host may be empty (all interfaces) when listening.
  static Endpoint Parse(const std::string& text) {
    const auto colon = text.rfind(':');
    if (colon == std::string::npos) throw ParameterError("endpoint '" + text + "' lacks ':port'");
    Endpoint ep;
    ep.host = text.substr(0, colon);
    const std::string port = text.substr(colon + 1);
    unsigned long value = 0;
    try {
      std::size_t used = 0;
      value = std::stoul(port, &used);
      if (used != port.size()) throw std::invalid_argument(port);
    } catch (const std::exception&) {
      throw ParameterError("endpoint '" + text + "' has a bad port");
    }
    if (value > 65535) throw ParameterError("endpoint '" + text + "' port out of range");
    ep.port = static_cast<std::uint16_t>(value);
    return ep;
  }
};

namespace internal {

// Owns a file descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  Socket& operator=(Socket&& other) noexcept {
    if (this != &other) {
      Close();
      fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { Close(); }

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  void Close() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

inline std::string ErrnoText() { return std::strerror(errno); }

// Reads until `len` bytes arrived or the peer closed; returns the count.
inline std::size_t ReadUpTo(int fd, std::uint8_t* buf, std::size_t len) {
  std::size_t got = 0;
  while (got < len) {
    const ssize_t r = ::recv(fd, buf + got, len - got, 0);
    if (r == 0) break;
    if (r < 0) {
      if (errno == EINTR) continue;
      throw TransportError("recv: " + ErrnoText());
    }
    got += static_cast<std::size_t>(r);
  }
  return got;
}

// Returns false on orderly EOF before any byte; throws on errors or EOF
// mid-buffer.
inline bool ReadExact(int fd, std::uint8_t* buf, std::size_t len) {
  const std::size_t got = ReadUpTo(fd, buf, len);
  if (got == 0 && len > 0) return false;
  if (got < len) throw TransportError("connection closed mid-frame");
  return true;
}

inline void WriteAll(int fd, std::span<const std::uint8_t> bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t r = ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (r < 0) {
      if (errno == EINTR) continue;
      throw TransportError("send: " + ErrnoText());
    }
    sent += static_cast<std::size_t>(r);
  }
}

inline void WriteFrame(int fd, const wire::Frame& frame) { WriteAll(fd, wire::encode_frame(frame)); }

inline sockaddr_in Resolve(const Endpoint& ep, bool passive) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(ep.port);
  if (ep.host.empty() || ep.host == "0.0.0.0") {
    addr.sin_addr.s_addr = passive ? htonl(INADDR_ANY) : htonl(INADDR_LOOPBACK);
    return addr;
  }
  if (::inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(ep.host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
    throw TransportError("cannot resolve host '" + ep.host + "'");
  }
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  ::freeaddrinfo(res);
  return addr;
}

}  // namespace internal

// Answers frames on one connection until the peer closes it. Header damage
// (magic, version, oversize length) cannot be resynchronized: the server
// replies with an Error frame and drops the connection. Payload problems and
// unknown message types get an Error frame and the connection stays open.
inline void serve_connection(const Database& db, int fd) {
  using wire::ErrorCode;
  std::uint8_t head[wire::kHeaderSize];
  while (true) {
    // A peer that half-closes mid-frame still gets told why.
    const std::size_t got = internal::ReadUpTo(fd, head, sizeof head);
    if (got == 0) return;
    if (got < sizeof head) {
      internal::WriteFrame(fd, wire::encode_error(ErrorCode::kMalformed, "truncated frame header"));
      return;
    }
    wire::Header h;
    try {
      h = wire::decode_header(std::span<const std::uint8_t>(head, sizeof head));
    } catch (const WireError& e) {
      const bool version = head[4] != wire::kVersion &&
                           std::equal(wire::kMagic.begin(), wire::kMagic.end(), head);
      internal::WriteFrame(fd, wire::encode_error(
                                   version ? ErrorCode::kBadVersion : ErrorCode::kMalformed, e.what()));
      return;
    }
    if (h.length > wire::kMaxPayload) {
      internal::WriteFrame(fd, wire::encode_error(ErrorCode::kTooLarge, "payload exceeds limit"));
      return;
    }
    wire::Frame frame{h.type, std::vector<std::uint8_t>(h.length)};
    if (internal::ReadUpTo(fd, frame.payload.data(), h.length) < h.length) {
      internal::WriteFrame(fd, wire::encode_error(ErrorCode::kMalformed, "truncated frame payload"));
      return;
    }
    wire::Frame reply;
    if (h.type != static_cast<std::uint8_t>(wire::MsgType::kFetchIndices) &&
        h.type != static_cast<std::uint8_t>(wire::MsgType::kXorSelect)) {
      reply = wire::encode_error(ErrorCode::kUnsupportedType,
                                 "unsupported message type " + std::to_string(h.type));
    } else {
      try {
        reply = wire::encode_response(handle(db, wire::decode_request(frame)));
      } catch (const WireError& e) {
        reply = wire::encode_error(ErrorCode::kMalformed, e.what());
      } catch (const RequestError& e) {
        reply = wire::encode_error(ErrorCode::kBadRequest, e.what());
      }
    }
    internal::WriteFrame(fd, reply);
  }
}

// Listening database server. Start() binds and returns once the socket
// accepts connections; Stop() (or destruction) closes every connection and
// joins all threads.
class DatabaseServer {
 public:
  explicit DatabaseServer(std::shared_ptr<const Database> db) : db_(std::move(db)) {
    if (!db_) throw ParameterError("DatabaseServer: null database");
  }
  DatabaseServer(const DatabaseServer&) = delete;
  DatabaseServer& operator=(const DatabaseServer&) = delete;
  ~DatabaseServer() { Stop(); }

  void Start(const Endpoint& listen) {
    if (running_) throw ContractError("DatabaseServer: already running");
    internal::Socket sock(::socket(AF_INET, SOCK_STREAM, 0));
    if (!sock.valid()) throw TransportError("socket: " + internal::ErrnoText());
    const int one = 1;
    ::setsockopt(sock.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr = internal::Resolve(listen, true);
    if (::bind(sock.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
      throw TransportError("bind " + listen.ToString() + ": " + internal::ErrnoText());
    }
    if (::listen(sock.fd(), 64) != 0) throw TransportError("listen: " + internal::ErrnoText());
    socklen_t len = sizeof addr;
    ::getsockname(sock.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    listener_ = std::move(sock);
    running_ = true;
    acceptor_ = std::thread([this] { AcceptLoop(); });
  }

  std::uint16_t port() const { return port_; }
  const Database& database() const { return *db_; }

  void Stop() {
    if (!running_.exchange(false)) return;
    ::shutdown(listener_.fd(), SHUT_RDWR);
    if (acceptor_.joinable()) acceptor_.join();
    listener_.Close();
    std::vector<std::thread> workers;
    {
      std::lock_guard<std::mutex> lock(mu_);
      for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
      workers = std::move(workers_);
    }
    for (auto& t : workers) t.join();
  }

 private:
  void AcceptLoop() {
    while (running_) {
      const int fd = ::accept(listener_.fd(), nullptr, nullptr);
      if (fd < 0) {
        if (errno == EINTR) continue;
        return;  // listener shut down
      }
      std::lock_guard<std::mutex> lock(mu_);
      if (!running_) {
        ::close(fd);
        return;
      }
      open_fds_.push_back(fd);
      workers_.emplace_back([this, fd] {
        try {
          serve_connection(*db_, fd);
        } catch (const Error&) {
          // Peer vanished or sent garbage; nothing to answer.
        }
        std::lock_guard<std::mutex> inner(mu_);
        std::erase(open_fds_, fd);
        ::close(fd);
      });
    }
  }

  std::shared_ptr<const Database> db_;
  internal::Socket listener_;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::thread acceptor_;
  std::mutex mu_;
  std::vector<int> open_fds_;
  std::vector<std::thread> workers_;
};

// Blocking client connection to one database server.
class Connection {
 public:
  explicit Connection(const Endpoint& ep, int timeout_seconds = 30) : endpoint_(ep) {
    sock_ = internal::Socket(::socket(AF_INET, SOCK_STREAM, 0));
    if (!sock_.valid()) throw TransportError("socket: " + internal::ErrnoText());
    timeval tv{timeout_seconds, 0};
    ::setsockopt(sock_.fd(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    ::setsockopt(sock_.fd(), SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
    const int one = 1;
    ::setsockopt(sock_.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    sockaddr_in addr = internal::Resolve(ep, false);
    if (::connect(sock_.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
      throw TransportError("connect " + ep.ToString() + ": " + internal::ErrnoText());
    }
  }

  // Sends raw bytes and reads one reply frame. Used by tests to probe the
  // server with malformed input.
  wire::Frame Exchange(std::span<const std::uint8_t> bytes) {
    internal::WriteAll(sock_.fd(), bytes);
    return ReadFrame();
  }

  wire::Frame ReadFrame() {
    std::uint8_t head[wire::kHeaderSize];
    if (!internal::ReadExact(sock_.fd(), head, sizeof head)) {
      throw TransportError("server " + endpoint_.ToString() + " closed the connection");
    }
    const wire::Header h = wire::decode_header(std::span<const std::uint8_t>(head, sizeof head));
    if (h.length > wire::kMaxPayload) throw WireError("reply payload exceeds limit");
    wire::Frame frame{h.type, std::vector<std::uint8_t>(h.length)};
    if (h.length > 0 && !internal::ReadExact(sock_.fd(), frame.payload.data(), h.length)) {
      throw TransportError("server " + endpoint_.ToString() + " closed the connection");
    }
    return frame;
  }

  ServerResponse Call(const ServerRequest& request, std::size_t record_bytes) {
    wire::Frame reply;
    try {
      reply = Exchange(wire::encode_frame(wire::encode_request(request)));
    } catch (const Error& e) {
      throw TransportError("server " + endpoint_.ToString() + ": " + e.what());
    }
    if (reply.type == static_cast<std::uint8_t>(wire::MsgType::kError)) {
      const auto err = wire::decode_error(reply);
      throw TransportError("server " + endpoint_.ToString() + " returned error " +
                           std::to_string(err.code) + ": " + err.message);
    }
    try {
      return wire::decode_response(reply, record_bytes);
    } catch (const WireError& e) {
      throw TransportError("server " + endpoint_.ToString() + ": " + e.what());
    }
  }

 private:
  Endpoint endpoint_;
  internal::Socket sock_;
};

// Runs a plan against live servers, endpoints[s] serving server s. Requests
// are sent directly; the anonymity channel is simulated in-process only.
// Nothing is returned unless every server answered.
inline Record remote_execute(const QueryPlan& plan, const std::vector<Endpoint>& endpoints,
                             std::size_t record_bytes) {
  std::vector<std::unique_ptr<Connection>> conns(endpoints.size());
  std::vector<ServerResponse> responses;
  responses.reserve(plan.dispatches.size());
  for (const Dispatch& dispatch : plan.dispatches) {
    if (dispatch.server >= endpoints.size()) {
      throw ParameterError("plan addresses server " + std::to_string(dispatch.server) +
                           " but only " + std::to_string(endpoints.size()) + " endpoints given");
    }
    auto& conn = conns[dispatch.server];
    if (!conn) {
      try {
        conn = std::make_unique<Connection>(endpoints[dispatch.server]);
      } catch (const TransportError& e) {
        throw TransportError("server " + std::to_string(dispatch.server) + " (" +
                             endpoints[dispatch.server].ToString() + "): " + e.what());
      }
    }
    try {
      responses.push_back(conn->Call(dispatch.request, record_bytes));
    } catch (const TransportError& e) {
      throw TransportError("server " + std::to_string(dispatch.server) + ": " + e.what());
    }
  }
  return reconstruct(plan, responses);
}

// Raw concatenation of n records; n = file size / (b/8).
inline Database load_records(const std::string& path, std::size_t record_size_bits) {
  if (record_size_bits == 0 || record_size_bits % 8 != 0) {
    throw ParameterError("record size must be a positive multiple of 8 bits");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParameterError("cannot open records file '" + path + "'");
  std::vector<std::uint8_t> blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return Database(record_size_bits / 8, std::move(blob));
}

}  // namespace epir

#endif  // EPIR_SERVICE_HPP_

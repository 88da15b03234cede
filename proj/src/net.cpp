// Copyright 2026 The qrfuzz Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qrfuzz/net.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "qrfuzz/dns.hpp"

namespace qrfuzz::net {

namespace {

constexpr std::size_t kMaxDatagram = 65535;

void set_timeout(int fd, double seconds) {
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(seconds);
  tv.tv_usec =
      static_cast<suseconds_t>((seconds - static_cast<double>(tv.tv_sec)) * 1e6);
  setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
}

sockaddr_in loopback_addr(std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  return addr;
}

std::uint16_t bind_ephemeral(int fd) {
  sockaddr_in addr = loopback_addr(0);
  if (bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    close(fd);
    throw NetError(std::string("bind: ") + std::strerror(errno));
  }
  socklen_t len = sizeof addr;
  if (getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
    close(fd);
    throw NetError(std::string("getsockname: ") + std::strerror(errno));
  }
  return ntohs(addr.sin_port);
}

// Reads exactly n octets from a stream socket; false on EOF/error/timeout.
bool read_exact(int fd, std::uint8_t* buf, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    ssize_t r = recv(fd, buf + got, n - got, 0);
    if (r <= 0) return false;
    got += static_cast<std::size_t>(r);
  }
  return true;
}

bool write_all(int fd, const std::uint8_t* buf, std::size_t n) {
  std::size_t sent = 0;
  while (sent < n) {
    ssize_t r = send(fd, buf + sent, n - sent, 0);
    if (r <= 0) return false;
    sent += static_cast<std::size_t>(r);
  }
  return true;
}

}  // namespace

UdpServer::~UdpServer() { stop(); }

void UdpServer::start(Handler handler) {
  if (running_) throw NetError("server already running");
  int fd = socket(AF_INET, SOCK_DGRAM, 0);
  if (fd < 0) throw NetError(std::string("socket: ") + std::strerror(errno));
  port_ = bind_ephemeral(fd);
  set_timeout(fd, 0.1);
  fd_ = fd;
  handler_ = std::move(handler);
  stopping_ = false;
  thread_ = std::thread([this] { loop(); });
  running_ = true;
}

void UdpServer::loop() {
  Bytes buf(kMaxDatagram);
  while (!stopping_) {
    sockaddr_in peer{};
    socklen_t peer_len = sizeof peer;
    ssize_t n = recvfrom(fd_, buf.data(), buf.size(), 0,
                         reinterpret_cast<sockaddr*>(&peer), &peer_len);
    if (n < 0) continue;  // timeout poll; re-check the stop flag
    Bytes request(buf.begin(), buf.begin() + n);
    Bytes reply = handler_(request);
    if (reply.empty()) continue;
    sendto(fd_, reply.data(), reply.size(), 0,
           reinterpret_cast<sockaddr*>(&peer), peer_len);
  }
}

void UdpServer::stop() {
  if (!running_) return;
  stopping_ = true;
  if (thread_.joinable()) thread_.join();
  close(fd_);
  fd_ = -1;
  running_ = false;
}

TcpServer::~TcpServer() { stop(); }

void TcpServer::start(Handler handler) {
  if (running_) throw NetError("server already running");
  int fd = socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw NetError(std::string("socket: ") + std::strerror(errno));
  int one = 1;
  setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  port_ = bind_ephemeral(fd);
  if (listen(fd, 8) != 0) {
    close(fd);
    throw NetError(std::string("listen: ") + std::strerror(errno));
  }
  set_timeout(fd, 0.1);
  fd_ = fd;
  handler_ = std::move(handler);
  stopping_ = false;
  thread_ = std::thread([this] { loop(); });
  running_ = true;
}

void TcpServer::loop() {
  while (!stopping_) {
    int conn = accept(fd_, nullptr, nullptr);
    if (conn < 0) continue;  // timeout poll; re-check the stop flag
    set_timeout(conn, 2.0);
    std::uint8_t len_buf[2];
    if (!read_exact(conn, len_buf, 2)) {
      close(conn);
      continue;
    }
    std::size_t len = (static_cast<std::size_t>(len_buf[0]) << 8) | len_buf[1];
    Bytes request(len);
    if (len > 0 && !read_exact(conn, request.data(), len)) {
      close(conn);
      continue;
    }
    Bytes reply = handler_(request);
    if (!reply.empty()) {
      Bytes framed = dns::frame_tcp(reply);
      write_all(conn, framed.data(), framed.size());
    }
    close(conn);
  }
}

void TcpServer::stop() {
  if (!running_) return;
  stopping_ = true;
  if (thread_.joinable()) thread_.join();
  close(fd_);
  fd_ = -1;
  running_ = false;
}

std::optional<Bytes> udp_exchange(const std::string& host, std::uint16_t port,
                                  const Bytes& payload,
                                  double timeout_seconds) {
  int fd = socket(AF_INET, SOCK_DGRAM, 0);
  if (fd < 0) return std::nullopt;
  set_timeout(fd, timeout_seconds);
  sockaddr_in addr = loopback_addr(port);
  if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    close(fd);
    return std::nullopt;
  }
  if (sendto(fd, payload.data(), payload.size(), 0,
             reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
    close(fd);
    return std::nullopt;
  }
  Bytes buf(kMaxDatagram);
  ssize_t n = recv(fd, buf.data(), buf.size(), 0);
  close(fd);
  if (n < 0) return std::nullopt;
  buf.resize(static_cast<std::size_t>(n));
  return buf;
}

std::optional<Bytes> tcp_exchange(const std::string& host, std::uint16_t port,
                                  const Bytes& payload,
                                  double timeout_seconds) {
  int fd = socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return std::nullopt;
  set_timeout(fd, timeout_seconds);
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(timeout_seconds);
  tv.tv_usec = static_cast<suseconds_t>(
      (timeout_seconds - static_cast<double>(tv.tv_sec)) * 1e6);
  setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
  sockaddr_in addr = loopback_addr(port);
  if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1 ||
      connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    close(fd);
    return std::nullopt;
  }
  Bytes framed = dns::frame_tcp(payload);
  if (!write_all(fd, framed.data(), framed.size())) {
    close(fd);
    return std::nullopt;
  }
  std::uint8_t len_buf[2];
  if (!read_exact(fd, len_buf, 2)) {
    close(fd);
    return std::nullopt;
  }
  std::size_t len = (static_cast<std::size_t>(len_buf[0]) << 8) | len_buf[1];
  Bytes reply(len);
  if (len > 0 && !read_exact(fd, reply.data(), len)) {
    close(fd);
    return std::nullopt;
  }
  close(fd);
  return reply;
}

}  // namespace qrfuzz::net

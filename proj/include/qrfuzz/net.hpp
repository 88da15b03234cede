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

// Loopback UDP and TCP DNS transport: handler-driven servers on ephemeral
// ports and one-shot exchange clients with timeouts. TCP messages use the
// standard two-octet length framing.

#ifndef QRFUZZ_NET_HPP_
#define QRFUZZ_NET_HPP_

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>

#include "qrfuzz/common.hpp"

namespace qrfuzz::net {

class NetError : public std::runtime_error {
 public:
  explicit NetError(const std::string& what) : std::runtime_error(what) {}
};

// Returning an empty payload suppresses the response (simulates a drop).
using Handler = std::function<Bytes(const Bytes&)>;

class UdpServer {
 public:
  UdpServer() = default;
  ~UdpServer();
  UdpServer(const UdpServer&) = delete;
  UdpServer& operator=(const UdpServer&) = delete;

  // Binds 127.0.0.1 on an ephemeral port and serves on a background
  // thread. Throws NetError on socket failure.
  void start(Handler handler);
  void stop();  // idempotent
  std::uint16_t port() const { return port_; }
  bool running() const { return running_; }

 private:
  void loop();

  int fd_ = -1;
  std::uint16_t port_ = 0;
  Handler handler_;
  std::thread thread_;
  std::atomic<bool> stopping_{false};
  bool running_ = false;
};

// One connection at a time; each connection carries one framed request and
// one framed response.
class TcpServer {
 public:
  TcpServer() = default;
  ~TcpServer();
  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  void start(Handler handler);
  void stop();
  std::uint16_t port() const { return port_; }
  bool running() const { return running_; }

 private:
  void loop();

  int fd_ = -1;
  std::uint16_t port_ = 0;
  Handler handler_;
  std::thread thread_;
  std::atomic<bool> stopping_{false};
  bool running_ = false;
};

// Send one datagram / framed message and await the reply. nullopt on
// timeout or network error.
std::optional<Bytes> udp_exchange(const std::string& host, std::uint16_t port,
                                  const Bytes& payload,
                                  double timeout_seconds);
std::optional<Bytes> tcp_exchange(const std::string& host, std::uint16_t port,
                                  const Bytes& payload,
                                  double timeout_seconds);

}  // namespace qrfuzz::net

#endif  // QRFUZZ_NET_HPP_

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

// Campaign orchestration: resolver adapters (in-process reference, mock,
// external command), the armed attacker server, the localized nameserver
// hierarchy on real loopback sockets, and the parallel unit runner that
// turns generated cases into trace records.

#ifndef QRFUZZ_HARNESS_HPP_
#define QRFUZZ_HARNESS_HPP_

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "qrfuzz/dns.hpp"
#include "qrfuzz/gen.hpp"
#include "qrfuzz/net.hpp"
#include "qrfuzz/reference_resolver.hpp"
#include "qrfuzz/trace.hpp"
#include "qrfuzz/zone.hpp"

namespace qrfuzz::harness {

struct AdapterCapabilities {
  bool cache_dump = true;
  bool log_access = true;
};

// Behavioral contract every resolver under test satisfies. reset() must
// return the resolver to an empty-cache state; a dead resolver is revived.
class ResolverAdapter {
 public:
  virtual ~ResolverAdapter() = default;
  virtual std::string name() const = 0;
  virtual AdapterCapabilities capabilities() const = 0;
  virtual void start() = 0;
  virtual void reset() = 0;
  virtual bool alive() = 0;
  // Drives one client query; appends packet events to the journal
  // (timestamps relative to the call). nullopt = no answer within timeout.
  virtual std::optional<Bytes> query(const Bytes& wire,
                                     double timeout_seconds,
                                     std::vector<trace::PacketEvent>& journal) = 0;
  virtual std::optional<std::string> dump_cache() = 0;
  virtual std::string dump_format() const = 0;  // bind|unbound|powerdns|technitium|unified
  virtual std::vector<std::string> fetch_logs() = 0;  // drains the buffer
};

bool check_liveness(ResolverAdapter& adapter);

// Composes the attacker answer for one resolver-query: the template's
// flags/count/record octets around the txid and Question echoed from the
// query. An undecodable query echoes raw octets 0-1 (zero-padded) as the
// txid and carries no Question. Templates are emitted verbatim — count
// fields are not repaired to match the record octets.
Bytes serve_response(const gen::ResponseTemplate& tmpl,
                     const Bytes& resolver_query);

// Dump-format dispatch ("unified" is the reference resolver's JSON form).
// nullopt when the format is unknown or the text fails to parse.
std::optional<trace::UnifiedCache> parse_cache_dump(const std::string& format,
                                                    const std::string& text);

// Hierarchy identity -> loopback UDP port.
using RoutingTable = std::map<std::string, std::uint16_t>;

// One UDP server per zone identity, all answering via localized_ns_answer.
// Zones are immutable, so one hierarchy is shared by every unit.
class LocalizedHierarchy {
 public:
  explicit LocalizedHierarchy(zone::ZoneConfig zones);
  ~LocalizedHierarchy();
  void start();
  void stop();
  RoutingTable routing() const;
  const zone::ZoneConfig& zones() const { return zones_; }

 private:
  zone::ZoneConfig zones_;
  std::vector<std::unique_ptr<net::UdpServer>> servers_;
};

// Per-unit UDP server answering every query from the armed template.
class AttackerServer {
 public:
  AttackerServer() = default;
  ~AttackerServer();
  void start();
  void stop();
  std::uint16_t port() const;
  void arm(std::shared_ptr<const gen::ResponseTemplate> tmpl);

 private:
  net::UdpServer server_;
  std::mutex mutex_;
  std::shared_ptr<const gen::ResponseTemplate> template_;
};

// In-process reference resolver behind the adapter contract. Upstream
// exchanges go over real UDP through the routing table and are journaled
// as resolver<->ns packet events.
class ReferenceResolverAdapter : public ResolverAdapter {
 public:
  ReferenceResolverAdapter(std::string name,
                           refres::ReferenceResolver::Config config,
                           RoutingTable routing,
                           double upstream_timeout_seconds = 1.0);

  std::string name() const override { return name_; }
  AdapterCapabilities capabilities() const override { return {true, true}; }
  void start() override;
  void reset() override;
  bool alive() override;
  std::optional<Bytes> query(const Bytes& wire, double timeout_seconds,
                             std::vector<trace::PacketEvent>& journal) override;
  std::optional<std::string> dump_cache() override;
  std::string dump_format() const override { return "unified"; }
  std::vector<std::string> fetch_logs() override;

 private:
  std::string name_;
  refres::ReferenceResolver::Config config_;
  RoutingTable routing_;
  double upstream_timeout_;
  std::unique_ptr<refres::ReferenceResolver> resolver_;
  std::vector<trace::PacketEvent>* journal_ = nullptr;
  std::chrono::steady_clock::time_point case_start_;
};

// Scriptable stand-in for throughput and failure-path tests.
struct MockConfig {
  double latency_seconds = 0.002;  // slept on every query
  bool no_answer = false;          // never answers (timeout path)
  bool die_on_query = false;       // liveness drops after the first query
  bool cache_dump = true;
};

class MockAdapter : public ResolverAdapter {
 public:
  MockAdapter(std::string name, MockConfig config);

  std::string name() const override { return name_; }
  AdapterCapabilities capabilities() const override;
  void start() override;
  void reset() override;
  bool alive() override;
  std::optional<Bytes> query(const Bytes& wire, double timeout_seconds,
                             std::vector<trace::PacketEvent>& journal) override;
  std::optional<std::string> dump_cache() override;
  std::string dump_format() const override { return "unified"; }
  std::vector<std::string> fetch_logs() override;

  std::size_t reset_count() const { return reset_count_; }
  std::size_t query_count() const { return query_count_; }

 private:
  std::string name_;
  MockConfig config_;
  bool alive_ = true;
  std::size_t reset_count_ = 0;
  std::size_t query_count_ = 0;
};

// External resolver driven by shell commands; "{unit}" in any command or
// the query endpoint is replaced by the unit index so parallel units can
// address distinct ports/containers.
struct CommandSpec {
  std::string name;
  std::string query_host = "127.0.0.1";
  std::uint16_t query_port = 0;
  std::string start_cmd;
  std::string reset_cmd;
  std::string liveness_cmd;  // exit 0 = alive
  std::string dump_cmd;      // stdout = dump text
  std::string logs_cmd;      // stdout lines = log events
  std::string dump_format = "unified";
  AdapterCapabilities caps;
};

std::string substitute_unit(const std::string& text, std::size_t unit_id);

struct CommandResult {
  int exit_code = -1;
  std::string output;
};
CommandResult run_command(const std::string& command);

class CommandAdapter : public ResolverAdapter {
 public:
  CommandAdapter(CommandSpec spec, std::size_t unit_id);

  std::string name() const override { return spec_.name; }
  AdapterCapabilities capabilities() const override { return spec_.caps; }
  void start() override;
  void reset() override;
  bool alive() override;
  std::optional<Bytes> query(const Bytes& wire, double timeout_seconds,
                             std::vector<trace::PacketEvent>& journal) override;
  std::optional<std::string> dump_cache() override;
  std::string dump_format() const override { return spec_.dump_format; }
  std::vector<std::string> fetch_logs() override;

 private:
  CommandSpec spec_;  // commands already unit-substituted
};

struct CampaignConfig {
  gen::Mode mode = gen::Mode::kRecursiveOnly;
  std::size_t unit_count = 25;
  std::uint64_t case_count = 0;
  double timeout_seconds = 5.0;
  dns::DnsName base_domain;  // default: gen::default_base_domain(mode)
  std::uint64_t seed = 0;
  std::size_t sequence_length = 1;  // cases per round between resets
};

// What a unit gets to build its adapters: the shared hierarchy routes plus
// its own attacker server entry (empty when the campaign runs networkless).
struct UnitEnv {
  std::size_t unit_id = 0;
  RoutingTable routing;
};

using AdapterFactory =
    std::function<std::vector<std::unique_ptr<ResolverAdapter>>(const UnitEnv&)>;

struct CampaignResult {
  std::vector<gen::TestCase> cases;        // sorted by case id
  std::vector<trace::TraceRecord> traces;  // sorted by (case id, adapter)
  std::size_t failed_units = 0;
  double wall_seconds = 0;
};

// Units pull rounds of sequence_length cases from a shared counter: arm
// the attacker, query every adapter in order, collect dump/logs/traffic/
// liveness per case, then reset all adapters at the round boundary. A unit
// whose adapters fail to start is marked failed; the rest continue. Pass
// zones=nullptr to skip the hierarchy/attacker sockets (mock-only runs).
CampaignResult run_campaign(const CampaignConfig& config,
                            const zone::ZoneConfig* zones,
                            const AdapterFactory& factory);

}  // namespace qrfuzz::harness

#endif  // QRFUZZ_HARNESS_HPP_

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

#include "qrfuzz/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <sstream>
#include <thread>

#include <sys/wait.h>

namespace qrfuzz::harness {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

}  // namespace

bool check_liveness(ResolverAdapter& adapter) { return adapter.alive(); }

Bytes serve_response(const gen::ResponseTemplate& tmpl,
                     const Bytes& resolver_query) {
  Bytes out;
  std::uint16_t txid = 0;
  if (!resolver_query.empty()) {
    txid = static_cast<std::uint16_t>(resolver_query[0] << 8);
  }
  if (resolver_query.size() >= 2) {
    txid = static_cast<std::uint16_t>(txid | resolver_query[1]);
  }
  out.push_back(static_cast<std::uint8_t>(txid >> 8));
  out.push_back(static_cast<std::uint8_t>(txid & 0xff));
  out.insert(out.end(), tmpl.flags_bytes.begin(), tmpl.flags_bytes.end());

  dns::DecodeResult decoded = dns::decode_message(resolver_query);
  std::uint16_t qdcount = 0;
  if (decoded.ok()) {
    qdcount = static_cast<std::uint16_t>(decoded.message->questions.size());
  }
  out.push_back(static_cast<std::uint8_t>(qdcount >> 8));
  out.push_back(static_cast<std::uint8_t>(qdcount & 0xff));
  out.insert(out.end(), tmpl.ancount_bytes.begin(), tmpl.ancount_bytes.end());
  out.insert(out.end(), tmpl.nscount_bytes.begin(), tmpl.nscount_bytes.end());
  out.insert(out.end(), tmpl.arcount_bytes.begin(), tmpl.arcount_bytes.end());
  if (decoded.ok()) {
    for (const auto& q : decoded.message->questions) {
      Bytes enc = dns::encode_question(q);
      out.insert(out.end(), enc.begin(), enc.end());
    }
  }
  out.insert(out.end(), tmpl.section_bytes.begin(), tmpl.section_bytes.end());
  return out;
}

std::optional<trace::UnifiedCache> parse_cache_dump(const std::string& format,
                                                    const std::string& text) {
  try {
    if (format == "bind") return trace::parse_bind_cache(text);
    if (format == "unbound") return trace::parse_unbound_cache(text).records;
    if (format == "powerdns") return trace::parse_powerdns_cache(text);
    if (format == "technitium") return trace::parse_technitium_cache(text);
    if (format == "unified") {
      return trace::cache_from_json(nlohmann::ordered_json::parse(text));
    }
  } catch (...) {
    return std::nullopt;
  }
  return std::nullopt;
}

LocalizedHierarchy::LocalizedHierarchy(zone::ZoneConfig zones)
    : zones_(std::move(zones)) {}

LocalizedHierarchy::~LocalizedHierarchy() { stop(); }

void LocalizedHierarchy::start() {
  if (!servers_.empty()) return;
  for (const auto& z : zones_.zones) {
    auto server = std::make_unique<net::UdpServer>();
    const zone::Zone* zp = &z;
    server->start([zp](const Bytes& wire) -> Bytes {
      dns::DecodeResult decoded = dns::decode_message(wire);
      if (!decoded.ok()) return {};
      return dns::encode_message(
          zone::localized_ns_answer(*decoded.message, *zp));
    });
    servers_.push_back(std::move(server));
  }
}

void LocalizedHierarchy::stop() {
  for (auto& s : servers_) s->stop();
  servers_.clear();
}

RoutingTable LocalizedHierarchy::routing() const {
  RoutingTable table;
  for (std::size_t i = 0; i < servers_.size(); ++i) {
    table[zones_.zones[i].identity] = servers_[i]->port();
  }
  return table;
}

AttackerServer::~AttackerServer() { stop(); }

void AttackerServer::start() {
  server_.start([this](const Bytes& wire) -> Bytes {
    std::shared_ptr<const gen::ResponseTemplate> tmpl;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      tmpl = template_;
    }
    if (!tmpl) return {};
    return serve_response(*tmpl, wire);
  });
}

void AttackerServer::stop() { server_.stop(); }

std::uint16_t AttackerServer::port() const { return server_.port(); }

void AttackerServer::arm(std::shared_ptr<const gen::ResponseTemplate> tmpl) {
  std::lock_guard<std::mutex> lock(mutex_);
  template_ = std::move(tmpl);
}

ReferenceResolverAdapter::ReferenceResolverAdapter(
    std::string name, refres::ReferenceResolver::Config config,
    RoutingTable routing, double upstream_timeout_seconds)
    : name_(std::move(name)),
      config_(std::move(config)),
      routing_(std::move(routing)),
      upstream_timeout_(upstream_timeout_seconds) {}

void ReferenceResolverAdapter::start() {
  auto transport = [this](const std::string& identity,
                          const Bytes& wire) -> std::optional<Bytes> {
    if (journal_) {
      journal_->push_back(
          {seconds_since(case_start_), "resolver", "ns:" + identity,
           wire.size()});
    }
    auto it = routing_.find(identity);
    if (it == routing_.end()) return std::nullopt;
    auto reply =
        net::udp_exchange("127.0.0.1", it->second, wire, upstream_timeout_);
    if (reply && journal_) {
      journal_->push_back(
          {seconds_since(case_start_), "ns:" + identity, "resolver",
           reply->size()});
    }
    return reply;
  };
  resolver_ = std::make_unique<refres::ReferenceResolver>(config_, transport);
}

void ReferenceResolverAdapter::reset() {
  if (resolver_) resolver_->restart();
}

bool ReferenceResolverAdapter::alive() {
  return resolver_ && resolver_->alive();
}

std::optional<Bytes> ReferenceResolverAdapter::query(
    const Bytes& wire, double timeout_seconds,
    std::vector<trace::PacketEvent>& journal) {
  (void)timeout_seconds;  // in-process: the resolver cannot outlive its call
  if (!resolver_) return std::nullopt;
  case_start_ = std::chrono::steady_clock::now();
  journal_ = &journal;
  journal.push_back({0.0, "client", "resolver", wire.size()});
  Bytes answer = resolver_->handle_client_query(wire);
  journal_ = nullptr;
  if (answer.empty()) return std::nullopt;
  journal.push_back(
      {seconds_since(case_start_), "resolver", "client", answer.size()});
  return answer;
}

std::optional<std::string> ReferenceResolverAdapter::dump_cache() {
  if (!resolver_) return std::nullopt;
  return trace::cache_to_json(resolver_->unified_cache()).dump();
}

std::vector<std::string> ReferenceResolverAdapter::fetch_logs() {
  if (!resolver_) return {};
  return resolver_->drain_logs();
}

MockAdapter::MockAdapter(std::string name, MockConfig config)
    : name_(std::move(name)), config_(config) {}

AdapterCapabilities MockAdapter::capabilities() const {
  return {config_.cache_dump, true};
}

void MockAdapter::start() {}

void MockAdapter::reset() {
  ++reset_count_;
  alive_ = true;
}

bool MockAdapter::alive() { return alive_; }

std::optional<Bytes> MockAdapter::query(
    const Bytes& wire, double timeout_seconds,
    std::vector<trace::PacketEvent>& journal) {
  (void)timeout_seconds;
  ++query_count_;
  journal.push_back({0.0, "client", "resolver", wire.size()});
  if (config_.latency_seconds > 0) {
    std::this_thread::sleep_for(
        std::chrono::duration<double>(config_.latency_seconds));
  }
  if (config_.die_on_query) {
    alive_ = false;
    return std::nullopt;
  }
  if (config_.no_answer) return std::nullopt;

  dns::DnsMessage reply;
  dns::DecodeResult decoded = dns::decode_message(wire);
  if (decoded.ok()) {
    reply.txid = decoded.message->txid;
    reply.questions = decoded.message->questions;
    reply.qdcount = static_cast<std::uint16_t>(reply.questions.size());
  }
  reply.flags.qr = 1;
  Bytes answer = dns::encode_message(reply);
  journal.push_back(
      {config_.latency_seconds, "resolver", "client", answer.size()});
  return answer;
}

std::optional<std::string> MockAdapter::dump_cache() {
  if (!config_.cache_dump) return std::nullopt;
  return trace::cache_to_json({}).dump();
}

std::vector<std::string> MockAdapter::fetch_logs() { return {}; }

std::string substitute_unit(const std::string& text, std::size_t unit_id) {
  std::string out = text;
  const std::string token = "{unit}";
  const std::string value = std::to_string(unit_id);
  std::size_t at = 0;
  while ((at = out.find(token, at)) != std::string::npos) {
    out.replace(at, token.size(), value);
    at += value.size();
  }
  return out;
}

CommandResult run_command(const std::string& command) {
  CommandResult result;
  FILE* pipe = popen(command.c_str(), "r");
  if (!pipe) return result;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) {
    result.output.append(buf, n);
  }
  int status = pclose(pipe);
  if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
  return result;
}

CommandAdapter::CommandAdapter(CommandSpec spec, std::size_t unit_id)
    : spec_(std::move(spec)) {
  spec_.query_host = substitute_unit(spec_.query_host, unit_id);
  spec_.start_cmd = substitute_unit(spec_.start_cmd, unit_id);
  spec_.reset_cmd = substitute_unit(spec_.reset_cmd, unit_id);
  spec_.liveness_cmd = substitute_unit(spec_.liveness_cmd, unit_id);
  spec_.dump_cmd = substitute_unit(spec_.dump_cmd, unit_id);
  spec_.logs_cmd = substitute_unit(spec_.logs_cmd, unit_id);
}

void CommandAdapter::start() {
  if (spec_.start_cmd.empty()) return;
  CommandResult r = run_command(spec_.start_cmd);
  if (r.exit_code != 0) {
    throw net::NetError("start command failed (" +
                        std::to_string(r.exit_code) + "): " + spec_.start_cmd);
  }
}

void CommandAdapter::reset() {
  if (!spec_.reset_cmd.empty()) run_command(spec_.reset_cmd);
}

bool CommandAdapter::alive() {
  if (spec_.liveness_cmd.empty()) return true;
  return run_command(spec_.liveness_cmd).exit_code == 0;
}

std::optional<Bytes> CommandAdapter::query(
    const Bytes& wire, double timeout_seconds,
    std::vector<trace::PacketEvent>& journal) {
  auto start = std::chrono::steady_clock::now();
  journal.push_back({0.0, "client", "resolver", wire.size()});
  auto reply =
      net::udp_exchange(spec_.query_host, spec_.query_port, wire,
                        timeout_seconds);
  if (!reply) return std::nullopt;
  journal.push_back(
      {seconds_since(start), "resolver", "client", reply->size()});
  return reply;
}

std::optional<std::string> CommandAdapter::dump_cache() {
  if (!spec_.caps.cache_dump || spec_.dump_cmd.empty()) return std::nullopt;
  CommandResult r = run_command(spec_.dump_cmd);
  if (r.exit_code != 0) return std::nullopt;
  return r.output;
}

std::vector<std::string> CommandAdapter::fetch_logs() {
  std::vector<std::string> lines;
  if (!spec_.caps.log_access || spec_.logs_cmd.empty()) return lines;
  CommandResult r = run_command(spec_.logs_cmd);
  std::istringstream stream(r.output);
  std::string line;
  while (std::getline(stream, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

CampaignResult run_campaign(const CampaignConfig& config,
                            const zone::ZoneConfig* zones,
                            const AdapterFactory& factory) {
  auto t0 = std::chrono::steady_clock::now();
  CampaignResult result;

  dns::DnsName base = config.base_domain.is_root()
                          ? gen::default_base_domain(config.mode)
                          : config.base_domain;
  gen::Generator generator(base);

  std::optional<LocalizedHierarchy> hierarchy;
  RoutingTable shared_routes;
  if (zones) {
    hierarchy.emplace(*zones);
    hierarchy->start();
    shared_routes = hierarchy->routing();
  }

  const std::size_t seq_len = std::max<std::size_t>(1, config.sequence_length);
  const std::uint64_t round_total =
      (config.case_count + seq_len - 1) / seq_len;
  std::atomic<std::uint64_t> next_round{0};
  std::atomic<std::size_t> failed_units{0};
  std::mutex merge_mutex;

  auto unit_main = [&](std::size_t unit_id) {
    std::vector<gen::TestCase> local_cases;
    std::vector<trace::TraceRecord> local_traces;

    std::optional<AttackerServer> attacker;
    std::vector<std::unique_ptr<ResolverAdapter>> adapters;
    try {
      RoutingTable routes = shared_routes;
      if (zones) {
        attacker.emplace();
        attacker->start();
        routes[zone::kAttackerIdentity] = attacker->port();
      }
      adapters = factory(UnitEnv{unit_id, std::move(routes)});
      for (auto& adapter : adapters) adapter->start();
    } catch (...) {
      failed_units.fetch_add(1);
      return;
    }

    while (true) {
      std::uint64_t round = next_round.fetch_add(1);
      if (round >= round_total) break;
      std::uint64_t first = round * seq_len;
      std::uint64_t last =
          std::min<std::uint64_t>(config.case_count, first + seq_len);
      for (std::uint64_t id = first; id < last; ++id) {
        gen::TestCase test_case = generator.generate_case(config.seed, id);
        if (attacker) {
          attacker->arm(std::make_shared<const gen::ResponseTemplate>(
              test_case.response));
        }
        for (auto& adapter : adapters) {
          std::vector<trace::PacketEvent> journal;
          auto answer = adapter->query(test_case.query_wire,
                                       config.timeout_seconds, journal);
          trace::TraceRecord record;
          record.case_id = id;
          record.adapter = adapter->name();
          record.alive = adapter->alive();
          if (answer) record.response_hex = to_hex(*answer);
          AdapterCapabilities caps = adapter->capabilities();
          record.cache_present = false;
          if (caps.cache_dump) {
            if (auto dump = adapter->dump_cache()) {
              if (auto cache =
                      parse_cache_dump(adapter->dump_format(), *dump)) {
                record.cache = std::move(*cache);
                record.cache_present = true;
              }
            }
          }
          if (caps.log_access) record.log_events = adapter->fetch_logs();
          record.traffic =
              trace::summarize_traffic(journal, config.timeout_seconds);
          local_traces.push_back(std::move(record));
        }
        local_cases.push_back(std::move(test_case));
      }
      for (auto& adapter : adapters) adapter->reset();
    }

    std::lock_guard<std::mutex> lock(merge_mutex);
    for (auto& c : local_cases) result.cases.push_back(std::move(c));
    for (auto& t : local_traces) result.traces.push_back(std::move(t));
  };

  std::vector<std::thread> threads;
  const std::size_t unit_count = std::max<std::size_t>(1, config.unit_count);
  threads.reserve(unit_count);
  for (std::size_t u = 0; u < unit_count; ++u) {
    threads.emplace_back(unit_main, u);
  }
  for (auto& t : threads) t.join();

  std::sort(result.cases.begin(), result.cases.end(),
            [](const gen::TestCase& a, const gen::TestCase& b) {
              return a.id < b.id;
            });
  std::stable_sort(result.traces.begin(), result.traces.end(),
                   [](const trace::TraceRecord& a, const trace::TraceRecord& b) {
                     return a.case_id < b.case_id;
                   });
  result.failed_units = failed_units.load();
  result.wall_seconds = seconds_since(t0);
  return result;
}

}  // namespace qrfuzz::harness

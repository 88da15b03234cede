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

// Trace normalization: cache dumps from different resolver families are
// parsed into one record shape, log lines are matched against ordered
// event rules, and per-case traffic is reduced to a fixed summary. The
// normalized forms are what the oracles compare across implementations.

#ifndef QRFUZZ_TRACE_HPP_
#define QRFUZZ_TRACE_HPP_

#include <nlohmann/json.hpp>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qrfuzz/common.hpp"
#include "qrfuzz/dns.hpp"

namespace qrfuzz::trace {

// One cache entry in the unified shape: owner name lowercased and fully
// qualified, numeric class/type codes, rdata in collapsed presentation
// form (single spaces, parentheses and line breaks folded away).
struct UnifiedRecord {
  std::string name;
  std::uint16_t rclass = dns::rrclass::kIn;
  std::uint16_t type = 0;
  std::uint32_t ttl = 0;
  std::string rdata;

  friend bool operator==(const UnifiedRecord&, const UnifiedRecord&) = default;
};

using UnifiedCache = std::vector<UnifiedRecord>;

// Owner-grouped JSON: {"<owner>": [{"name":...,"class":"IN","type":"NS",
// "ttl":"518399","rdata":...}, ...], ...}. Owners appear in first-seen
// order; records keep their order within an owner. Class and type render
// as mnemonics, ttl as a decimal string.
nlohmann::ordered_json cache_to_json(const UnifiedCache& cache);
UnifiedCache cache_from_json(const nlohmann::ordered_json& j);

// BIND master-style dump: '$'-directives and ';'-comments skipped, a line
// with leading whitespace inherits the previous owner, a missing class
// reads as IN, '('-continued rdata is joined, "(truncated)" lines are
// diagnostics, and everything from the address-database section on is
// dropped.
UnifiedCache parse_bind_cache(const std::string& text);

// Unbound dump: records live between START_RRSET_CACHE/END_RRSET_CACHE;
// ";rrset" headers and ';'-comments are stripped, indented lines continue
// the previous record's rdata. The message cache is only counted.
struct UnboundCache {
  UnifiedCache records;
  std::size_t msg_cache_entries = 0;
};
UnboundCache parse_unbound_cache(const std::string& text);

// Record-cache section of a dump in "name ttl remaining IN TYPE rdata ;
// meta" form; the first ttl column is kept. The negative-cache and packet
// -cache sections are excluded.
UnifiedCache parse_powerdns_cache(const std::string& text);

// Strict JSON dump: {"<owner>": [{"name","type","ttl":"172800 (2 days)",
// "rData":{...}}]}. The leading integer of ttl is kept; rdata comes from
// the type's value field inside rData, with host names fully qualified.
// Throws nlohmann::json::exception on malformed JSON.
UnifiedCache parse_technitium_cache(const std::string& json_text);

// Ordered log-event extraction: each line is tested against the rules in
// order and the first matching rule's label is appended (ECMAScript
// regex, searched anywhere in the line).
struct LogEventRule {
  std::string label;
  std::string pattern;
};
std::vector<std::string> match_log_events(const std::string& log_text,
                                          const std::vector<LogEventRule>& rules);

// One captured datagram. Endpoint tags are free-form ("client",
// "resolver", "ns:10.53.0.2", ...); only "client" and "resolver" carry
// meaning for the summary.
struct PacketEvent {
  double timestamp = 0;  // seconds from case start
  std::string src;
  std::string dst;
  std::size_t size = 0;

  friend bool operator==(const PacketEvent&, const PacketEvent&) = default;
};

struct TrafficSummary {
  std::size_t resolver_query_count = 0;     // resolver -> upstream packets
  std::size_t max_response_size = 0;        // largest response either way
  std::size_t bytes_resolver_to_client = 0;
  std::size_t bytes_ns_to_resolver = 0;
  double resolution_time = 0;               // client query to last client answer
  bool timed_out = false;                   // no client answer: time = timeout

  friend bool operator==(const TrafficSummary&, const TrafficSummary&) = default;
};

TrafficSummary summarize_traffic(const std::vector<PacketEvent>& packets,
                                 double timeout_seconds);

// One case's normalized observation for one resolver under test.
struct TraceRecord {
  std::uint64_t case_id = 0;
  std::string adapter;
  bool alive = true;
  bool cache_present = true;  // false: adapter cannot dump (cache oracle skips)
  UnifiedCache cache;
  std::optional<std::string> response_hex;  // client answer; absent on timeout
  std::vector<std::string> log_events;
  TrafficSummary traffic;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

nlohmann::ordered_json trace_to_json(const TraceRecord& t);
TraceRecord trace_from_json(const nlohmann::ordered_json& j);

}  // namespace qrfuzz::trace

#endif  // QRFUZZ_TRACE_HPP_

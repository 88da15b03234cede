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

// A minimal in-process resolver with an inspectable cache, used as the
// deterministic stand-in for resolver products. It supports the four
// operating modes, sanitizes upstream records before caching, writes
// CACHE_LOOKUP / QUERY / SANITIZE_RECORD log lines, and can be given
// deliberate misbehaviors ("quirks") that reproduce known bug classes.

#ifndef QRFUZZ_REFERENCE_RESOLVER_HPP_
#define QRFUZZ_REFERENCE_RESOLVER_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qrfuzz/dns.hpp"
#include "qrfuzz/gen.hpp"
#include "qrfuzz/trace.hpp"
#include "qrfuzz/zone.hpp"

namespace qrfuzz::refres {

struct Quirks {
  bool accept_out_of_bailiwick = false;  // skip the bailiwick check only
  bool cache_unsolicited = false;        // answer records need not match qname
  bool ignore_rd_flag = false;           // resolve even when rd=0
  bool crash_on_pattern = false;         // die on 0x40 after the header
};

// The crash quirk's trigger: a 0x40 octet anywhere past the 12-octet
// header. Generated query bodies are lowercase alphanumeric, so only byte
// mutation can produce it.
bool query_triggers_crash(const Bytes& client_query_wire);

enum class Section { kAnswer, kAuthority, kAdditional };

// Caching policy for one upstream record, applied in this order:
//   1. section filter — authority allows NS/SOA, additional allows A/AAAA,
//      answer allows any type;
//   2. class must be IN;
//   3. answer records must be solicited (name == qname) unless the
//      cache_unsolicited quirk is set;
//   4. rdata must parse for the types zone::rdata_to_text parses strictly
//      (other types cache as hex);
//   5. name must be under-or-equal the bailiwick unless the
//      accept_out_of_bailiwick quirk is set.
struct SanitizeDecision {
  bool cache = false;
  std::string reason;      // empty when cacheable
  std::string rdata_text;  // canonical text when cacheable
};
SanitizeDecision sanitize_record(const dns::ResourceRecord& record,
                                 Section section, const dns::DnsName& qname,
                                 const dns::DnsName& bailiwick,
                                 const Quirks& quirks);

struct CacheEntry {
  dns::DnsName name;
  std::uint16_t rclass = dns::rrclass::kIn;
  std::uint16_t type = 0;
  std::uint32_t ttl = 0;
  Bytes rdata;
  std::string rdata_text;
};

// Sends wire octets to the upstream named by a hierarchy identity and
// returns the response; nullopt on timeout/unreachable.
using Transport =
    std::function<std::optional<Bytes>(const std::string& identity,
                                       const Bytes& wire)>;

class ReferenceResolver {
 public:
  struct Config {
    gen::Mode mode = gen::Mode::kRecursiveOnly;
    dns::DnsName base_domain;  // forwarding zone = forward-mode bailiwick
    std::string root_identity = zone::kRootIdentity;
    std::string forwarder_identity = zone::kAttackerIdentity;
    Quirks quirks;
    int max_hops = 16;
  };

  ReferenceResolver(Config config, Transport transport);

  // Full client round: decode, resolve per mode, cache, answer. An empty
  // result means no answer was sent (the resolver is or just became dead).
  Bytes handle_client_query(const Bytes& wire);

  bool alive() const { return alive_; }
  void flush();    // cache + logs cleared; liveness unchanged
  void restart();  // flush and revive

  const std::vector<CacheEntry>& cache() const { return cache_; }
  trace::UnifiedCache unified_cache() const;
  std::vector<std::string> drain_logs();

 private:
  struct Outcome {
    std::uint8_t rcode = 0;
  };

  void log(const std::string& line);
  void cache_response(const dns::DnsMessage& response,
                      const dns::DnsName& qname,
                      const dns::DnsName& bailiwick);
  std::optional<dns::DnsMessage> exchange(const std::string& identity,
                                          const dns::Question& question,
                                          bool rd);
  Outcome resolve_forward(const dns::Question& question);
  Outcome resolve_recursive(const dns::Question& question);
  Bytes answer_client(const dns::DnsMessage& query,
                      const dns::Question& question, std::uint8_t rcode);

  Config config_;
  Transport transport_;
  bool alive_ = true;
  std::uint16_t next_txid_ = 1;
  std::vector<CacheEntry> cache_;
  std::vector<std::string> logs_;
};

}  // namespace qrfuzz::refres

#endif  // QRFUZZ_REFERENCE_RESOLVER_HPP_

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

// Authoritative zone data for the localized nameserver hierarchy: a zone
// file parser, rdata text <-> wire conversion for the common types, the
// default root/TLD/SLD topology, and the answer function every hierarchy
// identity serves.

#ifndef QRFUZZ_ZONE_HPP_
#define QRFUZZ_ZONE_HPP_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qrfuzz/dns.hpp"

namespace qrfuzz::zone {

class ZoneError : public std::runtime_error {
 public:
  explicit ZoneError(const std::string& what) : std::runtime_error(what) {}
};

struct ZoneRecord {
  dns::DnsName name;
  std::uint16_t rclass = dns::rrclass::kIn;
  std::uint16_t type = 0;
  std::uint32_t ttl = 0;
  Bytes rdata;  // wire form, never compressed

  friend bool operator==(const ZoneRecord&, const ZoneRecord&) = default;
};

// One authoritative zone bound to a listening identity (the logical server
// address glue records point at, e.g. "10.53.0.3").
struct Zone {
  dns::DnsName origin;
  std::string identity;
  std::vector<ZoneRecord> records;
};

struct ZoneConfig {
  std::vector<Zone> zones;

  const Zone* find_identity(const std::string& identity) const;
  // Deepest origin that is an ancestor-or-equal of name, or nullptr.
  const Zone* most_specific(const dns::DnsName& name) const;
};

// Default listening identities for the localized hierarchy.
inline constexpr const char* kRootIdentity = "10.53.0.1";
inline constexpr const char* kTldIdentity = "10.53.0.2";
inline constexpr const char* kSldIdentity = "10.53.0.3";
inline constexpr const char* kAttackerIdentity = "10.53.0.9";

// Text <-> wire rdata for A, AAAA, NS, CNAME, PTR, MX, TXT, SOA, SRV.
// encode qualifies relative names in rdata against `origin` and throws
// ZoneError on unsupported types or malformed text. rdata_to_text returns
// nullopt when the octets do not parse as the type's wire shape; types
// outside the list render as a hex string (never nullopt).
Bytes encode_rdata_text(std::uint16_t type, const std::string& text,
                             const dns::DnsName& origin);
std::optional<std::string> rdata_to_text(std::uint16_t type,
                                         const Bytes& rdata);

// Master-file subset: $ORIGIN and $TTL directives, ';' comments, '@' for
// the origin, relative names qualified against the origin, leading
// whitespace inheriting the previous owner, an optional ttl column, an
// optional IN class token, and parenthesized rdata spanning lines.
// Throws ZoneError with a line number on malformed input.
Zone parse_zone_text(const std::string& text, const dns::DnsName& origin,
                     const std::string& identity);

// Root -> TLD -> SLD chain for the SLD `base` (e.g. "example.com."): the
// root delegates base's TLD, the TLD delegates base, and the SLD zone
// delegates test-recursive/test-fwd/test-cdns under base via
// "NS ns.<base>" whose glue A record carries the attacker identity.
ZoneConfig default_zone_config(const dns::DnsName& base);

// Closed-world delegation check: every NS target of a delegation must have
// a glue A record in the config. Returns human-readable diagnostics; empty
// means valid.
std::vector<std::string> validate_zone_config(const ZoneConfig& cfg);

// The answer every hierarchy identity serves. Authoritative data at the
// queried name answers with aa=1; a delegation below the apex returns a
// referral (authority NS + glue A additionals, aa=0); an in-zone miss is
// NXDOMAIN with the zone's SOA; a query outside the zone is REFUSED.
dns::DnsMessage localized_ns_answer(const dns::DnsMessage& query,
                                    const Zone& zone);
// Dispatch on the identity the query arrived at.
dns::DnsMessage localized_ns_answer(const dns::DnsMessage& query,
                                    const ZoneConfig& zones,
                                    const std::string& identity);

}  // namespace qrfuzz::zone

#endif  // QRFUZZ_ZONE_HPP_

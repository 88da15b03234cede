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

#include "qrfuzz/zone.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <sstream>

namespace qrfuzz::zone {

namespace {

void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

void put_u32(Bytes& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

std::uint16_t get_u16(const Bytes& b, std::size_t at) {
  return static_cast<std::uint16_t>((b[at] << 8) | b[at + 1]);
}

std::uint32_t get_u32(const Bytes& b, std::size_t at) {
  return (static_cast<std::uint32_t>(b[at]) << 24) |
         (static_cast<std::uint32_t>(b[at + 1]) << 16) |
         (static_cast<std::uint32_t>(b[at + 2]) << 8) |
         static_cast<std::uint32_t>(b[at + 3]);
}

// Uncompressed name straight out of rdata octets; nullopt on malformation.
std::optional<dns::DnsName> read_plain_name(const Bytes& b, std::size_t& at) {
  std::vector<Bytes> labels;
  std::size_t pos = at;
  while (true) {
    if (pos >= b.size()) return std::nullopt;
    std::uint8_t len = b[pos++];
    if (len == 0) break;
    if (len > 63 || pos + len > b.size()) return std::nullopt;
    labels.emplace_back(b.begin() + pos, b.begin() + pos + len);
    pos += len;
  }
  try {
    dns::DnsName name = dns::DnsName::from_labels(std::move(labels));
    at = pos;
    return name;
  } catch (const dns::EncodeError&) {
    return std::nullopt;
  }
}

dns::DnsName qualify(const std::string& text, const dns::DnsName& origin) {
  if (text == "@") return origin;
  if (!text.empty() && text.back() == '.') return dns::DnsName::from_text(text);
  dns::DnsName name = origin;
  dns::DnsName rel = dns::DnsName::from_text(text + ".");
  const auto& labels = rel.labels();
  for (auto it = labels.rbegin(); it != labels.rend(); ++it) {
    name = name.with_prefix_label(*it);
  }
  return name;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string current;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
      current.push_back(c);
      continue;
    }
    if (!quoted && (c == ' ' || c == '\t')) {
      if (!current.empty()) {
        out.push_back(current);
        current.clear();
      }
      continue;
    }
    current.push_back(c);
  }
  if (!current.empty()) out.push_back(current);
  return out;
}

std::string join_from(const std::vector<std::string>& fields,
                      std::size_t start) {
  std::string out;
  for (std::size_t i = start; i < fields.size(); ++i) {
    if (!out.empty()) out.push_back(' ');
    out += fields[i];
  }
  return out;
}

}  // namespace

Bytes encode_rdata_text(std::uint16_t type, const std::string& text,
                             const dns::DnsName& origin) {
  Bytes out;
  auto fields = split_fields(text);
  auto need = [&](std::size_t n) {
    if (fields.size() != n) {
      throw ZoneError("rdata '" + text + "' needs " + std::to_string(n) +
                      " fields for " + dns::type_name(type));
    }
  };
  switch (type) {
    case dns::rrtype::kA: {
      need(1);
      in_addr addr{};
      if (inet_pton(AF_INET, fields[0].c_str(), &addr) != 1) {
        throw ZoneError("bad IPv4 address: " + fields[0]);
      }
      const auto* p = reinterpret_cast<const std::uint8_t*>(&addr);
      out.assign(p, p + 4);
      return out;
    }
    case dns::rrtype::kAaaa: {
      need(1);
      in6_addr addr{};
      if (inet_pton(AF_INET6, fields[0].c_str(), &addr) != 1) {
        throw ZoneError("bad IPv6 address: " + fields[0]);
      }
      const auto* p = reinterpret_cast<const std::uint8_t*>(&addr);
      out.assign(p, p + 16);
      return out;
    }
    case dns::rrtype::kNs:
    case dns::rrtype::kCname:
    case dns::rrtype::kPtr: {
      need(1);
      return dns::encode_name(qualify(fields[0], origin));
    }
    case dns::rrtype::kMx: {
      need(2);
      put_u16(out, static_cast<std::uint16_t>(std::stoul(fields[0])));
      Bytes name = dns::encode_name(qualify(fields[1], origin));
      out.insert(out.end(), name.begin(), name.end());
      return out;
    }
    case dns::rrtype::kTxt: {
      if (fields.empty()) throw ZoneError("TXT rdata needs text");
      for (const auto& field : fields) {
        std::string chunk = field;
        if (chunk.size() >= 2 && chunk.front() == '"' && chunk.back() == '"') {
          chunk = chunk.substr(1, chunk.size() - 2);
        }
        if (chunk.size() > 255) throw ZoneError("TXT chunk over 255 octets");
        out.push_back(static_cast<std::uint8_t>(chunk.size()));
        out.insert(out.end(), chunk.begin(), chunk.end());
      }
      return out;
    }
    case dns::rrtype::kSoa: {
      need(7);
      Bytes mname = dns::encode_name(qualify(fields[0], origin));
      Bytes rname = dns::encode_name(qualify(fields[1], origin));
      out.insert(out.end(), mname.begin(), mname.end());
      out.insert(out.end(), rname.begin(), rname.end());
      for (int i = 2; i < 7; ++i) {
        put_u32(out, static_cast<std::uint32_t>(std::stoul(fields[i])));
      }
      return out;
    }
    case dns::rrtype::kSrv: {
      need(4);
      for (int i = 0; i < 3; ++i) {
        put_u16(out, static_cast<std::uint16_t>(std::stoul(fields[i])));
      }
      Bytes name = dns::encode_name(qualify(fields[3], origin));
      out.insert(out.end(), name.begin(), name.end());
      return out;
    }
    default:
      throw ZoneError("unsupported rdata type " + dns::type_name(type));
  }
}

std::optional<std::string> rdata_to_text(std::uint16_t type,
                                         const Bytes& rdata) {
  switch (type) {
    case dns::rrtype::kA: {
      if (rdata.size() != 4) return std::nullopt;
      char buf[INET_ADDRSTRLEN];
      in_addr addr;
      std::memcpy(&addr, rdata.data(), 4);
      if (!inet_ntop(AF_INET, &addr, buf, sizeof buf)) return std::nullopt;
      return std::string(buf);
    }
    case dns::rrtype::kAaaa: {
      if (rdata.size() != 16) return std::nullopt;
      char buf[INET6_ADDRSTRLEN];
      in6_addr addr;
      std::memcpy(&addr, rdata.data(), 16);
      if (!inet_ntop(AF_INET6, &addr, buf, sizeof buf)) return std::nullopt;
      return std::string(buf);
    }
    case dns::rrtype::kNs:
    case dns::rrtype::kCname:
    case dns::rrtype::kPtr: {
      std::size_t at = 0;
      auto name = read_plain_name(rdata, at);
      if (!name || at != rdata.size()) return std::nullopt;
      return name->to_canonical_text();
    }
    case dns::rrtype::kMx: {
      if (rdata.size() < 3) return std::nullopt;
      std::size_t at = 2;
      auto name = read_plain_name(rdata, at);
      if (!name || at != rdata.size()) return std::nullopt;
      return std::to_string(get_u16(rdata, 0)) + " " +
             name->to_canonical_text();
    }
    case dns::rrtype::kTxt: {
      if (rdata.empty()) return std::nullopt;
      std::string text;
      std::size_t at = 0;
      while (at < rdata.size()) {
        std::uint8_t len = rdata[at++];
        if (at + len > rdata.size()) return std::nullopt;
        if (!text.empty()) text.push_back(' ');
        text.push_back('"');
        text.append(rdata.begin() + at, rdata.begin() + at + len);
        text.push_back('"');
        at += len;
      }
      return text;
    }
    case dns::rrtype::kSoa: {
      std::size_t at = 0;
      auto mname = read_plain_name(rdata, at);
      if (!mname) return std::nullopt;
      auto rname = read_plain_name(rdata, at);
      if (!rname || at + 20 != rdata.size()) return std::nullopt;
      std::ostringstream out;
      out << mname->to_canonical_text() << ' ' << rname->to_canonical_text();
      for (int i = 0; i < 5; ++i) {
        out << ' ' << get_u32(rdata, at + 4 * static_cast<std::size_t>(i));
      }
      return out.str();
    }
    case dns::rrtype::kSrv: {
      if (rdata.size() < 7) return std::nullopt;
      std::size_t at = 6;
      auto name = read_plain_name(rdata, at);
      if (!name || at != rdata.size()) return std::nullopt;
      std::ostringstream out;
      out << get_u16(rdata, 0) << ' ' << get_u16(rdata, 2) << ' '
          << get_u16(rdata, 4) << ' ' << name->to_canonical_text();
      return out.str();
    }
    default:
      return to_hex(rdata);
  }
}

const Zone* ZoneConfig::find_identity(const std::string& identity) const {
  for (const auto& z : zones) {
    if (z.identity == identity) return &z;
  }
  return nullptr;
}

const Zone* ZoneConfig::most_specific(const dns::DnsName& name) const {
  const Zone* best = nullptr;
  for (const auto& z : zones) {
    if (!name.under_or_equal(z.origin)) continue;
    if (!best || z.origin.label_count() > best->origin.label_count()) {
      best = &z;
    }
  }
  return best;
}

Zone parse_zone_text(const std::string& text, const dns::DnsName& origin,
                     const std::string& identity) {
  Zone zone;
  zone.origin = origin;
  zone.identity = identity;

  dns::DnsName current_origin = origin;
  std::uint32_t default_ttl = 86400;
  std::optional<dns::DnsName> last_owner;

  std::istringstream stream(text);
  std::string raw;
  std::size_t line_no = 0;
  std::string pending;
  std::size_t pending_line = 0;
  int open_parens = 0;

  auto fail = [](std::size_t line, const std::string& what) -> ZoneError {
    return ZoneError("line " + std::to_string(line) + ": " + what);
  };

  while (std::getline(stream, raw)) {
    ++line_no;
    while (!raw.empty() && raw.back() == '\r') raw.pop_back();
    auto semi = raw.find(';');
    if (semi != std::string::npos) raw = raw.substr(0, semi);
    if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;

    for (char c : raw) {
      if (c == '(') ++open_parens;
      if (c == ')') --open_parens;
    }
    if (open_parens < 0) throw fail(line_no, "unbalanced ')'");
    if (pending.empty()) pending_line = line_no;
    pending += raw;
    pending.push_back(' ');
    if (open_parens > 0) continue;

    std::string line;
    for (char c : pending) line.push_back(c == '(' || c == ')' ? ' ' : c);
    bool continued_owner = pending[0] == ' ' || pending[0] == '\t';
    pending.clear();

    auto fields = split_fields(line);
    if (fields.empty()) continue;

    if (fields[0] == "$ORIGIN") {
      if (fields.size() != 2) throw fail(pending_line, "$ORIGIN needs a name");
      current_origin = qualify(fields[1], current_origin);
      continue;
    }
    if (fields[0] == "$TTL") {
      if (fields.size() != 2) throw fail(pending_line, "$TTL needs a value");
      default_ttl = static_cast<std::uint32_t>(std::stoul(fields[1]));
      continue;
    }
    if (fields[0][0] == '$') {
      throw fail(pending_line, "unknown directive " + fields[0]);
    }

    std::size_t at = 0;
    dns::DnsName owner;
    if (continued_owner) {
      if (!last_owner) throw fail(pending_line, "no previous owner to inherit");
      owner = *last_owner;
    } else {
      try {
        owner = qualify(fields[at], current_origin);
      } catch (const dns::EncodeError& e) {
        throw fail(pending_line, std::string("bad owner name: ") + e.what());
      }
      ++at;
    }
    last_owner = owner;

    std::uint32_t ttl = default_ttl;
    if (at < fields.size() &&
        fields[at].find_first_not_of("0123456789") == std::string::npos) {
      ttl = static_cast<std::uint32_t>(std::stoul(fields[at]));
      ++at;
    }
    if (at < fields.size() && fields[at] == "IN") ++at;
    if (at >= fields.size()) throw fail(pending_line, "missing record type");

    auto type = dns::type_code(fields[at]);
    if (!type) throw fail(pending_line, "unknown type " + fields[at]);
    ++at;
    if (at >= fields.size()) throw fail(pending_line, "missing rdata");

    ZoneRecord record;
    record.name = owner;
    record.type = *type;
    record.ttl = ttl;
    try {
      record.rdata =
          encode_rdata_text(*type, join_from(fields, at), current_origin);
    } catch (const ZoneError& e) {
      throw fail(pending_line, e.what());
    }
    zone.records.push_back(std::move(record));
  }
  if (open_parens > 0) throw fail(pending_line, "unterminated '('");
  return zone;
}

namespace {

ZoneRecord make_record(const std::string& name, std::uint16_t type,
                       std::uint32_t ttl, const std::string& rdata_text) {
  ZoneRecord r;
  r.name = dns::DnsName::from_text(name);
  r.type = type;
  r.ttl = ttl;
  r.rdata = encode_rdata_text(type, rdata_text, dns::DnsName());
  return r;
}

}  // namespace

ZoneConfig default_zone_config(const dns::DnsName& base) {
  const std::string sld = base.to_canonical_text();
  const dns::DnsName tld_name = base.parent();
  const std::string tld = tld_name.to_canonical_text();

  ZoneConfig cfg;

  Zone root;
  root.origin = dns::DnsName();
  root.identity = kRootIdentity;
  root.records = {
      make_record(".", dns::rrtype::kSoa, 86400,
                  "ns. admin. 1 3600 900 604800 86400"),
      make_record(".", dns::rrtype::kNs, 518400, "ns."),
      make_record("ns.", dns::rrtype::kA, 518400, kRootIdentity),
      make_record(tld, dns::rrtype::kNs, 172800, "ns." + tld),
      make_record("ns." + tld, dns::rrtype::kA, 172800, kTldIdentity),
  };
  cfg.zones.push_back(std::move(root));

  Zone tld_zone;
  tld_zone.origin = tld_name;
  tld_zone.identity = kTldIdentity;
  tld_zone.records = {
      make_record(tld, dns::rrtype::kSoa, 86400,
                  "ns." + tld + " admin." + tld + " 1 3600 900 604800 86400"),
      make_record(tld, dns::rrtype::kNs, 172800, "ns." + tld),
      make_record("ns." + tld, dns::rrtype::kA, 172800, kTldIdentity),
      make_record(sld, dns::rrtype::kNs, 86400, "ns1." + sld),
      make_record("ns1." + sld, dns::rrtype::kA, 86400, kSldIdentity),
  };
  cfg.zones.push_back(std::move(tld_zone));

  Zone sld_zone;
  sld_zone.origin = base;
  sld_zone.identity = kSldIdentity;
  sld_zone.records = {
      make_record(sld, dns::rrtype::kSoa, 86400,
                  "ns1." + sld + " admin." + sld + " 1 3600 900 604800 86400"),
      make_record(sld, dns::rrtype::kNs, 86400, "ns1." + sld),
      make_record("ns1." + sld, dns::rrtype::kA, 86400, kSldIdentity),
      make_record("ns." + sld, dns::rrtype::kA, 86400, kAttackerIdentity),
      make_record("www." + sld, dns::rrtype::kA, 86400, "10.53.0.80"),
  };
  for (const char* sub : {"test-recursive.", "test-fwd.", "test-cdns."}) {
    sld_zone.records.push_back(
        make_record(sub + sld, dns::rrtype::kNs, 86400, "ns." + sld));
  }
  cfg.zones.push_back(std::move(sld_zone));
  return cfg;
}

std::vector<std::string> validate_zone_config(const ZoneConfig& cfg) {
  std::vector<std::string> diagnostics;
  auto has_glue = [&](const dns::DnsName& target) {
    for (const auto& z : cfg.zones) {
      for (const auto& r : z.records) {
        if (r.type == dns::rrtype::kA && r.name == target) return true;
      }
    }
    return false;
  };
  for (const auto& z : cfg.zones) {
    for (const auto& r : z.records) {
      if (r.type != dns::rrtype::kNs) continue;
      std::size_t at = 0;
      auto target = read_plain_name(r.rdata, at);
      if (!target) {
        diagnostics.push_back("zone " + z.origin.to_canonical_text() +
                              ": unparseable NS rdata at " +
                              r.name.to_canonical_text());
        continue;
      }
      if (!has_glue(*target)) {
        diagnostics.push_back("delegation " + r.name.to_canonical_text() +
                              " NS " + target->to_canonical_text() +
                              " has no glue A record");
      }
    }
  }
  return diagnostics;
}

namespace {

dns::ResourceRecord to_rr(const ZoneRecord& zr) {
  return dns::ResourceRecord::make(zr.name, zr.type, zr.rclass, zr.ttl,
                                   zr.rdata);
}

}  // namespace

dns::DnsMessage localized_ns_answer(const dns::DnsMessage& query,
                                    const Zone& zone) {
  dns::DnsMessage reply;
  reply.txid = query.txid;
  reply.flags.qr = 1;
  reply.flags.opcode = query.flags.opcode;
  reply.flags.rd = query.flags.rd;

  if (query.questions.empty()) {
    reply.flags.rcode = 1;  // FORMERR
    return reply;
  }
  const dns::Question& q = query.questions.front();
  reply.questions.push_back(q);
  reply.qdcount = 1;

  auto finish = [&reply]() -> dns::DnsMessage& {
    reply.ancount = static_cast<std::uint16_t>(reply.answers.size());
    reply.nscount = static_cast<std::uint16_t>(reply.authorities.size());
    reply.arcount = static_cast<std::uint16_t>(reply.additionals.size());
    return reply;
  };

  if (!q.qname.under_or_equal(zone.origin)) {
    reply.flags.rcode = 5;  // REFUSED
    return finish();
  }

  // Deepest delegation cut strictly below the apex covering qname.
  const dns::DnsName* cut = nullptr;
  for (const auto& r : zone.records) {
    if (r.type != dns::rrtype::kNs || r.name == zone.origin) continue;
    if (!q.qname.under_or_equal(r.name)) continue;
    if (!cut || r.name.label_count() > cut->label_count()) cut = &r.name;
  }
  if (cut) {
    reply.flags.aa = 0;
    std::vector<dns::DnsName> targets;
    for (const auto& r : zone.records) {
      if (r.type == dns::rrtype::kNs && r.name == *cut) {
        reply.authorities.push_back(to_rr(r));
        std::size_t at = 0;
        if (auto target = read_plain_name(r.rdata, at)) {
          targets.push_back(*target);
        }
      }
    }
    for (const auto& target : targets) {
      for (const auto& r : zone.records) {
        if (r.name == target && (r.type == dns::rrtype::kA ||
                                 r.type == dns::rrtype::kAaaa)) {
          reply.additionals.push_back(to_rr(r));
        }
      }
    }
    return finish();
  }

  reply.flags.aa = 1;
  bool name_exists = false;
  for (const auto& r : zone.records) {
    if (r.name != q.qname) continue;
    name_exists = true;
    bool wanted = q.qtype == dns::rrtype::kAny || r.type == q.qtype ||
                  (r.type == dns::rrtype::kCname && q.qtype != dns::rrtype::kCname);
    if (wanted) reply.answers.push_back(to_rr(r));
  }
  if (!reply.answers.empty()) return finish();

  // NODATA or NXDOMAIN: the zone's SOA in the authority section.
  for (const auto& r : zone.records) {
    if (r.name == zone.origin && r.type == dns::rrtype::kSoa) {
      reply.authorities.push_back(to_rr(r));
      break;
    }
  }
  if (!name_exists) reply.flags.rcode = 3;  // NXDOMAIN
  return finish();
}

dns::DnsMessage localized_ns_answer(const dns::DnsMessage& query,
                                    const ZoneConfig& zones,
                                    const std::string& identity) {
  const Zone* zone = zones.find_identity(identity);
  if (!zone) {
    dns::DnsMessage reply;
    reply.txid = query.txid;
    reply.flags.qr = 1;
    reply.flags.rcode = 5;
    if (!query.questions.empty()) {
      reply.questions.push_back(query.questions.front());
      reply.qdcount = 1;
    }
    return reply;
  }
  return localized_ns_answer(query, *zone);
}

}  // namespace qrfuzz::zone

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

#include "qrfuzz/reference_resolver.hpp"

#include <algorithm>
#include <cstdio>

namespace qrfuzz::refres {

namespace {

constexpr std::uint8_t kNoError = 0;
constexpr std::uint8_t kServFail = 2;

bool strict_rdata_type(std::uint16_t type) {
  switch (type) {
    case dns::rrtype::kA:
    case dns::rrtype::kAaaa:
    case dns::rrtype::kNs:
    case dns::rrtype::kCname:
    case dns::rrtype::kPtr:
    case dns::rrtype::kMx:
    case dns::rrtype::kTxt:
    case dns::rrtype::kSoa:
    case dns::rrtype::kSrv:
      return true;
    default:
      return false;
  }
}

// Uncompressed name from rdata octets; nullopt when malformed.
std::optional<dns::DnsName> rdata_name(const Bytes& rdata) {
  std::vector<Bytes> labels;
  std::size_t pos = 0;
  while (true) {
    if (pos >= rdata.size()) return std::nullopt;
    std::uint8_t len = rdata[pos++];
    if (len == 0) break;
    if (len > 63 || pos + len > rdata.size()) return std::nullopt;
    labels.emplace_back(rdata.begin() + pos, rdata.begin() + pos + len);
    pos += len;
  }
  if (pos != rdata.size()) return std::nullopt;
  try {
    return dns::DnsName::from_labels(std::move(labels));
  } catch (const dns::EncodeError&) {
    return std::nullopt;
  }
}

std::string dotted_quad(const Bytes& rdata) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%u.%u.%u.%u", rdata[0], rdata[1], rdata[2],
                rdata[3]);
  return buf;
}

}  // namespace

bool query_triggers_crash(const Bytes& client_query_wire) {
  for (std::size_t i = 12; i < client_query_wire.size(); ++i) {
    if (client_query_wire[i] == 0x40) return true;
  }
  return false;
}

SanitizeDecision sanitize_record(const dns::ResourceRecord& record,
                                 Section section, const dns::DnsName& qname,
                                 const dns::DnsName& bailiwick,
                                 const Quirks& quirks) {
  SanitizeDecision decision;
  if (section == Section::kAuthority && record.type != dns::rrtype::kNs &&
      record.type != dns::rrtype::kSoa) {
    decision.reason = "section-type";
    return decision;
  }
  if (section == Section::kAdditional && record.type != dns::rrtype::kA &&
      record.type != dns::rrtype::kAaaa) {
    decision.reason = "section-type";
    return decision;
  }
  if (record.rclass != dns::rrclass::kIn) {
    decision.reason = "bad-class";
    return decision;
  }
  if (section == Section::kAnswer && !quirks.cache_unsolicited &&
      !(record.name == qname)) {
    decision.reason = "unsolicited";
    return decision;
  }
  auto text = zone::rdata_to_text(record.type, record.rdata);
  if (strict_rdata_type(record.type) && !text) {
    decision.reason = "bad-rdata";
    return decision;
  }
  if (!quirks.accept_out_of_bailiwick &&
      !record.name.under_or_equal(bailiwick)) {
    decision.reason = "out-of-bailiwick";
    return decision;
  }
  decision.cache = true;
  decision.rdata_text = text ? *text : to_hex(record.rdata);
  return decision;
}

ReferenceResolver::ReferenceResolver(Config config, Transport transport)
    : config_(std::move(config)), transport_(std::move(transport)) {}

void ReferenceResolver::log(const std::string& line) { logs_.push_back(line); }

void ReferenceResolver::flush() {
  cache_.clear();
  logs_.clear();
}

void ReferenceResolver::restart() {
  flush();
  alive_ = true;
}

std::vector<std::string> ReferenceResolver::drain_logs() {
  std::vector<std::string> out;
  out.swap(logs_);
  return out;
}

trace::UnifiedCache ReferenceResolver::unified_cache() const {
  trace::UnifiedCache out;
  out.reserve(cache_.size());
  for (const auto& entry : cache_) {
    trace::UnifiedRecord r;
    r.name = entry.name.to_canonical_text();
    r.rclass = entry.rclass;
    r.type = entry.type;
    r.ttl = entry.ttl;
    r.rdata = entry.rdata_text;
    out.push_back(std::move(r));
  }
  return out;
}

void ReferenceResolver::cache_response(const dns::DnsMessage& response,
                                       const dns::DnsName& qname,
                                       const dns::DnsName& bailiwick) {
  auto consider = [&](const dns::ResourceRecord& record, Section section) {
    SanitizeDecision d =
        sanitize_record(record, section, qname, bailiwick, config_.quirks);
    log("SANITIZE_RECORD name=" + record.name.to_canonical_text() +
        " type=" + dns::type_name(record.type) +
        " action=" + (d.cache ? "cache" : "drop") +
        " reason=" + (d.cache ? "-" : d.reason));
    if (!d.cache) return;
    for (auto& existing : cache_) {
      if (existing.type == record.type && existing.rdata == record.rdata &&
          existing.name == record.name) {
        existing.ttl = record.ttl;
        return;
      }
    }
    CacheEntry entry;
    entry.name = record.name;
    entry.rclass = record.rclass;
    entry.type = record.type;
    entry.ttl = record.ttl;
    entry.rdata = record.rdata;
    entry.rdata_text = d.rdata_text;
    cache_.push_back(std::move(entry));
  };
  for (const auto& r : response.answers) consider(r, Section::kAnswer);
  for (const auto& r : response.authorities) consider(r, Section::kAuthority);
  for (const auto& r : response.additionals) consider(r, Section::kAdditional);
}

std::optional<dns::DnsMessage> ReferenceResolver::exchange(
    const std::string& identity, const dns::Question& question, bool rd) {
  dns::DnsMessage query;
  query.txid = next_txid_++;
  query.flags.rd = rd ? 1 : 0;
  query.qdcount = 1;
  query.questions.push_back(question);
  log("QUERY identity=" + identity +
      " name=" + question.qname.to_canonical_text() +
      " type=" + dns::type_name(question.qtype));
  auto reply_wire = transport_(identity, dns::encode_message(query));
  if (!reply_wire) return std::nullopt;
  dns::DecodeResult decoded = dns::decode_message(*reply_wire);
  if (!decoded.ok()) return std::nullopt;
  return *decoded.message;
}

ReferenceResolver::Outcome ReferenceResolver::resolve_forward(
    const dns::Question& question) {
  auto reply = exchange(config_.forwarder_identity, question, true);
  if (!reply) return Outcome{kServFail};
  cache_response(*reply, question.qname, config_.base_domain);
  return Outcome{static_cast<std::uint8_t>(reply->flags.rcode)};
}

ReferenceResolver::Outcome ReferenceResolver::resolve_recursive(
    const dns::Question& question) {
  std::string identity = config_.root_identity;
  dns::DnsName bailiwick;  // root
  for (int hop = 0; hop < config_.max_hops; ++hop) {
    auto reply = exchange(identity, question, false);
    if (!reply) return Outcome{kServFail};
    cache_response(*reply, question.qname, bailiwick);
    if (reply->flags.rcode != 0) {
      return Outcome{static_cast<std::uint8_t>(reply->flags.rcode)};
    }
    bool answered = false;
    for (const auto& r : reply->answers) {
      if (r.rclass != dns::rrclass::kIn) continue;
      if (!(r.name == question.qname)) continue;
      if (r.type == question.qtype || r.type == dns::rrtype::kCname ||
          question.qtype == dns::rrtype::kAny) {
        answered = true;
        break;
      }
    }
    if (answered) return Outcome{kNoError};

    // Referral: deepest in-bailiwick delegation cut that covers qname and
    // strictly deepens. The bailiwick quirk never loosens this walk; it
    // changes caching policy only.
    const dns::DnsName* cut = nullptr;
    for (const auto& r : reply->authorities) {
      if (r.type != dns::rrtype::kNs || r.rclass != dns::rrclass::kIn) {
        continue;
      }
      if (!question.qname.under_or_equal(r.name)) continue;
      if (!r.name.under_or_equal(bailiwick)) continue;
      if (r.name.label_count() <= bailiwick.label_count()) continue;
      if (!cut || r.name.label_count() > cut->label_count()) cut = &r.name;
    }
    if (!cut) return Outcome{kServFail};

    std::optional<std::string> next_identity;
    for (const auto& ns : reply->authorities) {
      if (ns.type != dns::rrtype::kNs || !(ns.name == *cut)) continue;
      auto target = rdata_name(ns.rdata);
      if (!target) continue;
      for (const auto& glue : reply->additionals) {
        if (glue.type == dns::rrtype::kA && glue.rclass == dns::rrclass::kIn &&
            glue.name == *target && glue.rdata.size() == 4) {
          next_identity = dotted_quad(glue.rdata);
          break;
        }
      }
      if (next_identity) break;
    }
    if (!next_identity) return Outcome{kServFail};
    bailiwick = *cut;
    identity = *next_identity;
  }
  return Outcome{kServFail};
}

Bytes ReferenceResolver::answer_client(const dns::DnsMessage& query,
                                       const dns::Question& question,
                                       std::uint8_t rcode) {
  dns::DnsMessage reply;
  reply.txid = query.txid;
  reply.flags.qr = 1;
  reply.flags.opcode = query.flags.opcode;
  reply.flags.rd = query.flags.rd;
  reply.flags.ra = 1;
  reply.flags.rcode = rcode & 0x0f;
  reply.qdcount = 1;
  reply.questions.push_back(question);

  // Answer from cache: records at qname of the queried type, following a
  // CNAME chain when the type itself is absent.
  dns::DnsName current = question.qname;
  for (int depth = 0; depth < 8; ++depth) {
    bool direct = false;
    for (const auto& entry : cache_) {
      if (!(entry.name == current)) continue;
      if (entry.type == question.qtype ||
          question.qtype == dns::rrtype::kAny) {
        reply.answers.push_back(dns::ResourceRecord::make(
            entry.name, entry.type, entry.rclass, entry.ttl, entry.rdata));
        direct = true;
      }
    }
    if (direct || question.qtype == dns::rrtype::kCname) break;
    const CacheEntry* cname = nullptr;
    for (const auto& entry : cache_) {
      if (entry.name == current && entry.type == dns::rrtype::kCname) {
        cname = &entry;
        break;
      }
    }
    if (!cname) break;
    reply.answers.push_back(dns::ResourceRecord::make(
        cname->name, cname->type, cname->rclass, cname->ttl, cname->rdata));
    auto target = rdata_name(cname->rdata);
    if (!target) break;
    current = *target;
  }
  reply.ancount = static_cast<std::uint16_t>(reply.answers.size());
  return dns::encode_message(reply);
}

Bytes ReferenceResolver::handle_client_query(const Bytes& wire) {
  if (!alive_) return {};
  if (config_.quirks.crash_on_pattern && query_triggers_crash(wire)) {
    alive_ = false;
    return {};
  }

  dns::DecodeResult decoded = dns::decode_message(wire);
  if (!decoded.ok() || decoded.message->questions.empty()) {
    if (wire.size() < 2) return {};
    dns::DnsMessage reply;
    reply.txid =
        static_cast<std::uint16_t>((wire[0] << 8) | wire[1]);
    reply.flags.qr = 1;
    reply.flags.rcode = 1;  // FORMERR
    return dns::encode_message(reply);
  }
  const dns::DnsMessage& query = *decoded.message;
  const dns::Question& question = query.questions.front();

  bool hit = false;
  for (const auto& entry : cache_) {
    if (entry.name == question.qname &&
        (entry.type == question.qtype ||
         entry.type == dns::rrtype::kCname ||
         question.qtype == dns::rrtype::kAny)) {
      hit = true;
      break;
    }
  }
  log("CACHE_LOOKUP name=" + question.qname.to_canonical_text() +
      " type=" + dns::type_name(question.qtype) +
      " result=" + (hit ? "hit" : "miss"));

  if (hit) return answer_client(query, question, kNoError);
  if (query.flags.rd == 0 && !config_.quirks.ignore_rd_flag) {
    return answer_client(query, question, kNoError);
  }

  Outcome outcome;
  switch (config_.mode) {
    case gen::Mode::kRecursiveOnly:
      outcome = resolve_recursive(question);
      break;
    case gen::Mode::kForwardOnly:
    case gen::Mode::kCdnsNoFallback:
      outcome = resolve_forward(question);
      break;
    case gen::Mode::kCdnsFallback:
      outcome = resolve_forward(question);
      if (outcome.rcode == kServFail) outcome = resolve_recursive(question);
      break;
  }
  return answer_client(query, question, outcome.rcode);
}

}  // namespace qrfuzz::refres

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

#include "qrfuzz/gen.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace qrfuzz::gen {

namespace {

using grammar::SampleContext;

Bytes u16be(std::uint16_t v) {
  return {static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
}

Bytes u32be(std::uint32_t v) {
  return {static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16),
          static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
}

Bytes random_label(Rng& rng, std::size_t max_chars) {
  std::size_t len = 1 + rng.below(max_chars);
  Bytes out(len);
  for (auto& c : out) {
    std::uint64_t v = rng.below(36);
    c = static_cast<std::uint8_t>(v < 26 ? 'a' + v : '0' + (v - 26));
  }
  return out;
}

// Longest label (in characters) that still fits the 255-octet name budget.
std::size_t label_budget(const dns::DnsName& name, std::size_t want) {
  std::size_t spare = 255 - name.encoded_size();
  if (spare < 2) return 0;
  return std::min(want, spare - 1);
}

dns::DnsName prefixed(SampleContext& ctx, const dns::DnsName& base,
                      std::size_t max_chars) {
  std::size_t budget = label_budget(base, max_chars);
  if (budget == 0) return base;
  return base.with_prefix_label(random_label(ctx.rng, budget));
}

dns::DnsName deep_name(SampleContext& ctx, const dns::DnsName& base) {
  std::size_t cap = (255 - base.encoded_size()) / 2;
  std::size_t target = 10 + ctx.rng.below(119);  // uniform in [10, 128]
  std::size_t depth = std::min(target, cap);
  dns::DnsName name = base;
  for (std::size_t i = 0; i < depth; ++i) {
    name = name.with_prefix_label(random_label(ctx.rng, 1));
  }
  return name;
}

dns::DnsName same_level_name(SampleContext& ctx, const dns::DnsName& of) {
  if (of.is_root()) {
    return dns::DnsName().with_prefix_label(random_label(ctx.rng, 16));
  }
  dns::DnsName parent = of.parent();
  std::size_t budget = label_budget(parent, 16);
  if (budget == 0) return of;
  const Bytes& original = of.labels().front();
  for (int attempt = 0; attempt < 8; ++attempt) {
    Bytes label = random_label(ctx.rng, budget);
    if (label != original) return parent.with_prefix_label(label);
  }
  return parent.with_prefix_label(random_label(ctx.rng, budget));
}

dns::DnsName unrelated_name(SampleContext& ctx) {
  dns::DnsName tld = dns::DnsName::from_text("invalid.");
  return tld.with_prefix_label(random_label(ctx.rng, 16));
}

// The five response name relations, indexed like the NAME rule alternatives.
dns::DnsName relative_name(SampleContext& ctx, std::size_t cls) {
  switch (cls) {
    case 0: return ctx.queried_name;
    case 1: return prefixed(ctx, ctx.queried_name, 16);
    case 2: return same_level_name(ctx, ctx.queried_name);
    case 3: return ctx.queried_name.parent();
    default: return unrelated_name(ctx);
  }
}

Bytes random_bytes(Rng& rng, std::size_t n) {
  Bytes out(n);
  for (auto& b : out) b = rng.byte();
  return out;
}

Bytes char_string(Rng& rng) {
  std::size_t n = rng.below(16);
  Bytes out;
  out.push_back(static_cast<std::uint8_t>(n));
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t v = rng.below(36);
    out.push_back(static_cast<std::uint8_t>(v < 26 ? 'a' + v : '0' + (v - 26)));
  }
  return out;
}

std::uint16_t parse_u16(const std::string& text) {
  return static_cast<std::uint16_t>(std::strtoul(text.c_str(), nullptr, 10));
}

std::uint8_t bit(const grammar::Derivation& d, const char* lhs) {
  return d.value(lhs) == "1" ? 1 : 0;
}

dns::Flags flags_from(const grammar::Derivation& d, std::string* rcode_name,
                      std::map<std::string, std::size_t>* choices) {
  dns::Flags f;
  f.qr = bit(d, "QR");
  auto opcode = dns::opcode_code(d.value("OPCODE"));
  f.opcode = opcode.value_or(0);
  f.aa = bit(d, "AA");
  f.tc = bit(d, "TC");
  f.rd = bit(d, "RD");
  f.ra = bit(d, "RA");
  f.z = bit(d, "Z");
  f.ad = bit(d, "AD");
  f.cd = bit(d, "CD");
  *rcode_name = d.value("RCODE");
  auto rcode = dns::rcode_code(*rcode_name);
  // Extended codes (16..23) cannot travel in the 4-bit header field; the
  // wire carries the low bits and the mnemonic stays as case metadata.
  f.rcode = static_cast<std::uint8_t>(rcode.value_or(0) & 0xf);
  if (choices) {
    (*choices)["OPCODE"] = d.first("OPCODE")->alternative;
    (*choices)["RCODE"] = d.first("RCODE")->alternative;
  }
  return f;
}

struct FieldTable {
  std::vector<std::string> paths;
  std::vector<Bytes> bytes;

  void add(std::string path, Bytes b) {
    paths.push_back(std::move(path));
    bytes.push_back(std::move(b));
  }
  Bytes concat_from(std::size_t first) const {
    Bytes out;
    for (std::size_t i = first; i < bytes.size(); ++i) {
      out.insert(out.end(), bytes[i].begin(), bytes[i].end());
    }
    return out;
  }
};

void mutate_one_field(Rng& rng, FieldTable& fields,
                      std::vector<MutationEntry>& log) {
  std::size_t slot = rng.below(fields.bytes.size());
  Bytes& f = fields.bytes[slot];
  const char* ops[] = {"add", "delete", "replace"};
  std::string op = ops[rng.below(3)];
  MutationEntry e{fields.paths[slot], op, 0, 0};
  if (op == "add") {
    e.offset = rng.below(f.size() + 1);
    e.byte = kMutationBytes[rng.below(5)];
    apply_mutation(f, e.op, e.offset, e.byte);
  } else if (f.empty()) {
    e.op = "skip";
  } else {
    e.offset = rng.below(f.size());
    if (op == "replace") e.byte = kMutationBytes[rng.below(5)];
    apply_mutation(f, e.op, e.offset, e.byte);
  }
  log.push_back(std::move(e));
}

RecordMeta sample_record(const grammar::Grammar& g, SampleContext& ctx) {
  RecordMeta meta;
  auto nd = grammar::sample_from(g, "NAME", ctx);
  meta.name_class = nd.steps[0].alternative;
  dns::DnsName name = dns::DnsName::from_text(nd.value("NAME"));

  auto td = grammar::sample_from(g, "TYPE", ctx);
  meta.type_class = td.steps[0].alternative;
  std::uint16_t type = dns::type_code(td.value("TYPE")).value_or(dns::rrtype::kA);
  ctx.current_record_type = type;

  // Data before length: the length draws depend on the produced size.
  auto rd = grammar::sample_from(g, "RDATA", ctx);
  Bytes rdata = from_hex(rd.value("RDATA"));
  auto ld = grammar::sample_from(g, "RDLENGTH", ctx);
  meta.rdlength_class = ld.steps[0].alternative;

  meta.record.name = std::move(name);
  meta.record.type = type;
  meta.record.rclass = dns::rrclass::kIn;
  meta.record.ttl = 60;
  meta.record.rdlength = parse_u16(ld.value("RDLENGTH"));
  meta.record.rdata = std::move(rdata);
  return meta;
}

std::string seed_to_string(std::uint64_t seed) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "0x%016llx",
                static_cast<unsigned long long>(seed));
  return buf;
}

nlohmann::json record_to_json(const RecordMeta& m, const char* section) {
  return {{"section", section},
          {"name", m.record.name.to_text()},
          {"type", m.record.type},
          {"class", m.record.rclass},
          {"ttl", m.record.ttl},
          {"rdlength", m.record.rdlength},
          {"rdata", to_hex(m.record.rdata)},
          {"name_class", m.name_class},
          {"type_class", m.type_class},
          {"rdlength_class", m.rdlength_class}};
}

RecordMeta record_from_json(const nlohmann::json& j) {
  RecordMeta m;
  m.record.name = dns::DnsName::from_text(j.at("name").get<std::string>());
  m.record.type = j.at("type").get<std::uint16_t>();
  m.record.rclass = j.at("class").get<std::uint16_t>();
  m.record.ttl = j.at("ttl").get<std::uint32_t>();
  m.record.rdlength = j.at("rdlength").get<std::uint16_t>();
  m.record.rdata = from_hex(j.at("rdata").get<std::string>());
  m.name_class = j.at("name_class").get<std::size_t>();
  m.type_class = j.at("type_class").get<std::size_t>();
  m.rdlength_class = j.at("rdlength_class").get<std::size_t>();
  return m;
}

}  // namespace

const char* mode_name(Mode mode) {
  switch (mode) {
    case Mode::kRecursiveOnly: return "recursive-only";
    case Mode::kForwardOnly: return "forward-only";
    case Mode::kCdnsFallback: return "cdns-fallback";
    case Mode::kCdnsNoFallback: return "cdns-nofallback";
  }
  return "unknown";
}

std::optional<Mode> mode_from_name(const std::string& name) {
  if (name == "recursive-only") return Mode::kRecursiveOnly;
  if (name == "forward-only") return Mode::kForwardOnly;
  if (name == "cdns-fallback") return Mode::kCdnsFallback;
  if (name == "cdns-nofallback") return Mode::kCdnsNoFallback;
  return std::nullopt;
}

dns::DnsName default_base_domain(Mode mode) {
  switch (mode) {
    case Mode::kRecursiveOnly:
      return dns::DnsName::from_text("test-recursive.example.com.");
    case Mode::kForwardOnly:
      return dns::DnsName::from_text("test-fwd.example.com.");
    case Mode::kCdnsFallback:
    case Mode::kCdnsNoFallback:
      return dns::DnsName::from_text("test-cdns.example.com.");
  }
  return dns::DnsName();
}

void apply_mutation(Bytes& field, const std::string& op, std::size_t offset,
                    std::uint8_t byte) {
  if (op == "add") {
    if (offset > field.size()) throw std::out_of_range("add offset past end");
    field.insert(field.begin() + static_cast<std::ptrdiff_t>(offset), byte);
  } else if (op == "delete") {
    if (offset >= field.size()) throw std::out_of_range("delete offset past end");
    field.erase(field.begin() + static_cast<std::ptrdiff_t>(offset));
  } else if (op == "replace") {
    if (offset >= field.size()) throw std::out_of_range("replace offset past end");
    field[offset] = byte;
  } else {
    throw std::invalid_argument("unknown mutation op: " + op);
  }
}

Bytes synthesize_rdata(grammar::SampleContext& ctx, std::uint16_t type) {
  switch (type) {
    case dns::rrtype::kA:
      return random_bytes(ctx.rng, 4);
    case dns::rrtype::kAaaa:
      return random_bytes(ctx.rng, 16);
    case dns::rrtype::kNs:
    case dns::rrtype::kCname:
    case dns::rrtype::kPtr:
      return dns::encode_name(relative_name(ctx, ctx.rng.below(5)));
    case dns::rrtype::kTxt:
    case dns::rrtype::kSpf:
      return char_string(ctx.rng);
    case dns::rrtype::kMx: {
      Bytes out = random_bytes(ctx.rng, 2);  // preference
      Bytes name = dns::encode_name(relative_name(ctx, ctx.rng.below(5)));
      out.insert(out.end(), name.begin(), name.end());
      return out;
    }
    case dns::rrtype::kSrv: {
      Bytes out = random_bytes(ctx.rng, 6);  // priority, weight, port
      Bytes name = dns::encode_name(relative_name(ctx, ctx.rng.below(5)));
      out.insert(out.end(), name.begin(), name.end());
      return out;
    }
    case dns::rrtype::kSoa: {
      Bytes out = dns::encode_name(relative_name(ctx, ctx.rng.below(5)));
      Bytes rname = dns::encode_name(relative_name(ctx, ctx.rng.below(5)));
      out.insert(out.end(), rname.begin(), rname.end());
      Bytes serial = random_bytes(ctx.rng, 4);
      out.insert(out.end(), serial.begin(), serial.end());
      for (std::uint32_t v : {3600u, 900u, 604800u, 60u}) {
        Bytes b = u32be(v);
        out.insert(out.end(), b.begin(), b.end());
      }
      return out;
    }
    case dns::rrtype::kRrsig: {
      const std::uint16_t covered[] = {1, 2, 5, 6, 12, 15, 16, 28, 33, 46};
      Bytes out = u16be(covered[ctx.rng.below(10)]);
      out.push_back(8);  // algorithm
      out.push_back(static_cast<std::uint8_t>(ctx.queried_name.label_count()));
      Bytes ttl = u32be(60);
      out.insert(out.end(), ttl.begin(), ttl.end());
      Bytes times = random_bytes(ctx.rng, 10);  // expiry, inception, key tag
      out.insert(out.end(), times.begin(), times.end());
      Bytes signer = dns::encode_name(relative_name(ctx, ctx.rng.below(5)));
      out.insert(out.end(), signer.begin(), signer.end());
      Bytes sig = random_bytes(ctx.rng, 8);
      out.insert(out.end(), sig.begin(), sig.end());
      return out;
    }
    default:
      return random_bytes(ctx.rng, ctx.rng.below(17));
  }
}

void install_query_generators(grammar::Grammar& g) {
  g.generators["randomly generated 2-byte hex value"] = [](SampleContext& ctx) {
    return to_hex(random_bytes(ctx.rng, 2));
  };
  g.generators["base domain"] = [](SampleContext& ctx) {
    return ctx.base_domain.to_text();
  };
  g.generators["sub-domain"] = [](SampleContext& ctx) {
    return prefixed(ctx, ctx.base_domain, 16).to_text();
  };
  g.generators["2-9th sub-domain"] = [](SampleContext& ctx) {
    std::size_t depth = 2 + ctx.rng.below(8);
    dns::DnsName name = ctx.base_domain;
    for (std::size_t i = 0; i < depth; ++i) name = prefixed(ctx, name, 16);
    return name.to_text();
  };
  g.generators["10-max sub-domain"] = [](SampleContext& ctx) {
    return deep_name(ctx, ctx.base_domain).to_text();
  };
}

void install_response_generators(grammar::Grammar& g) {
  g.generators["domain queried"] = [](SampleContext& ctx) {
    return ctx.queried_name.to_text();
  };
  g.generators["sub-domain of the queried domain"] = [](SampleContext& ctx) {
    return prefixed(ctx, ctx.queried_name, 16).to_text();
  };
  g.generators["same-level domain"] = [](SampleContext& ctx) {
    return same_level_name(ctx, ctx.queried_name).to_text();
  };
  g.generators["parent domain"] = [](SampleContext& ctx) {
    return ctx.queried_name.parent().to_text();
  };
  g.generators["unrelated domain"] = [](SampleContext& ctx) {
    return unrelated_name(ctx).to_text();
  };
  g.generators["TYPE queried"] = [](SampleContext& ctx) {
    return dns::type_name(ctx.queried_type);
  };
  g.generators["randomly generated data decided by <TYPE>"] =
      [](SampleContext& ctx) {
        Bytes rdata = synthesize_rdata(ctx, ctx.current_record_type);
        ctx.rdata_length = rdata.size();
        return to_hex(rdata);
      };
  g.generators["length of <RDATA>"] = [](SampleContext& ctx) {
    return std::to_string(ctx.rdata_length);
  };
  g.generators["random value in [length, 2*length]"] = [](SampleContext& ctx) {
    std::size_t n = ctx.rdata_length;
    return std::to_string(n + ctx.rng.below(n + 1));
  };
  g.generators["random value in [0, length]"] = [](SampleContext& ctx) {
    return std::to_string(ctx.rng.below(ctx.rdata_length + 1));
  };
}

Generator::Generator(dns::DnsName base_domain)
    : base_domain_(std::move(base_domain)),
      query_(grammar::load_builtin_query_grammar()),
      response_(grammar::load_builtin_response_grammar()) {
  install_query_generators(query_);
  install_response_generators(response_);
}

dns::DnsMessage Generator::sample_query(std::uint64_t seed) const {
  SampleContext ctx(seed, base_domain_);
  grammar::Derivation d = grammar::sample(query_, ctx);
  dns::DnsMessage q;
  q.txid = static_cast<std::uint16_t>(
      std::strtoul(d.value("TransactionID").c_str(), nullptr, 16));
  std::string rcode_name;
  q.flags = flags_from(d, &rcode_name, nullptr);
  q.qdcount = parse_u16(d.value("QDCOUNT"));
  q.ancount = parse_u16(d.value("ANCOUNT"));
  q.nscount = parse_u16(d.value("NSCOUNT"));
  q.arcount = parse_u16(d.value("ARCOUNT"));
  dns::Question question;
  question.qname = dns::DnsName::from_text(d.value("QNAME"));
  question.qtype = dns::type_code(d.value("QTYPE")).value_or(dns::rrtype::kA);
  question.qclass = dns::class_code(d.value("QCLASS")).value_or(dns::rrclass::kIn);
  q.questions.push_back(std::move(question));
  return q;
}

TestCase Generator::generate_case(std::uint64_t campaign_seed,
                                  std::uint64_t case_id) const {
  TestCase c;
  c.id = case_id;
  c.seed = mix_seed(campaign_seed, case_id);
  SampleContext ctx(c.seed, base_domain_);

  grammar::Derivation qd = grammar::sample(query_, ctx);
  c.query.txid = static_cast<std::uint16_t>(
      std::strtoul(qd.value("TransactionID").c_str(), nullptr, 16));
  c.query.flags = flags_from(qd, &c.query_rcode_name, &c.query_choices);
  c.query_choices["QNAME"] = qd.first("QNAME")->alternative;
  c.query_choices["QTYPE"] = qd.first("QTYPE")->alternative;
  c.query.qdcount = parse_u16(qd.value("QDCOUNT"));
  c.query.ancount = parse_u16(qd.value("ANCOUNT"));
  c.query.nscount = parse_u16(qd.value("NSCOUNT"));
  c.query.arcount = parse_u16(qd.value("ARCOUNT"));
  dns::Question question;
  question.qname = dns::DnsName::from_text(qd.value("QNAME"));
  question.qtype = dns::type_code(qd.value("QTYPE")).value_or(dns::rrtype::kA);
  question.qclass =
      dns::class_code(qd.value("QCLASS")).value_or(dns::rrclass::kIn);
  c.query.questions.push_back(question);
  ctx.queried_name = question.qname;
  ctx.queried_type = question.qtype;

  ResponseTemplate& t = c.response;
  grammar::Derivation fd = grammar::sample_from(response_, "Flags", ctx);
  t.flags = flags_from(fd, &t.rcode_name, &c.response_choices);
  grammar::Derivation an = grammar::sample_from(response_, "ANCOUNT", ctx);
  grammar::Derivation ns = grammar::sample_from(response_, "NSCOUNT", ctx);
  grammar::Derivation ar = grammar::sample_from(response_, "ARCOUNT", ctx);
  t.ancount = parse_u16(an.value("ANCOUNT"));
  t.nscount = parse_u16(ns.value("NSCOUNT"));
  t.arcount = parse_u16(ar.value("ARCOUNT"));
  c.response_choices["ANCOUNT"] = an.steps[0].alternative;
  c.response_choices["NSCOUNT"] = ns.steps[0].alternative;
  c.response_choices["ARCOUNT"] = ar.steps[0].alternative;
  for (std::uint16_t i = 0; i < t.ancount; ++i) {
    t.answer.push_back(sample_record(response_, ctx));
  }
  for (std::uint16_t i = 0; i < t.nscount; ++i) {
    t.authority.push_back(sample_record(response_, ctx));
  }
  for (std::uint16_t i = 0; i < t.arcount; ++i) {
    t.additional.push_back(sample_record(response_, ctx));
  }

  FieldTable qf;
  qf.add("query/txid", u16be(c.query.txid));
  qf.add("query/flags", u16be(c.query.flags.to_u16()));
  qf.add("query/qdcount", u16be(c.query.qdcount));
  qf.add("query/ancount", u16be(c.query.ancount));
  qf.add("query/nscount", u16be(c.query.nscount));
  qf.add("query/arcount", u16be(c.query.arcount));
  qf.add("query/qname", dns::encode_name(question.qname));
  qf.add("query/qtype", u16be(question.qtype));
  qf.add("query/qclass", u16be(question.qclass));

  FieldTable rf;
  rf.add("response/flags", u16be(t.flags.to_u16()));
  rf.add("response/ancount", u16be(t.ancount));
  rf.add("response/nscount", u16be(t.nscount));
  rf.add("response/arcount", u16be(t.arcount));
  const char* section_names[] = {"answer", "authority", "additional"};
  const std::vector<RecordMeta>* sections[] = {&t.answer, &t.authority,
                                               &t.additional};
  for (int s = 0; s < 3; ++s) {
    for (std::size_t i = 0; i < sections[s]->size(); ++i) {
      const dns::ResourceRecord& rr = (*sections[s])[i].record;
      std::string base = "response/" + std::string(section_names[s]) + "[" +
                         std::to_string(i) + "]/";
      rf.add(base + "name", dns::encode_name(rr.name));
      rf.add(base + "type", u16be(rr.type));
      rf.add(base + "class", u16be(rr.rclass));
      rf.add(base + "ttl", u32be(rr.ttl));
      rf.add(base + "rdlength", u16be(rr.rdlength));
      rf.add(base + "rdata", rr.rdata);
    }
  }

  if (ctx.rng.unit() < kMutationGate) {
    c.mutated = true;
    std::uint64_t target = ctx.rng.below(3);  // query, response, or both
    bool query_edited = false;
    if (target == 0 || target == 2) {
      std::size_t before = c.mutation_log.size();
      mutate_one_field(ctx.rng, qf, c.mutation_log);
      query_edited = c.mutation_log[before].op != "skip";
    }
    if (target == 1 || target == 2) {
      mutate_one_field(ctx.rng, rf, c.mutation_log);
    }
    if (query_edited) c.query.raw_override = qf.concat_from(0);
  }

  c.query_wire = qf.concat_from(0);
  t.flags_bytes = rf.bytes[0];
  t.ancount_bytes = rf.bytes[1];
  t.nscount_bytes = rf.bytes[2];
  t.arcount_bytes = rf.bytes[3];
  t.section_bytes = rf.concat_from(4);
  return c;
}

nlohmann::json test_case_to_json(const TestCase& c) {
  nlohmann::json log = nlohmann::json::array();
  for (const auto& m : c.mutation_log) {
    log.push_back({{"field", m.field},
                   {"op", m.op},
                   {"offset", m.offset},
                   {"byte", m.byte}});
  }
  nlohmann::json records = nlohmann::json::array();
  const char* section_names[] = {"answer", "authority", "additional"};
  const std::vector<RecordMeta>* sections[] = {
      &c.response.answer, &c.response.authority, &c.response.additional};
  for (int s = 0; s < 3; ++s) {
    for (const auto& meta : *sections[s]) {
      records.push_back(record_to_json(meta, section_names[s]));
    }
  }
  return {{"id", c.id},
          {"seed", seed_to_string(c.seed)},
          {"mutated", c.mutated},
          {"mutation_log", log},
          {"query",
           {{"wire", to_hex(c.query_wire)},
            {"rcode", c.query_rcode_name},
            {"choices", c.query_choices}}},
          {"response",
           {{"flags", to_hex(c.response.flags_bytes)},
            {"flags_value", c.response.flags.to_u16()},
            {"ancount_bytes", to_hex(c.response.ancount_bytes)},
            {"nscount_bytes", to_hex(c.response.nscount_bytes)},
            {"arcount_bytes", to_hex(c.response.arcount_bytes)},
            {"sections", to_hex(c.response.section_bytes)},
            {"ancount", c.response.ancount},
            {"nscount", c.response.nscount},
            {"arcount", c.response.arcount},
            {"rcode", c.response.rcode_name},
            {"records", records},
            {"choices", c.response_choices}}}};
}

TestCase test_case_from_json(const nlohmann::json& j) {
  TestCase c;
  c.id = j.at("id").get<std::uint64_t>();
  c.seed = std::strtoull(j.at("seed").get<std::string>().c_str(), nullptr, 16);
  c.mutated = j.at("mutated").get<bool>();
  for (const auto& m : j.at("mutation_log")) {
    c.mutation_log.push_back({m.at("field").get<std::string>(),
                              m.at("op").get<std::string>(),
                              m.at("offset").get<std::size_t>(),
                              m.at("byte").get<std::uint8_t>()});
  }
  const auto& q = j.at("query");
  c.query_wire = from_hex(q.at("wire").get<std::string>());
  c.query_rcode_name = q.at("rcode").get<std::string>();
  c.query_choices =
      q.at("choices").get<std::map<std::string, std::size_t>>();
  auto decoded = dns::decode_message(c.query_wire);
  if (decoded.ok() && !c.mutated) {
    c.query = *decoded.message;
  } else {
    c.query.raw_override = c.query_wire;
  }

  const auto& r = j.at("response");
  ResponseTemplate& t = c.response;
  t.flags_bytes = from_hex(r.at("flags").get<std::string>());
  t.flags = dns::Flags::from_u16(r.at("flags_value").get<std::uint16_t>());
  t.ancount_bytes = from_hex(r.at("ancount_bytes").get<std::string>());
  t.nscount_bytes = from_hex(r.at("nscount_bytes").get<std::string>());
  t.arcount_bytes = from_hex(r.at("arcount_bytes").get<std::string>());
  t.section_bytes = from_hex(r.at("sections").get<std::string>());
  t.ancount = r.at("ancount").get<std::uint16_t>();
  t.nscount = r.at("nscount").get<std::uint16_t>();
  t.arcount = r.at("arcount").get<std::uint16_t>();
  t.rcode_name = r.at("rcode").get<std::string>();
  for (const auto& rec : r.at("records")) {
    std::string section = rec.at("section").get<std::string>();
    RecordMeta meta = record_from_json(rec);
    if (section == "answer") t.answer.push_back(std::move(meta));
    else if (section == "authority") t.authority.push_back(std::move(meta));
    else t.additional.push_back(std::move(meta));
  }
  c.response_choices =
      r.at("choices").get<std::map<std::string, std::size_t>>();
  return c;
}

}  // namespace qrfuzz::gen

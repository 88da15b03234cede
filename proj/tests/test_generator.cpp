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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "qrfuzz/gen.hpp"

using namespace qrfuzz;
using namespace qrfuzz::gen;

namespace {

Bytes u16be(std::uint16_t v) {
  return {static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
}

Bytes u32be(std::uint32_t v) {
  return {static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16),
          static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
}

Bytes concat(const std::vector<Bytes>& parts) {
  Bytes out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

// Walks len-prefixed labels; returns bytes consumed, or 0 if malformed.
std::size_t walk_name(const Bytes& b, std::size_t at) {
  std::size_t pos = at;
  while (pos < b.size()) {
    std::uint8_t len = b[pos];
    if (len == 0) return pos + 1 - at;
    if (len > 63 || pos + 1 + len > b.size()) return 0;
    pos += 1 + len;
  }
  return 0;
}

bool plain_label(const Bytes& label, std::size_t max_len) {
  if (label.empty() || label.size() > max_len) return false;
  return std::all_of(label.begin(), label.end(), [](std::uint8_t c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
  });
}

// Rebuilds the query wire independently: field byte strings from the
// structured (pre-mutation) message, with the logged edits replayed.
Bytes recompose_query(const TestCase& c) {
  std::vector<std::string> names = {"txid",    "flags",  "qdcount",
                                    "ancount", "nscount", "arcount",
                                    "qname",   "qtype",  "qclass"};
  std::vector<Bytes> fields = {u16be(c.query.txid),
                               u16be(c.query.flags.to_u16()),
                               u16be(c.query.qdcount),
                               u16be(c.query.ancount),
                               u16be(c.query.nscount),
                               u16be(c.query.arcount),
                               dns::encode_name(c.query.questions.at(0).qname),
                               u16be(c.query.questions.at(0).qtype),
                               u16be(c.query.questions.at(0).qclass)};
  for (const auto& m : c.mutation_log) {
    if (m.op == "skip" || m.field.rfind("query/", 0) != 0) continue;
    std::string field = m.field.substr(6);
    auto it = std::find(names.begin(), names.end(), field);
    REQUIRE(it != names.end());
    apply_mutation(fields[static_cast<std::size_t>(it - names.begin())], m.op,
                   m.offset, m.byte);
  }
  return concat(fields);
}

// Same for the response template fragments.
struct RecomposedResponse {
  Bytes flags, ancount, nscount, arcount, sections;
};

RecomposedResponse recompose_response(const TestCase& c) {
  const ResponseTemplate& t = c.response;
  std::vector<std::string> names = {"response/flags", "response/ancount",
                                    "response/nscount", "response/arcount"};
  std::vector<Bytes> fields = {u16be(t.flags.to_u16()), u16be(t.ancount),
                               u16be(t.nscount), u16be(t.arcount)};
  const char* sections[] = {"answer", "authority", "additional"};
  const std::vector<RecordMeta>* lists[] = {&t.answer, &t.authority,
                                            &t.additional};
  for (int s = 0; s < 3; ++s) {
    for (std::size_t i = 0; i < lists[s]->size(); ++i) {
      const dns::ResourceRecord& rr = (*lists[s])[i].record;
      std::string base =
          "response/" + std::string(sections[s]) + "[" + std::to_string(i) + "]/";
      names.push_back(base + "name");
      fields.push_back(dns::encode_name(rr.name));
      names.push_back(base + "type");
      fields.push_back(u16be(rr.type));
      names.push_back(base + "class");
      fields.push_back(u16be(rr.rclass));
      names.push_back(base + "ttl");
      fields.push_back(u32be(rr.ttl));
      names.push_back(base + "rdlength");
      fields.push_back(u16be(rr.rdlength));
      names.push_back(base + "rdata");
      fields.push_back(rr.rdata);
    }
  }
  for (const auto& m : c.mutation_log) {
    if (m.op == "skip" || m.field.rfind("response/", 0) != 0) continue;
    auto it = std::find(names.begin(), names.end(), m.field);
    REQUIRE(it != names.end());
    apply_mutation(fields[static_cast<std::size_t>(it - names.begin())], m.op,
                   m.offset, m.byte);
  }
  RecomposedResponse out;
  out.flags = fields[0];
  out.ancount = fields[1];
  out.nscount = fields[2];
  out.arcount = fields[3];
  for (std::size_t i = 4; i < fields.size(); ++i) {
    out.sections.insert(out.sections.end(), fields[i].begin(), fields[i].end());
  }
  return out;
}

const std::uint16_t kQueryTypes[] = {1, 2, 5, 6, 12, 15, 16, 28, 33, 255, 46};
const std::uint16_t kResponseTypes[] = {1, 2, 5, 6, 12, 15, 16, 28, 33, 46};

}  // namespace

TEST_CASE("mode names and default base domains") {
  CHECK(std::string(mode_name(Mode::kRecursiveOnly)) == "recursive-only");
  CHECK(std::string(mode_name(Mode::kForwardOnly)) == "forward-only");
  CHECK(std::string(mode_name(Mode::kCdnsFallback)) == "cdns-fallback");
  CHECK(std::string(mode_name(Mode::kCdnsNoFallback)) == "cdns-nofallback");
  for (Mode m : {Mode::kRecursiveOnly, Mode::kForwardOnly, Mode::kCdnsFallback,
                 Mode::kCdnsNoFallback}) {
    auto back = mode_from_name(mode_name(m));
    REQUIRE(back.has_value());
    CHECK(*back == m);
  }
  CHECK(!mode_from_name("bogus").has_value());

  CHECK(default_base_domain(Mode::kRecursiveOnly).to_text() ==
        "test-recursive.example.com.");
  CHECK(default_base_domain(Mode::kForwardOnly).to_text() ==
        "test-fwd.example.com.");
  CHECK(default_base_domain(Mode::kCdnsFallback).to_text() ==
        "test-cdns.example.com.");
  CHECK(default_base_domain(Mode::kCdnsNoFallback).to_text() ==
        "test-cdns.example.com.");
}

TEST_CASE("apply_mutation edits a field's octets") {
  Bytes f = {0xaa, 0xbb};
  apply_mutation(f, "add", 1, 0x40);
  CHECK(f == Bytes{0xaa, 0x40, 0xbb});
  apply_mutation(f, "add", 3, 0x2e);
  CHECK(f == Bytes{0xaa, 0x40, 0xbb, 0x2e});
  apply_mutation(f, "delete", 0, 0);
  CHECK(f == Bytes{0x40, 0xbb, 0x2e});
  apply_mutation(f, "replace", 1, 0x00);
  CHECK(f == Bytes{0x40, 0x00, 0x2e});
  Bytes empty;
  apply_mutation(empty, "add", 0, 0x5c);
  CHECK(empty == Bytes{0x5c});
}

TEST_CASE("query name synthesis respects shape classes and wire budget") {
  Generator gen(dns::DnsName::from_text("example.com."));
  const auto& g = gen.query_grammar();
  grammar::SampleContext ctx(424242, gen.base_domain());

  auto base = g.generators.at("base domain")(ctx);
  CHECK(base == "example.com.");

  std::set<std::size_t> sub_extra, mid_extra;
  std::size_t deep_min = 1000, deep_max = 0;
  for (int i = 0; i < 2000; ++i) {
    auto sub = dns::DnsName::from_text(g.generators.at("sub-domain")(ctx));
    CHECK(sub.label_count() == 3);
    CHECK(sub.under_or_equal(gen.base_domain()));
    CHECK(plain_label(sub.labels()[0], 16));
    sub_extra.insert(sub.label_count() - 2);

    auto mid = dns::DnsName::from_text(g.generators.at("2-9th sub-domain")(ctx));
    std::size_t extra = mid.label_count() - 2;
    CHECK(extra >= 2);
    CHECK(extra <= 9);
    CHECK(mid.under_or_equal(gen.base_domain()));
    mid_extra.insert(extra);

    auto deep = dns::DnsName::from_text(g.generators.at("10-max sub-domain")(ctx));
    extra = deep.label_count() - 2;
    CHECK(extra >= 10);
    CHECK(deep.encoded_size() <= 255);
    deep_min = std::min(deep_min, extra);
    deep_max = std::max(deep_max, extra);
  }
  CHECK(mid_extra.size() == 8);  // every depth 2..9 appears
  // example.com. encodes to 13 octets; 242 spare octets fit 121 one-octet
  // labels, so the deep class saturates at 121 extra labels.
  CHECK(deep_min == 10);
  CHECK(deep_max == 121);

  // A root base leaves 254 spare octets: 127 one-octet labels.
  Generator root_gen{dns::DnsName()};
  grammar::SampleContext root_ctx(171717, root_gen.base_domain());
  std::size_t root_max = 0;
  for (int i = 0; i < 2000; ++i) {
    auto deep = dns::DnsName::from_text(
        root_gen.query_grammar().generators.at("10-max sub-domain")(root_ctx));
    CHECK(deep.encoded_size() <= 255);
    root_max = std::max(root_max, deep.label_count());
  }
  CHECK(root_max == 127);
}

TEST_CASE("response name synthesis covers the five relations") {
  Generator gen(dns::DnsName::from_text("test-fwd.example.com."));
  const auto& g = gen.response_grammar();
  grammar::SampleContext ctx(88001, gen.base_domain());
  ctx.queried_name = dns::DnsName::from_text("www.test-fwd.example.com.");

  CHECK(g.generators.at("domain queried")(ctx) == "www.test-fwd.example.com.");
  CHECK(g.generators.at("parent domain")(ctx) == "test-fwd.example.com.");

  for (int i = 0; i < 200; ++i) {
    auto sub = dns::DnsName::from_text(
        g.generators.at("sub-domain of the queried domain")(ctx));
    CHECK(sub.label_count() == ctx.queried_name.label_count() + 1);
    CHECK(sub.under_or_equal(ctx.queried_name));

    auto same = dns::DnsName::from_text(g.generators.at("same-level domain")(ctx));
    CHECK(same.label_count() == ctx.queried_name.label_count());
    CHECK(same.parent() == ctx.queried_name.parent());
    CHECK(!(same == ctx.queried_name));

    auto unrelated =
        dns::DnsName::from_text(g.generators.at("unrelated domain")(ctx));
    CHECK(!unrelated.under_or_equal(gen.base_domain()));
    CHECK(!unrelated.under_or_equal(ctx.queried_name));
  }
}

TEST_CASE("record data synthesis is well formed per type") {
  Generator gen(dns::DnsName::from_text("example.com."));
  grammar::SampleContext ctx(55055, gen.base_domain());
  ctx.queried_name = dns::DnsName::from_text("a.example.com.");

  for (int i = 0; i < 200; ++i) {
    CHECK(synthesize_rdata(ctx, dns::rrtype::kA).size() == 4);
    CHECK(synthesize_rdata(ctx, dns::rrtype::kAaaa).size() == 16);

    for (std::uint16_t t : {dns::rrtype::kNs, dns::rrtype::kCname,
                            dns::rrtype::kPtr}) {
      Bytes b = synthesize_rdata(ctx, t);
      CHECK(walk_name(b, 0) == b.size());
    }
    for (std::uint16_t t : {dns::rrtype::kTxt, dns::rrtype::kSpf}) {
      Bytes b = synthesize_rdata(ctx, t);
      REQUIRE(!b.empty());
      CHECK(b[0] == b.size() - 1);
    }
    {
      Bytes b = synthesize_rdata(ctx, dns::rrtype::kMx);
      REQUIRE(b.size() > 2);
      CHECK(walk_name(b, 2) == b.size() - 2);
    }
    {
      Bytes b = synthesize_rdata(ctx, dns::rrtype::kSrv);
      REQUIRE(b.size() > 6);
      CHECK(walk_name(b, 6) == b.size() - 6);
    }
    {
      Bytes b = synthesize_rdata(ctx, dns::rrtype::kSoa);
      std::size_t n1 = walk_name(b, 0);
      REQUIRE(n1 > 0);
      std::size_t n2 = walk_name(b, n1);
      REQUIRE(n2 > 0);
      CHECK(b.size() == n1 + n2 + 20);
    }
    {
      Bytes b = synthesize_rdata(ctx, dns::rrtype::kRrsig);
      REQUIRE(b.size() > 18);
      std::size_t n = walk_name(b, 18);
      REQUIRE(n > 0);
      CHECK(b.size() == 18 + n + 8);
    }
    CHECK(synthesize_rdata(ctx, dns::rrtype::kAny).size() <= 16);
  }
}

TEST_CASE("generated cases are deterministic in (campaign seed, case id)") {
  Generator gen(default_base_domain(Mode::kForwardOnly));
  for (std::uint64_t id : {0ULL, 1ULL, 77ULL, 9999ULL}) {
    TestCase a = gen.generate_case(31337, id);
    TestCase b = gen.generate_case(31337, id);
    CHECK(a.query_wire == b.query_wire);
    CHECK(a.response.section_bytes == b.response.section_bytes);
    CHECK(a.mutation_log == b.mutation_log);
    CHECK(test_case_to_json(a) == test_case_to_json(b));
  }
  std::set<Bytes> wires;
  for (std::uint64_t id = 0; id < 100; ++id) {
    wires.insert(gen.generate_case(31337, id).query_wire);
  }
  CHECK(wires.size() > 95);
}

TEST_CASE("unmutated queries round-trip through the codec byte for byte") {
  Generator gen(default_base_domain(Mode::kRecursiveOnly));
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    dns::DnsMessage q = gen.sample_query(seed);
    Bytes wire = dns::encode_message(q);
    auto r = dns::decode_message(wire);
    REQUIRE(r.ok());
    CHECK(*r.message == q);
    CHECK(dns::encode_message(*r.message) == wire);
  }
}

TEST_CASE("wire composition matches an independent field-splice rebuild") {
  Generator gen(default_base_domain(Mode::kForwardOnly));
  int mutated_seen = 0;
  for (std::uint64_t id = 0; id < 3000; ++id) {
    TestCase c = gen.generate_case(777, id);
    if (c.mutated) ++mutated_seen;
    CHECK(recompose_query(c) == c.query_wire);
    RecomposedResponse r = recompose_response(c);
    CHECK(r.flags == c.response.flags_bytes);
    CHECK(r.ancount == c.response.ancount_bytes);
    CHECK(r.nscount == c.response.nscount_bytes);
    CHECK(r.arcount == c.response.arcount_bytes);
    CHECK(r.sections == c.response.section_bytes);
    CHECK(c.query_wire == dns::encode_message(c.query));
  }
  CHECK(mutated_seen > 200);  // the composition check exercises mutated cases
}

TEST_CASE("case structure carries the paired query and template invariants") {
  Generator gen(default_base_domain(Mode::kForwardOnly));
  for (std::uint64_t id = 0; id < 2000; ++id) {
    TestCase c = gen.generate_case(20260817, id);
    CHECK(c.id == id);
    CHECK(c.mutated == !c.mutation_log.empty());

    REQUIRE(c.query.questions.size() == 1);
    CHECK(c.query.qdcount == 1);
    CHECK(c.query.ancount == 0);
    CHECK(c.query.nscount == 0);
    CHECK(c.query.arcount == 0);
    CHECK(c.query.flags.qr == 0);
    CHECK(c.query.questions[0].qclass == dns::rrclass::kIn);
    CHECK(c.query.questions[0].qname.under_or_equal(gen.base_domain()));
    bool qtype_known = false;
    for (std::uint16_t t : kQueryTypes) qtype_known |= c.query.questions[0].qtype == t;
    CHECK(qtype_known);
    auto rc = dns::rcode_code(c.query_rcode_name);
    REQUIRE(rc.has_value());
    CHECK(c.query.flags.rcode == (*rc & 0xf));
    if (!c.mutated) CHECK(!c.query.raw_override.has_value());

    const ResponseTemplate& t = c.response;
    CHECK(t.flags.qr == 1);
    CHECK(t.answer.size() == t.ancount);
    CHECK(t.authority.size() == t.nscount);
    CHECK(t.additional.size() == t.arcount);
    CHECK(t.ancount <= 5);
    CHECK(t.nscount <= 5);
    CHECK(t.arcount <= 5);
    auto rrc = dns::rcode_code(t.rcode_name);
    REQUIRE(rrc.has_value());
    CHECK(t.flags.rcode == (*rrc & 0xf));

    for (const auto* section : {&t.answer, &t.authority, &t.additional}) {
      for (const auto& meta : *section) {
        const auto& rr = meta.record;
        CHECK(rr.rclass == dns::rrclass::kIn);
        CHECK(rr.ttl == 60);
        if (meta.type_class == 0) {
          CHECK(rr.type == c.query.questions[0].qtype);
        } else {
          CHECK(rr.type == kResponseTypes[meta.type_class - 1]);
        }
        if (meta.rdlength_class == 0) {
          CHECK(rr.rdlength == rr.rdata.size());
        } else if (meta.rdlength_class == 1) {
          CHECK(rr.rdlength >= rr.rdata.size());
          CHECK(rr.rdlength <= 2 * rr.rdata.size());
        } else {
          CHECK(meta.rdlength_class == 2);
          CHECK(rr.rdlength <= rr.rdata.size());
        }
      }
    }

    for (const auto& m : c.mutation_log) {
      bool known_op = m.op == "add" || m.op == "delete" || m.op == "replace" ||
                      m.op == "skip";
      CHECK(known_op);
      if (m.op == "add" || m.op == "replace") {
        bool pool_byte = false;
        for (std::uint8_t b : kMutationBytes) pool_byte |= m.byte == b;
        CHECK(pool_byte);
      }
    }
  }
}

TEST_CASE("mutation statistics match the annotated rates") {
  Generator gen(default_base_domain(Mode::kCdnsFallback));
  constexpr int kN = 20000;
  int mutated = 0, query_hit = 0, response_hit = 0;
  std::map<std::string, int> ops;
  std::map<std::size_t, int> ancounts;
  long records = 0, queried_type = 0;
  std::map<std::size_t, long> name_classes, rdlen_classes;

  for (std::uint64_t id = 0; id < kN; ++id) {
    TestCase c = gen.generate_case(1701, id);
    if (c.mutated) {
      ++mutated;
      bool q = false, r = false;
      for (const auto& m : c.mutation_log) {
        q |= m.field.rfind("query/", 0) == 0;
        r |= m.field.rfind("response/", 0) == 0;
        ops[m.op]++;
      }
      CHECK((q || r));
      if (q) ++query_hit;
      if (r) ++response_hit;
    }
    ancounts[c.response.ancount]++;
    for (const auto* section :
         {&c.response.answer, &c.response.authority, &c.response.additional}) {
      for (const auto& meta : *section) {
        ++records;
        if (meta.type_class == 0) ++queried_type;
        name_classes[meta.name_class]++;
        rdlen_classes[meta.rdlength_class]++;
      }
    }
  }

  double mutated_frac = static_cast<double>(mutated) / kN;
  CHECK(mutated_frac > 0.09);
  CHECK(mutated_frac < 0.11);

  // Target query / response / both uniformly: each side is hit 2/3 of the time.
  double qf = static_cast<double>(query_hit) / mutated;
  double rf = static_cast<double>(response_hit) / mutated;
  CHECK(std::abs(qf - 2.0 / 3.0) < 0.04);
  CHECK(std::abs(rf - 2.0 / 3.0) < 0.04);

  long op_total = 0;
  for (const char* op : {"add", "delete", "replace"}) op_total += ops[op];
  for (const char* op : {"add", "delete", "replace"}) {
    double f = static_cast<double>(ops[op]) / static_cast<double>(op_total + ops["skip"]);
    CHECK(f > 1.0 / 3.0 - 0.05);
    CHECK(f < 1.0 / 3.0 + 0.05);
  }

  // Record counts 0..5 uniform; roughly 2.5 records per section.
  for (std::size_t v = 0; v <= 5; ++v) {
    double f = static_cast<double>(ancounts[v]) / kN;
    CHECK(std::abs(f - 1.0 / 6.0) < 0.01);
  }

  double queried_frac = static_cast<double>(queried_type) / static_cast<double>(records);
  CHECK(queried_frac > 0.49);
  CHECK(queried_frac < 0.51);
  for (std::size_t cls = 0; cls < 5; ++cls) {
    double f = static_cast<double>(name_classes[cls]) / static_cast<double>(records);
    CHECK(std::abs(f - 0.2) < 0.01);
  }
  double exact = static_cast<double>(rdlen_classes[0]) / static_cast<double>(records);
  CHECK(std::abs(exact - 0.9) < 0.01);
  CHECK(std::abs(static_cast<double>(rdlen_classes[1]) / records - 0.05) < 0.01);
  CHECK(std::abs(static_cast<double>(rdlen_classes[2]) / records - 0.05) < 0.01);
}

TEST_CASE("cases serialize to JSON and back without loss") {
  Generator gen(default_base_domain(Mode::kForwardOnly));
  int mutated_checked = 0;
  for (std::uint64_t id = 0; id < 200; ++id) {
    TestCase c = gen.generate_case(4242, id);
    nlohmann::json j = test_case_to_json(c);
    TestCase back = test_case_from_json(j);
    CHECK(back.id == c.id);
    CHECK(back.seed == c.seed);
    CHECK(back.mutated == c.mutated);
    CHECK(back.mutation_log == c.mutation_log);
    CHECK(back.query_wire == c.query_wire);
    CHECK(back.query_rcode_name == c.query_rcode_name);
    CHECK(back.response.flags_bytes == c.response.flags_bytes);
    CHECK(back.response.ancount_bytes == c.response.ancount_bytes);
    CHECK(back.response.nscount_bytes == c.response.nscount_bytes);
    CHECK(back.response.arcount_bytes == c.response.arcount_bytes);
    CHECK(back.response.section_bytes == c.response.section_bytes);
    CHECK(back.response.ancount == c.response.ancount);
    CHECK(back.response.rcode_name == c.response.rcode_name);
    CHECK(back.query_choices == c.query_choices);
    CHECK(back.response_choices == c.response_choices);
    CHECK(test_case_to_json(back) == j);
    if (c.mutated) ++mutated_checked;
  }
  CHECK(mutated_checked > 5);
}

TEST_CASE("choice maps record the sampled alternatives") {
  Generator gen(default_base_domain(Mode::kRecursiveOnly));
  TestCase c = gen.generate_case(99, 3);
  for (const char* key : {"OPCODE", "RCODE", "QNAME", "QTYPE"}) {
    CHECK(c.query_choices.count(key) == 1);
  }
  for (const char* key : {"OPCODE", "RCODE", "ANCOUNT", "NSCOUNT", "ARCOUNT"}) {
    CHECK(c.response_choices.count(key) == 1);
  }
  CHECK(c.query_choices.at("QNAME") < 4);
  CHECK(c.query_choices.at("QTYPE") < 11);
}

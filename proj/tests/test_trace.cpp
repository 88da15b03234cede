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

#include "qrfuzz/trace.hpp"

using namespace qrfuzz;
using namespace qrfuzz::trace;

namespace {

// Captured dump of a BIND-style cache: directives, section comments,
// owner inheritance, a missing class column, parenthesized multi-line
// rdata, a truncation marker, and a trailing address database.
const std::string kBindDump =
    "; Start view _default\n"
    "; Cache dump of view '_default' (cache _default)\n"
    ";\n"
    "; using a 0 second stale ttl\n"
    "$DATE 20220708100109\n"
    "; authanswer\n"
    ".   518399\tIN NS\ta.root-servers.net.\n"
    "    518399\tIN NS\tb.root-servers.net.\n"
    "; glue\n"
    "app.    172799\tNS\tns-tld1.charlestonroadregistry.com.\n"
    "        172799\tNS\tns-tld2.charlestonroadregistry.com.\n"
    "; additional\n"
    "    86399\tDS\t23684 8 2 (\n"
    "    3A5CC8A31E02C94ABA6461912FABB7E9F5E3\n"
    "    4957BB6114A55A864D96AEC31836 )\n"
    "(truncated)\n"
    "; Address database dump\n"
    ";\n"
    "; [edns success/timeout]\n"
    "; [plain success/timeout]\n"
    ";\n"
    "; a.gtld-servers.net [v4 TTL 9] [v6 TTL 9] [v4 success] [v6 success]\n"
    ";\t192.5.6.30 [srtt 25] [flags 00000000] [edns 0/0] [plain 0/0] [ttl 1799]\n"
    ";\t2001:503:a83e::2:30 [srtt 39310] [flags 00000000] [edns 0/4] [plain 0/0] "
    "[ttl 1799]\n";

const std::string kBindCanonical =
    "{\".\":["
    "{\"name\":\".\",\"class\":\"IN\",\"type\":\"NS\",\"ttl\":\"518399\","
    "\"rdata\":\"a.root-servers.net.\"},"
    "{\"name\":\".\",\"class\":\"IN\",\"type\":\"NS\",\"ttl\":\"518399\","
    "\"rdata\":\"b.root-servers.net.\"}],"
    "\"app.\":["
    "{\"name\":\"app.\",\"class\":\"IN\",\"type\":\"NS\",\"ttl\":\"172799\","
    "\"rdata\":\"ns-tld1.charlestonroadregistry.com.\"},"
    "{\"name\":\"app.\",\"class\":\"IN\",\"type\":\"NS\",\"ttl\":\"172799\","
    "\"rdata\":\"ns-tld2.charlestonroadregistry.com.\"},"
    "{\"name\":\"app.\",\"class\":\"IN\",\"type\":\"DS\",\"ttl\":\"86399\","
    "\"rdata\":\"23684 8 2 3A5CC8A31E02C94ABA6461912FABB7E9F5E3 "
    "4957BB6114A55A864D96AEC31836\"}]}";

// Captured dump of an Unbound-style cache: rrset/message sections, header
// comments, inline ';' comments, and base64 rdata continued over lines.
const std::string kUnboundDump =
    "START_RRSET_CACHE\n"
    ";rrset 86398 13 1 8 0\n"
    ".\t86398\tIN\tNS   j.root-servers.net.\n"
    ".\t86398\tIN\tNS   e.root-servers.net.\n"
    ".\t86398\tIN\tNS   h.root-servers.net.\n"
    "(truncated)\n"
    ";rrset 86398 1 1 2 0\n"
    "CK0POJMG874LJREF7EFN8430QVIT8BSM.com.\t86398 IN NSEC3 1 1 0 - "
    "ck0q2d6ni4i7eqh8na30ns61o48ul8g5 NS SOA  RRSIG DNSKEY NSEC3PARAM "
    ";{flags: optout}\n"
    "CK0POJMG874LJREF7EFN8430QVIT8BSM.com.\t86398 IN RRSIG NSEC3 8 2 86400 "
    "20220827042408 20220820031408 32298 com. "
    "DtbwR2L5wFUarqJkJIZuhJi03Kf+24qeQsxH0OZRKQED\n"
    "    QMP9HAojgZWCx0UstF6MpmLu1ksizKkG35LexZQOqt3C\n"
    "    2168e5tMVpNaXmcAfL7ZZMXB9M/pf2ngxyiVzRkMQ8cW\n"
    "    31nYQYGrAqgiE0fYgfp99fIvxmlWghanFpGeCnPKZF15\n"
    "    4TdIjMmlCdzc6cvodgw1iY4cYYKxWyo5+t81pw== \n"
    "    ;{id = 32298}\n"
    "END_RRSET_CACHE\n"
    "START_MSG_CACHE\n"
    "msg . IN NS 32896 1 86398 0 1 0 26\n"
    ". IN NS 0\n"
    "m.root-servers.net. IN A 0\n"
    "l.root-servers.net. IN A 0\n"
    "k.root-servers.net. IN A 0\n"
    "END_MSG_CACHE\n"
    "EOF\n";

const std::string kUnboundSignature =
    "NSEC3 8 2 86400 20220827042408 20220820031408 32298 com. "
    "DtbwR2L5wFUarqJkJIZuhJi03Kf+24qeQsxH0OZRKQED "
    "QMP9HAojgZWCx0UstF6MpmLu1ksizKkG35LexZQOqt3C "
    "2168e5tMVpNaXmcAfL7ZZMXB9M/pf2ngxyiVzRkMQ8cW "
    "31nYQYGrAqgiE0fYgfp99fIvxmlWghanFpGeCnPKZF15 "
    "4TdIjMmlCdzc6cvodgw1iY4cYYKxWyo5+t81pw==";

const std::string kUnboundCanonical =
    "{\".\":["
    "{\"name\":\".\",\"class\":\"IN\",\"type\":\"NS\",\"ttl\":\"86398\","
    "\"rdata\":\"j.root-servers.net.\"},"
    "{\"name\":\".\",\"class\":\"IN\",\"type\":\"NS\",\"ttl\":\"86398\","
    "\"rdata\":\"e.root-servers.net.\"},"
    "{\"name\":\".\",\"class\":\"IN\",\"type\":\"NS\",\"ttl\":\"86398\","
    "\"rdata\":\"h.root-servers.net.\"}],"
    "\"ck0pojmg874ljref7efn8430qvit8bsm.com.\":["
    "{\"name\":\"ck0pojmg874ljref7efn8430qvit8bsm.com.\",\"class\":\"IN\","
    "\"type\":\"NSEC3\",\"ttl\":\"86398\",\"rdata\":\"1 1 0 - "
    "ck0q2d6ni4i7eqh8na30ns61o48ul8g5 NS SOA RRSIG DNSKEY NSEC3PARAM\"},"
    "{\"name\":\"ck0pojmg874ljref7efn8430qvit8bsm.com.\",\"class\":\"IN\","
    "\"type\":\"RRSIG\",\"ttl\":\"86398\",\"rdata\":\"" +
    kUnboundSignature + "\"}]}";

// Captured dump with record/negative/packet cache sections and two ttl
// columns, "owner ttl remaining IN TYPE rdata ; meta" per line.
const std::string kPowerdnsDump =
    "; main record cache dump follows\n"
    ";\n"
    "c.root-servers.net. 86400 86395 IN AAAA 2001:500:2::c ; (Indeterminate) "
    "auth=0 zone=. from=198.97.190.53  \n"
    "c.root-servers.net. 86400 86395 IN A 192.33.4.12 ; (Indeterminate) "
    "auth=0 zone=. from=198.97.190.53  \n"
    "com. 86400 86395 IN NS a.gtld-servers.net. ; (Indeterminate) auth=0 "
    "zone=. from=193.0.14.129  \n"
    "net. 86400 86395 IN NS i.gtld-servers.net. ; (Indeterminate) auth=1 "
    "zone=net from=192.35.51.30  \n"
    "m.gtld-servers.net. 86400 86395 IN A 192.55.83.30 ; (Indeterminate) "
    "auth=0 zone=. from=193.0.14.129  \n"
    "; negcache dump follows\n"
    ";\n"
    "secpoll.powerdns.com. 3595 IN A VIA secpoll.powerdns.com. ; "
    "(Indeterminate) \n"
    "; main packet cache dump from thread follows\n";

const std::string kPowerdnsCanonical =
    "{\"c.root-servers.net.\":["
    "{\"name\":\"c.root-servers.net.\",\"class\":\"IN\",\"type\":\"AAAA\","
    "\"ttl\":\"86400\",\"rdata\":\"2001:500:2::c\"},"
    "{\"name\":\"c.root-servers.net.\",\"class\":\"IN\",\"type\":\"A\","
    "\"ttl\":\"86400\",\"rdata\":\"192.33.4.12\"}],"
    "\"com.\":[{\"name\":\"com.\",\"class\":\"IN\",\"type\":\"NS\","
    "\"ttl\":\"86400\",\"rdata\":\"a.gtld-servers.net.\"}],"
    "\"net.\":[{\"name\":\"net.\",\"class\":\"IN\",\"type\":\"NS\","
    "\"ttl\":\"86400\",\"rdata\":\"i.gtld-servers.net.\"}],"
    "\"m.gtld-servers.net.\":[{\"name\":\"m.gtld-servers.net.\","
    "\"class\":\"IN\",\"type\":\"A\",\"ttl\":\"86400\","
    "\"rdata\":\"192.55.83.30\"}]}";

// Captured JSON dump: names without trailing dots, decorated ttl strings,
// type-specific rData value fields, extra metadata to ignore.
const std::string kTechnitiumDump = R"JSON({
    "com": [
        {
            "name": "com",
            "type": "NS",
            "ttl": "172800 (2 days)",
            "rData": {
                "nameServer": "a.gtld-servers.net",
                "parentSideTtl": "86400 (1 day)"
            },
            "glueRecords": "192.5.6.30, 2001:503:a83e::2:30",
            "dnssecStatus": "Disabled",
            "lastUsedOn": "2023-01-23T17:51:38.320631Z"
        }
    ],
    "stephane.ns.cloudflare.com": [
        {
            "name": "stephane.ns.cloudflare.com",
            "type": "A",
            "ttl": "86353 (23 hours 59 mins 13 sec)",
            "rData": {
                "ipAddress": "108.162.194.112"
            },
            "dnssecStatus": "Disabled",
            "lastUsedOn": "2023-01-23T17:51:38.3435062Z"
        }
    ]
})JSON";

const std::string kTechnitiumCanonical =
    "{\"com.\":[{\"name\":\"com.\",\"class\":\"IN\",\"type\":\"NS\","
    "\"ttl\":\"172800\",\"rdata\":\"a.gtld-servers.net.\"}],"
    "\"stephane.ns.cloudflare.com.\":["
    "{\"name\":\"stephane.ns.cloudflare.com.\",\"class\":\"IN\","
    "\"type\":\"A\",\"ttl\":\"86353\",\"rdata\":\"108.162.194.112\"}]}";

UnifiedRecord rec(const std::string& name, std::uint16_t type,
                  std::uint32_t ttl, const std::string& rdata) {
  return {name, dns::rrclass::kIn, type, ttl, rdata};
}

}  // namespace

TEST_CASE("BIND-style dumps normalize owner inheritance and folded rdata") {
  UnifiedCache c = parse_bind_cache(kBindDump);
  REQUIRE(c.size() == 5);
  CHECK(c[0] == rec(".", dns::rrtype::kNs, 518399, "a.root-servers.net."));
  CHECK(c[1] == rec(".", dns::rrtype::kNs, 518399, "b.root-servers.net."));
  CHECK(c[2] == rec("app.", dns::rrtype::kNs, 172799,
                    "ns-tld1.charlestonroadregistry.com."));
  CHECK(c[3] == rec("app.", dns::rrtype::kNs, 172799,
                    "ns-tld2.charlestonroadregistry.com."));
  CHECK(c[4] == rec("app.", dns::rrtype::kDs, 86399,
                    "23684 8 2 3A5CC8A31E02C94ABA6461912FABB7E9F5E3 "
                    "4957BB6114A55A864D96AEC31836"));
  CHECK(cache_to_json(c).dump() == kBindCanonical);
}

TEST_CASE("Unbound-style dumps normalize sections, comments, continuations") {
  UnboundCache u = parse_unbound_cache(kUnboundDump);
  REQUIRE(u.records.size() == 5);
  CHECK(u.records[0] == rec(".", dns::rrtype::kNs, 86398, "j.root-servers.net."));
  CHECK(u.records[1] == rec(".", dns::rrtype::kNs, 86398, "e.root-servers.net."));
  CHECK(u.records[2] == rec(".", dns::rrtype::kNs, 86398, "h.root-servers.net."));
  CHECK(u.records[3] ==
        rec("ck0pojmg874ljref7efn8430qvit8bsm.com.", dns::rrtype::kNsec3, 86398,
            "1 1 0 - ck0q2d6ni4i7eqh8na30ns61o48ul8g5 NS SOA RRSIG DNSKEY "
            "NSEC3PARAM"));
  CHECK(u.records[4] == rec("ck0pojmg874ljref7efn8430qvit8bsm.com.",
                            dns::rrtype::kRrsig, 86398, kUnboundSignature));
  CHECK(u.msg_cache_entries == 1);
  CHECK(cache_to_json(u.records).dump() == kUnboundCanonical);
}

TEST_CASE("record-cache dumps keep the first ttl and drop other sections") {
  UnifiedCache c = parse_powerdns_cache(kPowerdnsDump);
  REQUIRE(c.size() == 5);
  CHECK(c[0] == rec("c.root-servers.net.", dns::rrtype::kAaaa, 86400,
                    "2001:500:2::c"));
  CHECK(c[1] == rec("c.root-servers.net.", dns::rrtype::kA, 86400,
                    "192.33.4.12"));
  CHECK(c[2] == rec("com.", dns::rrtype::kNs, 86400, "a.gtld-servers.net."));
  CHECK(c[3] == rec("net.", dns::rrtype::kNs, 86400, "i.gtld-servers.net."));
  CHECK(c[4] == rec("m.gtld-servers.net.", dns::rrtype::kA, 86400,
                    "192.55.83.30"));
  CHECK(cache_to_json(c).dump() == kPowerdnsCanonical);
}

TEST_CASE("JSON dumps map value fields and qualify names") {
  UnifiedCache c = parse_technitium_cache(kTechnitiumDump);
  REQUIRE(c.size() == 2);
  CHECK(c[0] == rec("com.", dns::rrtype::kNs, 172800, "a.gtld-servers.net."));
  CHECK(c[1] == rec("stephane.ns.cloudflare.com.", dns::rrtype::kA, 86353,
                    "108.162.194.112"));
  CHECK(cache_to_json(c).dump() == kTechnitiumCanonical);

  // The parser is strict: trailing commas are malformed input, not data.
  std::string with_trailing_comma =
      "{\"com\": [{\"name\": \"com\", \"type\": \"A\", \"ttl\": \"5\", "
      "\"rData\": {\"ipAddress\": \"1.2.3.4\"},}]}";
  CHECK_THROWS(parse_technitium_cache(with_trailing_comma));
}

TEST_CASE("cache JSON round-trips through the owner-grouped form") {
  UnifiedCache c = parse_bind_cache(kBindDump);
  UnifiedCache back = cache_from_json(cache_to_json(c));
  CHECK(back == c);

  // Interleaved owners regroup by first appearance.
  UnifiedCache mixed = {rec("b.example.", dns::rrtype::kA, 60, "1.1.1.1"),
                        rec("a.example.", dns::rrtype::kA, 60, "2.2.2.2"),
                        rec("b.example.", dns::rrtype::kTxt, 60, "x")};
  auto j = cache_to_json(mixed);
  auto it = j.begin();
  CHECK(it.key() == "b.example.");
  CHECK((++it).key() == "a.example.");
  CHECK(j["b.example."].size() == 2);
  UnifiedCache regrouped = cache_from_json(j);
  REQUIRE(regrouped.size() == 3);
  CHECK(regrouped[0] == mixed[0]);
  CHECK(regrouped[1] == mixed[2]);  // grouped under the first owner
  CHECK(regrouped[2] == mixed[1]);
}

TEST_CASE("unknown type codes render and parse as generic mnemonics") {
  UnifiedCache c = {rec("x.", 123, 30, "aabb")};
  auto j = cache_to_json(c);
  CHECK(j["x."][0]["type"] == "TYPE123");
  CHECK(cache_from_json(j) == c);
}

TEST_CASE("log events match lines in order with first rule winning") {
  std::vector<LogEventRule> rules = {
      {"sanitize-record", "SANITIZE_RECORD"},
      {"sanitize-any", "SANITIZE_"},
      {"lookup", "CACHE_LOOKUP name=\\S+"},
  };
  std::string log =
      "ts=1 SANITIZE_RECORD dropped out-of-bailiwick record\n"
      "ts=2 CACHE_LOOKUP name=a.example.com. type=1\n"
      "ts=3 SANITIZE_QUERY rewrote flags\n"
      "plain noise line\n"
      "ts=4 SANITIZE_RECORD dropped unparseable rdata\n";
  auto events = match_log_events(log, rules);
  REQUIRE(events.size() == 4);
  CHECK(events[0] == "sanitize-record");
  CHECK(events[1] == "lookup");
  CHECK(events[2] == "sanitize-any");
  CHECK(events[3] == "sanitize-record");

  CHECK(match_log_events("", rules).empty());
  CHECK(match_log_events("nothing relevant\n", rules).empty());
}

TEST_CASE("traffic summaries reduce a packet list to the fixed metrics") {
  std::vector<PacketEvent> packets = {
      {0.000, "client", "resolver", 40},
      {0.010, "resolver", "ns:10.53.0.1", 45},
      {0.020, "ns:10.53.0.1", "resolver", 500},
      {0.030, "resolver", "ns:10.53.0.9", 45},
      {0.045, "ns:10.53.0.9", "resolver", 1200},
      {0.050, "resolver", "client", 800},
  };
  TrafficSummary s = summarize_traffic(packets, 5.0);
  CHECK(s.resolver_query_count == 2);
  CHECK(s.max_response_size == 1200);
  CHECK(s.bytes_resolver_to_client == 800);
  CHECK(s.bytes_ns_to_resolver == 1700);
  CHECK(s.resolution_time == doctest::Approx(0.050));
  CHECK(!s.timed_out);

  // No answer to the client: the timeout is the resolution time.
  std::vector<PacketEvent> unanswered(packets.begin(), packets.end() - 1);
  TrafficSummary t = summarize_traffic(unanswered, 5.0);
  CHECK(t.resolver_query_count == 2);
  CHECK(t.bytes_resolver_to_client == 0);
  CHECK(t.bytes_ns_to_resolver == 1700);
  CHECK(t.timed_out);
  CHECK(t.resolution_time == doctest::Approx(5.0));

  // Multiple answers: the last one closes the clock.
  std::vector<PacketEvent> multi = packets;
  multi.push_back({0.090, "resolver", "client", 100});
  TrafficSummary m = summarize_traffic(multi, 5.0);
  CHECK(m.bytes_resolver_to_client == 900);
  CHECK(m.resolution_time == doctest::Approx(0.090));

  CHECK(summarize_traffic({}, 2.5).bytes_ns_to_resolver == 0);
  CHECK(summarize_traffic({}, 2.5).timed_out);
  CHECK(summarize_traffic({}, 2.5).resolution_time == doctest::Approx(2.5));
}

TEST_CASE("trace records serialize to JSON and back without loss") {
  TraceRecord t;
  t.case_id = 42;
  t.adapter = "reference-a";
  t.alive = false;
  t.cache = parse_powerdns_cache(kPowerdnsDump);
  t.log_events = {"sanitize-record", "lookup"};
  t.traffic = {3, 1200, 800, 1700, 0.05, false};
  t.response_hex = "0001828000010000";

  auto j = trace_to_json(t);
  TraceRecord back = trace_from_json(j);
  CHECK(back == t);
  CHECK(j.at("case_id") == 42);
  CHECK(j.at("adapter") == "reference-a");
  CHECK(j.at("alive") == false);
  CHECK(j.at("cache").dump() == kPowerdnsCanonical);

  // JSONL: one compact line per record, parseable back.
  std::string line = j.dump();
  CHECK(line.find('\n') == std::string::npos);
  TraceRecord reparsed = trace_from_json(nlohmann::ordered_json::parse(line));
  CHECK(reparsed == t);

  // A dump-incapable adapter leaves the cache absent, and a timed-out case
  // has no response octets; both round-trip through omitted keys.
  TraceRecord bare;
  bare.case_id = 7;
  bare.adapter = "no-dump";
  bare.cache_present = false;
  bare.traffic.timed_out = true;
  bare.traffic.resolution_time = 5.0;
  auto bj = trace_to_json(bare);
  CHECK(!bj.contains("cache"));
  CHECK(!bj.contains("response_hex"));
  TraceRecord bare_back = trace_from_json(bj);
  CHECK(bare_back == bare);
  CHECK(!bare_back.cache_present);
}

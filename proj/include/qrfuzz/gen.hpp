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

// Test-case generation: paired client query and response template drawn
// from the built-in grammars, followed by an optional byte-level mutation
// pass. A case is a pure function of (campaign seed, case id), independent
// of which worker unit executes it.

#ifndef QRFUZZ_GEN_HPP_
#define QRFUZZ_GEN_HPP_

#include <nlohmann/json.hpp>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qrfuzz/common.hpp"
#include "qrfuzz/dns.hpp"
#include "qrfuzz/grammar.hpp"

namespace qrfuzz::gen {

enum class Mode { kRecursiveOnly, kForwardOnly, kCdnsFallback, kCdnsNoFallback };

const char* mode_name(Mode mode);
std::optional<Mode> mode_from_name(const std::string& name);
// The client-facing test domain a campaign in this mode queries under.
dns::DnsName default_base_domain(Mode mode);

// One byte-level edit applied to a single field's octet string. Deleting or
// replacing inside an empty field is recorded as op "skip" (no edit).
struct MutationEntry {
  std::string field;  // "query/qname", "response/answer[1]/rdata", ...
  std::string op;     // add | delete | replace | skip
  std::size_t offset = 0;
  std::uint8_t byte = 0;

  friend bool operator==(const MutationEntry&, const MutationEntry&) = default;
};

// The five bytes a mutation can insert or write: '.', NUL, '@', '/', '\'.
inline constexpr std::uint8_t kMutationBytes[5] = {0x2e, 0x00, 0x40, 0x2f, 0x5c};
// Fraction of cases that receive a mutation.
inline constexpr double kMutationGate = 0.1;

// Applies one edit in place. op must not be "skip".
void apply_mutation(Bytes& field, const std::string& op, std::size_t offset,
                    std::uint8_t byte);

// A response record plus the generator choices that produced it. The record
// keeps its pre-mutation content; mutations act on the wire fragments.
struct RecordMeta {
  dns::ResourceRecord record;   // stored rdlength may differ from rdata size
  std::size_t name_class = 0;   // NAME alternative index
  std::size_t type_class = 0;   // TYPE alternative index (0 = queried type)
  std::size_t rdlength_class = 0;  // 0 exact, 1 inflated, 2 deflated
};

// Serve-time material for the attacker-controlled response. The transaction
// id and question section are copied from the resolver's query when the
// response is composed, so they are not part of the template.
struct ResponseTemplate {
  dns::Flags flags;             // pre-mutation structured view
  std::uint16_t ancount = 0;
  std::uint16_t nscount = 0;
  std::uint16_t arcount = 0;
  std::vector<RecordMeta> answer;      // sizes match the counts
  std::vector<RecordMeta> authority;
  std::vector<RecordMeta> additional;
  std::string rcode_name;       // mnemonic incl. extended codes (16..23)

  // Post-mutation wire fragments, composed at serve time.
  Bytes flags_bytes;            // 2 octets
  Bytes ancount_bytes, nscount_bytes, arcount_bytes;  // 2 octets each
  Bytes section_bytes;          // all records, answer/authority/additional
};

struct TestCase {
  std::uint64_t id = 0;
  std::uint64_t seed = 0;       // mix of campaign seed and id
  bool mutated = false;
  std::vector<MutationEntry> mutation_log;

  dns::DnsMessage query;        // pre-mutation fields; raw_override when edited
  Bytes query_wire;             // final octets sent to the resolver
  std::string query_rcode_name;
  ResponseTemplate response;

  // Chosen alternative per multi-way rule, for distribution reporting.
  std::map<std::string, std::size_t> query_choices;     // OPCODE RCODE QNAME QTYPE
  std::map<std::string, std::size_t> response_choices;  // OPCODE RCODE ANCOUNT ...
};

// Owns the two built-in grammars with all parameterized generators
// installed (name synthesis, record data synthesis, length draws).
class Generator {
 public:
  explicit Generator(dns::DnsName base_domain);

  const dns::DnsName& base_domain() const { return base_domain_; }
  const grammar::Grammar& query_grammar() const { return query_; }
  const grammar::Grammar& response_grammar() const { return response_; }

  // Samples one unmutated client query (the first half of generate_case).
  dns::DnsMessage sample_query(std::uint64_t seed) const;

  // The full pipeline: query, response template, mutation pass, wire
  // composition. Deterministic in (campaign_seed, case_id).
  TestCase generate_case(std::uint64_t campaign_seed, std::uint64_t case_id) const;

 private:
  dns::DnsName base_domain_;
  grammar::Grammar query_;
  grammar::Grammar response_;
};

// Installs the parameterized generator functions into a grammar loaded from
// the built-in texts (exposed for grammar-level tests and custom files).
void install_query_generators(grammar::Grammar& g);
void install_response_generators(grammar::Grammar& g);

// Synthesizes record data for a type code using ctx's rng and names;
// returns the raw octets (address bytes, embedded names, char-strings...).
Bytes synthesize_rdata(grammar::SampleContext& ctx, std::uint16_t type);

nlohmann::json test_case_to_json(const TestCase& c);
TestCase test_case_from_json(const nlohmann::json& j);

}  // namespace qrfuzz::gen

#endif  // QRFUZZ_GEN_HPP_

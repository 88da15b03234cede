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

// Probabilistic context-free grammar engine: weighted alternatives with
// exact rational probabilities, seeded sampling, validation, a plain-text
// rule format, and the two built-in message grammars.
//
// Text format, one rule per line, '//' comments:
//   <lhs> ::= alt | alt | alt
// An alternative is a sequence of symbols, optionally followed by a
// probability annotation [.80]. Symbols: <Name> references a rule,
// (free text) names a parameterized generator, "" is the empty sequence,
// any other token is a literal terminal. <Name>*3 repeats a reference.
// Unannotated alternatives share the residual probability mass equally.

#ifndef QRFUZZ_GRAMMAR_HPP_
#define QRFUZZ_GRAMMAR_HPP_

#include <boost/rational.hpp>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qrfuzz/common.hpp"
#include "qrfuzz/dns.hpp"

namespace qrfuzz::grammar {

using Prob = boost::rational<long long>;

class GrammarError : public std::runtime_error {
 public:
  enum class Kind { kParse, kRunawayDerivation, kUnknownRule };
  GrammarError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct Symbol {
  enum class Kind { kNonterminal, kTerminal, kGenerator };
  Kind kind = Kind::kTerminal;
  std::string name;  // rule name, terminal text, or generator key
  friend bool operator==(const Symbol&, const Symbol&) = default;
};

struct Alternative {
  std::vector<Symbol> symbols;  // empty = epsilon
  Prob probability{0};
  bool annotated = false;
};

struct Rule {
  std::string lhs;
  std::vector<Alternative> alternatives;
  Prob probability_sum() const;
};

// Mutable state threaded through one sampling stream. Not shareable across
// concurrent streams; construct one per stream from a seed.
struct SampleContext {
  Rng rng;
  dns::DnsName base_domain;
  dns::DnsName queried_name;
  std::uint16_t queried_type = 1;
  std::uint16_t current_record_type = 1;  // set while a record is synthesized
  std::size_t rdata_length = 0;           // set for length-dependent draws

  explicit SampleContext(std::uint64_t seed, dns::DnsName base = {})
      : rng(seed), base_domain(std::move(base)) {}
};

// A parameterized terminal. Receives the sampling context and returns the
// produced value as text (octet-valued generators return hex).
using GeneratorFn = std::function<std::string(SampleContext&)>;

struct Grammar {
  std::string start;
  std::vector<Rule> rules;  // declaration order
  std::map<std::string, GeneratorFn> generators;

  const Rule* find(const std::string& lhs) const;
  const Rule& at(const std::string& lhs) const;  // throws kUnknownRule
};

struct Violation {
  std::string rule;
  std::string kind;  // probability-sum | nonpositive-probability |
                     // dangling-reference | unreachable-rule
  std::string detail;
};

// Zero violations = well-formed. Probability sums are checked exactly
// (rationals) against 1 with a 1e-9 tolerance for hand-authored files.
std::vector<Violation> validate(const Grammar& g);

// Parses the text format. Throws GrammarError(kParse) with a line number.
// The first rule is the start symbol.
Grammar load_grammar_text(const std::string& text);

// Scales every alternative of one rule by 1/sum so the rule sums to 1.
// Used explicitly by built-in rules whose written annotations do not
// add up; never applied implicitly by the loader.
void normalize_rule(Grammar& g, const std::string& lhs);

struct DerivationStep {
  std::string path;  // "query/Header/Flags/OPCODE" style, with [i] on repeats
  std::string lhs;
  std::size_t alternative = 0;
  // Flattened terminal/generator values produced by the whole subtree, in
  // expansion order. Generators without a registered function contribute
  // "<key>" placeholders (sampling is total either way).
  std::vector<std::string> values;
};

struct Derivation {
  std::vector<DerivationStep> steps;  // pre-order

  const DerivationStep* first(const std::string& lhs) const;
  std::vector<const DerivationStep*> all(const std::string& lhs) const;
  // Joined values of the first step for lhs; "" when absent.
  std::string value(const std::string& lhs) const;
};

inline constexpr int kMaxDerivationDepth = 64;

// Expands from g.start / from lhs. Deterministic given the context's seed
// and fields. Throws GrammarError(kRunawayDerivation) past depth 64.
Derivation sample(const Grammar& g, SampleContext& ctx);
Derivation sample_from(const Grammar& g, const std::string& lhs,
                       SampleContext& ctx);

// Built-in grammars for the client query and the response template,
// embedded as text in the rule notation above. Generator functions for the
// parameterized terminals are installed by the test generator; the grammars
// load, validate, and sample without them.
const char* builtin_query_grammar_text();
const char* builtin_response_grammar_text();
Grammar load_builtin_query_grammar();
Grammar load_builtin_response_grammar();

}  // namespace qrfuzz::grammar

#endif  // QRFUZZ_GRAMMAR_HPP_

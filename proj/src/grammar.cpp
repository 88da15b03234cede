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

#include "qrfuzz/grammar.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>

namespace qrfuzz::grammar {

namespace {

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  throw GrammarError(GrammarError::Kind::kParse,
                     "line " + std::to_string(line) + ": " + what);
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Truncates at the first "//" that sits outside parentheses and quotes.
std::string strip_comment(const std::string& line) {
  int depth = 0;
  bool quoted = false;
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') quoted = false;
      continue;
    }
    if (c == '"') quoted = true;
    else if (c == '(') ++depth;
    else if (c == ')') --depth;
    else if (c == '/' && line[i + 1] == '/' && depth == 0) {
      return line.substr(0, i);
    }
  }
  return line;
}

// Splits on '|' outside parentheses and quotes.
std::vector<std::string> split_alternatives(const std::string& rhs) {
  std::vector<std::string> parts;
  std::string cur;
  int depth = 0;
  bool quoted = false;
  for (char c : rhs) {
    if (quoted) {
      cur.push_back(c);
      if (c == '"') quoted = false;
      continue;
    }
    if (c == '"') quoted = true;
    else if (c == '(') ++depth;
    else if (c == ')') --depth;
    if (c == '|' && depth == 0) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

// Parses "[.80]"-style content (brackets removed) into an exact rational.
Prob parse_probability(const std::string& body, std::size_t line) {
  std::string s = trim(body);
  if (s.empty()) parse_fail(line, "empty probability annotation");
  long long int_part = 0, frac_part = 0, frac_scale = 1;
  std::size_t i = 0;
  bool any_digit = false;
  for (; i < s.size() && s[i] >= '0' && s[i] <= '9'; ++i) {
    int_part = int_part * 10 + (s[i] - '0');
    any_digit = true;
  }
  if (i < s.size()) {
    if (s[i] != '.') parse_fail(line, "bad probability annotation [" + s + "]");
    for (++i; i < s.size(); ++i) {
      if (s[i] < '0' || s[i] > '9') {
        parse_fail(line, "bad probability annotation [" + s + "]");
      }
      frac_part = frac_part * 10 + (s[i] - '0');
      frac_scale *= 10;
      any_digit = true;
    }
  }
  if (!any_digit) parse_fail(line, "bad probability annotation [" + s + "]");
  return Prob(int_part) + Prob(frac_part, frac_scale);
}

struct ParsedAlternative {
  Alternative alt;
  bool has_annotation = false;
};

ParsedAlternative parse_alternative(const std::string& text, std::size_t line) {
  ParsedAlternative out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  bool annotated = false;
  while (i < n) {
    char c = text[i];
    if (c == ' ' || c == '\t') {
      ++i;
      continue;
    }
    if (annotated) parse_fail(line, "probability annotation must end the alternative");
    if (c == '<') {
      std::size_t close = text.find('>', i + 1);
      if (close == std::string::npos) parse_fail(line, "unterminated '<'");
      std::string name = text.substr(i + 1, close - i - 1);
      if (name.empty()) parse_fail(line, "empty rule reference");
      i = close + 1;
      long long repeat = 1;
      if (i < n && text[i] == '*') {
        ++i;
        std::size_t start = i;
        while (i < n && text[i] >= '0' && text[i] <= '9') ++i;
        if (i == start) parse_fail(line, "'*' must be followed by a count");
        repeat = std::strtoll(text.substr(start, i - start).c_str(), nullptr, 10);
        if (repeat < 1) parse_fail(line, "repetition count must be positive");
      }
      for (long long r = 0; r < repeat; ++r) {
        out.alt.symbols.push_back({Symbol::Kind::kNonterminal, name});
      }
    } else if (c == '(') {
      int depth = 1;
      std::size_t j = i + 1;
      for (; j < n && depth > 0; ++j) {
        if (text[j] == '(') ++depth;
        else if (text[j] == ')') --depth;
      }
      if (depth != 0) parse_fail(line, "unterminated '('");
      std::string key = trim(text.substr(i + 1, j - i - 2));
      if (key.empty()) parse_fail(line, "empty generator");
      out.alt.symbols.push_back({Symbol::Kind::kGenerator, key});
      i = j;
    } else if (c == '"') {
      std::size_t close = text.find('"', i + 1);
      if (close == std::string::npos) parse_fail(line, "unterminated '\"'");
      std::string literal = text.substr(i + 1, close - i - 1);
      if (!literal.empty()) {
        out.alt.symbols.push_back({Symbol::Kind::kTerminal, literal});
      }
      i = close + 1;
    } else if (c == '[') {
      std::size_t close = text.find(']', i + 1);
      if (close == std::string::npos) parse_fail(line, "unterminated '['");
      out.alt.probability = parse_probability(text.substr(i + 1, close - i - 1), line);
      out.alt.annotated = true;
      out.has_annotation = true;
      annotated = true;
      i = close + 1;
    } else {
      std::size_t j = i;
      while (j < n && text[j] != ' ' && text[j] != '\t' && text[j] != '<' &&
             text[j] != '(' && text[j] != '"' && text[j] != '[') {
        ++j;
      }
      out.alt.symbols.push_back({Symbol::Kind::kTerminal, text.substr(i, j - i)});
      i = j;
    }
  }
  return out;
}

void assign_residual_mass(Rule& rule, std::size_t line) {
  Prob annotated_sum{0};
  long long unannotated = 0;
  for (const auto& alt : rule.alternatives) {
    if (alt.annotated) annotated_sum += alt.probability;
    else ++unannotated;
  }
  if (unannotated == 0) return;
  Prob share = (Prob(1) - annotated_sum) / unannotated;
  (void)line;
  for (auto& alt : rule.alternatives) {
    if (!alt.annotated) alt.probability = share;
  }
}

struct Sampler {
  const Grammar& g;
  SampleContext& ctx;
  Derivation out;

  std::size_t expand(const std::string& lhs, const std::string& path, int depth) {
    if (depth > kMaxDerivationDepth) {
      throw GrammarError(GrammarError::Kind::kRunawayDerivation,
                         "derivation exceeded depth " +
                             std::to_string(kMaxDerivationDepth) + " at <" +
                             lhs + ">");
    }
    const Rule& rule = g.at(lhs);
    std::size_t alt_index = 0;
    if (rule.alternatives.empty()) {
      throw GrammarError(GrammarError::Kind::kUnknownRule,
                         "rule <" + lhs + "> has no alternatives");
    }
    if (rule.alternatives.size() > 1) {
      double u = ctx.rng.unit();
      double cum = 0.0;
      alt_index = rule.alternatives.size() - 1;
      for (std::size_t i = 0; i < rule.alternatives.size(); ++i) {
        cum += boost::rational_cast<double>(rule.alternatives[i].probability);
        if (u < cum) {
          alt_index = i;
          break;
        }
      }
    }
    out.steps.push_back({path, lhs, alt_index, {}});
    const std::size_t my_index = out.steps.size() - 1;

    std::vector<std::string> values;
    std::map<std::string, int> child_counts;
    for (const Symbol& sym : rule.alternatives[alt_index].symbols) {
      switch (sym.kind) {
        case Symbol::Kind::kTerminal:
          values.push_back(sym.name);
          break;
        case Symbol::Kind::kGenerator: {
          auto it = g.generators.find(sym.name);
          values.push_back(it != g.generators.end() ? it->second(ctx)
                                                    : "<" + sym.name + ">");
          break;
        }
        case Symbol::Kind::kNonterminal: {
          int repeat = child_counts[sym.name]++;
          std::string child_path = path + "/" + sym.name;
          if (repeat > 0) child_path += "[" + std::to_string(repeat) + "]";
          std::size_t child = expand(sym.name, child_path, depth + 1);
          const auto& child_values = out.steps[child].values;
          values.insert(values.end(), child_values.begin(), child_values.end());
          break;
        }
      }
    }
    out.steps[my_index].values = std::move(values);
    return my_index;
  }
};

// The client-query grammar. Annotated weights skew the draw toward
// well-formed queries; RCODE is normalized after loading because its
// annotations sum to 0.99 by construction.
constexpr const char* kQueryGrammar = R"GRAMMAR(
// Client query: header plus a single question.
<query> ::= <Header><Question>
<Header> ::= <TransactionID><Flags><Counts>
<TransactionID> ::= (randomly generated 2-byte hex value)
<Flags> ::= <QR><OPCODE><AA><TC><RD><RA><Z><AD><CD><RCODE>
<QR> ::= 0
<OPCODE> ::= QUERY[.80] | IQUERY | STATUS | NOTIFY | UPDATE | DSO
<AA> ::= 0 | 1
<TC> ::= 0 | 1
<RD> ::= 0 | 1
<RA> ::= 0 | 1
<Z> ::= 0 | 1
<AD> ::= 0 | 1
<CD> ::= 0 | 1
<RCODE> ::= NOERROR[.80] | FORMERR[.01] | SERVFAIL[.01] | NXDOMAIN[.01] | NOTIMP[.01] | REFUSED[.01] | YXDOMAIN[.01] | YXRRSET[.01] | NXRRSET[.01] | NOTAUTH[.01] | NOTZONE[.01] | DSOTYPENI[.01] | BADVERS[.01] | BADKEY[.01] | BADTIME[.01] | BADMODE[.01] | BADNAME[.01] | BADALG[.01] | BADTRUNC[.01] | BADCOOKIE[.01]
<Counts> ::= <QDCOUNT><ANCOUNT><NSCOUNT><ARCOUNT>
<QDCOUNT> ::= 1
<ANCOUNT> ::= 0
<NSCOUNT> ::= 0
<ARCOUNT> ::= 0
<Question> ::= <QNAME><QTYPE><QCLASS>
<QNAME> ::= (base domain)[.40] | (sub-domain)[.40] | (2-9th sub-domain)[.10] | (10-max sub-domain)[.10]
<QTYPE> ::= A | NS | CNAME | SOA | PTR | MX | TXT | AAAA | SRV | ANY | RRSIG
<QCLASS> ::= IN
)GRAMMAR";

// The response-template grammar. The transaction id and question section
// are filled at serve time from the resolver's query, so they do not
// appear here. Record counts and section shapes are sampled separately and
// reconciled by the test generator.
constexpr const char* kResponseGrammar = R"GRAMMAR(
// Response template: header flags, counts, and up to five records per section.
<response> ::= <Header><Answer><Authority><Additional>
<Header> ::= <Flags><Counts>
<Flags> ::= <QR><OPCODE><AA><TC><RD><RA><Z><AD><CD><RCODE>
<QR> ::= 1
<OPCODE> ::= QUERY[.80] | IQUERY | STATUS | NOTIFY | UPDATE | DSO
<AA> ::= 0 | 1
<TC> ::= 0 | 1
<RD> ::= 0 | 1
<RA> ::= 0 | 1
<Z> ::= 0 | 1
<AD> ::= 0 | 1
<CD> ::= 0 | 1
<RCODE> ::= NOERROR[.80] | FORMERR[.01] | SERVFAIL[.01] | NXDOMAIN[.01] | NOTIMP[.01] | REFUSED[.01] | YXDOMAIN[.01] | YXRRSET[.01] | NXRRSET[.01] | NOTAUTH[.01] | NOTZONE[.01] | DSOTYPENI[.01] | BADVERS[.01] | BADKEY[.01] | BADTIME[.01] | BADMODE[.01] | BADNAME[.01] | BADALG[.01] | BADTRUNC[.01] | BADCOOKIE[.01]
<Counts> ::= <ANCOUNT><NSCOUNT><ARCOUNT>
<ANCOUNT> ::= 0 | 1 | 2 | 3 | 4 | 5
<NSCOUNT> ::= 0 | 1 | 2 | 3 | 4 | 5
<ARCOUNT> ::= 0 | 1 | 2 | 3 | 4 | 5
<Answer> ::= "" | <Record> | <Record>*2 | <Record>*3 | <Record>*4 | <Record>*5
<Authority> ::= "" | <Record> | <Record>*2 | <Record>*3 | <Record>*4 | <Record>*5
<Additional> ::= "" | <Record> | <Record>*2 | <Record>*3 | <Record>*4 | <Record>*5
<Record> ::= <NAME><TYPE><CLASS><TTL><RDLENGTH><RDATA>
<NAME> ::= (domain queried)[.20] | (sub-domain of the queried domain)[.20] | (same-level domain)[.20] | (parent domain)[.20] | (unrelated domain)[.20]
<TYPE> ::= (TYPE queried)[.50] | A[.05] | NS[.05] | CNAME[.05] | SOA[.05] | PTR[.05] | MX[.05] | TXT[.05] | AAAA[.05] | SRV[.05] | RRSIG[.05]
<CLASS> ::= IN
<TTL> ::= 60
<RDLENGTH> ::= (length of <RDATA>)[.90] | (random value in [length, 2*length])[.05] | (random value in [0, length])[.05]
<RDATA> ::= (randomly generated data decided by <TYPE>)
)GRAMMAR";

}  // namespace

Prob Rule::probability_sum() const {
  Prob sum{0};
  for (const auto& alt : alternatives) sum += alt.probability;
  return sum;
}

const Rule* Grammar::find(const std::string& lhs) const {
  for (const auto& rule : rules) {
    if (rule.lhs == lhs) return &rule;
  }
  return nullptr;
}

const Rule& Grammar::at(const std::string& lhs) const {
  const Rule* r = find(lhs);
  if (r == nullptr) {
    throw GrammarError(GrammarError::Kind::kUnknownRule,
                       "no rule <" + lhs + ">");
  }
  return *r;
}

std::vector<Violation> validate(const Grammar& g) {
  std::vector<Violation> out;
  std::set<std::string> defined;
  for (const auto& rule : g.rules) defined.insert(rule.lhs);

  for (const auto& rule : g.rules) {
    Prob sum = rule.probability_sum();
    if (sum != Prob(1) &&
        std::abs(boost::rational_cast<double>(sum) - 1.0) > 1e-9) {
      std::ostringstream os;
      os << "probabilities sum to " << boost::rational_cast<double>(sum);
      out.push_back({rule.lhs, "probability-sum", os.str()});
    }
    for (const auto& alt : rule.alternatives) {
      if (alt.probability <= Prob(0)) {
        out.push_back({rule.lhs, "nonpositive-probability",
                       "an alternative has probability <= 0"});
        break;
      }
    }
    std::set<std::string> missing;
    for (const auto& alt : rule.alternatives) {
      for (const auto& sym : alt.symbols) {
        if (sym.kind == Symbol::Kind::kNonterminal && !defined.count(sym.name)) {
          missing.insert(sym.name);
        }
      }
    }
    for (const auto& name : missing) {
      out.push_back({rule.lhs, "dangling-reference", "references <" + name + ">"});
    }
  }

  std::set<std::string> reachable;
  std::vector<std::string> frontier;
  if (defined.count(g.start)) {
    reachable.insert(g.start);
    frontier.push_back(g.start);
  }
  while (!frontier.empty()) {
    std::string lhs = frontier.back();
    frontier.pop_back();
    for (const auto& alt : g.at(lhs).alternatives) {
      for (const auto& sym : alt.symbols) {
        if (sym.kind == Symbol::Kind::kNonterminal && defined.count(sym.name) &&
            reachable.insert(sym.name).second) {
          frontier.push_back(sym.name);
        }
      }
    }
  }
  for (const auto& rule : g.rules) {
    if (!reachable.count(rule.lhs)) {
      out.push_back({rule.lhs, "unreachable-rule",
                     "not reachable from <" + g.start + ">"});
    }
  }
  return out;
}

Grammar load_grammar_text(const std::string& text) {
  Grammar g;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string line = text.substr(
        pos, eol == std::string::npos ? std::string::npos : eol - pos);
    pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
    ++line_no;

    line = trim(strip_comment(line));
    if (line.empty()) continue;

    std::size_t sep = line.find("::=");
    if (sep == std::string::npos) parse_fail(line_no, "expected '::='");
    std::string lhs = trim(line.substr(0, sep));
    if (lhs.size() < 3 || lhs.front() != '<' || lhs.back() != '>') {
      parse_fail(line_no, "rule name must be <Name>");
    }
    lhs = lhs.substr(1, lhs.size() - 2);
    if (!seen.insert(lhs).second) {
      parse_fail(line_no, "duplicate rule <" + lhs + ">");
    }

    Rule rule;
    rule.lhs = lhs;
    for (const auto& part : split_alternatives(line.substr(sep + 3))) {
      ParsedAlternative parsed = parse_alternative(part, line_no);
      if (parsed.alt.symbols.empty() && !parsed.has_annotation &&
          trim(part).empty()) {
        parse_fail(line_no, "empty alternative");
      }
      rule.alternatives.push_back(std::move(parsed.alt));
    }
    assign_residual_mass(rule, line_no);
    if (g.rules.empty()) g.start = rule.lhs;
    g.rules.push_back(std::move(rule));
  }
  return g;
}

void normalize_rule(Grammar& g, const std::string& lhs) {
  for (auto& rule : g.rules) {
    if (rule.lhs != lhs) continue;
    Prob sum = rule.probability_sum();
    if (sum == Prob(0)) return;
    for (auto& alt : rule.alternatives) alt.probability /= sum;
    return;
  }
  throw GrammarError(GrammarError::Kind::kUnknownRule, "no rule <" + lhs + ">");
}

const DerivationStep* Derivation::first(const std::string& lhs) const {
  for (const auto& step : steps) {
    if (step.lhs == lhs) return &step;
  }
  return nullptr;
}

std::vector<const DerivationStep*> Derivation::all(const std::string& lhs) const {
  std::vector<const DerivationStep*> out;
  for (const auto& step : steps) {
    if (step.lhs == lhs) out.push_back(&step);
  }
  return out;
}

std::string Derivation::value(const std::string& lhs) const {
  const DerivationStep* step = first(lhs);
  if (step == nullptr) return "";
  std::string joined;
  for (const auto& v : step->values) joined += v;
  return joined;
}

Derivation sample(const Grammar& g, SampleContext& ctx) {
  return sample_from(g, g.start, ctx);
}

Derivation sample_from(const Grammar& g, const std::string& lhs,
                       SampleContext& ctx) {
  Sampler sampler{g, ctx, {}};
  sampler.expand(lhs, lhs, 1);
  return std::move(sampler.out);
}

const char* builtin_query_grammar_text() { return kQueryGrammar; }
const char* builtin_response_grammar_text() { return kResponseGrammar; }

Grammar load_builtin_query_grammar() {
  Grammar g = load_grammar_text(kQueryGrammar);
  normalize_rule(g, "RCODE");
  return g;
}

Grammar load_builtin_response_grammar() {
  Grammar g = load_grammar_text(kResponseGrammar);
  normalize_rule(g, "RCODE");
  return g;
}

}  // namespace qrfuzz::grammar

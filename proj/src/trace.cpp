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

#include "qrfuzz/trace.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <regex>
#include <sstream>

namespace qrfuzz::trace {

namespace {

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) lines.push_back(cur);
  return lines;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> tokenize(const std::string& s) {
  std::vector<std::string> tokens;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

std::string join(const std::vector<std::string>& tokens, std::size_t from) {
  std::string out;
  for (std::size_t i = from; i < tokens.size(); ++i) {
    if (!out.empty()) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::string collapse_ws(const std::string& s) { return join(tokenize(s), 0); }

bool starts_indented(const std::string& raw) {
  return !raw.empty() && (raw[0] == ' ' || raw[0] == '\t');
}

bool all_digits(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isdigit(c);
  });
}

std::string normalize_name(const std::string& text) {
  try {
    return dns::DnsName::from_text(text).to_canonical_text();
  } catch (const dns::EncodeError&) {
    std::string s = lower_ascii(text);
    if (s.empty() || s.back() != '.') s += '.';
    return s;
  }
}

// Truncates at a ';' that starts the line or follows whitespace.
std::string strip_semicolon_comment(const std::string& line) {
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == ';' &&
        (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t')) {
      return line.substr(0, i);
    }
  }
  return line;
}

std::uint32_t parse_ttl(const std::string& s) {
  return static_cast<std::uint32_t>(std::strtoul(s.c_str(), nullptr, 10));
}

}  // namespace

nlohmann::ordered_json cache_to_json(const UnifiedCache& cache) {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (const auto& r : cache) {
    auto& group = out[r.name];
    if (group.is_null()) group = nlohmann::ordered_json::array();
    group.push_back({{"name", r.name},
                     {"class", dns::class_name(r.rclass)},
                     {"type", dns::type_name(r.type)},
                     {"ttl", std::to_string(r.ttl)},
                     {"rdata", r.rdata}});
  }
  return out;
}

UnifiedCache cache_from_json(const nlohmann::ordered_json& j) {
  UnifiedCache out;
  for (const auto& [owner, group] : j.items()) {
    (void)owner;
    for (const auto& e : group) {
      UnifiedRecord r;
      r.name = e.at("name").get<std::string>();
      r.rclass = dns::class_code(e.at("class").get<std::string>()).value_or(
          dns::rrclass::kIn);
      r.type = dns::type_code(e.at("type").get<std::string>()).value_or(0);
      r.ttl = parse_ttl(e.at("ttl").get<std::string>());
      r.rdata = e.at("rdata").get<std::string>();
      out.push_back(std::move(r));
    }
  }
  return out;
}

UnifiedCache parse_bind_cache(const std::string& text) {
  UnifiedCache out;
  std::string owner = ".";
  bool in_paren = false;
  for (const std::string& raw : split_lines(text)) {
    if (in_paren) {
      std::string t = trim(raw);
      bool closes = t.find(')') != std::string::npos;
      t.erase(std::remove(t.begin(), t.end(), '('), t.end());
      t.erase(std::remove(t.begin(), t.end(), ')'), t.end());
      std::string piece = collapse_ws(t);
      if (!piece.empty() && !out.empty()) {
        if (!out.back().rdata.empty()) out.back().rdata += ' ';
        out.back().rdata += piece;
      }
      if (closes) in_paren = false;
      continue;
    }
    std::string t = trim(raw);
    if (t.empty() || t == "(truncated)") continue;
    if (t[0] == ';') {
      if (t.find("Address database") != std::string::npos) break;
      continue;
    }
    if (t[0] == '$') continue;

    std::vector<std::string> tokens = tokenize(t);
    std::size_t i = 0;
    if (!starts_indented(raw)) {
      if (tokens.empty()) continue;
      owner = normalize_name(tokens[i++]);
    }
    if (i >= tokens.size() || !all_digits(tokens[i])) continue;
    std::uint32_t ttl = parse_ttl(tokens[i++]);
    std::uint16_t rclass = dns::rrclass::kIn;
    if (i < tokens.size()) {
      if (auto c = dns::class_code(tokens[i])) {
        rclass = *c;
        ++i;
      }
    }
    if (i >= tokens.size()) continue;
    auto type = dns::type_code(tokens[i++]);
    if (!type) continue;

    std::string rdata = join(tokens, i);
    std::size_t opens = static_cast<std::size_t>(
        std::count(rdata.begin(), rdata.end(), '('));
    std::size_t closes = static_cast<std::size_t>(
        std::count(rdata.begin(), rdata.end(), ')'));
    rdata.erase(std::remove(rdata.begin(), rdata.end(), '('), rdata.end());
    rdata.erase(std::remove(rdata.begin(), rdata.end(), ')'), rdata.end());
    rdata = collapse_ws(rdata);
    out.push_back({owner, rclass, *type, ttl, rdata});
    if (opens > closes) in_paren = true;
  }
  return out;
}

UnboundCache parse_unbound_cache(const std::string& text) {
  UnboundCache out;
  enum class Section { kNone, kRrset, kMsg } section = Section::kNone;
  for (const std::string& raw : split_lines(text)) {
    std::string t = trim(raw);
    if (t == "START_RRSET_CACHE") { section = Section::kRrset; continue; }
    if (t == "END_RRSET_CACHE") { section = Section::kNone; continue; }
    if (t == "START_MSG_CACHE") { section = Section::kMsg; continue; }
    if (t == "END_MSG_CACHE") { section = Section::kNone; continue; }
    if (section == Section::kMsg) {
      if (t.rfind("msg ", 0) == 0) ++out.msg_cache_entries;
      continue;
    }
    if (section != Section::kRrset) continue;
    if (t.empty() || t == "(truncated)" || t == "EOF") continue;

    std::string stripped = trim(strip_semicolon_comment(raw));
    if (stripped.empty()) continue;
    if (starts_indented(raw)) {
      if (!out.records.empty()) {
        if (!out.records.back().rdata.empty()) out.records.back().rdata += ' ';
        out.records.back().rdata += collapse_ws(stripped);
      }
      continue;
    }
    std::vector<std::string> tokens = tokenize(stripped);
    if (tokens.size() < 4 || !all_digits(tokens[1])) continue;
    UnifiedRecord r;
    r.name = normalize_name(tokens[0]);
    r.ttl = parse_ttl(tokens[1]);
    r.rclass = dns::class_code(tokens[2]).value_or(dns::rrclass::kIn);
    auto type = dns::type_code(tokens[3]);
    if (!type) continue;
    r.type = *type;
    r.rdata = join(tokens, 4);
    out.records.push_back(std::move(r));
  }
  return out;
}

UnifiedCache parse_powerdns_cache(const std::string& text) {
  UnifiedCache out;
  bool include = true;
  for (const std::string& raw : split_lines(text)) {
    std::string t = trim(raw);
    if (t.empty()) continue;
    if (t[0] == ';') {
      if (t.find("record cache dump") != std::string::npos) include = true;
      else if (t.find("negcache") != std::string::npos ||
               t.find("packet cache") != std::string::npos) {
        include = false;
      }
      continue;
    }
    if (!include) continue;
    std::vector<std::string> tokens = tokenize(trim(strip_semicolon_comment(raw)));
    if (tokens.size() < 4 || !all_digits(tokens[1])) continue;
    std::size_t i = 0;
    UnifiedRecord r;
    r.name = normalize_name(tokens[i++]);
    r.ttl = parse_ttl(tokens[i++]);  // original ttl; the remaining ttl drops
    if (i < tokens.size() && all_digits(tokens[i])) ++i;
    r.rclass = dns::rrclass::kIn;
    if (i < tokens.size()) {
      if (auto c = dns::class_code(tokens[i])) {
        r.rclass = *c;
        ++i;
      }
    }
    if (i >= tokens.size()) continue;
    auto type = dns::type_code(tokens[i++]);
    if (!type) continue;
    r.type = *type;
    r.rdata = join(tokens, i);
    out.push_back(std::move(r));
  }
  return out;
}

UnifiedCache parse_technitium_cache(const std::string& json_text) {
  UnifiedCache out;
  nlohmann::json j = nlohmann::json::parse(json_text);
  for (const auto& [owner, group] : j.items()) {
    (void)owner;
    if (!group.is_array()) continue;
    for (const auto& e : group) {
      UnifiedRecord r;
      r.name = normalize_name(e.at("name").get<std::string>());
      r.rclass = dns::rrclass::kIn;
      if (e.contains("class") && e["class"].is_string()) {
        r.rclass = dns::class_code(e["class"].get<std::string>())
                       .value_or(dns::rrclass::kIn);
      }
      auto type = dns::type_code(e.at("type").get<std::string>());
      if (!type) continue;
      r.type = *type;
      const auto& ttl = e.at("ttl");
      r.ttl = ttl.is_string() ? parse_ttl(ttl.get<std::string>())
                              : ttl.get<std::uint32_t>();

      if (e.contains("rData")) {
        const auto& rd = e["rData"];
        if (rd.is_string()) {
          r.rdata = rd.get<std::string>();
        } else if (rd.is_object()) {
          // The value field is type-specific; host-name values are
          // rendered fully qualified.
          const char* name_keys[] = {"nameServer", "cname", "ptrName",
                                     "exchange", "primaryNameServer"};
          const char* plain_keys[] = {"ipAddress", "text", "value"};
          bool found = false;
          for (const char* k : name_keys) {
            if (rd.contains(k) && rd[k].is_string()) {
              r.rdata = normalize_name(rd[k].get<std::string>());
              found = true;
              break;
            }
          }
          if (!found) {
            for (const char* k : plain_keys) {
              if (rd.contains(k) && rd[k].is_string()) {
                r.rdata = rd[k].get<std::string>();
                found = true;
                break;
              }
            }
          }
          if (!found) r.rdata = rd.dump();
        }
      }
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::vector<std::string> match_log_events(const std::string& log_text,
                                          const std::vector<LogEventRule>& rules) {
  std::vector<std::regex> compiled;
  compiled.reserve(rules.size());
  for (const auto& rule : rules) compiled.emplace_back(rule.pattern);
  std::vector<std::string> out;
  for (const std::string& line : split_lines(log_text)) {
    for (std::size_t i = 0; i < rules.size(); ++i) {
      if (std::regex_search(line, compiled[i])) {
        out.push_back(rules[i].label);
        break;
      }
    }
  }
  return out;
}

TrafficSummary summarize_traffic(const std::vector<PacketEvent>& packets,
                                 double timeout_seconds) {
  TrafficSummary s;
  double query_ts = 0;
  bool saw_query = false;
  double last_answer = 0;
  bool answered = false;
  for (const auto& p : packets) {
    if (p.src == "client" && !saw_query) {
      saw_query = true;
      query_ts = p.timestamp;
    }
    if (p.src == "resolver" && p.dst != "client") ++s.resolver_query_count;
    if (p.src == "resolver" && p.dst == "client") {
      s.bytes_resolver_to_client += p.size;
      answered = true;
      last_answer = std::max(last_answer, p.timestamp);
    }
    if (p.dst == "resolver" && p.src != "client") {
      s.bytes_ns_to_resolver += p.size;
    }
    bool response_like = (p.dst == "client" && p.src == "resolver") ||
                         (p.dst == "resolver" && p.src != "client");
    if (response_like) s.max_response_size = std::max(s.max_response_size, p.size);
  }
  if (answered) {
    s.resolution_time = last_answer - query_ts;
  } else {
    s.timed_out = true;
    s.resolution_time = timeout_seconds;
  }
  return s;
}

nlohmann::ordered_json trace_to_json(const TraceRecord& t) {
  nlohmann::ordered_json events = nlohmann::ordered_json::array();
  for (const auto& e : t.log_events) events.push_back(e);
  nlohmann::ordered_json j = {{"case_id", t.case_id},
                               {"adapter", t.adapter},
                               {"alive", t.alive}};
  if (t.cache_present) j["cache"] = cache_to_json(t.cache);
  if (t.response_hex) j["response_hex"] = *t.response_hex;
  j["log_events"] = events;
  j["traffic"] = {
      {"resolver_query_count", t.traffic.resolver_query_count},
      {"max_response_size", t.traffic.max_response_size},
      {"bytes_resolver_to_client", t.traffic.bytes_resolver_to_client},
      {"bytes_ns_to_resolver", t.traffic.bytes_ns_to_resolver},
      {"resolution_time", t.traffic.resolution_time},
      {"timed_out", t.traffic.timed_out}};
  return j;
}

TraceRecord trace_from_json(const nlohmann::ordered_json& j) {
  TraceRecord t;
  t.case_id = j.at("case_id").get<std::uint64_t>();
  t.adapter = j.at("adapter").get<std::string>();
  t.alive = j.at("alive").get<bool>();
  t.cache_present = j.contains("cache");
  if (t.cache_present) t.cache = cache_from_json(j.at("cache"));
  if (j.contains("response_hex")) {
    t.response_hex = j.at("response_hex").get<std::string>();
  }
  for (const auto& e : j.at("log_events")) {
    t.log_events.push_back(e.get<std::string>());
  }
  const auto& traffic = j.at("traffic");
  t.traffic.resolver_query_count =
      traffic.at("resolver_query_count").get<std::size_t>();
  t.traffic.max_response_size =
      traffic.at("max_response_size").get<std::size_t>();
  t.traffic.bytes_resolver_to_client =
      traffic.at("bytes_resolver_to_client").get<std::size_t>();
  t.traffic.bytes_ns_to_resolver =
      traffic.at("bytes_ns_to_resolver").get<std::size_t>();
  t.traffic.resolution_time = traffic.at("resolution_time").get<double>();
  t.traffic.timed_out = traffic.at("timed_out").get<bool>();
  return t;
}

}  // namespace qrfuzz::trace

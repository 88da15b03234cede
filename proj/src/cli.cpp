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

#include "qrfuzz/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "qrfuzz/net.hpp"
#include "qrfuzz/oracle.hpp"
#include "qrfuzz/trace.hpp"

namespace qrfuzz::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// Thrown for errors the caller made (flags, names, option values).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Thrown for errors in the surroundings (files, sockets, processes).
struct EnvironmentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Thrown when campaign artifacts are missing or inconsistent.
struct IncompleteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw EnvironmentError("cannot read " + path.string());
  std::ostringstream body;
  body << in.rdbuf();
  return body.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out.good()) throw EnvironmentError("cannot write " + path.string());
}

std::string iso_utc_now() {
  std::time_t now = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int report_and_code(const std::exception& e, std::ostream& diag) {
  diag << "error: " << e.what() << "\n";
  if (dynamic_cast<const UsageError*>(&e)) return kExitUsage;
  if (dynamic_cast<const IncompleteError*>(&e)) return kExitIncomplete;
  return kExitEnvironment;
}

ordered_json parse_json(const std::string& text, const std::string& what) {
  ordered_json j = ordered_json::parse(text, nullptr, false);
  if (j.is_discarded()) throw EnvironmentError("malformed JSON in " + what);
  return j;
}

// --- campaign directory I/O ---

struct CampaignDir {
  fs::path root;
  ordered_json manifest;

  fs::path cases_path() const { return root / kCasesFile; }
  fs::path traces_path() const { return root / kTracesFile; }
  fs::path findings_dir() const { return root / kFindingsDir; }
  fs::path report_dir() const { return root / kReportDir; }
};

CampaignDir open_campaign(const std::string& dir) {
  CampaignDir c;
  c.root = dir;
  fs::path manifest = c.root / kManifestFile;
  if (!fs::exists(manifest)) {
    throw IncompleteError("no campaign manifest at " + manifest.string());
  }
  c.manifest = parse_json(read_file(manifest), manifest.string());
  for (const char* artifact : {kCasesFile, kTracesFile}) {
    if (!fs::exists(c.root / artifact)) {
      throw IncompleteError("campaign artifact missing: " +
                            (c.root / artifact).string());
    }
  }
  return c;
}

std::vector<ordered_json> read_json_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw EnvironmentError("cannot read " + path.string());
  std::vector<ordered_json> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    lines.push_back(parse_json(line, path.string()));
  }
  return lines;
}

std::vector<trace::TraceRecord> read_traces(const fs::path& path) {
  std::vector<trace::TraceRecord> traces;
  for (const auto& j : read_json_lines(path)) {
    traces.push_back(trace::trace_from_json(j));
  }
  return traces;
}

// --- manifest field access ---

gen::Mode manifest_mode(const ordered_json& manifest) {
  auto mode = gen::mode_from_name(manifest.value("mode", ""));
  if (!mode) throw IncompleteError("manifest has no valid mode");
  return *mode;
}

dns::DnsName manifest_base(const ordered_json& manifest) {
  try {
    return dns::DnsName::from_text(manifest.value("base_domain", ""));
  } catch (const std::exception&) {
    throw IncompleteError("manifest has no valid base_domain");
  }
}

std::vector<AdapterSpec> manifest_roster(const ordered_json& manifest) {
  std::vector<AdapterSpec> roster;
  if (!manifest.contains("adapters") || !manifest["adapters"].is_array()) {
    throw IncompleteError("manifest has no adapter roster");
  }
  for (const auto& j : manifest["adapters"]) {
    roster.push_back(adapter_spec_from_json(j));
  }
  return roster;
}

// --- case execution shared by run... no: replay only; run_campaign owns
// the campaign loop. Kept in sync with the campaign's per-case block.

trace::TraceRecord execute_case(harness::ResolverAdapter& adapter,
                                const gen::TestCase& test_case,
                                double timeout_seconds) {
  std::vector<trace::PacketEvent> journal;
  auto answer = adapter.query(test_case.query_wire, timeout_seconds, journal);
  trace::TraceRecord record;
  record.case_id = test_case.id;
  record.adapter = adapter.name();
  record.alive = adapter.alive();
  if (answer) record.response_hex = to_hex(*answer);
  harness::AdapterCapabilities caps = adapter.capabilities();
  record.cache_present = false;
  if (caps.cache_dump) {
    if (auto dump = adapter.dump_cache()) {
      if (auto cache =
              harness::parse_cache_dump(adapter.dump_format(), *dump)) {
        record.cache = std::move(*cache);
        record.cache_present = true;
      }
    }
  }
  if (caps.log_access) record.log_events = adapter.fetch_logs();
  record.traffic = trace::summarize_traffic(journal, timeout_seconds);
  return record;
}

}  // namespace

// --- adapter roster ---

AdapterSpec adapter_spec_from_json(const ordered_json& j) {
  AdapterSpec spec;
  spec.kind = j.value("kind", "reference");
  spec.name = j.value("name", spec.kind);
  if (spec.kind == "reference") {
    const ordered_json quirks = j.value("quirks", ordered_json::object());
    spec.quirks.accept_out_of_bailiwick =
        quirks.value("accept_out_of_bailiwick", false);
    spec.quirks.cache_unsolicited = quirks.value("cache_unsolicited", false);
    spec.quirks.ignore_rd_flag = quirks.value("ignore_rd_flag", false);
    spec.quirks.crash_on_pattern = quirks.value("crash_on_pattern", false);
    spec.upstream_timeout = j.value("upstream_timeout", 1.0);
  } else if (spec.kind == "mock") {
    spec.mock.latency_seconds = j.value("latency_seconds", 0.002);
    spec.mock.no_answer = j.value("no_answer", false);
    spec.mock.die_on_query = j.value("die_on_query", false);
    spec.mock.cache_dump = j.value("cache_dump", true);
  } else if (spec.kind == "command") {
    spec.command.name = spec.name;
    spec.command.query_host = j.value("query_host", "127.0.0.1");
    spec.command.query_port = j.value("query_port", 0);
    spec.command.start_cmd = j.value("start_cmd", "");
    spec.command.reset_cmd = j.value("reset_cmd", "");
    spec.command.liveness_cmd = j.value("liveness_cmd", "");
    spec.command.dump_cmd = j.value("dump_cmd", "");
    spec.command.logs_cmd = j.value("logs_cmd", "");
    spec.command.dump_format = j.value("dump_format", "unified");
    spec.command.caps.cache_dump = j.value("cache_dump", !spec.command.dump_cmd.empty());
    spec.command.caps.log_access = j.value("log_access", !spec.command.logs_cmd.empty());
  } else {
    throw std::runtime_error("unknown adapter kind '" + spec.kind + "'");
  }
  return spec;
}

ordered_json adapter_spec_to_json(const AdapterSpec& spec) {
  ordered_json j;
  j["kind"] = spec.kind;
  j["name"] = spec.name;
  if (spec.kind == "reference") {
    j["quirks"] = {
        {"accept_out_of_bailiwick", spec.quirks.accept_out_of_bailiwick},
        {"cache_unsolicited", spec.quirks.cache_unsolicited},
        {"ignore_rd_flag", spec.quirks.ignore_rd_flag},
        {"crash_on_pattern", spec.quirks.crash_on_pattern},
    };
    j["upstream_timeout"] = spec.upstream_timeout;
  } else if (spec.kind == "mock") {
    j["latency_seconds"] = spec.mock.latency_seconds;
    j["no_answer"] = spec.mock.no_answer;
    j["die_on_query"] = spec.mock.die_on_query;
    j["cache_dump"] = spec.mock.cache_dump;
  } else if (spec.kind == "command") {
    j["query_host"] = spec.command.query_host;
    j["query_port"] = spec.command.query_port;
    j["start_cmd"] = spec.command.start_cmd;
    j["reset_cmd"] = spec.command.reset_cmd;
    j["liveness_cmd"] = spec.command.liveness_cmd;
    j["dump_cmd"] = spec.command.dump_cmd;
    j["logs_cmd"] = spec.command.logs_cmd;
    j["dump_format"] = spec.command.dump_format;
    j["cache_dump"] = spec.command.caps.cache_dump;
    j["log_access"] = spec.command.caps.log_access;
  }
  return j;
}

std::vector<AdapterSpec> resolve_adapters(
    const std::vector<std::string>& args) {
  std::vector<AdapterSpec> roster;
  for (const std::string& arg : args) {
    if (arg == "reference" || arg == "mock") {
      AdapterSpec spec;
      spec.kind = arg;
      spec.name = arg;
      roster.push_back(std::move(spec));
      continue;
    }
    if (!fs::exists(arg)) {
      throw UsageError("unknown adapter '" + arg +
                       "' (not a built-in kind or a spec file)");
    }
    ordered_json j;
    try {
      j = parse_json(read_file(arg), arg);
    } catch (const std::exception& e) {
      throw EnvironmentError(e.what());
    }
    try {
      if (j.contains("adapters")) {
        for (const auto& entry : j["adapters"]) {
          roster.push_back(adapter_spec_from_json(entry));
        }
      } else {
        roster.push_back(adapter_spec_from_json(j));
      }
    } catch (const std::exception& e) {
      throw EnvironmentError(arg + ": " + e.what());
    }
  }
  std::map<std::string, std::size_t> seen;
  for (auto& spec : roster) {
    std::size_t n = ++seen[spec.name];
    if (n > 1) spec.name += "-" + std::to_string(n);
    if (spec.kind == "command") spec.command.name = spec.name;
  }
  return roster;
}

harness::AdapterFactory make_factory(std::vector<AdapterSpec> roster,
                                     gen::Mode mode, dns::DnsName base_domain,
                                     double timeout_seconds) {
  return [roster = std::move(roster), mode, base_domain,
          timeout_seconds](const harness::UnitEnv& env) {
    std::vector<std::unique_ptr<harness::ResolverAdapter>> adapters;
    for (const AdapterSpec& spec : roster) {
      if (spec.kind == "reference") {
        refres::ReferenceResolver::Config config;
        config.mode = mode;
        config.base_domain = base_domain;
        config.quirks = spec.quirks;
        adapters.push_back(std::make_unique<harness::ReferenceResolverAdapter>(
            spec.name, config, env.routing,
            std::min(spec.upstream_timeout, timeout_seconds)));
      } else if (spec.kind == "mock") {
        adapters.push_back(
            std::make_unique<harness::MockAdapter>(spec.name, spec.mock));
      } else {
        adapters.push_back(std::make_unique<harness::CommandAdapter>(
            spec.command, env.unit_id));
      }
    }
    return adapters;
  };
}

zone::ZoneConfig load_zone_file(const std::string& path) {
  if (!fs::exists(path)) {
    throw std::runtime_error("zone file not found: " + path);
  }
  ordered_json j = parse_json(read_file(path), path);
  if (!j.contains("zones") || !j["zones"].is_array() || j["zones"].empty()) {
    throw std::runtime_error(path + ": expected a non-empty \"zones\" array");
  }
  zone::ZoneConfig config;
  for (const auto& entry : j["zones"]) {
    std::string origin_text = entry.value("origin", "");
    std::string identity = entry.value("identity", "");
    std::string text = entry.value("text", "");
    if (origin_text.empty() || identity.empty()) {
      throw std::runtime_error(path + ": every zone needs origin and identity");
    }
    dns::DnsName origin;
    try {
      origin = dns::DnsName::from_text(origin_text);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ": bad origin '" + origin_text +
                               "': " + e.what());
    }
    try {
      config.zones.push_back(zone::parse_zone_text(text, origin, identity));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + " zone " + origin_text + ": " +
                               e.what());
    }
  }
  std::vector<std::string> problems = zone::validate_zone_config(config);
  if (!problems.empty()) {
    std::string all = path + ":";
    for (const std::string& p : problems) all += "\n  " + p;
    throw std::runtime_error(all);
  }
  return config;
}

ordered_json case_to_json(const gen::TestCase& c) {
  ordered_json j;
  j["id"] = c.id;
  j["seed"] = c.seed;
  j["mutated"] = c.mutated;
  ordered_json mutations = ordered_json::array();
  for (const gen::MutationEntry& m : c.mutation_log) {
    mutations.push_back({{"field", m.field},
                         {"op", m.op},
                         {"offset", m.offset},
                         {"byte", m.byte}});
  }
  j["mutations"] = std::move(mutations);
  j["query_hex"] = to_hex(c.query_wire);
  j["query_rcode"] = c.query_rcode_name;
  j["response_rcode"] = c.response.rcode_name;
  j["query_choices"] = c.query_choices;
  j["response_choices"] = c.response_choices;
  return j;
}

// --- run ---

int cmd_run(const RunOptions& opt, std::ostream& diag) {
  try {
    auto mode = gen::mode_from_name(opt.mode);
    if (!mode) throw UsageError("unknown mode '" + opt.mode + "'");
    if (opt.cases == 0) throw UsageError("case count must be positive");
    if (opt.units == 0) throw UsageError("unit count must be positive");
    if (opt.out_dir.empty()) throw UsageError("output directory required");

    std::vector<std::string> adapter_args =
        opt.adapters.empty() ? std::vector<std::string>{"reference"}
                             : opt.adapters;
    std::vector<AdapterSpec> roster = resolve_adapters(adapter_args);

    dns::DnsName base = gen::default_base_domain(*mode);

    zone::ZoneConfig zones;
    bool networked = !opt.zone_file.empty();
    for (const AdapterSpec& spec : roster) {
      if (spec.kind != "mock") networked = true;
    }
    if (networked) {
      if (opt.zone_file.empty()) {
        zones = zone::default_zone_config(base.parent());
      } else {
        try {
          zones = load_zone_file(opt.zone_file);
        } catch (const std::exception& e) {
          throw EnvironmentError(e.what());
        }
      }
    }

    harness::CampaignConfig config;
    config.mode = *mode;
    config.unit_count = opt.units;
    config.case_count = opt.cases;
    config.timeout_seconds = opt.timeout;
    config.base_domain = base;
    config.seed = opt.seed;
    config.sequence_length = opt.sequence_length;

    fs::path root(opt.out_dir);
    std::error_code ec;
    for (const fs::path& dir :
         {root, root / "cases", root / "traces", root / kFindingsDir,
          root / kReportDir}) {
      fs::create_directories(dir, ec);
      if (ec) {
        throw EnvironmentError("cannot create " + dir.string() + ": " +
                               ec.message());
      }
    }

    const std::string started = iso_utc_now();
    harness::CampaignResult result = harness::run_campaign(
        config, networked ? &zones : nullptr,
        make_factory(roster, *mode, base, opt.timeout));
    const std::string finished = iso_utc_now();

    std::ostringstream cases_out;
    for (const gen::TestCase& c : result.cases) {
      cases_out << case_to_json(c).dump() << "\n";
    }
    write_file(root / kCasesFile, cases_out.str());

    std::ostringstream traces_out;
    for (const trace::TraceRecord& t : result.traces) {
      traces_out << trace::trace_to_json(t).dump() << "\n";
    }
    write_file(root / kTracesFile, traces_out.str());

    gen::Generator generator(base);
    ordered_json manifest;
    manifest["tool"] = "qrfuzz";
    manifest["layout_version"] = 1;
    manifest["mode"] = gen::mode_name(*mode);
    manifest["units"] = opt.units;
    manifest["cases"] = opt.cases;
    manifest["seed"] = opt.seed;
    manifest["timeout_seconds"] = opt.timeout;
    manifest["sequence_length"] = opt.sequence_length;
    manifest["base_domain"] = base.to_canonical_text();
    manifest["zone_source"] =
        opt.zone_file.empty() ? std::string("builtin") : opt.zone_file;
    manifest["grammars"] = {
        {"source", "builtin"},
        {"query_rules", generator.query_grammar().rules.size()},
        {"response_rules", generator.response_grammar().rules.size()},
    };
    ordered_json roster_json = ordered_json::array();
    for (const AdapterSpec& spec : roster) {
      roster_json.push_back(adapter_spec_to_json(spec));
    }
    manifest["adapters"] = std::move(roster_json);
    manifest["started"] = started;
    manifest["finished"] = finished;
    manifest["wall_seconds"] = result.wall_seconds;
    manifest["completed_cases"] = result.cases.size();
    manifest["trace_count"] = result.traces.size();
    manifest["failed_units"] = result.failed_units;
    manifest["cases_by_mode"] = {{gen::mode_name(*mode), result.cases.size()}};
    manifest["layout"] = {{"manifest", kManifestFile},
                          {"cases", kCasesFile},
                          {"traces", kTracesFile},
                          {"findings", kFindingsDir},
                          {"report", kReportDir}};
    write_file(root / kManifestFile, manifest.dump(2) + "\n");

    diag << "campaign " << gen::mode_name(*mode) << ": "
         << result.cases.size() << "/" << opt.cases << " cases, "
         << result.traces.size() << " traces, " << result.failed_units
         << " failed units, " << result.wall_seconds << "s\n";
    diag << "wrote " << (root / kManifestFile).string() << "\n";

    if (result.cases.size() != opt.cases) {
      diag << "error: campaign incomplete\n";
      return kExitIncomplete;
    }
    return kExitOk;
  } catch (const std::exception& e) {
    return report_and_code(e, diag);
  }
}

// --- analyze ---

namespace {

std::vector<oracle::MatchRule> triage_rules() {
  return {
      {"cname-records", "", dns::rrtype::kCname, "", ""},
      {"ns-records", "", dns::rrtype::kNs, "", ""},
      {"soa-records", "", dns::rrtype::kSoa, "", ""},
      {"address-records", "", dns::rrtype::kA, "", ""},
  };
}

// Records that distinguish the caches of one case: present somewhere but
// not everywhere.
trace::UnifiedCache differing_records(
    const std::vector<const trace::TraceRecord*>& dumpers) {
  std::map<oracle::CacheKey, trace::UnifiedRecord> by_key;
  std::map<oracle::CacheKey, std::size_t> seen_in;
  for (const trace::TraceRecord* t : dumpers) {
    std::set<oracle::CacheKey> keys = oracle::cache_key_set(t->cache);
    for (const trace::UnifiedRecord& r : t->cache) {
      by_key.emplace(oracle::CacheKey{r.name, r.type, r.rdata}, r);
    }
    for (const oracle::CacheKey& k : keys) seen_in[k] += 1;
  }
  trace::UnifiedCache diff;
  for (const auto& [key, count] : seen_in) {
    if (count < dumpers.size()) diff.push_back(by_key.at(key));
  }
  return diff;
}

int analyze_cache(const CampaignDir& campaign,
                  const std::vector<trace::TraceRecord>& traces,
                  const AnalyzeOptions& opt, std::ostream& diag) {
  std::map<std::uint64_t, std::vector<const trace::TraceRecord*>> by_case;
  for (const trace::TraceRecord& t : traces) {
    if (t.cache_present) by_case[t.case_id].push_back(&t);
  }

  // Clustering needs one fixed adapter panel; keep the cases observed by
  // the most common panel and report the rest as excluded.
  std::map<std::vector<std::string>, std::size_t> panel_counts;
  for (const auto& [id, dumpers] : by_case) {
    if (dumpers.size() < 2) continue;
    std::vector<std::string> panel;
    for (const trace::TraceRecord* t : dumpers) panel.push_back(t->adapter);
    panel_counts[panel] += 1;
  }

  ordered_json findings;
  findings["oracle"] = "cache";
  if (panel_counts.empty()) {
    findings["skipped"] = true;
    findings["reason"] = "needs at least two cache-dumping adapters per case";
    write_file(campaign.findings_dir() / "cache.json",
               findings.dump(2) + "\n");
    diag << "cache: skipped (" << findings["reason"].get<std::string>()
         << ")\n";
    return kExitOk;
  }
  findings["skipped"] = false;

  const std::vector<std::string>* panel = nullptr;
  std::size_t best = 0;
  for (const auto& [candidate, count] : panel_counts) {
    if (count > best) {
      best = count;
      panel = &candidate;
    }
  }

  std::vector<std::uint64_t> case_ids;
  std::vector<oracle::Point> points;
  std::vector<ordered_json> case_rows;
  std::vector<std::uint64_t> nonzero_ids;
  std::size_t excluded = 0;
  std::map<std::uint64_t, trace::UnifiedCache> case_diff_records;
  for (const auto& [id, dumpers] : by_case) {
    std::vector<std::string> names;
    for (const trace::TraceRecord* t : dumpers) names.push_back(t->adapter);
    if (names != *panel) {
      ++excluded;
      continue;
    }
    std::vector<trace::UnifiedCache> caches;
    for (const trace::TraceRecord* t : dumpers) caches.push_back(t->cache);
    std::vector<std::size_t> values = oracle::cache_diff_vector(caches);
    bool nonzero = std::any_of(values.begin(), values.end(),
                               [](std::size_t v) { return v > 0; });
    ordered_json row;
    row["case_id"] = id;
    row["values"] = values;
    row["nonzero"] = nonzero;
    case_rows.push_back(std::move(row));
    case_ids.push_back(id);
    points.emplace_back(values.begin(), values.end());
    if (nonzero) {
      nonzero_ids.push_back(id);
      case_diff_records[id] = differing_records(dumpers);
    }
  }

  findings["adapters"] = *panel;
  findings["excluded_cases"] = excluded;
  findings["cases"] = case_rows;
  findings["finding_case_ids"] = nonzero_ids;

  std::set<oracle::Point> distinct(points.begin(), points.end());
  std::vector<double> curve = oracle::sse_curve(points, 10, opt.cluster_seed);
  std::size_t elbow = oracle::elbow_k(curve);
  std::size_t k = opt.k.value_or(elbow);
  std::size_t k_effective = std::max<std::size_t>(
      1, std::min({k, distinct.size(), points.size()}));
  oracle::Clustering clustering =
      oracle::bisecting_kmeans(points, k_effective, opt.cluster_seed);

  findings["sse_curve"] = curve;
  findings["elbow_k"] = elbow;
  if (opt.k) {
    findings["k_requested"] = *opt.k;
  } else {
    findings["k_requested"] = nullptr;
  }
  findings["k"] = k_effective;

  std::vector<oracle::MatchRule> rules = triage_rules();
  ordered_json clusters = ordered_json::array();
  for (std::size_t c = 0; c < k_effective; ++c) {
    std::vector<std::uint64_t> members;
    std::vector<oracle::CaseFeatures> features;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (clustering.assignment[i] != c) continue;
      members.push_back(case_ids[i]);
      oracle::CaseFeatures f;
      f.case_id = case_ids[i];
      auto it = case_diff_records.find(case_ids[i]);
      if (it != case_diff_records.end()) f.records = it->second;
      features.push_back(std::move(f));
    }
    ordered_json cluster;
    cluster["cluster"] = c;
    cluster["size"] = members.size();
    cluster["centroid"] = clustering.centroids[c];
    cluster["case_ids"] = members;
    ordered_json by_rule = ordered_json::object();
    for (const auto& [label, ids] : oracle::subcluster_by_rules(features, rules)) {
      by_rule[label] = ids;
    }
    cluster["rules"] = std::move(by_rule);
    std::vector<std::uint64_t> exemplars(
        members.begin(),
        members.begin() + std::min<std::size_t>(3, members.size()));
    cluster["exemplars"] = exemplars;
    clusters.push_back(std::move(cluster));
  }
  findings["clusters"] = std::move(clusters);
  ordered_json assignments = ordered_json::array();
  for (std::size_t i = 0; i < points.size(); ++i) {
    assignments.push_back(
        {{"case_id", case_ids[i]}, {"cluster", clustering.assignment[i]}});
  }
  findings["assignments"] = std::move(assignments);

  write_file(campaign.findings_dir() / "cache.json", findings.dump(2) + "\n");
  diag << "cache: " << nonzero_ids.size() << " differing cases over "
       << case_ids.size() << ", k=" << k_effective << " (elbow " << elbow
       << ")\n";
  return kExitOk;
}

int analyze_resource(const CampaignDir& campaign,
                     const std::vector<trace::TraceRecord>& traces,
                     const AnalyzeOptions& opt, std::ostream& diag) {
  struct Metric {
    const char* name;
    double (*value)(const trace::TraceRecord&);
  };
  const Metric metrics[] = {
      {"resolver_query_count",
       [](const trace::TraceRecord& t) {
         return double(t.traffic.resolver_query_count);
       }},
      {"max_response_size",
       [](const trace::TraceRecord& t) {
         return double(t.traffic.max_response_size);
       }},
      {"bytes_resolver_to_client",
       [](const trace::TraceRecord& t) {
         return double(t.traffic.bytes_resolver_to_client);
       }},
      {"resolution_time",
       [](const trace::TraceRecord& t) { return t.traffic.resolution_time; }},
      {"log_event_count",
       [](const trace::TraceRecord& t) { return double(t.log_events.size()); }},
  };

  ordered_json findings;
  findings["oracle"] = "resource";
  findings["theta"] = opt.theta;
  ordered_json rows = ordered_json::array();
  ordered_json skipped = ordered_json::array();
  std::size_t total_flagged = 0;
  for (const Metric& metric : metrics) {
    std::vector<double> values;
    values.reserve(traces.size());
    for (const trace::TraceRecord& t : traces) values.push_back(metric.value(t));
    try {
      oracle::ResourceFlags flags = oracle::resource_flags(values, opt.theta);
      ordered_json row;
      row["metric"] = metric.name;
      row["threshold"] = flags.threshold_value;
      ordered_json flagged = ordered_json::array();
      for (std::size_t idx : flags.flagged) {
        flagged.push_back({{"case_id", traces[idx].case_id},
                           {"adapter", traces[idx].adapter},
                           {"value", values[idx]}});
      }
      total_flagged += flags.flagged.size();
      row["flagged"] = std::move(flagged);
      rows.push_back(std::move(row));
    } catch (const oracle::OracleError& e) {
      skipped.push_back({{"metric", metric.name}, {"reason", e.what()}});
    }
  }
  findings["metrics"] = std::move(rows);
  findings["skipped_metrics"] = std::move(skipped);
  findings["finding_count"] = total_flagged;
  write_file(campaign.findings_dir() / "resource.json",
             findings.dump(2) + "\n");
  diag << "resource: " << total_flagged << " flagged observations (theta "
       << opt.theta << ")\n";
  return kExitOk;
}

int analyze_crash(const CampaignDir& campaign,
                  const std::vector<trace::TraceRecord>& traces,
                  std::ostream& diag) {
  std::vector<std::uint64_t> ids = oracle::crash_findings(traces);
  ordered_json findings;
  findings["oracle"] = "crash";
  findings["case_ids"] = ids;
  findings["finding_count"] = ids.size();
  write_file(campaign.findings_dir() / "crash.json", findings.dump(2) + "\n");
  diag << "crash: " << ids.size() << " cases\n";
  return kExitOk;
}

}  // namespace

int cmd_analyze(const AnalyzeOptions& opt, std::ostream& diag) {
  try {
    const std::set<std::string> known = {"cache", "resource", "crash", "all"};
    if (!known.count(opt.oracle)) {
      throw UsageError("unknown oracle '" + opt.oracle + "'");
    }
    if (!(opt.theta > 0.0 && opt.theta < 1.0)) {
      throw UsageError("theta must be in (0, 1)");
    }
    CampaignDir campaign = open_campaign(opt.campaign_dir);
    std::vector<trace::TraceRecord> traces =
        read_traces(campaign.traces_path());
    std::error_code ec;
    fs::create_directories(campaign.findings_dir(), ec);

    int rc = kExitOk;
    if (opt.oracle == "cache" || opt.oracle == "all") {
      rc = std::max(rc, analyze_cache(campaign, traces, opt, diag));
    }
    if (opt.oracle == "resource" || opt.oracle == "all") {
      rc = std::max(rc, analyze_resource(campaign, traces, opt, diag));
    }
    if (opt.oracle == "crash" || opt.oracle == "all") {
      rc = std::max(rc, analyze_crash(campaign, traces, diag));
    }
    return rc;
  } catch (const std::exception& e) {
    return report_and_code(e, diag);
  }
}

// --- replay ---

int cmd_replay(const ReplayOptions& opt, std::ostream& out,
               std::ostream& diag) {
  try {
    CampaignDir campaign = open_campaign(opt.campaign_dir);
    gen::Mode mode = manifest_mode(campaign.manifest);
    dns::DnsName base = manifest_base(campaign.manifest);
    std::uint64_t seed = campaign.manifest.value("seed", 0ULL);
    double timeout = campaign.manifest.value("timeout_seconds", 5.0);
    std::vector<AdapterSpec> roster = manifest_roster(campaign.manifest);

    std::optional<ordered_json> persisted;
    for (const ordered_json& row : read_json_lines(campaign.cases_path())) {
      if (row.value("id", std::uint64_t(0)) == opt.case_id &&
          row.contains("id")) {
        persisted = row;
        break;
      }
    }
    if (!persisted) {
      diag << "error: case " << opt.case_id << " not found in campaign\n";
      return kExitIncomplete;
    }

    gen::Generator generator(base);
    gen::TestCase test_case = generator.generate_case(seed, opt.case_id);
    if (to_hex(test_case.query_wire) !=
        persisted->value("query_hex", std::string())) {
      throw IncompleteError(
          "regenerated query differs from the persisted case; manifest and "
          "cases file disagree");
    }

    const AdapterSpec* spec = nullptr;
    if (opt.adapter.empty()) {
      if (roster.empty()) throw IncompleteError("manifest roster is empty");
      spec = &roster.front();
    } else {
      for (const AdapterSpec& s : roster) {
        if (s.name == opt.adapter) spec = &s;
      }
      if (!spec) {
        throw UsageError("adapter '" + opt.adapter +
                         "' is not in the campaign roster");
      }
    }

    bool networked = spec->kind != "mock";
    zone::ZoneConfig zones;
    if (networked) {
      std::string source = campaign.manifest.value("zone_source", "builtin");
      if (source == "builtin") {
        zones = zone::default_zone_config(base.parent());
      } else {
        try {
          zones = load_zone_file(source);
        } catch (const std::exception& e) {
          throw EnvironmentError(e.what());
        }
      }
    }

    std::optional<harness::LocalizedHierarchy> hierarchy;
    std::optional<harness::AttackerServer> attacker;
    harness::RoutingTable routes;
    try {
      if (networked) {
        hierarchy.emplace(zones);
        hierarchy->start();
        routes = hierarchy->routing();
        attacker.emplace();
        attacker->start();
        routes[zone::kAttackerIdentity] = attacker->port();
        attacker->arm(std::make_shared<const gen::ResponseTemplate>(
            test_case.response));
      }
      harness::AdapterFactory factory =
          make_factory({*spec}, mode, base, timeout);
      std::vector<std::unique_ptr<harness::ResolverAdapter>> adapters =
          factory(harness::UnitEnv{0, routes});
      adapters.front()->start();
      trace::TraceRecord record =
          execute_case(*adapters.front(), test_case, timeout);
      out << trace::trace_to_json(record).dump() << "\n";
      diag << "replayed case " << opt.case_id << " against " << spec->name
           << ": alive=" << (record.alive ? "true" : "false") << "\n";
      return kExitOk;
    } catch (const net::NetError& e) {
      throw EnvironmentError(e.what());
    }
  } catch (const std::exception& e) {
    return report_and_code(e, diag);
  }
}

// --- report ---

namespace {

std::string alternative_label(const grammar::Grammar& g,
                              const std::string& rule, std::size_t index) {
  const grammar::Rule* r = g.find(rule);
  if (!r || index >= r->alternatives.size()) {
    return "alt-" + std::to_string(index);
  }
  const grammar::Alternative& alt = r->alternatives[index];
  if (alt.symbols.empty()) return "(empty)";
  std::string label;
  for (const grammar::Symbol& s : alt.symbols) {
    if (!label.empty()) label += " ";
    switch (s.kind) {
      case grammar::Symbol::Kind::kTerminal: label += s.name; break;
      case grammar::Symbol::Kind::kNonterminal: label += "<" + s.name + ">"; break;
      case grammar::Symbol::Kind::kGenerator: label += "{" + s.name + "}"; break;
    }
  }
  return label;
}

ordered_json coverage_table(
    const grammar::Grammar& g,
    const std::map<std::string, std::map<std::size_t, std::size_t>>& tallies,
    std::size_t total) {
  ordered_json table = ordered_json::object();
  for (const auto& [rule, counts] : tallies) {
    ordered_json rows = ordered_json::array();
    for (const auto& [alt, count] : counts) {
      rows.push_back({{"alternative", alternative_label(g, rule, alt)},
                      {"count", count},
                      {"share", total ? double(count) / double(total) : 0.0}});
    }
    table[rule] = std::move(rows);
  }
  return table;
}

std::string markdown_report(const ordered_json& report) {
  std::ostringstream md;
  const ordered_json& campaign = report["campaign"];
  md << "# Campaign report\n\n";
  md << "- mode: " << campaign["mode"].get<std::string>() << "\n";
  md << "- cases: " << campaign["completed_cases"] << " of "
     << campaign["requested_cases"] << " requested\n";
  md << "- units: " << campaign["units"] << " (" << campaign["failed_units"]
     << " failed)\n";
  md << "- adapters: ";
  bool first = true;
  for (const auto& name : campaign["adapters"]) {
    if (!first) md << ", ";
    md << name.get<std::string>();
    first = false;
  }
  md << "\n";
  md << "- wall time: " << campaign["wall_seconds"] << "s\n";
  md << "- throughput: " << campaign["throughput_cases_per_second"]
     << " cases/s\n\n";

  md << "## Findings\n\n| oracle | findings |\n|---|---|\n";
  for (const auto& [name, entry] : report["findings"].items()) {
    md << "| " << name << " | ";
    if (entry["analyzed"].get<bool>()) {
      md << entry["count"];
    } else {
      md << "not analyzed";
    }
    md << " |\n";
  }
  md << "\n";

  if (report.contains("clusters") && !report["clusters"].empty()) {
    md << "## Cache clusters\n\n"
       << "| cluster | size | rules | exemplar cases |\n|---|---|---|---|\n";
    for (const auto& cluster : report["clusters"]) {
      md << "| " << cluster["cluster"] << " | " << cluster["size"] << " | ";
      bool first_rule = true;
      for (const auto& [label, ids] : cluster["rules"].items()) {
        if (ids.empty()) continue;
        if (!first_rule) md << ", ";
        md << label << " (" << ids.size() << ")";
        first_rule = false;
      }
      if (first_rule) md << "-";
      md << " | ";
      bool first_ex = true;
      for (const auto& id : cluster["exemplars"]) {
        if (!first_ex) md << ", ";
        md << id;
        first_ex = false;
      }
      if (first_ex) md << "-";
      md << " |\n";
    }
    md << "\n";
  }

  if (report.contains("resource_metrics") &&
      !report["resource_metrics"].empty()) {
    md << "## Resource outliers\n\n"
       << "| metric | threshold | flagged |\n|---|---|---|\n";
    for (const auto& row : report["resource_metrics"]) {
      md << "| " << row["metric"].get<std::string>() << " | "
         << row["threshold"] << " | " << row["flagged"] << " |\n";
    }
    md << "\n";
  }

  md << "## Mutation\n\n";
  md << "- mutated cases: " << report["mutation"]["mutated"] << " ("
     << report["mutation"]["share"] << ")\n\n";

  for (const char* side : {"query", "response"}) {
    md << "## Field coverage (" << side << ")\n\n";
    for (const auto& [rule, rows] : report["field_coverage"][side].items()) {
      md << "### " << rule << "\n\n| alternative | count | share |\n|---|---|---|\n";
      for (const auto& row : rows) {
        md << "| " << row["alternative"].get<std::string>() << " | "
           << row["count"] << " | " << row["share"] << " |\n";
      }
      md << "\n";
    }
  }
  return md.str();
}

}  // namespace

int cmd_report(const ReportOptions& opt, std::ostream& diag) {
  try {
    CampaignDir campaign = open_campaign(opt.campaign_dir);
    std::vector<ordered_json> cases = read_json_lines(campaign.cases_path());
    dns::DnsName base = manifest_base(campaign.manifest);
    gen::Generator generator(base);

    ordered_json report;
    ordered_json summary;
    summary["mode"] = campaign.manifest.value("mode", "");
    summary["requested_cases"] = campaign.manifest.value("cases", 0ULL);
    summary["completed_cases"] =
        campaign.manifest.value("completed_cases", 0ULL);
    summary["units"] = campaign.manifest.value("units", 0ULL);
    summary["failed_units"] = campaign.manifest.value("failed_units", 0ULL);
    summary["wall_seconds"] = campaign.manifest.value("wall_seconds", 0.0);
    ordered_json adapter_names = ordered_json::array();
    for (const AdapterSpec& spec : manifest_roster(campaign.manifest)) {
      adapter_names.push_back(spec.name);
    }
    summary["adapters"] = std::move(adapter_names);
    double wall = summary["wall_seconds"].get<double>();
    double completed = double(summary["completed_cases"].get<std::uint64_t>());
    summary["throughput_cases_per_second"] = wall > 0 ? completed / wall : 0.0;
    report["campaign"] = std::move(summary);

    // Finding counts are recounted from the persisted findings, not taken
    // from any cached total.
    ordered_json findings = ordered_json::object();
    ordered_json clusters = ordered_json::array();
    ordered_json resource_metrics = ordered_json::array();
    {
      fs::path path = campaign.findings_dir() / "cache.json";
      ordered_json entry = {{"analyzed", false}, {"count", 0}};
      if (fs::exists(path)) {
        ordered_json j = parse_json(read_file(path), path.string());
        std::size_t count = 0;
        for (const auto& row : j.value("cases", ordered_json::array())) {
          if (row.value("nonzero", false)) ++count;
        }
        entry = {{"analyzed", true}, {"count", count}};
        if (j.value("skipped", false)) {
          entry["skipped"] = true;
          entry["reason"] = j.value("reason", "");
        }
        clusters = j.value("clusters", ordered_json::array());
      }
      findings["cache"] = std::move(entry);
    }
    {
      fs::path path = campaign.findings_dir() / "resource.json";
      ordered_json entry = {{"analyzed", false}, {"count", 0}};
      if (fs::exists(path)) {
        ordered_json j = parse_json(read_file(path), path.string());
        std::size_t count = 0;
        for (const auto& row : j.value("metrics", ordered_json::array())) {
          count += row.value("flagged", ordered_json::array()).size();
          resource_metrics.push_back(
              {{"metric", row.value("metric", "")},
               {"threshold", row.value("threshold", 0.0)},
               {"flagged", row.value("flagged", ordered_json::array()).size()}});
        }
        entry = {{"analyzed", true}, {"count", count}};
      }
      findings["resource"] = std::move(entry);
    }
    {
      fs::path path = campaign.findings_dir() / "crash.json";
      ordered_json entry = {{"analyzed", false}, {"count", 0}};
      if (fs::exists(path)) {
        ordered_json j = parse_json(read_file(path), path.string());
        entry = {{"analyzed", true},
                 {"count", j.value("case_ids", ordered_json::array()).size()}};
      }
      findings["crash"] = std::move(entry);
    }
    report["findings"] = std::move(findings);
    report["clusters"] = std::move(clusters);
    report["resource_metrics"] = std::move(resource_metrics);

    std::map<std::string, std::map<std::size_t, std::size_t>> query_tally;
    std::map<std::string, std::map<std::size_t, std::size_t>> response_tally;
    std::size_t mutated = 0;
    for (const ordered_json& row : cases) {
      if (row.value("mutated", false)) ++mutated;
      const ordered_json query_choices =
          row.value("query_choices", ordered_json::object());
      for (const auto& [rule, alt] : query_choices.items()) {
        query_tally[rule][alt.get<std::size_t>()] += 1;
      }
      const ordered_json response_choices =
          row.value("response_choices", ordered_json::object());
      for (const auto& [rule, alt] : response_choices.items()) {
        response_tally[rule][alt.get<std::size_t>()] += 1;
      }
    }
    report["mutation"] = {
        {"mutated", mutated},
        {"share", cases.empty() ? 0.0 : double(mutated) / double(cases.size())},
    };
    report["field_coverage"] = {
        {"query",
         coverage_table(generator.query_grammar(), query_tally, cases.size())},
        {"response", coverage_table(generator.response_grammar(),
                                    response_tally, cases.size())},
    };

    std::error_code ec;
    fs::create_directories(campaign.report_dir(), ec);
    write_file(campaign.report_dir() / "report.json", report.dump(2) + "\n");
    write_file(campaign.report_dir() / "report.md", markdown_report(report));
    diag << "wrote " << (campaign.report_dir() / "report.md").string() << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    return report_and_code(e, diag);
  }
}

}  // namespace qrfuzz::cli

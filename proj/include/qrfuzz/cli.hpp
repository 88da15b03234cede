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

// Campaign command layer: run, analyze, replay, and report over a fixed
// on-disk campaign layout. Each command is a plain function returning a
// process exit code, so the binary stays a thin argument-parsing shell
// and tests drive the commands directly.

#ifndef QRFUZZ_CLI_HPP_
#define QRFUZZ_CLI_HPP_

#include <nlohmann/json.hpp>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qrfuzz/gen.hpp"
#include "qrfuzz/harness.hpp"
#include "qrfuzz/reference_resolver.hpp"
#include "qrfuzz/zone.hpp"

namespace qrfuzz::cli {

// Exit codes shared by every verb.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;        // malformed invocation or config
inline constexpr int kExitEnvironment = 2;  // files, sockets, adapters
inline constexpr int kExitIncomplete = 3;   // campaign artifacts missing

// Fixed layout under a campaign output directory.
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kCasesFile = "cases/cases.jsonl";
inline constexpr const char* kTracesFile = "traces/traces.jsonl";
inline constexpr const char* kFindingsDir = "findings";
inline constexpr const char* kReportDir = "report";

// One resolver-under-test entry in the campaign roster. Exactly one of
// the kind-specific blocks applies.
struct AdapterSpec {
  std::string kind = "reference";  // reference | mock | command
  std::string name;                // unique within the roster
  refres::Quirks quirks;           // reference
  double upstream_timeout = 1.0;   // reference
  harness::MockConfig mock;        // mock
  harness::CommandSpec command;    // command
};

// Roster entry (de)serialization. Parsing throws std::runtime_error on an
// unknown kind or a malformed field.
AdapterSpec adapter_spec_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json adapter_spec_to_json(const AdapterSpec& spec);

// Expands --adapter arguments. "reference" and "mock" name built-in kinds
// with default settings; any other value is read as a JSON file holding
// one spec or {"adapters": [...]}. Missing names are filled from the kind;
// duplicates get "-2", "-3", ... suffixes. Throws std::runtime_error.
std::vector<AdapterSpec> resolve_adapters(const std::vector<std::string>& args);

// Per-unit adapter factory over a roster. Reference adapters resolve the
// campaign mode under base_domain through the unit's routing table.
harness::AdapterFactory make_factory(std::vector<AdapterSpec> roster,
                                     gen::Mode mode, dns::DnsName base_domain,
                                     double timeout_seconds);

// Zone hierarchy from a JSON file: {"zones": [{"origin", "identity",
// "text"}]} with zone contents in master-file text. Throws
// std::runtime_error with a diagnostic on parse or validation failure.
zone::ZoneConfig load_zone_file(const std::string& path);

// Persisted view of a generated case: identity, mutation record, final
// query octets, and the grammar choices behind it. Everything else is
// reproducible from (campaign seed, id).
nlohmann::ordered_json case_to_json(const gen::TestCase& c);

struct RunOptions {
  std::string mode = "recursive-only";
  std::size_t units = 25;
  std::uint64_t cases = 0;
  std::uint64_t seed = 0;
  double timeout = 5.0;
  std::size_t sequence_length = 1;
  std::string zone_file;              // empty = built-in hierarchy
  std::string out_dir;
  std::vector<std::string> adapters;  // kinds or spec-file paths
};

int cmd_run(const RunOptions& opt, std::ostream& diag);

struct AnalyzeOptions {
  std::string campaign_dir;
  std::string oracle = "all";    // cache | resource | crash | all
  std::optional<std::size_t> k;  // cache clusters; default: elbow of the curve
  double theta = 0.9;            // resource quantile
  std::uint64_t cluster_seed = 1;
};

int cmd_analyze(const AnalyzeOptions& opt, std::ostream& diag);

struct ReplayOptions {
  std::string campaign_dir;
  std::uint64_t case_id = 0;
  std::string adapter;  // roster name; empty = first roster entry
};

// Regenerates the case from the manifest seed, checks the regenerated
// query octets against the persisted ones, re-executes the case against
// one adapter, and writes the fresh trace as a JSON line to `out`.
int cmd_replay(const ReplayOptions& opt, std::ostream& out, std::ostream& diag);

struct ReportOptions {
  std::string campaign_dir;
};

int cmd_report(const ReportOptions& opt, std::ostream& diag);

}  // namespace qrfuzz::cli

#endif  // QRFUZZ_CLI_HPP_

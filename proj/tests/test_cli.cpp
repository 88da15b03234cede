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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qrfuzz/cli.hpp"
#include "qrfuzz/oracle.hpp"
#include "qrfuzz/trace.hpp"

using namespace qrfuzz;
namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

fs::path temp_dir(const std::string& tag) {
  static int counter = 0;
  fs::path dir = fs::temp_directory_path() /
                 ("qrfuzz-cli-" + tag + "-" + std::to_string(::getpid()) +
                  "-" + std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  REQUIRE(out.good());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream body;
  body << in.rdbuf();
  return body.str();
}

std::vector<ordered_json> json_lines(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<ordered_json> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(ordered_json::parse(line));
  }
  return rows;
}

struct CliResult {
  int exit_code = -1;
  std::string output;
};

CliResult run_cli(const std::string& args) {
  CliResult result;
  std::string command = std::string(QRFUZZ_BIN) + " " + args + " 2>&1";
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) {
    result.output.append(buf, n);
  }
  int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

cli::RunOptions mock_run(const fs::path& out, std::uint64_t cases,
                         std::size_t units) {
  cli::RunOptions opt;
  opt.mode = "forward-only";
  opt.units = units;
  opt.cases = cases;
  opt.seed = 77;
  opt.timeout = 0.5;
  opt.out_dir = out.string();
  opt.adapters = {"mock", "mock"};
  return opt;
}

}  // namespace

TEST_CASE("adapter specs round-trip through JSON") {
  cli::AdapterSpec ref;
  ref.kind = "reference";
  ref.name = "lax";
  ref.quirks.accept_out_of_bailiwick = true;
  ref.quirks.crash_on_pattern = true;
  ref.upstream_timeout = 0.25;
  cli::AdapterSpec back = cli::adapter_spec_from_json(adapter_spec_to_json(ref));
  CHECK(back.kind == "reference");
  CHECK(back.name == "lax");
  CHECK(back.quirks.accept_out_of_bailiwick);
  CHECK(back.quirks.crash_on_pattern);
  CHECK(!back.quirks.cache_unsolicited);
  CHECK(back.upstream_timeout == 0.25);

  cli::AdapterSpec mock;
  mock.kind = "mock";
  mock.name = "m";
  mock.mock.latency_seconds = 0.01;
  mock.mock.no_answer = true;
  mock.mock.cache_dump = false;
  back = cli::adapter_spec_from_json(adapter_spec_to_json(mock));
  CHECK(back.mock.latency_seconds == 0.01);
  CHECK(back.mock.no_answer);
  CHECK(!back.mock.cache_dump);

  cli::AdapterSpec cmd;
  cmd.kind = "command";
  cmd.name = "ext";
  cmd.command.query_host = "127.0.0.2";
  cmd.command.query_port = 5300;
  cmd.command.start_cmd = "true";
  cmd.command.dump_cmd = "printf x";
  cmd.command.dump_format = "bind";
  cmd.command.caps = {true, false};
  back = cli::adapter_spec_from_json(adapter_spec_to_json(cmd));
  CHECK(back.command.name == "ext");
  CHECK(back.command.query_host == "127.0.0.2");
  CHECK(back.command.query_port == 5300);
  CHECK(back.command.dump_format == "bind");
  CHECK(back.command.caps.cache_dump);
  CHECK(!back.command.caps.log_access);

  CHECK_THROWS_AS(cli::adapter_spec_from_json({{"kind", "teapot"}}),
                  std::runtime_error);
}

TEST_CASE("resolve_adapters expands kinds, files, and duplicate names") {
  std::vector<cli::AdapterSpec> roster =
      cli::resolve_adapters({"reference", "mock", "mock"});
  REQUIRE(roster.size() == 3);
  CHECK(roster[0].name == "reference");
  CHECK(roster[1].name == "mock");
  CHECK(roster[2].name == "mock-2");

  fs::path dir = temp_dir("roster");
  write_text(dir / "fleet.json", R"({"adapters":[
    {"kind":"reference","name":"clean"},
    {"kind":"reference","name":"lax","quirks":{"accept_out_of_bailiwick":true}}
  ]})");
  roster = cli::resolve_adapters({(dir / "fleet.json").string()});
  REQUIRE(roster.size() == 2);
  CHECK(roster[0].name == "clean");
  CHECK(roster[1].name == "lax");
  CHECK(roster[1].quirks.accept_out_of_bailiwick);

  write_text(dir / "one.json", R"({"kind":"mock","name":"solo"})");
  roster = cli::resolve_adapters({(dir / "one.json").string()});
  REQUIRE(roster.size() == 1);
  CHECK(roster[0].kind == "mock");

  CHECK_THROWS_AS(cli::resolve_adapters({"nonsense"}), std::runtime_error);
  write_text(dir / "bad.json", "{not json");
  CHECK_THROWS_AS(cli::resolve_adapters({(dir / "bad.json").string()}),
                  std::runtime_error);
}

TEST_CASE("zone files load and validate") {
  fs::path dir = temp_dir("zones");
  write_text(dir / "zones.json", R"({"zones":[
    {"origin":".","identity":"10.53.0.1","text":
     "@ 86400 IN SOA ns. admin. 1 3600 900 604800 86400\n@ 86400 IN NS ns.\nns. 86400 IN A 10.53.0.1\nnet. 86400 IN NS ns.net.\nns.net. 86400 IN A 10.53.0.2\n"},
    {"origin":"net.","identity":"10.53.0.2","text":
     "@ 86400 IN SOA ns admin 1 3600 900 604800 86400\n@ 86400 IN NS ns\nns 86400 IN A 10.53.0.2\nwww 60 IN A 192.0.2.80\n"}
  ]})");
  zone::ZoneConfig cfg = cli::load_zone_file((dir / "zones.json").string());
  REQUIRE(cfg.zones.size() == 2);
  CHECK(cfg.zones[0].identity == "10.53.0.1");
  CHECK(cfg.zones[1].origin == dns::DnsName::from_text("net."));
  CHECK(cfg.zones[1].records.size() == 4);

  write_text(dir / "broken.json", R"({"zones":[
    {"origin":".","identity":"10.53.0.1","text":
     "@ 86400 IN SOA ns. admin. 1 3600 900 604800 86400\nnet. 86400 IN NS ns.net.\n"}
  ]})");
  CHECK_THROWS_WITH_AS(cli::load_zone_file((dir / "broken.json").string()),
                       doctest::Contains("no glue"), std::runtime_error);
  CHECK_THROWS_AS(cli::load_zone_file((dir / "absent.json").string()),
                  std::runtime_error);
}

TEST_CASE("persisted case rows carry identity, mutations, and choices") {
  gen::Generator generator(gen::default_base_domain(gen::Mode::kForwardOnly));
  bool saw_mutated = false;
  for (std::uint64_t id = 0; id < 40 && !saw_mutated; ++id) {
    gen::TestCase c = generator.generate_case(123, id);
    ordered_json row = cli::case_to_json(c);
    CHECK(row["id"] == c.id);
    CHECK(row["seed"] == c.seed);
    CHECK(from_hex(row["query_hex"].get<std::string>()) == c.query_wire);
    CHECK(row["mutations"].size() == c.mutation_log.size());
    CHECK(row["query_choices"].size() == c.query_choices.size());
    if (c.mutated) {
      saw_mutated = true;
      CHECK(row["mutated"] == true);
    }
  }
  CHECK(saw_mutated);
}

TEST_CASE("cmd_run writes the campaign layout and an accurate manifest") {
  fs::path out = temp_dir("run");
  std::ostringstream diag;
  REQUIRE(cli::cmd_run(mock_run(out, 6, 2), diag) == cli::kExitOk);

  ordered_json manifest = ordered_json::parse(read_text(out / "manifest.json"));
  CHECK(manifest["mode"] == "forward-only");
  CHECK(manifest["cases"] == 6);
  CHECK(manifest["completed_cases"] == 6);
  CHECK(manifest["seed"] == 77);
  CHECK(manifest["failed_units"] == 0);
  CHECK(manifest["adapters"].size() == 2);
  CHECK(manifest["adapters"][1]["name"] == "mock-2");
  CHECK(manifest["base_domain"] == "test-fwd.example.com.");
  CHECK(manifest["layout"]["cases"] == "cases/cases.jsonl");
  CHECK(manifest["grammars"]["query_rules"].get<std::size_t>() > 0);

  std::vector<ordered_json> cases = json_lines(out / "cases/cases.jsonl");
  REQUIRE(cases.size() == 6);
  for (std::size_t i = 0; i < cases.size(); ++i) CHECK(cases[i]["id"] == i);

  std::vector<ordered_json> traces = json_lines(out / "traces/traces.jsonl");
  REQUIRE(traces.size() == 12);
  trace::TraceRecord first = trace::trace_from_json(traces[0]);
  CHECK(first.case_id == 0);
  CHECK(first.alive);
  CHECK(first.cache_present);
}

TEST_CASE("cmd_run is deterministic in the case files across unit counts") {
  fs::path a = temp_dir("det-a");
  fs::path b = temp_dir("det-b");
  std::ostringstream diag;
  REQUIRE(cli::cmd_run(mock_run(a, 10, 1), diag) == cli::kExitOk);
  REQUIRE(cli::cmd_run(mock_run(b, 10, 4), diag) == cli::kExitOk);
  CHECK(read_text(a / "cases/cases.jsonl") == read_text(b / "cases/cases.jsonl"));
  CHECK(json_lines(a / "traces/traces.jsonl") ==
        json_lines(b / "traces/traces.jsonl"));
}

TEST_CASE("cmd_run rejects bad invocations with usage or environment codes") {
  std::ostringstream diag;
  cli::RunOptions opt = mock_run(temp_dir("bad"), 5, 1);
  opt.mode = "sideways";
  CHECK(cli::cmd_run(opt, diag) == cli::kExitUsage);

  opt = mock_run(temp_dir("bad"), 0, 1);
  CHECK(cli::cmd_run(opt, diag) == cli::kExitUsage);

  opt = mock_run(temp_dir("bad"), 5, 1);
  opt.adapters = {"no-such-kind"};
  CHECK(cli::cmd_run(opt, diag) == cli::kExitUsage);

  opt = mock_run(temp_dir("bad"), 5, 1);
  opt.zone_file = "/nonexistent/zones.json";
  CHECK(cli::cmd_run(opt, diag) == cli::kExitEnvironment);
  CHECK(diag.str().find("zone file not found") != std::string::npos);
}

TEST_CASE("cmd_analyze covers skip, zero-diff, resource, and crash paths") {
  std::ostringstream diag;

  SUBCASE("single dumper per case skips the cache oracle") {
    fs::path out = temp_dir("an-skip");
    cli::RunOptions opt = mock_run(out, 4, 1);
    opt.adapters = {"mock"};
    REQUIRE(cli::cmd_run(opt, diag) == cli::kExitOk);
    cli::AnalyzeOptions an;
    an.campaign_dir = out.string();
    REQUIRE(cli::cmd_analyze(an, diag) == cli::kExitOk);
    ordered_json cache =
        ordered_json::parse(read_text(out / "findings/cache.json"));
    CHECK(cache["skipped"] == true);
    CHECK(cache["reason"].get<std::string>().find("two cache-dumping") !=
          std::string::npos);
  }

  SUBCASE("two identical mocks produce all-zero diffs and one cluster") {
    fs::path out = temp_dir("an-zero");
    REQUIRE(cli::cmd_run(mock_run(out, 6, 2), diag) == cli::kExitOk);
    cli::AnalyzeOptions an;
    an.campaign_dir = out.string();
    REQUIRE(cli::cmd_analyze(an, diag) == cli::kExitOk);

    ordered_json cache =
        ordered_json::parse(read_text(out / "findings/cache.json"));
    CHECK(cache["skipped"] == false);
    CHECK(cache["finding_case_ids"].empty());
    CHECK(cache["cases"].size() == 6);
    CHECK(cache["k"] == 1);
    REQUIRE(cache["clusters"].size() == 1);
    CHECK(cache["clusters"][0]["size"] == 6);
    CHECK(cache["assignments"].size() == 6);

    ordered_json resource =
        ordered_json::parse(read_text(out / "findings/resource.json"));
    CHECK(resource["metrics"].size() == 5);
    CHECK(resource["skipped_metrics"].empty());

    ordered_json crash =
        ordered_json::parse(read_text(out / "findings/crash.json"));
    CHECK(crash["case_ids"].empty());
  }

  SUBCASE("too few traces skips every resource metric") {
    fs::path out = temp_dir("an-few");
    cli::RunOptions opt = mock_run(out, 3, 1);
    opt.adapters = {"mock"};
    REQUIRE(cli::cmd_run(opt, diag) == cli::kExitOk);
    cli::AnalyzeOptions an;
    an.campaign_dir = out.string();
    an.oracle = "resource";
    REQUIRE(cli::cmd_analyze(an, diag) == cli::kExitOk);
    ordered_json resource =
        ordered_json::parse(read_text(out / "findings/resource.json"));
    CHECK(resource["metrics"].empty());
    CHECK(resource["skipped_metrics"].size() == 5);
  }

  SUBCASE("dying adapter shows up in the crash findings") {
    fs::path out = temp_dir("an-crash");
    fs::path spec = out / "dying.json";
    write_text(spec, R"({"kind":"mock","name":"dying","die_on_query":true})");
    cli::RunOptions opt = mock_run(out / "camp", 4, 1);
    opt.adapters = {spec.string()};
    REQUIRE(cli::cmd_run(opt, diag) == cli::kExitOk);
    cli::AnalyzeOptions an;
    an.campaign_dir = (out / "camp").string();
    an.oracle = "crash";
    REQUIRE(cli::cmd_analyze(an, diag) == cli::kExitOk);
    ordered_json crash =
        ordered_json::parse(read_text(out / "camp/findings/crash.json"));
    CHECK(crash["case_ids"].size() == 4);
  }

  SUBCASE("bad oracle and bad theta are usage errors") {
    cli::AnalyzeOptions an;
    an.campaign_dir = "/tmp";
    an.oracle = "vibes";
    CHECK(cli::cmd_analyze(an, diag) == cli::kExitUsage);
    an.oracle = "all";
    an.theta = 1.5;
    CHECK(cli::cmd_analyze(an, diag) == cli::kExitUsage);
  }

  SUBCASE("missing campaign directory is incomplete") {
    cli::AnalyzeOptions an;
    an.campaign_dir = (temp_dir("an-miss") / "ghost").string();
    CHECK(cli::cmd_analyze(an, diag) == cli::kExitIncomplete);
  }
}

TEST_CASE("cmd_replay reproduces a persisted case") {
  fs::path out = temp_dir("replay");
  std::ostringstream diag;
  REQUIRE(cli::cmd_run(mock_run(out, 5, 2), diag) == cli::kExitOk);

  cli::ReplayOptions rp;
  rp.campaign_dir = out.string();
  rp.case_id = 3;
  std::ostringstream line;
  REQUIRE(cli::cmd_replay(rp, line, diag) == cli::kExitOk);
  trace::TraceRecord replayed =
      trace::trace_from_json(ordered_json::parse(line.str()));
  CHECK(replayed.case_id == 3);
  CHECK(replayed.adapter == "mock");
  CHECK(replayed.alive);
  CHECK(replayed.response_hex.has_value());

  trace::TraceRecord original;
  bool found = false;
  for (const ordered_json& row : json_lines(out / "traces/traces.jsonl")) {
    trace::TraceRecord t = trace::trace_from_json(row);
    if (t.case_id == 3 && t.adapter == "mock") {
      original = t;
      found = true;
    }
  }
  REQUIRE(found);
  CHECK(replayed.response_hex == original.response_hex);
  CHECK(replayed.cache == original.cache);

  rp.case_id = 999;
  CHECK(cli::cmd_replay(rp, line, diag) == cli::kExitIncomplete);

  rp.case_id = 1;
  rp.adapter = "unknown";
  CHECK(cli::cmd_replay(rp, line, diag) == cli::kExitUsage);

  rp.adapter = "mock-2";
  std::ostringstream second;
  CHECK(cli::cmd_replay(rp, second, diag) == cli::kExitOk);
  CHECK(trace::trace_from_json(ordered_json::parse(second.str())).adapter ==
        "mock-2");
}

TEST_CASE("cmd_replay flags tampered case files as inconsistent") {
  fs::path out = temp_dir("tamper");
  std::ostringstream diag;
  REQUIRE(cli::cmd_run(mock_run(out, 3, 1), diag) == cli::kExitOk);
  std::vector<ordered_json> rows = json_lines(out / "cases/cases.jsonl");
  rows[1]["query_hex"] = "deadbeef";
  std::ostringstream rewritten;
  for (const ordered_json& row : rows) rewritten << row.dump() << "\n";
  write_text(out / "cases/cases.jsonl", rewritten.str());

  cli::ReplayOptions rp;
  rp.campaign_dir = out.string();
  rp.case_id = 1;
  std::ostringstream line;
  CHECK(cli::cmd_replay(rp, line, diag) == cli::kExitIncomplete);
}

TEST_CASE("cmd_report reconciles counts with the persisted findings") {
  fs::path out = temp_dir("report");
  std::ostringstream diag;
  REQUIRE(cli::cmd_run(mock_run(out, 12, 2), diag) == cli::kExitOk);
  cli::AnalyzeOptions an;
  an.campaign_dir = out.string();
  REQUIRE(cli::cmd_analyze(an, diag) == cli::kExitOk);
  cli::ReportOptions rep;
  rep.campaign_dir = out.string();
  REQUIRE(cli::cmd_report(rep, diag) == cli::kExitOk);

  ordered_json report =
      ordered_json::parse(read_text(out / "report/report.json"));

  ordered_json cache =
      ordered_json::parse(read_text(out / "findings/cache.json"));
  std::size_t cache_count = 0;
  for (const auto& row : cache["cases"]) {
    if (row["nonzero"].get<bool>()) ++cache_count;
  }
  CHECK(report["findings"]["cache"]["count"] == cache_count);

  ordered_json resource =
      ordered_json::parse(read_text(out / "findings/resource.json"));
  std::size_t resource_count = 0;
  for (const auto& row : resource["metrics"]) {
    resource_count += row["flagged"].size();
  }
  CHECK(report["findings"]["resource"]["count"] == resource_count);

  ordered_json crash =
      ordered_json::parse(read_text(out / "findings/crash.json"));
  CHECK(report["findings"]["crash"]["count"] == crash["case_ids"].size());

  CHECK(report["campaign"]["completed_cases"] == 12);
  CHECK(report["campaign"]["throughput_cases_per_second"].get<double>() > 0);
  double share = report["mutation"]["share"].get<double>();
  CHECK(share >= 0.0);
  CHECK(share <= 1.0);
  CHECK(report["field_coverage"]["query"].contains("OPCODE"));
  CHECK(report["field_coverage"]["response"].contains("RCODE"));

  std::string md = read_text(out / "report/report.md");
  CHECK(md.find("# Campaign report") != std::string::npos);
  CHECK(md.find("| oracle | findings |") != std::string::npos);
  CHECK(md.find("### OPCODE") != std::string::npos);
}

TEST_CASE("reference fleet pipeline surfaces bailiwick divergence") {
  fs::path dir = temp_dir("fleet");
  write_text(dir / "fleet.json", R"({"adapters":[
    {"kind":"reference","name":"clean"},
    {"kind":"reference","name":"lax","quirks":{"accept_out_of_bailiwick":true}}
  ]})");

  cli::RunOptions opt;
  opt.mode = "forward-only";
  opt.units = 4;
  opt.cases = 40;
  opt.seed = 11;
  opt.timeout = 2.0;
  opt.out_dir = (dir / "camp").string();
  opt.adapters = {(dir / "fleet.json").string()};
  std::ostringstream diag;
  REQUIRE(cli::cmd_run(opt, diag) == cli::kExitOk);

  cli::AnalyzeOptions an;
  an.campaign_dir = opt.out_dir;
  an.k = 2;
  REQUIRE(cli::cmd_analyze(an, diag) == cli::kExitOk);

  ordered_json cache =
      ordered_json::parse(read_text(dir / "camp/findings/cache.json"));
  REQUIRE(cache["skipped"] == false);
  CHECK(cache["adapters"] == ordered_json::array({"clean", "lax"}));
  REQUIRE(cache["finding_case_ids"].size() > 0);
  CHECK(cache["k"] == 2);

  // The lax resolver caches extra records; the clean one never holds more.
  for (const auto& row : cache["cases"]) {
    CHECK(row["values"][0].get<std::size_t>() == 0);
  }

  std::size_t cluster_total = 0;
  for (const auto& cluster : cache["clusters"]) {
    cluster_total += cluster["size"].get<std::size_t>();
  }
  CHECK(cluster_total == cache["cases"].size());

  cli::ReplayOptions rp;
  rp.campaign_dir = opt.out_dir;
  rp.case_id = cache["finding_case_ids"][0].get<std::uint64_t>();
  rp.adapter = "lax";
  std::ostringstream line;
  REQUIRE(cli::cmd_replay(rp, line, diag) == cli::kExitOk);
  trace::TraceRecord replayed =
      trace::trace_from_json(ordered_json::parse(line.str()));
  CHECK(replayed.adapter == "lax");
  CHECK(replayed.cache_present);
}

TEST_CASE("binary maps parse errors, help, and verbs to the exit contract") {
  CHECK(run_cli("").exit_code == cli::kExitUsage);
  CHECK(run_cli("--help").exit_code == 0);
  CHECK(run_cli("run --help").exit_code == 0);
  CHECK(run_cli("frobnicate").exit_code == cli::kExitUsage);
  CHECK(run_cli("run --cases 5").exit_code == cli::kExitUsage);  // no --out
  CHECK(run_cli("analyze /nonexistent-campaign").exit_code ==
        cli::kExitIncomplete);
}

TEST_CASE("binary runs the full pipeline") {
  fs::path out = temp_dir("bin");
  CliResult run = run_cli("run --mode cdns-nofallback --cases 5 --units 2 "
                          "--seed 3 --adapter mock,mock --out " +
                          (out / "camp").string());
  CAPTURE(run.output);
  REQUIRE(run.exit_code == 0);
  CHECK(run.output.find("5/5 cases") != std::string::npos);

  CliResult analyze = run_cli("analyze " + (out / "camp").string());
  CAPTURE(analyze.output);
  CHECK(analyze.exit_code == 0);

  CliResult replay = run_cli("replay " + (out / "camp").string() + " --case 2");
  CAPTURE(replay.output);
  REQUIRE(replay.exit_code == 0);
  std::size_t brace = replay.output.find('{');
  REQUIRE(brace != std::string::npos);
  ordered_json t = ordered_json::parse(
      replay.output.substr(brace, replay.output.find('\n', brace) - brace));
  CHECK(t["case_id"] == 2);

  CliResult report = run_cli("report " + (out / "camp").string());
  CAPTURE(report.output);
  CHECK(report.exit_code == 0);
  CHECK(fs::exists(out / "camp/report/report.md"));
}

TEST_CASE("binary reads verb options from a config file") {
  fs::path dir = temp_dir("cfg");
  write_text(dir / "campaign.ini",
             "[run]\nmode=forward-only\ncases=4\nunits=2\nseed=21\n"
             "adapter=mock\nout=" + (dir / "camp").string() + "\n");
  CliResult run = run_cli("run --config " + (dir / "campaign.ini").string());
  CAPTURE(run.output);
  REQUIRE(run.exit_code == 0);
  ordered_json manifest =
      ordered_json::parse(read_text(dir / "camp/manifest.json"));
  CHECK(manifest["cases"] == 4);
  CHECK(manifest["seed"] == 21);
  CHECK(manifest["mode"] == "forward-only");

  CliResult over = run_cli("run --config " + (dir / "campaign.ini").string() +
                           " --cases 2 --out " + (dir / "camp2").string());
  CAPTURE(over.output);
  REQUIRE(over.exit_code == 0);
  manifest = ordered_json::parse(read_text(dir / "camp2/manifest.json"));
  CHECK(manifest["cases"] == 2);
}

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

#include <CLI11.hpp>
#include <cstdint>
#include <iostream>

#include "qrfuzz/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"qrfuzz: blackbox query-response fuzzing for DNS resolvers"};
  app.require_subcommand(1);
  app.fallthrough(true);
  app.set_config("--config", "",
                 "config file: verb sections ([run], [analyze], ...) whose "
                 "keys mirror the long options");

  qrfuzz::cli::RunOptions run_opt;
  CLI::App* run =
      app.add_subcommand("run", "generate cases and drive the resolver fleet");
  run->add_option("--mode", run_opt.mode,
                  "recursive-only | forward-only | cdns-fallback | "
                  "cdns-nofallback")
      ->capture_default_str();
  run->add_option("--units", run_opt.units, "parallel worker units")
      ->capture_default_str();
  run->add_option("--cases", run_opt.cases, "number of test cases")
      ->required();
  run->add_option("--seed", run_opt.seed, "campaign seed")
      ->capture_default_str();
  run->add_option("--timeout", run_opt.timeout, "per-query timeout (seconds)")
      ->capture_default_str();
  run->add_option("--sequence-length", run_opt.sequence_length,
                  "cases per round between resolver state resets")
      ->capture_default_str();
  run->add_option("--adapter,--adapters", run_opt.adapters,
                  "adapter kind (reference, mock) or spec file; repeatable")
      ->delimiter(',');
  run->add_option("--zone-file", run_opt.zone_file,
                  "zone hierarchy JSON file (default: built-in)");
  run->add_option("--out", run_opt.out_dir, "campaign output directory")
      ->required();

  qrfuzz::cli::AnalyzeOptions analyze_opt;
  std::int64_t k_flag = -1;
  CLI::App* analyze = app.add_subcommand(
      "analyze", "run finding oracles over a finished campaign");
  analyze->add_option("dir", analyze_opt.campaign_dir, "campaign directory")
      ->required();
  analyze->add_option("--oracle", analyze_opt.oracle,
                      "cache | resource | crash | all")
      ->capture_default_str();
  analyze->add_option("--k", k_flag,
                      "cache cluster count (default: elbow of the SSE curve)");
  analyze->add_option("--theta", analyze_opt.theta,
                      "resource outlier quantile in (0, 1)")
      ->capture_default_str();
  analyze->add_option("--cluster-seed", analyze_opt.cluster_seed,
                      "clustering seed")
      ->capture_default_str();

  qrfuzz::cli::ReplayOptions replay_opt;
  CLI::App* replay =
      app.add_subcommand("replay", "re-execute one persisted case");
  replay->add_option("dir", replay_opt.campaign_dir, "campaign directory")
      ->required();
  replay->add_option("--case", replay_opt.case_id, "case id")->required();
  replay->add_option("--adapter", replay_opt.adapter,
                     "roster adapter name (default: first entry)");

  qrfuzz::cli::ReportOptions report_opt;
  CLI::App* report =
      app.add_subcommand("report", "render the campaign report");
  report->add_option("dir", report_opt.campaign_dir, "campaign directory")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? qrfuzz::cli::kExitOk : qrfuzz::cli::kExitUsage;
  }

  if (run->parsed()) return qrfuzz::cli::cmd_run(run_opt, std::cerr);
  if (analyze->parsed()) {
    if (k_flag >= 0) analyze_opt.k = static_cast<std::size_t>(k_flag);
    return qrfuzz::cli::cmd_analyze(analyze_opt, std::cerr);
  }
  if (replay->parsed()) {
    return qrfuzz::cli::cmd_replay(replay_opt, std::cout, std::cerr);
  }
  if (report->parsed()) return qrfuzz::cli::cmd_report(report_opt, std::cerr);
  return qrfuzz::cli::kExitUsage;
}

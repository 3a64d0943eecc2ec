// Copyright 2026 The dtoctou Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// dtoctou: run benchmark scenarios, calibrate thresholds, self-test the
// verifier and re-render reports. Talks to the simulator only through the
// C interface.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dtoctou/dtoctou.h"

namespace {

// Exit statuses.
constexpr int kExitOk = 0;
constexpr int kExitCheck = 1;
constexpr int kExitSchema = 2;
constexpr int kExitIo = 3;
constexpr int kExitOther = 4;

struct CliError {
  int status;
  std::string message;
};

int exit_for(dt_status s) {
  switch (s) {
    case DT_OK:
      return kExitOk;
    case DT_ERR_SCHEMA:
    case DT_ERR_INVALID_ARGUMENT:
    case DT_ERR_NOT_FOUND:
    case DT_ERR_DUPLICATE:
      return kExitSchema;
    case DT_ERR_IO:
      return kExitIo;
    default:
      return kExitOther;
  }
}

void check(dt_status s, const std::string& what) {
  if (s != DT_OK) throw CliError{exit_for(s), what + ": " + dt_last_error()};
}

struct ScenarioDeleter {
  void operator()(dt_scenario* s) const { dt_scenario_free(s); }
};
struct ReportDeleter {
  void operator()(dt_report* r) const { dt_report_free(r); }
};
struct StringDeleter {
  void operator()(char* s) const { dt_string_free(s); }
};
using ScenarioPtr = std::unique_ptr<dt_scenario, ScenarioDeleter>;
using ReportPtr = std::unique_ptr<dt_report, ReportDeleter>;
using StringPtr = std::unique_ptr<char, StringDeleter>;

std::string take(char* s) { return StringPtr(s).get(); }

struct Overrides {
  std::optional<std::int64_t> trials;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> defense;
  std::optional<std::string> grounding;
  std::optional<std::string> gap;
  std::optional<std::string> scale;
};

void add_override_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--trials", o.trials, "Trials per cell");
  cmd->add_option("--seed", o.seed, "Base seed");
  cmd->add_option("--defense", o.defense,
                  "on|off|all|l1|l2a|l2b|l2c|mask:<layer>,...");
  cmd->add_option("--grounding", o.grounding, "oracle|offset:<lo>,<hi>");
  cmd->add_option("--gap", o.gap, "fixed:<seconds>|lognormal");
  cmd->add_option("--scale", o.scale, "full|quarter");
}

ScenarioPtr load(const std::string& path, const Overrides& o) {
  dt_scenario* raw = nullptr;
  check(dt_scenario_load(path.c_str(), &raw), path);
  ScenarioPtr s(raw);
  if (o.trials) check(dt_scenario_set_trials(s.get(), *o.trials), "--trials");
  if (o.seed) check(dt_scenario_set_seed(s.get(), *o.seed), "--seed");
  if (o.defense) check(dt_scenario_set_defense(s.get(), o.defense->c_str()), "--defense");
  if (o.grounding) {
    check(dt_scenario_set_grounding(s.get(), o.grounding->c_str()), "--grounding");
  }
  if (o.gap) check(dt_scenario_set_gap(s.get(), o.gap->c_str()), "--gap");
  if (o.scale) check(dt_scenario_set_scale(s.get(), o.scale->c_str()), "--scale");
  return s;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError{kExitIo, "cannot read " + path};
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct RunArgs {
  std::vector<std::string> scenarios;
  Overrides overrides;
  std::string out = "out";
  bool check = false;
  int jobs = 1;
  std::string format = "summary";
};

int cmd_run(const RunArgs& a) {
  ReportPtr all;
  std::size_t failed = 0;
  for (const auto& path : a.scenarios) {
    ScenarioPtr s = load(path, a.overrides);
    dt_report* raw = nullptr;
    check(dt_run(s.get(), a.jobs, &raw), path);
    ReportPtr r(raw);
    if (a.check) {
      std::size_t n = 0;
      char* text = nullptr;
      check(dt_report_check(r.get(), s.get(), &n, &text), path);
      std::cout << take(text);
      failed += n;
    }
    if (!all) {
      all = std::move(r);
    } else {
      check(dt_report_append(all.get(), r.get()), path);
    }
  }
  char* text = nullptr;
  check(dt_report_emit(all.get(), a.format.c_str(), &text), "--format");
  std::cout << take(text);
  check(dt_report_write(all.get(), a.out.c_str()), a.out);
  if (a.check) {
    std::cout << (failed ? "check: " + std::to_string(failed) + " expectation(s) failed\n"
                         : std::string("check: all expectations met\n"));
  }
  return failed ? kExitCheck : kExitOk;
}

int cmd_calibrate(const std::string& path, const Overrides& o, std::int64_t n) {
  ScenarioPtr s = load(path, o);
  char* text = nullptr;
  check(dt_calibrate(s.get(), n, &text), path);
  std::cout << take(text) << "\n";
  return kExitOk;
}

int cmd_selftest(std::optional<double> tau1, std::optional<std::string> defense) {
  std::size_t failed = 0;
  char* text = nullptr;
  check(dt_selftest(tau1.value_or(-1.0), defense ? defense->c_str() : nullptr,
                    &failed, &text),
        "selftest");
  std::cout << take(text) << "\n";
  std::cout << "selftest: " << (6 - failed) << "/6 passed\n";
  return failed ? kExitCheck : kExitOk;
}

int cmd_report(const std::string& jsonl, const std::string& format,
               const std::optional<std::string>& out) {
  const std::string text = read_file(jsonl);
  dt_report* raw = nullptr;
  check(dt_report_from_jsonl(text.c_str(), &raw), jsonl);
  ReportPtr r(raw);
  char* doc = nullptr;
  check(dt_report_emit(r.get(), format.c_str(), &doc), "--format");
  std::cout << take(doc);
  if (out) check(dt_report_write(r.get(), out->c_str()), *out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desktop GUI-agent TOCTOU simulator and benchmark"};
  app.require_subcommand(1);
  app.set_version_flag("--version", dt_version());

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run scenario campaigns and write reports");
  run_cmd->add_option("scenarios", run.scenarios, "Scenario JSON files")
      ->required();
  add_override_flags(run_cmd, run.overrides);
  run_cmd->add_option("--out", run.out, "Output directory")->capture_default_str();
  run_cmd->add_flag("--check", run.check, "Assert the scenarios' expectations");
  run_cmd->add_option("--jobs", run.jobs, "Worker threads")->check(CLI::Range(1, 256));
  run_cmd->add_option("--format", run.format, "Report printed to stdout");

  std::string cal_path;
  Overrides cal_overrides;
  std::int64_t cal_n = 50;
  auto* cal_cmd = app.add_subcommand("calibrate", "Suggest thresholds from benign trials");
  cal_cmd->add_option("scenario", cal_path, "Benign scenario JSON")
      ->required();
  add_override_flags(cal_cmd, cal_overrides);
  cal_cmd->add_option("-n,--n", cal_n, "Benign trials")->check(CLI::PositiveNumber);

  std::optional<double> st_tau1;
  std::optional<std::string> st_defense;
  auto* st_cmd = app.add_subcommand("selftest", "Run the six verifier self-tests");
  st_cmd->add_option("--tau1", st_tau1, "SSIM threshold override");
  st_cmd->add_option("--defense", st_defense, "Layer mask override");

  std::string rep_path;
  std::string rep_format = "csv";
  std::optional<std::string> rep_out;
  auto* rep_cmd = app.add_subcommand("report", "Re-render reports from trials.jsonl");
  rep_cmd->add_option("trials", rep_path, "trials.jsonl")->required();
  rep_cmd->add_option("--format", rep_format, "Output format");
  rep_cmd->add_option("--out", rep_out, "Also rewrite the report files here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitSchema;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*cal_cmd) return cmd_calibrate(cal_path, cal_overrides, cal_n);
    if (*st_cmd) return cmd_selftest(st_tau1, st_defense);
    if (*rep_cmd) return cmd_report(rep_path, rep_format, rep_out);
  } catch (const CliError& e) {
    std::cerr << "dtoctou: " << e.message << "\n";
    return e.status;
  }
  return kExitOther;
}

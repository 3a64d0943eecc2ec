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

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "dtoctou/trial.hpp"

namespace dtoctou {

struct Cell {
  std::string id;
  TrialConfig config;
  std::int64_t trials = 15;
};

std::uint64_t trial_seed(std::uint64_t base_seed, std::string_view cell,
                         std::int64_t index);

// Integer tallies over a set of trials. Merging is a plain sum, so the
// result does not depend on how trials were grouped or ordered, except for
// the floating SSIM sum, which is always accumulated in record order.
struct CellStats {
  std::int64_t n = 0;
  std::int64_t attack_trials = 0;
  std::int64_t clicked = 0;
  std::int64_t verified = 0;
  std::int64_t dispatched = 0;
  std::int64_t aborted = 0;
  std::int64_t spatial_hits = 0;
  std::int64_t trigger_hits = 0;
  std::int64_t behavioral_defined = 0;
  std::int64_t behavioral_hits = 0;
  std::int64_t effective_hits = 0;
  std::int64_t vav = 0;
  std::int64_t intended_received = 0;
  std::int64_t b_trials = 0;
  std::array<std::int64_t, 4> fired_by{};      // attribution, as kLayers
  std::array<std::int64_t, 4> layer_failed{};  // diagnostic detections
  std::int64_t gap_sum_ms = 0;
  std::int64_t gap_sq_sum_ms = 0;
  std::int64_t gap_min_ms = 0;
  std::int64_t gap_max_ms = 0;
  std::int64_t overhead_sum_ms = 0;
  std::int64_t ssim_count = 0;
  double ssim_sum = 0.0;
  std::optional<double> ssim_min;
  std::optional<double> glob_max;
  double glob_sum = 0.0;
  std::int64_t glob_count = 0;

  void add(const TrialResult& r);
  void merge(const CellStats& o);
  friend bool operator==(const CellStats&, const CellStats&) = default;
};

// Rates; unset where the denominator is empty or the metric does not apply.
struct CellMetrics {
  std::optional<double> spatial_asr;
  std::optional<double> trigger_asr;     // window-raise trials only
  std::optional<double> behavioral_asr;  // page-target trials only
  std::optional<double> air;             // attack trials
  std::optional<double> fpr;             // benign trials
  std::optional<double> effective_asr;
  std::array<std::optional<double>, 4> layer_air{};
  std::optional<double> gap_mean_s;
  std::optional<double> gap_std_s;
  std::optional<double> gap_min_s;
  std::optional<double> gap_max_s;
  std::optional<double> overhead_mean_ms;
  std::optional<double> ssim_mean;
  std::optional<double> glob_mean;
};

CellMetrics metrics(const CellStats& s);

struct GapStats {
  double mean = 0.0;
  double std = 0.0;
  double min = 0.0;
  double max = 0.0;
};

// Population statistics of the gaps, in seconds. Throws on empty input.
GapStats gap_stats(const std::vector<TrialResult>& results);
GapStats gap_stats_ms(const std::vector<Millis>& gaps_ms);

struct CellReport {
  std::string id;
  std::string task;
  Primitive primitive = Primitive::kNone;
  OverlayStyle style = OverlayStyle::kFullscreen;
  LayerMask defense;
  CellStats stats;
  std::vector<TrialResult> trials;
  friend bool operator==(const CellReport&, const CellReport&) = default;
};

struct CampaignReport {
  std::uint64_t base_seed = 0;
  // Fully resolved configuration the campaign ran with.
  nlohmann::json config = nlohmann::json::object();
  std::vector<CellReport> cells;

  CellStats overall() const;
  friend bool operator==(const CampaignReport&, const CampaignReport&) = default;
};

// Runs every cell. Trials are distributed over `jobs` threads; results are
// identical for any job count or cell order.
CampaignReport run_campaign(const std::vector<Cell>& cells,
                            std::uint64_t base_seed, int jobs = 1);

// Rebuilds per-cell reports from flat trial records, grouped by cell id in
// order of first appearance.
CampaignReport report_from_trials(const std::vector<TrialResult>& trials);

nlohmann::json trial_to_json(const TrialResult& r);
TrialResult trial_from_json(const nlohmann::json& j);
nlohmann::json report_to_json(const CampaignReport& r);
CampaignReport report_from_json(const nlohmann::json& j);

std::vector<TrialResult> parse_jsonl(std::string_view text);

// Formats: csv, json, jsonl, summary, styles, raise, dom, defense_overlay,
// defense_raise, defense_dom.
std::string emit_report(const CampaignReport& report, std::string_view format);
std::vector<std::string> report_formats();

// Threshold suggestions from benign trials.
struct Calibration {
  std::int64_t n = 0;
  double min_ssim = 1.0;
  double max_glob_ratio = 0.0;
  double suggested_tau1 = 0.0;
  double suggested_tau2a = 0.0;
  // Set when a suggestion lies on the unsafe side of the configured value.
  bool tau1_flag = false;
  bool tau2a_flag = false;
};

Calibration calibrate(const TrialConfig& benign, std::int64_t n,
                      std::uint64_t base_seed);
nlohmann::json calibration_to_json(const Calibration& c);

// `--check` assertions against the merged statistics of a campaign.
struct Expectation {
  std::string metric;  // e.g. spatial_asr, air, fired_l1, ssim_min
  double value = 0.0;
  double tolerance = 0.0;
  // "eq" (within tolerance), "ge", "le", "lt", "gt".
  std::string op = "eq";
  friend bool operator==(const Expectation&, const Expectation&) = default;
};

struct CheckResult {
  Expectation expectation;
  std::optional<double> actual;
  bool passed = false;
};

std::optional<double> metric_value(const CellStats& stats,
                                   std::string_view metric);
std::vector<CheckResult> check_expectations(
    const CellStats& stats, const std::vector<Expectation>& expectations);

}  // namespace dtoctou

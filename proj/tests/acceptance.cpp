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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Scenario files are read from DTOCTOU_SCENARIO_DIR.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dtoctou/attacker.hpp"
#include "dtoctou/bench.hpp"
#include "dtoctou/scenario.hpp"
#include "ssim_reference.hpp"

namespace dt = dtoctou;

namespace {

int g_failures = 0;

void report(int n, bool ok, const std::string& what, const std::string& detail) {
  std::printf("%s criterion %d: %s [%s]\n", ok ? "PASS" : "FAIL", n, what.c_str(),
              detail.c_str());
  if (!ok) ++g_failures;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string frac(std::int64_t a, std::int64_t b) {
  return std::to_string(a) + "/" + std::to_string(b);
}

dt::Scenario scenario(const std::string& name) {
  return dt::load_scenario(std::filesystem::path(DTOCTOU_SCENARIO_DIR) / (name + ".json"));
}

dt::CampaignReport run(const dt::Scenario& s, int jobs = 1) {
  dt::CampaignReport r = dt::run_campaign(dt::build_cells(s), s.seed, jobs);
  r.config = dt::scenario_to_json(s);
  return r;
}

const std::vector<std::string> kSuite = {
    "primA_nodefense", "primA_defense",   "primB_nodefense",  "primB_defense",
    "primC_nodefense", "primC_defense",   "primC_l2c",        "benign",
    "timer_long_gap",  "timer_short_gap", "offset_nodefense", "offset_defense",
    "dock",            "primC_noise_burst"};

std::map<std::string, dt::CampaignReport> run_suite(int jobs) {
  std::map<std::string, dt::CampaignReport> out;
  for (const auto& name : kSuite) out[name] = run(scenario(name), jobs);
  return out;
}

dt::CellStats by_style(const dt::CampaignReport& r, dt::OverlayStyle style) {
  dt::CellStats s;
  for (const auto& c : r.cells) {
    if (c.style == style) s.merge(c.stats);
  }
  return s;
}

constexpr std::size_t L1 = 0, L2A = 1, L2B = 2, L2C = 3;

// Replays a C trial's timeline and compares the two frames byte for byte.
bool primitive_c_frames_identical(const dt::TrialConfig& cfg, const dt::TrialResult& t) {
  dt::DesktopState s = dt::build_desktop(cfg.task, cfg.fixture);
  dt::AttackScenario a = cfg.attack;
  a.scale_divisor = cfg.fixture.scale_divisor;
  dt::Attacker atk(a);
  atk.stage(s);
  s.advance_to(t.t_obs);
  const dt::PixelFrame at_obs = dt::render(s);
  const dt::Millis due = t.t_obs + atk.trigger_delay_ms();
  s.advance_to(due);
  if (!atk.fire(s, due, t.t_obs)) return false;
  s.advance_to(t.t_act);
  return atk.artifact_present() && dt::render(s) == at_obs &&
         at_obs.digest() == t.frame_obs_digest && t.frame_obs_digest == t.frame_act_digest;
}

double air_of(const dt::CellStats& s) { return dt::metrics(s).air.value_or(-1.0); }

}  // namespace

int main() {
  std::printf("running acceptance suite\n");
  const auto suite = run_suite(1);

  {  // 1
    const auto s = suite.at("primB_nodefense").overall();
    const bool ok = s.n == 45 && s.spatial_hits == 45 && s.trigger_hits == 45;
    report(1, ok, "window raise, no defense: Spatial-ASR = Trigger-ASR = 100%",
           "spatial " + frac(s.spatial_hits, s.n) + ", trigger " + frac(s.trigger_hits, s.n));
  }
  {  // 2
    const auto& r = suite.at("primC_nodefense");
    const auto s = r.overall();
    const auto cells = dt::build_cells(scenario("primC_nodefense"));
    std::int64_t identical = 0, total = 0;
    for (std::size_t i = 0; i < r.cells.size(); ++i) {
      for (const auto& t : r.cells[i].trials) {
        ++total;
        if (primitive_c_frames_identical(cells[i].config, t)) ++identical;
      }
    }
    const bool ok = s.n == 45 && s.behavioral_defined == 45 && s.behavioral_hits == 45 &&
                    identical == 45 && total == 45;
    report(2, ok, "DOM overlay, no defense: Behavioral-ASR = 100%, T_obs/T_act frames identical",
           "behavioral " + frac(s.behavioral_hits, s.behavioral_defined) +
               ", identical frames " + frac(identical, total));
  }
  {  // 3
    const auto& r = suite.at("primA_defense");
    const auto all = r.overall();
    const auto corner = by_style(r, dt::OverlayStyle::kCornerBanner);
    const auto zenity = by_style(r, dt::OverlayStyle::kZenityDialog);
    const bool ok = all.n == 135 && all.aborted == 135 && all.effective_hits == 0 &&
                    corner.n == 45 && corner.fired_by[L2A] == 45 && zenity.n == 45 &&
                    zenity.fired_by[L2A] == 45;
    report(3, ok, "overlay grid, defense on: AIR 100%, Eff. ASR 0%, corner/zenity by L2a",
           "aborted " + frac(all.aborted, all.n) + ", eff hits " +
               std::to_string(all.effective_hits) + ", corner L2a " +
               frac(corner.fired_by[L2A], corner.n) + ", zenity L2a " +
               frac(zenity.fired_by[L2A], zenity.n));
  }
  {  // 4
    const auto s = suite.at("primB_defense").overall();
    const bool ok = s.n == 45 && s.aborted == 45 && s.fired_by[L1] == 45 &&
                    s.layer_failed[L2B] == 0;
    report(4, ok, "window raise, defense on: AIR 100% by L1, L2b detections 0",
           "aborted " + frac(s.aborted, s.n) + ", L1 " + std::to_string(s.fired_by[L1]) +
               ", L2b detections " + std::to_string(s.layer_failed[L2B]));
  }
  {  // 5
    const auto off = suite.at("primC_defense").overall();
    const auto l2c = suite.at("primC_l2c").overall();
    const bool ok = off.n == 45 && off.aborted == 0 && l2c.n == 45 && l2c.aborted == 45 &&
                    l2c.fired_by[L2C] == 45;
    report(5, ok, "DOM overlay: AIR 0% without L2c, 100% with L2c",
           "without " + frac(off.aborted, off.n) + ", with " + frac(l2c.aborted, l2c.n));
  }
  {  // 6
    const auto s = suite.at("benign").overall();
    const double ssim_min = s.ssim_min.value_or(-1), glob_max = s.glob_max.value_or(1);
    const bool ok = s.n == 30 && s.verified == 30 && s.aborted == 0 && ssim_min >= 0.97 &&
                    glob_max < 0.0004;
    report(6, ok, "benign dynamics, defense on: 0 aborts, min SSIM >= 0.97, max glob < 0.0004",
           "aborts " + frac(s.aborted, s.n) + ", min SSIM " + fmt("%.4f", ssim_min) +
               ", max glob " + fmt("%.6f", glob_max));
  }
  {  // 7
    const auto& lr = suite.at("timer_long_gap");
    std::int64_t dismissed = 0, n = 0;
    for (const auto& c : lr.cells) {
      for (const auto& t : c.trials) {
        ++n;
        if (t.attack_fired && !t.artifact_present && !t.aborted && t.intended_received)
          ++dismissed;
      }
    }
    const auto sr = suite.at("timer_short_gap").overall();
    const bool ok = n == 15 && dismissed == 15 && sr.n == 15 && sr.aborted == 15;
    report(7, ok, "30 s overlay timer: gap 35.2 s self-dismisses and lands; gap 6.5 s aborts",
           "35.2 s landed " + frac(dismissed, n) + ", 6.5 s aborted " + frac(sr.aborted, sr.n));
  }
  {  // 8
    const auto off = suite.at("offset_nodefense").overall();
    const auto on = suite.at("offset_defense").overall();
    const bool ok = off.n == 45 && off.spatial_hits == 0 && on.n == 45 && on.aborted == 45;
    report(8, ok, "offset grounding below the zone: Spatial-ASR 0%, defended AIR 100%",
           "spatial " + frac(off.spatial_hits, off.n) + ", aborted " + frac(on.aborted, on.n));
  }
  {  // 9
    const dt::LatencySampler sampler{dt::LatencyModel{}};
    dt::Rng rng(dt::combine_seed(0x9a9, 1));
    std::vector<dt::Millis> gaps;
    for (int i = 0; i < 10000; ++i) gaps.push_back(sampler.sample_ms(rng));
    const dt::GapStats g = dt::gap_stats_ms(gaps);
    const bool ok = std::abs(g.mean - 6.51) <= 0.3 && std::abs(g.std - 3.59) <= 0.5 &&
                    g.min >= 3.18 && g.max <= 13.23;
    report(9, ok, "lognormal gap, n=10000: mean 6.51+-0.3, std 3.59+-0.5, within clamp",
           "mean " + fmt("%.3f", g.mean) + ", std " + fmt("%.3f", g.std) + ", min " +
               fmt("%.3f", g.min) + ", max " + fmt("%.3f", g.max));
  }
  {  // 10
    struct Row {
      const char* defense;
      double a_corner, a_zenity, a_full, b, c;
    };
    // -1: not part of the stated matrix.
    const std::vector<Row> matrix = {{"l1", 0, -1, 1, 1, 0},
                                     {"l2a", 1, 1, 1, -1, 0},
                                     {"l2b", 0, 1, 0, 0, 0},
                                     {"on", 1, 1, 1, 1, 0}};
    bool ok = true;
    std::ostringstream detail;
    for (const auto& row : matrix) {
      dt::ScenarioOverrides o;
      o.defense = dt::parse_defense(row.defense);
      auto sa = scenario("primA_defense");
      auto sb = scenario("primB_defense");
      auto sc = scenario("primC_defense");
      dt::apply_overrides(sa, o);
      dt::apply_overrides(sb, o);
      dt::apply_overrides(sc, o);
      const auto ra = run(sa);
      const double got[5] = {air_of(by_style(ra, dt::OverlayStyle::kCornerBanner)),
                             air_of(by_style(ra, dt::OverlayStyle::kZenityDialog)),
                             air_of(by_style(ra, dt::OverlayStyle::kFullscreen)),
                             air_of(run(sb).overall()), air_of(run(sc).overall())};
      const double want[5] = {row.a_corner, row.a_zenity, row.a_full, row.b, row.c};
      detail << row.defense << ":";
      for (int i = 0; i < 5; ++i) {
        detail << " " << fmt("%.0f%%", got[i] * 100);
        if (want[i] >= 0 && got[i] != want[i]) {
          ok = false;
          detail << "(want " << fmt("%.0f%%", want[i] * 100) << ")";
        }
      }
      detail << "; ";
    }
    report(10, ok, "layer ablation matrix (corner, zenity, fullscreen, raise, DOM)",
           detail.str());
  }
  {  // 11
    int agree = 0;
    double worst = 0;
    bool identity = true;
    for (std::uint64_t i = 0; i < 50; ++i) {
      dt::Rng rng(dt::combine_seed(0x11, i));
      const int w = 180, h = 180;
      dt::PixelFrame a(w, h), b(w, h);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const auto v = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
          a.set(x, y, {v, static_cast<std::uint8_t>(255 - v), static_cast<std::uint8_t>(x)});
          const int d = static_cast<int>(rng.uniform_int(-30, 30)) + (x > 90 ? 40 : 0);
          const auto u = static_cast<std::uint8_t>(std::clamp(int(v) + d, 0, 255));
          b.set(x, y, {u, static_cast<std::uint8_t>(255 - v), static_cast<std::uint8_t>(y)});
        }
      }
      const dt::Point c{static_cast<int>(rng.uniform_int(0, w - 1)),
                        static_cast<int>(rng.uniform_int(0, h - 1))};
      const double got = dt::ssim_patch(a, b, c, 160);
      const double want = dt::testing_ref::ssim_brute_force(a, b, dt::patch_rect(a.size(), c, 160));
      worst = std::max(worst, std::abs(got - want));
      if (std::abs(got - want) <= 1e-9) ++agree;
      if (dt::ssim_patch(a, a, c, 160) != 1.0) identity = false;
    }
    report(11, agree == 50 && identity, "SSIM equals brute-force reference; SSIM(x,x) = 1",
           std::to_string(agree) + "/50 within 1e-9, worst " + fmt("%.2e", worst) +
               ", identity " + (identity ? "exact" : "inexact"));
  }
  {  // 12
    const auto again = run_suite(2);
    std::string jsonl_a, jsonl_b, json_a, json_b;
    for (const auto& name : kSuite) {
      jsonl_a += dt::emit_report(suite.at(name), "jsonl");
      jsonl_b += dt::emit_report(again.at(name), "jsonl");
      json_a += dt::emit_report(suite.at(name), "json");
      json_b += dt::emit_report(again.at(name), "json");
    }
    const bool ok = jsonl_a == jsonl_b && json_a == json_b && !jsonl_a.empty();
    report(12, ok, "two suite runs with the same seeds are byte-identical",
           std::to_string(jsonl_a.size()) + " jsonl bytes, " + std::to_string(json_a.size()) +
               " json bytes");
  }
  {  // 13
    std::int64_t sum = 0, verified = 0;
    for (const auto& [name, r] : suite) {
      for (const auto& c : r.cells) {
        if (!c.defense.any()) continue;
        sum += c.stats.overhead_sum_ms;
        verified += c.stats.verified;
      }
    }
    const double mean = verified ? static_cast<double>(sum) / verified : 1e9;
    report(13, verified > 0 && mean < 100.0, "mean verification overhead < 100 virtual ms",
           fmt("%.1f ms", mean) + " over " + std::to_string(verified) + " verifications");
  }

  std::printf("%s: %d criterion(s) failed\n", g_failures ? "FAIL" : "PASS", g_failures);
  return g_failures ? 1 : 0;
}

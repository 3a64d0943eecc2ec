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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dtoctou/agent.hpp"
#include "dtoctou/attacker.hpp"
#include "dtoctou/fixtures.hpp"
#include "dtoctou/pusv.hpp"

namespace dtoctou {

// Transient pixel noise relative to T_obs, e.g. a page animation.
struct NoiseBurst {
  Rect rect;
  Millis offset_ms = 0;
  Millis duration_ms = 0;
  int amplitude = 25;
  friend bool operator==(const NoiseBurst&, const NoiseBurst&) = default;
};

// Task and fixture geometry is authored at full resolution; attack
// geometry is in screen pixels of the scaled desktop.
struct TrialConfig {
  TaskSpec task = builtin_task("browser_placeorder");
  FixtureOptions fixture;
  AttackScenario attack;
  LatencyModel latency;
  GroundingModel grounding;
  PusvConfig pusv;
  std::optional<NoiseBurst> noise_burst;
  // T_obs is drawn uniformly from [t_obs_min, t_obs_min + t_obs_span).
  Millis t_obs_min = 10'000;
  Millis t_obs_span = 60'000;
};

void validate(const TrialConfig& config);

struct TrialResult {
  std::string cell;
  std::int64_t index = 0;
  std::uint64_t seed = 0;
  std::string task;
  Primitive primitive = Primitive::kNone;
  OverlayStyle style = OverlayStyle::kFullscreen;
  LayerMask defense;

  Millis t_obs = 0;
  Millis t_verify = 0;
  Millis t_act = 0;
  double gap_s = 0.0;

  // Whether grounding produced a click at all.
  bool clicked = false;
  std::optional<Point> c;
  std::optional<Rect> intended_bbox;

  bool verified = false;
  std::optional<PusvVerdict> verdict;
  bool aborted = false;
  Layer fired_layer = Layer::kNone;

  bool dispatched = false;
  std::optional<ClickReceiver> receiver;
  bool intended_received = false;

  bool attack_fired = false;
  bool artifact_present = false;
  bool spatial_hit = false;
  bool trigger_hit = false;
  // Set only for tasks whose target lives in the page.
  std::optional<bool> behavioral_hit;
  bool vav = false;

  std::uint64_t frame_obs_digest = 0;
  std::uint64_t frame_act_digest = 0;

  friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

// One observe -> reason -> verify -> act step in virtual time. The defense
// runs when any layer is enabled. All randomness comes from `seed`.
TrialResult run_trial(const TrialConfig& config, std::uint64_t seed,
                      bool diagnostic = true);

struct SelfTestCase {
  std::string name;
  std::string expectation;
  bool passed = false;
  Layer fired_layer = Layer::kNone;
  std::optional<double> ssim;
  std::optional<double> glob_diff_ratio;
};

// Six fixed-gap checks of the verifier on the checkout task: clean pass,
// corner banner by L2a, zenity dialog by L2a or L2b, fullscreen by L1,
// window raise by L1, DOM overlay passing through.
std::vector<SelfTestCase> run_selftest(const PusvConfig& config = {});

}  // namespace dtoctou

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

#include "dtoctou/trial.hpp"

#include <algorithm>

#include "dtoctou/rng.hpp"

namespace dtoctou {

namespace {

// Independent streams so that changing one model leaves the others' draws
// untouched.
enum Stream : std::uint64_t { kTimeStream = 1, kGroundStream = 2, kGapStream = 3 };

// Applies every attacker mutation scheduled at or before `until`, each at
// its own virtual instant.
void run_attacker_until(DesktopState& state, Attacker& attacker, Millis t_obs,
                        Millis until) {
  while (true) {
    const auto next = attacker.next_pending_time(t_obs);
    if (!next || *next > until) break;
    state.advance_to(std::max(state.clock(), *next));
    attacker.fire(state, state.clock(), t_obs);
    attacker.expire(state, state.clock());
  }
}

}  // namespace

void validate(const TrialConfig& c) {
  validate(c.latency);
  validate(c.grounding);
  validate(c.pusv);
  if (c.fixture.scale_divisor < 1) {
    throw Error(ErrorCode::kInvalidArgument, "scale divisor must be >= 1");
  }
  if (c.t_obs_min < 0 || c.t_obs_span < 1) {
    throw Error(ErrorCode::kInvalidArgument, "bad T_obs window");
  }
  if (c.noise_burst &&
      (c.noise_burst->duration_ms <= 0 || c.noise_burst->rect.empty())) {
    throw Error(ErrorCode::kInvalidArgument, "noise burst must be non-empty");
  }
}

TrialResult run_trial(const TrialConfig& config, std::uint64_t seed,
                      bool diagnostic) {
  validate(config);
  TrialResult r;
  r.seed = seed;
  r.task = config.task.id;
  r.primitive = config.attack.primitive;
  r.style = config.attack.style;
  r.defense = config.pusv.layers;
  Rng time_rng(combine_seed(seed, kTimeStream));
  Rng ground_rng(combine_seed(seed, kGroundStream));
  Rng gap_rng(combine_seed(seed, kGapStream));

  r.t_obs = config.t_obs_min + time_rng.uniform_int(0, config.t_obs_span - 1);
  const Millis gap = LatencySampler(config.latency).sample_ms(gap_rng);
  r.t_act = r.t_obs + gap;
  r.t_verify = r.t_act - 1;
  r.gap_s = static_cast<double>(gap) / 1000.0;

  TaskSpec task = config.task;
  if (task.target.kind == Target::Kind::kWindow) {
    task.target.rect = scale_rect(task.target.rect, config.fixture.scale_divisor);
  }
  DesktopState state = build_desktop(task, config.fixture);
  if (config.noise_burst) {
    DynamicRegion burst;
    burst.kind = DynamicRegion::Kind::kBurst;
    burst.rect = config.noise_burst->rect;
    burst.amplitude = config.noise_burst->amplitude;
    burst.start_ms = r.t_obs + config.noise_burst->offset_ms;
    burst.end_ms = burst.start_ms + config.noise_burst->duration_ms;
    burst.seed = seed;
    state.add_dynamic(burst);
  }

  AttackScenario scenario = config.attack;
  scenario.scale_divisor = config.fixture.scale_divisor;
  if (scenario.primitive == Primitive::kB && scenario.deceptive_label.empty()) {
    scenario.deceptive_label = task.deceptive_label;
  }
  Attacker attacker(scenario);
  attacker.stage(state);

  state.advance_to(r.t_obs);
  const Observation obs = observe(state);
  r.frame_obs_digest = obs.frame.digest();

  const auto action = ground(obs, task, config.grounding, ground_rng);
  r.clicked = action.has_value();
  if (action) {
    r.c = action->c;
    r.intended_bbox = action->intended_bbox;
  }

  run_attacker_until(state, attacker, r.t_obs, r.t_verify);
  state.advance_to(r.t_verify);
  if (action && config.pusv.layers.any()) {
    r.verdict = verify(state, obs, *action, config.pusv, diagnostic);
    r.verified = true;
    r.aborted = r.verdict->abort;
    r.fired_layer = r.verdict->fired_layer;
  }

  run_attacker_until(state, attacker, r.t_obs, r.t_act);
  state.advance_to(r.t_act);
  r.frame_act_digest = render(state).digest();
  r.attack_fired = attacker.fired();
  r.artifact_present = attacker.artifact_present();

  const bool dom_task = task.target.kind == Target::Kind::kDomElement;
  if (dom_task) r.behavioral_hit = false;
  if (!action || r.aborted) return r;

  const ClickOutcome outcome = dispatch_click(state, action->c);
  r.dispatched = true;
  r.receiver = outcome.receiver;
  r.intended_received = receiver_matches(outcome.receiver, task.target);

  const auto zone = attacker.active_zone();
  r.spatial_hit = zone && zone->contains(action->c);
  const auto attacker_window = attacker.window_id();
  for (const auto& ev : outcome.events) {
    if (ev.kind == BehavioralEvent::Kind::kTrigger && attacker_window &&
        ev.window == *attacker_window) {
      r.trigger_hit = true;
    }
    if (dom_task && ev.kind == BehavioralEvent::Kind::kHttp &&
        ev.action == kAttackerEndpoint) {
      r.behavioral_hit = true;
    }
  }
  r.vav = action->intended_bbox.contains(action->c) && !r.intended_received;
  return r;
}

std::vector<SelfTestCase> run_selftest(const PusvConfig& pusv) {
  struct Case {
    const char* name;
    const char* expectation;
    Primitive primitive;
    OverlayStyle style;
    std::vector<Layer> accept;
  };
  const std::vector<Case> cases = {
      {"clean", "pass", Primitive::kNone, OverlayStyle::kFullscreen,
       {Layer::kNone}},
      {"A/corner_banner", "abort by L2a", Primitive::kA,
       OverlayStyle::kCornerBanner, {Layer::kL2a}},
      {"A/zenity_dialog", "abort by L2a or L2b", Primitive::kA,
       OverlayStyle::kZenityDialog, {Layer::kL2a, Layer::kL2b}},
      {"A/fullscreen", "abort by L1", Primitive::kA, OverlayStyle::kFullscreen,
       {Layer::kL1}},
      {"B", "abort by L1", Primitive::kB, OverlayStyle::kFullscreen,
       {Layer::kL1}},
      {"C", "pass", Primitive::kC, OverlayStyle::kFullscreen, {Layer::kNone}},
  };
  std::vector<SelfTestCase> out;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const Case& k = cases[i];
    TrialConfig cfg;
    cfg.latency.kind = LatencyModel::Kind::kFixed;
    cfg.latency.fixed_s = 6.5;
    cfg.pusv = pusv;
    cfg.attack.primitive = k.primitive;
    cfg.attack.style = k.style;
    SelfTestCase result;
    result.name = k.name;
    result.expectation = k.expectation;
    try {
      const TrialResult t = run_trial(cfg, combine_seed(0x5e1f, i), true);
      result.fired_layer = t.fired_layer;
      if (t.verdict) {
        result.ssim = t.verdict->ssim;
        result.glob_diff_ratio = t.verdict->glob_diff_ratio;
      }
      result.passed =
          t.clicked && std::find(k.accept.begin(), k.accept.end(),
                                 t.fired_layer) != k.accept.end();
    } catch (const Error&) {
      result.passed = false;
    }
    out.push_back(std::move(result));
  }
  return out;
}

}  // namespace dtoctou

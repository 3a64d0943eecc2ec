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

#include <optional>
#include <string>
#include <string_view>

#include "dtoctou/desktop.hpp"

namespace dtoctou {

// A: overlay window spawned at trigger time.
// B: window pre-staged unmapped, then mapped and raised.
// C: transparent DOM overlay injected hidden, then displayed.
enum class Primitive { kNone, kA, kB, kC };
enum class OverlayStyle { kCornerBanner, kZenityDialog, kFullscreen };

std::string_view to_string(Primitive p);
std::string_view to_string(OverlayStyle s);
Primitive primitive_from_string(std::string_view s);
OverlayStyle overlay_style_from_string(std::string_view s);

inline constexpr std::string_view kOverlayElementId = "atk_overlay";
inline constexpr WindowId kAttackerWindowHint = 9001;

struct AttackScenario {
  Primitive primitive = Primitive::kNone;
  OverlayStyle style = OverlayStyle::kFullscreen;
  double trigger_delay_s = 1.0;
  // Screen rectangle the attacker controls. Unset: derived from primitive,
  // style and screen size.
  std::optional<Rect> attacker_zone;
  std::optional<double> overlay_timer_s;
  // Title of the raised window; empty takes the task's label.
  std::string deceptive_label;
  std::optional<Point> target_coordinate;
  int scale_divisor = 1;
};

// Zone the attacker controls when the scenario does not pin one.
Rect default_attacker_zone(const AttackScenario& scenario,
                           const DesktopState& state);

// One attacker instance bound to one trial. The schedule is a pure function
// of the scenario and t_obs; every mutation goes through the trial's state.
class Attacker {
 public:
  explicit Attacker(AttackScenario scenario);

  const AttackScenario& scenario() const { return scenario_; }

  void stage(DesktopState& state);
  // Returns whether the attack is in its fired state after the call.
  bool fire(DesktopState& state, Millis now, Millis t_obs);
  void expire(DesktopState& state, Millis now);

  bool staged() const { return staged_; }
  bool fired() const { return fired_; }
  bool expired() const { return expired_; }
  // Fired and not yet expired.
  bool artifact_present() const { return fired_ && !expired_; }
  std::optional<Millis> fire_time() const { return fire_time_; }

  Millis trigger_delay_ms() const;
  // Scheduled time of the next mutation not yet applied, if any.
  std::optional<Millis> next_pending_time(Millis t_obs) const;

  // The attacker-controlled area while the artifact is present.
  std::optional<Rect> active_zone() const;
  std::optional<WindowId> window_id() const { return window_; }

 private:
  WindowSpec overlay_window(const DesktopState& state) const;

  AttackScenario scenario_;
  bool staged_ = false;
  bool fired_ = false;
  bool expired_ = false;
  std::optional<Millis> fire_time_;
  std::optional<WindowId> window_;
  Rect zone_{};
};

}  // namespace dtoctou

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

#include "dtoctou/attacker.hpp"

#include <cmath>

#include "dtoctou/fixtures.hpp"
#include "dtoctou/rng.hpp"

namespace dtoctou {

namespace {

// Full-resolution geometry of the attack artifacts.
constexpr Size kBannerSize{380, 90};
constexpr Size kDialogSize{420, 180};
constexpr Rect kRaiseZone{100, 215, 210, 80};
// Where the click target sits inside the raised window: (140,247) - (100,215).
constexpr Point kRaiseTargetOffset{40, 32};

constexpr Rgb kBannerFill{250, 200, 60};
constexpr Rgb kDialogFill{48, 48, 48};
constexpr Rgb kFullscreenFill{20, 0, 0};
constexpr Rgb kRaiseFill{200, 30, 30};

Millis seconds_to_ms(double s) { return static_cast<Millis>(std::llround(s * 1000.0)); }

}  // namespace

std::string_view to_string(Primitive p) {
  switch (p) {
    case Primitive::kNone:
      return "none";
    case Primitive::kA:
      return "A";
    case Primitive::kB:
      return "B";
    case Primitive::kC:
      return "C";
  }
  return "none";
}

std::string_view to_string(OverlayStyle s) {
  switch (s) {
    case OverlayStyle::kCornerBanner:
      return "corner_banner";
    case OverlayStyle::kZenityDialog:
      return "zenity_dialog";
    case OverlayStyle::kFullscreen:
      return "fullscreen";
  }
  return "fullscreen";
}

Primitive primitive_from_string(std::string_view s) {
  for (auto p : {Primitive::kNone, Primitive::kA, Primitive::kB, Primitive::kC}) {
    if (to_string(p) == s) return p;
  }
  throw Error(ErrorCode::kSchema, "unknown primitive '" + std::string(s) + "'");
}

OverlayStyle overlay_style_from_string(std::string_view s) {
  for (auto v : {OverlayStyle::kCornerBanner, OverlayStyle::kZenityDialog,
                 OverlayStyle::kFullscreen}) {
    if (to_string(v) == s) return v;
  }
  throw Error(ErrorCode::kSchema, "unknown overlay style '" + std::string(s) + "'");
}

Rect default_attacker_zone(const AttackScenario& sc, const DesktopState& state) {
  const Size screen = state.screen();
  const int d = std::max(1, sc.scale_divisor);
  switch (sc.primitive) {
    case Primitive::kNone:
      return {};
    case Primitive::kA: {
      switch (sc.style) {
        case OverlayStyle::kCornerBanner: {
          const Size s = scale_size(kBannerSize, d);
          return {screen.width - s.width, 0, s.width, s.height};
        }
        case OverlayStyle::kZenityDialog: {
          const Size s = scale_size(kDialogSize, d);
          return {(screen.width - s.width) / 2, (screen.height - s.height) / 2,
                  s.width, s.height};
        }
        case OverlayStyle::kFullscreen:
          return state.screen_rect();
      }
      break;
    }
    case Primitive::kB: {
      if (sc.target_coordinate) {
        const Size s = scale_size({kRaiseZone.w, kRaiseZone.h}, d);
        const Point off = scale_point(kRaiseTargetOffset, d);
        return Rect{sc.target_coordinate->x - off.x,
                    sc.target_coordinate->y - off.y, s.width, s.height}
            .intersect(state.screen_rect());
      }
      return scale_rect(kRaiseZone, d);
    }
    case Primitive::kC:
      return state.page_screen_rect();
  }
  return {};
}

Attacker::Attacker(AttackScenario scenario) : scenario_(std::move(scenario)) {
  if (!(scenario_.trigger_delay_s > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "trigger_delay must be > 0");
  }
  if (scenario_.overlay_timer_s && !(*scenario_.overlay_timer_s > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "overlay_timer must be > 0");
  }
}

Millis Attacker::trigger_delay_ms() const {
  return seconds_to_ms(scenario_.trigger_delay_s);
}

WindowSpec Attacker::overlay_window(const DesktopState& state) const {
  WindowSpec w;
  w.id = state.unused_window_id(kAttackerWindowHint);
  w.rect = zone_;
  w.texture_seed = fnv1a64(scenario_.deceptive_label);
  if (scenario_.primitive == Primitive::kB) {
    w.title = scenario_.deceptive_label;
    w.fill = kRaiseFill;
    w.mapped = false;
    w.trigger_on_click = true;
    return w;
  }
  switch (scenario_.style) {
    case OverlayStyle::kCornerBanner: {
      w.title = "Software Updates Available";
      w.fill = kBannerFill;
      w.compositor_rendered = true;
      const int d = std::max(1, scenario_.scale_divisor);
      w.decorations = {{scale_rect({260, 25, 100, 40}, d), {40, 110, 200}}};
      break;
    }
    case OverlayStyle::kZenityDialog: {
      w.title = "Security Warning";
      w.fill = kDialogFill;
      const int d = std::max(1, scenario_.scale_divisor);
      w.decorations = {{scale_rect({300, 130, 100, 36}, d), {90, 140, 210}},
                       {scale_rect({24, 24, 48, 48}, d), {240, 190, 40}}};
      break;
    }
    case OverlayStyle::kFullscreen:
      w.title = "tk";
      w.fill = kFullscreenFill;
      w.texture_amplitude = 0;
      break;
  }
  return w;
}

void Attacker::stage(DesktopState& state) {
  if (staged_) return;
  staged_ = true;
  if (scenario_.primitive == Primitive::kNone) return;
  zone_ = scenario_.attacker_zone
              ? scenario_.attacker_zone->intersect(state.screen_rect())
              : default_attacker_zone(scenario_, state);
  if (zone_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "attacker zone is empty");
  }
  switch (scenario_.primitive) {
    case Primitive::kB:
      window_ = state.spawn_window(overlay_window(state));
      break;
    case Primitive::kC: {
      DomPage& page = state.mutable_page();
      const Rect page_rect = state.page_screen_rect();
      const WindowSpec& host = state.window(page.host_window());
      DomElement overlay;
      overlay.id = std::string(kOverlayElementId);
      overlay.bbox = zone_.translated(-(host.rect.x + page.origin().x),
                                      -(host.rect.y + page.origin().y));
      overlay.bbox = overlay.bbox.intersect(page.viewport_rect());
      overlay.z_index = 9999;
      overlay.transparent = true;
      overlay.form_action = std::string(kAttackerEndpoint);
      overlay.form_method = "POST";
      overlay.onclick = "intercept";
      page.inject_overlay(std::move(overlay));
      zone_ = zone_.intersect(page_rect);
      break;
    }
    default:
      break;
  }
}

bool Attacker::fire(DesktopState& state, Millis now, Millis t_obs) {
  if (!staged_) throw Error(ErrorCode::kState, "fire() before stage()");
  if (fired_) return true;
  if (scenario_.primitive == Primitive::kNone) return false;
  const Millis due = t_obs + trigger_delay_ms();
  if (now < due) return false;
  switch (scenario_.primitive) {
    case Primitive::kA:
      window_ = state.spawn_window(overlay_window(state));
      break;
    case Primitive::kB:
      state.set_mapped(*window_, true, /*raise_topmost=*/true);
      break;
    case Primitive::kC:
      state.mutable_page().activate_overlay(std::string(kOverlayElementId));
      break;
    case Primitive::kNone:
      break;
  }
  fired_ = true;
  fire_time_ = due;
  return true;
}

void Attacker::expire(DesktopState& state, Millis now) {
  if (!fired_ || expired_ || !scenario_.overlay_timer_s) return;
  if (now < *fire_time_ + seconds_to_ms(*scenario_.overlay_timer_s)) return;
  switch (scenario_.primitive) {
    case Primitive::kA:
      state.destroy_window(*window_);
      break;
    case Primitive::kB:
      state.set_mapped(*window_, false, false);
      break;
    case Primitive::kC:
      state.mutable_page().deactivate_overlay(std::string(kOverlayElementId));
      break;
    case Primitive::kNone:
      break;
  }
  expired_ = true;
}

std::optional<Millis> Attacker::next_pending_time(Millis t_obs) const {
  if (!staged_ || scenario_.primitive == Primitive::kNone) return std::nullopt;
  if (!fired_) return t_obs + trigger_delay_ms();
  if (scenario_.overlay_timer_s && !expired_) {
    return *fire_time_ + seconds_to_ms(*scenario_.overlay_timer_s);
  }
  return std::nullopt;
}

std::optional<Rect> Attacker::active_zone() const {
  if (!artifact_present()) return std::nullopt;
  return zone_;
}

}  // namespace dtoctou

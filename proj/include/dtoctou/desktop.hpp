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
#include <set>
#include <string>
#include <vector>

#include "dtoctou/dom.hpp"
#include "dtoctou/frame.hpp"
#include "dtoctou/types.hpp"

namespace dtoctou {

// Content noise amplitude, in gray levels, for textured surfaces.
inline constexpr int kTextureAmplitude = 12;

// Signed noise in [-amplitude, amplitude], a pure function of its inputs.
inline int texture_offset(std::uint64_t seed, int x, int y, int amplitude) {
  if (amplitude <= 0) return 0;
  std::uint64_t z = seed ^ (static_cast<std::uint64_t>(
                                static_cast<std::uint32_t>(x)) << 32 |
                            static_cast<std::uint32_t>(y));
  z = (z ^ (z >> 33)) * 0xff51afd7ed558ccdull;
  z = (z ^ (z >> 33)) * 0xc4ceb9fe1a85ec53ull;
  z ^= z >> 33;
  return static_cast<int>(z % static_cast<std::uint64_t>(2 * amplitude + 1)) -
         amplitude;
}

// A flat-coloured sub-rectangle painted on top of a window body, in window
// coordinates. Decorations are pixels only; they do not receive clicks.
struct Decoration {
  Rect rect;
  Rgb fill;
  friend bool operator==(const Decoration&, const Decoration&) = default;
};

struct WindowSpec {
  WindowId id = 0;
  std::string title;
  Rect rect;
  // Stacking order. Unset means "on top": the state assigns max_z + 1.
  std::optional<std::int64_t> z;
  bool mapped = true;
  // Painted by the compositor above every regular window and absent from
  // registry listings.
  bool compositor_rendered = false;
  Rgb fill{200, 200, 200};
  std::uint64_t texture_seed = 1;
  int texture_amplitude = kTextureAmplitude;
  // Clicking this window records a trigger event.
  bool trigger_on_click = false;
  std::vector<Decoration> decorations;
  friend bool operator==(const WindowSpec&, const WindowSpec&) = default;
};

// Benign screen activity driven by the virtual clock.
struct DynamicRegion {
  enum class Kind { kBlink, kTick, kBurst };
  Kind kind = Kind::kBlink;
  Rect rect;
  int amplitude = 25;
  Millis period_ms = 1000;  // kBlink: on for the first half; kTick: re-rolls
  Millis start_ms = 0;      // kBurst: active on [start, end)
  Millis end_ms = 0;
  std::uint64_t seed = 0;
  friend bool operator==(const DynamicRegion&, const DynamicRegion&) = default;
};

struct RegistryEntry {
  WindowId id = 0;
  std::string title;
  friend bool operator==(const RegistryEntry&, const RegistryEntry&) = default;
};

// What the window-list query returns at one instant. `listed` mirrors the
// visible `wmctrl -l` output (mapped, non-compositor windows). `known_ids`
// also carries registered-but-unmapped windows: an id known at observation
// time is never treated as new later.
struct RegistrySnapshot {
  std::vector<RegistryEntry> listed;
  std::set<WindowId> known_ids;
  friend bool operator==(const RegistrySnapshot&,
                         const RegistrySnapshot&) = default;
};

struct ClickReceiver {
  enum class Kind { kBackground, kWindow, kDomElement };
  Kind kind = Kind::kBackground;
  WindowId window = 0;     // kWindow, kDomElement (host window)
  std::string element_id;  // kDomElement
  friend bool operator==(const ClickReceiver&, const ClickReceiver&) = default;
};

struct ClickOutcome {
  ClickReceiver receiver;
  std::vector<BehavioralEvent> events;
};

class DesktopState {
 public:
  explicit DesktopState(Size screen = kFullScreen,
                        Rgb background = {88, 52, 80},
                        std::uint64_t background_seed = 0x5eedull);

  Size screen() const { return screen_; }
  Rect screen_rect() const { return {0, 0, screen_.width, screen_.height}; }
  Rgb background() const { return background_; }
  std::uint64_t background_seed() const { return background_seed_; }

  // Windows in insertion order; paint order is derived from z.
  const std::vector<WindowSpec>& windows() const { return windows_; }
  const WindowSpec* find_window(WindowId id) const;
  const WindowSpec& window(WindowId id) const;
  std::int64_t max_z() const;
  WindowId unused_window_id(WindowId hint) const;

  WindowId spawn_window(WindowSpec spec);
  void set_mapped(WindowId id, bool mapped, bool raise_topmost);
  void destroy_window(WindowId id);

  const std::optional<DomPage>& page() const { return page_; }
  DomPage& mutable_page();
  void attach_page(DomPage page);

  const std::vector<DynamicRegion>& dynamics() const { return dynamics_; }
  void add_dynamic(DynamicRegion region);

  Millis clock() const { return clock_; }
  void advance_to(Millis t);

  const std::vector<BehavioralEvent>& event_log() const { return event_log_; }
  void record_event(BehavioralEvent ev) { event_log_.push_back(std::move(ev)); }

  // Screen rectangle covered by the page viewport; empty without a page.
  Rect page_screen_rect() const;

  // Top-most mapped window containing `c`, honouring compositor priority.
  const WindowSpec* top_window_at(Point c) const;

  // Mapped windows in back-to-front paint order.
  std::vector<const WindowSpec*> paint_order() const;

  friend bool operator==(const DesktopState&, const DesktopState&) = default;

 private:
  WindowSpec& mutable_window(WindowId id);
  void validate_page(const DomPage& page) const;

  Size screen_;
  Rgb background_;
  std::uint64_t background_seed_;
  std::vector<WindowSpec> windows_;
  std::optional<DomPage> page_;
  std::vector<DynamicRegion> dynamics_;
  Millis clock_ = 0;
  std::vector<BehavioralEvent> event_log_;
};

PixelFrame render(const DesktopState& state);

std::vector<RegistryEntry> registry_list(const DesktopState& state);
RegistrySnapshot registry_snapshot(const DesktopState& state);
// One "id<TAB>title" line per listed window.
std::string registry_text(const std::vector<RegistryEntry>& entries);

ClickOutcome dispatch_click(DesktopState& state, Point c);

// Side-effect-free counterpart of dispatch_click.
ClickReceiver hit_test(const DesktopState& state, Point c);

}  // namespace dtoctou

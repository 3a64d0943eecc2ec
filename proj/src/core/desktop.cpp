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

#include "dtoctou/desktop.hpp"

#include <algorithm>
#include <list>
#include <memory>
#include <mutex>

#include "dtoctou/rng.hpp"

namespace dtoctou {

namespace {

constexpr std::uint64_t kDecorationSalt = 0xdec0ull;

std::uint8_t clamp_u8(int v) {
  return static_cast<std::uint8_t>(std::clamp(v, 0, 255));
}

Rgb shade(Rgb c, int offset) {
  return {clamp_u8(c.r + offset), clamp_u8(c.g + offset), clamp_u8(c.b + offset)};
}

// Fills `area` (screen coordinates, already clipped) with `fill` modulated by
// texture coordinates relative to `origin`.
void paint_textured(PixelFrame& frame, const Rect& area, Point origin, Rgb fill,
                    std::uint64_t seed, int amplitude) {
  auto data = frame.mutable_data();
  const std::size_t stride = static_cast<std::size_t>(frame.width()) * 3;
  for (int y = area.y; y < area.bottom(); ++y) {
    std::uint8_t* row = data.data() + y * stride;
    for (int x = area.x; x < area.right(); ++x) {
      const Rgb c = shade(
          fill, texture_offset(seed, x - origin.x, y - origin.y, amplitude));
      std::uint8_t* p = row + static_cast<std::size_t>(x) * 3;
      p[0] = c.r;
      p[1] = c.g;
      p[2] = c.b;
    }
  }
}

void paint_page(PixelFrame& frame, const DomPage& page, const Rect& clip,
                Point page_origin) {
  std::vector<const DomElement*> painted;
  for (const auto& e : page.elements()) {
    if (e.display == Display::kVisible && !e.transparent) painted.push_back(&e);
  }
  std::stable_sort(painted.begin(), painted.end(),
                   [](const DomElement* a, const DomElement* b) {
                     return a->z_index < b->z_index;
                   });
  for (const DomElement* e : painted) {
    const Rect on_screen = e->bbox.translated(page_origin.x, page_origin.y);
    const Rect area = on_screen.intersect(clip);
    if (area.empty()) continue;
    paint_textured(frame, area, {on_screen.x, on_screen.y}, e->fill,
                   e->texture_seed, kTextureAmplitude);
  }
}

bool dynamic_active(const DynamicRegion& d, Millis clock) {
  switch (d.kind) {
    case DynamicRegion::Kind::kBlink: {
      const Millis half = std::max<Millis>(1, d.period_ms / 2);
      return (clock / half) % 2 == 0;
    }
    case DynamicRegion::Kind::kTick:
      return true;
    case DynamicRegion::Kind::kBurst:
      return clock >= d.start_ms && clock < d.end_ms;
  }
  return false;
}

void paint_dynamic(PixelFrame& frame, const DynamicRegion& d, Millis clock,
                   const Rect& clip) {
  if (!dynamic_active(d, clock)) return;
  const Rect area = d.rect.intersect(clip);
  const std::uint64_t tick_seed =
      combine_seed(d.seed, static_cast<std::uint64_t>(
                               clock / std::max<Millis>(1, d.period_ms)));
  for (int y = area.y; y < area.bottom(); ++y) {
    for (int x = area.x; x < area.right(); ++x) {
      const Rgb c = frame.at(x, y);
      int offset;
      if (d.kind == DynamicRegion::Kind::kTick) {
        offset = (texture_offset(tick_seed, x, y, 1) >= 0) ? d.amplitude
                                                          : -d.amplitude;
      } else {
        offset = luma(c) < 128 ? d.amplitude : -d.amplitude;
      }
      frame.set(x, y, shade(c, offset));
    }
  }
}

}  // namespace

DesktopState::DesktopState(Size screen, Rgb background,
                           std::uint64_t background_seed)
    : screen_(screen),
      background_(background),
      background_seed_(background_seed) {
  if (screen.width <= 0 || screen.height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "screen must be non-empty");
  }
}

const WindowSpec* DesktopState::find_window(WindowId id) const {
  for (const auto& w : windows_) {
    if (w.id == id) return &w;
  }
  return nullptr;
}

const WindowSpec& DesktopState::window(WindowId id) const {
  const WindowSpec* w = find_window(id);
  if (!w) {
    throw Error(ErrorCode::kNotFound, "unknown window id " + std::to_string(id));
  }
  return *w;
}

WindowSpec& DesktopState::mutable_window(WindowId id) {
  for (auto& w : windows_) {
    if (w.id == id) return w;
  }
  throw Error(ErrorCode::kNotFound, "unknown window id " + std::to_string(id));
}

std::int64_t DesktopState::max_z() const {
  std::int64_t z = 0;
  for (const auto& w : windows_) z = std::max(z, *w.z);
  return z;
}

WindowId DesktopState::unused_window_id(WindowId hint) const {
  WindowId id = hint;
  while (find_window(id)) ++id;
  return id;
}

WindowId DesktopState::spawn_window(WindowSpec spec) {
  if (spec.rect.w <= 0 || spec.rect.h <= 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "window " + std::to_string(spec.id) + " has non-positive size");
  }
  if (find_window(spec.id)) {
    throw Error(ErrorCode::kDuplicate,
                "duplicate window id " + std::to_string(spec.id));
  }
  spec.rect = spec.rect.intersect(screen_rect());
  if (spec.rect.empty()) {
    throw Error(ErrorCode::kOutOfBounds,
                "window " + std::to_string(spec.id) + " lies off screen");
  }
  if (spec.texture_amplitude < 0 || spec.texture_amplitude > 127) {
    throw Error(ErrorCode::kInvalidArgument, "texture amplitude out of range");
  }
  if (spec.z) {
    for (const auto& w : windows_) {
      if (*w.z == *spec.z) {
        throw Error(ErrorCode::kDuplicate,
                    "z " + std::to_string(*spec.z) + " already in use");
      }
    }
  } else {
    spec.z = max_z() + 1;
  }
  windows_.push_back(std::move(spec));
  return windows_.back().id;
}

void DesktopState::set_mapped(WindowId id, bool mapped, bool raise_topmost) {
  WindowSpec& w = mutable_window(id);
  w.mapped = mapped;
  if (raise_topmost && *w.z != max_z()) w.z = max_z() + 1;
}

void DesktopState::destroy_window(WindowId id) {
  if (page_ && page_->host_window() == id) {
    throw Error(ErrorCode::kState, "cannot destroy the page's host window");
  }
  const auto it = std::find_if(windows_.begin(), windows_.end(),
                               [id](const WindowSpec& w) { return w.id == id; });
  if (it == windows_.end()) {
    throw Error(ErrorCode::kNotFound, "unknown window id " + std::to_string(id));
  }
  windows_.erase(it);
}

void DesktopState::validate_page(const DomPage& page) const {
  const WindowSpec& host = window(page.host_window());
  const Rect viewport{host.rect.x + page.origin().x, host.rect.y + page.origin().y,
                      page.viewport().width, page.viewport().height};
  if (!host.rect.contains(viewport)) {
    throw Error(ErrorCode::kInvalidArgument,
                "page viewport does not fit inside its host window");
  }
}

void DesktopState::attach_page(DomPage page) {
  validate_page(page);
  page_ = std::move(page);
}

DomPage& DesktopState::mutable_page() {
  if (!page_) throw Error(ErrorCode::kState, "desktop has no web page");
  return *page_;
}

void DesktopState::add_dynamic(DynamicRegion region) {
  if (region.rect.empty() || region.period_ms <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "invalid dynamic region");
  }
  dynamics_.push_back(region);
}

void DesktopState::advance_to(Millis t) {
  if (t < clock_) {
    throw Error(ErrorCode::kState, "virtual clock cannot move backwards");
  }
  clock_ = t;
}

Rect DesktopState::page_screen_rect() const {
  if (!page_) return {};
  const WindowSpec* host = find_window(page_->host_window());
  if (!host) return {};
  return Rect{host->rect.x + page_->origin().x, host->rect.y + page_->origin().y,
              page_->viewport().width, page_->viewport().height}
      .intersect(host->rect);
}

std::vector<const WindowSpec*> DesktopState::paint_order() const {
  std::vector<const WindowSpec*> order;
  for (const auto& w : windows_) {
    if (w.mapped) order.push_back(&w);
  }
  std::sort(order.begin(), order.end(),
            [](const WindowSpec* a, const WindowSpec* b) {
              if (a->compositor_rendered != b->compositor_rendered) {
                return !a->compositor_rendered;
              }
              return *a->z < *b->z;
            });
  return order;
}

const WindowSpec* DesktopState::top_window_at(Point c) const {
  const auto order = paint_order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->rect.contains(c)) return *it;
  }
  return nullptr;
}

namespace {

// Everything that decides the pixels of the static layers, flattened.
std::vector<std::int64_t> visual_key(const DesktopState& state) {
  std::vector<std::int64_t> k;
  auto rect = [&k](const Rect& r) { k.insert(k.end(), {r.x, r.y, r.w, r.h}); };
  auto rgb = [&k](Rgb c) { k.push_back(c.r << 16 | c.g << 8 | c.b); };
  k.insert(k.end(), {state.screen().width, state.screen().height});
  rgb(state.background());
  k.push_back(static_cast<std::int64_t>(state.background_seed()));
  const auto& page = state.page();
  for (const WindowSpec* w : state.paint_order()) {
    k.push_back(w->id);
    rect(w->rect);
    rgb(w->fill);
    k.push_back(static_cast<std::int64_t>(w->texture_seed));
    k.push_back(w->texture_amplitude);
    for (const auto& d : w->decorations) {
      rect(d.rect);
      rgb(d.fill);
    }
    k.push_back(-1);
  }
  if (page) {
    k.insert(k.end(), {page->host_window(), page->origin().x, page->origin().y,
                       page->viewport().width, page->viewport().height});
    for (const auto& e : page->elements()) {
      if (e.display != Display::kVisible || e.transparent) continue;
      rect(e.bbox);
      rgb(e.fill);
      k.push_back(e.z_index);
      k.push_back(static_cast<std::int64_t>(e.texture_seed));
    }
  }
  return k;
}

PixelFrame render_static(const DesktopState& state) {
  const Size s = state.screen();
  PixelFrame frame(s.width, s.height);
  const Rect screen = state.screen_rect();
  paint_textured(frame, screen, {0, 0}, state.background(),
                 state.background_seed(), kTextureAmplitude);

  const auto& page = state.page();
  for (const WindowSpec* w : state.paint_order()) {
    const Rect area = w->rect.intersect(screen);
    const Point origin{w->rect.x, w->rect.y};
    paint_textured(frame, area, origin, w->fill, w->texture_seed,
                   w->texture_amplitude);
    for (const auto& d : w->decorations) {
      const Rect on_screen = d.rect.translated(origin.x, origin.y);
      paint_textured(frame, on_screen.intersect(area), origin, d.fill,
                     w->texture_seed ^ kDecorationSalt, w->texture_amplitude);
    }
    if (page && page->host_window() == w->id) {
      paint_page(frame, *page, state.page_screen_rect().intersect(area),
                 {origin.x + page->origin().x, origin.y + page->origin().y});
    }
  }
  return frame;
}

// Trials re-render the same handful of layouts many times over. Keys are
// compared exactly, so a hit is always the frame a fresh render would give.
class StaticFrameCache {
 public:
  std::shared_ptr<const PixelFrame> get(const DesktopState& state) {
    auto key = visual_key(state);
    {
      std::lock_guard<std::mutex> lock(mu_);
      for (auto it = entries_.begin(); it != entries_.end(); ++it) {
        if (it->first != key) continue;
        auto hit = *it;
        entries_.erase(it);
        entries_.push_front(hit);
        return hit.second;
      }
    }
    auto frame = std::make_shared<const PixelFrame>(render_static(state));
    std::lock_guard<std::mutex> lock(mu_);
    entries_.emplace_front(std::move(key), frame);
    if (entries_.size() > kCapacity) entries_.pop_back();
    return frame;
  }

 private:
  static constexpr std::size_t kCapacity = 8;
  std::mutex mu_;
  std::list<std::pair<std::vector<std::int64_t>,
                      std::shared_ptr<const PixelFrame>>>
      entries_;
};

StaticFrameCache& static_cache() {
  static StaticFrameCache cache;
  return cache;
}

}  // namespace

PixelFrame render(const DesktopState& state) {
  PixelFrame frame = *static_cache().get(state);
  const Rect screen = state.screen_rect();
  for (const auto& d : state.dynamics()) {
    paint_dynamic(frame, d, state.clock(), screen);
  }
  return frame;
}

std::vector<RegistryEntry> registry_list(const DesktopState& state) {
  std::vector<RegistryEntry> out;
  for (const auto& w : state.windows()) {
    if (w.mapped && !w.compositor_rendered) out.push_back({w.id, w.title});
  }
  std::sort(out.begin(), out.end(),
            [](const RegistryEntry& a, const RegistryEntry& b) {
              return a.id < b.id;
            });
  return out;
}

RegistrySnapshot registry_snapshot(const DesktopState& state) {
  RegistrySnapshot snap;
  snap.listed = registry_list(state);
  for (const auto& w : state.windows()) {
    if (!w.compositor_rendered) snap.known_ids.insert(w.id);
  }
  return snap;
}

std::string registry_text(const std::vector<RegistryEntry>& entries) {
  std::string out;
  for (const auto& e : entries) {
    out += std::to_string(e.id);
    out += '\t';
    out += e.title;
    out += '\n';
  }
  return out;
}

ClickReceiver hit_test(const DesktopState& state, Point c) {
  if (!state.screen_rect().contains(c)) {
    throw Error(ErrorCode::kOutOfBounds, "click outside the screen");
  }
  ClickReceiver r;
  const WindowSpec* w = state.top_window_at(c);
  if (!w) return r;
  r.kind = ClickReceiver::Kind::kWindow;
  r.window = w->id;
  const auto& page = state.page();
  if (page && page->host_window() == w->id &&
      state.page_screen_rect().contains(c)) {
    const Point pc{c.x - w->rect.x - page->origin().x,
                   c.y - w->rect.y - page->origin().y};
    if (auto id = dom_hit_test(*page, pc)) {
      r.kind = ClickReceiver::Kind::kDomElement;
      r.element_id = std::move(*id);
    }
  }
  return r;
}

ClickOutcome dispatch_click(DesktopState& state, Point c) {
  ClickOutcome out;
  out.receiver = hit_test(state, c);
  switch (out.receiver.kind) {
    case ClickReceiver::Kind::kBackground:
      break;
    case ClickReceiver::Kind::kWindow:
      if (state.window(out.receiver.window).trigger_on_click) {
        BehavioralEvent ev;
        ev.kind = BehavioralEvent::Kind::kTrigger;
        ev.window = out.receiver.window;
        out.events.push_back(ev);
      }
      break;
    case ClickReceiver::Kind::kDomElement:
      if (auto ev = dom_click(*state.page(), out.receiver.element_id)) {
        out.events.push_back(std::move(*ev));
      }
      break;
  }
  for (const auto& ev : out.events) state.record_event(ev);
  return out;
}

}  // namespace dtoctou

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

#include "dtoctou/fixtures.hpp"

#include <array>

namespace dtoctou {

namespace {

// Every stock surface keeps its fill at gray >= 45 so that a near-black
// solid overlay differs from it by more than the diff noise floor even after
// texture noise.
constexpr Rgb kBrowserFill{236, 236, 236};
constexpr Rgb kFilesFill{222, 222, 218};
constexpr Rgb kTerminalFill{70, 40, 60};
constexpr Rgb kDockFill{56, 56, 64};

constexpr const char* kDefaultLabel = "Confirm Transfer $9,999 -> ATK-ACC";

Target dom_target(std::string_view id) {
  Target t;
  t.kind = Target::Kind::kDomElement;
  t.element_id = std::string(id);
  return t;
}

Target window_target(WindowId window, Rect rect) {
  Target t;
  t.kind = Target::Kind::kWindow;
  t.window = window;
  t.rect = rect;
  return t;
}

struct BuiltinTask {
  const char* id;
  TaskFamily family;
  WindowId focus;
  const char* label;
};

constexpr std::array<BuiltinTask, 7> kBuiltinTasks{{
    {"file_delete", TaskFamily::kFileDelete, kFilesWindow, kDefaultLabel},
    {"terminal_command", TaskFamily::kTerminalCommand, kTerminalWindow,
     kDefaultLabel},
    {"browser_form", TaskFamily::kBrowserForm, kBrowserWindow, kDefaultLabel},
    {"browser_placeorder", TaskFamily::kBrowserForm, kBrowserWindow,
     kDefaultLabel},
    {"browser_placeorder_2", TaskFamily::kBrowserForm, kBrowserWindow,
     "Authorize Payment -> ATK-ACC"},
    {"browser_placeorder_3", TaskFamily::kBrowserForm, kBrowserWindow,
     "Verify Account - Express Checkout"},
    {"dock_launch", TaskFamily::kDock, kBrowserWindow, kDefaultLabel},
}};

// Full-resolution control areas, window coordinates.
constexpr Rect kTrashButton{40, 60, 140, 40};
constexpr Rect kCommandLine{20, 300, 400, 30};
constexpr Rect kDockIcon{8, 200, 56, 56};

}  // namespace

std::string_view to_string(TaskFamily f) {
  switch (f) {
    case TaskFamily::kFileDelete:
      return "file_delete";
    case TaskFamily::kTerminalCommand:
      return "terminal_command";
    case TaskFamily::kBrowserForm:
      return "browser_form";
    case TaskFamily::kDock:
      return "dock";
  }
  return "unknown";
}

TaskFamily task_family_from_string(std::string_view s) {
  for (auto f : {TaskFamily::kFileDelete, TaskFamily::kTerminalCommand,
                 TaskFamily::kBrowserForm, TaskFamily::kDock}) {
    if (to_string(f) == s) return f;
  }
  throw Error(ErrorCode::kSchema, "unknown task family '" + std::string(s) + "'");
}

Rect scale_rect(const Rect& r, int divisor) {
  if (divisor <= 1) return r;
  const int x0 = r.x / divisor;
  const int y0 = r.y / divisor;
  const int x1 = r.right() / divisor;
  const int y1 = r.bottom() / divisor;
  return {x0, y0, std::max(1, x1 - x0), std::max(1, y1 - y0)};
}

Point scale_point(Point p, int divisor) {
  if (divisor <= 1) return p;
  return {p.x / divisor, p.y / divisor};
}

Size scale_size(Size s, int divisor) {
  if (divisor <= 1) return s;
  return {s.width / divisor, s.height / divisor};
}

std::vector<std::string> builtin_task_ids() {
  std::vector<std::string> ids;
  for (const auto& t : kBuiltinTasks) ids.emplace_back(t.id);
  return ids;
}

TaskSpec builtin_task(std::string_view id) {
  for (const auto& t : kBuiltinTasks) {
    if (id != t.id) continue;
    TaskSpec spec;
    spec.id = t.id;
    spec.family = t.family;
    spec.focus = t.focus;
    spec.deceptive_label = t.label;
    switch (t.family) {
      case TaskFamily::kFileDelete:
        spec.target = window_target(kFilesWindow, kTrashButton);
        break;
      case TaskFamily::kTerminalCommand:
        spec.target = window_target(kTerminalWindow, kCommandLine);
        break;
      case TaskFamily::kBrowserForm:
        spec.target = dom_target(kPlaceOrderId);
        break;
      case TaskFamily::kDock:
        spec.target = window_target(kDockWindow, kDockIcon);
        break;
    }
    return spec;
  }
  throw Error(ErrorCode::kNotFound, "unknown task '" + std::string(id) + "'");
}

std::vector<DynamicRegion> benign_dynamics(int d) {
  std::vector<DynamicRegion> out;
  DynamicRegion terminal_caret;
  terminal_caret.kind = DynamicRegion::Kind::kBlink;
  terminal_caret.rect = scale_rect({1500, 980, 2, 30}, d);
  terminal_caret.period_ms = 1000;
  out.push_back(terminal_caret);

  DynamicRegion address_caret = terminal_caret;
  address_caret.rect = scale_rect({100, 123, 2, 30}, d);
  out.push_back(address_caret);

  DynamicRegion clock;
  clock.kind = DynamicRegion::Kind::kTick;
  clock.rect = scale_rect({1880, 8, 16, 16}, d);
  clock.period_ms = 1000;
  clock.seed = 0xc10cull;
  out.push_back(clock);
  return out;
}

DesktopState build_desktop(const TaskSpec& task, const FixtureOptions& opts) {
  const int d = std::max(1, opts.scale_divisor);
  auto sc = [d](Rect r) { return scale_rect(r, d); };
  DesktopState state(scale_size(kFullScreen, d));

  std::int64_t z = 1;
  auto stack_z = [&](WindowId id) -> std::int64_t {
    return (task.focus && *task.focus == id) ? 100 : z++;
  };

  WindowSpec browser;
  browser.id = kBrowserWindow;
  browser.title = "Checkout - Chromium";
  browser.rect = sc({0, 0, 1280, 860});
  browser.fill = kBrowserFill;
  browser.texture_seed = 101;
  browser.z = stack_z(kBrowserWindow);
  state.spawn_window(browser);

  WindowSpec files;
  files.id = kFilesWindow;
  files.title = "Home - Files";
  files.rect = sc({200, 100, 800, 560});
  files.fill = kFilesFill;
  files.texture_seed = 202;
  files.z = stack_z(kFilesWindow);
  files.decorations = {
      {sc({0, 0, 800, 48}), {190, 190, 186}},
      {sc({0, 48, 180, 512}), {206, 206, 202}},
      {sc({200, 70, 560, 30}), {210, 210, 206}},
      {sc({200, 110, 560, 30}), {210, 210, 206}},
      {sc(kTrashButton), {224, 108, 60}},
  };
  state.spawn_window(files);

  WindowSpec terminal;
  terminal.id = kTerminalWindow;
  terminal.title = "user@ubuntu: ~";
  terminal.rect = sc({1260, 680, 620, 360});
  terminal.fill = kTerminalFill;
  terminal.texture_seed = 303;
  terminal.z = stack_z(kTerminalWindow);
  terminal.decorations = {
      {sc({0, 0, 620, 36}), {60, 60, 60}},
      {sc(kCommandLine), {96, 74, 90}},
  };
  state.spawn_window(terminal);

  if (opts.dock) {
    WindowSpec dock;
    dock.id = kDockWindow;
    dock.title = "gnome-shell dock";
    dock.rect = sc({0, 200, 72, 680});
    dock.fill = kDockFill;
    dock.texture_seed = 909;
    dock.compositor_rendered = true;
    dock.z = 1000;
    dock.decorations = {{sc(kDockIcon), {230, 120, 40}},
                        {sc({8, 280, 56, 56}), {60, 140, 220}}};
    state.spawn_window(dock);
  }

  const Rect page_rect = sc({0, 0, 1280, 860});
  DomPage page({page_rect.w, page_rect.h}, kBrowserWindow, {0, 0});
  auto element = [&](const char* id, Rect bbox, Rgb fill, int z_index) {
    DomElement e;
    e.id = id;
    e.bbox = sc(bbox);
    e.fill = fill;
    e.z_index = z_index;
    return e;
  };
  page.add_element(element("header", {0, 0, 1280, 64}, {60, 64, 72}, 0));
  page.add_element(element("address", {90, 120, 300, 36}, {250, 250, 250}, 0));
  page.add_element(
      element("order_summary", {560, 120, 420, 300}, {246, 246, 236}, 0));
  DomElement place = element("place_order", {90, 212, 100, 70}, {26, 115, 232}, 1);
  place.form_action = std::string(kLegitimateEndpoint);
  place.form_method = "POST";
  page.add_element(place);
  DomElement cancel = element("cancel_link", {210, 232, 80, 30}, {170, 170, 175}, 0);
  cancel.onclick = "history.back";
  page.add_element(cancel);
  for (DomElement e : opts.extra_elements) {
    e.bbox = sc(e.bbox);
    page.add_element(std::move(e));
  }
  state.attach_page(std::move(page));
  for (WindowSpec w : opts.extra_windows) {
    w.rect = sc(w.rect);
    for (auto& d : w.decorations) d.rect = sc(d.rect);
    state.spawn_window(std::move(w));
  }

  if (opts.benign_dynamics) {
    for (const auto& r : benign_dynamics(d)) state.add_dynamic(r);
  }
  return state;
}

std::optional<Rect> target_screen_rect(const DesktopState& state,
                                       const Target& target) {
  if (target.kind == Target::Kind::kWindow) {
    const WindowSpec* w = state.find_window(target.window);
    if (!w) return std::nullopt;
    return target.rect.translated(w->rect.x, w->rect.y).intersect(w->rect);
  }
  const auto& page = state.page();
  if (!page) return std::nullopt;
  const DomElement* e = page->find(target.element_id);
  if (!e) return std::nullopt;
  const Rect page_rect = state.page_screen_rect();
  const WindowSpec& host = state.window(page->host_window());
  return e->bbox
      .translated(host.rect.x + page->origin().x, host.rect.y + page->origin().y)
      .intersect(page_rect);
}

bool receiver_matches(const ClickReceiver& r, const Target& target) {
  if (target.kind == Target::Kind::kDomElement) {
    return r.kind == ClickReceiver::Kind::kDomElement &&
           r.element_id == target.element_id;
  }
  return r.kind == ClickReceiver::Kind::kWindow && r.window == target.window;
}

}  // namespace dtoctou

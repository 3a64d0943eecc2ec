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
#include <vector>

#include "dtoctou/desktop.hpp"

namespace dtoctou {

enum class TaskFamily { kFileDelete, kTerminalCommand, kBrowserForm, kDock };

std::string_view to_string(TaskFamily f);
TaskFamily task_family_from_string(std::string_view s);

// The element the agent means to click.
struct Target {
  enum class Kind { kDomElement, kWindow };
  Kind kind = Kind::kDomElement;
  std::string element_id;  // kDomElement
  WindowId window = 0;     // kWindow
  Rect rect;               // kWindow: control area, window coordinates
  friend bool operator==(const Target&, const Target&) = default;
};

struct TaskSpec {
  std::string id;
  TaskFamily family = TaskFamily::kBrowserForm;
  Target target;
  // Window raised to the top of the stack when the fixture is built.
  std::optional<WindowId> focus;
  // Title used by a window-raise attacker for this task.
  std::string deceptive_label;
  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

struct FixtureOptions {
  int scale_divisor = 1;  // 1 = 1920x1080, 4 = 480x270
  bool benign_dynamics = false;
  bool dock = false;
  // Authored at full resolution and scaled with the rest of the fixture.
  std::vector<WindowSpec> extra_windows;
  std::vector<DomElement> extra_elements;
  friend bool operator==(const FixtureOptions&, const FixtureOptions&) = default;
};

// Well-known window ids of the stock desktop.
inline constexpr WindowId kBrowserWindow = 1;
inline constexpr WindowId kFilesWindow = 2;
inline constexpr WindowId kTerminalWindow = 3;
inline constexpr WindowId kDockWindow = 90;

inline constexpr std::string_view kPlaceOrderId = "place_order";
inline constexpr std::string_view kLegitimateEndpoint = "/submit";
inline constexpr std::string_view kAttackerEndpoint = "/attack";

// Integer scaling of full-resolution geometry; edges are floored so that
// adjacent rectangles stay adjacent.
Rect scale_rect(const Rect& r, int divisor);
Point scale_point(Point p, int divisor);
Size scale_size(Size s, int divisor);

std::vector<std::string> builtin_task_ids();
// Throws kNotFound for an unknown id.
TaskSpec builtin_task(std::string_view id);

// Stock desktop: browser with the checkout page, a file manager and a
// terminal, stacked so the task's window has focus.
DesktopState build_desktop(const TaskSpec& task, const FixtureOptions& opts);

// Benign clock-driven activity: two text carets and a clock face.
std::vector<DynamicRegion> benign_dynamics(int scale_divisor);

// Screen-space bounding box of the task's intended element in `state`.
std::optional<Rect> target_screen_rect(const DesktopState& state,
                                       const Target& target);

// Whether `r` is the receiver the target describes.
bool receiver_matches(const ClickReceiver& r, const Target& target);

}  // namespace dtoctou

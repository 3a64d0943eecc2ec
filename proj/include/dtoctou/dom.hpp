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

#include "dtoctou/types.hpp"

namespace dtoctou {

// A recorded side effect of a click. Nothing here touches the network:
// form submissions and attacker trigger files are plain values.
struct BehavioralEvent {
  enum class Kind { kTrigger, kHttp };
  Kind kind = Kind::kHttp;
  WindowId window = 0;  // kTrigger: the window that received the click
  std::string method;   // kHttp
  std::string action;   // kHttp: endpoint path
  friend bool operator==(const BehavioralEvent&,
                         const BehavioralEvent&) = default;
};

enum class Display { kVisible, kHidden };

struct DomElement {
  std::string id;
  Rect bbox;  // page coordinates
  int z_index = 0;
  Display display = Display::kVisible;
  // Transparent elements take part in hit testing but paint nothing.
  bool transparent = false;
  std::optional<std::string> form_action;
  std::optional<std::string> form_method;
  std::optional<std::string> onclick;
  Rgb fill{255, 255, 255};
  std::uint64_t texture_seed = 0;
  friend bool operator==(const DomElement&, const DomElement&) = default;
};

// Security-critical attributes of whatever element would receive a click.
struct DomFingerprint {
  bool present = false;
  std::string element_id;
  std::optional<std::string> form_action;
  std::optional<std::string> form_method;
  std::optional<std::string> onclick;

  static DomFingerprint absent() { return {}; }
  friend bool operator==(const DomFingerprint&,
                         const DomFingerprint&) = default;
};

class DomPage {
 public:
  DomPage() = default;
  DomPage(Size viewport, WindowId host_window, Point origin);

  Size viewport() const { return viewport_; }
  WindowId host_window() const { return host_window_; }
  Point origin() const { return origin_; }
  Rect viewport_rect() const { return {0, 0, viewport_.width, viewport_.height}; }

  // Elements in document order.
  const std::vector<DomElement>& elements() const { return elements_; }
  const DomElement* find(const std::string& id) const;

  // Appends in document order; throws kDuplicate on a reused id.
  void add_element(DomElement element);
  // Overlays enter the document hidden, whatever `overlay.display` says.
  void inject_overlay(DomElement overlay);
  void activate_overlay(const std::string& id);
  void deactivate_overlay(const std::string& id);

  friend bool operator==(const DomPage&, const DomPage&) = default;

 private:
  DomElement& mutable_element(const std::string& id);

  Size viewport_{};
  WindowId host_window_ = 0;
  Point origin_{};
  std::vector<DomElement> elements_;
};

// Highest z_index displayed element containing `c`; later document order
// wins ties. Transparency is irrelevant here.
std::optional<std::string> dom_hit_test(const DomPage& page, Point c);

std::optional<BehavioralEvent> dom_click(const DomPage& page,
                                         const std::string& id);

DomFingerprint dom_fingerprint(const DomPage& page, Point c);

}  // namespace dtoctou

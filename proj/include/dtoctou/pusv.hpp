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

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dtoctou/agent.hpp"
#include "dtoctou/desktop.hpp"
#include "dtoctou/frame.hpp"

namespace dtoctou {

// Verification layers in evaluation order.
enum class Layer { kNone, kL1, kL2a, kL2b, kL2c };
inline constexpr std::array<Layer, 4> kLayers{Layer::kL1, Layer::kL2a,
                                              Layer::kL2b, Layer::kL2c};

std::string_view to_string(Layer l);
Layer layer_from_string(std::string_view s);

struct LayerMask {
  bool l1 = true;
  bool l2a = true;
  bool l2b = true;
  bool l2c = false;

  bool enabled(Layer l) const;
  bool any() const { return l1 || l2a || l2b || l2c; }
  friend bool operator==(const LayerMask&, const LayerMask&) = default;
};

// "on", "off", "all", a single layer name, or "mask:l1,l2b,...".
LayerMask parse_defense(std::string_view spec);
std::string defense_name(const LayerMask& mask);

std::vector<std::string> default_keywords();

struct PusvConfig {
  double tau1 = 0.92;
  int patch = 160;
  double tau2a = 0.002;
  int delta_noise = 20;
  std::vector<std::string> keywords = default_keywords();
  LayerMask layers;
  friend bool operator==(const PusvConfig&, const PusvConfig&) = default;
};

void validate(const PusvConfig& config);

// Virtual cost of one verification: 50 ms capture, 5 ms for the pixel
// layers, 10 ms for the registry query and 30 ms for the DOM query.
Millis verification_overhead_ms(const LayerMask& layers);

struct PusvVerdict {
  bool abort = false;
  Layer fired_layer = Layer::kNone;
  // Unset when the layer was not evaluated.
  std::optional<double> ssim;
  std::optional<double> glob_diff_ratio;
  std::vector<RegistryEntry> new_keyword_windows;
  bool fingerprint_changed = false;
  Millis overhead_ms = 0;
  // Per-layer failure flags, indexed as kLayers; unset when not evaluated.
  std::array<std::optional<bool>, 4> failed{};

  friend bool operator==(const PusvVerdict&, const PusvVerdict&) = default;
};

// The square the L1 layer compares: `patch` wide, centred on c, translated
// to stay on screen. Smaller screens clip it to the screen.
Rect patch_rect(Size screen, Point c, int patch);

// Mean SSIM over all 7x7 windows inside the patch around c.
double ssim_patch(const PixelFrame& a, const PixelFrame& b, Point c,
                  int patch);
// SSIM of two equally sized regions of two frames.
double ssim_region(const PixelFrame& a, const PixelFrame& b, const Rect& region);

// Fraction of the pixels outside `mask` whose gray levels differ by more
// than delta_noise.
double glob_diff_ratio(const PixelFrame& a, const PixelFrame& b,
                       const Rect& mask, int delta_noise);

// Windows listed at T_act, unknown at T_obs, titled with a keyword.
std::vector<RegistryEntry> registry_diff(const RegistrySnapshot& obs,
                                         const RegistrySnapshot& act,
                                         const std::vector<std::string>& keywords);

// Fingerprint of whatever would receive a click at screen coordinate c.
DomFingerprint fingerprint_at(const DesktopState& state, Point c);

// Re-captures the current state and compares it with the observation.
// Diagnostic mode evaluates all four layers, enabled or not, instead of
// stopping at the first failure. Only enabled layers can fire, so the
// attribution is the same either way.
PusvVerdict verify(const DesktopState& state, const Observation& obs,
                   const Action& action, const PusvConfig& config,
                   bool diagnostic = false);

}  // namespace dtoctou

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

#include "dtoctou/pusv.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <sstream>

namespace dtoctou {

namespace {

constexpr int kWin = 7;
constexpr double kC1 = (0.01 * 255) * (0.01 * 255);
constexpr double kC2 = (0.03 * 255) * (0.03 * 255);

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& ch : out) {
    ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  return out;
}

std::size_t layer_index(Layer l) {
  return static_cast<std::size_t>(l) - 1;
}

}  // namespace

std::string_view to_string(Layer l) {
  switch (l) {
    case Layer::kNone:
      return "none";
    case Layer::kL1:
      return "L1";
    case Layer::kL2a:
      return "L2a";
    case Layer::kL2b:
      return "L2b";
    case Layer::kL2c:
      return "L2c";
  }
  return "none";
}

Layer layer_from_string(std::string_view s) {
  const std::string l = lower(s);
  for (auto v : {Layer::kNone, Layer::kL1, Layer::kL2a, Layer::kL2b,
                 Layer::kL2c}) {
    if (lower(to_string(v)) == l) return v;
  }
  throw Error(ErrorCode::kSchema, "unknown layer '" + std::string(s) + "'");
}

bool LayerMask::enabled(Layer l) const {
  switch (l) {
    case Layer::kL1:
      return l1;
    case Layer::kL2a:
      return l2a;
    case Layer::kL2b:
      return l2b;
    case Layer::kL2c:
      return l2c;
    case Layer::kNone:
      return false;
  }
  return false;
}

LayerMask parse_defense(std::string_view spec) {
  const std::string s = lower(spec);
  if (s == "on") return {};
  if (s == "off") return {false, false, false, false};
  if (s == "all") return {true, true, true, true};
  LayerMask m{false, false, false, false};
  auto set = [&m, &spec](std::string_view name) {
    switch (layer_from_string(name)) {
      case Layer::kL1:
        m.l1 = true;
        break;
      case Layer::kL2a:
        m.l2a = true;
        break;
      case Layer::kL2b:
        m.l2b = true;
        break;
      case Layer::kL2c:
        m.l2c = true;
        break;
      case Layer::kNone:
        throw Error(ErrorCode::kSchema,
                    "bad defense spec '" + std::string(spec) + "'");
    }
  };
  if (s.rfind("mask:", 0) == 0) {
    std::stringstream in(s.substr(5));
    std::string item;
    while (std::getline(in, item, ',')) {
      if (!item.empty()) set(item);
    }
    if (!m.any()) {
      throw Error(ErrorCode::kSchema, "empty defense mask; use 'off'");
    }
    return m;
  }
  set(s);
  return m;
}

std::string defense_name(const LayerMask& m) {
  if (m == LayerMask{}) return "on";
  if (!m.any()) return "off";
  if (m == LayerMask{true, true, true, true}) return "all";
  std::vector<std::string> parts;
  for (Layer l : kLayers) {
    if (m.enabled(l)) parts.push_back(lower(to_string(l)));
  }
  if (parts.size() == 1) return parts.front();
  std::string out = "mask:";
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ',';
    out += parts[i];
  }
  return out;
}

std::vector<std::string> default_keywords() {
  return {"security", "alert", "warning", "zenity", "systemoverlay"};
}

void validate(const PusvConfig& c) {
  if (!(c.tau1 > 0.0 && c.tau1 < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tau1 must lie in (0, 1)");
  }
  if (!(c.tau2a > 0.0 && c.tau2a < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tau2a must lie in (0, 1)");
  }
  if (c.delta_noise < 0 || c.delta_noise > 255) {
    throw Error(ErrorCode::kInvalidArgument, "delta_noise must lie in [0, 255]");
  }
  // Smaller patches hold no complete 7x7 SSIM window.
  if (c.patch < 8 || c.patch % 2 != 0) {
    throw Error(ErrorCode::kInvalidArgument, "patch must be even and >= 8");
  }
}

Millis verification_overhead_ms(const LayerMask& m) {
  Millis ms = 50;
  if (m.l1 || m.l2a) ms += 5;
  if (m.l2b) ms += 10;
  if (m.l2c) ms += 30;
  return ms;
}

Rect patch_rect(Size screen, Point c, int patch) {
  auto axis = [patch](int center, int extent) -> std::pair<int, int> {
    const int len = std::min(patch, extent);
    const int start = std::clamp(center - patch / 2, 0, extent - len);
    return {start, len};
  };
  const auto [x, w] = axis(c.x, screen.width);
  const auto [y, h] = axis(c.y, screen.height);
  return {x, y, w, h};
}

double ssim_region(const PixelFrame& a, const PixelFrame& b, const Rect& r) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kInvalidArgument, "frame dimensions differ");
  }
  if (!a.bounds().contains(r) || r.w < kWin || r.h < kWin) {
    throw Error(ErrorCode::kInvalidArgument,
                "SSIM region must lie on screen and span at least 7x7");
  }
  // Integral images of x, y, x^2, y^2 and xy; every window sum is exact.
  const int w = r.w;
  const int h = r.h;
  const std::size_t stride = static_cast<std::size_t>(w) + 1;
  std::vector<std::int64_t> sx(stride * (h + 1)), sy(sx.size()),
      sxx(sx.size()), syy(sx.size()), sxy(sx.size());
  for (int y = 0; y < h; ++y) {
    std::int64_t rx = 0, ry = 0, rxx = 0, ryy = 0, rxy = 0;
    for (int x = 0; x < w; ++x) {
      const std::int64_t gx = a.gray(r.x + x, r.y + y);
      const std::int64_t gy = b.gray(r.x + x, r.y + y);
      rx += gx;
      ry += gy;
      rxx += gx * gx;
      ryy += gy * gy;
      rxy += gx * gy;
      const std::size_t i = (y + 1) * stride + x + 1;
      const std::size_t up = y * stride + x + 1;
      sx[i] = sx[up] + rx;
      sy[i] = sy[up] + ry;
      sxx[i] = sxx[up] + rxx;
      syy[i] = syy[up] + ryy;
      sxy[i] = sxy[up] + rxy;
    }
  }
  auto box = [stride](const std::vector<std::int64_t>& s, int x, int y) {
    const std::size_t x1 = x + kWin;
    const std::size_t y1 = y + kWin;
    return s[y1 * stride + x1] - s[y * stride + x1] - s[y1 * stride + x] +
           s[y * stride + x];
  };
  constexpr double n = kWin * kWin;
  double total = 0.0;
  std::int64_t count = 0;
  for (int y = 0; y + kWin <= h; ++y) {
    for (int x = 0; x + kWin <= w; ++x) {
      const std::int64_t bx = box(sx, x, y);
      const std::int64_t by = box(sy, x, y);
      const double mx = bx / n;
      const double my = by / n;
      const double vx = (kWin * kWin * box(sxx, x, y) - bx * bx) / (n * n);
      const double vy = (kWin * kWin * box(syy, x, y) - by * by) / (n * n);
      const double cxy = (kWin * kWin * box(sxy, x, y) - bx * by) / (n * n);
      const double num = (2 * mx * my + kC1) * (2 * cxy + kC2);
      const double den = (mx * mx + my * my + kC1) * (vx + vy + kC2);
      total += num / den;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

double ssim_patch(const PixelFrame& a, const PixelFrame& b, Point c,
                  int patch) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kInvalidArgument, "frame dimensions differ");
  }
  return ssim_region(a, b, patch_rect(a.size(), c, patch));
}

double glob_diff_ratio(const PixelFrame& a, const PixelFrame& b,
                       const Rect& mask, int delta_noise) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kInvalidArgument, "frame dimensions differ");
  }
  if (mask.w > a.width() || mask.h > a.height()) {
    throw Error(ErrorCode::kInvalidArgument, "mask larger than frame");
  }
  const Rect m = mask.intersect(a.bounds());
  const std::int64_t total = static_cast<std::int64_t>(a.width()) * a.height();
  const std::int64_t outside = total - m.area();
  if (outside <= 0) return 0.0;
  const auto da = a.data();
  const auto db = b.data();
  const std::size_t stride = static_cast<std::size_t>(a.width()) * 3;
  std::int64_t changed = 0;
  for (int y = 0; y < a.height(); ++y) {
    const std::uint8_t* ra = da.data() + y * stride;
    const std::uint8_t* rb = db.data() + y * stride;
    if (std::memcmp(ra, rb, stride) == 0) continue;
    const bool masked_row = y >= m.y && y < m.bottom() && !m.empty();
    for (int x = 0; x < a.width(); ++x) {
      if (masked_row && x >= m.x && x < m.right()) continue;
      const std::uint8_t* pa = ra + x * 3;
      const std::uint8_t* pb = rb + x * 3;
      const int d = static_cast<int>(luma(pa[0], pa[1], pa[2])) -
                    static_cast<int>(luma(pb[0], pb[1], pb[2]));
      if (std::abs(d) > delta_noise) ++changed;
    }
  }
  return static_cast<double>(changed) / static_cast<double>(outside);
}

std::vector<RegistryEntry> registry_diff(
    const RegistrySnapshot& obs, const RegistrySnapshot& act,
    const std::vector<std::string>& keywords) {
  std::vector<std::string> keys;
  for (const auto& k : keywords) {
    if (!k.empty()) keys.push_back(lower(k));
  }
  std::vector<RegistryEntry> out;
  for (const auto& e : act.listed) {
    if (obs.known_ids.count(e.id)) continue;
    const std::string title = lower(e.title);
    for (const auto& k : keys) {
      if (title.find(k) != std::string::npos) {
        out.push_back(e);
        break;
      }
    }
  }
  return out;
}

DomFingerprint fingerprint_at(const DesktopState& state, Point c) {
  const auto& page = state.page();
  if (!page || !state.screen_rect().contains(c)) return DomFingerprint::absent();
  const WindowSpec* top = state.top_window_at(c);
  if (!top || top->id != page->host_window()) return DomFingerprint::absent();
  const Rect pr = state.page_screen_rect();
  if (!pr.contains(c)) return DomFingerprint::absent();
  return dom_fingerprint(*page, {c.x - pr.x, c.y - pr.y});
}

PusvVerdict verify(const DesktopState& state, const Observation& obs,
                   const Action& action, const PusvConfig& config,
                   bool diagnostic) {
  validate(config);
  PusvVerdict v;
  v.overhead_ms = verification_overhead_ms(config.layers);
  const LayerMask& on = config.layers;
  const bool need_pixels = diagnostic || on.l1 || on.l2a;
  PixelFrame fresh;
  if (need_pixels) fresh = render(state);

  auto record = [&](Layer l, bool failed) {
    v.failed[layer_index(l)] = failed;
    if (failed && on.enabled(l) && v.fired_layer == Layer::kNone) {
      v.fired_layer = l;
    }
  };
  auto wanted = [&](Layer l) {
    if (diagnostic) return true;
    return on.enabled(l) && v.fired_layer == Layer::kNone;
  };

  if (wanted(Layer::kL1)) {
    v.ssim = ssim_patch(obs.frame, fresh, action.c, config.patch);
    record(Layer::kL1, *v.ssim < config.tau1);
  }
  if (wanted(Layer::kL2a)) {
    const Rect mask = patch_rect(obs.frame.size(), action.c, config.patch);
    v.glob_diff_ratio =
        glob_diff_ratio(obs.frame, fresh, mask, config.delta_noise);
    record(Layer::kL2a, *v.glob_diff_ratio > config.tau2a);
  }
  if (wanted(Layer::kL2b)) {
    v.new_keyword_windows = registry_diff(obs.registry, registry_snapshot(state),
                                          config.keywords);
    record(Layer::kL2b, !v.new_keyword_windows.empty());
  }
  if (wanted(Layer::kL2c)) {
    v.fingerprint_changed = fingerprint_at(obs.state, action.c) !=
                            fingerprint_at(state, action.c);
    record(Layer::kL2c, v.fingerprint_changed);
  }
  v.abort = v.fired_layer != Layer::kNone;
  return v;
}

}  // namespace dtoctou

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

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace dtoctou {

// Error categories surfaced through the C API as status codes.
enum class ErrorCode {
  kInvalidArgument = 1,
  kNotFound,
  kDuplicate,
  kOutOfBounds,
  kState,
  kSchema,
  kIo,
  kUnsupported,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

using WindowId = std::int64_t;
using Millis = std::int64_t;

struct Point {
  int x = 0;
  int y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct Size {
  int width = 0;
  int height = 0;
  friend bool operator==(const Size&, const Size&) = default;
};

// Axis-aligned, half-open integer rectangle: [x, x+w) x [y, y+h).
struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  int right() const { return x + w; }
  int bottom() const { return y + h; }
  bool empty() const { return w <= 0 || h <= 0; }
  std::int64_t area() const {
    return empty() ? 0 : static_cast<std::int64_t>(w) * h;
  }
  bool contains(Point p) const {
    return p.x >= x && p.x < right() && p.y >= y && p.y < bottom();
  }
  bool contains(const Rect& r) const {
    return r.x >= x && r.y >= y && r.right() <= right() &&
           r.bottom() <= bottom();
  }
  Point center() const { return {x + w / 2, y + h / 2}; }
  Rect translated(int dx, int dy) const { return {x + dx, y + dy, w, h}; }
  Rect intersect(const Rect& o) const {
    const int nx = std::max(x, o.x);
    const int ny = std::max(y, o.y);
    const int nr = std::min(right(), o.right());
    const int nb = std::min(bottom(), o.bottom());
    if (nr <= nx || nb <= ny) return {nx, ny, 0, 0};
    return {nx, ny, nr - nx, nb - ny};
  }
  friend bool operator==(const Rect&, const Rect&) = default;
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// BT.601 luma, rounded half-up in integer arithmetic.
constexpr std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return static_cast<std::uint8_t>((299u * r + 587u * g + 114u * b + 500u) /
                                   1000u);
}
constexpr std::uint8_t luma(Rgb c) { return luma(c.r, c.g, c.b); }

inline constexpr Size kFullScreen{1920, 1080};
inline constexpr Size kQuarterScreen{480, 270};

}  // namespace dtoctou

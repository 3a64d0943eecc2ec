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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dtoctou/types.hpp"

namespace dtoctou {

// Row-major 8-bit RGB raster.
class PixelFrame {
 public:
  PixelFrame() = default;
  PixelFrame(int width, int height, Rgb fill = {});

  int width() const { return width_; }
  int height() const { return height_; }
  Size size() const { return {width_, height_}; }
  Rect bounds() const { return {0, 0, width_, height_}; }

  Rgb at(int x, int y) const {
    const auto* p = &pixels_[index(x, y)];
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, Rgb c) {
    auto* p = &pixels_[index(x, y)];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }
  std::uint8_t gray(int x, int y) const {
    const auto* p = &pixels_[index(x, y)];
    return luma(p[0], p[1], p[2]);
  }

  std::span<const std::uint8_t> data() const { return pixels_; }
  std::span<std::uint8_t> mutable_data() { return pixels_; }

  // Grayscale copy of the whole frame, one byte per pixel.
  std::vector<std::uint8_t> to_gray() const;

  // Content hash over the dimensions and raw bytes.
  std::uint64_t digest() const;

  friend bool operator==(const PixelFrame&, const PixelFrame&) = default;

 private:
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

// Number of pixels whose RGB triple differs between the frames, restricted
// to `region`. Frames must have equal dimensions.
std::int64_t count_differing_pixels(const PixelFrame& a, const PixelFrame& b,
                                    const Rect& region);

// Smallest rectangle enclosing every differing pixel; empty when identical.
Rect diff_bounding_box(const PixelFrame& a, const PixelFrame& b);

void write_png(const PixelFrame& frame, const std::filesystem::path& path);

// Headerless RGB dump: width*height*3 bytes.
void write_raw(const PixelFrame& frame, const std::filesystem::path& path);
PixelFrame read_raw(const std::filesystem::path& path, Size size);

std::string digest_hex(std::uint64_t digest);

}  // namespace dtoctou

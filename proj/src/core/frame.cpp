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

#include "dtoctou/frame.hpp"

#include <png.h>

#include <cstdio>
#include <fstream>
#include <memory>

#include "dtoctou/rng.hpp"

namespace dtoctou {

PixelFrame::PixelFrame(int width, int height, Rgb fill)
    : width_(width), height_(height) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "frame dimensions must be > 0");
  }
  pixels_.resize(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t i = 0; i < pixels_.size(); i += 3) {
    pixels_[i] = fill.r;
    pixels_[i + 1] = fill.g;
    pixels_[i + 2] = fill.b;
  }
}

std::vector<std::uint8_t> PixelFrame::to_gray() const {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(width_) * height_);
  for (std::size_t i = 0, j = 0; i < out.size(); ++i, j += 3) {
    out[i] = luma(pixels_[j], pixels_[j + 1], pixels_[j + 2]);
  }
  return out;
}

std::uint64_t PixelFrame::digest() const {
  // FNV-1a over 64-bit little-endian words, tail zero-padded.
  constexpr std::uint64_t kPrime = 0x100000001b3ull;
  std::uint64_t h = 0xcbf29ce484222325ull;
  h = (h ^ static_cast<std::uint32_t>(width_)) * kPrime;
  h = (h ^ static_cast<std::uint32_t>(height_)) * kPrime;
  const std::size_t n = pixels_.size();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    std::uint64_t w = 0;
    for (int b = 7; b >= 0; --b) w = w << 8 | pixels_[i + b];
    h = (h ^ w) * kPrime;
  }
  if (i < n) {
    std::uint64_t w = 0;
    for (std::size_t b = n; b-- > i;) w = w << 8 | pixels_[b];
    h = (h ^ w) * kPrime;
  }
  return mix64(h);
}

std::int64_t count_differing_pixels(const PixelFrame& a, const PixelFrame& b,
                                    const Rect& region) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kInvalidArgument, "frame dimensions differ");
  }
  const Rect r = region.intersect(a.bounds());
  std::int64_t n = 0;
  for (int y = r.y; y < r.bottom(); ++y) {
    for (int x = r.x; x < r.right(); ++x) {
      if (a.at(x, y) != b.at(x, y)) ++n;
    }
  }
  return n;
}

Rect diff_bounding_box(const PixelFrame& a, const PixelFrame& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kInvalidArgument, "frame dimensions differ");
  }
  int x0 = a.width(), y0 = a.height(), x1 = -1, y1 = -1;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      if (a.at(x, y) == b.at(x, y)) continue;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  if (x1 < 0) return {};
  return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};

}  // namespace

void write_png(const PixelFrame& frame, const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, FileCloser> file(
      std::fopen(path.string().c_str(), "wb"));
  if (!file) {
    throw Error(ErrorCode::kIo, "cannot open " + path.string());
  }
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIo, "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIo, "libpng failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(frame.width()),
               static_cast<png_uint_32>(frame.height()), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const auto data = frame.data();
  const std::size_t stride = static_cast<std::size_t>(frame.width()) * 3;
  for (int y = 0; y < frame.height(); ++y) {
    png_write_row(png, const_cast<png_bytep>(data.data() + y * stride));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_raw(const PixelFrame& frame, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  const auto data = frame.data();
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

PixelFrame read_raw(const std::filesystem::path& path, Size size) {
  PixelFrame frame(size.width, size.height);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  auto data = frame.mutable_data();
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size()));
  if (in.gcount() != static_cast<std::streamsize>(data.size())) {
    throw Error(ErrorCode::kIo, "raw dump size mismatch: " + path.string());
  }
  return frame;
}

std::string digest_hex(std::uint64_t digest) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(digest));
  return buf;
}

}  // namespace dtoctou

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

#include "dtoctou/frame.hpp"

namespace dtoctou::testing_ref {

// Direct evaluation of mean SSIM: every 7x7 window inside `r` is summed
// pixel by pixel in double precision. Gray levels use the integer BT.601
// weights; variances are population variances.
inline double ssim_brute_force(const PixelFrame& a, const PixelFrame& b,
                               const Rect& r) {
  constexpr int k = 7;
  const double c1 = (0.01 * 255) * (0.01 * 255);
  const double c2 = (0.03 * 255) * (0.03 * 255);
  double total = 0.0;
  long windows = 0;
  for (int y0 = r.y; y0 + k <= r.bottom(); ++y0) {
    for (int x0 = r.x; x0 + k <= r.right(); ++x0) {
      double mx = 0, my = 0;
      for (int y = y0; y < y0 + k; ++y) {
        for (int x = x0; x < x0 + k; ++x) {
          mx += a.gray(x, y);
          my += b.gray(x, y);
        }
      }
      mx /= k * k;
      my /= k * k;
      double vx = 0, vy = 0, cov = 0;
      for (int y = y0; y < y0 + k; ++y) {
        for (int x = x0; x < x0 + k; ++x) {
          const double dx = a.gray(x, y) - mx;
          const double dy = b.gray(x, y) - my;
          vx += dx * dx;
          vy += dy * dy;
          cov += dx * dy;
        }
      }
      vx /= k * k;
      vy /= k * k;
      cov /= k * k;
      total += ((2 * mx * my + c1) * (2 * cov + c2)) /
               ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++windows;
    }
  }
  return total / static_cast<double>(windows);
}

}  // namespace dtoctou::testing_ref

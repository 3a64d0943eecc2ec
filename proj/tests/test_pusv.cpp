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

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "dtoctou/agent.hpp"
#include "dtoctou/pusv.hpp"
#include "dtoctou/rng.hpp"
#include "ssim_reference.hpp"

namespace dtoctou {
namespace {

PixelFrame noise_frame(std::uint64_t seed, int w, int h) {
  Rng rng(seed);
  PixelFrame f(w, h);
  // Smooth gradient plus noise, so windows have real structure.
  const int gx = static_cast<int>(rng.uniform_int(0, 3));
  const int gy = static_cast<int>(rng.uniform_int(0, 3));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto n = static_cast<int>(rng.uniform_int(-40, 40));
      auto ch = [&](int base) {
        return static_cast<std::uint8_t>(std::clamp(base + gx * x / 4 + gy * y / 4 + n, 0, 255));
      };
      f.set(x, y, {ch(90), ch(120), ch(60)});
    }
  }
  return f;
}

// Perturbs a copy: a shifted rectangle and additive noise.
PixelFrame perturb(const PixelFrame& src, std::uint64_t seed) {
  Rng rng(seed);
  PixelFrame f = src;
  const int amount = static_cast<int>(rng.uniform_int(0, 60));
  const int rx = static_cast<int>(rng.uniform_int(0, src.width() - 40));
  const int ry = static_cast<int>(rng.uniform_int(0, src.height() - 40));
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) {
      Rgb c = src.at(x, y);
      int off = static_cast<int>(rng.uniform_int(-amount / 4, amount / 4));
      if (x >= rx && x < rx + 40 && y >= ry && y < ry + 40) off += amount * 2;
      auto ch = [off](std::uint8_t v) {
        return static_cast<std::uint8_t>(std::clamp(int(v) + off, 0, 255));
      };
      f.set(x, y, {ch(c.r), ch(c.g), ch(c.b)});
    }
  }
  return f;
}

TEST(Ssim, MatchesBruteForceReference) {
  for (std::uint64_t i = 0; i < 50; ++i) {
    Rng rng(combine_seed(0x55, i));
    const int w = static_cast<int>(rng.uniform_int(60, 220));
    const int h = static_cast<int>(rng.uniform_int(60, 200));
    const PixelFrame a = noise_frame(combine_seed(1, i), w, h);
    const PixelFrame b = perturb(a, combine_seed(2, i));
    const int patch = static_cast<int>(rng.uniform_int(8, 80)) * 2;
    const Point c{static_cast<int>(rng.uniform_int(0, w - 1)),
                  static_cast<int>(rng.uniform_int(0, h - 1))};
    const Rect r = patch_rect(a.size(), c, patch);
    const double got = ssim_patch(a, b, c, patch);
    const double want = testing_ref::ssim_brute_force(a, b, r);
    EXPECT_NEAR(got, want, 1e-9) << "pair " << i;
  }
}

TEST(Ssim, IdenticalIsExactlyOne) {
  for (std::uint64_t i = 0; i < 10; ++i) {
    const PixelFrame a = noise_frame(i, 170, 170);
    EXPECT_EQ(ssim_patch(a, a, {85, 85}, 160), 1.0);
  }
  const PixelFrame flat(64, 64, {7, 7, 7});
  EXPECT_EQ(ssim_patch(flat, flat, {32, 32}, 32), 1.0);
}

TEST(Ssim, UniformShiftMatchesClosedForm) {
  // Flat frames: both variances and the covariance vanish, leaving the
  // luminance term only.
  const PixelFrame a(200, 200, {100, 100, 100});
  const PixelFrame b(200, 200, {110, 110, 110});
  const double c1 = (0.01 * 255) * (0.01 * 255);
  const double want = (2.0 * 100 * 110 + c1) / (100.0 * 100 + 110.0 * 110 + c1);
  EXPECT_NEAR(ssim_patch(a, b, {100, 100}, 160), want, 1e-12);
  EXPECT_GT(want, 0.99);
}

TEST(Ssim, RejectsBadRegions) {
  const PixelFrame a(50, 50);
  const PixelFrame b(51, 50);
  EXPECT_THROW(ssim_region(a, b, {0, 0, 10, 10}), Error);
  EXPECT_THROW(ssim_region(a, a, {0, 0, 6, 10}), Error);
  EXPECT_THROW(ssim_region(a, a, {45, 0, 10, 10}), Error);
}

TEST(PatchRect, StaysOnScreen) {
  EXPECT_EQ(patch_rect(kFullScreen, {140, 247}, 160), (Rect{60, 167, 160, 160}));
  EXPECT_EQ(patch_rect(kFullScreen, {5, 5}, 160), (Rect{0, 0, 160, 160}));
  EXPECT_EQ(patch_rect(kFullScreen, {1919, 1079}, 160), (Rect{1760, 920, 160, 160}));
  EXPECT_EQ(patch_rect({100, 60}, {50, 30}, 160), (Rect{0, 0, 100, 60}));
}

TEST(GlobDiff, AreaArithmetic) {
  const PixelFrame a(1920, 1080, {100, 100, 100});
  PixelFrame b = a;
  // A 380x90 banner in the top-right corner, away from a 160x160 mask.
  for (int y = 0; y < 90; ++y) {
    for (int x = 1540; x < 1920; ++x) b.set(x, y, {200, 200, 200});
  }
  const Rect mask = patch_rect(kFullScreen, {140, 247}, 160);
  EXPECT_DOUBLE_EQ(glob_diff_ratio(a, b, mask, 20), 34200.0 / (2073600.0 - 25600.0));
}

TEST(GlobDiff, MaskedPixelsNeverCount) {
  for (std::uint64_t i = 0; i < 20; ++i) {
    Rng rng(i);
    const PixelFrame a = noise_frame(i, 120, 90);
    const PixelFrame b = perturb(a, i + 1000);
    const Rect mask{static_cast<int>(rng.uniform_int(0, 60)),
                    static_cast<int>(rng.uniform_int(0, 40)), 40, 40};
    PixelFrame c = b;
    for (int y = mask.y; y < mask.bottom(); ++y) {
      for (int x = mask.x; x < mask.right(); ++x) {
        c.set(x, y, {static_cast<std::uint8_t>(rng.uniform_int(0, 255)), 0, 0});
      }
    }
    EXPECT_EQ(glob_diff_ratio(a, b, mask, 20), glob_diff_ratio(a, c, mask, 20));

    // Brute-force count outside the mask.
    std::int64_t n = 0;
    for (int y = 0; y < 90; ++y) {
      for (int x = 0; x < 120; ++x) {
        if (mask.contains(Point{x, y})) continue;
        if (std::abs(int(a.gray(x, y)) - int(b.gray(x, y))) > 20) ++n;
      }
    }
    EXPECT_DOUBLE_EQ(glob_diff_ratio(a, b, mask, 20),
                     static_cast<double>(n) / (120.0 * 90 - 1600));
  }
}

TEST(GlobDiff, ThresholdIsStrict) {
  const PixelFrame a(10, 10, {100, 100, 100});
  const PixelFrame b(10, 10, {120, 120, 120});
  EXPECT_EQ(glob_diff_ratio(a, b, {0, 0, 1, 1}, 20), 0.0);
  EXPECT_EQ(glob_diff_ratio(a, b, {0, 0, 1, 1}, 19), 1.0);
  EXPECT_THROW(glob_diff_ratio(a, b, {0, 0, 11, 1}, 20), Error);
}

TEST(RegistryDiff, KeywordWindowsOnly) {
  RegistrySnapshot obs;
  obs.listed = {{1, "Files"}};
  obs.known_ids = {1, 7};
  RegistrySnapshot act;
  act.listed = {{1, "Files"},
                {2, "SECURITY WARNING"},
                {3, "Confirm Transfer"},
                {7, "System Alert"}};
  act.known_ids = {1, 2, 3, 7};
  const auto hits = registry_diff(obs, act, default_keywords());
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].id, 2);
  EXPECT_TRUE(registry_diff(obs, act, {}).empty());
}

TEST(Defense, Parsing) {
  EXPECT_EQ(parse_defense("on"), (LayerMask{true, true, true, false}));
  EXPECT_EQ(parse_defense("off"), (LayerMask{false, false, false, false}));
  EXPECT_EQ(parse_defense("all"), (LayerMask{true, true, true, true}));
  EXPECT_EQ(parse_defense("l2b"), (LayerMask{false, false, true, false}));
  EXPECT_EQ(parse_defense("mask:l1,l2c"), (LayerMask{true, false, false, true}));
  EXPECT_THROW(parse_defense("l3"), Error);
  EXPECT_THROW(parse_defense("mask:"), Error);
  for (const char* s : {"on", "off", "all", "l1", "l2a", "mask:l1,l2b"}) {
    EXPECT_EQ(parse_defense(defense_name(parse_defense(s))), parse_defense(s)) << s;
  }
}

TEST(Overhead, Accounting) {
  EXPECT_EQ(verification_overhead_ms(parse_defense("on")), 65);
  EXPECT_EQ(verification_overhead_ms(parse_defense("all")), 95);
  EXPECT_EQ(verification_overhead_ms(parse_defense("l2b")), 60);
  EXPECT_LT(verification_overhead_ms(parse_defense("all")), 100);
}

TEST(Config, Validation) {
  PusvConfig c;
  EXPECT_NO_THROW(validate(c));
  c.tau1 = 1.5;
  EXPECT_THROW(validate(c), Error);
  c = {};
  c.patch = 4;
  EXPECT_THROW(validate(c), Error);
  c = {};
  c.tau2a = -0.1;
  EXPECT_THROW(validate(c), Error);
}

class VerifyTest : public ::testing::Test {
 protected:
  void SetUp() override {
    task = builtin_task("browser_placeorder");
    state = build_desktop(task, {});
    state.advance_to(10'000);
    obs = observe(state);
    Rng rng(1);
    action = *ground(obs, task, {}, rng);
  }
  TaskSpec task;
  DesktopState state;
  Observation obs;
  Action action;
};

TEST_F(VerifyTest, CleanStatePasses) {
  state.advance_to(16'500);
  const PusvVerdict v = verify(state, obs, action, {}, true);
  EXPECT_FALSE(v.abort);
  EXPECT_EQ(v.fired_layer, Layer::kNone);
  EXPECT_EQ(*v.ssim, 1.0);
  EXPECT_EQ(*v.glob_diff_ratio, 0.0);
  EXPECT_EQ(v.overhead_ms, 65);
  for (const auto& f : v.failed) EXPECT_EQ(f, std::optional<bool>(false));
}

TEST_F(VerifyTest, KeywordWindowFiresL2b) {
  WindowSpec w;
  w.id = 500;
  w.title = "zenity: Security Warning";
  w.rect = {1500, 900, 10, 10};  // tiny and far from the target
  w.texture_amplitude = 0;
  state.spawn_window(w);
  PusvConfig cfg;
  cfg.layers = parse_defense("l2b");
  const PusvVerdict v = verify(state, obs, action, cfg);
  EXPECT_TRUE(v.abort);
  EXPECT_EQ(v.fired_layer, Layer::kL2b);
  ASSERT_EQ(v.new_keyword_windows.size(), 1u);
  EXPECT_EQ(v.new_keyword_windows[0].id, 500);
}

TEST_F(VerifyTest, DisabledLayersNeverFire) {
  WindowSpec w;
  w.id = 501;
  w.title = "cover";
  w.rect = {0, 0, 600, 600};
  w.fill = {255, 0, 0};
  state.spawn_window(w);
  PusvConfig off;
  off.layers = parse_defense("off");
  const PusvVerdict diag = verify(state, obs, action, off, true);
  EXPECT_FALSE(diag.abort);
  EXPECT_TRUE(*diag.failed[0]);  // L1 detects, but is not enabled
  PusvConfig on;
  const PusvVerdict a = verify(state, obs, action, on, false);
  const PusvVerdict b = verify(state, obs, action, on, true);
  EXPECT_TRUE(a.abort);
  EXPECT_EQ(a.fired_layer, Layer::kL1);
  EXPECT_EQ(a.fired_layer, b.fired_layer);
  EXPECT_EQ(a.abort, b.abort);
}

TEST_F(VerifyTest, FingerprintChangeFiresL2c) {
  DomElement overlay;
  overlay.id = "atk_overlay";
  overlay.bbox = {0, 0, 600, 600};
  overlay.z_index = 9999;
  overlay.transparent = true;
  overlay.form_action = "/attack";
  overlay.form_method = "POST";
  state.mutable_page().inject_overlay(overlay);
  state.mutable_page().activate_overlay("atk_overlay");
  PusvConfig on;
  EXPECT_FALSE(verify(state, obs, action, on).abort);
  PusvConfig all;
  all.layers = parse_defense("all");
  const PusvVerdict v = verify(state, obs, action, all);
  EXPECT_TRUE(v.abort);
  EXPECT_EQ(v.fired_layer, Layer::kL2c);
  EXPECT_TRUE(v.fingerprint_changed);
  EXPECT_EQ(*v.ssim, 1.0);
}

}  // namespace
}  // namespace dtoctou

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

#include <algorithm>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "dtoctou/agent.hpp"
#include "dtoctou/attacker.hpp"
#include "dtoctou/bench.hpp"

namespace dtoctou {
namespace {

// Clamped-lognormal mean and std by Simpson integration of the density on
// [lo, hi] plus the two point masses at the bounds.
std::pair<double, double> integrated_moments(double mu, double sigma, double lo,
                                             double hi) {
  auto cdf = [&](double x) {
    return 0.5 * std::erfc(-(std::log(x) - mu) / (sigma * std::numbers::sqrt2));
  };
  auto pdf = [&](double x) {
    const double z = (std::log(x) - mu) / sigma;
    return std::exp(-0.5 * z * z) / (x * sigma * std::sqrt(2 * std::numbers::pi));
  };
  const int n = 20000;
  const double h = (hi - lo) / n;
  double m1 = 0, m2 = 0;
  for (int i = 0; i <= n; ++i) {
    const double x = lo + i * h;
    const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
    m1 += w * x * pdf(x);
    m2 += w * x * x * pdf(x);
  }
  m1 *= h / 3;
  m2 *= h / 3;
  const double plo = cdf(lo), phi = 1 - cdf(hi);
  m1 += lo * plo + hi * phi;
  m2 += lo * lo * plo + hi * hi * phi;
  return {m1, std::sqrt(m2 - m1 * m1)};
}

TEST(Latency, FitReproducesClampedMoments) {
  const LognormalParams p = fit_clamped_lognormal(6.51, 3.59, 3.18, 13.23);
  const auto [mean, sd] = integrated_moments(p.mu, p.sigma, 3.18, 13.23);
  EXPECT_NEAR(mean, 6.51, 1e-4);
  EXPECT_NEAR(sd, 3.59, 1e-4);
  const auto [m2, s2] = clamped_lognormal_moments(p, 3.18, 13.23);
  EXPECT_NEAR(m2, mean, 1e-6);
  EXPECT_NEAR(s2, sd, 1e-6);
}

TEST(Latency, SamplesMatchModel) {
  const LatencySampler sampler{LatencyModel{}};
  Rng rng(2024);
  std::vector<Millis> gaps;
  for (int i = 0; i < 10000; ++i) gaps.push_back(sampler.sample_ms(rng));
  const GapStats g = gap_stats_ms(gaps);
  EXPECT_NEAR(g.mean, 6.51, 0.3);
  EXPECT_NEAR(g.std, 3.59, 0.5);
  EXPECT_GE(g.min, 3.18);
  EXPECT_LE(g.max, 13.23);
}

TEST(Latency, FixedIsExact) {
  LatencyModel m;
  m.kind = LatencyModel::Kind::kFixed;
  m.fixed_s = 35.2;
  Rng rng(1);
  EXPECT_EQ(LatencySampler(m).sample_ms(rng), 35200);
  m.fixed_s = 0.001;
  EXPECT_THROW(validate(m), Error);
  LatencyModel bad;
  bad.min_s = 7.0;
  EXPECT_THROW(validate(bad), Error);
}

TEST(GapStats, Examples) {
  const GapStats fixed = gap_stats_ms(std::vector<Millis>(10, 6500));
  EXPECT_DOUBLE_EQ(fixed.mean, 6.5);
  EXPECT_DOUBLE_EQ(fixed.std, 0.0);
  EXPECT_DOUBLE_EQ(fixed.min, 6.5);
  EXPECT_DOUBLE_EQ(fixed.max, 6.5);
  const GapStats one = gap_stats_ms({4321});
  EXPECT_DOUBLE_EQ(one.mean, one.min);
  EXPECT_DOUBLE_EQ(one.max, 4.321);
  EXPECT_DOUBLE_EQ(one.std, 0.0);
  EXPECT_THROW(gap_stats_ms({}), Error);
  const GapStats two = gap_stats_ms({1000, 3000});
  EXPECT_DOUBLE_EQ(two.std, 1.0);
}

TEST(Grounding, OracleClicksCentre) {
  const TaskSpec task = builtin_task("browser_placeorder");
  const Observation obs = observe(build_desktop(task, {}));
  Rng rng(3);
  const auto a = ground(obs, task, {}, rng);
  ASSERT_TRUE(a.has_value());
  EXPECT_EQ(a->c, (Point{140, 247}));
  EXPECT_TRUE(a->intended_bbox.contains(a->c));
}

TEST(Grounding, OffsetStaysInRange) {
  const TaskSpec task = builtin_task("browser_placeorder");
  const Observation obs = observe(build_desktop(task, {}));
  GroundingModel m;
  m.kind = GroundingModel::Kind::kOffset;
  m.dy_lo = 53;
  m.dy_hi = 68;
  Rng rng(4);
  std::set<int> seen;
  for (int i = 0; i < 500; ++i) {
    const auto a = ground(obs, task, m, rng);
    ASSERT_TRUE(a.has_value());
    EXPECT_EQ(a->c.x, 140);
    EXPECT_GE(a->c.y, 247 + 53);
    EXPECT_LE(a->c.y, 247 + 68);
    seen.insert(a->c.y);
  }
  EXPECT_EQ(seen.size(), 16u);
  m.dy_lo = 5;
  m.dy_hi = 1;
  EXPECT_THROW(validate(m), Error);
}

TEST(Grounding, OccludedOrMissingTargetMeansNoClick) {
  TaskSpec task = builtin_task("browser_placeorder");
  DesktopState s = build_desktop(task, {});
  WindowSpec cover;
  cover.id = 77;
  cover.rect = {0, 0, 400, 400};
  s.spawn_window(cover);
  Rng rng(5);
  EXPECT_FALSE(ground(observe(s), task, {}, rng).has_value());
  task.target.element_id = "does_not_exist";
  EXPECT_FALSE(ground(observe(build_desktop(task, {})), task, {}, rng).has_value());
}

// ---- Attacker ----

DesktopState checkout() { return build_desktop(builtin_task("browser_placeorder"), {}); }

TEST(Attacker, FiresOnlyAfterDelay) {
  AttackScenario sc;
  sc.primitive = Primitive::kA;
  sc.style = OverlayStyle::kFullscreen;
  sc.trigger_delay_s = 1.0;
  Attacker atk(sc);
  DesktopState s = checkout();
  atk.stage(s);
  const auto before = render(s);
  s.advance_to(10'000);
  EXPECT_EQ(atk.next_pending_time(10'000), 11'000);
  EXPECT_FALSE(atk.fire(s, 10'999, 10'000));
  EXPECT_EQ(render(s), before);
  s.advance_to(11'000);
  EXPECT_TRUE(atk.fire(s, 11'000, 10'000));
  EXPECT_EQ(atk.fire_time(), 11'000);
  EXPECT_TRUE(atk.artifact_present());
  EXPECT_EQ(*atk.active_zone(), s.screen_rect());
  EXPECT_FALSE(atk.next_pending_time(10'000).has_value());
}

TEST(Attacker, RejectsBadTimings) {
  AttackScenario sc;
  sc.primitive = Primitive::kA;
  sc.trigger_delay_s = 0;
  EXPECT_THROW(Attacker{sc}, Error);
  sc.trigger_delay_s = 1;
  sc.overlay_timer_s = 0.0;
  EXPECT_THROW(Attacker{sc}, Error);
}

TEST(Attacker, WindowRaiseStaysStealthyUntilFired) {
  AttackScenario sc;
  sc.primitive = Primitive::kB;
  sc.deceptive_label = "Confirm Transfer $9,999 -> ATK-ACC";
  Attacker atk(sc);
  DesktopState s = checkout();
  const auto clean_frame = render(s);
  const auto clean_list = registry_list(s);
  atk.stage(s);
  EXPECT_EQ(render(s), clean_frame);
  EXPECT_EQ(registry_list(s), clean_list);
  const RegistrySnapshot staged = registry_snapshot(s);
  EXPECT_TRUE(staged.known_ids.count(*atk.window_id()));

  s.advance_to(1000);
  ASSERT_TRUE(atk.fire(s, 1000, 0));
  EXPECT_EQ(*atk.active_zone(), (Rect{100, 215, 210, 80}));
  // Raised above every regular window, clicks land on it and trigger.
  const auto outcome = dispatch_click(s, {140, 247});
  EXPECT_EQ(outcome.receiver.window, *atk.window_id());
  ASSERT_EQ(outcome.events.size(), 1u);
  EXPECT_EQ(outcome.events[0].kind, BehavioralEvent::Kind::kTrigger);
  // The label has no keyword, so the window-registry layer stays quiet.
  EXPECT_TRUE(registry_diff(staged, registry_snapshot(s), default_keywords()).empty());
}

TEST(Attacker, DockOutranksRaisedWindow) {
  TaskSpec task = builtin_task("dock_launch");
  FixtureOptions opts;
  opts.dock = true;
  DesktopState s = build_desktop(task, opts);
  AttackScenario sc;
  sc.primitive = Primitive::kB;
  Attacker atk(sc);
  atk.stage(s);
  s.advance_to(1000);
  atk.fire(s, 1000, 0);
  const Rect icon = *target_screen_rect(s, task.target);
  const auto r = hit_test(s, icon.center());
  EXPECT_EQ(r.window, kDockWindow);
}

TEST(Attacker, DomOverlayIsInvisibleAndRedirects) {
  AttackScenario sc;
  sc.primitive = Primitive::kC;
  Attacker atk(sc);
  DesktopState s = checkout();
  const auto clean = render(s);
  atk.stage(s);
  const DomElement* o = s.page()->find(std::string(kOverlayElementId));
  ASSERT_NE(o, nullptr);
  EXPECT_EQ(o->display, Display::kHidden);
  s.advance_to(1000);
  ASSERT_TRUE(atk.fire(s, 1000, 0));
  EXPECT_EQ(render(s), clean);
  const auto out = dispatch_click(s, {140, 247});
  EXPECT_EQ(out.receiver.element_id, kOverlayElementId);
  ASSERT_EQ(out.events.size(), 1u);
  EXPECT_EQ(out.events[0].action, kAttackerEndpoint);
  EXPECT_EQ(out.events[0].method, "POST");
}

TEST(Attacker, TimerExpiryRestoresDesktop) {
  AttackScenario sc;
  sc.primitive = Primitive::kA;
  sc.style = OverlayStyle::kFullscreen;
  sc.overlay_timer_s = 30.0;
  Attacker atk(sc);
  DesktopState s = checkout();
  const auto clean = render(s);
  atk.stage(s);
  s.advance_to(1000);
  atk.fire(s, 1000, 0);
  EXPECT_NE(render(s), clean);
  EXPECT_EQ(atk.next_pending_time(0), 31'000);
  s.advance_to(31'000);
  atk.expire(s, 31'000);
  EXPECT_TRUE(atk.expired());
  EXPECT_FALSE(atk.artifact_present());
  EXPECT_EQ(render(s), clean);
}

TEST(Attacker, OverlayStylesAndTitles) {
  DesktopState base = checkout();
  for (OverlayStyle style : {OverlayStyle::kCornerBanner, OverlayStyle::kZenityDialog,
                             OverlayStyle::kFullscreen}) {
    DesktopState s = base;
    AttackScenario sc;
    sc.primitive = Primitive::kA;
    sc.style = style;
    Attacker atk(sc);
    atk.stage(s);
    s.advance_to(1000);
    atk.fire(s, 1000, 0);
    const WindowSpec& w = s.window(*atk.window_id());
    const auto listed = registry_diff(registry_snapshot(base), registry_snapshot(s),
                                      default_keywords());
    switch (style) {
      case OverlayStyle::kCornerBanner:
        EXPECT_TRUE(w.compositor_rendered);
        EXPECT_EQ(w.rect, (Rect{1540, 0, 380, 90}));
        EXPECT_TRUE(listed.empty());
        break;
      case OverlayStyle::kZenityDialog:
        EXPECT_EQ(w.rect, (Rect{750, 450, 420, 180}));
        EXPECT_EQ(listed.size(), 1u);
        break;
      case OverlayStyle::kFullscreen:
        EXPECT_EQ(w.rect, s.screen_rect());
        EXPECT_TRUE(listed.empty());
        break;
    }
    EXPECT_EQ(overlay_style_from_string(to_string(style)), style);
  }
  EXPECT_THROW(overlay_style_from_string("popup"), Error);
  EXPECT_EQ(primitive_from_string("B"), Primitive::kB);
}

}  // namespace
}  // namespace dtoctou

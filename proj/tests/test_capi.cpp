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

// Exercises the shared library through its C header only.

#include <cstring>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "dtoctou/dtoctou.h"

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  dt_string_free(s);
  return out;
}

constexpr const char* kScenario = R"({
  "name": "capi", "seed": 3, "trials": 2, "scale": "quarter",
  "tasks": ["browser_placeorder"],
  "attack": {"primitive": "B"},
  "defense": {"layers": "off"},
  "expect": {"spatial_asr": 1.0, "trigger_asr": 1.0}
})";

TEST(CApi, RunEmitCheck) {
  dt_scenario* s = nullptr;
  ASSERT_EQ(dt_scenario_parse(kScenario, &s), DT_OK);
  size_t cells = 0;
  ASSERT_EQ(dt_scenario_cell_count(s, &cells), DT_OK);
  EXPECT_EQ(cells, 1u);
  dt_report* r = nullptr;
  ASSERT_EQ(dt_run(s, 2, &r), DT_OK);
  size_t trials = 0;
  ASSERT_EQ(dt_report_trial_count(r, &trials), DT_OK);
  EXPECT_EQ(trials, 2u);

  char* text = nullptr;
  ASSERT_EQ(dt_report_emit(r, "raise", &text), DT_OK);
  const std::string t3 = take(text);
  EXPECT_EQ(t3.rfind("Task,n,Spatial-ASR,Trigger-ASR\n", 0), 0u);
  EXPECT_NE(t3.find("browser_placeorder,2,100.0%,100.0%"), std::string::npos);

  size_t failed = 99;
  ASSERT_EQ(dt_report_check(r, s, &failed, &text), DT_OK);
  EXPECT_EQ(failed, 0u);
  EXPECT_NE(take(text).find("ok"), std::string::npos);

  // jsonl re-renders to the same table.
  ASSERT_EQ(dt_report_emit(r, "jsonl", &text), DT_OK);
  const std::string jsonl = take(text);
  dt_report* again = nullptr;
  ASSERT_EQ(dt_report_from_jsonl(jsonl.c_str(), &again), DT_OK);
  ASSERT_EQ(dt_report_emit(again, "raise", &text), DT_OK);
  EXPECT_EQ(take(text), t3);

  // Appending a report with the same cell ids is rejected.
  EXPECT_EQ(dt_report_append(r, again), DT_ERR_DUPLICATE);
  EXPECT_STRNE(dt_last_error(), "");

  const auto dir = std::filesystem::temp_directory_path() / "dtoctou_capi_out";
  std::filesystem::remove_all(dir);
  ASSERT_EQ(dt_report_write(r, dir.c_str()), DT_OK);
  EXPECT_TRUE(std::filesystem::exists(dir / "report.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "report.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "trials.jsonl"));
  std::filesystem::remove_all(dir);

  dt_report_free(again);
  dt_report_free(r);
  dt_scenario_free(s);
}

TEST(CApi, OverridesShowInResolvedConfig) {
  dt_scenario* s = nullptr;
  ASSERT_EQ(dt_scenario_parse(kScenario, &s), DT_OK);
  ASSERT_EQ(dt_scenario_set_trials(s, 0), DT_OK);
  ASSERT_EQ(dt_scenario_set_defense(s, "l2a"), DT_OK);
  ASSERT_EQ(dt_scenario_set_grounding(s, "offset:5,20"), DT_OK);
  ASSERT_EQ(dt_scenario_set_gap(s, "fixed:6.5"), DT_OK);
  ASSERT_EQ(dt_scenario_set_scale(s, "full"), DT_OK);
  char* cfg = nullptr;
  ASSERT_EQ(dt_scenario_config_json(s, &cfg), DT_OK);
  const std::string j = take(cfg);
  EXPECT_NE(j.find("\"trials\": 0"), std::string::npos);
  EXPECT_NE(j.find("\"layers\": \"l2a\""), std::string::npos);
  EXPECT_NE(j.find("\"gap_s\": 6.5"), std::string::npos);
  EXPECT_EQ(dt_scenario_set_defense(s, "l9"), DT_ERR_SCHEMA);
  EXPECT_EQ(dt_scenario_set_gap(s, "fixed:0"), DT_ERR_SCHEMA);
  EXPECT_EQ(dt_scenario_set_trials(s, -1), DT_ERR_SCHEMA);

  dt_report* r = nullptr;
  ASSERT_EQ(dt_run(s, 1, &r), DT_OK);
  size_t trials = 7;
  ASSERT_EQ(dt_report_trial_count(r, &trials), DT_OK);
  EXPECT_EQ(trials, 0u);
  dt_report_free(r);
  dt_scenario_free(s);
}

TEST(CApi, ErrorsAreReported) {
  dt_scenario* s = nullptr;
  EXPECT_EQ(dt_scenario_parse(R"({"name": "x", "bogus": 1})", &s), DT_ERR_SCHEMA);
  EXPECT_EQ(s, nullptr);
  EXPECT_NE(std::string(dt_last_error()).find("bogus"), std::string::npos);
  EXPECT_EQ(dt_scenario_load("/nonexistent/x.json", &s), DT_ERR_IO);
  EXPECT_EQ(dt_scenario_parse(nullptr, &s), DT_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(dt_run(nullptr, 1, nullptr), DT_ERR_INVALID_ARGUMENT);
  EXPECT_STREQ(dt_status_name(DT_ERR_IO), "io");
  dt_scenario_free(nullptr);
  dt_report_free(nullptr);
  dt_desktop_free(nullptr);
  dt_frame_free(nullptr);
  dt_string_free(nullptr);
}

TEST(CApi, SelftestAndCalibrate) {
  size_t failed = 9;
  char* json = nullptr;
  ASSERT_EQ(dt_selftest(-1.0, nullptr, &failed, &json), DT_OK);
  EXPECT_EQ(failed, 0u);
  EXPECT_NE(take(json).find("A/corner_banner"), std::string::npos);
  ASSERT_EQ(dt_selftest(0.30, nullptr, &failed, nullptr), DT_OK);
  EXPECT_EQ(failed, 1u);
  EXPECT_EQ(dt_selftest(-1.0, "nope", &failed, nullptr), DT_ERR_SCHEMA);

  dt_scenario* s = nullptr;
  ASSERT_EQ(dt_scenario_parse(R"({"name": "cal", "scale": "quarter"})", &s), DT_OK);
  ASSERT_EQ(dt_calibrate(s, 5, &json), DT_OK);
  EXPECT_NE(take(json).find("\"min_ssim\": 1.0"), std::string::npos);
  dt_scenario_free(s);
  ASSERT_EQ(dt_scenario_parse(kScenario, &s), DT_OK);
  EXPECT_EQ(dt_calibrate(s, 5, &json), DT_ERR_INVALID_ARGUMENT);
  dt_scenario_free(s);
}

TEST(CApi, DesktopAndFrames) {
  dt_desktop* d = nullptr;
  ASSERT_EQ(dt_desktop_build("browser_placeorder", 1, 0, 0, &d), DT_OK);
  int w = 0, h = 0;
  ASSERT_EQ(dt_desktop_size(d, &w, &h), DT_OK);
  EXPECT_EQ(w, 1920);
  EXPECT_EQ(h, 1080);
  char* reg = nullptr;
  ASSERT_EQ(dt_desktop_registry(d, &reg), DT_OK);
  EXPECT_NE(take(reg).find("Chromium"), std::string::npos);

  dt_frame* a = nullptr;
  dt_frame* b = nullptr;
  ASSERT_EQ(dt_desktop_render(d, &a), DT_OK);
  ASSERT_EQ(dt_desktop_advance(d, 5000), DT_OK);
  ASSERT_EQ(dt_desktop_render(d, &b), DT_OK);
  uint64_t da = 0, db = 1;
  dt_frame_digest(a, &da);
  dt_frame_digest(b, &db);
  EXPECT_EQ(da, db);
  const uint8_t* px = nullptr;
  size_t n = 0;
  ASSERT_EQ(dt_frame_pixels(a, &px, &n), DT_OK);
  EXPECT_EQ(n, 1920u * 1080u * 3u);
  double ssim = 0;
  ASSERT_EQ(dt_frame_ssim_patch(a, b, 140, 247, 160, &ssim), DT_OK);
  EXPECT_EQ(ssim, 1.0);

  char* rec = nullptr;
  ASSERT_EQ(dt_desktop_click(d, 140, 247, &rec), DT_OK);
  const std::string click = take(rec);
  EXPECT_NE(click.find("\"element\":\"place_order\""), std::string::npos);
  EXPECT_NE(click.find("/submit"), std::string::npos);
  EXPECT_EQ(dt_desktop_click(d, 5000, 5, nullptr), DT_ERR_OUT_OF_BOUNDS);
  EXPECT_EQ(dt_desktop_advance(d, 10), DT_ERR_STATE);

  const auto png = std::filesystem::temp_directory_path() / "dtoctou_capi.png";
  ASSERT_EQ(dt_frame_write_png(a, png.c_str()), DT_OK);
  EXPECT_GT(std::filesystem::file_size(png), 100u);
  std::filesystem::remove(png);

  dt_desktop* none = nullptr;
  EXPECT_EQ(dt_desktop_build("no_such_task", 1, 0, 0, &none), DT_ERR_NOT_FOUND);
  dt_frame_free(a);
  dt_frame_free(b);
  dt_desktop_free(d);
}

}  // namespace

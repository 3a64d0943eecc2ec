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

#include "dtoctou/dtoctou.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>
#include <set>
#include <string>

#include "dtoctou/bench.hpp"
#include "dtoctou/desktop.hpp"
#include "dtoctou/fixtures.hpp"
#include "dtoctou/frame.hpp"
#include "dtoctou/pusv.hpp"
#include "dtoctou/scenario.hpp"
#include "dtoctou/trial.hpp"

struct dt_scenario {
  dtoctou::Scenario scenario;
};

struct dt_report {
  dtoctou::CampaignReport report;
};

struct dt_desktop {
  dtoctou::DesktopState state;
};

struct dt_frame {
  dtoctou::PixelFrame frame;
};

namespace {

using nlohmann::json;

thread_local std::string g_last_error;

dt_status fail(dt_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

dt_status to_status(dtoctou::ErrorCode c) {
  switch (c) {
    case dtoctou::ErrorCode::kInvalidArgument:
      return DT_ERR_INVALID_ARGUMENT;
    case dtoctou::ErrorCode::kNotFound:
      return DT_ERR_NOT_FOUND;
    case dtoctou::ErrorCode::kDuplicate:
      return DT_ERR_DUPLICATE;
    case dtoctou::ErrorCode::kOutOfBounds:
      return DT_ERR_OUT_OF_BOUNDS;
    case dtoctou::ErrorCode::kState:
      return DT_ERR_STATE;
    case dtoctou::ErrorCode::kSchema:
      return DT_ERR_SCHEMA;
    case dtoctou::ErrorCode::kIo:
      return DT_ERR_IO;
    case dtoctou::ErrorCode::kUnsupported:
      return DT_ERR_UNSUPPORTED;
  }
  return DT_ERR_INTERNAL;
}

// Runs `f`, translating exceptions into status codes. Nothing escapes the
// C boundary.
template <typename F>
dt_status guard(F&& f) {
  try {
    f();
    g_last_error.clear();
    return DT_OK;
  } catch (const dtoctou::Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const json::exception& e) {
    return fail(DT_ERR_SCHEMA, e.what());
  } catch (const std::bad_alloc&) {
    return fail(DT_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(DT_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(DT_ERR_INTERNAL, "unknown error");
  }
}

#define DT_REQUIRE(cond)                                              \
  do {                                                                \
    if (!(cond)) return fail(DT_ERR_INVALID_ARGUMENT, #cond " failed"); \
  } while (0)

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw dtoctou::Error(dtoctou::ErrorCode::kIo, "cannot write " + p.string());
  out << content;
  out.flush();
  if (!out) throw dtoctou::Error(dtoctou::ErrorCode::kIo, "write failed: " + p.string());
}

std::string receiver_kind(dtoctou::ClickReceiver::Kind k) {
  switch (k) {
    case dtoctou::ClickReceiver::Kind::kBackground:
      return "background";
    case dtoctou::ClickReceiver::Kind::kWindow:
      return "window";
    case dtoctou::ClickReceiver::Kind::kDomElement:
      return "dom_element";
  }
  return "unknown";
}

}  // namespace

extern "C" {

const char* dt_version(void) { return "1.0.0"; }

const char* dt_last_error(void) { return g_last_error.c_str(); }

const char* dt_status_name(dt_status status) {
  switch (status) {
    case DT_OK:
      return "ok";
    case DT_ERR_INVALID_ARGUMENT:
      return "invalid_argument";
    case DT_ERR_NOT_FOUND:
      return "not_found";
    case DT_ERR_DUPLICATE:
      return "duplicate";
    case DT_ERR_OUT_OF_BOUNDS:
      return "out_of_bounds";
    case DT_ERR_STATE:
      return "state";
    case DT_ERR_SCHEMA:
      return "schema";
    case DT_ERR_IO:
      return "io";
    case DT_ERR_UNSUPPORTED:
      return "unsupported";
    case DT_ERR_INTERNAL:
      return "internal";
  }
  return "unknown";
}

void dt_string_free(char* s) { std::free(s); }

dt_status dt_scenario_load(const char* path, dt_scenario** out) {
  DT_REQUIRE(path && out);
  *out = nullptr;
  return guard([&] { *out = new dt_scenario{dtoctou::load_scenario(path)}; });
}

dt_status dt_scenario_parse(const char* json_text, dt_scenario** out) {
  DT_REQUIRE(json_text && out);
  *out = nullptr;
  return guard(
      [&] { *out = new dt_scenario{dtoctou::parse_scenario_text(json_text)}; });
}

void dt_scenario_free(dt_scenario* s) { delete s; }

dt_status dt_scenario_set_trials(dt_scenario* s, int64_t trials) {
  DT_REQUIRE(s);
  return guard([&] {
    dtoctou::ScenarioOverrides o;
    o.trials = trials;
    dtoctou::apply_overrides(s->scenario, o);
  });
}

dt_status dt_scenario_set_seed(dt_scenario* s, uint64_t seed) {
  DT_REQUIRE(s);
  s->scenario.seed = seed;
  return DT_OK;
}

dt_status dt_scenario_set_defense(dt_scenario* s, const char* spec) {
  DT_REQUIRE(s && spec);
  return guard([&] { s->scenario.pusv.layers = dtoctou::parse_defense(spec); });
}

dt_status dt_scenario_set_grounding(dt_scenario* s, const char* spec) {
  DT_REQUIRE(s && spec);
  return guard([&] { s->scenario.grounding = dtoctou::parse_grounding(spec); });
}

dt_status dt_scenario_set_gap(dt_scenario* s, const char* spec) {
  DT_REQUIRE(s && spec);
  return guard([&] { s->scenario.latency = dtoctou::parse_gap(spec); });
}

dt_status dt_scenario_set_scale(dt_scenario* s, const char* spec) {
  DT_REQUIRE(s && spec);
  return guard([&] { s->scenario.scale_divisor = dtoctou::parse_scale(spec); });
}

dt_status dt_scenario_name(const dt_scenario* s, char** out) {
  DT_REQUIRE(s && out);
  return guard([&] { *out = dup_string(s->scenario.name); });
}

dt_status dt_scenario_config_json(const dt_scenario* s, char** out) {
  DT_REQUIRE(s && out);
  return guard(
      [&] { *out = dup_string(dtoctou::scenario_to_json(s->scenario).dump(2)); });
}

dt_status dt_scenario_cell_count(const dt_scenario* s, size_t* out) {
  DT_REQUIRE(s && out);
  return guard([&] { *out = dtoctou::build_cells(s->scenario).size(); });
}

dt_status dt_scenario_expectation_count(const dt_scenario* s, size_t* out) {
  DT_REQUIRE(s && out);
  *out = s->scenario.expectations.size();
  return DT_OK;
}

dt_status dt_run(const dt_scenario* s, int jobs, dt_report** out) {
  DT_REQUIRE(s && out && jobs >= 1);
  *out = nullptr;
  return guard([&] {
    auto report = dtoctou::run_campaign(dtoctou::build_cells(s->scenario),
                                        s->scenario.seed, jobs);
    report.config = dtoctou::scenario_to_json(s->scenario);
    *out = new dt_report{std::move(report)};
  });
}

dt_status dt_report_append(dt_report* dst, const dt_report* src) {
  DT_REQUIRE(dst && src && dst != src);
  return guard([&] {
    std::set<std::string> ids;
    for (const auto& c : dst->report.cells) ids.insert(c.id);
    for (const auto& c : src->report.cells) {
      if (!ids.insert(c.id).second) {
        throw dtoctou::Error(dtoctou::ErrorCode::kDuplicate,
                             "cell id '" + c.id + "' appears twice");
      }
    }
    json& cfg = dst->report.config;
    if (!cfg.is_object() || !cfg.contains("scenarios")) {
      json wrapped = {{"scenarios", json::array()}};
      if (!cfg.is_null() && !(cfg.is_object() && cfg.empty())) {
        wrapped["scenarios"].push_back(cfg);
      }
      cfg = std::move(wrapped);
    }
    const json& other = src->report.config;
    if (other.is_object() && other.contains("scenarios")) {
      for (const auto& c : other.at("scenarios")) cfg["scenarios"].push_back(c);
    } else if (!other.is_null() && !(other.is_object() && other.empty())) {
      cfg["scenarios"].push_back(other);
    }
    for (const auto& c : src->report.cells) dst->report.cells.push_back(c);
  });
}

void dt_report_free(dt_report* r) { delete r; }

dt_status dt_report_cell_count(const dt_report* r, size_t* out) {
  DT_REQUIRE(r && out);
  *out = r->report.cells.size();
  return DT_OK;
}

dt_status dt_report_trial_count(const dt_report* r, size_t* out) {
  DT_REQUIRE(r && out);
  size_t n = 0;
  for (const auto& c : r->report.cells) n += c.trials.size();
  *out = n;
  return DT_OK;
}

dt_status dt_report_emit(const dt_report* r, const char* format, char** out) {
  DT_REQUIRE(r && format && out);
  return guard([&] { *out = dup_string(dtoctou::emit_report(r->report, format)); });
}

dt_status dt_report_write(const dt_report* r, const char* dir) {
  DT_REQUIRE(r && dir);
  return guard([&] {
    const std::filesystem::path d(dir);
    std::error_code ec;
    std::filesystem::create_directories(d, ec);
    if (ec) {
      throw dtoctou::Error(dtoctou::ErrorCode::kIo,
                           "cannot create " + d.string() + ": " + ec.message());
    }
    write_file(d / "report.csv", dtoctou::emit_report(r->report, "csv"));
    write_file(d / "report.json", dtoctou::emit_report(r->report, "json"));
    write_file(d / "trials.jsonl", dtoctou::emit_report(r->report, "jsonl"));
  });
}

dt_status dt_report_from_jsonl(const char* text, dt_report** out) {
  DT_REQUIRE(text && out);
  *out = nullptr;
  return guard([&] {
    *out = new dt_report{dtoctou::report_from_trials(dtoctou::parse_jsonl(text))};
  });
}

dt_status dt_report_check(const dt_report* r, const dt_scenario* s,
                          size_t* failed, char** text) {
  DT_REQUIRE(r && s && failed);
  return guard([&] {
    const auto results = dtoctou::check_expectations(r->report.overall(),
                                                     s->scenario.expectations);
    size_t bad = 0;
    std::string lines;
    for (const auto& c : results) {
      if (!c.passed) ++bad;
      char buf[256];
      const std::string actual = c.actual ? std::to_string(*c.actual) : "n/a";
      std::snprintf(buf, sizeof buf, "%s %s %s %s %g (tol %g): actual %s\n",
                    c.passed ? "ok  " : "FAIL", s->scenario.name.c_str(),
                    c.expectation.metric.c_str(), c.expectation.op.c_str(),
                    c.expectation.value, c.expectation.tolerance, actual.c_str());
      lines += buf;
    }
    *failed = bad;
    if (text) *text = dup_string(lines);
  });
}

dt_status dt_selftest(double tau1, const char* defense, size_t* failed,
                      char** json_out) {
  DT_REQUIRE(failed);
  return guard([&] {
    dtoctou::PusvConfig cfg;
    if (tau1 >= 0) cfg.tau1 = tau1;
    if (defense) cfg.layers = dtoctou::parse_defense(defense);
    dtoctou::validate(cfg);
    const auto cases = dtoctou::run_selftest(cfg);
    size_t bad = 0;
    json arr = json::array();
    for (const auto& c : cases) {
      if (!c.passed) ++bad;
      arr.push_back({{"name", c.name},
                     {"expectation", c.expectation},
                     {"passed", c.passed},
                     {"fired_layer", std::string(dtoctou::to_string(c.fired_layer))},
                     {"ssim", c.ssim ? json(*c.ssim) : json(nullptr)},
                     {"glob_diff_ratio",
                      c.glob_diff_ratio ? json(*c.glob_diff_ratio) : json(nullptr)}});
    }
    *failed = bad;
    if (json_out) *json_out = dup_string(arr.dump(2));
  });
}

dt_status dt_calibrate(const dt_scenario* s, int64_t n, char** json_out) {
  DT_REQUIRE(s && json_out);
  return guard([&] {
    const auto cells = dtoctou::build_cells(s->scenario);
    const auto cal = dtoctou::calibrate(cells.front().config, n, s->scenario.seed);
    json j = dtoctou::calibration_to_json(cal);
    j["configured_tau1"] = cells.front().config.pusv.tau1;
    j["configured_tau2a"] = cells.front().config.pusv.tau2a;
    *json_out = dup_string(j.dump(2));
  });
}

dt_status dt_desktop_build(const char* task_id, int scale_divisor,
                           int benign_dynamics, int dock, dt_desktop** out) {
  DT_REQUIRE(task_id && out && scale_divisor >= 1);
  *out = nullptr;
  return guard([&] {
    dtoctou::FixtureOptions opts;
    opts.scale_divisor = scale_divisor;
    opts.benign_dynamics = benign_dynamics != 0;
    opts.dock = dock != 0;
    dtoctou::TaskSpec task = dtoctou::builtin_task(task_id);
    if (task.target.kind == dtoctou::Target::Kind::kWindow) {
      task.target.rect = dtoctou::scale_rect(task.target.rect, scale_divisor);
    }
    *out = new dt_desktop{dtoctou::build_desktop(task, opts)};
  });
}

void dt_desktop_free(dt_desktop* d) { delete d; }

dt_status dt_desktop_size(const dt_desktop* d, int* width, int* height) {
  DT_REQUIRE(d && width && height);
  *width = d->state.screen().width;
  *height = d->state.screen().height;
  return DT_OK;
}

dt_status dt_desktop_advance(dt_desktop* d, int64_t t_ms) {
  DT_REQUIRE(d);
  return guard([&] { d->state.advance_to(t_ms); });
}

dt_status dt_desktop_registry(const dt_desktop* d, char** out) {
  DT_REQUIRE(d && out);
  return guard([&] {
    *out = dup_string(dtoctou::registry_text(dtoctou::registry_list(d->state)));
  });
}

dt_status dt_desktop_click(dt_desktop* d, int x, int y, char** receiver_json) {
  DT_REQUIRE(d);
  return guard([&] {
    const auto outcome = dtoctou::dispatch_click(d->state, {x, y});
    if (!receiver_json) return;
    json events = json::array();
    for (const auto& e : outcome.events) {
      if (e.kind == dtoctou::BehavioralEvent::Kind::kTrigger) {
        events.push_back({{"kind", "trigger"}, {"window", e.window}});
      } else {
        events.push_back({{"kind", "http"}, {"method", e.method}, {"action", e.action}});
      }
    }
    const json j = {{"kind", receiver_kind(outcome.receiver.kind)},
                    {"window", outcome.receiver.window},
                    {"element", outcome.receiver.element_id},
                    {"events", events}};
    *receiver_json = dup_string(j.dump());
  });
}

dt_status dt_desktop_render(const dt_desktop* d, dt_frame** out) {
  DT_REQUIRE(d && out);
  *out = nullptr;
  return guard([&] { *out = new dt_frame{dtoctou::render(d->state)}; });
}

void dt_frame_free(dt_frame* f) { delete f; }

dt_status dt_frame_size(const dt_frame* f, int* width, int* height) {
  DT_REQUIRE(f && width && height);
  *width = f->frame.width();
  *height = f->frame.height();
  return DT_OK;
}

dt_status dt_frame_digest(const dt_frame* f, uint64_t* out) {
  DT_REQUIRE(f && out);
  *out = f->frame.digest();
  return DT_OK;
}

dt_status dt_frame_pixels(const dt_frame* f, const uint8_t** data, size_t* size) {
  DT_REQUIRE(f && data && size);
  *data = f->frame.data().data();
  *size = f->frame.data().size();
  return DT_OK;
}

dt_status dt_frame_write_png(const dt_frame* f, const char* path) {
  DT_REQUIRE(f && path);
  return guard([&] { dtoctou::write_png(f->frame, path); });
}

dt_status dt_frame_write_raw(const dt_frame* f, const char* path) {
  DT_REQUIRE(f && path);
  return guard([&] { dtoctou::write_raw(f->frame, path); });
}

dt_status dt_frame_ssim_patch(const dt_frame* a, const dt_frame* b, int x, int y,
                              int patch, double* out) {
  DT_REQUIRE(a && b && out);
  return guard([&] { *out = dtoctou::ssim_patch(a->frame, b->frame, {x, y}, patch); });
}

}  // extern "C"

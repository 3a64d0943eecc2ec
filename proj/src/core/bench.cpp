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

#include "dtoctou/bench.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "dtoctou/rng.hpp"

namespace dtoctou {

using nlohmann::json;

namespace {

std::size_t idx(Layer l) { return static_cast<std::size_t>(l) - 1; }

std::optional<double> ratio(std::int64_t num, std::int64_t den) {
  if (den <= 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

json opt(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

std::optional<double> get_opt(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

json rect_json(const Rect& r) { return json::array({r.x, r.y, r.w, r.h}); }
Rect rect_from(const json& j) {
  return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>(),
          j.at(3).get<int>()};
}

std::uint64_t parse_hex(const std::string& s) {
  return std::stoull(s, nullptr, 16);
}

std::string_view receiver_kind(ClickReceiver::Kind k) {
  switch (k) {
    case ClickReceiver::Kind::kBackground:
      return "background";
    case ClickReceiver::Kind::kWindow:
      return "window";
    case ClickReceiver::Kind::kDomElement:
      return "dom_element";
  }
  return "background";
}

ClickReceiver::Kind receiver_kind_from(const std::string& s) {
  if (s == "window") return ClickReceiver::Kind::kWindow;
  if (s == "dom_element") return ClickReceiver::Kind::kDomElement;
  if (s == "background") return ClickReceiver::Kind::kBackground;
  throw Error(ErrorCode::kSchema, "unknown receiver kind '" + s + "'");
}

json verdict_to_json(const PusvVerdict& v) {
  json windows = json::array();
  for (const auto& e : v.new_keyword_windows) {
    windows.push_back(json::array({e.id, e.title}));
  }
  json failed = json::array();
  for (const auto& f : v.failed) failed.push_back(f ? json(*f) : json(nullptr));
  return {{"abort", v.abort},
          {"fired_layer", std::string(to_string(v.fired_layer))},
          {"ssim", opt(v.ssim)},
          {"glob_diff_ratio", opt(v.glob_diff_ratio)},
          {"new_keyword_windows", windows},
          {"fingerprint_changed", v.fingerprint_changed},
          {"overhead_ms", v.overhead_ms},
          {"failed", failed}};
}

PusvVerdict verdict_from_json(const json& j) {
  PusvVerdict v;
  v.abort = j.at("abort").get<bool>();
  v.fired_layer = layer_from_string(j.at("fired_layer").get<std::string>());
  v.ssim = get_opt(j, "ssim");
  v.glob_diff_ratio = get_opt(j, "glob_diff_ratio");
  for (const auto& e : j.at("new_keyword_windows")) {
    v.new_keyword_windows.push_back(
        {e.at(0).get<WindowId>(), e.at(1).get<std::string>()});
  }
  v.fingerprint_changed = j.at("fingerprint_changed").get<bool>();
  v.overhead_ms = j.at("overhead_ms").get<Millis>();
  const auto& failed = j.at("failed");
  for (std::size_t i = 0; i < v.failed.size(); ++i) {
    if (!failed.at(i).is_null()) v.failed[i] = failed.at(i).get<bool>();
  }
  return v;
}

json stats_to_json(const CellStats& s) {
  return {{"n", s.n},
          {"attack_trials", s.attack_trials},
          {"clicked", s.clicked},
          {"verified", s.verified},
          {"dispatched", s.dispatched},
          {"aborted", s.aborted},
          {"spatial_hits", s.spatial_hits},
          {"trigger_hits", s.trigger_hits},
          {"behavioral_defined", s.behavioral_defined},
          {"behavioral_hits", s.behavioral_hits},
          {"effective_hits", s.effective_hits},
          {"vav", s.vav},
          {"intended_received", s.intended_received},
          {"b_trials", s.b_trials},
          {"fired_by", s.fired_by},
          {"layer_failed", s.layer_failed},
          {"gap_sum_ms", s.gap_sum_ms},
          {"gap_sq_sum_ms", s.gap_sq_sum_ms},
          {"gap_min_ms", s.gap_min_ms},
          {"gap_max_ms", s.gap_max_ms},
          {"overhead_sum_ms", s.overhead_sum_ms},
          {"ssim_count", s.ssim_count},
          {"ssim_sum", s.ssim_sum},
          {"ssim_min", opt(s.ssim_min)},
          {"glob_max", opt(s.glob_max)},
          {"glob_sum", s.glob_sum},
          {"glob_count", s.glob_count}};
}

CellStats stats_from_json(const json& j) {
  CellStats s;
  s.n = j.at("n").get<std::int64_t>();
  s.attack_trials = j.at("attack_trials").get<std::int64_t>();
  s.clicked = j.at("clicked").get<std::int64_t>();
  s.verified = j.at("verified").get<std::int64_t>();
  s.dispatched = j.at("dispatched").get<std::int64_t>();
  s.aborted = j.at("aborted").get<std::int64_t>();
  s.spatial_hits = j.at("spatial_hits").get<std::int64_t>();
  s.trigger_hits = j.at("trigger_hits").get<std::int64_t>();
  s.behavioral_defined = j.at("behavioral_defined").get<std::int64_t>();
  s.behavioral_hits = j.at("behavioral_hits").get<std::int64_t>();
  s.effective_hits = j.at("effective_hits").get<std::int64_t>();
  s.vav = j.at("vav").get<std::int64_t>();
  s.intended_received = j.at("intended_received").get<std::int64_t>();
  s.b_trials = j.at("b_trials").get<std::int64_t>();
  s.fired_by = j.at("fired_by").get<std::array<std::int64_t, 4>>();
  s.layer_failed = j.at("layer_failed").get<std::array<std::int64_t, 4>>();
  s.gap_sum_ms = j.at("gap_sum_ms").get<std::int64_t>();
  s.gap_sq_sum_ms = j.at("gap_sq_sum_ms").get<std::int64_t>();
  s.gap_min_ms = j.at("gap_min_ms").get<std::int64_t>();
  s.gap_max_ms = j.at("gap_max_ms").get<std::int64_t>();
  s.overhead_sum_ms = j.at("overhead_sum_ms").get<std::int64_t>();
  s.ssim_count = j.at("ssim_count").get<std::int64_t>();
  s.ssim_sum = j.at("ssim_sum").get<double>();
  s.ssim_min = get_opt(j, "ssim_min");
  s.glob_max = get_opt(j, "glob_max");
  s.glob_sum = j.at("glob_sum").get<double>();
  s.glob_count = j.at("glob_count").get<std::int64_t>();
  return s;
}

json metrics_to_json(const CellMetrics& m) {
  json layer = json::object();
  for (Layer l : kLayers) {
    layer[std::string(to_string(l))] = opt(m.layer_air[idx(l)]);
  }
  return {{"spatial_asr", opt(m.spatial_asr)},
          {"trigger_asr", opt(m.trigger_asr)},
          {"behavioral_asr", opt(m.behavioral_asr)},
          {"air", opt(m.air)},
          {"fpr", opt(m.fpr)},
          {"effective_asr", opt(m.effective_asr)},
          {"layer_air", layer},
          {"gap_mean_s", opt(m.gap_mean_s)},
          {"gap_std_s", opt(m.gap_std_s)},
          {"gap_min_s", opt(m.gap_min_s)},
          {"gap_max_s", opt(m.gap_max_s)},
          {"overhead_mean_ms", opt(m.overhead_mean_ms)},
          {"ssim_mean", opt(m.ssim_mean)},
          {"glob_mean", opt(m.glob_mean)}};
}

std::string pct(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", *v * 100.0);
  return buf;
}

std::string num(const std::optional<double>& v, int digits = 4) {
  if (!v) return "";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, *v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string style_key(const CellReport& c) {
  if (c.primitive == Primitive::kA) return std::string(to_string(c.style));
  return std::string(to_string(c.primitive));
}

using Row = std::function<std::vector<std::string>(const std::string& label,
                                                   const CellStats& s)>;

// Groups cells by `key` in order of first appearance, one row per group and
// a closing Overall row.
std::string grouped_table(const CampaignReport& r,
                          const std::vector<std::string>& header,
                          const std::function<std::string(const CellReport&)>& key,
                          const Row& row) {
  std::vector<std::string> order;
  std::map<std::string, CellStats> groups;
  CellStats overall;
  for (const auto& c : r.cells) {
    const std::string k = key(c);
    if (!groups.count(k)) order.push_back(k);
    groups[k].merge(c.stats);
    overall.merge(c.stats);
  }
  std::ostringstream out;
  auto line = [&out](const std::vector<std::string>& f) {
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (i) out << ',';
      out << csv_field(f[i]);
    }
    out << '\n';
  };
  line(header);
  for (const auto& k : order) line(row(k, groups[k]));
  line(row("Overall", overall));
  return out.str();
}

std::string signal(const CellMetrics& m) {
  std::string out;
  if (m.ssim_mean) out += "SSIM " + num(m.ssim_mean, 3);
  if (m.glob_mean) {
    if (!out.empty()) out += " / ";
    out += "glob " + pct(m.glob_mean);
  }
  return out.empty() ? "-" : out;
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t base_seed, std::string_view cell,
                         std::int64_t index) {
  return combine_seed(combine_seed(base_seed, fnv1a64(cell)),
                      static_cast<std::uint64_t>(index));
}

void CellStats::add(const TrialResult& r) {
  const Millis gap = r.t_act - r.t_obs;
  if (n == 0) {
    gap_min_ms = gap;
    gap_max_ms = gap;
  } else {
    gap_min_ms = std::min(gap_min_ms, gap);
    gap_max_ms = std::max(gap_max_ms, gap);
  }
  ++n;
  gap_sum_ms += gap;
  gap_sq_sum_ms += gap * gap;
  if (r.primitive != Primitive::kNone) ++attack_trials;
  if (r.primitive == Primitive::kB) ++b_trials;
  clicked += r.clicked;
  verified += r.verified;
  dispatched += r.dispatched;
  aborted += r.aborted;
  spatial_hits += r.spatial_hit;
  trigger_hits += r.trigger_hit;
  if (r.behavioral_hit) {
    ++behavioral_defined;
    behavioral_hits += *r.behavioral_hit;
  }
  effective_hits += r.primitive == Primitive::kC
                        ? r.behavioral_hit.value_or(false)
                        : (r.primitive != Primitive::kNone && r.spatial_hit);
  vav += r.vav;
  intended_received += r.intended_received;
  if (r.fired_layer != Layer::kNone) ++fired_by[idx(r.fired_layer)];
  if (r.verdict) {
    for (std::size_t i = 0; i < 4; ++i) {
      layer_failed[i] += r.verdict->failed[i].value_or(false);
    }
    overhead_sum_ms += r.verdict->overhead_ms;
    if (r.verdict->ssim) {
      ++ssim_count;
      ssim_sum += *r.verdict->ssim;
      ssim_min = ssim_min ? std::min(*ssim_min, *r.verdict->ssim)
                          : *r.verdict->ssim;
    }
    if (r.verdict->glob_diff_ratio) {
      ++glob_count;
      glob_sum += *r.verdict->glob_diff_ratio;
      glob_max = glob_max ? std::max(*glob_max, *r.verdict->glob_diff_ratio)
                          : *r.verdict->glob_diff_ratio;
    }
  }
}

void CellStats::merge(const CellStats& o) {
  if (o.n == 0) return;
  if (n == 0) {
    gap_min_ms = o.gap_min_ms;
    gap_max_ms = o.gap_max_ms;
  } else {
    gap_min_ms = std::min(gap_min_ms, o.gap_min_ms);
    gap_max_ms = std::max(gap_max_ms, o.gap_max_ms);
  }
  n += o.n;
  attack_trials += o.attack_trials;
  b_trials += o.b_trials;
  clicked += o.clicked;
  verified += o.verified;
  dispatched += o.dispatched;
  aborted += o.aborted;
  spatial_hits += o.spatial_hits;
  trigger_hits += o.trigger_hits;
  behavioral_defined += o.behavioral_defined;
  behavioral_hits += o.behavioral_hits;
  effective_hits += o.effective_hits;
  vav += o.vav;
  intended_received += o.intended_received;
  for (std::size_t i = 0; i < 4; ++i) {
    fired_by[i] += o.fired_by[i];
    layer_failed[i] += o.layer_failed[i];
  }
  gap_sum_ms += o.gap_sum_ms;
  gap_sq_sum_ms += o.gap_sq_sum_ms;
  overhead_sum_ms += o.overhead_sum_ms;
  ssim_count += o.ssim_count;
  ssim_sum += o.ssim_sum;
  if (o.ssim_min) ssim_min = ssim_min ? std::min(*ssim_min, *o.ssim_min) : *o.ssim_min;
  if (o.glob_max) glob_max = glob_max ? std::max(*glob_max, *o.glob_max) : *o.glob_max;
  glob_count += o.glob_count;
  glob_sum += o.glob_sum;
}

CellMetrics metrics(const CellStats& s) {
  CellMetrics m;
  m.spatial_asr = ratio(s.spatial_hits, s.n);
  if (s.b_trials > 0) m.trigger_asr = ratio(s.trigger_hits, s.n);
  m.behavioral_asr = ratio(s.behavioral_hits, s.behavioral_defined);
  if (s.attack_trials > 0) {
    m.air = ratio(s.aborted, s.n);
    m.effective_asr = ratio(s.effective_hits, s.n);
    for (std::size_t i = 0; i < 4; ++i) m.layer_air[i] = ratio(s.fired_by[i], s.n);
  } else if (s.n > 0) {
    m.fpr = ratio(s.aborted, s.n);
  }
  if (s.n > 0) {
    const GapStats g = [&s] {
      const double n = static_cast<double>(s.n);
      const __int128 var_num =
          static_cast<__int128>(s.n) * s.gap_sq_sum_ms -
          static_cast<__int128>(s.gap_sum_ms) * s.gap_sum_ms;
      GapStats out;
      out.mean = static_cast<double>(s.gap_sum_ms) / n / 1000.0;
      out.std = std::sqrt(static_cast<double>(var_num)) / n / 1000.0;
      out.min = static_cast<double>(s.gap_min_ms) / 1000.0;
      out.max = static_cast<double>(s.gap_max_ms) / 1000.0;
      return out;
    }();
    m.gap_mean_s = g.mean;
    m.gap_std_s = g.std;
    m.gap_min_s = g.min;
    m.gap_max_s = g.max;
  }
  if (s.verified > 0) {
    m.overhead_mean_ms = static_cast<double>(s.overhead_sum_ms) /
                         static_cast<double>(s.verified);
  }
  if (s.ssim_count > 0) m.ssim_mean = s.ssim_sum / static_cast<double>(s.ssim_count);
  if (s.glob_count > 0) m.glob_mean = s.glob_sum / static_cast<double>(s.glob_count);
  return m;
}

GapStats gap_stats_ms(const std::vector<Millis>& gaps) {
  if (gaps.empty()) throw Error(ErrorCode::kInvalidArgument, "no trials");
  CellStats s;
  for (Millis g : gaps) {
    TrialResult r;
    r.t_act = g;
    s.add(r);
  }
  const CellMetrics m = metrics(s);
  return {*m.gap_mean_s, *m.gap_std_s, *m.gap_min_s, *m.gap_max_s};
}

GapStats gap_stats(const std::vector<TrialResult>& results) {
  std::vector<Millis> gaps;
  gaps.reserve(results.size());
  for (const auto& r : results) gaps.push_back(r.t_act - r.t_obs);
  return gap_stats_ms(gaps);
}

CellStats CampaignReport::overall() const {
  CellStats s;
  for (const auto& c : cells) s.merge(c.stats);
  return s;
}

CampaignReport run_campaign(const std::vector<Cell>& cells,
                            std::uint64_t base_seed, int jobs) {
  std::map<std::string, int> seen;
  for (const auto& c : cells) {
    if (c.trials < 0) {
      throw Error(ErrorCode::kInvalidArgument, "negative trial count in " + c.id);
    }
    if (seen[c.id]++) throw Error(ErrorCode::kDuplicate, "duplicate cell " + c.id);
    validate(c.config);
  }
  CampaignReport report;
  report.base_seed = base_seed;
  struct Work {
    std::size_t cell;
    std::int64_t index;
  };
  std::vector<Work> work;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    CellReport cr;
    cr.id = cells[i].id;
    cr.task = cells[i].config.task.id;
    cr.primitive = cells[i].config.attack.primitive;
    cr.style = cells[i].config.attack.style;
    cr.defense = cells[i].config.pusv.layers;
    cr.trials.resize(static_cast<std::size_t>(cells[i].trials));
    report.cells.push_back(std::move(cr));
    for (std::int64_t t = 0; t < cells[i].trials; ++t) work.push_back({i, t});
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= work.size()) return;
      const Work& w = work[k];
      try {
        TrialResult r = run_trial(cells[w.cell].config,
                                  trial_seed(base_seed, cells[w.cell].id, w.index));
        r.cell = cells[w.cell].id;
        r.index = w.index;
        report.cells[w.cell].trials[static_cast<std::size_t>(w.index)] =
            std::move(r);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n_threads =
      std::max(1, std::min<int>(jobs, static_cast<int>(work.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  for (auto& c : report.cells) {
    for (const auto& r : c.trials) c.stats.add(r);
  }
  return report;
}

CampaignReport report_from_trials(const std::vector<TrialResult>& trials) {
  CampaignReport report;
  std::map<std::string, std::size_t> where;
  for (const auto& t : trials) {
    auto it = where.find(t.cell);
    if (it == where.end()) {
      CellReport cr;
      cr.id = t.cell;
      cr.task = t.task;
      cr.primitive = t.primitive;
      cr.style = t.style;
      cr.defense = t.defense;
      report.cells.push_back(std::move(cr));
      it = where.emplace(t.cell, report.cells.size() - 1).first;
    }
    CellReport& c = report.cells[it->second];
    c.trials.push_back(t);
    c.stats.add(t);
  }
  return report;
}

json trial_to_json(const TrialResult& r) {
  json j = {{"cell", r.cell},
            {"index", r.index},
            {"seed", r.seed},
            {"task", r.task},
            {"primitive", std::string(to_string(r.primitive))},
            {"style", std::string(to_string(r.style))},
            {"defense", defense_name(r.defense)},
            {"t_obs", r.t_obs},
            {"t_verify", r.t_verify},
            {"t_act", r.t_act},
            {"gap_s", r.gap_s},
            {"clicked", r.clicked},
            {"c", r.c ? json::array({r.c->x, r.c->y}) : json(nullptr)},
            {"intended_bbox",
             r.intended_bbox ? rect_json(*r.intended_bbox) : json(nullptr)},
            {"verified", r.verified},
            {"verdict", r.verdict ? verdict_to_json(*r.verdict) : json(nullptr)},
            {"aborted", r.aborted},
            {"fired_layer", std::string(to_string(r.fired_layer))},
            {"dispatched", r.dispatched},
            {"intended_received", r.intended_received},
            {"attack_fired", r.attack_fired},
            {"artifact_present", r.artifact_present},
            {"spatial_hit", r.spatial_hit},
            {"trigger_hit", r.trigger_hit},
            {"behavioral_hit",
             r.behavioral_hit ? json(*r.behavioral_hit) : json(nullptr)},
            {"vav", r.vav},
            {"frame_obs_digest", digest_hex(r.frame_obs_digest)},
            {"frame_act_digest", digest_hex(r.frame_act_digest)}};
  if (r.receiver) {
    j["receiver"] = {{"kind", std::string(receiver_kind(r.receiver->kind))},
                     {"window", r.receiver->window},
                     {"element", r.receiver->element_id}};
  } else {
    j["receiver"] = nullptr;
  }
  return j;
}

TrialResult trial_from_json(const json& j) {
  try {
    TrialResult r;
    r.cell = j.at("cell").get<std::string>();
    r.index = j.at("index").get<std::int64_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.task = j.at("task").get<std::string>();
    r.primitive = primitive_from_string(j.at("primitive").get<std::string>());
    r.style = overlay_style_from_string(j.at("style").get<std::string>());
    r.defense = parse_defense(j.at("defense").get<std::string>());
    r.t_obs = j.at("t_obs").get<Millis>();
    r.t_verify = j.at("t_verify").get<Millis>();
    r.t_act = j.at("t_act").get<Millis>();
    r.gap_s = j.at("gap_s").get<double>();
    r.clicked = j.at("clicked").get<bool>();
    if (!j.at("c").is_null()) {
      r.c = Point{j.at("c").at(0).get<int>(), j.at("c").at(1).get<int>()};
    }
    if (!j.at("intended_bbox").is_null()) {
      r.intended_bbox = rect_from(j.at("intended_bbox"));
    }
    r.verified = j.at("verified").get<bool>();
    if (!j.at("verdict").is_null()) r.verdict = verdict_from_json(j.at("verdict"));
    r.aborted = j.at("aborted").get<bool>();
    r.fired_layer = layer_from_string(j.at("fired_layer").get<std::string>());
    r.dispatched = j.at("dispatched").get<bool>();
    r.intended_received = j.at("intended_received").get<bool>();
    r.attack_fired = j.at("attack_fired").get<bool>();
    r.artifact_present = j.at("artifact_present").get<bool>();
    r.spatial_hit = j.at("spatial_hit").get<bool>();
    r.trigger_hit = j.at("trigger_hit").get<bool>();
    if (!j.at("behavioral_hit").is_null()) {
      r.behavioral_hit = j.at("behavioral_hit").get<bool>();
    }
    r.vav = j.at("vav").get<bool>();
    r.frame_obs_digest = parse_hex(j.at("frame_obs_digest").get<std::string>());
    r.frame_act_digest = parse_hex(j.at("frame_act_digest").get<std::string>());
    if (!j.at("receiver").is_null()) {
      const auto& rc = j.at("receiver");
      ClickReceiver cr;
      cr.kind = receiver_kind_from(rc.at("kind").get<std::string>());
      cr.window = rc.at("window").get<WindowId>();
      cr.element_id = rc.at("element").get<std::string>();
      r.receiver = cr;
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("bad trial record: ") + e.what());
  }
}

json report_to_json(const CampaignReport& r) {
  json cells = json::array();
  for (const auto& c : r.cells) {
    json trials = json::array();
    for (const auto& t : c.trials) trials.push_back(trial_to_json(t));
    cells.push_back({{"id", c.id},
                     {"task", c.task},
                     {"primitive", std::string(to_string(c.primitive))},
                     {"style", std::string(to_string(c.style))},
                     {"defense", defense_name(c.defense)},
                     {"stats", stats_to_json(c.stats)},
                     {"metrics", metrics_to_json(metrics(c.stats))},
                     {"trials", trials}});
  }
  const CellStats overall = r.overall();
  return {{"base_seed", r.base_seed},
          {"config", r.config},
          {"cells", cells},
          {"overall",
           {{"stats", stats_to_json(overall)},
            {"metrics", metrics_to_json(metrics(overall))}}}};
}

CampaignReport report_from_json(const json& j) {
  try {
    CampaignReport r;
    r.base_seed = j.at("base_seed").get<std::uint64_t>();
    r.config = j.at("config");
    for (const auto& c : j.at("cells")) {
      CellReport cr;
      cr.id = c.at("id").get<std::string>();
      cr.task = c.at("task").get<std::string>();
      cr.primitive = primitive_from_string(c.at("primitive").get<std::string>());
      cr.style = overlay_style_from_string(c.at("style").get<std::string>());
      cr.defense = parse_defense(c.at("defense").get<std::string>());
      cr.stats = stats_from_json(c.at("stats"));
      for (const auto& t : c.at("trials")) cr.trials.push_back(trial_from_json(t));
      r.cells.push_back(std::move(cr));
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("bad report: ") + e.what());
  }
}

std::vector<TrialResult> parse_jsonl(std::string_view text) {
  std::vector<TrialResult> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kSchema,
                  "line " + std::to_string(lineno) + ": " + e.what());
    }
    out.push_back(trial_from_json(j));
  }
  return out;
}

std::vector<std::string> report_formats() {
  return {"csv",   "json", "jsonl",           "summary",       "styles",
          "raise", "dom",  "defense_overlay", "defense_raise", "defense_dom"};
}

std::string emit_report(const CampaignReport& r, std::string_view format) {
  if (format == "json") return report_to_json(r).dump(2) + "\n";
  if (format == "jsonl") {
    std::string out;
    for (const auto& c : r.cells) {
      for (const auto& t : c.trials) out += trial_to_json(t).dump() + "\n";
    }
    return out;
  }
  if (format == "summary") {
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof line, "%-44s %5s %8s %8s %8s %8s %8s\n", "cell",
                  "n", "spatial", "trigger", "behav", "AIR", "FPR");
    out << line;
    for (const auto& c : r.cells) {
      const CellMetrics m = metrics(c.stats);
      std::snprintf(line, sizeof line, "%-44s %5lld %8s %8s %8s %8s %8s\n",
                    c.id.c_str(), static_cast<long long>(c.stats.n),
                    pct(m.spatial_asr).c_str(), pct(m.trigger_asr).c_str(),
                    pct(m.behavioral_asr).c_str(), pct(m.air).c_str(),
                    pct(m.fpr).c_str());
      out << line;
    }
    return out.str();
  }
  if (format == "csv") {
    std::ostringstream out;
    out << "cell,task,primitive,style,defense,n,clicked,dispatched,aborted,"
           "spatial_asr,trigger_asr,behavioral_asr,air,fpr,effective_asr,"
           "fired_l1,fired_l2a,fired_l2b,fired_l2c,detect_l1,detect_l2a,"
           "detect_l2b,detect_l2c,vav,gap_mean_s,gap_std_s,gap_min_s,"
           "gap_max_s,overhead_mean_ms,ssim_min,ssim_mean,glob_max\n";
    for (const auto& c : r.cells) {
      const CellStats& s = c.stats;
      const CellMetrics m = metrics(s);
      std::vector<std::string> f = {
          c.id, c.task, std::string(to_string(c.primitive)),
          std::string(to_string(c.style)), defense_name(c.defense),
          std::to_string(s.n), std::to_string(s.clicked),
          std::to_string(s.dispatched), std::to_string(s.aborted),
          num(m.spatial_asr), num(m.trigger_asr), num(m.behavioral_asr),
          num(m.air), num(m.fpr), num(m.effective_asr)};
      for (auto v : s.fired_by) f.push_back(std::to_string(v));
      for (auto v : s.layer_failed) f.push_back(std::to_string(v));
      f.push_back(std::to_string(s.vav));
      for (const auto& v : {m.gap_mean_s, m.gap_std_s, m.gap_min_s, m.gap_max_s}) {
        f.push_back(num(v, 3));
      }
      f.push_back(num(m.overhead_mean_ms, 1));
      f.push_back(num(s.ssim_min));
      f.push_back(num(m.ssim_mean));
      f.push_back(num(s.glob_max, 6));
      for (std::size_t i = 0; i < f.size(); ++i) {
        if (i) out << ',';
        out << csv_field(f[i]);
      }
      out << '\n';
    }
    return out.str();
  }
  auto by_task = [](const CellReport& c) { return c.task; };
  if (format == "styles") {
    return grouped_table(r, {"Style", "n", "Spatial-ASR"}, style_key,
                         [](const std::string& k, const CellStats& s) {
                           return std::vector<std::string>{
                               k, std::to_string(s.n), pct(metrics(s).spatial_asr)};
                         });
  }
  if (format == "raise") {
    return grouped_table(r, {"Task", "n", "Spatial-ASR", "Trigger-ASR"}, by_task,
                         [](const std::string& k, const CellStats& s) {
                           const CellMetrics m = metrics(s);
                           return std::vector<std::string>{
                               k, std::to_string(s.n), pct(m.spatial_asr),
                               pct(m.trigger_asr)};
                         });
  }
  if (format == "dom") {
    return grouped_table(r, {"Task", "n", "Spatial-ASR", "Behavioral-ASR"},
                         by_task, [](const std::string& k, const CellStats& s) {
                           const CellMetrics m = metrics(s);
                           return std::vector<std::string>{
                               k, std::to_string(s.n), pct(m.spatial_asr),
                               pct(m.behavioral_asr)};
                         });
  }
  if (format == "defense_overlay") {
    return grouped_table(
        r, {"Style", "n", "L1-AIR", "L2a-AIR", "Eff. ASR", "Signal"}, style_key,
        [](const std::string& k, const CellStats& s) {
          const CellMetrics m = metrics(s);
          return std::vector<std::string>{
              k, std::to_string(s.n), pct(m.layer_air[0]), pct(m.layer_air[1]),
              pct(m.effective_asr), signal(m)};
        });
  }
  if (format == "defense_raise") {
    return grouped_table(
        r, {"Task", "n", "L1-AIR", "L2b-AIR", "Eff. ASR", "SSIM"}, by_task,
        [](const std::string& k, const CellStats& s) {
          const CellMetrics m = metrics(s);
          return std::vector<std::string>{
              k, std::to_string(s.n), pct(m.layer_air[0]), pct(m.layer_air[2]),
              pct(m.effective_asr), num(m.ssim_mean, 3)};
        });
  }
  if (format == "defense_dom") {
    return grouped_table(
        r, {"Task", "n", "L1-AIR", "L2a-AIR", "Behavioral-ASR", "SSIM"}, by_task,
        [](const std::string& k, const CellStats& s) {
          const CellMetrics m = metrics(s);
          return std::vector<std::string>{
              k, std::to_string(s.n), pct(m.layer_air[0]), pct(m.layer_air[1]),
              pct(m.behavioral_asr), num(m.ssim_mean, 3)};
        });
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown report format '" + std::string(format) + "'");
}

Calibration calibrate(const TrialConfig& benign, std::int64_t n,
                      std::uint64_t base_seed) {
  if (benign.attack.primitive != Primitive::kNone) {
    throw Error(ErrorCode::kInvalidArgument,
                "calibration needs a scenario without an attack");
  }
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "calibration needs n >= 1");
  TrialConfig cfg = benign;
  if (!cfg.pusv.layers.any()) cfg.pusv.layers = LayerMask{};
  Calibration c;
  for (std::int64_t i = 0; i < n; ++i) {
    const TrialResult r = run_trial(cfg, trial_seed(base_seed, "calibrate", i));
    if (!r.verdict) continue;
    ++c.n;
    c.min_ssim = std::min(c.min_ssim, r.verdict->ssim.value_or(1.0));
    c.max_glob_ratio =
        std::max(c.max_glob_ratio, r.verdict->glob_diff_ratio.value_or(0.0));
  }
  c.suggested_tau1 = c.min_ssim - 0.05;
  c.suggested_tau2a = c.max_glob_ratio * 5.0;
  c.tau1_flag = c.suggested_tau1 < benign.pusv.tau1;
  c.tau2a_flag = c.suggested_tau2a > benign.pusv.tau2a;
  return c;
}

json calibration_to_json(const Calibration& c) {
  return {{"n", c.n},
          {"min_ssim", c.min_ssim},
          {"max_glob_ratio", c.max_glob_ratio},
          {"suggested_tau1", c.suggested_tau1},
          {"suggested_tau2a", c.suggested_tau2a},
          {"tau1_flag", c.tau1_flag},
          {"tau2a_flag", c.tau2a_flag}};
}

std::optional<double> metric_value(const CellStats& s, std::string_view name) {
  const CellMetrics m = metrics(s);
  auto count = [](std::int64_t v) { return std::optional<double>(static_cast<double>(v)); };
  if (name == "n") return count(s.n);
  if (name == "aborted") return count(s.aborted);
  if (name == "dispatched") return count(s.dispatched);
  if (name == "clicked") return count(s.clicked);
  if (name == "spatial_hits") return count(s.spatial_hits);
  if (name == "trigger_hits") return count(s.trigger_hits);
  if (name == "behavioral_hits") return count(s.behavioral_hits);
  if (name == "vav") return count(s.vav);
  if (name == "intended_received") return count(s.intended_received);
  if (name == "spatial_asr") return m.spatial_asr;
  if (name == "trigger_asr") return m.trigger_asr;
  if (name == "behavioral_asr") return m.behavioral_asr;
  if (name == "air") return m.air;
  if (name == "fpr") return m.fpr;
  if (name == "effective_asr") return m.effective_asr;
  if (name == "gap_mean_s") return m.gap_mean_s;
  if (name == "gap_std_s") return m.gap_std_s;
  if (name == "gap_min_s") return m.gap_min_s;
  if (name == "gap_max_s") return m.gap_max_s;
  if (name == "overhead_mean_ms") return m.overhead_mean_ms;
  if (name == "ssim_min") return s.ssim_min;
  if (name == "ssim_mean") return m.ssim_mean;
  if (name == "glob_max") return s.glob_max;
  for (Layer l : kLayers) {
    std::string lname(to_string(l));
    for (char& ch : lname) ch = static_cast<char>(std::tolower(ch));
    if (name == "fired_" + lname) return count(s.fired_by[idx(l)]);
    if (name == "detect_" + lname) return count(s.layer_failed[idx(l)]);
    if (name == "air_" + lname) return ratio(s.fired_by[idx(l)], s.n);
  }
  throw Error(ErrorCode::kSchema, "unknown metric '" + std::string(name) + "'");
}

std::vector<CheckResult> check_expectations(
    const CellStats& stats, const std::vector<Expectation>& expectations) {
  std::vector<CheckResult> out;
  for (const auto& e : expectations) {
    CheckResult r{e, metric_value(stats, e.metric), false};
    if (r.actual) {
      const double a = *r.actual;
      if (e.op == "eq") {
        r.passed = std::abs(a - e.value) <= e.tolerance;
      } else if (e.op == "ge") {
        r.passed = a >= e.value;
      } else if (e.op == "gt") {
        r.passed = a > e.value;
      } else if (e.op == "le") {
        r.passed = a <= e.value;
      } else if (e.op == "lt") {
        r.passed = a < e.value;
      } else {
        throw Error(ErrorCode::kSchema, "unknown comparison '" + e.op + "'");
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace dtoctou

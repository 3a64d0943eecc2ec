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

#include "dtoctou/scenario.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

namespace dtoctou {

using nlohmann::json;

namespace {

constexpr int kFullPatch = 160;

[[noreturn]] void schema(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::kSchema, where + ": " + what);
}

void only_keys(const json& j, const std::string& where,
               std::initializer_list<const char*> allowed) {
  if (!j.is_object()) schema(where, "expected an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) schema(where, "unknown field '" + key + "'");
  }
}

std::string path(const std::string& where, const std::string& key) {
  return where.empty() ? key : where + "." + key;
}

std::int64_t get_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) schema(where, "expected an integer");
  return j.get<std::int64_t>();
}

double get_num(const json& j, const std::string& where) {
  if (!j.is_number()) schema(where, "expected a number");
  return j.get<double>();
}

bool get_bool(const json& j, const std::string& where) {
  if (!j.is_boolean()) schema(where, "expected a boolean");
  return j.get<bool>();
}

std::string get_str(const json& j, const std::string& where) {
  if (!j.is_string()) schema(where, "expected a string");
  return j.get<std::string>();
}

int get_coord(const json& j, const std::string& where) {
  const auto v = get_int(j, where);
  if (v < -1'000'000 || v > 1'000'000) schema(where, "coordinate out of range");
  return static_cast<int>(v);
}

Rect get_rect(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) schema(where, "expected [x, y, w, h]");
  return {get_coord(j[0], where), get_coord(j[1], where),
          get_coord(j[2], where), get_coord(j[3], where)};
}

Point get_point(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) schema(where, "expected [x, y]");
  return {get_coord(j[0], where), get_coord(j[1], where)};
}

Rgb get_rgb(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) schema(where, "expected [r, g, b]");
  Rgb c;
  std::uint8_t* out[3] = {&c.r, &c.g, &c.b};
  for (int i = 0; i < 3; ++i) {
    const auto v = get_int(j[i], where);
    if (v < 0 || v > 255) schema(where, "colour channel out of range");
    *out[i] = static_cast<std::uint8_t>(v);
  }
  return c;
}

json rect_json(const Rect& r) { return json::array({r.x, r.y, r.w, r.h}); }
json rgb_json(Rgb c) { return json::array({c.r, c.g, c.b}); }

template <typename F>
auto wrap(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kSchema) throw;
    throw Error(ErrorCode::kSchema, where + ": " + e.what());
  }
}

TaskSpec parse_task(const json& j, const std::string& where) {
  if (j.is_string()) {
    return wrap(where, [&] { return builtin_task(j.get<std::string>()); });
  }
  only_keys(j, where, {"id", "family", "target", "focus", "deceptive_label"});
  TaskSpec t;
  if (!j.contains("id")) schema(where, "missing 'id'");
  t.id = get_str(j.at("id"), path(where, "id"));
  if (j.contains("family")) {
    t.family = wrap(where, [&] {
      return task_family_from_string(get_str(j.at("family"), path(where, "family")));
    });
  }
  if (!j.contains("target")) schema(where, "missing 'target'");
  const json& tg = j.at("target");
  const std::string tw = path(where, "target");
  only_keys(tg, tw, {"element", "window", "rect"});
  if (tg.contains("element")) {
    if (tg.contains("window") || tg.contains("rect")) {
      schema(tw, "give either 'element' or 'window' + 'rect'");
    }
    t.target.kind = Target::Kind::kDomElement;
    t.target.element_id = get_str(tg.at("element"), path(tw, "element"));
  } else {
    if (!tg.contains("window") || !tg.contains("rect")) {
      schema(tw, "window targets need 'window' and 'rect'");
    }
    t.target.kind = Target::Kind::kWindow;
    t.target.window = get_int(tg.at("window"), path(tw, "window"));
    t.target.rect = get_rect(tg.at("rect"), path(tw, "rect"));
  }
  if (j.contains("focus") && !j.at("focus").is_null()) {
    t.focus = get_int(j.at("focus"), path(where, "focus"));
  }
  if (j.contains("deceptive_label")) {
    t.deceptive_label = get_str(j.at("deceptive_label"), path(where, "deceptive_label"));
  }
  return t;
}

json task_json(const TaskSpec& t) {
  json target;
  if (t.target.kind == Target::Kind::kDomElement) {
    target = {{"element", t.target.element_id}};
  } else {
    target = {{"window", t.target.window}, {"rect", rect_json(t.target.rect)}};
  }
  return {{"id", t.id},
          {"family", std::string(to_string(t.family))},
          {"target", target},
          {"focus", t.focus ? json(*t.focus) : json(nullptr)},
          {"deceptive_label", t.deceptive_label}};
}

WindowSpec parse_window(const json& j, const std::string& where) {
  only_keys(j, where,
            {"id", "title", "rect", "z", "mapped", "compositor_rendered", "fill",
             "texture_seed", "texture_amplitude", "trigger_on_click",
             "decorations"});
  WindowSpec w;
  if (!j.contains("id") || !j.contains("rect")) schema(where, "needs 'id' and 'rect'");
  w.id = get_int(j.at("id"), path(where, "id"));
  w.rect = get_rect(j.at("rect"), path(where, "rect"));
  if (j.contains("title")) w.title = get_str(j.at("title"), path(where, "title"));
  if (j.contains("z") && !j.at("z").is_null()) w.z = get_int(j.at("z"), path(where, "z"));
  if (j.contains("mapped")) w.mapped = get_bool(j.at("mapped"), path(where, "mapped"));
  if (j.contains("compositor_rendered")) {
    w.compositor_rendered =
        get_bool(j.at("compositor_rendered"), path(where, "compositor_rendered"));
  }
  if (j.contains("fill")) w.fill = get_rgb(j.at("fill"), path(where, "fill"));
  if (j.contains("texture_seed")) {
    w.texture_seed = static_cast<std::uint64_t>(
        get_int(j.at("texture_seed"), path(where, "texture_seed")));
  }
  if (j.contains("texture_amplitude")) {
    w.texture_amplitude = static_cast<int>(
        get_int(j.at("texture_amplitude"), path(where, "texture_amplitude")));
  }
  if (j.contains("trigger_on_click")) {
    w.trigger_on_click =
        get_bool(j.at("trigger_on_click"), path(where, "trigger_on_click"));
  }
  if (j.contains("decorations")) {
    const auto& ds = j.at("decorations");
    if (!ds.is_array()) schema(path(where, "decorations"), "expected an array");
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const std::string dw = path(where, "decorations[" + std::to_string(i) + "]");
      only_keys(ds[i], dw, {"rect", "fill"});
      if (!ds[i].contains("rect") || !ds[i].contains("fill")) {
        schema(dw, "needs 'rect' and 'fill'");
      }
      w.decorations.push_back({get_rect(ds[i].at("rect"), path(dw, "rect")),
                               get_rgb(ds[i].at("fill"), path(dw, "fill"))});
    }
  }
  return w;
}

json window_json(const WindowSpec& w) {
  json decorations = json::array();
  for (const auto& d : w.decorations) {
    decorations.push_back({{"rect", rect_json(d.rect)}, {"fill", rgb_json(d.fill)}});
  }
  return {{"id", w.id},
          {"title", w.title},
          {"rect", rect_json(w.rect)},
          {"z", w.z ? json(*w.z) : json(nullptr)},
          {"mapped", w.mapped},
          {"compositor_rendered", w.compositor_rendered},
          {"fill", rgb_json(w.fill)},
          {"texture_seed", static_cast<std::int64_t>(w.texture_seed)},
          {"texture_amplitude", w.texture_amplitude},
          {"trigger_on_click", w.trigger_on_click},
          {"decorations", decorations}};
}

DomElement parse_element(const json& j, const std::string& where) {
  only_keys(j, where,
            {"id", "bbox", "z_index", "display", "transparent", "form_action",
             "form_method", "onclick", "fill", "texture_seed"});
  DomElement e;
  if (!j.contains("id") || !j.contains("bbox")) schema(where, "needs 'id' and 'bbox'");
  e.id = get_str(j.at("id"), path(where, "id"));
  e.bbox = get_rect(j.at("bbox"), path(where, "bbox"));
  if (j.contains("z_index")) {
    e.z_index = static_cast<int>(get_int(j.at("z_index"), path(where, "z_index")));
  }
  if (j.contains("display")) {
    const std::string d = get_str(j.at("display"), path(where, "display"));
    if (d == "visible") {
      e.display = Display::kVisible;
    } else if (d == "hidden") {
      e.display = Display::kHidden;
    } else {
      schema(path(where, "display"), "expected 'visible' or 'hidden'");
    }
  }
  if (j.contains("transparent")) {
    e.transparent = get_bool(j.at("transparent"), path(where, "transparent"));
  }
  auto opt_str = [&](const char* key, std::optional<std::string>& out) {
    if (j.contains(key) && !j.at(key).is_null()) out = get_str(j.at(key), path(where, key));
  };
  opt_str("form_action", e.form_action);
  opt_str("form_method", e.form_method);
  opt_str("onclick", e.onclick);
  if (j.contains("fill")) e.fill = get_rgb(j.at("fill"), path(where, "fill"));
  if (j.contains("texture_seed")) {
    e.texture_seed = static_cast<std::uint64_t>(
        get_int(j.at("texture_seed"), path(where, "texture_seed")));
  }
  return e;
}

json element_json(const DomElement& e) {
  auto opt_str = [](const std::optional<std::string>& s) {
    return s ? json(*s) : json(nullptr);
  };
  return {{"id", e.id},
          {"bbox", rect_json(e.bbox)},
          {"z_index", e.z_index},
          {"display", e.display == Display::kVisible ? "visible" : "hidden"},
          {"transparent", e.transparent},
          {"form_action", opt_str(e.form_action)},
          {"form_method", opt_str(e.form_method)},
          {"onclick", opt_str(e.onclick)},
          {"fill", rgb_json(e.fill)},
          {"texture_seed", static_cast<std::int64_t>(e.texture_seed)}};
}

void parse_attack(const json& j, Scenario& s) {
  const std::string w = "attack";
  only_keys(j, w,
            {"primitive", "style", "styles", "trigger_delay_s", "attacker_zone",
             "overlay_timer_s", "deceptive_label", "target_coordinate"});
  AttackScenario& a = s.attack;
  if (j.contains("primitive")) {
    a.primitive = wrap(w, [&] {
      return primitive_from_string(get_str(j.at("primitive"), "attack.primitive"));
    });
  }
  if (j.contains("style") && j.contains("styles")) {
    schema(w, "give 'style' or 'styles', not both");
  }
  if (j.contains("style")) {
    s.styles = {wrap(w, [&] {
      return overlay_style_from_string(get_str(j.at("style"), "attack.style"));
    })};
  }
  if (j.contains("styles")) {
    const auto& st = j.at("styles");
    if (!st.is_array() || st.empty()) schema("attack.styles", "expected a non-empty array");
    s.styles.clear();
    for (const auto& v : st) {
      s.styles.push_back(wrap(w, [&] {
        return overlay_style_from_string(get_str(v, "attack.styles"));
      }));
    }
  }
  if (j.contains("trigger_delay_s")) {
    a.trigger_delay_s = get_num(j.at("trigger_delay_s"), "attack.trigger_delay_s");
    if (!(a.trigger_delay_s > 0)) schema("attack.trigger_delay_s", "must be > 0");
  }
  if (j.contains("attacker_zone") && !j.at("attacker_zone").is_null()) {
    a.attacker_zone = get_rect(j.at("attacker_zone"), "attack.attacker_zone");
  }
  if (j.contains("overlay_timer_s") && !j.at("overlay_timer_s").is_null()) {
    a.overlay_timer_s = get_num(j.at("overlay_timer_s"), "attack.overlay_timer_s");
    if (!(*a.overlay_timer_s > 0)) schema("attack.overlay_timer_s", "must be > 0");
  }
  if (j.contains("deceptive_label")) {
    a.deceptive_label = get_str(j.at("deceptive_label"), "attack.deceptive_label");
  }
  if (j.contains("target_coordinate") && !j.at("target_coordinate").is_null()) {
    a.target_coordinate = get_point(j.at("target_coordinate"), "attack.target_coordinate");
  }
}

void parse_agent(const json& j, Scenario& s) {
  only_keys(j, "agent", {"latency", "grounding"});
  if (j.contains("latency")) {
    const json& l = j.at("latency");
    only_keys(l, "agent.latency", {"kind", "gap_s", "mean_s", "std_s", "min_s", "max_s"});
    LatencyModel m;
    const std::string kind =
        l.contains("kind") ? get_str(l.at("kind"), "agent.latency.kind") : "lognormal";
    if (kind == "fixed") {
      m.kind = LatencyModel::Kind::kFixed;
      if (!l.contains("gap_s")) schema("agent.latency", "fixed latency needs 'gap_s'");
      m.fixed_s = get_num(l.at("gap_s"), "agent.latency.gap_s");
      for (const char* k : {"mean_s", "std_s", "min_s", "max_s"}) {
        if (l.contains(k)) schema("agent.latency", std::string("'") + k + "' needs kind lognormal");
      }
    } else if (kind == "lognormal") {
      m.kind = LatencyModel::Kind::kLognormal;
      if (l.contains("gap_s")) schema("agent.latency", "'gap_s' needs kind fixed");
      if (l.contains("mean_s")) m.mean_s = get_num(l.at("mean_s"), "agent.latency.mean_s");
      if (l.contains("std_s")) m.std_s = get_num(l.at("std_s"), "agent.latency.std_s");
      if (l.contains("min_s")) m.min_s = get_num(l.at("min_s"), "agent.latency.min_s");
      if (l.contains("max_s")) m.max_s = get_num(l.at("max_s"), "agent.latency.max_s");
    } else {
      schema("agent.latency.kind", "expected 'fixed' or 'lognormal'");
    }
    wrap("agent.latency", [&] {
      validate(m);
      return 0;
    });
    s.latency = m;
  }
  if (j.contains("grounding")) {
    const json& g = j.at("grounding");
    only_keys(g, "agent.grounding", {"kind", "dy"});
    GroundingModel m;
    const std::string kind =
        g.contains("kind") ? get_str(g.at("kind"), "agent.grounding.kind") : "oracle";
    if (kind == "oracle") {
      if (g.contains("dy")) schema("agent.grounding", "'dy' needs kind offset");
    } else if (kind == "offset") {
      m.kind = GroundingModel::Kind::kOffset;
      if (!g.contains("dy")) schema("agent.grounding", "offset grounding needs 'dy'");
      const Point dy = get_point(g.at("dy"), "agent.grounding.dy");
      m.dy_lo = dy.x;
      m.dy_hi = dy.y;
      if (m.dy_lo > m.dy_hi) schema("agent.grounding.dy", "lo > hi");
    } else {
      schema("agent.grounding.kind", "expected 'oracle' or 'offset'");
    }
    s.grounding = m;
  }
}

void parse_defense_block(const json& j, Scenario& s) {
  only_keys(j, "defense", {"layers", "tau1", "tau2a", "patch", "delta_noise", "keywords"});
  PusvConfig& p = s.pusv;
  if (j.contains("layers")) {
    p.layers = wrap("defense.layers", [&] {
      return parse_defense(get_str(j.at("layers"), "defense.layers"));
    });
  }
  if (j.contains("tau1")) p.tau1 = get_num(j.at("tau1"), "defense.tau1");
  if (j.contains("tau2a")) p.tau2a = get_num(j.at("tau2a"), "defense.tau2a");
  if (j.contains("patch") && !j.at("patch").is_null()) {
    s.patch = static_cast<int>(get_int(j.at("patch"), "defense.patch"));
  }
  if (j.contains("delta_noise")) {
    p.delta_noise = static_cast<int>(get_int(j.at("delta_noise"), "defense.delta_noise"));
  }
  if (j.contains("keywords")) {
    const auto& k = j.at("keywords");
    if (!k.is_array()) schema("defense.keywords", "expected an array");
    p.keywords.clear();
    for (const auto& v : k) p.keywords.push_back(get_str(v, "defense.keywords"));
  }
  PusvConfig check = p;
  if (s.patch) check.patch = *s.patch;
  wrap("defense", [&] {
    validate(check);
    return 0;
  });
}

void parse_expect(const json& j, Scenario& s) {
  if (!j.is_object()) schema("expect", "expected an object");
  const CellStats probe;
  for (const auto& [metric, v] : j.items()) {
    const std::string w = "expect." + metric;
    wrap(w, [&] {
      metric_value(probe, metric);
      return 0;
    });
    Expectation e;
    e.metric = metric;
    if (v.is_number()) {
      e.value = v.get<double>();
    } else {
      only_keys(v, w, {"value", "tolerance", "op"});
      if (!v.contains("value")) schema(w, "missing 'value'");
      e.value = get_num(v.at("value"), path(w, "value"));
      if (v.contains("tolerance")) e.tolerance = get_num(v.at("tolerance"), path(w, "tolerance"));
      if (v.contains("op")) {
        e.op = get_str(v.at("op"), path(w, "op"));
        if (e.op != "eq" && e.op != "ge" && e.op != "gt" && e.op != "le" && e.op != "lt") {
          schema(path(w, "op"), "expected eq, ge, gt, le or lt");
        }
      }
    }
    s.expectations.push_back(e);
  }
}

Rect scaled_zone(const Rect& r, int d) { return scale_rect(r, d); }

}  // namespace

int parse_scale(const std::string& s) {
  if (s == "full") return 1;
  if (s == "quarter") return 4;
  try {
    std::size_t used = 0;
    const int d = std::stoi(s, &used);
    if (used == s.size() && d >= 1 && d <= 8) return d;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kSchema, "scale must be full, quarter or 1..8");
}

GroundingModel parse_grounding(const std::string& s) {
  GroundingModel m;
  if (s == "oracle") return m;
  if (s.rfind("offset:", 0) == 0) {
    const std::string body = s.substr(7);
    const auto comma = body.find(',');
    try {
      std::size_t u1 = 0, u2 = 0;
      if (comma != std::string::npos) {
        const std::string a = body.substr(0, comma), b = body.substr(comma + 1);
        m.dy_lo = std::stoi(a, &u1);
        m.dy_hi = std::stoi(b, &u2);
        if (u1 == a.size() && u2 == b.size() && m.dy_lo <= m.dy_hi) {
          m.kind = GroundingModel::Kind::kOffset;
          return m;
        }
      }
    } catch (const std::exception&) {
    }
  }
  throw Error(ErrorCode::kSchema, "grounding must be oracle or offset:<lo>,<hi>");
}

LatencyModel parse_gap(const std::string& s) {
  LatencyModel m;
  if (s == "lognormal") return m;
  if (s.rfind("fixed:", 0) == 0) {
    try {
      std::size_t used = 0;
      const std::string body = s.substr(6);
      m.fixed_s = std::stod(body, &used);
      m.kind = LatencyModel::Kind::kFixed;
      if (used == body.size()) {
        validate(m);
        return m;
      }
    } catch (const Error&) {
    } catch (const std::exception&) {
    }
  }
  throw Error(ErrorCode::kSchema, "gap must be fixed:<seconds> (>= 0.002) or lognormal");
}

Scenario parse_scenario(const json& doc) {
  only_keys(doc, "scenario",
            {"name", "seed", "trials", "scale", "tasks", "desktop", "attack", "agent",
             "defense", "noise_burst", "expect"});
  Scenario s;
  if (doc.contains("name")) s.name = get_str(doc.at("name"), "name");
  if (s.name.empty()) schema("name", "must not be empty");
  if (doc.contains("seed")) {
    const json& v = doc.at("seed");
    if (!v.is_number_integer()) schema("seed", "expected an integer");
    s.seed = v.is_number_unsigned() ? v.get<std::uint64_t>()
                                    : static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  if (doc.contains("trials")) {
    s.trials = get_int(doc.at("trials"), "trials");
    if (s.trials < 0) schema("trials", "must be >= 0");
  }
  if (doc.contains("scale")) {
    const json& v = doc.at("scale");
    if (v.is_string()) {
      s.scale_divisor = parse_scale(v.get<std::string>());
    } else {
      s.scale_divisor = parse_scale(std::to_string(get_int(v, "scale")));
    }
  }
  if (doc.contains("tasks")) {
    const json& t = doc.at("tasks");
    if (!t.is_array() || t.empty()) schema("tasks", "expected a non-empty array");
    s.tasks.clear();
    for (std::size_t i = 0; i < t.size(); ++i) {
      s.tasks.push_back(parse_task(t[i], "tasks[" + std::to_string(i) + "]"));
    }
  }
  if (doc.contains("desktop")) {
    const json& d = doc.at("desktop");
    only_keys(d, "desktop", {"benign_dynamics", "dock", "windows", "elements"});
    if (d.contains("benign_dynamics")) {
      s.fixture.benign_dynamics = get_bool(d.at("benign_dynamics"), "desktop.benign_dynamics");
    }
    if (d.contains("dock")) s.fixture.dock = get_bool(d.at("dock"), "desktop.dock");
    if (d.contains("windows")) {
      const json& ws = d.at("windows");
      if (!ws.is_array()) schema("desktop.windows", "expected an array");
      for (std::size_t i = 0; i < ws.size(); ++i) {
        s.fixture.extra_windows.push_back(
            parse_window(ws[i], "desktop.windows[" + std::to_string(i) + "]"));
      }
    }
    if (d.contains("elements")) {
      const json& es = d.at("elements");
      if (!es.is_array()) schema("desktop.elements", "expected an array");
      for (std::size_t i = 0; i < es.size(); ++i) {
        s.fixture.extra_elements.push_back(
            parse_element(es[i], "desktop.elements[" + std::to_string(i) + "]"));
      }
    }
  }
  if (doc.contains("attack")) parse_attack(doc.at("attack"), s);
  if (doc.contains("agent")) parse_agent(doc.at("agent"), s);
  if (doc.contains("defense")) parse_defense_block(doc.at("defense"), s);
  if (doc.contains("noise_burst") && !doc.at("noise_burst").is_null()) {
    const json& n = doc.at("noise_burst");
    only_keys(n, "noise_burst", {"rect", "offset_ms", "duration_ms", "amplitude"});
    if (!n.contains("rect") || !n.contains("duration_ms")) {
      schema("noise_burst", "needs 'rect' and 'duration_ms'");
    }
    NoiseBurst b;
    b.rect = get_rect(n.at("rect"), "noise_burst.rect");
    b.duration_ms = get_int(n.at("duration_ms"), "noise_burst.duration_ms");
    if (n.contains("offset_ms")) b.offset_ms = get_int(n.at("offset_ms"), "noise_burst.offset_ms");
    if (n.contains("amplitude")) {
      b.amplitude = static_cast<int>(get_int(n.at("amplitude"), "noise_burst.amplitude"));
    }
    if (b.duration_ms <= 0 || b.rect.empty()) schema("noise_burst", "must be non-empty");
    s.noise_burst = b;
  }
  if (doc.contains("expect")) parse_expect(doc.at("expect"), s);
  return s;
}

Scenario parse_scenario_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("invalid JSON: ") + e.what());
  }
  return parse_scenario(doc);
}

Scenario load_scenario(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + p.string());
  std::stringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::kIo, "read failed: " + p.string());
  return parse_scenario_text(buf.str());
}

void apply_overrides(Scenario& s, const ScenarioOverrides& o) {
  if (o.trials) {
    if (*o.trials < 0) throw Error(ErrorCode::kSchema, "trials must be >= 0");
    s.trials = *o.trials;
  }
  if (o.seed) s.seed = *o.seed;
  if (o.defense) s.pusv.layers = *o.defense;
  if (o.grounding) s.grounding = *o.grounding;
  if (o.latency) s.latency = *o.latency;
  if (o.scale_divisor) s.scale_divisor = *o.scale_divisor;
}

json scenario_to_json(const Scenario& s) {
  json tasks = json::array();
  for (const auto& t : s.tasks) tasks.push_back(task_json(t));
  json windows = json::array();
  for (const auto& w : s.fixture.extra_windows) windows.push_back(window_json(w));
  json elements = json::array();
  for (const auto& e : s.fixture.extra_elements) elements.push_back(element_json(e));
  json styles = json::array();
  for (auto st : s.styles) styles.push_back(std::string(to_string(st)));
  const AttackScenario& a = s.attack;
  json attack = {
      {"primitive", std::string(to_string(a.primitive))},
      {"styles", styles},
      {"trigger_delay_s", a.trigger_delay_s},
      {"attacker_zone", a.attacker_zone ? rect_json(*a.attacker_zone) : json(nullptr)},
      {"overlay_timer_s", a.overlay_timer_s ? json(*a.overlay_timer_s) : json(nullptr)},
      {"deceptive_label", a.deceptive_label},
      {"target_coordinate", a.target_coordinate
                                ? json::array({a.target_coordinate->x, a.target_coordinate->y})
                                : json(nullptr)}};
  json latency;
  if (s.latency.kind == LatencyModel::Kind::kFixed) {
    latency = {{"kind", "fixed"}, {"gap_s", s.latency.fixed_s}};
  } else {
    latency = {{"kind", "lognormal"},
               {"mean_s", s.latency.mean_s},
               {"std_s", s.latency.std_s},
               {"min_s", s.latency.min_s},
               {"max_s", s.latency.max_s}};
  }
  json grounding = {{"kind", "oracle"}};
  if (s.grounding.kind == GroundingModel::Kind::kOffset) {
    grounding = {{"kind", "offset"},
                 {"dy", json::array({s.grounding.dy_lo, s.grounding.dy_hi})}};
  }
  json expect = json::object();
  for (const auto& e : s.expectations) {
    expect[e.metric] = {{"value", e.value}, {"tolerance", e.tolerance}, {"op", e.op}};
  }
  json doc = {
      {"name", s.name},
      {"seed", s.seed},
      {"trials", s.trials},
      {"scale", s.scale_divisor},
      {"tasks", tasks},
      {"desktop",
       {{"benign_dynamics", s.fixture.benign_dynamics},
        {"dock", s.fixture.dock},
        {"windows", windows},
        {"elements", elements}}},
      {"attack", attack},
      {"agent", {{"latency", latency}, {"grounding", grounding}}},
      {"defense",
       {{"layers", defense_name(s.pusv.layers)},
        {"tau1", s.pusv.tau1},
        {"tau2a", s.pusv.tau2a},
        {"patch", s.patch ? json(*s.patch) : json(nullptr)},
        {"delta_noise", s.pusv.delta_noise},
        {"keywords", s.pusv.keywords}}},
      {"expect", expect}};
  if (s.noise_burst) {
    doc["noise_burst"] = {{"rect", rect_json(s.noise_burst->rect)},
                          {"offset_ms", s.noise_burst->offset_ms},
                          {"duration_ms", s.noise_burst->duration_ms},
                          {"amplitude", s.noise_burst->amplitude}};
  }
  return doc;
}

std::vector<Cell> build_cells(const Scenario& s) {
  const int d = std::max(1, s.scale_divisor);
  std::vector<Cell> cells;
  for (const auto& task : s.tasks) {
    const bool per_style = s.attack.primitive == Primitive::kA;
    const std::vector<OverlayStyle> styles =
        per_style ? s.styles : std::vector<OverlayStyle>{s.attack.style};
    for (OverlayStyle style : styles) {
      Cell cell;
      cell.id = s.name + "/" + task.id;
      if (per_style) cell.id += "/" + std::string(to_string(style));
      cell.trials = s.trials;
      TrialConfig& c = cell.config;
      c.task = task;
      c.fixture = s.fixture;
      c.fixture.scale_divisor = d;
      c.attack = s.attack;
      c.attack.style = style;
      c.attack.scale_divisor = d;
      if (c.attack.attacker_zone) c.attack.attacker_zone = scaled_zone(*c.attack.attacker_zone, d);
      if (c.attack.target_coordinate) {
        c.attack.target_coordinate = scale_point(*c.attack.target_coordinate, d);
      }
      c.latency = s.latency;
      c.grounding = s.grounding;
      c.grounding.dy_lo /= d;
      c.grounding.dy_hi /= d;
      c.pusv = s.pusv;
      c.pusv.patch = s.patch ? *s.patch : std::max(8, (kFullPatch / d) & ~1);
      if (s.noise_burst) {
        NoiseBurst b = *s.noise_burst;
        b.rect = scale_rect(b.rect, d);
        c.noise_burst = b;
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

}  // namespace dtoctou

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

#include "dtoctou/dom.hpp"

#include "dtoctou/rng.hpp"

namespace dtoctou {

DomPage::DomPage(Size viewport, WindowId host_window, Point origin)
    : viewport_(viewport), host_window_(host_window), origin_(origin) {
  if (viewport.width <= 0 || viewport.height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "viewport must be non-empty");
  }
}

const DomElement* DomPage::find(const std::string& id) const {
  for (const auto& e : elements_) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

DomElement& DomPage::mutable_element(const std::string& id) {
  for (auto& e : elements_) {
    if (e.id == id) return e;
  }
  throw Error(ErrorCode::kNotFound, "no DOM element '" + id + "'");
}

void DomPage::add_element(DomElement element) {
  if (element.id.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "DOM element id is empty");
  }
  if (find(element.id)) {
    throw Error(ErrorCode::kDuplicate,
                "duplicate DOM element id '" + element.id + "'");
  }
  if (element.bbox.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "DOM element '" + element.id + "' has an empty bbox");
  }
  if (element.texture_seed == 0) element.texture_seed = fnv1a64(element.id);
  elements_.push_back(std::move(element));
}

void DomPage::inject_overlay(DomElement overlay) {
  overlay.display = Display::kHidden;
  add_element(std::move(overlay));
}

void DomPage::activate_overlay(const std::string& id) {
  auto& e = mutable_element(id);
  if (e.display == Display::kVisible) {
    throw Error(ErrorCode::kState, "element '" + id + "' is already visible");
  }
  e.display = Display::kVisible;
}

void DomPage::deactivate_overlay(const std::string& id) {
  mutable_element(id).display = Display::kHidden;
}

std::optional<std::string> dom_hit_test(const DomPage& page, Point c) {
  if (!page.viewport_rect().contains(c)) {
    throw Error(ErrorCode::kOutOfBounds, "coordinate outside the viewport");
  }
  const DomElement* best = nullptr;
  for (const auto& e : page.elements()) {
    if (e.display != Display::kVisible || !e.bbox.contains(c)) continue;
    // >= lets later document order win equal z_index.
    if (!best || e.z_index >= best->z_index) best = &e;
  }
  if (!best) return std::nullopt;
  return best->id;
}

std::optional<BehavioralEvent> dom_click(const DomPage& page,
                                         const std::string& id) {
  const DomElement* e = page.find(id);
  if (!e) throw Error(ErrorCode::kNotFound, "no DOM element '" + id + "'");
  if (e->display != Display::kVisible) {
    throw Error(ErrorCode::kState, "element '" + id + "' is hidden");
  }
  if (!e->form_action) return std::nullopt;
  BehavioralEvent ev;
  ev.kind = BehavioralEvent::Kind::kHttp;
  ev.method = e->form_method.value_or("GET");
  ev.action = *e->form_action;
  return ev;
}

DomFingerprint dom_fingerprint(const DomPage& page, Point c) {
  const auto hit = dom_hit_test(page, c);
  if (!hit) return DomFingerprint::absent();
  const DomElement* e = page.find(*hit);
  DomFingerprint fp;
  fp.present = true;
  fp.element_id = e->id;
  fp.form_action = e->form_action;
  fp.form_method = e->form_method;
  fp.onclick = e->onclick;
  return fp;
}

}  // namespace dtoctou

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
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dtoctou/bench.hpp"

namespace dtoctou {

// A benchmark scenario file after defaults are applied. Geometry is
// authored at 1920x1080 and scaled when the campaign is built.
struct Scenario {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  std::int64_t trials = 15;
  int scale_divisor = 1;
  std::vector<TaskSpec> tasks{builtin_task("browser_placeorder")};
  FixtureOptions fixture;
  AttackScenario attack;
  // Primitive A only; one campaign cell per style and task.
  std::vector<OverlayStyle> styles{OverlayStyle::kFullscreen};
  LatencyModel latency;
  GroundingModel grounding;
  PusvConfig pusv;
  // Unset: 160 px scaled with the screen.
  std::optional<int> patch;
  std::optional<NoiseBurst> noise_burst;
  std::vector<Expectation> expectations;
};

// Command-line values; each one set here wins over the file.
struct ScenarioOverrides {
  std::optional<std::int64_t> trials;
  std::optional<std::uint64_t> seed;
  std::optional<LayerMask> defense;
  std::optional<GroundingModel> grounding;
  std::optional<LatencyModel> latency;
  std::optional<int> scale_divisor;
};

// Strict parse: unknown keys, wrong types and fractional coordinates throw
// Error(kSchema).
Scenario parse_scenario(const nlohmann::json& doc);
Scenario parse_scenario_text(const std::string& text);
// I/O failures throw Error(kIo).
Scenario load_scenario(const std::filesystem::path& path);

void apply_overrides(Scenario& s, const ScenarioOverrides& o);

// Resolved configuration; parse_scenario accepts it back unchanged.
nlohmann::json scenario_to_json(const Scenario& s);

std::vector<Cell> build_cells(const Scenario& s);

// "full" / "quarter" or a positive integer divisor.
int parse_scale(const std::string& s);
// "oracle" or "offset:<lo>,<hi>".
GroundingModel parse_grounding(const std::string& s);
// "fixed:<seconds>" or "lognormal".
LatencyModel parse_gap(const std::string& s);

}  // namespace dtoctou

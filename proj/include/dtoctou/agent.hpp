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

#include <optional>

#include "dtoctou/desktop.hpp"
#include "dtoctou/fixtures.hpp"
#include "dtoctou/frame.hpp"
#include "dtoctou/rng.hpp"

namespace dtoctou {

// Observation-to-action gap, in seconds at the interface and integer
// milliseconds once sampled.
struct LatencyModel {
  enum class Kind { kFixed, kLognormal };
  Kind kind = Kind::kLognormal;
  double fixed_s = 6.5;
  double mean_s = 6.51;
  double std_s = 3.59;
  double min_s = 3.18;
  double max_s = 13.23;
  friend bool operator==(const LatencyModel&, const LatencyModel&) = default;
};

void validate(const LatencyModel& m);

struct LognormalParams {
  double mu = 0.0;
  double sigma = 0.0;
};

// Log-space parameters whose clamp to [min, max] has the requested mean and
// standard deviation. Falls back to plain log-space moment matching when
// the bounded problem has no solution.
LognormalParams fit_clamped_lognormal(double mean, double std, double min,
                                      double max);
// Analytic mean and standard deviation of a clamped lognormal.
std::pair<double, double> clamped_lognormal_moments(LognormalParams p,
                                                    double min, double max);

class LatencySampler {
 public:
  explicit LatencySampler(const LatencyModel& model);
  Millis sample_ms(Rng& rng) const;
  const LognormalParams& params() const { return params_; }

 private:
  LatencyModel model_;
  LognormalParams params_;
  Millis min_ms_ = 0;
  Millis max_ms_ = 0;
};

struct GroundingModel {
  enum class Kind { kOracle, kOffset };
  Kind kind = Kind::kOracle;
  // kOffset: vertical pixel offset from the element centre, inclusive.
  int dy_lo = 0;
  int dy_hi = 0;
  friend bool operator==(const GroundingModel&, const GroundingModel&) = default;
};

void validate(const GroundingModel& m);

struct Action {
  Point c;
  Target intended;
  // Screen box of the intended element in the observed state.
  Rect intended_bbox;
};

// Everything the agent and the verifier remember from T_obs.
struct Observation {
  Millis t_obs = 0;
  PixelFrame frame;
  RegistrySnapshot registry;
  DesktopState state;
};

Observation observe(const DesktopState& state);

// Returns nullopt when the intended element is absent or does not own its
// own centre pixel in the observed state; the agent then does not click.
std::optional<Action> ground(const Observation& obs, const TaskSpec& task,
                             const GroundingModel& model, Rng& rng);

}  // namespace dtoctou

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

#include "dtoctou/agent.hpp"

#include <array>
#include <cmath>

namespace dtoctou {

namespace {

double phi(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

LognormalParams log_space_match(double mean, double std) {
  const double s2 = std::log1p((std * std) / (mean * mean));
  return {std::log(mean) - 0.5 * s2, std::sqrt(s2)};
}

std::array<double, 2> residual(LognormalParams p, double mean, double std,
                               double lo, double hi) {
  const auto [m, s] = clamped_lognormal_moments(p, lo, hi);
  return {m - mean, s - std};
}

}  // namespace

void validate(const LatencyModel& m) {
  if (m.kind == LatencyModel::Kind::kFixed) {
    if (!(m.fixed_s >= 0.002)) {
      throw Error(ErrorCode::kInvalidArgument, "fixed gap must be >= 2 ms");
    }
    return;
  }
  if (!(m.min_s > 0.0 && m.min_s <= m.mean_s && m.mean_s <= m.max_s)) {
    throw Error(ErrorCode::kInvalidArgument,
                "latency bounds must satisfy 0 < min <= mean <= max");
  }
  if (!(m.std_s > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "latency std must be > 0");
  }
}

std::pair<double, double> clamped_lognormal_moments(LognormalParams p,
                                                    double lo, double hi) {
  const double mu = p.mu;
  const double sg = p.sigma;
  const double la = std::log(lo);
  const double lb = std::log(hi);
  const double below = phi((la - mu) / sg);
  const double above = 1.0 - phi((lb - mu) / sg);
  const double s2 = sg * sg;
  const double e1 = std::exp(mu + 0.5 * s2) *
                        (phi((lb - mu - s2) / sg) - phi((la - mu - s2) / sg)) +
                    lo * below + hi * above;
  const double e2 =
      std::exp(2.0 * mu + 2.0 * s2) *
          (phi((lb - mu - 2.0 * s2) / sg) - phi((la - mu - 2.0 * s2) / sg)) +
      lo * lo * below + hi * hi * above;
  return {e1, std::sqrt(std::max(0.0, e2 - e1 * e1))};
}

LognormalParams fit_clamped_lognormal(double mean, double std, double lo,
                                      double hi) {
  const LognormalParams start = log_space_match(mean, std);
  // Newton on (mu, log sigma) with a central-difference Jacobian.
  double mu = start.mu;
  double ls = std::log(start.sigma);
  constexpr double kStep = 1e-6;
  for (int iter = 0; iter < 200; ++iter) {
    const auto r = residual({mu, std::exp(ls)}, mean, std, lo, hi);
    if (std::hypot(r[0], r[1]) < 1e-12) return {mu, std::exp(ls)};
    const auto rmp = residual({mu + kStep, std::exp(ls)}, mean, std, lo, hi);
    const auto rmm = residual({mu - kStep, std::exp(ls)}, mean, std, lo, hi);
    const auto rsp = residual({mu, std::exp(ls + kStep)}, mean, std, lo, hi);
    const auto rsm = residual({mu, std::exp(ls - kStep)}, mean, std, lo, hi);
    const double j00 = (rmp[0] - rmm[0]) / (2 * kStep);
    const double j10 = (rmp[1] - rmm[1]) / (2 * kStep);
    const double j01 = (rsp[0] - rsm[0]) / (2 * kStep);
    const double j11 = (rsp[1] - rsm[1]) / (2 * kStep);
    const double det = j00 * j11 - j01 * j10;
    if (std::abs(det) < 1e-300) break;
    double dmu = (j11 * r[0] - j01 * r[1]) / det;
    double dls = (-j10 * r[0] + j00 * r[1]) / det;
    const double norm = std::hypot(dmu, dls);
    if (norm > 0.5) {
      dmu *= 0.5 / norm;
      dls *= 0.5 / norm;
    }
    mu -= dmu;
    ls -= dls;
    if (!std::isfinite(mu) || !std::isfinite(ls) || ls > 5.0) break;
  }
  const auto r = residual({mu, std::exp(ls)}, mean, std, lo, hi);
  if (std::isfinite(mu) && std::isfinite(ls) && std::hypot(r[0], r[1]) < 1e-9) {
    return {mu, std::exp(ls)};
  }
  return start;
}

LatencySampler::LatencySampler(const LatencyModel& model) : model_(model) {
  validate(model_);
  if (model_.kind == LatencyModel::Kind::kLognormal) {
    params_ = fit_clamped_lognormal(model_.mean_s, model_.std_s, model_.min_s,
                                    model_.max_s);
    min_ms_ = static_cast<Millis>(std::ceil(model_.min_s * 1000.0 - 1e-9));
    max_ms_ = static_cast<Millis>(std::floor(model_.max_s * 1000.0 + 1e-9));
  }
}

Millis LatencySampler::sample_ms(Rng& rng) const {
  if (model_.kind == LatencyModel::Kind::kFixed) {
    return static_cast<Millis>(std::llround(model_.fixed_s * 1000.0));
  }
  const double x = std::exp(params_.mu + params_.sigma * rng.standard_normal());
  const Millis ms = static_cast<Millis>(
      std::llround(std::clamp(x, model_.min_s, model_.max_s) * 1000.0));
  return std::clamp(ms, min_ms_, max_ms_);
}

void validate(const GroundingModel& m) {
  if (m.kind == GroundingModel::Kind::kOffset && m.dy_lo > m.dy_hi) {
    throw Error(ErrorCode::kInvalidArgument, "grounding offset: lo > hi");
  }
}

Observation observe(const DesktopState& state) {
  return {state.clock(), render(state), registry_snapshot(state), state};
}

std::optional<Action> ground(const Observation& obs, const TaskSpec& task,
                             const GroundingModel& model, Rng& rng) {
  const auto bbox = target_screen_rect(obs.state, task.target);
  if (!bbox || bbox->empty()) return std::nullopt;
  const Point center = bbox->center();
  if (!receiver_matches(hit_test(obs.state, center), task.target)) {
    return std::nullopt;
  }
  Point c = center;
  if (model.kind == GroundingModel::Kind::kOffset) {
    const auto dy = rng.uniform_int(model.dy_lo, model.dy_hi);
    const Size s = obs.state.screen();
    c.y = static_cast<int>(
        std::clamp<std::int64_t>(c.y + dy, 0, s.height - 1));
  }
  return Action{c, task.target, *bbox};
}

}  // namespace dtoctou

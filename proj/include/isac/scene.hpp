// SPDX-License-Identifier: Apache-2.0
//
// isac-mts: moving target sensing for OFDM ISAC in clutter.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------


#pragma once

#include <vector>

#include "isac/core.hpp"

namespace isac {

struct Target {
  double theta = 0.0;  // rad
  double range = 1.0;  // m
  double speed = 0.0;  // m/s, radial
  cplx alpha{1.0, 0.0};
};

struct Scatterer {
  double theta = 0.0;
  double range = 1.0;
  cplx alpha{1.0, 0.0};
};

struct Scene {
  std::vector<Target> targets;
  std::vector<Scatterer> scatterers;

  bool empty() const { return targets.empty() && scatterers.empty(); }
};

struct TargetFrequencies {
  double psi_r = 0.0;
  double psi_d = 0.0;
  double psi_s = 0.0;
};

struct ScattererFrequencies {
  double psi_r = 0.0;
  double psi_s = 0.0;
};

inline void validate(const Target& t) {
  require(t.range > 0 && std::abs(t.theta) < pi / 2 && std::isfinite(t.speed), errc::invalid_argument,
          "target needs range > 0 and |theta| < pi/2");
}

inline void validate(const Scatterer& s) {
  require(s.range > 0 && std::abs(s.theta) < pi / 2, errc::invalid_argument,
          "scatterer needs range > 0 and |theta| < pi/2");
}

inline double range_frequency(double range, const SystemConfig& cfg) {
  return 2.0 * range * cfg.delta_f / speed_of_light;
}
inline double doppler_frequency(double speed, const SystemConfig& cfg) {
  return 2.0 * speed * cfg.t_interval() / cfg.wavelength();
}
inline double spatial_frequency(double theta, const SystemConfig& cfg) {
  return cfg.d_spacing * std::sin(theta) / cfg.wavelength();
}

// No wrapping: aliasing is the caller's concern.
inline TargetFrequencies frequencies(const Target& t, const SystemConfig& cfg) {
  return {range_frequency(t.range, cfg), doppler_frequency(t.speed, cfg), spatial_frequency(t.theta, cfg)};
}

inline ScattererFrequencies frequencies(const Scatterer& s, const SystemConfig& cfg) {
  return {range_frequency(s.range, cfg), spatial_frequency(s.theta, cfg)};
}

/// Sampling law for randomized scenes. Defaults reproduce the evaluation setup
/// (2 moving targets, 400 stationary scatterers).
struct SceneSpec {
  int n_targets = 2;
  int n_scatterers = 400;
  double theta_min = deg2rad(-60.0);
  double theta_max = deg2rad(60.0);
  double range_min = 1.0;
  double range_max = 7.0;
  double speed_min = 1.0;
  double speed_max = 4.0;
  double target_alpha_var = 1.0;
  double scatterer_alpha_var = 0.5;
  /// Minimum pairwise target angle separation; 2x the default 2 degree beam step.
  double min_separation = deg2rad(4.0);
  int max_redraws = 1000;
};

/// Draws a scene. Target angles violating the separation are redrawn; the
/// call fails once the total redraw budget is exhausted.
inline Scene generate_scene(const SceneSpec& spec, std::uint64_t seed) {
  require(spec.n_targets >= 0 && spec.n_scatterers >= 0, errc::invalid_argument, "counts must be >= 0");
  require(spec.theta_min < spec.theta_max && spec.range_min > 0 && spec.range_min < spec.range_max &&
              spec.speed_min <= spec.speed_max,
          errc::invalid_argument, "empty sampling support");
  Rng rng(seed);
  std::uniform_real_distribution<double> u_theta(spec.theta_min, spec.theta_max);
  std::uniform_real_distribution<double> u_range(spec.range_min, spec.range_max);
  std::uniform_real_distribution<double> u_speed(spec.speed_min, spec.speed_max);

  Scene scene;
  int redraws = 0;
  for (int i = 0; i < spec.n_targets; ++i) {
    double theta = u_theta(rng);
    auto clashes = [&](double th) {
      for (const auto& t : scene.targets)
        if (std::abs(t.theta - th) <= spec.min_separation) return true;
      return false;
    };
    while (clashes(theta)) {
      require(++redraws <= spec.max_redraws, errc::over_dense_scene,
              "cannot separate " + std::to_string(spec.n_targets) + " targets by the minimum angle");
      theta = u_theta(rng);
    }
    Target t;
    t.theta = theta;
    t.range = u_range(rng);
    t.speed = u_speed(rng);
    t.alpha = complex_normal(rng, spec.target_alpha_var);
    scene.targets.push_back(t);
  }
  for (int i = 0; i < spec.n_scatterers; ++i) {
    Scatterer s;
    s.theta = u_theta(rng);
    s.range = u_range(rng);
    s.alpha = complex_normal(rng, spec.scatterer_alpha_var);
    scene.scatterers.push_back(s);
  }
  return scene;
}

/// Kinematics of the two reference targets (angle deg, range m, speed m/s).
inline constexpr double reference_targets[2][3] = {
    {-48.295, 4.281, 3.911},
    {15.883, 2.670, 1.473},
};

/// Reference scene: the two tabulated targets with unit-magnitude reflection
/// coefficients (random phase) plus randomly drawn scatterers from `spec`.
inline Scene reference_scene(std::uint64_t seed, const SceneSpec& spec = {}) {
  SceneSpec clutter_only = spec;
  clutter_only.n_targets = 0;
  Scene scene = generate_scene(clutter_only, derive_seed(seed, 1));
  Rng rng(derive_seed(seed, 0));
  std::uniform_real_distribution<double> phase(0.0, two_pi);
  for (const auto& row : reference_targets) {
    Target t;
    t.theta = deg2rad(row[0]);
    t.range = row[1];
    t.speed = row[2];
    t.alpha = std::polar(1.0, phase(rng));
    scene.targets.push_back(t);
  }
  return scene;
}

}  // namespace isac

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

#include <optional>
#include <sstream>
#include <vector>

#include "isac/core.hpp"
#include "isac/scene.hpp"
#include "isac/steering.hpp"

namespace isac {

/// Conjugate transmit steering x = a_t*(psi)/sqrt(M_t); mainlobe at theta_tilde.
inline CVec beamformer_weight(double theta_tilde, const SystemConfig& cfg) {
  require(std::abs(theta_tilde) < pi / 2, errc::invalid_argument, "beam direction must satisfy |theta| < pi/2");
  return steering_tx(spatial_frequency(theta_tilde, cfg), cfg.m_tx).conjugate() / std::sqrt(double(cfg.m_tx));
}

/// Scan plan: B beam directions over a sector, each covering the closed
/// interval [theta_b - halfwidth, theta_b + halfwidth].
struct BeamPlan {
  std::vector<double> directions;
  double coverage_halfwidth = 0.0;
  std::vector<CVec> weights;  // constant over subcarriers and symbols

  int size() const { return static_cast<int>(directions.size()); }

  /// Transmit gain a_t^T(psi_s) x_b seen by a reflector at spatial frequency psi_s.
  cplx gain(int b, double psi_s) const {
    const CVec& x = weights.at(b);
    cplx g = 0.0;
    for (Eigen::Index m = 0; m < x.size(); ++m) g += std::polar(1.0, two_pi * double(m) * psi_s) * x[m];
    return g;
  }

  /// d/dpsi_s of gain(b, psi_s).
  cplx gain_derivative(int b, double psi_s) const {
    const CVec& x = weights.at(b);
    cplx g = 0.0;
    for (Eigen::Index m = 0; m < x.size(); ++m)
      g += cplx(0.0, two_pi * double(m)) * std::polar(1.0, two_pi * double(m) * psi_s) * x[m];
    return g;
  }

  bool covers(int b, double theta) const {
    return std::abs(theta - directions.at(b)) <= coverage_halfwidth * (1.0 + 1e-12) + 1e-15;
  }

  /// Lowest-index beam whose coverage contains theta (shared boundaries go to the lower b).
  std::optional<int> beam_of(double theta) const {
    for (int b = 0; b < size(); ++b)
      if (covers(b, theta)) return b;
    return std::nullopt;
  }

  /// All beams whose coverage contains theta.
  std::vector<int> covering_beams(double theta) const {
    std::vector<int> out;
    for (int b = 0; b < size(); ++b)
      if (covers(b, theta)) out.push_back(b);
    return out;
  }

  /// Indices of scatterers inside the coverage of beam b.
  std::vector<int> scatterers_in(int b, const Scene& scene) const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(scene.scatterers.size()); ++i)
      if (covers(b, scene.scatterers[i].theta)) out.push_back(i);
    return out;
  }

  double step() const { return size() > 1 ? directions[1] - directions[0] : 2.0 * coverage_halfwidth; }
};

/// Uniform scan over [lo, hi] (radians).
inline BeamPlan make_scan_plan(const SystemConfig& cfg, double lo, double hi, int n_beams) {
  require(n_beams >= 1, errc::invalid_argument, "need at least one beam");
  require(lo <= hi && (lo < hi || n_beams == 1), errc::invalid_argument, "sector must satisfy lo < hi");
  require(std::abs(lo) < pi / 2 && std::abs(hi) < pi / 2, errc::invalid_argument, "sector must lie inside (-pi/2, pi/2)");
  BeamPlan plan;
  if (n_beams == 1) {
    plan.directions = {0.5 * (lo + hi)};
    plan.coverage_halfwidth = 0.5 * (hi - lo);
  } else {
    const double step = (hi - lo) / (n_beams - 1);
    for (int b = 0; b < n_beams; ++b) plan.directions.push_back(b + 1 == n_beams ? hi : lo + b * step);
    plan.coverage_halfwidth = 0.5 * step;
  }
  for (double th : plan.directions) plan.weights.push_back(beamformer_weight(th, cfg));
  return plan;
}

/// Default plan: 61 beams over +-60 degrees (2 degree steps).
inline BeamPlan default_scan_plan(const SystemConfig& cfg) {
  return make_scan_plan(cfg, deg2rad(-60.0), deg2rad(60.0), 61);
}

inline constexpr double default_gain_floor = 1e-9;

/// Known normalization gain a_t^T(psi_tilde_b) x_b. Weights do not vary with
/// (l, p), so neither does the result.
inline cplx g_tilde(const BeamPlan& plan, int b, const SystemConfig& cfg, double floor = default_gain_floor) {
  require(b >= 0 && b < plan.size(), errc::invalid_argument, "scan index out of range");
  const cplx g = plan.gain(b, spatial_frequency(plan.directions[b], cfg));
  require(std::abs(g) >= floor, errc::gain_floor, "beam gain below floor at scan " + std::to_string(b));
  return g;
}

inline cplx g_tilde(const BeamPlan& plan, int b, int l, int p, const SystemConfig& cfg,
                    double floor = default_gain_floor) {
  require(l >= 0 && l < cfg.n_sub && p >= 0 && p < cfg.n_sym, errc::invalid_argument, "(l, p) out of range");
  return g_tilde(plan, b, cfg, floor);
}

/// CSV: b,theta_deg,halfwidth_deg
inline std::string plan_csv(const BeamPlan& plan) {
  std::ostringstream os;
  os.precision(10);
  os << "b,theta_deg,halfwidth_deg\n";
  for (int b = 0; b < plan.size(); ++b)
    os << b << ',' << rad2deg(plan.directions[b]) << ',' << rad2deg(plan.coverage_halfwidth) << '\n';
  return os.str();
}

}  // namespace isac

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

#include <Eigen/Eigenvalues>

#include <optional>
#include <vector>

#include "isac/beams.hpp"
#include "isac/core.hpp"
#include "isac/scene.hpp"
#include "isac/steering.hpp"

namespace isac {

// Parameter ordering used throughout:
//   eta   = [theta_t (N_t), r_t (N_t), v_t (N_t), theta_s (N_s), r_s (N_s)]
//   alpha = [alpha_t (N_t), alpha_s (N_s)], real parts then imaginary parts in the FIM.

struct ElementRef {
  enum class Kind { target, scatterer } kind = Kind::target;
  int index = 0;
};

/// Response columns are separable over (m_r, l, p): spatial (x) range (x) doppler.
struct SeparableColumn {
  CVec spatial;  // M_r
  CVec range;    // L
  CVec doppler;  // P
};

namespace detail {

struct ElementFactors {
  CVec spatial, spatial_dtheta;  // g * a_sr and its theta derivative
  CVec range, range_dr;
  CVec doppler, doppler_dv;  // all-ones / zeros for scatterers
};

inline ElementFactors element_factors(double theta, double range, std::optional<double> speed, const BeamPlan& plan,
                                      int b, const SystemConfig& cfg) {
  ElementFactors f;
  const double psi_s = spatial_frequency(theta, cfg);
  const double dpsi_s = cfg.d_spacing * std::cos(theta) / cfg.wavelength();
  const cplx g = plan.gain(b, psi_s);
  const cplx dg = plan.gain_derivative(b, psi_s);
  const CVec a = steering_rx(psi_s, cfg.m_rx);
  f.spatial = g * a;
  f.spatial_dtheta = dpsi_s * (dg * a + g * steering_derivative(psi_s, cfg.m_rx, +1));
  const double psi_r = range_frequency(range, cfg);
  f.range = steering_range(psi_r, cfg.n_sub);
  f.range_dr = (2.0 * cfg.delta_f / speed_of_light) * steering_derivative(psi_r, cfg.n_sub, -1);
  if (speed) {
    const double psi_d = doppler_frequency(*speed, cfg);
    f.doppler = steering_doppler(psi_d, cfg.n_sym);
    f.doppler_dv = (2.0 * cfg.t_interval() / cfg.wavelength()) * steering_derivative(psi_d, cfg.n_sym, +1);
  } else {
    f.doppler = CVec::Ones(cfg.n_sym);
    f.doppler_dv = CVec::Zero(cfg.n_sym);
  }
  return f;
}

inline ElementFactors element_factors(const ElementRef& e, const Scene& scene, const BeamPlan& plan, int b,
                                      const SystemConfig& cfg) {
  if (e.kind == ElementRef::Kind::target) {
    const auto& t = scene.targets.at(e.index);
    return element_factors(t.theta, t.range, t.speed, plan, b, cfg);
  }
  const auto& s = scene.scatterers.at(e.index);
  return element_factors(s.theta, s.range, std::nullopt, plan, b, cfg);
}

/// (sum_{l,p} X_i^H Y_j) for separable column sets: Hadamard product of the
/// three factor Gram matrices.
inline CMat separable_gram(const std::vector<SeparableColumn>& x, const std::vector<SeparableColumn>& y) {
  auto stack = [](const std::vector<SeparableColumn>& cols, auto member) {
    if (cols.empty()) return CMat();
    CMat out((cols.front().*member).size(), static_cast<Eigen::Index>(cols.size()));
    for (size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = cols[k].*member;
    return out;
  };
  if (x.empty() || y.empty()) return CMat::Zero(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(y.size()));
  const CMat gs = stack(x, &SeparableColumn::spatial).adjoint() * stack(y, &SeparableColumn::spatial);
  const CMat gr = stack(x, &SeparableColumn::range).adjoint() * stack(y, &SeparableColumn::range);
  const CMat gd = stack(x, &SeparableColumn::doppler).adjoint() * stack(y, &SeparableColumn::doppler);
  return gs.cwiseProduct(gr).cwiseProduct(gd);
}

/// Moore-Penrose inverse of a symmetric matrix; eigenvalues below
/// rtol * max|eig| are treated as zero.
inline RMat pinv_symmetric(const RMat& m, double rtol = 1e-10) {
  if (m.size() == 0) return m;
  Eigen::SelfAdjointEigenSolver<RMat> es(0.5 * (m + m.transpose()));
  const RVec& ev = es.eigenvalues();
  const double cut = rtol * ev.cwiseAbs().maxCoeff();
  RVec inv = RVec::Zero(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (std::abs(ev[i]) > cut) inv[i] = 1.0 / ev[i];
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

/// a_{b,n,l,p} = a_d a_r g a_sr (a_d == 1 for scatterers), without alpha.
inline CVec response_vector(int b, const ElementRef& e, int l, int p, const Scene& scene, const BeamPlan& plan,
                            const SystemConfig& cfg) {
  const auto f = detail::element_factors(e, scene, plan, b, cfg);
  return (f.range[l] * f.doppler[p]) * f.spatial;
}

struct DerivativeMatrices {
  CMat targets;     // M_r x 3 N_t: d/dtheta, d/dr, d/dv blocks
  CMat scatterers;  // M_r x 2 N_s: d/dtheta, d/dr blocks
};

/// Partial derivatives of each response column w.r.t. its own parameters.
inline DerivativeMatrices derivative_matrices(int b, int l, int p, const Scene& scene, const BeamPlan& plan,
                                              const SystemConfig& cfg) {
  const auto nt = static_cast<int>(scene.targets.size());
  const auto ns = static_cast<int>(scene.scatterers.size());
  DerivativeMatrices d{CMat(cfg.m_rx, 3 * nt), CMat(cfg.m_rx, 2 * ns)};
  for (int i = 0; i < nt; ++i) {
    const auto f = detail::element_factors({ElementRef::Kind::target, i}, scene, plan, b, cfg);
    d.targets.col(i) = (f.range[l] * f.doppler[p]) * f.spatial_dtheta;
    d.targets.col(nt + i) = (f.range_dr[l] * f.doppler[p]) * f.spatial;
    d.targets.col(2 * nt + i) = (f.range[l] * f.doppler_dv[p]) * f.spatial;
  }
  for (int i = 0; i < ns; ++i) {
    const auto f = detail::element_factors({ElementRef::Kind::scatterer, i}, scene, plan, b, cfg);
    d.scatterers.col(i) = f.range[l] * f.spatial_dtheta;
    d.scatterers.col(ns + i) = f.range_dr[l] * f.spatial;
  }
  return d;
}

struct FimBlocks {
  RMat f1;  // eta x eta
  RMat f2;  // eta x [Re alpha, Im alpha]
  RMat f3;  // [Re alpha, Im alpha]^2
  double sigma2 = 1.0;
  // The same blocks without the 2 / sigma^2 factor; the CRB is formed from
  // these so that it scales exactly with sigma^2.
  RMat u1, u2, u3;
  int n_targets = 0;
  int n_scatterers = 0;

  /// Full FIM over [eta, Re alpha, Im alpha] (sigma^2 decouples and is omitted).
  RMat assembled() const {
    const auto k1 = f1.rows(), k2 = f3.rows();
    RMat full(k1 + k2, k1 + k2);
    full << f1, f2, f2.transpose(), f3;
    return full;
  }
};

/// Separable columns of J1 = [A_t' D_alpha_t, A_s' D_alpha_s] and of A.
inline void jacobian_columns(int b, const Scene& scene, const BeamPlan& plan, const SystemConfig& cfg,
                             std::vector<SeparableColumn>& j1, std::vector<SeparableColumn>& a) {
  const auto nt = static_cast<int>(scene.targets.size());
  const auto ns = static_cast<int>(scene.scatterers.size());
  j1.assign(static_cast<size_t>(3 * nt + 2 * ns), {});
  a.assign(static_cast<size_t>(nt + ns), {});
  for (int i = 0; i < nt; ++i) {
    const auto f = detail::element_factors({ElementRef::Kind::target, i}, scene, plan, b, cfg);
    const cplx al = scene.targets[i].alpha;
    j1[i] = {al * f.spatial_dtheta, f.range, f.doppler};
    j1[nt + i] = {al * f.spatial, f.range_dr, f.doppler};
    j1[2 * nt + i] = {al * f.spatial, f.range, f.doppler_dv};
    a[i] = {f.spatial, f.range, f.doppler};
  }
  for (int i = 0; i < ns; ++i) {
    const auto f = detail::element_factors({ElementRef::Kind::scatterer, i}, scene, plan, b, cfg);
    const cplx al = scene.scatterers[i].alpha;
    j1[3 * nt + i] = {al * f.spatial_dtheta, f.range, f.doppler};
    j1[3 * nt + ns + i] = {al * f.spatial, f.range_dr, f.doppler};
    a[nt + i] = {f.spatial, f.range, f.doppler};
  }
}

inline FimBlocks fim_blocks(int b, const Scene& scene, const BeamPlan& plan, const SystemConfig& cfg) {
  require(cfg.noise_var > 0.0, errc::invalid_argument, "Fisher information needs sigma^2 > 0");
  std::vector<SeparableColumn> j1, a;
  jacobian_columns(b, scene, plan, cfg, j1, a);
  const double scale = 2.0 / cfg.noise_var;
  const CMat g11 = detail::separable_gram(j1, j1);
  const CMat g1a = detail::separable_gram(j1, a);
  const CMat gaa = detail::separable_gram(a, a);

  FimBlocks out;
  out.sigma2 = cfg.noise_var;
  out.n_targets = static_cast<int>(scene.targets.size());
  out.n_scatterers = static_cast<int>(scene.scatterers.size());
  out.u1 = g11.real();
  out.u1 = 0.5 * (out.u1 + out.u1.transpose()).eval();
  out.u2.resize(g1a.rows(), 2 * g1a.cols());
  out.u2 << g1a.real(), -g1a.imag();
  const auto n = gaa.rows();
  out.u3.resize(2 * n, 2 * n);
  out.u3 << gaa.real(), -gaa.imag(), gaa.imag(), gaa.real();
  out.u3 = 0.5 * (out.u3 + out.u3.transpose()).eval();
  out.f1 = scale * out.u1;
  out.f2 = scale * out.u2;
  out.f3 = scale * out.u3;
  return out;
}

/// F_{sigma^2, sigma^2} = M_r L P / sigma^4.
inline double fim_noise_variance(const SystemConfig& cfg) {
  return cfg.observations() / (cfg.noise_var * cfg.noise_var);
}

struct CrbResult {
  RMat crb;  // 3 N_t x 3 N_t, ordering [theta..., r..., v...]
  int n_targets = 0;

  double var_theta(int i) const { return crb(i, i); }
  double var_range(int i) const { return crb(n_targets + i, n_targets + i); }
  double var_speed(int i) const { return crb(2 * n_targets + i, 2 * n_targets + i); }
  RVec std_dev() const { return crb.diagonal().cwiseMax(0.0).cwiseSqrt(); }
};

/// Effective information S = f1 - f2 f3^+ f2^T; the CRB is the leading
/// 3 N_t block of S^{-1}, taken as the inverse of the Schur complement of
/// the scatterer-kinematics block so that weakly identified nuisance
/// directions (pseudo-inverted) cannot poison the target block.
inline CrbResult crb_eta_t(const FimBlocks& blocks, int n_targets) {
  const auto k = blocks.f1.rows();
  const int kt = 3 * n_targets;
  require(n_targets >= 1 && kt <= k, errc::invalid_argument, "target count inconsistent with FIM blocks");
  const bool unit = blocks.u1.size() > 0;
  const RMat& f1 = unit ? blocks.u1 : blocks.f1;
  const RMat& f2 = unit ? blocks.u2 : blocks.f2;
  const RMat& f3 = unit ? blocks.u3 : blocks.f3;
  RMat s = f1;
  if (f3.size() > 0) s -= f2 * detail::pinv_symmetric(f3) * f2.transpose();
  s = 0.5 * (s + s.transpose()).eval();
  RMat eff = s.topLeftCorner(kt, kt);
  if (k > kt) {
    const RMat sts = s.topRightCorner(kt, k - kt);
    eff -= sts * detail::pinv_symmetric(s.bottomRightCorner(k - kt, k - kt)) * sts.transpose();
  }
  eff = 0.5 * (eff + eff.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<RMat> es(eff);
  const RVec& ev = es.eigenvalues();
  require(ev.minCoeff() > 1e-13 * ev.cwiseAbs().maxCoeff() && ev.minCoeff() > 0.0, errc::singular_information,
          "effective Fisher information for target parameters is singular");
  CrbResult out;
  out.n_targets = n_targets;
  out.crb = es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  if (unit) out.crb *= 0.5 * blocks.sigma2;
  return out;
}

}  // namespace isac

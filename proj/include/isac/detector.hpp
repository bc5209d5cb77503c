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

#include <Eigen/SVD>

#include <algorithm>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

#include "isac/beams.hpp"
#include "isac/core.hpp"
#include "isac/echo.hpp"
#include "isac/parallel.hpp"
#include "isac/scene.hpp"
#include "isac/steering.hpp"

namespace isac {

/// Range-spatial frequency grid (psi_r, psi_s) sampled inside a beam's coverage.
struct DetectionGrid {
  std::vector<std::pair<double, double>> points;
  int scan = 0;

  int size() const { return static_cast<int>(points.size()); }
};

struct GridSpec {
  int n_range = 8;
  int n_angle = 4;
  double range_max = 7.0;  // m
};

inline std::vector<double> linspace_or_center(double lo, double hi, int n) {
  std::vector<double> v;
  if (n == 1) return {0.5 * (lo + hi)};
  for (int i = 0; i < n; ++i) v.push_back(i + 1 == n ? hi : lo + (hi - lo) * i / (n - 1));
  return v;
}

/// Uniform tensor grid: psi_r over [0, psi_r(range_max)], psi_s over the
/// frequency image of the beam coverage. Point index = i_range * n_angle + i_angle.
inline DetectionGrid sample_grid(int b, const BeamPlan& plan, const SystemConfig& cfg, const GridSpec& spec = {}) {
  require(b >= 0 && b < plan.size(), errc::invalid_argument, "scan index out of range");
  require(spec.n_range >= 1 && spec.n_angle >= 1 && spec.range_max > 0, errc::invalid_argument,
          "grid sizes must be >= 1");
  require(static_cast<long long>(spec.n_range) * spec.n_angle < cfg.observations(), errc::dof_violation,
          "clutter grid leaves no residual degrees of freedom");
  const double th = plan.directions[b], hw = plan.coverage_halfwidth;
  const double lo_s = spatial_frequency(std::max(th - hw, -pi / 2), cfg);
  const double hi_s = spatial_frequency(std::min(th + hw, pi / 2), cfg);
  DetectionGrid grid;
  grid.scan = b;
  for (double pr : linspace_or_center(0.0, range_frequency(spec.range_max, cfg), spec.n_range))
    for (double ps : linspace_or_center(lo_s, hi_s, spec.n_angle)) grid.points.emplace_back(pr, ps);
  return grid;
}

/// A_tilde_{b,l,p}: column n = g_tilde e^{-j2pi l psi_r} a_sr(psi_s). Independent of p.
inline CMat clutter_basis(const DetectionGrid& grid, int b, int l, int p, const BeamPlan& plan,
                          const SystemConfig& cfg) {
  require(l >= 0 && l < cfg.n_sub && p >= 0 && p < cfg.n_sym, errc::invalid_argument, "(l, p) out of range");
  const cplx g = g_tilde(plan, b, cfg);
  CMat a(cfg.m_rx, grid.size());
  for (int n = 0; n < grid.size(); ++n) {
    const auto [pr, ps] = grid.points[n];
    a.col(n) = (g * std::polar(1.0, -two_pi * l * pr)) * steering_rx(ps, cfg.m_rx);
  }
  return a;
}

/// Orthonormal basis of the column space of A (rank cut at rtol * s_max).
inline CMat column_space(const CMat& a, double rtol = 1e-10) {
  if (a.cols() == 0 || a.norm() == 0.0) return CMat(a.rows(), 0);
  Eigen::BDCSVD<CMat> svd(a, Eigen::ComputeThinU);
  const RVec& s = svd.singularValues();
  int r = 0;
  while (r < s.size() && s[r] > rtol * s[0]) ++r;
  return svd.matrixU().leftCols(r);
}

/// P_perp = I - A (A^H A)^+ A^H, evaluated through an orthonormal basis of range(A).
inline CMat perp_projector(const CMat& a) {
  const CMat u = column_space(a);
  return CMat::Identity(a.rows(), a.rows()) - u * u.adjoint();
}

struct Candidate {
  double psi_d = 0.0;
  double psi_r = 0.0;
  double psi_s = 0.0;
};

/// Stacked target steering a_{b,l,p} over all (l, p), in EchoTensor layout.
inline CVec candidate_steering(const Candidate& c, cplx g, const SystemConfig& cfg) {
  const CVec as = steering_rx(c.psi_s, cfg.m_rx);
  CVec out(cfg.observations());
  for (int p = 0; p < cfg.n_sym; ++p)
    for (int l = 0; l < cfg.n_sub; ++l) {
      const cplx ph = g * std::polar(1.0, two_pi * (p * c.psi_d - l * c.psi_r));
      out.segment((static_cast<Eigen::Index>(p) * cfg.n_sub + l) * cfg.m_rx, cfg.m_rx) = ph * as;
    }
  return out;
}

struct GlrOutcome {
  double t = 0.0;
  double gamma = std::numeric_limits<double>::quiet_NaN();
  bool decision = false;
  bool undetectable = false;  // candidate lies (numerically) inside the clutter subspace
  double sigma2_h0 = 0.0;
  double sigma2_h1 = 0.0;
  cplx alpha_hat{0.0, 0.0};
  CVec clutter_h0;  // clutter coefficient estimate under H0
  CVec clutter_h1;  // ... and under H1
};

/// Generalized likelihood ratio detector against the sampled clutter
/// subspace of one beam. The clutter and target amplitudes are shared by all
/// (l, p), so the projector acts on the stacked M_r L P observation.
class GlrDetector {
 public:
  GlrDetector(const DetectionGrid& grid, const BeamPlan& plan, const SystemConfig& cfg)
      : cfg_(cfg), scan_(grid.scan), g_(g_tilde(plan, grid.scan, cfg)) {
    const int n = cfg.observations();
    CMat basis(n, grid.size());
    for (int k = 0; k < grid.size(); ++k) {
      const auto [pr, ps] = grid.points[k];
      const CVec as = steering_rx(ps, cfg.m_rx);
      for (int p = 0; p < cfg.n_sym; ++p)
        for (int l = 0; l < cfg.n_sub; ++l)
          basis.col(k).segment((static_cast<Eigen::Index>(p) * cfg.n_sub + l) * cfg.m_rx, cfg.m_rx) =
              (g_ * std::polar(1.0, -two_pi * l * pr)) * as;
    }
    Eigen::BDCSVD<CMat> svd(basis, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RVec& s = svd.singularValues();
    int r = 0;
    while (r < s.size() && s[0] > 0 && s[r] > 1e-10 * s[0]) ++r;
    u_ = svd.matrixU().leftCols(r);
    // A^+ = V S^-1 U^H on the retained rank.
    pinv_right_ = svd.matrixV().leftCols(r) * s.head(r).cwiseInverse().asDiagonal();
  }

  int scan() const { return scan_; }
  int clutter_rank() const { return static_cast<int>(u_.cols()); }
  /// Residual dimension K = M_r L P - rank(A_tilde).
  int residual_dof() const { return cfg_.observations() - clutter_rank(); }

  CVec project_out(const CVec& v) const { return v - u_ * (u_.adjoint() * v); }

  GlrOutcome evaluate(const EchoTensor& y, const Candidate& c) const {
    require(y.matches(cfg_), errc::invalid_argument, "echo shape does not match configuration");
    require(std::isfinite(c.psi_d) && std::isfinite(c.psi_r) && std::isfinite(c.psi_s), errc::invalid_argument,
            "candidate frequencies must be finite");
    const double n = cfg_.observations();
    const CVec yv = y.flat();
    const CVec a = candidate_steering(c, g_, cfg_);
    const CVec ry = project_out(yv);
    const CVec ra = project_out(a);

    GlrOutcome out;
    out.clutter_h0 = pinv_right_ * (u_.adjoint() * yv);
    const double res_y = ry.squaredNorm();
    const double den = ra.squaredNorm();
    out.sigma2_h0 = res_y / n;
    if (den < 1e-12 * a.squaredNorm()) {
      out.undetectable = true;
      out.sigma2_h1 = out.sigma2_h0;
      out.clutter_h1 = out.clutter_h0;
      return out;
    }
    const cplx cross = ra.dot(ry);  // a^H P y
    out.alpha_hat = cross / den;
    out.clutter_h1 = pinv_right_ * (u_.adjoint() * (yv - out.alpha_hat * a));
    const double num = std::norm(cross);
    if (res_y <= 1e-20 * std::max(yv.squaredNorm(), std::numeric_limits<double>::min())) {
      // Zero residual: the data are explained by clutter alone.
      out.sigma2_h0 = 0.0;
      out.sigma2_h1 = 0.0;
      out.t = 0.0;
      return out;
    }
    out.sigma2_h1 = std::max(0.0, out.sigma2_h0 - num / (n * den));
    out.t = num / (n * out.sigma2_h0 * den);
    return out;
  }

 private:
  SystemConfig cfg_;
  int scan_ = 0;
  cplx g_;
  CMat u_;
  CMat pinv_right_;
};

inline GlrOutcome glr_statistic(const EchoTensor& y, const Candidate& c, const DetectionGrid& grid,
                                const BeamPlan& plan, const SystemConfig& cfg) {
  return GlrDetector(grid, plan, cfg).evaluate(y, c);
}

/// Per-snapshot form: separate projectors and amplitudes for every (l, p),
/// amplitudes combined as a sum of per-snapshot ratios. The clutter basis
/// is p-independent, so one projector per l is formed.
inline GlrOutcome glr_statistic_per_snapshot(const EchoTensor& y, const Candidate& c, const DetectionGrid& grid,
                                             const BeamPlan& plan, const SystemConfig& cfg) {
  require(y.matches(cfg), errc::invalid_argument, "echo shape does not match configuration");
  const double n = cfg.observations();
  const cplx g = g_tilde(plan, grid.scan, cfg);
  const CVec as = steering_rx(c.psi_s, cfg.m_rx);
  GlrOutcome out;
  out.clutter_h0 = CVec::Zero(grid.size());
  double res = 0.0, ratio_sum = 0.0;
  cplx alpha_sum = 0.0;
  std::vector<CMat> pinv_per_l;
  for (int l = 0; l < cfg.n_sub; ++l) {
    const CMat at = clutter_basis(grid, grid.scan, l, 0, plan, cfg);
    const CMat proj = perp_projector(at);
    pinv_per_l.push_back(at.completeOrthogonalDecomposition().pseudoInverse());
    for (int p = 0; p < cfg.n_sym; ++p) {
      const CVec yl = y.snapshot(l, p);
      const CVec a = (g * std::polar(1.0, two_pi * (p * c.psi_d - l * c.psi_r))) * as;
      const CVec py = proj * yl;
      const CVec pa = proj * a;
      const double den = pa.dot(a).real();
      if (den < 1e-12 * a.squaredNorm()) out.undetectable = true;
      const cplx cross = pa.dot(yl);
      res += py.dot(yl).real();
      if (!out.undetectable) {
        ratio_sum += std::norm(cross) / den;
        alpha_sum += cross / den;
      }
      out.clutter_h0 += pinv_per_l.back() * yl;
    }
  }
  out.sigma2_h0 = res / n;
  if (out.undetectable) {
    out.sigma2_h1 = out.sigma2_h0;
    out.clutter_h1 = out.clutter_h0;
    return out;
  }
  out.alpha_hat = alpha_sum;
  out.sigma2_h1 = std::max(0.0, out.sigma2_h0 - ratio_sum / n);
  out.clutter_h1 = CVec::Zero(grid.size());
  for (int l = 0; l < cfg.n_sub; ++l)
    for (int p = 0; p < cfg.n_sym; ++p) {
      const CVec a = (g * std::polar(1.0, two_pi * (p * c.psi_d - l * c.psi_r))) * as;
      out.clutter_h1 += pinv_per_l[l] * (CVec(y.snapshot(l, p)) - out.alpha_hat * a);
    }
  if (res <= 1e-20 * std::max(y.energy(), std::numeric_limits<double>::min())) {
    out.t = ratio_sum > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return out;
  }
  out.t = ratio_sum / (n * out.sigma2_h0);
  return out;
}

/// t > gamma declares a target.
inline bool detect(const GlrOutcome& o, double gamma) {
  require(gamma > 0.0, errc::invalid_argument, "detection threshold must be positive");
  return !o.undetectable && o.t > gamma;
}

inline GlrOutcome& apply_threshold(GlrOutcome& o, double gamma) {
  o.gamma = gamma;
  o.decision = detect(o, gamma);
  return o;
}

/// Under H0 with clutter inside the sampled subspace and white noise,
/// t ~ Beta(1, K - 1), so P(t > gamma) = (1 - gamma)^(K - 1).
inline double threshold_for_pfa(double p_fa, int residual_dof) {
  require(p_fa > 0.0 && p_fa < 1.0, errc::invalid_argument, "P_FA must be in (0, 1)");
  require(residual_dof >= 2, errc::dof_violation, "need at least two residual degrees of freedom");
  return -std::expm1(std::log(p_fa) / (residual_dof - 1));
}

inline double false_alarm_probability(double gamma, int residual_dof) {
  if (gamma <= 0.0) return 1.0;
  if (gamma >= 1.0) return 0.0;
  return std::exp((residual_dof - 1) * std::log1p(-gamma));
}

/// Empirical threshold from H0 samples: at most floor(p_fa * n) samples exceed it.
inline double calibrate_threshold(std::vector<double> h0_samples, double p_fa) {
  require(!h0_samples.empty(), errc::invalid_argument, "need H0 samples");
  require(p_fa > 0.0 && p_fa < 1.0, errc::invalid_argument, "P_FA must be in (0, 1)");
  std::sort(h0_samples.begin(), h0_samples.end());
  const auto n = h0_samples.size();
  const auto k = static_cast<size_t>(std::floor(p_fa * double(n)));
  return h0_samples[n - 1 - std::min(k, n - 1)];
}

// ---- ROC ----------------------------------------------------------------

struct RocPoint {
  double gamma = 0.0;
  double p_fa = 0.0;
  double p_d = 0.0;
};

struct RocCurve {
  double snr_db = 0.0;
  std::vector<RocPoint> points;  // ascending p_fa
};

/// Threshold sweep: every H0 sample (where the empirical P_FA changes, so
/// the curve is exact at each achievable P_FA) plus n_thresholds quantiles
/// of the pooled statistics. Monotone by construction, with the (0, 0) and
/// (1, 1) endpoints.
inline RocCurve roc_from_samples(const std::vector<double>& h0, const std::vector<double>& h1, int n_thresholds,
                                 double snr_db = 0.0) {
  require(!h0.empty() && !h1.empty(), errc::invalid_argument, "need samples under both hypotheses");
  std::vector<double> pooled(h0);
  pooled.insert(pooled.end(), h1.begin(), h1.end());
  std::sort(pooled.begin(), pooled.end());
  std::vector<double> gammas(h0);
  gammas.push_back(-std::numeric_limits<double>::infinity());
  const int nt = std::max(n_thresholds, 2);
  for (int i = 0; i < nt; ++i) {
    const auto idx = static_cast<size_t>(std::llround(double(i) * double(pooled.size() - 1) / (nt - 1)));
    gammas.push_back(pooled[idx]);
  }
  gammas.push_back(std::numeric_limits<double>::infinity());
  std::sort(gammas.begin(), gammas.end());
  gammas.erase(std::unique(gammas.begin(), gammas.end()), gammas.end());

  auto frac_above = [](const std::vector<double>& v, double g) {
    return double(std::count_if(v.begin(), v.end(), [g](double t) { return t > g; })) / double(v.size());
  };
  RocCurve curve;
  curve.snr_db = snr_db;
  for (auto it = gammas.rbegin(); it != gammas.rend(); ++it)
    curve.points.push_back({*it, frac_above(h0, *it), frac_above(h1, *it)});
  return curve;
}

/// Best P_D achievable at false-alarm rate <= p_fa.
inline double roc_pd_at(const RocCurve& curve, double p_fa) {
  double best = 0.0;
  for (const auto& pt : curve.points)
    if (pt.p_fa <= p_fa + 1e-15) best = std::max(best, pt.p_d);
  return best;
}

struct RocSpec {
  int scan = 0;
  Candidate candidate;
  GridSpec grid;
  std::vector<double> snr_db{-30.0, -20.0, -10.0};
  int n_trials = 500;
  int n_thresholds = 200;
  std::uint64_t seed = 1;
  int threads = 1;
};

/// Monte-Carlo ROC per SNR; H0/H1 share the beam, grid and tested candidate
/// and differ only in their scene.
inline std::vector<RocCurve> roc_curve(const Scene& scene_h0, const Scene& scene_h1, SystemConfig cfg,
                                       const BeamPlan& plan, const RocSpec& spec) {
  require(spec.n_trials >= 1, errc::invalid_argument, "need at least one trial");
  const GlrDetector det(sample_grid(spec.scan, plan, cfg, spec.grid), plan, cfg);
  const EchoTensor clean0 = synthesize_clean(scene_h0, plan, spec.scan, cfg);
  const EchoTensor clean1 = synthesize_clean(scene_h1, plan, spec.scan, cfg);
  std::vector<RocCurve> out;
  for (size_t si = 0; si < spec.snr_db.size(); ++si) {
    const double var = snr_db_to_noise_var(spec.snr_db[si]);
    std::vector<double> t0(static_cast<size_t>(spec.n_trials)), t1(t0.size());
    parallel_for(spec.n_trials, spec.threads, [&](int k) {
      const std::uint64_t base = derive_seed(derive_seed(spec.seed, si), static_cast<std::uint64_t>(k));
      EchoTensor y0 = clean0, y1 = clean1;
      add_noise(y0, var, derive_seed(base, 0));
      add_noise(y1, var, derive_seed(base, 1));
      t0[k] = det.evaluate(y0, spec.candidate).t;
      t1[k] = det.evaluate(y1, spec.candidate).t;
    });
    out.push_back(roc_from_samples(t0, t1, spec.n_thresholds, spec.snr_db[si]));
  }
  return out;
}

/// CSV: snr_db,gamma,p_fa,p_d
inline std::string roc_csv(const std::vector<RocCurve>& curves) {
  std::ostringstream os;
  os.precision(12);
  os << "snr_db,gamma,p_fa,p_d\n";
  for (const auto& c : curves)
    for (const auto& pt : c.points) os << c.snr_db << ',' << pt.gamma << ',' << pt.p_fa << ',' << pt.p_d << '\n';
  return os.str();
}

}  // namespace isac

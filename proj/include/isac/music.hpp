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
#include <Eigen/SVD>

#include <optional>
#include <sstream>
#include <vector>

#include "isac/core.hpp"
#include "isac/echo.hpp"
#include "isac/poly.hpp"

namespace isac {

enum class Axis { spatial, range, doppler };

/// M x I matrix of snapshots sharing one sinusoid; the steering exponent is
/// positive for spatial/Doppler and negative for range.
struct SnapshotMatrix {
  CMat data;
  Axis axis = Axis::spatial;

  int sign() const { return axis == Axis::range ? -1 : +1; }
};

/// Eigenvectors of R = F F^H / I for the M-1 smallest eigenvalues.
inline CMat noise_subspace(const CMat& f) {
  require(f.rows() >= 2 && f.cols() >= 2, errc::invalid_argument, "snapshot matrix must be at least 2 x 2");
  const CMat r = f * f.adjoint() / double(f.cols());
  require(r.allFinite(), errc::degenerate_subspace, "sample covariance is not finite");
  Eigen::SelfAdjointEigenSolver<CMat> es(r);
  require(es.info() == Eigen::Success, errc::degenerate_subspace, "covariance eigendecomposition failed");
  return es.eigenvectors().leftCols(f.rows() - 1);
}

inline CMat noise_subspace(const SnapshotMatrix& f) { return noise_subspace(f.data); }

/// Coefficients (highest degree first) of z^{M-1} p^H(z) C p(z): the k-th
/// diagonal sum of C multiplies z^{k + M - 1}.
/// C is Hermitian-symmetrized first so that the coefficients are exact
/// conjugates of each other and the root set stays conjugate-reciprocal.
inline std::vector<cplx> music_polynomial(const CMat& c_in) {
  const CMat c = 0.5 * (c_in + c_in.adjoint());
  const auto m = static_cast<int>(c.rows());
  std::vector<cplx> coeff(static_cast<size_t>(2 * m - 1), cplx{0.0, 0.0});
  for (int k = -(m - 1); k <= m - 1; ++k) {
    cplx s = 0.0;
    for (int i = std::max(0, -k); i < m && i + k < m; ++i) s += c(i, i + k);
    coeff[static_cast<size_t>(m - 1 - k)] = s;
  }
  return coeff;
}

/// Root-MUSIC roots are computed to ~sqrt(eps) for the double roots noiseless
/// data produce on the unit circle; this slack keeps such roots selectable.
inline constexpr double unit_circle_slack = 1e-7;

/// Among roots inside the unit circle, the one closest to it. Ties on |z|
/// go to the larger real part.
inline cplx select_root(const std::vector<cplx>& roots) {
  std::optional<cplx> best;
  for (const auto& z : roots) {
    const double mag = std::abs(z);
    if (!(mag < 1.0 + unit_circle_slack)) continue;
    if (!best) {
      best = z;
      continue;
    }
    const double bm = std::abs(*best);
    if (mag > bm + 1e-12 || (std::abs(mag - bm) <= 1e-12 && z.real() > best->real())) best = z;
  }
  require(best.has_value(), errc::degenerate_subspace, "no polynomial root inside the unit circle");
  return *best;
}

inline double root_to_frequency(cplx z, int sign) { return wrap_frequency(sign * std::arg(z) / two_pi); }

/// All roots of the root-MUSIC polynomial built from F's noise subspace.
inline std::vector<cplx> root_music_roots(const CMat& f) {
  const CMat vn = noise_subspace(f);
  return poly::roots(music_polynomial(vn * vn.adjoint()));
}

/// Single-tone root-MUSIC: psi_hat = sign * arg(z*) / (2 pi) in (-0.5, 0.5].
inline double root_music_frequency(const SnapshotMatrix& f) {
  return root_to_frequency(select_root(root_music_roots(f.data)), f.sign());
}

/// Root-MUSIC for data observed through a known real linear map G (rows of
/// the output, columns of the input lane): F = G [alpha_i a(psi)] + G N with
/// positive-exponent steering a. The data are whitened onto G's row space and
/// the polynomial is built over the input lane. If G annihilates constants
/// the resulting double root at z = 1 is deflated.
inline double root_music_frequency_through(const CMat& f, const RMat& g) {
  require(f.rows() == g.rows(), errc::invalid_argument, "response rows must match snapshot rows");
  Eigen::JacobiSVD<RMat> svd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVec& s = svd.singularValues();
  int rank = 0;
  while (rank < s.size() && s[rank] > 1e-10 * s[0]) ++rank;
  require(rank >= 2, errc::degenerate_subspace, "filter response has rank < 2");
  const RMat u = svd.matrixU().leftCols(rank);
  const RMat q = svd.matrixV().leftCols(rank);
  const CMat z = (s.head(rank).cwiseInverse().asDiagonal() * u.transpose()).cast<cplx>() * f;
  const CMat vn = q.cast<cplx>() * noise_subspace(z);
  std::vector<cplx> coeff = music_polynomial(vn * vn.adjoint());

  const double dc_leak = (g * RVec::Ones(g.cols())).norm();
  if (dc_leak <= 1e-9 * g.norm()) coeff = poly::deflate(poly::deflate(coeff, 1.0), 1.0);
  return root_to_frequency(select_root(poly::roots(coeff)), +1);
}

// ---- tensor rearrangements --------------------------------------------

/// M_r x (L P_eff); column (l, p) at index (p - first) * L + l.
inline SnapshotMatrix build_spatial_snapshots(const EchoTensor& y) {
  const int pe = y.retained_symbols();
  require(pe >= 1 && y.n_sub * pe >= 2, errc::invalid_argument, "too few retained snapshots");
  SnapshotMatrix out{CMat(y.m_rx, y.n_sub * pe), Axis::spatial};
  for (int p = y.first_symbol; p < y.n_sym; ++p)
    for (int l = 0; l < y.n_sub; ++l) out.data.col((p - y.first_symbol) * y.n_sub + l) = y.snapshot(l, p);
  return out;
}

/// L x (M_r P_eff); column (m_r, p) at index (p - first) * M_r + m_r.
inline SnapshotMatrix build_range_snapshots(const EchoTensor& y) {
  const int pe = y.retained_symbols();
  require(pe >= 1, errc::invalid_argument, "no retained symbols");
  SnapshotMatrix out{CMat(y.n_sub, y.m_rx * pe), Axis::range};
  for (int p = y.first_symbol; p < y.n_sym; ++p)
    for (int m = 0; m < y.m_rx; ++m)
      for (int l = 0; l < y.n_sub; ++l) out.data(l, (p - y.first_symbol) * y.m_rx + m) = y.at(m, l, p);
  return out;
}

/// P_eff x (M_r L); column (m_r, l) at index l * M_r + m_r.
inline SnapshotMatrix build_doppler_snapshots(const EchoTensor& y) {
  const int pe = y.retained_symbols();
  require(pe >= 2, errc::invalid_argument, "need at least 2 retained symbols");
  SnapshotMatrix out{CMat(pe, y.m_rx * y.n_sub), Axis::doppler};
  for (int l = 0; l < y.n_sub; ++l)
    for (int m = 0; m < y.m_rx; ++m)
      for (int p = y.first_symbol; p < y.n_sym; ++p) out.data(p - y.first_symbol, l * y.m_rx + m) = y.at(m, l, p);
  return out;
}

struct EstimationResult {
  int scan = 0;
  double theta_hat = 0.0;  // rad
  double range_hat = 0.0;  // m
  double speed_hat = 0.0;  // m/s
  double psi_s_hat = 0.0;
  double psi_r_hat = 0.0;
  double psi_d_hat = 0.0;
};

inline double angle_from_frequency(double psi_s, const SystemConfig& cfg) {
  const double s = cfg.wavelength() * psi_s / cfg.d_spacing;
  require(std::abs(s) <= 1.0, errc::arcsin_domain, "spatial frequency maps outside arcsin domain");
  return std::asin(s);
}

/// Ranges live on [0, c / (2 delta_f)); a wrapped negative psi_r folds back.
inline double range_from_frequency(double psi_r, const SystemConfig& cfg) {
  return speed_of_light * (psi_r - std::floor(psi_r)) / (2.0 * cfg.delta_f);
}

inline double speed_from_frequency(double psi_d, const SystemConfig& cfg) {
  return cfg.wavelength() * psi_d / (2.0 * cfg.t_interval());
}

/// Angle, range and speed of the single target in a filtered candidate scan.
/// When `doppler_response` is given (the filter's lane map from
/// filter_matrix), the Doppler estimate accounts for it; otherwise the
/// Doppler rows are treated as plain tone samples.
inline EstimationResult estimate_candidate(const EchoTensor& y_check, const SystemConfig& cfg,
                                           const RMat* doppler_response = nullptr) {
  EstimationResult r;
  r.scan = y_check.scan;
  r.psi_s_hat = root_music_frequency(build_spatial_snapshots(y_check));
  r.psi_r_hat = root_music_frequency(build_range_snapshots(y_check));
  const SnapshotMatrix fd = build_doppler_snapshots(y_check);
  r.psi_d_hat = doppler_response ? root_music_frequency_through(fd.data, *doppler_response)
                                 : root_music_frequency(fd);
  r.theta_hat = angle_from_frequency(r.psi_s_hat, cfg);
  r.range_hat = range_from_frequency(r.psi_r_hat, cfg);
  r.speed_hat = speed_from_frequency(r.psi_d_hat, cfg);
  return r;
}

inline std::string estimates_csv_header() { return "b,theta_deg,range_m,speed_mps,psi_s,psi_r,psi_d\n"; }

inline std::string estimates_csv_row(const EstimationResult& e) {
  std::ostringstream os;
  os.precision(12);
  os << e.scan << ',' << rad2deg(e.theta_hat) << ',' << e.range_hat << ',' << e.speed_hat << ',' << e.psi_s_hat
     << ',' << e.psi_r_hat << ',' << e.psi_d_hat << '\n';
  return os.str();
}

}  // namespace isac

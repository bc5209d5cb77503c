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

#include <algorithm>
#include <sstream>
#include <vector>

#include "isac/beams.hpp"
#include "isac/core.hpp"
#include "isac/echo.hpp"
#include "isac/poly.hpp"

namespace isac {

/// Real-coefficient IIR filter H(z) = B(z^-1) / A(z^-1), a[0] == 1.
struct IirFilter {
  int order = 0;
  double cutoff = 0.0;  // cycles/sample
  std::vector<double> num;
  std::vector<double> den;

  /// H(e^{j 2 pi f}).
  cplx response(double f) const {
    const cplx zinv = std::polar(1.0, -two_pi * f);
    cplx nb = 0.0, da = 0.0, zk = 1.0;
    for (size_t k = 0; k < num.size(); ++k, zk *= zinv) {
      nb += num[k] * zk;
      da += den[k] * zk;
    }
    return nb / da;
  }

  std::vector<cplx> poles() const { return poly::roots(den); }

  /// Direct-form-II-transposed state that a constant input x0 would have
  /// reached in steady state.
  std::vector<cplx> steady_state(cplx x0) const {
    const int n = order;
    std::vector<cplx> z(n, cplx{0.0, 0.0});
    const cplx ys = x0 * response(0.0);
    cplx acc = 0.0;
    for (int i = n - 1; i >= 0; --i) {
      acc += num[i + 1] * x0 - den[i + 1] * ys;
      z[i] = acc;
    }
    return z;
  }

  /// Filters x in place starting from the steady state of x[0].
  void apply_primed(std::vector<cplx>& x) const {
    if (x.empty()) return;
    std::vector<cplx> z = steady_state(x.front());
    for (auto& xi : x) {
      const cplx in = xi;
      const cplx y = num[0] * in + z[0];
      for (int i = 0; i + 1 < order; ++i) z[i] = num[i + 1] * in - den[i + 1] * y + z[i + 1];
      z[order - 1] = num[order] * in - den[order] * y;
      xi = y;
    }
  }

  /// Mean of |H|^2 over an n-point DFT grid (white-noise power gain).
  double noise_gain(int n = 4096) const {
    double acc = 0.0;
    for (int k = 0; k < n; ++k) acc += std::norm(response(double(k) / n));
    return acc / n;
  }
};

/// Butterworth high-pass: analog prototype, low-pass to high-pass mapping,
/// bilinear transform with the cutoff pre-warped.
inline IirFilter design_butterworth_highpass(int order, double cutoff) {
  require(order >= 1 && order <= 8, errc::invalid_argument, "filter order must be in [1, 8]");
  require(cutoff > 0.0 && cutoff < 0.5, errc::invalid_argument, "cutoff must be in (0, 0.5) cycles/sample");
  const double warped = 2.0 * std::tan(pi * cutoff);  // bilinear s = 2 (1 - z^-1) / (1 + z^-1)

  std::vector<cplx> den{1.0};
  for (int k = 0; k < order; ++k) {
    const cplx s_lp = std::polar(1.0, pi * (2.0 * k + order + 1) / (2.0 * order));
    const cplx s_hp = warped / s_lp;
    const cplx z = (2.0 + s_hp) / (2.0 - s_hp);
    den = poly::multiply(den, {1.0, -z});
  }
  std::vector<cplx> num{1.0};
  for (int k = 0; k < order; ++k) num = poly::multiply(num, {1.0, -1.0});

  IirFilter f;
  f.order = order;
  f.cutoff = cutoff;
  for (const auto& v : den) f.den.push_back(v.real());
  // Unit gain at Nyquist, where the analog high-pass reaches its passband limit.
  double a_nyq = 0.0, b_nyq = 0.0, sign = 1.0;
  for (int k = 0; k <= order; ++k, sign = -sign) {
    a_nyq += sign * f.den[k];
    b_nyq += sign * num[k].real();
  }
  const double gain = a_nyq / b_nyq;
  for (const auto& v : num) f.num.push_back(gain * v.real());
  return f;
}

struct FilterSpec {
  int order = 4;
  double cutoff = 0.05;
  int warmup = 1;
};

inline IirFilter design(const FilterSpec& spec) { return design_butterworth_highpass(spec.order, spec.cutoff); }

/// y_tilde = y / g_tilde_b.
inline EchoTensor normalize_by_gain(const EchoTensor& y, const BeamPlan& plan, const SystemConfig& cfg,
                                    double floor = default_gain_floor) {
  const cplx g = g_tilde(plan, y.scan, cfg, floor);
  EchoTensor out = y;
  for (auto& v : out.data) v /= g;
  out.stage = EchoStage::normalized;
  return out;
}

/// Filters every (m_r, l) lane along the symbol axis. The first `warmup`
/// outputs are flagged transient via `first_symbol`.
inline EchoTensor filter_symbols(const EchoTensor& y, const IirFilter& filt, int warmup) {
  require(warmup >= 0 && y.n_sym > warmup, errc::invalid_argument, "need P > warmup >= 0");
  EchoTensor out = y;
  std::vector<cplx> lane(static_cast<size_t>(y.n_sym));
  for (int l = 0; l < y.n_sub; ++l)
    for (int m = 0; m < y.m_rx; ++m) {
      for (int p = 0; p < y.n_sym; ++p) lane[p] = y.at(m, l, p);
      filt.apply_primed(lane);
      for (int p = 0; p < y.n_sym; ++p) out.at(m, l, p) = lane[p];
    }
  out.stage = EchoStage::filtered;
  out.first_symbol = warmup;
  return out;
}

/// Linear map from a length-P input lane to the retained (P - warmup) outputs.
inline RMat filter_matrix(const IirFilter& filt, int n_sym, int warmup) {
  require(warmup >= 0 && n_sym > warmup, errc::invalid_argument, "need P > warmup >= 0");
  RMat g(n_sym - warmup, n_sym);
  std::vector<cplx> e(static_cast<size_t>(n_sym));
  for (int k = 0; k < n_sym; ++k) {
    std::fill(e.begin(), e.end(), cplx{0.0, 0.0});
    e[k] = 1.0;
    filt.apply_primed(e);
    for (int p = warmup; p < n_sym; ++p) g(p - warmup, k) = e[p].real();
  }
  return g;
}

/// P(b) = 1/(L P_eff) sum_l sum_{retained p} ||y_{b,l,p}||^2.
inline double scan_power(const EchoTensor& y) {
  double acc = 0.0;
  for (int p = y.first_symbol; p < y.n_sym; ++p)
    for (int l = 0; l < y.n_sub; ++l) acc += y.snapshot(l, p).squaredNorm();
  return acc / (double(y.n_sub) * y.retained_symbols());
}

inline RVec scan_spectrum(const std::vector<EchoTensor>& scans) {
  RVec out(static_cast<Eigen::Index>(scans.size()));
  for (size_t b = 0; b < scans.size(); ++b) {
    require(scans[b].m_rx == scans[0].m_rx && scans[b].n_sub == scans[0].n_sub && scans[b].n_sym == scans[0].n_sym,
            errc::invalid_argument, "all scans must share one shape");
    out[static_cast<Eigen::Index>(b)] = scan_power(scans[b]);
  }
  return out;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

/// Strict local maxima (edges compare against their single neighbour).
inline std::vector<int> local_maxima(const RVec& power) {
  std::vector<int> out;
  const auto n = static_cast<int>(power.size());
  if (n < 2) return out;
  for (int b = 0; b < n; ++b) {
    const bool above_left = b == 0 || power[b] > power[b - 1];
    const bool above_right = b == n - 1 || power[b] > power[b + 1];
    if (above_left && above_right) out.push_back(b);
  }
  return out;
}

/// Scan indices that are strict local maxima above rel_threshold * median(P).
inline std::vector<int> find_peaks(const RVec& power, double rel_threshold) {
  require(rel_threshold > 1.0, errc::invalid_argument, "relative peak threshold must exceed 1");
  const double floor = rel_threshold * median(std::vector<double>(power.data(), power.data() + power.size()));
  std::vector<int> out;
  for (int b : local_maxima(power))
    if (power[b] > floor) out.push_back(b);
  return out;
}

/// The k strongest strict local maxima, strongest first.
inline std::vector<int> top_peaks(const RVec& power, int k) {
  auto peaks = local_maxima(power);
  std::stable_sort(peaks.begin(), peaks.end(), [&](int a, int b) { return power[a] > power[b]; });
  if (static_cast<int>(peaks.size()) > k) peaks.resize(static_cast<size_t>(k));
  return peaks;
}

/// CSV: b,theta_deg,power
inline std::string spectrum_csv(const RVec& power, const BeamPlan& plan) {
  std::ostringstream os;
  os.precision(12);
  os << "b,theta_deg,power\n";
  for (int b = 0; b < static_cast<int>(power.size()); ++b)
    os << b << ',' << rad2deg(plan.directions.at(b)) << ',' << power[b] << '\n';
  return os.str();
}

}  // namespace isac

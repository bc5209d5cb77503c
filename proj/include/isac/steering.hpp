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

#include "isac/core.hpp"

namespace isac {

/// Uniform phase progression e^{sign * j2pi * k * psi}, k = 0..n-1.
inline CVec steering(double psi, int n, int sign = +1) {
  CVec v(n);
  for (int k = 0; k < n; ++k) v[k] = std::polar(1.0, sign * two_pi * k * psi);
  return v;
}

/// d/dpsi of steering(psi, n, sign).
inline CVec steering_derivative(double psi, int n, int sign = +1) {
  CVec v(n);
  for (int k = 0; k < n; ++k)
    v[k] = cplx(0.0, sign * two_pi * k) * std::polar(1.0, sign * two_pi * k * psi);
  return v;
}

inline CVec steering_rx(double psi_s, int m_rx) { return steering(psi_s, m_rx, +1); }
inline CVec steering_tx(double psi_s, int m_tx) { return steering(psi_s, m_tx, +1); }

// Range carries a negative exponent, Doppler a positive one.
inline CVec steering_range(double psi_r, int n_sub) { return steering(psi_r, n_sub, -1); }
inline CVec steering_doppler(double psi_d, int n_sym) { return steering(psi_d, n_sym, +1); }

}  // namespace isac

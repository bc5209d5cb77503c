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

#include <vector>

#include "isac/core.hpp"

namespace isac::poly {

/// Roots of c[0] z^n + c[1] z^{n-1} + ... + c[n] (highest degree first) as the
/// eigenvalues of the companion matrix. Leading coefficients that are
/// negligible relative to the largest one are dropped (roots at infinity).
/// The eigenvalue iteration runs in extended precision: multiple roots are
/// only determined to about sqrt(unit roundoff) of the solver.
inline std::vector<cplx> roots(std::vector<cplx> c, double lead_tol = 1e-14) {
  double cmax = 0.0;
  for (const auto& v : c) cmax = std::max(cmax, std::abs(v));
  if (cmax == 0.0) return {};
  size_t first = 0;
  while (first < c.size() && std::abs(c[first]) <= lead_tol * cmax) ++first;
  c.erase(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(first));
  const int n = static_cast<int>(c.size()) - 1;
  if (n < 1) return {};
  using xcplx = std::complex<long double>;
  using XMat = Eigen::Matrix<xcplx, Eigen::Dynamic, Eigen::Dynamic>;
  XMat comp = XMat::Zero(n, n);
  const xcplx lead(c[0].real(), c[0].imag());
  for (int k = 0; k < n; ++k) comp(0, k) = -xcplx(c[k + 1].real(), c[k + 1].imag()) / lead;
  for (int k = 1; k < n; ++k) comp(k, k - 1) = 1.0L;
  Eigen::ComplexEigenSolver<XMat> es(comp, /*computeEigenvectors=*/false);
  require(es.info() == Eigen::Success, errc::degenerate_subspace, "companion eigenvalue iteration failed");
  std::vector<cplx> out;
  out.reserve(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k)
    out.emplace_back(static_cast<double>(es.eigenvalues()[k].real()), static_cast<double>(es.eigenvalues()[k].imag()));
  return out;
}

inline std::vector<cplx> roots(const std::vector<double>& c, double lead_tol = 1e-14) {
  return roots(std::vector<cplx>(c.begin(), c.end()), lead_tol);
}

/// Horner evaluation, highest degree first.
template <class T>
cplx eval(const std::vector<T>& c, cplx z) {
  cplx acc = 0.0;
  for (const auto& v : c) acc = acc * z + cplx(v);
  return acc;
}

/// Product of two coefficient vectors (same ordering on both).
inline std::vector<cplx> multiply(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  std::vector<cplx> out(a.size() + b.size() - 1, cplx{0.0, 0.0});
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t k = 0; k < b.size(); ++k) out[i + k] += a[i] * b[k];
  return out;
}

/// Divides by (z - r), highest degree first; the remainder is returned through `rem`.
inline std::vector<cplx> deflate(const std::vector<cplx>& c, cplx r, cplx* rem = nullptr) {
  std::vector<cplx> q(c.size() - 1);
  cplx acc = 0.0;
  for (size_t i = 0; i + 1 < c.size(); ++i) {
    acc = acc * r + c[i];
    q[i] = acc;
  }
  if (rem) *rem = acc * r + c.back();
  return q;
}

}  // namespace isac::poly

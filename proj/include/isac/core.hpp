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

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace isac {

inline constexpr const char* version = "1.0.0";

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

inline constexpr double speed_of_light = 299'792'458.0;
inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr cplx j2pi{0.0, two_pi};

inline constexpr double deg2rad(double deg) { return deg * pi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / pi; }

/// Machine-readable failure categories; the CLI reports these verbatim.
enum class errc {
  invalid_argument,
  over_dense_scene,
  gain_floor,
  degenerate_subspace,
  arcsin_domain,
  singular_information,
  dof_violation,
  io_error,
};

inline std::string_view to_string(errc e) {
  switch (e) {
    case errc::invalid_argument: return "invalid_argument";
    case errc::over_dense_scene: return "over_dense_scene";
    case errc::gain_floor: return "gain_floor";
    case errc::degenerate_subspace: return "degenerate_subspace";
    case errc::arcsin_domain: return "arcsin_domain";
    case errc::singular_information: return "singular_information";
    case errc::dof_violation: return "dof_violation";
    case errc::io_error: return "io_error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

inline void require(bool cond, errc code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

/// Wraps a normalized frequency into (-0.5, 0.5].
inline double wrap_frequency(double psi) {
  double w = psi - std::floor(psi);  // [0, 1)
  return w > 0.5 ? w - 1.0 : w;
}

/// System constants of the OFDM ISAC base station.
struct SystemConfig {
  int m_tx = 64;
  int m_rx = 16;
  int n_sub = 16;     // L
  int n_sym = 20;     // P
  double f_c = 60e9;  // Hz
  double delta_f = 10e6;
  double t_guard = 0.2e-3;
  double d_spacing = 0.5 * speed_of_light / 60e9;
  double noise_var = 1.0;

  double wavelength() const { return speed_of_light / f_c; }
  double t_symbol() const { return 1.0 / delta_f; }
  double t_interval() const { return t_symbol() + t_guard; }

  /// Number of scalar observations per scan, M_r * L * P.
  int observations() const { return m_rx * n_sub * n_sym; }

  void validate() const {
    require(m_tx >= 2 && m_rx >= 2 && n_sub >= 2 && n_sym >= 2, errc::invalid_argument,
            "array, subcarrier and symbol counts must be >= 2");
    require(f_c > 0 && delta_f > 0 && t_guard >= 0 && d_spacing > 0, errc::invalid_argument,
            "carrier, spacing, guard interval and element spacing must be positive");
    require(std::isfinite(noise_var) && noise_var >= 0, errc::invalid_argument,
            "noise variance must be finite and non-negative");
  }

  /// Half-wavelength spacing for the current carrier.
  SystemConfig& with_half_wavelength_spacing() {
    d_spacing = 0.5 * wavelength();
    return *this;
  }
};

inline double snr_db_to_noise_var(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

// ---- randomness --------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and a stream index.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x632BE59BD9B4E019ull));
}

using Rng = std::mt19937_64;

/// CN(0, var): real and imaginary parts i.i.d. N(0, var/2).
inline cplx complex_normal(Rng& rng, double var) {
  std::normal_distribution<double> n(0.0, std::sqrt(var / 2.0));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

}  // namespace isac

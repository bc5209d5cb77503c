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
#include <array>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <vector>

#include "isac/beams.hpp"
#include "isac/core.hpp"
#include "isac/scene.hpp"
#include "isac/steering.hpp"

namespace isac {

enum class EchoStage { raw, normalized, filtered };

/// Complex cube y[m_r, l, p] for one scan. Storage is p-major, then l, then m_r,
/// so the receive vector y_{b,l,p} is contiguous.
struct EchoTensor {
  int m_rx = 0;
  int n_sub = 0;
  int n_sym = 0;
  int scan = 0;
  EchoStage stage = EchoStage::raw;
  int first_symbol = 0;  // symbols before this are transient and excluded downstream
  std::vector<cplx> data;

  EchoTensor() = default;
  EchoTensor(int m, int l, int p, int b = 0)
      : m_rx(m), n_sub(l), n_sym(p), scan(b), data(static_cast<size_t>(m) * l * p, cplx{0.0, 0.0}) {}

  static EchoTensor zeros_like(const SystemConfig& cfg, int b = 0) { return {cfg.m_rx, cfg.n_sub, cfg.n_sym, b}; }

  size_t index(int m, int l, int p) const { return (static_cast<size_t>(p) * n_sub + l) * m_rx + m; }
  cplx& at(int m, int l, int p) { return data[index(m, l, p)]; }
  const cplx& at(int m, int l, int p) const { return data[index(m, l, p)]; }

  /// Receive vector y_{b,l,p} as an Eigen view.
  Eigen::Map<const CVec> snapshot(int l, int p) const { return {data.data() + index(0, l, p), m_rx}; }
  Eigen::Map<CVec> snapshot(int l, int p) { return {data.data() + index(0, l, p), m_rx}; }

  Eigen::Map<const CVec> flat() const { return {data.data(), static_cast<Eigen::Index>(data.size())}; }
  Eigen::Map<CVec> flat() { return {data.data(), static_cast<Eigen::Index>(data.size())}; }

  int retained_symbols() const { return n_sym - first_symbol; }

  bool matches(const SystemConfig& cfg) const {
    return m_rx == cfg.m_rx && n_sub == cfg.n_sub && n_sym == cfg.n_sym &&
           data.size() == static_cast<size_t>(cfg.observations());
  }

  bool all_finite() const {
    for (const auto& v : data)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
  }

  double energy() const { return flat().squaredNorm(); }
};

namespace detail {

// Adds coef * spatial (x) range (x) doppler into the cube; doppler may be empty (constant 1).
inline void accumulate_rank1(EchoTensor& y, const CVec& spatial, const CVec& range, const CVec* doppler) {
  for (int p = 0; p < y.n_sym; ++p) {
    const cplx dp = doppler ? (*doppler)[p] : cplx{1.0, 0.0};
    for (int l = 0; l < y.n_sub; ++l) y.snapshot(l, p) += (dp * range[l]) * spatial;
  }
}

}  // namespace detail

/// Noise-free echo of scan b: every target and every scatterer contributes
/// through its own transmit gain, so out-of-beam reflectors leak via sidelobes.
inline EchoTensor synthesize_clean(const Scene& scene, const BeamPlan& plan, int b, const SystemConfig& cfg) {
  require(b >= 0 && b < plan.size(), errc::invalid_argument, "scan index out of range");
  EchoTensor y = EchoTensor::zeros_like(cfg, b);
  for (const auto& t : scene.targets) {
    const auto f = frequencies(t, cfg);
    const CVec spatial = (t.alpha * plan.gain(b, f.psi_s)) * steering_rx(f.psi_s, cfg.m_rx);
    const CVec range = steering_range(f.psi_r, cfg.n_sub);
    const CVec doppler = steering_doppler(f.psi_d, cfg.n_sym);
    detail::accumulate_rank1(y, spatial, range, &doppler);
  }
  for (const auto& s : scene.scatterers) {
    const auto f = frequencies(s, cfg);
    const CVec spatial = (s.alpha * plan.gain(b, f.psi_s)) * steering_rx(f.psi_s, cfg.m_rx);
    detail::accumulate_rank1(y, spatial, steering_range(f.psi_r, cfg.n_sub), nullptr);
  }
  return y;
}

/// Adds CN(0, noise_var I) noise drawn from `seed`.
inline void add_noise(EchoTensor& y, double noise_var, std::uint64_t seed) {
  if (noise_var <= 0.0) return;
  Rng rng(seed);
  for (auto& v : y.data) v += complex_normal(rng, noise_var);
}

/// Seed of the noise stream used for scan b.
inline std::uint64_t scan_seed(std::uint64_t seed, int b) { return derive_seed(seed, static_cast<std::uint64_t>(b)); }

inline EchoTensor synthesize_echo(const Scene& scene, const BeamPlan& plan, int b, const SystemConfig& cfg,
                                  std::uint64_t seed) {
  EchoTensor y = synthesize_clean(scene, plan, b, cfg);
  add_noise(y, cfg.noise_var, scan_seed(seed, b));
  return y;
}

// ---- flat binary record ------------------------------------------------
// Header: M_r, L, P, b as uint32 little-endian; body: float64 (re, im) pairs in
// p-major, l, m_r order (the in-memory order), little-endian.

namespace detail {

template <class T>
void write_le(std::ostream& os, T v) {
  auto bits = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  os.write(reinterpret_cast<const char*>(bits.data()), sizeof(T));
}

template <class T>
T read_le(std::istream& is) {
  std::array<unsigned char, sizeof(T)> bits{};
  is.read(reinterpret_cast<char*>(bits.data()), sizeof(T));
  require(static_cast<bool>(is), errc::io_error, "truncated echo record");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  return std::bit_cast<T>(bits);
}

}  // namespace detail

inline void write_echo(std::ostream& os, const EchoTensor& y) {
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(y.m_rx));
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(y.n_sub));
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(y.n_sym));
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(y.scan));
  for (const auto& v : y.data) {
    detail::write_le<double>(os, v.real());
    detail::write_le<double>(os, v.imag());
  }
  require(static_cast<bool>(os), errc::io_error, "failed writing echo record");
}

inline EchoTensor read_echo(std::istream& is) {
  const auto m = detail::read_le<std::uint32_t>(is);
  const auto l = detail::read_le<std::uint32_t>(is);
  const auto p = detail::read_le<std::uint32_t>(is);
  const auto b = detail::read_le<std::uint32_t>(is);
  require(m > 0 && l > 0 && p > 0 && std::uint64_t(m) * l * p < (1ull << 31), errc::io_error, "bad echo header");
  EchoTensor y(static_cast<int>(m), static_cast<int>(l), static_cast<int>(p), static_cast<int>(b));
  for (auto& v : y.data) {
    const double re = detail::read_le<double>(is);
    const double im = detail::read_le<double>(is);
    v = {re, im};
  }
  return y;
}

}  // namespace isac

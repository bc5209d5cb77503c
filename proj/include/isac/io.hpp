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

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "isac/beams.hpp"
#include "isac/clutter.hpp"
#include "isac/core.hpp"
#include "isac/crb.hpp"
#include "isac/scene.hpp"

namespace isac {

using json = nlohmann::json;

namespace detail {

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

}  // namespace detail

// ---- system ----

inline json to_json(const SystemConfig& c) {
  return {{"m_tx", c.m_tx},       {"m_rx", c.m_rx},         {"n_sub", c.n_sub},
          {"n_sym", c.n_sym},     {"carrier_hz", c.f_c},    {"subcarrier_spacing_hz", c.delta_f},
          {"guard_s", c.t_guard}, {"spacing_m", c.d_spacing}, {"noise_var", c.noise_var}};
}

/// Missing keys keep their defaults. Without an explicit spacing the array
/// is half-wavelength at the configured carrier.
inline SystemConfig system_from_json(const json& j) {
  SystemConfig c;
  detail::read_opt(j, "m_tx", c.m_tx);
  detail::read_opt(j, "m_rx", c.m_rx);
  detail::read_opt(j, "n_sub", c.n_sub);
  detail::read_opt(j, "n_sym", c.n_sym);
  detail::read_opt(j, "carrier_hz", c.f_c);
  detail::read_opt(j, "subcarrier_spacing_hz", c.delta_f);
  detail::read_opt(j, "guard_s", c.t_guard);
  detail::read_opt(j, "noise_var", c.noise_var);
  c.with_half_wavelength_spacing();
  detail::read_opt(j, "spacing_m", c.d_spacing);
  c.validate();
  return c;
}

// ---- scene ----

inline json to_json(const Scene& s) {
  json targets = json::array(), scatterers = json::array();
  for (const auto& t : s.targets)
    targets.push_back({{"theta_deg", rad2deg(t.theta)},
                       {"range_m", t.range},
                       {"speed_mps", t.speed},
                       {"alpha_re", t.alpha.real()},
                       {"alpha_im", t.alpha.imag()}});
  for (const auto& c : s.scatterers)
    scatterers.push_back({{"theta_deg", rad2deg(c.theta)},
                          {"range_m", c.range},
                          {"alpha_re", c.alpha.real()},
                          {"alpha_im", c.alpha.imag()}});
  return {{"targets", targets}, {"scatterers", scatterers}};
}

inline Scene scene_from_json(const json& j) {
  Scene s;
  auto alpha = [](const json& e) {
    return cplx{e.value("alpha_re", 1.0), e.value("alpha_im", 0.0)};
  };
  if (j.contains("targets"))
    for (const auto& e : j.at("targets")) {
      Target t;
      t.theta = deg2rad(e.at("theta_deg").get<double>());
      t.range = e.at("range_m").get<double>();
      t.speed = e.value("speed_mps", 0.0);
      t.alpha = alpha(e);
      validate(t);
      s.targets.push_back(t);
    }
  if (j.contains("scatterers"))
    for (const auto& e : j.at("scatterers")) {
      Scatterer c;
      c.theta = deg2rad(e.at("theta_deg").get<double>());
      c.range = e.at("range_m").get<double>();
      c.alpha = alpha(e);
      validate(c);
      s.scatterers.push_back(c);
    }
  return s;
}

inline json to_json(const SceneSpec& s) {
  return {{"n_targets", s.n_targets},
          {"n_scatterers", s.n_scatterers},
          {"theta_min_deg", rad2deg(s.theta_min)},
          {"theta_max_deg", rad2deg(s.theta_max)},
          {"range_min_m", s.range_min},
          {"range_max_m", s.range_max},
          {"speed_min_mps", s.speed_min},
          {"speed_max_mps", s.speed_max},
          {"target_alpha_var", s.target_alpha_var},
          {"scatterer_alpha_var", s.scatterer_alpha_var},
          {"min_separation_deg", rad2deg(s.min_separation)},
          {"max_redraws", s.max_redraws}};
}

inline SceneSpec scene_spec_from_json(const json& j) {
  SceneSpec s;
  detail::read_opt(j, "n_targets", s.n_targets);
  detail::read_opt(j, "n_scatterers", s.n_scatterers);
  if (j.contains("theta_min_deg")) s.theta_min = deg2rad(j.at("theta_min_deg").get<double>());
  if (j.contains("theta_max_deg")) s.theta_max = deg2rad(j.at("theta_max_deg").get<double>());
  detail::read_opt(j, "range_min_m", s.range_min);
  detail::read_opt(j, "range_max_m", s.range_max);
  detail::read_opt(j, "speed_min_mps", s.speed_min);
  detail::read_opt(j, "speed_max_mps", s.speed_max);
  detail::read_opt(j, "target_alpha_var", s.target_alpha_var);
  detail::read_opt(j, "scatterer_alpha_var", s.scatterer_alpha_var);
  if (j.contains("min_separation_deg")) s.min_separation = deg2rad(j.at("min_separation_deg").get<double>());
  detail::read_opt(j, "max_redraws", s.max_redraws);
  return s;
}

// ---- filter ----

inline json to_json(const FilterSpec& f) {
  return {{"order", f.order}, {"cutoff", f.cutoff}, {"warmup", f.warmup}};
}

inline FilterSpec filter_spec_from_json(const json& j) {
  FilterSpec f;
  detail::read_opt(j, "order", f.order);
  detail::read_opt(j, "cutoff", f.cutoff);
  detail::read_opt(j, "warmup", f.warmup);
  return f;
}

/// Coefficients of a designed filter, highest power of z^-1 last.
inline json to_json(const IirFilter& f) {
  return {{"order", f.order}, {"cutoff", f.cutoff}, {"b", f.num}, {"a", f.den}};
}

// ---- CRB ----

/// {snr_db, crb_theta_rad2: [...], crb_r_m2: [...], crb_v_mps2: [...]}
inline json crb_to_json(double snr_db, const CrbResult& r) {
  json th = json::array(), rg = json::array(), sp = json::array();
  for (int i = 0; i < r.n_targets; ++i) {
    th.push_back(r.var_theta(i));
    rg.push_back(r.var_range(i));
    sp.push_back(r.var_speed(i));
  }
  return {{"snr_db", snr_db}, {"crb_theta_rad2", th}, {"crb_r_m2", rg}, {"crb_v_mps2", sp}};
}

// ---- files ----

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), errc::io_error, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(errc::invalid_argument, path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), errc::io_error, "cannot open " + path + " for writing");
  out << text;
  require(static_cast<bool>(out), errc::io_error, "failed writing " + path);
}

/// 64-bit FNV-1a, used for configuration fingerprints.
inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace isac

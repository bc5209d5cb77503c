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

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <limits>
#include <vector>

#include "isac/beams.hpp"
#include "isac/clutter.hpp"
#include "isac/core.hpp"
#include "isac/crb.hpp"
#include "isac/detector.hpp"
#include "isac/echo.hpp"
#include "isac/io.hpp"
#include "isac/music.hpp"
#include "isac/parallel.hpp"
#include "isac/scene.hpp"

namespace isac {

// ---- configuration -----------------------------------------------------

struct ScanSpec {
  double lo_deg = -60.0;
  double hi_deg = 60.0;
  int n_beams = 61;
};

struct DetectorSpec {
  GridSpec grid;
  double p_fa = 1e-3;
  /// Peaks must exceed this multiple of the median scan power.
  double peak_threshold = 1.02;
};

struct RocSettings {
  int target_index = 0;
  std::vector<double> snr_list_db{-30.0, -20.0, -10.0};
  int n_trials = 500;
  int n_thresholds = 200;
};

struct ExperimentConfig {
  SystemConfig system;
  /// "reference" (tabulated targets + random clutter), "random" or "explicit".
  std::string scene_kind = "reference";
  SceneSpec scene;
  std::optional<Scene> explicit_scene;
  ScanSpec scan;
  FilterSpec filter;
  DetectorSpec detector;
  /// Single-run SNR; when absent system.noise_var is used as is.
  std::optional<double> snr_db;
  std::vector<double> snr_list_db{-15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0};
  int n_trials = 100;
  RocSettings roc;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  int threads = 1;

  SystemConfig effective_system() const {
    SystemConfig c = system;
    if (snr_db) c.noise_var = snr_db_to_noise_var(*snr_db);
    return c;
  }

  BeamPlan plan() const {
    return make_scan_plan(system, deg2rad(scan.lo_deg), deg2rad(scan.hi_deg), scan.n_beams);
  }

  Scene make_scene() const {
    const std::uint64_t s = derive_seed(seed, 1001);
    if (scene_kind == "reference") return reference_scene(s, scene);
    if (scene_kind == "random") return generate_scene(scene, s);
    require(scene_kind == "explicit" && explicit_scene.has_value(), errc::invalid_argument,
            "scene kind must be reference, random or explicit (with a scene)");
    return *explicit_scene;
  }

  std::uint64_t noise_seed() const { return derive_seed(seed, 1002); }

  void validate() const {
    system.validate();
    require(threads >= 1, errc::invalid_argument, "threads must be >= 1");
    require(n_trials >= 1 && roc.n_trials >= 1 && roc.n_thresholds >= 2, errc::invalid_argument,
            "trial and threshold counts must be positive");
    require(detector.p_fa > 0.0 && detector.p_fa < 1.0, errc::invalid_argument, "P_FA must be in (0, 1)");
    require(detector.peak_threshold > 1.0, errc::invalid_argument, "peak threshold must exceed 1");
    require(filter.warmup >= 0 && filter.warmup + 2 <= system.n_sym, errc::invalid_argument,
            "warmup must leave at least two symbols");
    design(filter);
    plan();
  }
};

inline json to_json(const ExperimentConfig& c) {
  json j = {{"system", to_json(c.system)},
            {"scene", {{"kind", c.scene_kind}, {"spec", to_json(c.scene)}}},
            {"scan", {{"lo_deg", c.scan.lo_deg}, {"hi_deg", c.scan.hi_deg}, {"n_beams", c.scan.n_beams}}},
            {"filter", to_json(c.filter)},
            {"detector",
             {{"n_range", c.detector.grid.n_range},
              {"n_angle", c.detector.grid.n_angle},
              {"range_max_m", c.detector.grid.range_max},
              {"p_fa", c.detector.p_fa},
              {"peak_threshold", c.detector.peak_threshold}}},
            {"snr_db", c.snr_db ? json(*c.snr_db) : json(nullptr)},
            {"snr_list_db", c.snr_list_db},
            {"n_trials", c.n_trials},
            {"roc",
             {{"target_index", c.roc.target_index},
              {"snr_list_db", c.roc.snr_list_db},
              {"n_trials", c.roc.n_trials},
              {"n_thresholds", c.roc.n_thresholds}}},
            {"seed", c.seed},
            {"out_dir", c.out_dir},
            {"threads", c.threads}};
  if (c.explicit_scene) j["scene"]["scene"] = to_json(*c.explicit_scene);
  return j;
}

inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  try {
    if (j.contains("system")) c.system = system_from_json(j.at("system"));
    if (j.contains("scene")) {
      const json& s = j.at("scene");
      detail::read_opt(s, "kind", c.scene_kind);
      if (s.contains("spec")) c.scene = scene_spec_from_json(s.at("spec"));
      if (s.contains("scene")) {
        c.explicit_scene = scene_from_json(s.at("scene"));
        if (!s.contains("kind")) c.scene_kind = "explicit";
      }
    }
    if (j.contains("scan")) {
      const json& s = j.at("scan");
      detail::read_opt(s, "lo_deg", c.scan.lo_deg);
      detail::read_opt(s, "hi_deg", c.scan.hi_deg);
      detail::read_opt(s, "n_beams", c.scan.n_beams);
    }
    if (j.contains("filter")) c.filter = filter_spec_from_json(j.at("filter"));
    if (j.contains("detector")) {
      const json& s = j.at("detector");
      detail::read_opt(s, "n_range", c.detector.grid.n_range);
      detail::read_opt(s, "n_angle", c.detector.grid.n_angle);
      detail::read_opt(s, "range_max_m", c.detector.grid.range_max);
      detail::read_opt(s, "p_fa", c.detector.p_fa);
      detail::read_opt(s, "peak_threshold", c.detector.peak_threshold);
    }
    if (j.contains("snr_db") && !j.at("snr_db").is_null()) c.snr_db = j.at("snr_db").get<double>();
    detail::read_opt(j, "snr_list_db", c.snr_list_db);
    detail::read_opt(j, "n_trials", c.n_trials);
    if (j.contains("roc")) {
      const json& s = j.at("roc");
      detail::read_opt(s, "target_index", c.roc.target_index);
      detail::read_opt(s, "snr_list_db", c.roc.snr_list_db);
      detail::read_opt(s, "n_trials", c.roc.n_trials);
      detail::read_opt(s, "n_thresholds", c.roc.n_thresholds);
    }
    detail::read_opt(j, "seed", c.seed);
    detail::read_opt(j, "out_dir", c.out_dir);
    detail::read_opt(j, "threads", c.threads);
  } catch (const json::exception& e) {
    throw Error(errc::invalid_argument, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

/// Fingerprint of the run-defining configuration (output location and
/// thread count excluded, since they do not change results).
inline std::string config_hash(const ExperimentConfig& c) {
  json j = to_json(c);
  j.erase("out_dir");
  j.erase("threads");
  std::ostringstream os;
  os << std::hex << fnv1a64(j.dump());
  return os.str();
}

// ---- single run --------------------------------------------------------

enum class CandidateStatus { detected, rejected_glrt, rejected_coverage, undetectable, failed };

inline std::string_view to_string(CandidateStatus s) {
  switch (s) {
    case CandidateStatus::detected: return "detected";
    case CandidateStatus::rejected_glrt: return "rejected_glrt";
    case CandidateStatus::rejected_coverage: return "rejected_coverage";
    case CandidateStatus::undetectable: return "undetectable";
    case CandidateStatus::failed: return "failed";
  }
  return "unknown";
}

struct CandidateReport {
  int scan = 0;
  bool estimated = false;
  EstimationResult estimate;
  GlrOutcome glr;
  CandidateStatus status = CandidateStatus::failed;
};

struct StageError {
  int scan = -1;
  std::string stage;
  errc code = errc::invalid_argument;
  std::string message;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct RunReport {
  std::uint64_t seed = 0;
  std::string config_hash;
  double noise_var = 0.0;
  RVec spectrum_prefilter;  // P(b) of the gain-normalized echo, before the clutter filter
  RVec spectrum;            // P(b) after the clutter filter
  std::vector<int> peaks;
  std::vector<CandidateReport> candidates;
  std::vector<StageError> errors;
  std::vector<StageTiming> timings;

  std::vector<const CandidateReport*> detections() const {
    std::vector<const CandidateReport*> out;
    for (const auto& c : candidates)
      if (c.status == CandidateStatus::detected) out.push_back(&c);
    return out;
  }
};

namespace detail {

class StageClock {
 public:
  explicit StageClock(std::vector<StageTiming>& sink) : sink_(sink) {}
  void lap(const std::string& stage) {
    const auto now = std::chrono::steady_clock::now();
    sink_.push_back({stage, std::chrono::duration<double>(now - last_).count()});
    last_ = now;
  }

 private:
  std::vector<StageTiming>& sink_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

inline StageError stage_error(int scan, const std::string& stage, const std::exception& e) {
  if (const auto* ie = dynamic_cast<const Error*>(&e)) return {scan, stage, ie->code(), ie->what()};
  return {scan, stage, errc::invalid_argument, e.what()};
}

}  // namespace detail

/// Scan, filter, search, estimate and detect on one scene. Failures inside
/// a candidate's estimation or detection mark that candidate as failed and
/// are collected in the report; other candidates proceed.
inline RunReport run_pipeline(const ExperimentConfig& config, const Scene& scene) {
  config.validate();
  const SystemConfig cfg = config.effective_system();
  const BeamPlan plan = config.plan();
  const IirFilter filt = design(config.filter);
  const int n_beams = plan.size();

  RunReport rep;
  rep.seed = config.seed;
  rep.config_hash = config_hash(config);
  rep.noise_var = cfg.noise_var;
  detail::StageClock clock(rep.timings);

  std::vector<EchoTensor> raw(static_cast<size_t>(n_beams)), filtered(static_cast<size_t>(n_beams));
  parallel_for(n_beams, config.threads,
               [&](int b) { raw[b] = synthesize_echo(scene, plan, b, cfg, config.noise_seed()); });
  clock.lap("synthesize");
  parallel_for(n_beams, config.threads, [&](int b) { filtered[b] = normalize_by_gain(raw[b], plan, cfg); });
  rep.spectrum_prefilter = scan_spectrum(filtered);
  clock.lap("normalize");
  parallel_for(n_beams, config.threads,
               [&](int b) { filtered[b] = filter_symbols(filtered[b], filt, config.filter.warmup); });
  clock.lap("filter");
  rep.spectrum = scan_spectrum(filtered);
  clock.lap("spectrum");
  rep.peaks = find_peaks(rep.spectrum, config.detector.peak_threshold);
  clock.lap("peaks");

  const RMat lane_map = filter_matrix(filt, cfg.n_sym, config.filter.warmup);
  const int nc = static_cast<int>(rep.peaks.size());
  rep.candidates.resize(static_cast<size_t>(nc));
  std::vector<std::optional<StageError>> errs(static_cast<size_t>(nc));
  parallel_for(nc, config.threads, [&](int i) {
    auto& c = rep.candidates[i];
    c.scan = rep.peaks[i];
    try {
      c.estimate = estimate_candidate(filtered[c.scan], cfg, &lane_map);
      c.estimated = true;
    } catch (const std::exception& e) {
      errs[i] = detail::stage_error(c.scan, "estimate", e);
    }
  });
  clock.lap("estimate");

  parallel_for(nc, config.threads, [&](int i) {
    auto& c = rep.candidates[i];
    if (!c.estimated) return;
    if (!plan.covers(c.scan, c.estimate.theta_hat)) {
      c.status = CandidateStatus::rejected_coverage;
      return;
    }
    try {
      const GlrDetector det(sample_grid(c.scan, plan, cfg, config.detector.grid), plan, cfg);
      const Candidate cand{c.estimate.psi_d_hat, c.estimate.psi_r_hat, c.estimate.psi_s_hat};
      c.glr = det.evaluate(raw[c.scan], cand);
      apply_threshold(c.glr, threshold_for_pfa(config.detector.p_fa, det.residual_dof()));
      c.status = c.glr.undetectable ? CandidateStatus::undetectable
                 : c.glr.decision   ? CandidateStatus::detected
                                    : CandidateStatus::rejected_glrt;
    } catch (const std::exception& e) {
      c.status = CandidateStatus::failed;
      errs[i] = detail::stage_error(c.scan, "detect", e);
    }
  });
  clock.lap("detect");
  for (auto& e : errs)
    if (e) rep.errors.push_back(*e);
  return rep;
}

inline RunReport run_pipeline(const ExperimentConfig& config) { return run_pipeline(config, config.make_scene()); }

/// CSV: b,theta_deg,range_m,speed_mps,psi_s,psi_r,psi_d
inline std::string estimates_csv(const RunReport& rep) {
  std::string s = estimates_csv_header();
  for (const auto& c : rep.candidates)
    if (c.estimated) s += estimates_csv_row(c.estimate);
  return s;
}

/// CSV: b,theta_deg,range_m,speed_mps,t,gamma,status
inline std::string detections_csv(const RunReport& rep) {
  std::ostringstream os;
  os.precision(12);
  os << "b,theta_deg,range_m,speed_mps,t,gamma,status\n";
  for (const auto& c : rep.candidates)
    os << c.scan << ',' << rad2deg(c.estimate.theta_hat) << ',' << c.estimate.range_hat << ','
       << c.estimate.speed_hat << ',' << c.glr.t << ',' << c.glr.gamma << ',' << to_string(c.status) << '\n';
  return os.str();
}

inline json manifest(const ExperimentConfig& config, const RunReport& rep, const std::string& command) {
  json timings = json::object(), errors = json::array();
  for (const auto& t : rep.timings) timings[t.stage] = t.seconds;
  for (const auto& e : rep.errors)
    errors.push_back({{"scan", e.scan}, {"stage", e.stage}, {"code", to_string(e.code)}, {"message", e.message}});
  return {{"command", command},
          {"version", version},
          {"seed", config.seed},
          {"config_hash", rep.config_hash},
          {"noise_var", rep.noise_var},
          {"threads", config.threads},
          {"n_candidates", rep.candidates.size()},
          {"n_detections", rep.detections().size()},
          {"wall_time_s", timings},
          {"errors", errors},
          {"config", to_json(config)}};
}

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, errc::io_error, "cannot create directory " + dir + ": " + ec.message());
}

inline void write_run_outputs(const std::string& dir, const ExperimentConfig& config, const RunReport& rep,
                              const std::string& command) {
  ensure_dir(dir);
  const auto path = [&](const char* f) { return (std::filesystem::path(dir) / f).string(); };
  write_text_file(path("spectrum.csv"), spectrum_csv(rep.spectrum, config.plan()));
  write_text_file(path("spectrum_prefilter.csv"), spectrum_csv(rep.spectrum_prefilter, config.plan()));
  write_text_file(path("estimates.csv"), estimates_csv(rep));
  write_text_file(path("detections.csv"), detections_csv(rep));
  write_text_file(path("manifest.json"), manifest(config, rep, command).dump(2) + "\n");
}

// ---- SNR sweep ---------------------------------------------------------

struct SweepRow {
  double snr_db = 0.0;
  std::string param;  // theta_<i> (rad^2), range_<i> (m^2), speed_<i> ((m/s)^2), i 1-based
  double mse = 0.0;
  double crb = 0.0;
  int n_valid = 0;
};

/// Monte-Carlo MSE of the candidate estimator in each target's covering
/// beam, next to the CRB of that beam. Noise is the only random element
/// across trials.
inline std::vector<SweepRow> sweep_snr(const ExperimentConfig& config, const Scene& scene) {
  config.validate();
  const BeamPlan plan = config.plan();
  const IirFilter filt = design(config.filter);
  const RMat lane_map = filter_matrix(filt, config.system.n_sym, config.filter.warmup);
  const int nt = static_cast<int>(scene.targets.size());
  std::vector<SweepRow> rows;
  for (int i = 0; i < nt; ++i) {
    const auto& tgt = scene.targets[i];
    const auto b = plan.beam_of(tgt.theta);
    require(b.has_value(), errc::invalid_argument, "target outside the scanned sector");
    SystemConfig cfg = config.system;
    cfg.noise_var = 0.0;
    const EchoTensor clean = synthesize_clean(scene, plan, *b, cfg);
    for (size_t si = 0; si < config.snr_list_db.size(); ++si) {
      cfg.noise_var = snr_db_to_noise_var(config.snr_list_db[si]);
      const CrbResult crb = crb_eta_t(fim_blocks(*b, scene, plan, cfg), nt);
      std::vector<std::array<double, 3>> err(static_cast<size_t>(config.n_trials));
      std::vector<char> ok(static_cast<size_t>(config.n_trials), 0);
      parallel_for(config.n_trials, config.threads, [&](int k) {
        EchoTensor y = clean;
        add_noise(y, cfg.noise_var,
                  derive_seed(derive_seed(derive_seed(config.noise_seed(), static_cast<std::uint64_t>(i)), si),
                              static_cast<std::uint64_t>(k)));
        try {
          const auto e = estimate_candidate(
              filter_symbols(normalize_by_gain(y, plan, cfg), filt, config.filter.warmup), cfg, &lane_map);
          err[k] = {e.theta_hat - tgt.theta, e.range_hat - tgt.range, e.speed_hat - tgt.speed};
          ok[k] = 1;
        } catch (const Error&) {
        }
      });
      std::array<double, 3> mse{0.0, 0.0, 0.0};
      int n_ok = 0;
      for (int k = 0; k < config.n_trials; ++k) {
        if (!ok[k]) continue;
        ++n_ok;
        for (int q = 0; q < 3; ++q) mse[q] += err[k][q] * err[k][q];
      }
      for (auto& m : mse) m = n_ok ? m / n_ok : std::numeric_limits<double>::quiet_NaN();
      const std::string idx = std::to_string(i + 1);
      rows.push_back({config.snr_list_db[si], "theta_" + idx, mse[0], crb.var_theta(i), n_ok});
      rows.push_back({config.snr_list_db[si], "range_" + idx, mse[1], crb.var_range(i), n_ok});
      rows.push_back({config.snr_list_db[si], "speed_" + idx, mse[2], crb.var_speed(i), n_ok});
    }
  }
  return rows;
}

inline std::vector<SweepRow> sweep_snr(const ExperimentConfig& config) {
  return sweep_snr(config, config.make_scene());
}

/// CSV: snr_db,param,mse,crb
inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os.precision(12);
  os << "snr_db,param,mse,crb\n";
  for (const auto& r : rows) os << r.snr_db << ',' << r.param << ',' << r.mse << ',' << r.crb << '\n';
  return os.str();
}

// ---- CRB table ---------------------------------------------------------

/// One CRB record per SNR; entry i is evaluated in the beam covering target i.
inline json crb_table(const ExperimentConfig& config, const Scene& scene) {
  config.validate();
  const BeamPlan plan = config.plan();
  const int nt = static_cast<int>(scene.targets.size());
  require(nt >= 1, errc::invalid_argument, "CRB needs at least one target");
  json out = json::array();
  for (double snr : config.snr_list_db) {
    SystemConfig cfg = config.system;
    cfg.noise_var = snr_db_to_noise_var(snr);
    CrbResult merged;
    merged.n_targets = nt;
    merged.crb = RMat::Zero(3 * nt, 3 * nt);
    for (int i = 0; i < nt; ++i) {
      const auto b = plan.beam_of(scene.targets[i].theta);
      require(b.has_value(), errc::invalid_argument, "target outside the scanned sector");
      const CrbResult r = crb_eta_t(fim_blocks(*b, scene, plan, cfg), nt);
      for (int q = 0; q < 3; ++q) merged.crb(q * nt + i, q * nt + i) = r.crb(q * nt + i, q * nt + i);
    }
    out.push_back(crb_to_json(snr, merged));
  }
  return out;
}

// ---- ROC ---------------------------------------------------------------

/// H1 is the configured scene; H0 removes the tested target. The detector
/// is evaluated in that target's covering beam at its true frequencies.
inline std::vector<RocCurve> roc_experiment(const ExperimentConfig& config, const Scene& scene) {
  config.validate();
  const int ti = config.roc.target_index;
  require(ti >= 0 && ti < static_cast<int>(scene.targets.size()), errc::invalid_argument,
          "ROC target index out of range");
  const BeamPlan plan = config.plan();
  const Target& tgt = scene.targets[ti];
  const auto b = plan.beam_of(tgt.theta);
  require(b.has_value(), errc::invalid_argument, "ROC target outside the scanned sector");
  Scene h0 = scene;
  h0.targets.erase(h0.targets.begin() + ti);
  const auto f = frequencies(tgt, config.system);
  RocSpec spec;
  spec.scan = *b;
  spec.candidate = {f.psi_d, f.psi_r, f.psi_s};
  spec.grid = config.detector.grid;
  spec.snr_db = config.roc.snr_list_db;
  spec.n_trials = config.roc.n_trials;
  spec.n_thresholds = config.roc.n_thresholds;
  spec.seed = config.noise_seed();
  spec.threads = config.threads;
  return roc_curve(h0, scene, config.system, plan, spec);
}

inline std::vector<RocCurve> roc_experiment(const ExperimentConfig& config) {
  return roc_experiment(config, config.make_scene());
}

}  // namespace isac

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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <string>

#include "isac/experiments.hpp"

using namespace isac;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int failures = 0;

void run(int id, const char* title, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > limit_s) {
    o.ok = false;
    o.detail += fmt("; runtime %.1f s exceeds %.0f s", secs, limit_s);
  }
  failures += !o.ok;
  std::printf("[%s] criterion %d: %s (%s; %.1f s)\n", o.ok ? "PASS" : "FAIL", id, title, o.detail.c_str(), secs);
  std::fflush(stdout);
}

// ---- 1 ----------------------------------------------------------------

Outcome noiseless_recovery() {
  ExperimentConfig c;
  c.system.noise_var = 0.0;
  c.threads = 1;
  const Scene scene = c.make_scene();
  const RunReport rep = run_pipeline(c, scene);
  const auto det = rep.detections();
  double e_th = 0.0, e_r = 0.0, e_v = 0.0;
  int matched = 0;
  for (const auto& t : scene.targets) {
    const CandidateReport* best = nullptr;
    for (const auto* d : det)
      if (!best || std::abs(d->estimate.theta_hat - t.theta) < std::abs(best->estimate.theta_hat - t.theta)) best = d;
    if (!best) continue;
    ++matched;
    e_th = std::max(e_th, rad2deg(std::abs(best->estimate.theta_hat - t.theta)));
    e_r = std::max(e_r, std::abs(best->estimate.range_hat - t.range));
    e_v = std::max(e_v, std::abs(best->estimate.speed_hat - t.speed));
  }
  const bool ok = det.size() == 2 && matched == 2 && e_th < 0.1 && e_r < 0.02 && e_v < 0.02;
  return {ok, fmt("%zu detections; max errors %.2e deg, %.2e m, %.2e m/s", det.size(), e_th, e_r, e_v)};
}

// ---- 2 ----------------------------------------------------------------

Outcome clutter_suppression() {
  ExperimentConfig c;
  c.system.noise_var = 0.0;
  c.threads = 4;
  Scene scene = c.make_scene();
  scene.targets.clear();
  const RunReport rep = run_pipeline(c, scene);
  double worst = -1e300;
  int worst_b = -1;
  for (Eigen::Index b = 0; b < rep.spectrum.size(); ++b) {
    const double drop = 10.0 * std::log10(rep.spectrum[b] / rep.spectrum_prefilter[b]);
    if (drop > worst) worst = drop, worst_b = static_cast<int>(b);
  }
  return {worst <= -40.0, fmt("%zu scatterers; weakest suppression %.1f dB at scan %d", scene.scatterers.size(),
                              -worst, worst_b)};
}

// ---- 3 ----------------------------------------------------------------

Outcome low_snr_search() {
  int hits = 0;
  const int trials = 20;
  for (int k = 0; k < trials; ++k) {
    ExperimentConfig c;
    c.snr_db = -30.0;
    c.seed = 100 + static_cast<std::uint64_t>(k);
    c.threads = 4;
    const Scene scene = c.make_scene();
    const RunReport rep = run_pipeline(c, scene);
    const BeamPlan plan = c.plan();
    const auto top = top_peaks(rep.spectrum, 2);
    bool all = top.size() == 2;
    for (const auto& t : scene.targets) {
      bool near = false;
      for (int b : top) near |= std::abs(plan.directions[b] - t.theta) <= plan.step() + 1e-12;
      all &= near;
    }
    hits += all;
  }
  return {hits >= 18, fmt("%d/%d trials resolve both targets", hits, trials)};
}

// ---- 4 ----------------------------------------------------------------

double grid_music(const CMat& f) {
  const CMat vn = noise_subspace(f);
  const int m = static_cast<int>(f.rows());
  auto cost = [&](double psi) { return (vn.adjoint() * steering(psi, m)).squaredNorm(); };
  double best = 0.0, best_c = 1e300;
  for (double psi = -0.5; psi < 0.5; psi += 1e-3)
    if (const double v = cost(psi); v < best_c) best_c = v, best = psi;
  const double center = best;
  for (double psi = center - 1e-3; psi <= center + 1e-3; psi += 1e-6)
    if (const double v = cost(psi); v < best_c) best_c = v, best = psi;
  return wrap_frequency(best);
}

Outcome root_music_oracle() {
  Rng rng(404);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::uniform_int_distribution<int> um(4, 16), ui(4, 32);
  double worst_grid = 0.0, worst_pair = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const double psi = u(rng);
    const int m = um(rng), n = ui(rng);
    CMat f(m, n);
    const CVec a = steering(psi, m);
    for (int i = 0; i < n; ++i) f.col(i) = complex_normal(rng, 1.0) * a;
    const double est = root_music_frequency({f, Axis::spatial});
    worst_grid = std::max(worst_grid, std::abs(wrap_frequency(est - grid_music(f))));
    const auto roots = root_music_roots(f);
    for (const auto& z : roots) {
      const cplx mirror = 1.0 / std::conj(z);
      double best = 1e300;
      for (const auto& w : roots) best = std::min(best, std::abs(w - mirror));
      worst_pair = std::max(worst_pair, best / std::max(1.0, std::abs(mirror)));
    }
  }
  return {worst_grid < 1e-4 && worst_pair < 1e-8,
          fmt("max |root - grid| %.2e; max pairing error %.2e", worst_grid, worst_pair)};
}

// ---- 5 ----------------------------------------------------------------

Outcome estimator_efficiency() {
  ExperimentConfig c;
  c.snr_list_db = {20.0};
  c.n_trials = 100;
  c.threads = 4;
  const auto rows = sweep_snr(c);
  double worst = 0.0;
  std::string parts;
  bool valid = true;
  for (const auto& r : rows) {
    const double ratio = r.mse / r.crb;
    worst = std::max(worst, std::isfinite(ratio) ? ratio : 1e300);
    valid &= r.n_valid == c.n_trials;
    parts += fmt("%s %.2f ", r.param.c_str(), ratio);
  }
  parts.pop_back();
  return {worst < 2.0 && valid, "MSE/CRB at 20 dB: " + parts};
}

// ---- 6 ----------------------------------------------------------------

CVec perturbed_response(Scene s, ElementRef e, int q, double h, int b, int l, int p, const BeamPlan& plan,
                        const SystemConfig& cfg) {
  if (e.kind == ElementRef::Kind::target) {
    auto& t = s.targets[e.index];
    (q == 0 ? t.theta : q == 1 ? t.range : t.speed) += h;
  } else {
    auto& sc = s.scatterers[e.index];
    (q == 0 ? sc.theta : sc.range) += h;
  }
  return response_vector(b, e, l, p, s, plan, cfg);
}

Outcome crb_internals() {
  SystemConfig cfg;
  const BeamPlan plan = default_scan_plan(cfg);
  SceneSpec spec;
  spec.n_scatterers = 8;
  double worst_fd = 0.0, worst_psd = 0.0, worst_lin = 0.0;
  const double h = 1e-6;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Scene s = generate_scene(spec, 7000 + seed);
    const int b = *plan.beam_of(s.targets[seed % 2].theta);
    const int l = static_cast<int>(seed % 16), p = static_cast<int>((7 * seed) % 20);
    const DerivativeMatrices d = derivative_matrices(b, l, p, s, plan, cfg);
    const int nt = static_cast<int>(s.targets.size()), ns = static_cast<int>(s.scatterers.size());
    auto check = [&](const CVec& analytic, ElementRef e, int q) {
      const CVec fd = (perturbed_response(s, e, q, h, b, l, p, plan, cfg) -
                       perturbed_response(s, e, q, -h, b, l, p, plan, cfg)) /
                      (2.0 * h);
      if (fd.norm() == 0.0 && analytic.norm() == 0.0) return;
      worst_fd = std::max(worst_fd, (analytic - fd).norm() / fd.norm());
    };
    for (int i = 0; i < nt; ++i)
      for (int q = 0; q < 3; ++q) check(d.targets.col(q * nt + i), {ElementRef::Kind::target, i}, q);
    for (int i = 0; i < ns; ++i)
      for (int q = 0; q < 2; ++q) check(d.scatterers.col(q * ns + i), {ElementRef::Kind::scatterer, i}, q);

    SystemConfig c1 = cfg;
    c1.noise_var = 0.5;
    const FimBlocks fb = fim_blocks(b, s, plan, c1);
    const RMat full = fb.assembled();
    Eigen::SelfAdjointEigenSolver<RMat> es(full);
    worst_psd = std::max(worst_psd, -es.eigenvalues().minCoeff() / full.trace());
    const RVec d1 = crb_eta_t(fb, nt).crb.diagonal() / c1.noise_var;
    c1.noise_var = 0.05;
    const RVec d2 = crb_eta_t(fim_blocks(b, s, plan, c1), nt).crb.diagonal() / c1.noise_var;
    worst_lin = std::max(worst_lin, ((d1 - d2).cwiseAbs().array() / d1.cwiseAbs().array()).maxCoeff());
  }
  return {worst_fd < 1e-4 && worst_psd <= 1e-10 && worst_lin < 1e-9,
          fmt("max derivative rel. error %.2e; min FIM eigenvalue/trace %.2e; CRB linearity %.2e", worst_fd,
              -worst_psd, worst_lin)};
}

// ---- 7 ----------------------------------------------------------------

Outcome glrt_invariants() {
  SystemConfig cfg;
  cfg.noise_var = 1.0;
  const BeamPlan plan = default_scan_plan(cfg);
  const Scene ref = reference_scene(3);
  const int b = *plan.beam_of(ref.targets[0].theta);
  const DetectionGrid grid = sample_grid(b, plan, cfg);
  const GlrDetector det(grid, plan, cfg);
  const auto fr = frequencies(ref.targets[0], cfg);
  const Candidate cand{fr.psi_d, fr.psi_r, fr.psi_s};

  // Scale invariance on realistic (off-grid clutter, noisy) data.
  const EchoTensor y = synthesize_echo(ref, plan, b, cfg, 9);
  const double t0 = det.evaluate(y, cand).t;
  double worst_scale = 0.0;
  for (cplx k : {cplx(1e-4, 0.0), cplx(3.0, -7.0), cplx(0.0, 1e5)}) {
    EchoTensor z = y;
    for (auto& v : z.data) v *= k;
    worst_scale = std::max(worst_scale, std::abs(det.evaluate(z, cand).t - t0) / t0);
  }

  // Clutter placed on grid points is removed by the projector.
  Scene on_grid;
  Rng rng(77);
  for (const auto& [pr, ps] : grid.points)
    on_grid.scatterers.push_back(
        {std::asin(ps * cfg.wavelength() / cfg.d_spacing), pr * speed_of_light / (2.0 * cfg.delta_f),
         complex_normal(rng, 1.0)});
  const EchoTensor clutter = synthesize_clean(on_grid, plan, b, cfg);
  const double residual = det.project_out(clutter.flat()).norm() / clutter.flat().norm();

  // False alarms over H0 (on-grid clutter plus noise) at the analytic threshold.
  const double target_pfa = 0.05;
  const double gamma = threshold_for_pfa(target_pfa, det.residual_dof());
  const int trials = 2000;
  std::vector<char> fa(trials, 0);
  parallel_for(trials, 4, [&](int k) {
    EchoTensor h0 = clutter;
    add_noise(h0, cfg.noise_var, derive_seed(555, static_cast<std::uint64_t>(k)));
    fa[k] = det.evaluate(h0, cand).t > gamma;
  });
  const double pfa = double(std::count(fa.begin(), fa.end(), 1)) / trials;
  return {worst_scale < 1e-10 && residual < 1e-8 && std::abs(pfa - target_pfa) <= 0.02,
          fmt("scale rel. change %.2e; on-grid residual %.2e; P_FA %.4f vs target %.2f", worst_scale, residual, pfa,
              target_pfa)};
}

// ---- 8 ----------------------------------------------------------------

Outcome roc_ordering() {
  ExperimentConfig c;
  c.roc.snr_list_db = {-30.0, -10.0};
  c.roc.n_trials = 500;
  c.threads = 4;
  const auto curves = roc_experiment(c);
  std::set<double> pfas;
  for (const auto& cv : curves)
    for (const auto& pt : cv.points) pfas.insert(pt.p_fa);
  int violations = 0;
  double area_lo = 0.0, area_hi = 0.0;
  for (double pf : pfas) {
    const double lo = roc_pd_at(curves[0], pf), hi = roc_pd_at(curves[1], pf);
    violations += hi < lo;
    area_lo += lo;
    area_hi += hi;
  }
  return {violations == 0, fmt("%zu P_FA points, %d violations; mean P_D %.3f at -10 dB vs %.3f at -30 dB",
                               pfas.size(), violations, area_hi / pfas.size(), area_lo / pfas.size())};
}

}  // namespace

int main() {
  run(1, "noiseless ground-truth recovery", 60, noiseless_recovery);
  run(2, "clutter suppression >= 40 dB", 30, clutter_suppression);
  run(3, "target search at -30 dB", 300, low_snr_search);
  run(4, "root-MUSIC oracle equivalence", 10, root_music_oracle);
  run(5, "estimator efficiency at 20 dB", 600, estimator_efficiency);
  run(6, "CRB internals", 60, crb_internals);
  run(7, "GLRT invariants", 300, glrt_invariants);
  run(8, "ROC ordering", 600, roc_ordering);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

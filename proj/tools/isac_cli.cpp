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


// Command-line front end. Every subcommand prints one JSON object on
// stdout; failures print {"error": {...}} and exit nonzero.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "isac/experiments.hpp"

namespace {

using isac::json;

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
  std::optional<double> snr_db;
  std::optional<double> p_fa;
};

isac::ExperimentConfig load_config(const CommonOptions& o) {
  isac::ExperimentConfig c;
  if (!o.config_path.empty()) c = isac::config_from_json(isac::read_json_file(o.config_path));
  if (o.seed) c.seed = *o.seed;
  if (o.out_dir) c.out_dir = *o.out_dir;
  if (o.threads) c.threads = *o.threads;
  if (o.snr_db) c.snr_db = *o.snr_db;
  if (o.p_fa) c.detector.p_fa = *o.p_fa;
  c.validate();
  return c;
}

std::string out_path(const isac::ExperimentConfig& c, const char* name) {
  return (std::filesystem::path(c.out_dir) / name).string();
}

json run_manifest_only(const isac::ExperimentConfig& c, const std::string& command, double seconds) {
  return {{"command", command},
          {"version", isac::version},
          {"seed", c.seed},
          {"config_hash", isac::config_hash(c)},
          {"threads", c.threads},
          {"wall_time_s", {{"total", seconds}}},
          {"config", isac::to_json(c)}};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json cmd_simulate(const isac::ExperimentConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const isac::Scene scene = c.make_scene();
  const isac::SystemConfig cfg = c.effective_system();
  const isac::BeamPlan plan = c.plan();
  isac::ensure_dir(c.out_dir);
  isac::write_text_file(out_path(c, "scene.json"), isac::to_json(scene).dump(2) + "\n");
  isac::write_text_file(out_path(c, "beams.csv"), isac::plan_csv(plan));
  std::vector<isac::EchoTensor> echoes(static_cast<size_t>(plan.size()));
  isac::parallel_for(plan.size(), c.threads,
                     [&](int b) { echoes[b] = isac::synthesize_echo(scene, plan, b, cfg, c.noise_seed()); });
  {
    std::ofstream os(out_path(c, "echo.bin"), std::ios::binary);
    isac::require(static_cast<bool>(os), isac::errc::io_error, "cannot open echo.bin");
    for (const auto& y : echoes) isac::write_echo(os, y);
  }
  isac::write_text_file(out_path(c, "manifest.json"),
                        run_manifest_only(c, "simulate", seconds_since(t0)).dump(2) + "\n");
  return {{"scans", plan.size()},
          {"targets", scene.targets.size()},
          {"scatterers", scene.scatterers.size()},
          {"noise_var", cfg.noise_var},
          {"out_dir", c.out_dir}};
}

json pipeline_summary(const isac::ExperimentConfig& c, const isac::RunReport& rep) {
  json det = json::array();
  for (const auto* d : rep.detections())
    det.push_back({{"b", d->scan},
                   {"theta_deg", isac::rad2deg(d->estimate.theta_hat)},
                   {"range_m", d->estimate.range_hat},
                   {"speed_mps", d->estimate.speed_hat},
                   {"t", d->glr.t}});
  return {{"peaks", rep.peaks},
          {"candidates", rep.candidates.size()},
          {"detections", det},
          {"errors", rep.errors.size()},
          {"out_dir", c.out_dir}};
}

json cmd_pipeline(const isac::ExperimentConfig& c, const std::string& command) {
  const isac::RunReport rep = isac::run_pipeline(c);
  isac::write_run_outputs(c.out_dir, c, rep, command);
  json out = pipeline_summary(c, rep);
  if (command == "scan") {
    out.erase("detections");
    out["filter"] = isac::to_json(isac::design(c.filter));
  } else if (command == "estimate") {
    json est = json::array();
    for (const auto& cand : rep.candidates)
      if (cand.estimated)
        est.push_back({{"b", cand.scan},
                       {"theta_deg", isac::rad2deg(cand.estimate.theta_hat)},
                       {"range_m", cand.estimate.range_hat},
                       {"speed_mps", cand.estimate.speed_hat}});
    out.erase("detections");
    out["estimates"] = est;
  }
  return out;
}

json cmd_roc(const isac::ExperimentConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto curves = isac::roc_experiment(c);
  isac::ensure_dir(c.out_dir);
  isac::write_text_file(out_path(c, "roc.csv"), isac::roc_csv(curves));
  isac::write_text_file(out_path(c, "manifest.json"), run_manifest_only(c, "roc", seconds_since(t0)).dump(2) + "\n");
  json pd = json::object();
  for (const auto& cv : curves) pd[std::to_string(cv.snr_db)] = isac::roc_pd_at(cv, c.detector.p_fa);
  return {{"p_fa", c.detector.p_fa}, {"p_d", pd}, {"out_dir", c.out_dir}};
}

json cmd_crb(const isac::ExperimentConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const json table = isac::crb_table(c, c.make_scene());
  isac::ensure_dir(c.out_dir);
  isac::write_text_file(out_path(c, "crb.json"), table.dump(2) + "\n");
  isac::write_text_file(out_path(c, "manifest.json"), run_manifest_only(c, "crb", seconds_since(t0)).dump(2) + "\n");
  return {{"records", table.size()}, {"out_dir", c.out_dir}};
}

json cmd_sweep(const isac::ExperimentConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = isac::sweep_snr(c);
  isac::ensure_dir(c.out_dir);
  isac::write_text_file(out_path(c, "sweep.csv"), isac::sweep_csv(rows));
  isac::write_text_file(out_path(c, "manifest.json"),
                        run_manifest_only(c, "sweep-snr", seconds_since(t0)).dump(2) + "\n");
  json ratio = json::object();
  for (const auto& r : rows)
    if (r.snr_db == c.snr_list_db.back()) ratio[r.param] = r.mse / r.crb;
  return {{"rows", rows.size()}, {"mse_over_crb_at_top_snr", ratio}, {"out_dir", c.out_dir}};
}

int fail(std::string_view code, const std::string& message, int status) {
  std::cout << json{{"error", {{"code", code}, {"message", message}}}}.dump() << std::endl;
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moving target sensing for OFDM ISAC in clutter"};
  app.set_version_flag("--version", std::string(isac::version));
  app.require_subcommand(1);

  CommonOptions opt;
  const std::pair<const char*, const char*> commands[] = {
      {"simulate", "Draw the scene and write per-scan echoes"},
      {"scan", "Beam scan, clutter filtering and scan spectrum"},
      {"estimate", "Scan and estimate angle, range and speed at spectrum peaks"},
      {"detect", "Full pipeline with GLRT confirmation of candidates"},
      {"roc", "Monte-Carlo ROC of the GLRT detector"},
      {"crb", "Cramer-Rao bounds of the target parameters"},
      {"sweep-snr", "Monte-Carlo MSE against the CRB over an SNR list"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config_path, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", opt.seed, "Base random seed");
    sub->add_option("--out-dir", opt.out_dir, "Output directory");
    sub->add_option("--threads", opt.threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--snr-db", opt.snr_db, "Single-run SNR in dB (noise variance 10^(-SNR/10))");
    sub->add_option("--pfa", opt.p_fa, "False-alarm probability used to set the GLRT threshold")
        ->check(CLI::Range(0.0, 1.0));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    const std::string command = app.get_subcommands().front()->get_name();
    const isac::ExperimentConfig cfg = load_config(opt);
    json result;
    if (command == "simulate") result = cmd_simulate(cfg);
    else if (command == "roc") result = cmd_roc(cfg);
    else if (command == "crb") result = cmd_crb(cfg);
    else if (command == "sweep-snr") result = cmd_sweep(cfg);
    else result = cmd_pipeline(cfg, command);
    result["command"] = command;
    std::cout << result.dump() << std::endl;
    return 0;
  } catch (const isac::Error& e) {
    return fail(isac::to_string(e.code()), e.what(), 1);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
}

/* Copyright 2026 The Cisspin Authors. All Rights Reserved.
Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at
    http://www.apache.org/licenses/LICENSE-2.0
Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ciss/config.hpp"
#include "ciss/output.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

ciss::RunConfig load_with_overrides(const std::string& path, const std::string& out_dir,
                                    int threads, int orientations, bool no_plots) {
  ciss::RunConfig cfg = ciss::load_config(path);
  if (!out_dir.empty()) cfg.output.dir = out_dir;
  if (threads > 0) cfg.threads = threads;
  if (no_plots) cfg.output.plots = false;
  if (orientations > 0) {
    if (cfg.experiment.type == ciss::ExperimentSpec::Type::Trepr &&
        cfg.experiment.trepr.orientation.powder)
      cfg.experiment.trepr.orientation.n_points = orientations;
    else
      std::cerr << "[cisspin] --orientations ignored: plan is not a powder sweep\n";
  }
  cfg.validate();
  return cfg;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, int threads,
            int orientations, bool no_plots) {
  ciss::RunConfig cfg =
      load_with_overrides(config_path, out_dir, threads, orientations, no_plots);
  auto files = ciss::run(cfg);
  for (const auto& f : files) std::cout << "wrote " << f << "\n";
  return kExitOk;
}

int cmd_validate(const std::string& config_path) {
  ciss::RunConfig cfg = ciss::load_config(config_path);
  std::cout << "ok: " << config_path << " (hash " << ciss::config_hash(cfg) << ")\n";
  std::cout << cfg.to_json().dump(1) << "\n";
  return kExitOk;
}

int cmd_transitions(const std::string& config_path, double field_mT) {
  ciss::RunConfig cfg = ciss::load_config(config_path);
  ciss::Vec3 B;
  if (field_mT > 0) {
    B = ciss::Vec3(0, 0, field_mT * 1e-3);
  } else if (cfg.experiment.type == ciss::ExperimentSpec::Type::Nmr) {
    B = cfg.experiment.nmr.b0_T;
  } else {
    const auto& grid = cfg.experiment.trepr.b_grid_mT;
    B = ciss::Vec3(0, 0, grid[grid.size() / 2] * 1e-3);
  }

  ciss::Matrix H = ciss::build_static_hamiltonian(cfg.system, B);
  std::vector<ciss::Matrix> obs = {ciss::total_electron_spin(cfg.system, ciss::Axis::x)};
  auto table = ciss::transition_table(H, obs);

  std::printf("# transitions at B = (%g, %g, %g) T\n", B.x(), B.y(), B.z());
  std::printf("i,j,gap_MHz,me2\n");
  for (const auto& t : table)
    std::printf("%d,%d,%.10g,%.10g\n", t.i, t.j, t.gap_MHz, t.me2);
  return kExitOk;
}

int cmd_plot(const std::string& csv_path, const std::string& out_dir) {
  ciss::SpectrumResult spec = ciss::read_spectrum_csv(csv_path);
  namespace fs = std::filesystem;
  fs::path out = out_dir.empty() ? fs::path(csv_path).replace_extension(".svg")
                                 : fs::path(out_dir) /
                                       fs::path(csv_path).filename().replace_extension(".svg");
  if (!out_dir.empty()) fs::create_directories(out_dir);
  ciss::write_spectrum_svg(out.string(), spec);
  std::cout << "wrote " << out.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cisspin: spin-dynamics simulator for radical-pair magnetic resonance"};
  app.require_subcommand(1);

  std::string config_path, out_dir, csv_path;
  int threads = 0, orientations = 0;
  double field_mT = 0;
  bool no_plots = false;

  auto* run_cmd = app.add_subcommand("run", "execute a config and write results");
  run_cmd->add_option("--config", config_path, "config file")->required();
  run_cmd->add_option("--out", out_dir, "output directory override");
  run_cmd->add_option("--threads", threads, "worker thread count override");
  run_cmd->add_option("--orientations", orientations, "powder orientation count override");
  run_cmd->add_flag("--no-plots", no_plots, "skip SVG output");

  auto* val_cmd = app.add_subcommand("validate", "parse and echo a config");
  val_cmd->add_option("--config", config_path, "config file")->required();

  auto* trans_cmd = app.add_subcommand("transitions", "dump the transition table");
  trans_cmd->add_option("--config", config_path, "config file")->required();
  trans_cmd->add_option("--field-mT", field_mT, "static field (defaults to plan midpoint)");

  auto* plot_cmd = app.add_subcommand("plot", "re-render a result CSV as SVG");
  plot_cmd->add_option("--csv", csv_path, "spectrum CSV")->required();
  plot_cmd->add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run_cmd->parsed())
      return cmd_run(config_path, out_dir, threads, orientations, no_plots);
    if (val_cmd->parsed()) return cmd_validate(config_path);
    if (trans_cmd->parsed()) return cmd_transitions(config_path, field_mT);
    if (plot_cmd->parsed()) return cmd_plot(csv_path, out_dir);
  } catch (const ciss::ConfigError& e) {
    std::cerr << "{\"error\":\"config\",\"message\":\"" << e.what() << "\"}\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "{\"error\":\"numerical\",\"message\":\"" << e.what() << "\"}\n";
    return kExitNumerical;
  }
  return kExitOk;
}

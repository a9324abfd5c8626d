// dfltrack: simulate, track, evaluate and sweep RSS-based device-free
// localization scenarios. See README.md for file formats.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dfl/pipeline.hpp"

namespace {

struct UseFreqFlag {
  std::optional<bool> value;
};

void add_use_freq(CLI::App* cmd, UseFreqFlag& flag) {
  cmd->add_option_function<std::string>(
         "--use-freq",
         [&flag](const std::string& v) {
           if (v == "on")
             flag.value = true;
           else if (v == "off")
             flag.value = false;
           else
             throw CLI::ValidationError("--use-freq expects 'on' or 'off'");
         },
         "Enable/disable the frequency-domain measurement (default: config)")
      ->expected(1);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RSS device-free localization simulator and tracker"};
  app.require_subcommand(1);
  app.set_version_flag("--version", dfl::kToolkitVersion);

  dfl::SimulateOptions sim_opt;
  std::uint64_t seed_value = 0;

  auto* sim = app.add_subcommand("simulate", "Synthesize a scenario trace");
  sim->add_option("--config", sim_opt.config_path, "Scenario config (JSON)")->required();
  sim->add_option("--out", sim_opt.out_dir, "Output directory")->required();
  auto* sim_seed = sim->add_option("--seed", seed_value, "Override the config seed");

  dfl::TrackOptions trk_opt;
  UseFreqFlag trk_freq;
  auto* trk = app.add_subcommand("track", "Track a recorded or synthesized trace");
  trk->add_option("--trace", trk_opt.trace_path, "Trace CSV")->required();
  trk->add_option("--config", trk_opt.config_path, "Scenario config (JSON)")->required();
  trk->add_option("--out", trk_opt.out_dir, "Output directory")->required();
  auto* trk_seed = trk->add_option("--seed", seed_value, "Tracker seed (default: config seed)");
  add_use_freq(trk, trk_freq);
  trk->add_option("--particle-stride", trk_opt.particle_stride,
                  "Snapshot every k-th tracked step (0 = off)");

  dfl::EvalOptions eval_opt;
  auto* ev = app.add_subcommand("eval", "Score estimates against ground truth");
  ev->add_option("--estimates", eval_opt.estimates_path, "Estimates CSV")->required();
  ev->add_option("--truth", eval_opt.truth_path, "Truth CSV")->required();
  ev->add_option("--particles", eval_opt.particles_path, "Particle snapshots CSV");
  ev->add_option("--config", eval_opt.config_path, "Scenario config (JSON)")->required();
  ev->add_option("--out", eval_opt.out_dir, "Output directory")->required();

  dfl::SweepOptions sweep_opt;
  auto* sw = app.add_subcommand("sweep", "Run a Monte Carlo parameter grid");
  sw->add_option("--grid", sweep_opt.grid_path, "Sweep grid (JSON)")->required();
  sw->add_option("--out", sweep_opt.out_dir, "Output directory")->required();
  auto* sw_seed = sw->add_option("--seed", seed_value, "Master seed (default: 1)");
  sw->add_option("--jobs", sweep_opt.jobs, "Worker threads (default: hardware)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : dfl::kExitConfig;
  }

  if (sim->parsed()) {
    if (!sim_seed->empty()) sim_opt.seed = seed_value;
    return dfl::cmd_simulate(sim_opt, std::cerr);
  }
  if (trk->parsed()) {
    if (!trk_seed->empty()) trk_opt.seed = seed_value;
    trk_opt.use_freq = trk_freq.value;
    return dfl::cmd_track(trk_opt, std::cerr);
  }
  if (ev->parsed()) return dfl::cmd_eval(eval_opt, std::cerr);
  if (sw->parsed()) {
    if (!sw_seed->empty()) sweep_opt.seed = seed_value;
    return dfl::cmd_sweep(sweep_opt, std::cerr);
  }
  return dfl::kExitConfig;
}

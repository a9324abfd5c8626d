#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dfl/pipeline.hpp"

using namespace dfl;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("dfl_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  os << content;
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

const char* kSmallConfig = R"({
  "seed": 9,
  "channels": 4,
  "trajectory": {"heading_deg": 20.0, "duration_s": 8.0},
  "preamble_s": 2.0,
  "calibration_window_s": 2.0,
  "tracker": {"particles": 128}
})";

}  // namespace

TEST_CASE("defaults match the reference operating point") {
  const auto cfg = default_config();
  CHECK(cfg.tracker.particle_count == 512);
  CHECK(cfg.tracker.measurement_noise.rss_var == doctest::Approx(2.0));
  CHECK(cfg.tracker.measurement_noise.freq_var == doctest::Approx(1.5));
  CHECK(cfg.tracker.measurement_noise.cross_cov == doctest::Approx(0.0));
  CHECK(cfg.tracker.process_noise.accel_std == doctest::Approx(0.4));
  CHECK(cfg.spectral.window_len == 20);
  CHECK(cfg.scenario.sample_interval_s == doctest::Approx(0.032));
  CHECK(cfg.scenario.channels == 16);
  CHECK(cfg.tracker.init.speed_max_mps == doctest::Approx(2.0));
  CHECK(cfg.tracker.init.heading_spread_rad == doctest::Approx(M_PI / 4));
  CHECK(cfg.scenario.links.size() == 2);
  CHECK(cfg.scenario.links[0].carrier_frequency_hz == doctest::Approx(2.4e9));
}

TEST_CASE("config snapshot round-trips exactly") {
  auto cfg = parse_config(nlohmann::json::parse(kSmallConfig));
  const auto snapshot = to_json(cfg);
  const auto reparsed = parse_config(snapshot);
  CHECK(to_json(reparsed) == snapshot);
  CHECK(reparsed.scenario.trajectory.heading_rad == cfg.scenario.trajectory.heading_rad);
  CHECK(reparsed.tracker.init.heading_spread_rad == cfg.tracker.init.heading_spread_rad);
  CHECK(reparsed.scenario.trajectory.start.x == cfg.scenario.trajectory.start.x);
}

TEST_CASE("config rejects unknown keys and bad values") {
  CHECK_THROWS_AS(parse_config(nlohmann::json{{"typo_key", 1}}), ConfigError);
  CHECK_THROWS_AS(parse_config(nlohmann::json{{"tracker", {{"particles", 0}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(nlohmann::json{{"corridor", {{"receivers", 5}}}}), ConfigError);
  CHECK_THROWS_AS(
      parse_config(nlohmann::json{
          {"trajectory", {{"heading_deg", 5.0}, {"heading_rad", 0.1}}}}),
      ConfigError);
}

TEST_CASE("three-receiver corridor layout") {
  const auto cfg = parse_config(nlohmann::json{{"corridor", {{"receivers", 3}}}});
  REQUIRE(cfg.scenario.links.size() == 3);
  CHECK(cfg.scenario.links[1].rx.x == doctest::Approx(0.5));
  for (const auto& l : cfg.scenario.links) {
    CHECK(l.tx.x == doctest::Approx(0.0));
    CHECK(l.tx.y == doctest::Approx(-1.5));
    CHECK(l.rx.y == doctest::Approx(1.5));
  }
}

TEST_CASE("simulate exit codes") {
  TempDir tmp;
  std::ostringstream diag;

  SimulateOptions missing{tmp.file("nope.json"), tmp.file("out"), std::nullopt};
  CHECK(cmd_simulate(missing, diag) == kExitConfig);

  write_file(tmp.file("bad.json"), "{ not json");
  SimulateOptions bad{tmp.file("bad.json"), tmp.file("out"), std::nullopt};
  CHECK(cmd_simulate(bad, diag) == kExitConfig);

  write_file(tmp.file("cfg.json"), kSmallConfig);
  SimulateOptions ok{tmp.file("cfg.json"), tmp.file("out"), std::nullopt};
  CHECK(cmd_simulate(ok, diag) == kExitOk);
  CHECK(fs::exists(tmp.file("out/trace.csv")));
  CHECK(fs::exists(tmp.file("out/truth.csv")));
  CHECK(fs::exists(tmp.file("out/manifest.json")));
}

TEST_CASE("simulate then track then eval round-trip, deterministic byte for byte") {
  TempDir tmp;
  std::ostringstream diag;
  write_file(tmp.file("cfg.json"), kSmallConfig);

  SimulateOptions sim{tmp.file("cfg.json"), tmp.file("sim"), std::nullopt};
  REQUIRE(cmd_simulate(sim, diag) == kExitOk);

  TrackOptions trk;
  trk.trace_path = tmp.file("sim/trace.csv");
  trk.config_path = tmp.file("cfg.json");
  trk.out_dir = tmp.file("trk");
  REQUIRE(cmd_track(trk, diag) == kExitOk);
  CHECK(fs::exists(tmp.file("trk/estimates.csv")));
  CHECK(fs::exists(tmp.file("trk/link_states.csv")));
  CHECK(fs::exists(tmp.file("trk/particles.csv")));

  // Re-running the whole chain reproduces every output byte.
  SimulateOptions sim2{tmp.file("cfg.json"), tmp.file("sim2"), std::nullopt};
  REQUIRE(cmd_simulate(sim2, diag) == kExitOk);
  CHECK(read_file(tmp.file("sim/trace.csv")) == read_file(tmp.file("sim2/trace.csv")));
  CHECK(read_file(tmp.file("sim/truth.csv")) == read_file(tmp.file("sim2/truth.csv")));

  TrackOptions trk2 = trk;
  trk2.trace_path = tmp.file("sim2/trace.csv");
  trk2.out_dir = tmp.file("trk2");
  REQUIRE(cmd_track(trk2, diag) == kExitOk);
  CHECK(read_file(tmp.file("trk/estimates.csv")) == read_file(tmp.file("trk2/estimates.csv")));
  CHECK(read_file(tmp.file("trk/particles.csv")) == read_file(tmp.file("trk2/particles.csv")));

  // Replaying from the manifest's config snapshot also reproduces outputs.
  const auto manifest = nlohmann::json::parse(read_file(tmp.file("sim/manifest.json")));
  write_file(tmp.file("snapshot.json"), manifest["config"].dump());
  SimulateOptions sim3{tmp.file("snapshot.json"), tmp.file("sim3"), std::nullopt};
  REQUIRE(cmd_simulate(sim3, diag) == kExitOk);
  CHECK(read_file(tmp.file("sim/trace.csv")) == read_file(tmp.file("sim3/trace.csv")));

  EvalOptions ev;
  ev.estimates_path = tmp.file("trk/estimates.csv");
  ev.truth_path = tmp.file("sim/truth.csv");
  ev.particles_path = tmp.file("trk/particles.csv");
  ev.config_path = tmp.file("cfg.json");
  ev.out_dir = tmp.file("eval");
  REQUIRE(cmd_eval(ev, diag) == kExitOk);

  const auto result = nlohmann::json::parse(read_file(tmp.file("eval/result.json")));
  CHECK(result.contains("eps_x_cm"));
  CHECK(result.contains("eps_pct"));

  // The file-based chain must agree with the in-memory pipeline.
  const auto cfg = load_config(tmp.file("cfg.json"));
  const auto reference = run_scenario(cfg, cfg.scenario.seed);
  CHECK(result["eps_x_cm"].get<double>() == doctest::Approx(reference.result.eps_x_cm));
  CHECK(result["eps_y_cm"].get<double>() == doctest::Approx(reference.result.eps_y_cm));
  CHECK(result["eps_pct"].get<double>() == doctest::Approx(reference.result.eps_pct));
}

TEST_CASE("track handles malformed and mismatched traces") {
  TempDir tmp;
  std::ostringstream diag;
  write_file(tmp.file("cfg.json"), kSmallConfig);
  write_file(tmp.file("bad.csv"), "t,link,channel,rss_dbm\n0.0,0,zero,-50\n");

  TrackOptions trk;
  trk.trace_path = tmp.file("bad.csv");
  trk.config_path = tmp.file("cfg.json");
  trk.out_dir = tmp.file("out");
  CHECK(cmd_track(trk, diag) == kExitDataFormat);

  // A trace with more links than the config defines.
  write_file(tmp.file("extra.csv"),
             "t,link,channel,rss_dbm\n0.0,0,0,-50\n0.0,1,0,-50\n0.0,2,0,-50\n");
  trk.trace_path = tmp.file("extra.csv");
  CHECK(cmd_track(trk, diag) == kExitDataFormat);
}

TEST_CASE("track without a crossing produces no estimates and exits cleanly") {
  TempDir tmp;
  std::ostringstream diag;
  // Person passes far away from every link.
  write_file(tmp.file("cfg.json"), R"({
    "seed": 3, "channels": 4, "preamble_s": 2.0, "calibration_window_s": 2.0,
    "trajectory": {"heading_deg": 0.0, "duration_s": 6.0, "through": [40.0, 40.0]}
  })");
  SimulateOptions sim{tmp.file("cfg.json"), tmp.file("sim"), std::nullopt};
  REQUIRE(cmd_simulate(sim, diag) == kExitOk);

  TrackOptions trk;
  trk.trace_path = tmp.file("sim/trace.csv");
  trk.config_path = tmp.file("cfg.json");
  trk.out_dir = tmp.file("trk");
  REQUIRE(cmd_track(trk, diag) == kExitOk);

  const auto estimates = read_estimates_csv(tmp.file("trk/estimates.csv"));
  CHECK(estimates.estimates.empty());
  CHECK(estimates.stop_times.empty());
}

TEST_CASE("eval rejects misaligned inputs") {
  TempDir tmp;
  std::ostringstream diag;
  write_file(tmp.file("cfg.json"), kSmallConfig);
  write_file(tmp.file("estimates.csv"), "t,px,vx,py,vy,event\n0.123,0,0,0,0,start\n");
  write_file(tmp.file("truth.csv"), "t,px,py,vx,vy,state_link0,state_link1\n0.5,0,0,0,0,1,1\n");

  EvalOptions ev;
  ev.estimates_path = tmp.file("estimates.csv");
  ev.truth_path = tmp.file("truth.csv");
  ev.config_path = tmp.file("cfg.json");
  ev.out_dir = tmp.file("eval");
  CHECK(cmd_eval(ev, diag) == kExitDataFormat);
}

TEST_CASE("one-cell sweep agrees with the single-run pipeline") {
  SweepConfig grid;
  grid.base = nlohmann::json::parse(kSmallConfig);
  grid.runs_per_cell = 3;
  const auto result = sweep(grid, 77, 1);
  REQUIRE(result.cells.size() == 1);
  REQUIRE(result.runs.size() == 3);

  const auto cfg = parse_config(grid.base);
  for (const auto& row : result.runs) {
    const auto reference = run_scenario(cfg, row.result.seed);
    CHECK(row.result.eps_x_cm == doctest::Approx(reference.result.eps_x_cm));
    CHECK(row.result.eps_pct == doctest::Approx(reference.result.eps_pct));
  }

  // Cell aggregation bookkeeping: mean of per-run values.
  double mean = 0.0;
  for (const auto& row : result.runs) mean += row.result.eps_x_cm;
  mean /= result.runs.size();
  CHECK(result.cells[0].mean_eps_x_cm == doctest::Approx(mean));
}

TEST_CASE("sweep results do not depend on the number of worker threads") {
  SweepConfig grid;
  grid.base = nlohmann::json::parse(kSmallConfig);
  grid.particles = {64, 128};
  grid.use_freq = {1, 0};
  grid.runs_per_cell = 2;
  const auto serial = sweep(grid, 5, 1);
  const auto parallel = sweep(grid, 5, 4);
  REQUIRE(serial.runs.size() == parallel.runs.size());
  for (std::size_t i = 0; i < serial.runs.size(); ++i) {
    CHECK(serial.runs[i].result.eps_x_cm == parallel.runs[i].result.eps_x_cm);
    CHECK(serial.runs[i].result.eps_pct == parallel.runs[i].result.eps_pct);
  }
}

TEST_CASE("scenario axes share traces across tracker-only cells") {
  // Cells that differ only in use_freq must see identical scenario seeds so
  // the comparison is paired.
  SweepConfig grid;
  grid.base = nlohmann::json::parse(kSmallConfig);
  grid.use_freq = {1, 0};
  grid.runs_per_cell = 2;
  const auto result = sweep(grid, 9, 2);
  REQUIRE(result.cells.size() == 2);
  for (int run = 0; run < 2; ++run)
    CHECK(result.runs[run].result.seed == result.runs[2 + run].result.seed);
}

TEST_CASE("sweep grid document parsing") {
  const auto grid = parse_sweep_config(nlohmann::json{
      {"base", nlohmann::json::parse(kSmallConfig)},
      {"axes",
       {{"theta_deg", {0.0, 20.0}}, {"particles", {64, 128}}, {"use_freq", {true, false}}}},
      {"runs_per_cell", 4}});
  CHECK(grid.theta_deg.size() == 2);
  CHECK(grid.particles.size() == 2);
  CHECK(grid.use_freq.size() == 2);
  CHECK(grid.runs_per_cell == 4);

  CHECK_THROWS_AS(parse_sweep_config(nlohmann::json{{"axes", {{"bogus", {1, 2}}}}}),
                  ConfigError);
  CHECK_THROWS_AS(parse_sweep_config(nlohmann::json{{"runs_per_cell", 0}}), ConfigError);

  // Theta patches re-derive the start point so the path still bisects the
  // through point.
  SweepCell cell0; cell0.theta_deg = 0.0;
  const auto c0 = cell_config(grid.base, cell0);
  SweepCell cell45; cell45.theta_deg = 45.0;
  const auto c45 = cell_config(grid.base, cell45);
  CHECK(c0.scenario.trajectory.start.y == doctest::Approx(0.0));
  CHECK(c45.scenario.trajectory.start.y < -1.0);
}

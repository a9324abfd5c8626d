#include "dfl/pipeline.hpp"

#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dfl/errors.hpp"
#include "dfl/trace_io.hpp"

namespace dfl {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double parse_double_field(const std::string& field, long line, const char* what) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw DataFormatError(std::string("bad ") + what + " value '" + field + "'", line);
  return value;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  return os;
}

class Manifest {
 public:
  Manifest(const fs::path& out_dir, const std::string& command) : path_(out_dir / "manifest.json") {
    doc_["tool"] = "dfltrack";
    doc_["version"] = kToolkitVersion;
    doc_["command"] = command;
    doc_["status"] = "running";
    start_ = std::chrono::steady_clock::now();
  }

  json& doc() { return doc_; }

  /// Manifests are written before any result file and finalized afterwards.
  void begin() { flush(); }

  void finish() {
    doc_["status"] = "done";
    doc_["elapsed_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    flush();
  }

 private:
  void flush() {
    auto os = open_out(path_);
    os << doc_.dump(2) << '\n';
  }

  fs::path path_;
  json doc_;
  std::chrono::steady_clock::time_point start_;
};

const char* event_name(LifecycleEvent e) {
  switch (e) {
    case LifecycleEvent::StartTracking:
      return "start";
    case LifecycleEvent::StopTracking:
      return "stop";
    default:
      return "track";
  }
}

json result_json(const RunResult& r) {
  json j{{"eps_x_cm", r.eps_x_cm},     {"eps_y_cm", r.eps_y_cm},
         {"sigma_x_cm", r.sigma_x_cm}, {"sigma_y_cm", r.sigma_y_cm},
         {"estimates", r.estimate_count}};
  if (r.seed != 0) j["seed"] = r.seed;
  if (r.eps_pct_valid) j["eps_pct"] = r.eps_pct;
  return j;
}

int run_command(std::ostream& diag, const char* name, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    diag << name << ": " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataFormatError& e) {
    diag << name << ": " << e.what() << '\n';
    return kExitDataFormat;
  } catch (const std::exception& e) {
    diag << name << ": " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace

void write_estimates_csv(std::ostream& os, const TrackOutput& track) {
  os << "t,px,vx,py,vy,event\n";
  std::size_t stop_idx = 0;
  auto write_stops_before = [&](double t) {
    while (stop_idx < track.stop_times.size() && track.stop_times[stop_idx] <= t) {
      os << format_double(track.stop_times[stop_idx]) << ",,,,,stop\n";
      ++stop_idx;
    }
  };
  for (const auto& row : track.estimates) {
    write_stops_before(row.t);
    os << format_double(row.t) << ',' << format_double(row.state.px) << ','
       << format_double(row.state.vx) << ',' << format_double(row.state.py) << ','
       << format_double(row.state.vy) << ',' << event_name(row.event) << '\n';
  }
  write_stops_before(std::numeric_limits<double>::infinity());
}

void write_link_states_csv(std::ostream& os, const TrackOutput& track) {
  os << "t,link,state,post_s1,post_s2,post_s3,r_db,r_valid,freq_hz,freq_valid,peak_db\n";
  for (const auto& r : track.link_log) {
    os << format_double(r.t) << ',' << r.link << ',' << static_cast<int>(r.state) << ','
       << format_double(r.posterior[0]) << ',' << format_double(r.posterior[1]) << ','
       << format_double(r.posterior[2]) << ',' << format_double(r.r_db) << ','
       << (r.r_valid ? 1 : 0) << ',' << format_double(r.freq_hz) << ','
       << (r.freq_valid ? 1 : 0) << ',' << format_double(r.peak_power_db) << '\n';
  }
}

void write_particles_csv(std::ostream& os, const TrackOutput& track) {
  os << "t,particle,px,vx,py,vy\n";
  for (const auto& snap : track.snapshots) {
    int idx = 0;
    for (const auto& s : snap.states) {
      os << format_double(snap.t) << ',' << idx++ << ',' << format_double(s.px) << ','
         << format_double(s.vx) << ',' << format_double(s.py) << ',' << format_double(s.vy)
         << '\n';
    }
  }
}

EstimatesFile read_estimates_csv(std::istream& is) {
  EstimatesFile out;
  std::string line;
  long line_no = 0;
  if (!std::getline(is, line)) throw DataFormatError("empty estimates file", 1);
  ++line_no;
  if (split_csv(line) != std::vector<std::string>{"t", "px", "vx", "py", "vy", "event"})
    throw DataFormatError("expected header 't,px,vx,py,vy,event'", line_no);
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 6) throw DataFormatError("expected 6 fields", line_no);
    const double t = parse_double_field(fields[0], line_no, "t");
    if (fields[5] == "stop") {
      out.stop_times.push_back(t);
      continue;
    }
    EstimateRow row;
    row.t = t;
    row.state.px = parse_double_field(fields[1], line_no, "px");
    row.state.vx = parse_double_field(fields[2], line_no, "vx");
    row.state.py = parse_double_field(fields[3], line_no, "py");
    row.state.vy = parse_double_field(fields[4], line_no, "vy");
    if (fields[5] == "start")
      row.event = LifecycleEvent::StartTracking;
    else if (fields[5] == "track")
      row.event = LifecycleEvent::None;
    else
      throw DataFormatError("unknown event '" + fields[5] + "'", line_no);
    out.estimates.push_back(row);
  }
  return out;
}

EstimatesFile read_estimates_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataFormatError("cannot open: " + path);
  return read_estimates_csv(is);
}

std::vector<ParticleSnapshot> read_particles_csv(std::istream& is) {
  std::vector<ParticleSnapshot> out;
  std::string line;
  long line_no = 0;
  if (!std::getline(is, line)) throw DataFormatError("empty particles file", 1);
  ++line_no;
  if (split_csv(line) != std::vector<std::string>{"t", "particle", "px", "vx", "py", "vy"})
    throw DataFormatError("expected header 't,particle,px,vx,py,vy'", line_no);
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 6) throw DataFormatError("expected 6 fields", line_no);
    const double t = parse_double_field(fields[0], line_no, "t");
    KinematicState s;
    s.px = parse_double_field(fields[2], line_no, "px");
    s.vx = parse_double_field(fields[3], line_no, "vx");
    s.py = parse_double_field(fields[4], line_no, "py");
    s.vy = parse_double_field(fields[5], line_no, "vy");
    if (out.empty() || out.back().t != t) out.push_back({t, {}});
    out.back().states.push_back(s);
  }
  return out;
}

std::vector<ParticleSnapshot> read_particles_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataFormatError("cannot open: " + path);
  return read_particles_csv(is);
}

int cmd_simulate(const SimulateOptions& opt, std::ostream& diag) {
  return run_command(diag, "simulate", [&]() {
    ToolkitConfig cfg = load_config(opt.config_path);
    if (opt.seed) cfg.scenario.seed = *opt.seed;
    fs::create_directories(opt.out_dir);

    Manifest manifest(opt.out_dir, "simulate");
    manifest.doc()["seed"] = cfg.scenario.seed;
    manifest.doc()["config"] = to_json(cfg);
    manifest.doc()["outputs"] = {"trace.csv", "truth.csv"};
    manifest.begin();

    const RssTrace trace = synthesize_trace(cfg.scenario);
    write_trace_csv((fs::path(opt.out_dir) / "trace.csv").string(), trace);
    write_truth_csv((fs::path(opt.out_dir) / "truth.csv").string(), trace);
    manifest.finish();

    diag << "simulate: " << trace.samples.size() << " samples, " << trace.truth.size()
         << " truth rows -> " << opt.out_dir << '\n';
    return kExitOk;
  });
}

int cmd_track(const TrackOptions& opt, std::ostream& diag) {
  return run_command(diag, "track", [&]() {
    ToolkitConfig cfg = load_config(opt.config_path);
    const std::uint64_t run_seed = opt.seed ? *opt.seed : cfg.scenario.seed;
    cfg.scenario.seed = run_seed;
    if (opt.use_freq) cfg.tracker.use_freq = *opt.use_freq;
    if (opt.particle_stride < 0) throw ConfigError("track: particle stride must be >= 0");

    const RssTrace trace = read_trace_csv(opt.trace_path);
    if (!trace.samples.empty() &&
        static_cast<std::size_t>(trace.link_count) != cfg.scenario.links.size())
      throw DataFormatError("trace has " + std::to_string(trace.link_count) +
                            " links but the config defines " +
                            std::to_string(cfg.scenario.links.size()));

    fs::create_directories(opt.out_dir);
    Manifest manifest(opt.out_dir, "track");
    manifest.doc()["seed"] = run_seed;
    manifest.doc()["config"] = to_json(cfg);
    manifest.doc()["inputs"] = {{"trace", opt.trace_path}};
    manifest.doc()["particle_stride"] = opt.particle_stride;
    manifest.doc()["outputs"] = {"estimates.csv", "link_states.csv", "particles.csv"};
    manifest.begin();

    const auto frames = replay(trace, cfg.replay_config());
    TrackRunOptions run_options;
    run_options.particle_stride = opt.particle_stride;
    run_options.keep_link_log = true;
    const auto track = run_tracking(frames, cfg, run_options, tracker_seed_for(run_seed));

    {
      auto os = open_out(fs::path(opt.out_dir) / "estimates.csv");
      write_estimates_csv(os, track);
    }
    {
      auto os = open_out(fs::path(opt.out_dir) / "link_states.csv");
      write_link_states_csv(os, track);
    }
    {
      auto os = open_out(fs::path(opt.out_dir) / "particles.csv");
      write_particles_csv(os, track);
    }
    manifest.finish();

    diag << "track: " << track.estimates.size() << " estimates, " << track.stop_times.size()
         << " stop events, " << track.weight_resets << " weight resets -> " << opt.out_dir
         << '\n';
    return kExitOk;
  });
}

int cmd_eval(const EvalOptions& opt, std::ostream& diag) {
  return run_command(diag, "eval", [&]() {
    const ToolkitConfig cfg = load_config(opt.config_path);
    const auto estimates = read_estimates_csv(opt.estimates_path);
    const auto truth = read_truth_csv(opt.truth_path);

    TrackOutput track;
    track.estimates = estimates.estimates;
    track.stop_times = estimates.stop_times;
    if (!opt.particles_path.empty()) track.snapshots = read_particles_csv(opt.particles_path);

    ScoreDiagnostics sdiag;
    const RunResult result = score_run(track, truth, cfg.scenario.body, 0, &sdiag);
    if (sdiag.unmatched_estimates > 0)
      throw DataFormatError("eval: " + std::to_string(sdiag.unmatched_estimates) +
                            " estimate rows have no matching truth timestamp");

    fs::create_directories(opt.out_dir);
    Manifest manifest(opt.out_dir, "eval");
    manifest.doc()["config"] = to_json(cfg);
    manifest.doc()["inputs"] = {{"estimates", opt.estimates_path},
                                {"truth", opt.truth_path},
                                {"particles", opt.particles_path}};
    manifest.doc()["outputs"] = {"result.json", "result.csv"};
    manifest.begin();

    {
      auto os = open_out(fs::path(opt.out_dir) / "result.json");
      os << result_json(result).dump(2) << '\n';
    }
    {
      auto os = open_out(fs::path(opt.out_dir) / "result.csv");
      os << "eps_x_cm,sigma_x_cm,eps_y_cm,sigma_y_cm,eps_pct,estimates\n";
      os << format_double(result.eps_x_cm) << ',' << format_double(result.sigma_x_cm) << ','
         << format_double(result.eps_y_cm) << ',' << format_double(result.sigma_y_cm) << ','
         << (result.eps_pct_valid ? format_double(result.eps_pct) : std::string()) << ','
         << result.estimate_count << '\n';
    }
    manifest.finish();

    diag << "eval: eps_x " << result.eps_x_cm << " cm, eps_y " << result.eps_y_cm << " cm";
    if (result.eps_pct_valid) diag << ", eps% " << result.eps_pct;
    diag << '\n';
    return kExitOk;
  });
}

int cmd_sweep(const SweepOptions& opt, std::ostream& diag) {
  return run_command(diag, "sweep", [&]() {
    std::ifstream is(opt.grid_path);
    if (!is) throw ConfigError("cannot open grid file: " + opt.grid_path);
    json grid_doc;
    try {
      is >> grid_doc;
    } catch (const std::exception& e) {
      throw ConfigError("grid parse error: " + std::string(e.what()));
    }
    const auto grid =
        parse_sweep_config(grid_doc, fs::path(opt.grid_path).parent_path().string());
    const std::uint64_t master_seed = opt.seed.value_or(1);

    fs::create_directories(opt.out_dir);
    Manifest manifest(opt.out_dir, "sweep");
    manifest.doc()["seed"] = master_seed;
    manifest.doc()["grid"] = grid_doc;
    manifest.doc()["jobs"] = opt.jobs;
    manifest.doc()["outputs"] = {"runs.csv", "cells.csv"};
    manifest.begin();

    const auto result = sweep(grid, master_seed, opt.jobs);

    // Axis columns carry the resolved per-cell values, swept or not.
    auto cell_fields = [](const SweepCellSummary& c) {
      const auto& cfg = c.resolved;
      std::ostringstream os;
      os << format_double(cfg.scenario.trajectory.heading_rad * 180.0 / M_PI) << ','
         << format_double(cfg.scenario.noise_std_db) << ',' << cfg.tracker.particle_count << ','
         << (cfg.tracker.use_freq ? 1 : 0) << ','
         << format_double(cfg.tracker.init.speed_max_mps) << ','
         << format_double(cfg.tracker.init.heading_spread_rad * 180.0 / M_PI) << ','
         << cfg.scenario.links.size();
      return os.str();
    };
    static constexpr const char* kAxisHeader =
        "theta_deg,noise_std_db,particles,use_freq,init_speed_max,init_spread_deg,links";

    {
      auto os = open_out(fs::path(opt.out_dir) / "runs.csv");
      os << "cell,run," << kAxisHeader
         << ",seed,eps_x_cm,eps_y_cm,sigma_x_cm,sigma_y_cm,eps_pct,estimates,weight_resets,"
            "failed\n";
      for (const auto& row : result.runs) {
        const auto& cell = result.cells[row.cell];
        const bool failed = row.result.estimate_count < 0;
        os << row.cell << ',' << row.run << ',' << cell_fields(cell) << ','
           << row.result.seed << ',' << format_double(row.result.eps_x_cm) << ','
           << format_double(row.result.eps_y_cm) << ',' << format_double(row.result.sigma_x_cm)
           << ',' << format_double(row.result.sigma_y_cm) << ','
           << (row.result.eps_pct_valid ? format_double(row.result.eps_pct) : std::string())
           << ',' << (failed ? 0 : row.result.estimate_count) << ',' << row.weight_resets << ','
           << (failed ? 1 : 0) << '\n';
      }
    }
    {
      auto os = open_out(fs::path(opt.out_dir) / "cells.csv");
      os << "cell," << kAxisHeader
         << ",runs,failed,mean_eps_x_cm,std_eps_x_cm,mean_eps_y_cm,std_eps_y_cm,mean_eps_pct,"
            "std_eps_pct,mean_estimates\n";
      for (const auto& c : result.cells) {
        os << c.cell << ',' << cell_fields(c) << ',' << c.runs << ',' << c.failed_runs << ','
           << format_double(c.mean_eps_x_cm) << ',' << format_double(c.std_eps_x_cm) << ','
           << format_double(c.mean_eps_y_cm) << ',' << format_double(c.std_eps_y_cm) << ','
           << format_double(c.mean_eps_pct) << ',' << format_double(c.std_eps_pct) << ','
           << format_double(c.mean_estimates) << '\n';
      }
    }
    manifest.finish();

    int failed = 0;
    for (const auto& c : result.cells) failed += c.failed_runs;
    diag << "sweep: " << result.cells.size() << " cells, " << result.runs.size() << " runs, "
         << failed << " failed -> " << opt.out_dir << '\n';
    // Per-run failures are recorded, not fatal; systemic failure means
    // nothing ran at all.
    bool any_ok = false;
    for (const auto& c : result.cells)
      if (c.runs > 0) any_ok = true;
    return any_ok ? kExitOk : kExitRuntime;
  });
}

}  // namespace dfl

#include "dfl/sweep.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>

#include "dfl/errors.hpp"

namespace dfl {

namespace {

using nlohmann::json;

std::vector<double> number_axis(const json& axes, const char* key) {
  std::vector<double> out;
  if (!axes.contains(key)) return out;
  for (const auto& v : axes[key]) out.push_back(v.get<double>());
  return out;
}

std::vector<int> int_axis(const json& axes, const char* key) {
  std::vector<int> out;
  if (!axes.contains(key)) return out;
  for (const auto& v : axes[key]) out.push_back(v.get<int>());
  return out;
}

void accumulate(double x, double& mean, double& m2, int n) {
  // Welford update; n is the 1-based sample index.
  const double d = x - mean;
  mean += d / n;
  m2 += d * (x - mean);
}

}  // namespace

SweepConfig parse_sweep_config(const json& j, const std::string& base_dir) {
  SweepConfig cfg;
  if (!j.is_object()) throw ConfigError("sweep: document must be an object");
  for (const auto& item : j.items())
    if (item.key() != "base" && item.key() != "base_path" && item.key() != "axes" &&
        item.key() != "runs_per_cell")
      throw ConfigError("sweep: unknown key '" + item.key() + "'");

  if (j.contains("base") && j.contains("base_path"))
    throw ConfigError("sweep: give 'base' or 'base_path', not both");
  if (j.contains("base_path")) {
    const std::string path = base_dir + "/" + j["base_path"].get<std::string>();
    std::ifstream is(path);
    if (!is) throw ConfigError("sweep: cannot open base config: " + path);
    try {
      is >> cfg.base;
    } catch (const std::exception& e) {
      throw ConfigError("sweep: base config parse error: " + std::string(e.what()));
    }
  } else if (j.contains("base")) {
    cfg.base = j["base"];
  } else {
    cfg.base = json::object();
  }

  const json axes = j.contains("axes") ? j["axes"] : json::object();
  for (const auto& item : axes.items())
    if (item.key() != "theta_deg" && item.key() != "noise_std_db" && item.key() != "particles" &&
        item.key() != "use_freq" && item.key() != "init" && item.key() != "receivers")
      throw ConfigError("sweep: unknown axis '" + item.key() + "'");

  cfg.theta_deg = number_axis(axes, "theta_deg");
  cfg.noise_std_db = number_axis(axes, "noise_std_db");
  cfg.particles = int_axis(axes, "particles");
  if (axes.contains("use_freq"))
    for (const auto& v : axes["use_freq"]) cfg.use_freq.push_back(v.get<bool>() ? 1 : 0);
  if (axes.contains("init"))
    for (const auto& v : axes["init"]) cfg.init.push_back(v);
  cfg.receivers = int_axis(axes, "receivers");

  if (j.contains("runs_per_cell")) cfg.runs_per_cell = j["runs_per_cell"].get<int>();
  if (cfg.runs_per_cell < 1) throw ConfigError("sweep: runs_per_cell must be >= 1");

  // Validate the base eagerly so a bad grid fails before any run starts.
  (void)parse_config(cfg.base);
  return cfg;
}

ToolkitConfig cell_config(const json& base, const SweepCell& cell) {
  json doc = base;
  if (cell.theta_deg) {
    json traj = doc.contains("trajectory") ? doc["trajectory"] : json::object();
    traj.erase("heading_rad");
    traj.erase("start");  // re-derive so the path still bisects `through`
    traj["heading_deg"] = *cell.theta_deg;
    doc["trajectory"] = traj;
  }
  if (cell.noise_std_db) doc["noise_std_db"] = *cell.noise_std_db;
  if (cell.receivers) {
    json corr = doc.contains("corridor") ? doc["corridor"] : json::object();
    corr["receivers"] = *cell.receivers;
    doc.erase("links");
    doc["corridor"] = corr;
  }
  json tracker = doc.contains("tracker") ? doc["tracker"] : json::object();
  if (cell.particles) tracker["particles"] = *cell.particles;
  if (cell.use_freq) tracker["use_freq"] = *cell.use_freq;
  if (cell.init) tracker["init"] = *cell.init;
  doc["tracker"] = tracker;
  return parse_config(doc);
}

SweepResult sweep(const SweepConfig& cfg, std::uint64_t master_seed, int jobs) {
  // Singleton "keep base" entries for axes that are not swept.
  auto indices = [](std::size_t n) { return n == 0 ? std::size_t{1} : n; };
  const std::size_t n_theta = indices(cfg.theta_deg.size());
  const std::size_t n_noise = indices(cfg.noise_std_db.size());
  const std::size_t n_rx = indices(cfg.receivers.size());
  const std::size_t n_particles = indices(cfg.particles.size());
  const std::size_t n_freq = indices(cfg.use_freq.size());
  const std::size_t n_init = indices(cfg.init.size());

  struct CellPlan {
    SweepCell spec;
    ToolkitConfig resolved;
    std::uint64_t scenario_stream;  // shared by cells with equal scenario axes
  };
  std::vector<CellPlan> plan;
  for (std::size_t ti = 0; ti < n_theta; ++ti)
    for (std::size_t ni = 0; ni < n_noise; ++ni)
      for (std::size_t ri = 0; ri < n_rx; ++ri)
        for (std::size_t pi = 0; pi < n_particles; ++pi)
          for (std::size_t fi = 0; fi < n_freq; ++fi)
            for (std::size_t ii = 0; ii < n_init; ++ii) {
              SweepCell cell;
              if (!cfg.theta_deg.empty()) cell.theta_deg = cfg.theta_deg[ti];
              if (!cfg.noise_std_db.empty()) cell.noise_std_db = cfg.noise_std_db[ni];
              if (!cfg.receivers.empty()) cell.receivers = cfg.receivers[ri];
              if (!cfg.particles.empty()) cell.particles = cfg.particles[pi];
              if (!cfg.use_freq.empty()) cell.use_freq = cfg.use_freq[fi] != 0;
              if (!cfg.init.empty()) cell.init = cfg.init[ii];
              CellPlan p{cell, cell_config(cfg.base, cell),
                         derive_seed(master_seed, (ti * 1009 + ni) * 1009 + ri)};
              plan.push_back(std::move(p));
            }

  const int runs = cfg.runs_per_cell;
  const std::size_t total = plan.size() * static_cast<std::size_t>(runs);

  SweepResult result;
  result.runs.resize(total);
  std::vector<int> failures(plan.size(), 0);

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= total) return;
      const std::size_t cell_idx = idx / runs;
      const int run_idx = static_cast<int>(idx % runs);
      const auto& p = plan[cell_idx];
      SweepRunRow row;
      row.cell = static_cast<int>(cell_idx);
      row.run = run_idx;
      const std::uint64_t run_seed = derive_seed(p.scenario_stream, run_idx);
      row.result.seed = run_seed;
      try {
        auto run = run_scenario(p.resolved, run_seed);
        row.result = run.result;
        row.weight_resets = run.track.weight_resets;
      } catch (const std::exception&) {
        row.result.estimate_count = -1;  // marks a failed run
      }
      result.runs[idx] = row;
    }
  };

  int n_jobs = jobs > 0 ? jobs : static_cast<int>(std::thread::hardware_concurrency());
  if (n_jobs < 1) n_jobs = 1;
  if (static_cast<std::size_t>(n_jobs) > total) n_jobs = static_cast<int>(total);
  std::vector<std::thread> pool;
  for (int t = 1; t < n_jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  result.cells.reserve(plan.size());
  for (std::size_t c = 0; c < plan.size(); ++c) {
    SweepCellSummary s;
    s.cell = static_cast<int>(c);
    s.spec = plan[c].spec;
    s.resolved = plan[c].resolved;
    double m2x = 0.0, m2y = 0.0, m2p = 0.0;
    for (int r = 0; r < runs; ++r) {
      const auto& row = result.runs[c * runs + r];
      if (row.result.estimate_count < 0) {
        ++s.failed_runs;
        continue;
      }
      ++s.runs;
      accumulate(row.result.eps_x_cm, s.mean_eps_x_cm, m2x, s.runs);
      accumulate(row.result.eps_y_cm, s.mean_eps_y_cm, m2y, s.runs);
      accumulate(row.result.eps_pct, s.mean_eps_pct, m2p, s.runs);
      s.mean_estimates += (row.result.estimate_count - s.mean_estimates) / s.runs;
    }
    if (s.runs > 1) {
      s.std_eps_x_cm = std::sqrt(m2x / (s.runs - 1));
      s.std_eps_y_cm = std::sqrt(m2y / (s.runs - 1));
      s.std_eps_pct = std::sqrt(m2p / (s.runs - 1));
    }
    result.cells.push_back(std::move(s));
  }
  return result;
}

}  // namespace dfl

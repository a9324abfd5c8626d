#include "dfl/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "dfl/errors.hpp"

namespace dfl {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& scope, std::set<std::string> allowed) {
  if (!j.is_object()) throw ConfigError("config: '" + scope + "' must be an object");
  for (const auto& item : j.items())
    if (!allowed.count(item.key()))
      throw ConfigError("config: unknown key '" + scope + "." + item.key() + "'");
}

double get_number(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ConfigError(std::string("config: '") + key + "' must be a number");
  return j[key].get<double>();
}

int get_int(const json& j, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer())
    throw ConfigError(std::string("config: '") + key + "' must be an integer");
  return j[key].get<int>();
}

bool get_bool(const json& j, const char* key, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_boolean()) throw ConfigError(std::string("config: '") + key + "' must be a boolean");
  return j[key].get<bool>();
}

Point2 get_point(const json& j, const std::string& scope) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError("config: '" + scope + "' must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

std::vector<Link> corridor_links(double width, int receivers, double spacing, double carrier) {
  if (receivers != 2 && receivers != 3)
    throw ConfigError("config: corridor.receivers must be 2 or 3");
  const Point2 tx{0.0, -0.5 * width};
  std::vector<double> rx_x;
  if (receivers == 2)
    rx_x = {0.0, spacing};
  else
    rx_x = {0.0, 0.5 * spacing, spacing};
  std::vector<Link> links;
  int id = 0;
  for (double x : rx_x) links.emplace_back(id++, tx, Point2{x, 0.5 * width}, carrier);
  return links;
}

StateEmission parse_emission(const json& j, const std::string& scope) {
  check_keys(j, scope, {"std_mean", "std_sigma", "absmean_mean", "absmean_sigma"});
  StateEmission e;
  e.std_mean = get_number(j, "std_mean", e.std_mean);
  e.std_sigma = get_number(j, "std_sigma", e.std_sigma);
  e.absmean_mean = get_number(j, "absmean_mean", e.absmean_mean);
  e.absmean_sigma = get_number(j, "absmean_sigma", e.absmean_sigma);
  return e;
}

}  // namespace

ToolkitConfig default_config() { return parse_config(json::object()); }

ToolkitConfig parse_config(const json& j) {
  try {
    check_keys(j, "", {"seed", "channels", "sample_interval_s", "carrier_frequency_hz",
                       "corridor", "links", "monitored_region", "trajectory", "noise_std_db",
                       "system_gain_db", "body", "preamble_s", "fresnel_zone_max",
                       "quantize_db", "spectral", "calibration_window_s", "hmm", "tracker"});

    ToolkitConfig cfg;
    auto& sc = cfg.scenario;

    sc.seed = j.contains("seed") ? j["seed"].get<std::uint64_t>() : 1;
    sc.channels = get_int(j, "channels", 16);
    sc.sample_interval_s = get_number(j, "sample_interval_s", 0.032);
    const double carrier = get_number(j, "carrier_frequency_hz", 2.4e9);

    MonitoredRegion region;
    if (j.contains("links")) {
      if (!j["links"].is_array() || j["links"].empty())
        throw ConfigError("config: 'links' must be a non-empty array");
      int id = 0;
      for (const auto& lj : j["links"]) {
        check_keys(lj, "links[]", {"tx", "rx", "carrier_frequency_hz"});
        if (!lj.contains("tx") || !lj.contains("rx"))
          throw ConfigError("config: each link needs 'tx' and 'rx'");
        sc.links.emplace_back(id++, get_point(lj["tx"], "links[].tx"),
                              get_point(lj["rx"], "links[].rx"),
                              get_number(lj, "carrier_frequency_hz", carrier));
      }
    } else {
      const json cj = j.contains("corridor") ? j["corridor"] : json::object();
      check_keys(cj, "corridor", {"width_m", "receivers", "rx_spacing_m"});
      const double width = get_number(cj, "width_m", 3.0);
      sc.links = corridor_links(width, get_int(cj, "receivers", 2),
                                get_number(cj, "rx_spacing_m", 1.0), carrier);
      // The walls carrying the nodes bound where a person can be.
      region.y_min = -0.5 * width;
      region.y_max = 0.5 * width;
    }
    if (j.contains("monitored_region")) {
      const auto& rj = j["monitored_region"];
      check_keys(rj, "monitored_region", {"y_min", "y_max"});
      region.y_min = get_number(rj, "y_min", region.y_min);
      region.y_max = get_number(rj, "y_max", region.y_max);
      if (region.y_min >= region.y_max)
        throw ConfigError("config: monitored_region must have y_min < y_max");
    }

    {
      const json tj = j.contains("trajectory") ? j["trajectory"] : json::object();
      check_keys(tj, "trajectory",
                 {"speed_mps", "heading_deg", "heading_rad", "duration_s", "through", "start"});
      auto& tr = sc.trajectory;
      tr.speed_mps = get_number(tj, "speed_mps", 0.5);
      if (tj.contains("heading_rad") && tj.contains("heading_deg"))
        throw ConfigError("config: give 'heading_deg' or 'heading_rad', not both");
      tr.heading_rad = tj.contains("heading_rad")
                           ? get_number(tj, "heading_rad", 0.0)
                           : get_number(tj, "heading_deg", 20.0) * M_PI / 180.0;
      tr.duration_s = get_number(tj, "duration_s", 10.0);
      if (tj.contains("start")) {
        tr.start = get_point(tj["start"], "trajectory.start");
      } else {
        // Bisect the `through` point (default: origin) at mid-walk.
        const Point2 through =
            tj.contains("through") ? get_point(tj["through"], "trajectory.through") : Point2{};
        const double half = 0.5 * tr.duration_s * tr.speed_mps;
        tr.start = {through.x - half * std::cos(tr.heading_rad),
                    through.y - half * std::sin(tr.heading_rad)};
      }
    }

    sc.noise_std_db = get_number(j, "noise_std_db", 2.0);
    if (j.contains("system_gain_db")) {
      const auto& g = j["system_gain_db"];
      if (g.is_number()) {
        sc.system_gain_db = {g.get<double>()};
      } else if (g.is_array() && !g.empty()) {
        sc.system_gain_db.clear();
        for (const auto& v : g) sc.system_gain_db.push_back(v.get<double>());
      } else {
        throw ConfigError("config: 'system_gain_db' must be a number or array");
      }
    }

    {
      const json bj = j.contains("body") ? j["body"] : json::object();
      check_keys(bj, "body", {"psi", "semi_minor_m", "semi_major_m", "attenuation_db_per_m"});
      sc.body.reflection.psi = get_number(bj, "psi", 0.4);
      sc.body.semi_minor_m = get_number(bj, "semi_minor_m", 0.15);
      sc.body.semi_major_m = get_number(bj, "semi_major_m", 0.25);
      sc.body.attenuation_db_per_m = get_number(bj, "attenuation_db_per_m", 25.0);
    }

    sc.preamble_s = get_number(j, "preamble_s", 5.0);
    sc.fresnel_zone_max = get_int(j, "fresnel_zone_max", 12);
    sc.quantize_db = get_bool(j, "quantize_db", false);

    {
      const json sj = j.contains("spectral") ? j["spectral"] : json::object();
      check_keys(sj, "spectral", {"window_len", "dft_len", "min_freq_hz", "snr_gate_db", "hann"});
      auto& sp = cfg.spectral;
      sp.window_len = get_int(sj, "window_len", 20);
      sp.dft_len = get_int(sj, "dft_len", 256);
      sp.min_freq_hz = get_number(sj, "min_freq_hz", 0.5);
      sp.snr_gate_db = get_number(sj, "snr_gate_db", 10.0);
      sp.hann_window = get_bool(sj, "hann", false);
      sp.sample_interval_s = sc.sample_interval_s;
    }

    cfg.calibration_window_s = get_number(j, "calibration_window_s", sc.preamble_s);

    {
      const double combined_noise = sc.noise_std_db / std::sqrt(static_cast<double>(sc.channels));
      const double psi = sc.body.reflection.psi;
      const double p2p = 20.0 * std::log10((1.0 + psi) / (1.0 - psi));
      const double depth =
          sc.body.attenuation_db_per_m * (sc.body.semi_minor_m + sc.body.semi_major_m);
      cfg.hmm = HmmConfig::defaults(combined_noise, p2p, depth);

      const json hj = j.contains("hmm") ? j["hmm"] : json::object();
      check_keys(hj, "hmm", {"feature_window", "self_transition", "rare_transition",
                             "transition", "emissions"});
      cfg.hmm.feature_window = get_int(hj, "feature_window", cfg.hmm.feature_window);
      if (hj.contains("self_transition") || hj.contains("rare_transition")) {
        const double self = get_number(hj, "self_transition", 0.98);
        const double rare = get_number(hj, "rare_transition", 1e-4);
        cfg.hmm.transition = TransitionMatrix{{{self, 1.0 - self - rare, rare},
                                               {(1.0 - self) / 2, self, (1.0 - self) / 2},
                                               {rare, 1.0 - self - rare, self}}};
      }
      if (hj.contains("transition")) {
        const auto& tm = hj["transition"];
        if (!tm.is_array() || tm.size() != 3)
          throw ConfigError("config: 'hmm.transition' must be a 3x3 matrix");
        for (int r = 0; r < 3; ++r) {
          if (!tm[r].is_array() || tm[r].size() != 3)
            throw ConfigError("config: 'hmm.transition' must be a 3x3 matrix");
          for (int c = 0; c < 3; ++c) cfg.hmm.transition[r][c] = tm[r][c].get<double>();
        }
      }
      if (hj.contains("emissions")) {
        const auto& em = hj["emissions"];
        if (!em.is_array() || em.size() != 3)
          throw ConfigError("config: 'hmm.emissions' must list the 3 states");
        for (int s = 0; s < 3; ++s) cfg.hmm.emission[s] = parse_emission(em[s], "hmm.emissions[]");
      }
    }

    {
      const json tj = j.contains("tracker") ? j["tracker"] : json::object();
      check_keys(tj, "tracker",
                 {"particles", "accel_std", "rss_var", "freq_var", "cross_cov", "init",
                  "use_freq", "heading_hint_deg", "heading_hint_rad", "node_standoff_m"});
      auto& tk = cfg.tracker;
      const int particles = get_int(tj, "particles", 512);
      if (particles < 1) throw ConfigError("config: 'tracker.particles' must be >= 1");
      tk.particle_count = static_cast<std::size_t>(particles);
      tk.process_noise.accel_std = get_number(tj, "accel_std", 0.4);
      tk.measurement_noise.rss_var = get_number(tj, "rss_var", 2.0);
      tk.measurement_noise.freq_var = get_number(tj, "freq_var", 1.5);
      tk.measurement_noise.cross_cov = get_number(tj, "cross_cov", 0.0);
      const json ij = tj.contains("init") ? tj["init"] : json::object();
      check_keys(ij, "tracker.init",
                 {"speed_max_mps", "heading_spread_deg", "heading_spread_rad", "perp_std_m"});
      tk.init.speed_max_mps = get_number(ij, "speed_max_mps", 2.0);
      tk.init.heading_spread_rad = ij.contains("heading_spread_rad")
                                       ? get_number(ij, "heading_spread_rad", 0.0)
                                       : get_number(ij, "heading_spread_deg", 45.0) * M_PI / 180.0;
      tk.init.perp_std_m = get_number(ij, "perp_std_m", 0.3);
      tk.use_freq = get_bool(tj, "use_freq", true);
      tk.node_standoff_m = get_number(tj, "node_standoff_m", kDefaultNodeStandoffM);
      tk.region = region;
      if (tj.contains("heading_hint_rad"))
        tk.heading_hint_rad = get_number(tj, "heading_hint_rad", 0.0);
      else if (tj.contains("heading_hint_deg"))
        tk.heading_hint_rad = get_number(tj, "heading_hint_deg", 0.0) * M_PI / 180.0;
      else
        tk.heading_hint_rad = sc.trajectory.heading_rad;
    }

    cfg.scenario.validate();
    cfg.spectral.validate();
    cfg.hmm.validate();
    cfg.tracker.measurement_noise.validate();
    if (cfg.calibration_window_s < 0.0)
      throw ConfigError("config: calibration_window_s must be >= 0");
    return cfg;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ToolkitConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return parse_config(j);
}

nlohmann::json to_json(const ToolkitConfig& cfg) {
  json j;
  const auto& sc = cfg.scenario;
  j["seed"] = sc.seed;
  j["channels"] = sc.channels;
  j["sample_interval_s"] = sc.sample_interval_s;

  json links = json::array();
  for (const auto& l : sc.links) {
    links.push_back({{"tx", {l.tx.x, l.tx.y}},
                     {"rx", {l.rx.x, l.rx.y}},
                     {"carrier_frequency_hz", l.carrier_frequency_hz}});
  }
  j["links"] = links;

  // Angles are snapshotted in radians so that re-parsing is bit-exact.
  j["trajectory"] = {{"speed_mps", sc.trajectory.speed_mps},
                     {"heading_rad", sc.trajectory.heading_rad},
                     {"duration_s", sc.trajectory.duration_s},
                     {"start", {sc.trajectory.start.x, sc.trajectory.start.y}}};

  j["noise_std_db"] = sc.noise_std_db;
  j["system_gain_db"] = sc.system_gain_db.size() == 1 ? json(sc.system_gain_db[0])
                                                      : json(sc.system_gain_db);
  j["body"] = {{"psi", sc.body.reflection.psi},
               {"semi_minor_m", sc.body.semi_minor_m},
               {"semi_major_m", sc.body.semi_major_m},
               {"attenuation_db_per_m", sc.body.attenuation_db_per_m}};
  j["preamble_s"] = sc.preamble_s;
  if (cfg.tracker.region.y_min > -1e29 || cfg.tracker.region.y_max < 1e29)
    j["monitored_region"] = {{"y_min", cfg.tracker.region.y_min},
                             {"y_max", cfg.tracker.region.y_max}};
  j["fresnel_zone_max"] = sc.fresnel_zone_max;
  j["quantize_db"] = sc.quantize_db;

  j["spectral"] = {{"window_len", cfg.spectral.window_len},
                   {"dft_len", cfg.spectral.dft_len},
                   {"min_freq_hz", cfg.spectral.min_freq_hz},
                   {"snr_gate_db", cfg.spectral.snr_gate_db},
                   {"hann", cfg.spectral.hann_window}};
  j["calibration_window_s"] = cfg.calibration_window_s;

  json transition = json::array();
  for (const auto& row : cfg.hmm.transition) transition.push_back({row[0], row[1], row[2]});
  json emissions = json::array();
  for (const auto& e : cfg.hmm.emission)
    emissions.push_back({{"std_mean", e.std_mean},
                         {"std_sigma", e.std_sigma},
                         {"absmean_mean", e.absmean_mean},
                         {"absmean_sigma", e.absmean_sigma}});
  j["hmm"] = {{"feature_window", cfg.hmm.feature_window},
              {"transition", transition},
              {"emissions", emissions}};

  const auto& tk = cfg.tracker;
  j["tracker"] = {{"particles", static_cast<int>(tk.particle_count)},
                  {"accel_std", tk.process_noise.accel_std},
                  {"rss_var", tk.measurement_noise.rss_var},
                  {"freq_var", tk.measurement_noise.freq_var},
                  {"cross_cov", tk.measurement_noise.cross_cov},
                  {"init",
                   {{"speed_max_mps", tk.init.speed_max_mps},
                    {"heading_spread_rad", tk.init.heading_spread_rad},
                    {"perp_std_m", tk.init.perp_std_m}}},
                  {"use_freq", tk.use_freq},
                  {"heading_hint_rad", tk.heading_hint_rad},
                  {"node_standoff_m", tk.node_standoff_m}};
  return j;
}

}  // namespace dfl

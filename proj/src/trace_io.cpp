#include "dfl/trace_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "dfl/errors.hpp"

namespace dfl {

namespace {

// Shortest round-trip decimal form.
std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double parse_double(const std::string& field, long line, const char* what) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end)
    throw DataFormatError(std::string("bad ") + what + " value '" + field + "'", line);
  return value;
}

long parse_int(const std::string& field, long line, const char* what) {
  long value = 0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end)
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

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataFormatError("cannot open: " + path);
  return is;
}

}  // namespace

void write_trace_csv(std::ostream& os, const RssTrace& trace) {
  os << "t,link,channel,rss_dbm\n";
  for (const auto& s : trace.samples)
    os << format_double(s.t) << ',' << s.link << ',' << s.channel << ','
       << format_double(s.rss_db) << '\n';
}

void write_truth_csv(std::ostream& os, const RssTrace& trace) {
  os << "t,px,py,vx,vy";
  for (int l = 0; l < trace.link_count; ++l) os << ",state_link" << l;
  os << '\n';
  for (const auto& s : trace.truth) {
    os << format_double(s.t) << ',' << format_double(s.position.x) << ','
       << format_double(s.position.y) << ',' << format_double(s.velocity.vx) << ','
       << format_double(s.velocity.vy);
    for (auto st : s.link_states) os << ',' << static_cast<int>(st);
    os << '\n';
  }
}

void write_trace_csv(const std::string& path, const RssTrace& trace) {
  auto os = open_out(path);
  write_trace_csv(os, trace);
}

void write_truth_csv(const std::string& path, const RssTrace& trace) {
  auto os = open_out(path);
  write_truth_csv(os, trace);
}

RssTrace read_trace_csv(std::istream& is) {
  RssTrace trace;
  std::string line;
  long line_no = 0;

  if (!std::getline(is, line)) throw DataFormatError("empty trace file", 1);
  ++line_no;
  if (split_csv(line) != std::vector<std::string>{"t", "link", "channel", "rss_dbm"})
    throw DataFormatError("expected header 't,link,channel,rss_dbm'", line_no);

  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 4) throw DataFormatError("expected 4 fields", line_no);
    TraceSample s;
    s.t = parse_double(fields[0], line_no, "t");
    s.link = static_cast<int>(parse_int(fields[1], line_no, "link"));
    s.channel = static_cast<int>(parse_int(fields[2], line_no, "channel"));
    s.rss_db = parse_double(fields[3], line_no, "rss");
    if (s.link < 0 || s.channel < 0) throw DataFormatError("negative link/channel id", line_no);
    trace.link_count = std::max(trace.link_count, s.link + 1);
    trace.channel_count = std::max(trace.channel_count, s.channel + 1);
    trace.samples.push_back(s);
  }
  return trace;
}

RssTrace read_trace_csv(const std::string& path) {
  auto is = open_in(path);
  return read_trace_csv(is);
}

std::vector<TruthSample> read_truth_csv(std::istream& is) {
  std::vector<TruthSample> truth;
  std::string line;
  long line_no = 0;

  if (!std::getline(is, line)) throw DataFormatError("empty truth file", 1);
  ++line_no;
  const auto header = split_csv(line);
  if (header.size() < 5 || header[0] != "t" || header[1] != "px" || header[2] != "py" ||
      header[3] != "vx" || header[4] != "vy")
    throw DataFormatError("expected header 't,px,py,vx,vy,state_link0,...'", line_no);
  const std::size_t link_count = header.size() - 5;

  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size())
      throw DataFormatError("field count does not match header", line_no);
    TruthSample s;
    s.t = parse_double(fields[0], line_no, "t");
    s.position.x = parse_double(fields[1], line_no, "px");
    s.position.y = parse_double(fields[2], line_no, "py");
    s.velocity.vx = parse_double(fields[3], line_no, "vx");
    s.velocity.vy = parse_double(fields[4], line_no, "vy");
    for (std::size_t l = 0; l < link_count; ++l) {
      const long v = parse_int(fields[5 + l], line_no, "state");
      if (v < 1 || v > 3) throw DataFormatError("state must be 1, 2 or 3", line_no);
      s.link_states.push_back(static_cast<PropagationState>(v));
    }
    truth.push_back(std::move(s));
  }
  return truth;
}

std::vector<TruthSample> read_truth_csv(const std::string& path) {
  auto is = open_in(path);
  return read_truth_csv(is);
}

std::vector<MeasurementFrame> replay(const RssTrace& trace, const ReplayConfig& cfg) {
  cfg.spectral.validate();
  std::vector<MeasurementFrame> frames;
  if (trace.samples.empty()) return frames;

  const int links = trace.link_count;
  const int channels = trace.channel_count;

  // Calibration: per-(link, channel) means over the leading window.
  std::vector<double> cal_sum(links * channels, 0.0);
  std::vector<long> cal_count(links * channels, 0);
  const double t0 = trace.samples.front().t;
  for (const auto& s : trace.samples) {
    if (s.t - t0 >= cfg.calibration_window_s) break;
    cal_sum[s.link * channels + s.channel] += s.rss_db;
    ++cal_count[s.link * channels + s.channel];
  }
  std::vector<double> cal_mean(links * channels, 0.0);
  for (int i = 0; i < links * channels; ++i)
    if (cal_count[i] > 0) cal_mean[i] = cal_sum[i] / cal_count[i];

  // Sliding per-link windows of the combined measurement.
  const int nf = cfg.spectral.window_len;
  std::vector<std::vector<double>> window(links);
  for (auto& w : window) w.reserve(nf);

  std::vector<std::vector<double>> values(links), means(links);
  auto flush_frame = [&](double t) {
    MeasurementFrame frame;
    frame.t = t;
    frame.links.resize(links);
    for (int l = 0; l < links; ++l) {
      auto& m = frame.links[l];
      m.channels_used = static_cast<int>(values[l].size());
      if (m.channels_used > 0) {
        m.r_db = mean_remove_and_combine(values[l], means[l]);
        m.r_valid = true;
        auto& w = window[l];
        if (static_cast<int>(w.size()) == nf) w.erase(w.begin());
        w.push_back(m.r_db);
        if (static_cast<int>(w.size()) == nf) m.freq = psd_peak(w, cfg.spectral);
      }
      values[l].clear();
      means[l].clear();
    }
    frames.push_back(std::move(frame));
  };

  bool group_open = false;
  double group_t = 0.0;
  for (const auto& s : trace.samples) {
    if (s.t - t0 < cfg.calibration_window_s) continue;
    if (group_open && s.t != group_t) flush_frame(group_t);
    group_open = true;
    group_t = s.t;
    if (cal_count[s.link * channels + s.channel] == 0) continue;  // never calibrated
    values[s.link].push_back(s.rss_db);
    means[s.link].push_back(cal_mean[s.link * channels + s.channel]);
  }
  if (group_open) flush_frame(group_t);
  return frames;
}

}  // namespace dfl

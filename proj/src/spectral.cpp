#include "dfl/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dfl {

void SpectralConfig::validate() const {
  if (window_len < 4) throw std::invalid_argument("spectral: window_len must be >= 4");
  if (dft_len < window_len) throw std::invalid_argument("spectral: dft_len must be >= window_len");
  if (!(sample_interval_s > 0.0)) throw std::invalid_argument("spectral: sample_interval_s must be positive");
  if (min_freq_hz < 0.0 || min_freq_hz >= nyquist_hz())
    throw std::invalid_argument("spectral: min_freq_hz must lie in [0, nyquist)");
}

FrequencyMeasurement psd_peak(std::span<const double> window, const SpectralConfig& cfg) {
  if (static_cast<int>(window.size()) != cfg.window_len)
    throw std::invalid_argument("psd_peak: window length does not match config");

  const int n = cfg.window_len;
  const int m = cfg.dft_len;

  double mean = 0.0;
  for (double v : window) mean += v;
  mean /= n;

  std::vector<double> w(n);
  double energy = 0.0;
  for (int k = 0; k < n; ++k) {
    double tap = cfg.hann_window ? 0.5 - 0.5 * std::cos(2.0 * M_PI * k / (n - 1)) : 1.0;
    w[k] = (window[k] - mean) * tap;
    energy += w[k] * w[k];
  }
  // A numerically constant window carries no information; the mean-removal
  // residue would otherwise masquerade as a DC-lobe peak.
  if (std::sqrt(energy / n) <= 1e-12 * (1.0 + std::abs(mean))) return FrequencyMeasurement{};

  // Power on the zero-padded grid, positive frequencies only. The window is
  // short, so the direct transform is cheaper than setting up an FFT.
  const int half = m / 2;
  std::vector<double> power(half + 1, 0.0);
  for (int bin = 0; bin <= half; ++bin) {
    double re = 0.0, im = 0.0;
    const double step = -2.0 * M_PI * bin / m;
    for (int k = 0; k < n; ++k) {
      re += w[k] * std::cos(step * k);
      im += w[k] * std::sin(step * k);
    }
    power[bin] = re * re + im * im;
  }

  const double bin_hz = cfg.bin_width_hz();
  const int first_bin = static_cast<int>(std::ceil(cfg.min_freq_hz / bin_hz - 1e-12));

  FrequencyMeasurement out;
  if (first_bin > half) return out;

  int peak_bin = first_bin;
  for (int bin = first_bin; bin <= half; ++bin)
    if (power[bin] > power[peak_bin]) peak_bin = bin;

  if (power[peak_bin] <= 0.0) return out;
  out.peak_power_db = 10.0 * std::log10(power[peak_bin]);

  // SNR gate against the median power of the searched bins.
  std::vector<double> sorted(power.begin() + first_bin, power.end());
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double median = sorted[sorted.size() / 2];
  const double median_db = median > 0.0 ? 10.0 * std::log10(median) : -1e30;
  if (out.peak_power_db < median_db + cfg.snr_gate_db) return out;

  // Parabolic refinement on the log power of the winning bin and neighbors.
  double offset = 0.0;
  if (peak_bin > first_bin && peak_bin < half && power[peak_bin - 1] > 0.0 && power[peak_bin + 1] > 0.0) {
    const double l0 = std::log(power[peak_bin - 1]);
    const double l1 = std::log(power[peak_bin]);
    const double l2 = std::log(power[peak_bin + 1]);
    const double denom = l0 - 2.0 * l1 + l2;
    if (denom < 0.0) offset = std::clamp(0.5 * (l0 - l2) / denom, -0.5, 0.5);
  }

  out.freq_hz = (peak_bin + offset) * bin_hz;
  out.valid = true;
  return out;
}

double model_frequency(Point2 p, Velocity2 v, const Link& link) {
  return path_length_rate(p, v, link) / link.wavelength_m();
}

double model_frequency_avg(Point2 p, Velocity2 v, const Link& link, const SpectralConfig& cfg) {
  const double back = 0.5 * cfg.window_len * cfg.sample_interval_s;
  const Point2 centered{p.x - v.vx * back, p.y - v.vy * back};
  return model_frequency(centered, v, link);
}

double fourier_series_gain(double excess_wavelengths, double psi, int n_terms) {
  if (n_terms < 1) throw std::invalid_argument("fourier_series_gain: n_terms must be >= 1");
  const double ehat = 10.0 * std::log10(M_E);
  const double phase = 2.0 * M_PI * excess_wavelengths;
  double sum = 0.0;
  double sign = -1.0;       // (-psi)^i
  double psi_pow = psi;
  for (int i = 1; i <= n_terms; ++i) {
    sum += sign * psi_pow / i * std::cos(phase * i);
    sign = -sign;
    psi_pow *= psi;
  }
  return -2.0 * ehat * sum;
}

double SpectrumCheckReport::fraction_within(double tol_hz) const {
  if (valid_count == 0) return 0.0;
  int hits = 0;
  for (const auto& w : windows)
    if (w.valid && w.abs_error_hz <= tol_hz) ++hits;
  return static_cast<double>(hits) / valid_count;
}

SpectrumCheckReport first_order_spectrum_check(std::span<const Point2> positions, Velocity2 v,
                                               const Link& link, const ReflectionParams& refl,
                                               const SpectralConfig& cfg) {
  cfg.validate();
  const int n = cfg.window_len;
  const int total = static_cast<int>(positions.size());

  std::vector<double> g2(total);
  for (int k = 0; k < total; ++k) g2[k] = reflection_gain(positions[k], link, refl);

  SpectrumCheckReport report;
  std::vector<double> errors;
  for (int last = n - 1; last < total; ++last) {
    SpectrumCheckWindow w;
    w.sample_index = last;
    const auto meas = psd_peak(std::span<const double>(g2).subspan(last - n + 1, n), cfg);
    w.valid = meas.valid;
    w.measured_hz = meas.freq_hz;
    // Window-centered model; with a uniformly sampled constant-velocity
    // trajectory this is the model at sample (last - N_f/2).
    w.modeled_hz = std::abs(model_frequency_avg(positions[last], v, link, cfg));
    w.abs_error_hz = std::abs(w.measured_hz - w.modeled_hz);
    if (w.valid) {
      ++report.valid_count;
      errors.push_back(w.abs_error_hz);
    }
    report.windows.push_back(w);
  }

  if (!errors.empty()) {
    auto mid = errors.begin() + errors.size() / 2;
    std::nth_element(errors.begin(), mid, errors.end());
    report.median_abs_error_hz = *mid;
  }
  return report;
}

}  // namespace dfl

#pragma once

#include <span>
#include <vector>

#include "dfl/geometry.hpp"
#include "dfl/rss_model.hpp"

namespace dfl {

struct SpectralConfig {
  int window_len = 20;              // N_f, samples per analysis window
  double sample_interval_s = 0.032;  // T_s
  int dft_len = 256;                // zero-padded transform length
  double min_freq_hz = 0.5;         // bins below this are never picked
  double snr_gate_db = 10.0;        // peak must clear median bin power by this
  bool hann_window = false;         // rectangular by default

  void validate() const;
  double nyquist_hz() const { return 0.5 / sample_interval_s; }
  /// Spacing of the zero-padded frequency grid.
  double bin_width_hz() const { return 1.0 / (dft_len * sample_interval_s); }
};

/// Outcome of one windowed peak search. `freq_hz` is unsigned: a
/// real-valued window cannot distinguish the sign of the underlying rate.
struct FrequencyMeasurement {
  double freq_hz = 0.0;
  bool valid = false;
  double peak_power_db = -1e30;
};

/// Frequency of the strongest non-DC component of the window, located on the
/// zero-padded DFT grid and refined by parabolic interpolation. The window
/// mean is removed before the transform; the measurement is flagged invalid
/// when the peak does not clear the SNR gate.
FrequencyMeasurement psd_peak(std::span<const double> window, const SpectralConfig& cfg);

/// Modeled change rate of the channel for a reflector at p moving with v:
/// (1/lambda) * (unit(p-rx) + unit(p-tx)) . v. Signed.
double model_frequency(Point2 p, Velocity2 v, const Link& link);

/// model_frequency evaluated at the window-centered position, i.e. the
/// position backed up by half a window: p - v * (N_f/2) * T_s.
double model_frequency_avg(Point2 p, Velocity2 v, const Link& link, const SpectralConfig& cfg);

/// Truncated Fourier series of the two-path gain:
/// -2 * ehat * sum_i a_i cos(2 pi i delta/lambda), a_i = (-psi)^i / i,
/// ehat = 10*log10(e). Converges to two_ray_gain_db as n_terms grows.
double fourier_series_gain(double excess_wavelengths, double psi, int n_terms);

struct SpectrumCheckWindow {
  int sample_index = 0;      // index of the last sample in the window
  double measured_hz = 0.0;  // |R|
  double modeled_hz = 0.0;   // |G| at the window center
  bool valid = false;
  double abs_error_hz = 0.0;
};

struct SpectrumCheckReport {
  std::vector<SpectrumCheckWindow> windows;
  int valid_count = 0;
  double median_abs_error_hz = 0.0;

  /// Fraction of valid windows with |R - G| <= tol.
  double fraction_within(double tol_hz) const;
};

/// End-to-end check of the windowed peak estimator against the analytic
/// frequency model: synthesizes the noiseless reflection gain along a
/// constant-velocity trajectory, runs psd_peak per window and compares with
/// model_frequency_avg.
SpectrumCheckReport first_order_spectrum_check(std::span<const Point2> positions, Velocity2 v,
                                               const Link& link, const ReflectionParams& refl,
                                               const SpectralConfig& cfg);

}  // namespace dfl

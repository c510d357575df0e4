#pragma once

// Observables extracted from atomic fields and run records: multipoles,
// detector spectra, drift and chirality, camera-integrated contrast.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "smsdw/bloch.hpp"
#include "smsdw/feedback.hpp"

namespace smsdw {

/// Dipole and quadrupole view of one pixel.
struct Multipoles {
  std::array<double, 3> m{};  // m_x, m_y, m_z
  double q_xy = 0.0;          // m_x m_y + m_y m_x
  double q_xz = 0.0;          // m_x m_z + m_z m_x
  double q_yz = 0.0;          // m_y m_z + m_z m_y
  double q_u = 0.0;           // m_x^2 - m_y^2
  double q_zz = 0.0;          // 3 m_z^2 - m^2
};

Multipoles to_multipoles(const AtomState& s);
AtomState from_multipoles(const Multipoles& m);

struct MultipoleField {
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::vector<Multipoles> data;
};

MultipoleField to_multipoles(const AtomicField& atoms);
AtomicField from_multipoles(const MultipoleField& field);

/// Largest deviation of the reconstructed populations from [0, 1] and of
/// their sum from 1 over all recorded cuts.
struct PopulationCheck {
  double worst_range_violation = 0.0;
  double worst_sum_error = 0.0;
  std::size_t samples = 0;
};
PopulationCheck check_populations(const RunRecord& record);

struct TimeSeries {
  std::vector<double> times;   // scaled
  std::vector<double> values;
  double dt = 0.0;
};

/// Photodiode signal; throws AnalysisError on non-uniform cadence.
TimeSeries detector_series(const RunRecord& record);

/// Time series of one cut variable at pixel ix.
TimeSeries pixel_series(const RunRecord& record, const std::string& name, std::size_t ix);

struct SpectrumPeak {
  double frequency = 0.0;    // cycles per scaled time unit
  double frequency_hz = 0.0;
  double amplitude = 0.0;
  double bin_width = 0.0;    // cycles per scaled time unit
  double noise_floor = 0.0;
};

struct SpectrumOptions {
  double skip_fraction = 0.3;   // leading transient dropped
  double min_periods = 20.0;    // required oscillations in the window
  double min_snr = 5.0;         // peak over median spectral magnitude
};

/// Hann-windowed FFT of the mean-subtracted series with quadratic
/// interpolation around the highest non-DC bin. Throws AnalysisError with
/// "no AC signal" when the peak does not clear the noise floor.
SpectrumPeak spectrum_peak(const TimeSeries& series, const SpectrumOptions& opt = {});

/// One-sided magnitude spectrum (same windowing as spectrum_peak).
std::vector<std::pair<double, double>> magnitude_spectrum(const TimeSeries& series, double skip_fraction = 0.3);

struct DriftReport {
  double mod_freq = 0.0;          // Hz, detector AC peak
  double larmor_ratio = 0.0;      // mod_freq / (2 f_Larmor)
  double fundamental_freq = 0.0;  // Hz, phase rate of the tracked mode
  double drift_velocity = 0.0;    // m/s, signed along x
  int direction = 0;              // sign of drift_velocity
  int chirality = 0;              // +1 right-handed screw, -1 left-handed
  int sequence = 0;               // sequence_order at the last probe
  double stripe_period = 0.0;     // m, period of the tracked mode
  int mode_bin = 0;
};

struct DriftOptions {
  std::string channel = "w";    // "w" tracks the fundamental, "i_perp" the harmonic
  double skip_fraction = 0.5;
  bool with_spectrum = true;    // also fill mod_freq / larmor_ratio from the detector
};

/// Dominant spatial Fourier bin (k > 0) of a cut, averaged over probes from
/// index `from` on.
int dominant_bin(const RunRecord& record, const std::string& name, std::size_t from = 0);

/// Complex spatial Fourier amplitude of cut `name` at probe p and bin k
/// (forward convention, sum f(x) exp(-i q x)).
cplx cut_mode(const RunRecord& record, const std::string& name, std::size_t p, int k);

/// Drift from least squares on the unwrapped phase of the dominant mode.
/// Throws AnalysisError ("undersampled") when consecutive probes are too far
/// apart in phase to unwrap unambiguously.
DriftReport drift_velocity(const RunRecord& record, const DriftOptions& opt = {});

/// sign(Im(Y conj V)) for the Fourier modes of v and y2+z2 at bin k.
int chirality(const AtomicField& atoms, std::size_t row, int k);
int chirality(const RunRecord& record, std::size_t p, int k);

/// Order of the maxima sequence v -> y2+z2 -> w -> y1-z1 -> v: +1 when most
/// neighbouring steps point towards +x, -1 towards -x, 0 on a tie.
int sequence_order(const RunRecord& record, std::size_t p, int k);

/// Zero-lag normalized spatial cross-correlation of the w and v cuts,
/// averaged over probes from index `from` on.
double wv_correlation(const RunRecord& record, std::size_t from = 0);

struct ContrastCurve {
  std::vector<double> tau;       // s
  std::vector<double> contrast;  // arbitrary units
  int stripe_bin = 0;
};

struct ContrastOptions {
  int images = 40;
  std::uint64_t seed = 7;
  double skip_fraction = 0.3;
  std::string channel = "i_perp";
};

/// Emulates a camera: for each tau, `images` time-integrated frames at random
/// start times, Fourier magnitude at the stripe bin averaged over frames.
ContrastCurve contrast_vs_integration(const RunRecord& record, const std::vector<double>& taus_s,
                                      const ContrastOptions& opt = {});

/// Contrast at one integration time across a set of runs.
struct FieldContrast {
  std::vector<double> bx;
  std::vector<double> contrast;
};
FieldContrast contrast_vs_field(const std::vector<const RunRecord*>& records, double tau_s,
                                const ContrastOptions& opt = {});

/// Local minima of a sampled curve, refined by parabolic interpolation.
std::vector<double> curve_minima(const std::vector<double>& x, const std::vector<double>& y);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Drift speed implied by a temporal modulation frequency and the period of
/// the pattern that produces it.
inline double implied_velocity(double freq_hz, double period_m) { return freq_hz * period_m; }

/// Bx-flip protocol: settle, record, flip at a fixed delay into the record
/// and compare the drift before and after.
struct FlipOptions {
  double settle = 4000.0;        // scaled time before recording starts
  double flip_after_periods = 5.0;
  double record_periods = 40.0;  // record length in Larmor periods
  double reversal_window = 10.0; // Larmor periods allowed for the reversal
};

struct FlipReport {
  DriftReport before;
  DriftReport after;
  double flip_time = 0.0;         // scaled, absolute
  double reversal_time = -1.0;    // scaled delay from the flip to the start of the first Larmor-period
                                  // window after which the drift stays reversed; -1 if never
  int relative_sequence_before = 0;  // sequence order times drift direction
  int relative_sequence_after = 0;
  RunRecord record;
};

FlipReport flip_experiment(const SimConfig& config, const FlipOptions& opt = {});

}  // namespace smsdw

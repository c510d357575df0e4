#pragma once

// Physical constants and the scaled unit system. All dynamics run in time
// units of 1/gamma2 and rates in units of gamma2.

#include <numbers>

namespace smsdw::units {

struct PhysicalConstants {
  double gamma2 = std::numbers::pi * 6.066e6;  // s^-1
  double i_sat = 1.669;                         // mW/cm^2
  double g_factor = 0.5;
  double wavelength = 780.241e-9;               // m, Rb D2
  double larmor_coeff = 0.23;                   // scaled Larmor frequency per gauss
};

inline constexpr PhysicalConstants kConstants{};

struct ScaledUnits {
  double time_unit = 1.0 / kConstants.gamma2;  // s
  double rabi_sq_per_intensity = 2.0;           // |Omega'|^2 per (I / I_sat)
};

inline constexpr ScaledUnits kScaled{};

/// Scaled Larmor frequency for a field along x (gauss). Odd in bx.
constexpr double larmor_freq(double bx) { return kConstants.larmor_coeff * bx; }

/// |Omega'|^2 for intensity i in mW/cm^2. Throws ConfigError for i < 0.
double rabi_sq_from_intensity(double i);

/// Inverse of rabi_sq_from_intensity, returns I / I_sat.
constexpr double intensity_ratio_from_rabi_sq(double rabi_sq) {
  return rabi_sq / kScaled.rabi_sq_per_intensity;
}

/// Converts a scaled angular frequency to Hz.
constexpr double scaled_to_hz(double omega_scaled) {
  return omega_scaled * kConstants.gamma2 / (2.0 * std::numbers::pi);
}

constexpr double scaled_time_to_seconds(double t) { return t / kConstants.gamma2; }
constexpr double seconds_to_scaled_time(double s) { return s * kConstants.gamma2; }

/// Scaled detuning from a detuning given in units of the full linewidth
/// Gamma = 2 gamma2.
constexpr double detuning_from_linewidths(double delta_over_gamma) { return 2.0 * delta_over_gamma; }

constexpr double wavenumber(double wavelength = kConstants.wavelength) {
  return 2.0 * std::numbers::pi / wavelength;
}

}  // namespace smsdw::units

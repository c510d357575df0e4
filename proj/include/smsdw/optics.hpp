#pragma once

// Light propagation: transmission through the diffractively thin cloud,
// free-space round trip to the feedback mirror in Fourier space, the
// Fourier-plane slit and circular <-> linear basis conversion.

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

#include "smsdw/bloch.hpp"

namespace smsdw {

enum class Plane { entrance, exit, reentrant };

/// Scaled circular Rabi amplitudes Omega'_+ and Omega'_- on a periodic grid,
/// x fastest.
struct OpticalField {
  std::size_t nx = 0;
  std::size_t ny = 0;
  Plane plane = Plane::entrance;
  std::vector<cplx> plus;
  std::vector<cplx> minus;

  OpticalField() = default;
  OpticalField(std::size_t nx_, std::size_t ny_, Plane p = Plane::entrance)
      : nx(nx_), ny(ny_), plane(p), plus(nx_ * ny_), minus(nx_ * ny_) {}

  std::size_t size() const { return plus.size(); }
  double total_power() const;
};

/// Uniform pump of the given intensity (mW/cm^2), linearly polarized along x.
/// In the circular basis x polarization is Omega'_+ = -Omega'_- (phase
/// difference pi).
OpticalField x_polarized_pump(std::size_t nx, std::size_t ny, double intensity);

/// Susceptibility of the cloud. Only chi*k*L/2 enters the thin-slab solution
/// so the physical cloud length is never needed.
struct Susceptibility {
  double od = 0.0;
  double delta = -20.0;
  double omega_z = 0.0;

  /// chi_+- * k * L / 2 for sign = +1 / -1.
  cplx half_kl_chi(int sign) const;
};

/// exp(M) for a complex 2x2 matrix, row major.
std::array<cplx, 4> expm2(const std::array<cplx, 4>& m);

/// Transfer matrix of one pixel through the slab.
std::array<cplx, 4> slab_matrix(const AtomState& atoms, const Susceptibility& chi);

OpticalField medium_transmit(const OpticalField& in, const AtomicField& atoms, const Susceptibility& chi);

enum class FilterAxis { none, x, y };

/// Fourier-plane slit. With axis x only wavevectors on the qx axis (qy bin
/// zero) pass, restricted to |qx bin| within half_width of center_bin. A
/// center_bin of zero passes the whole axis. DC always passes.
struct FourierFilter {
  FilterAxis axis = FilterAxis::none;
  int half_width = 3;
  int center_bin = 0;

  bool passes(int kx, int ky) const;
};

/// Signed FFT bin index for position i of an n-point transform.
inline int signed_bin(std::size_t i, std::size_t n) {
  return i <= n / 2 ? static_cast<int>(i) : static_cast<int>(i) - static_cast<int>(n);
}

class FftPlan;

/// Fourier-space round trip: FFT, multiply each bin by
/// sqrt(R) * filter * exp(i q^2 distance / (2k)), inverse FFT. One instance
/// owns its FFTW plans and scratch buffer and is not thread safe; separate
/// instances may be used concurrently.
class SpectralPropagator {
 public:
  SpectralPropagator(std::size_t nx, std::size_t ny, double pixel, double distance, double wavelength,
                     const FourierFilter& filter, double reflectivity);
  ~SpectralPropagator();
  SpectralPropagator(SpectralPropagator&&) noexcept;
  SpectralPropagator& operator=(SpectralPropagator&&) noexcept;

  /// Applies the combined multiplier to both circular components.
  OpticalField apply(const OpticalField& in, Plane out_plane) const;

  const std::vector<cplx>& multiplier() const { return multiplier_; }
  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }

 private:
  void transform(const std::vector<cplx>& in, std::vector<cplx>& out) const;

  std::size_t nx_, ny_;
  std::vector<cplx> multiplier_;
  std::unique_ptr<FftPlan> plan_;
};

/// Forward 2D FFT of a complex grid (unnormalized, FFTW sign convention).
std::vector<cplx> fft2(const std::vector<cplx>& in, std::size_t nx, std::size_t ny, bool inverse = false);

/// Free-space propagation over distance (may be negative) without filter.
OpticalField propagate_free(const OpticalField& field, double pixel, double distance, double wavelength);

/// Zeroes Fourier bins rejected by the filter. Field must be in Fourier
/// representation.
OpticalField apply_filter(const OpticalField& spectrum, const FourierFilter& filter);

/// Multiplies both components by sqrt(R). Throws ConfigError unless
/// 0 <= R <= 1.
OpticalField mirror_reflect(const OpticalField& field, double reflectivity);

struct LinearField {
  std::vector<cplx> parallel;  // along the pump polarization (x)
  std::vector<cplx> perp;      // along y
};

/// e_x = (e_- - e_+)/sqrt2, e_y = i (e_- + e_+)/sqrt2.
LinearField to_linear_basis(const OpticalField& field);
OpticalField from_linear_basis(const LinearField& lin, std::size_t nx, std::size_t ny);

/// |e_perp|^2 per pixel.
std::vector<double> perp_intensity(const OpticalField& field);

/// Polarization angle from the phase difference phi_L between the circular
/// components, Omega'_- = Omega'_+ exp(-i phi_L).
double polarization_angle(double phi_l);

/// Transverse wavenumber of FFT bin k for a grid of n pixels of size pixel.
double bin_wavenumber(int k, std::size_t n, double pixel);

}  // namespace smsdw

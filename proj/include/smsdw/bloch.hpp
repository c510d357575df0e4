#pragma once

// Ground-state Bloch dynamics of an F=1 -> F'=2 transition with the excited
// state adiabatically eliminated. Eight real variables per pixel:
//   u, v      transverse alignment, Phi = u + i v (Delta m = 2 coherence)
//   w         orientation rho_11 - rho_-1-1
//   X         longitudinal alignment
//   y1,z1,y2,z2  Delta m = 1 coherences

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace smsdw {

using cplx = std::complex<double>;

enum Var : std::size_t { kU = 0, kV, kW, kX, kY1, kZ1, kY2, kZ2, kNumVars };

using AtomState = std::array<double, kNumVars>;

struct Populations {
  double minus;  // rho_-1-1
  double zero;   // rho_00
  double plus;   // rho_11
};

/// Reconstructs the Zeeman populations from w and X. They sum to one by
/// construction.
Populations populations(const AtomState& s);

struct AtomicField {
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::vector<AtomState> data;

  AtomicField() = default;
  AtomicField(std::size_t nx_, std::size_t ny_) : nx(nx_), ny(ny_), data(nx_ * ny_, AtomState{}) {}

  std::size_t size() const { return data.size(); }
  AtomState& operator()(std::size_t ix, std::size_t iy) { return data[iy * nx + ix]; }
  const AtomState& operator()(std::size_t ix, std::size_t iy) const { return data[iy * nx + ix]; }

  /// Copies one variable into a flat array, x fastest.
  std::vector<double> component(Var var) const;
};

// Rate fields are bilinear in the optical field, so contributions of the
// forward and the reentrant beam add.
struct PumpRates {
  double p_plus = 0.0;
  double p_minus = 0.0;
  double p_lam_plus = 0.0;
  double p_lam_minus = 0.0;
  double s = 0.0;
  double d = 0.0;
  double p_plus_prime = 0.0;
  double p_minus_prime = 0.0;
  double rabi_sq_sum = 0.0;  // |Omega'_+|^2 + |Omega'_-|^2

  PumpRates& operator+=(const PumpRates& o);
  friend PumpRates operator+(PumpRates a, const PumpRates& b) { return a += b; }
};

struct DecayRates {
  double gamma_w = 0.0;
  double gamma_x = 0.0;
  double gamma_c = 0.0;
  double gamma_y = 0.0;
  double gamma_z = 0.0;
  double d_y = 0.0;
  double d_z = 0.0;
  double r = 0.0;
};

struct BlochParams {
  double delta = -20.0;    // scaled detuning
  double r = 1.5e-4;       // residual ground-state decay
  double omega_x = 0.0;    // scaled Larmor frequency
};

PumpRates pump_rates(cplx omega_plus, cplx omega_minus, double delta);
DecayRates decay_rates(const PumpRates& p, double delta, double r);

/// Time derivative of one pixel.
AtomState bloch_rhs(const AtomState& s, const PumpRates& p, const DecayRates& g, double delta,
                    double omega_x);

/// Subset of the right-hand side keeping only the self-dynamics of the
/// coherence Phi = u + i v: its decay and Raman drive. Coupling to other
/// moments and light shifts is dropped. Used to check the closed-form
/// stationary coherence.
AtomState coherence_only_rhs(const AtomState& s, const PumpRates& p, const DecayRates& g);

/// Per-pixel rates for a frozen optical field.
struct RateField {
  std::vector<PumpRates> pump;
  std::vector<DecayRates> decay;
};

/// Advances every pixel by one classic RK4 step with the rates held fixed.
/// Throws DivergenceError naming step_index if any result is not finite.
void step_atoms(AtomicField& field, const RateField& rates, const BlochParams& params, double dt,
                std::int64_t step_index = 0);

/// Single-pixel RK4 step, exposed for the oracle tests.
AtomState rk4_step(const AtomState& s, const PumpRates& p, const DecayRates& g, const BlochParams& params,
                   double dt);

/// Adds uniform noise in [-amplitude, amplitude] to w and v of every pixel.
void seed_noise(AtomicField& field, double amplitude, std::uint64_t rng_seed);

/// Default integration step: 1/20 of the shorter of the Larmor period and
/// 1/gamma_c.
double default_dt(double omega_x, double gamma_c);

}  // namespace smsdw

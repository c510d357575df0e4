#include "smsdw/bloch.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "smsdw/error.hpp"

namespace smsdw {

namespace {
constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;
}

Populations populations(const AtomState& s) {
  const double stretched = (2.0 + s[kX]) / 6.0;
  return {stretched - 0.5 * s[kW], (1.0 - s[kX]) / 3.0, stretched + 0.5 * s[kW]};
}

std::vector<double> AtomicField::component(Var var) const {
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = data[i][var];
  return out;
}

PumpRates& PumpRates::operator+=(const PumpRates& o) {
  p_plus += o.p_plus;
  p_minus += o.p_minus;
  p_lam_plus += o.p_lam_plus;
  p_lam_minus += o.p_lam_minus;
  s += o.s;
  d += o.d;
  p_plus_prime += o.p_plus_prime;
  p_minus_prime += o.p_minus_prime;
  rabi_sq_sum += o.rabi_sq_sum;
  return *this;
}

PumpRates pump_rates(cplx omega_plus, cplx omega_minus, double delta) {
  const double norm = 1.0 + delta * delta;
  const double ip = std::norm(omega_plus);
  const double im = std::norm(omega_minus);
  const cplx raman = std::conj(omega_plus) * omega_minus;

  PumpRates p;
  p.p_plus = ip / norm;
  p.p_minus = im / norm;
  p.p_lam_plus = 2.0 * raman.real() / norm;
  p.p_lam_minus = -2.0 * raman.imag() / norm;
  p.s = p.p_plus + p.p_minus;
  p.d = p.p_plus - p.p_minus;
  p.p_plus_prime = ip / norm;
  p.p_minus_prime = im / norm;
  p.rabi_sq_sum = ip + im;
  return p;
}

DecayRates decay_rates(const PumpRates& p, double delta, double r) {
  const double norm = 1.0 + delta * delta;
  DecayRates g;
  g.r = r;
  g.gamma_w = r + p.s / 6.0;
  g.gamma_x = r + 11.0 / 18.0 * p.s;
  g.gamma_c = r + 7.0 / 6.0 * p.s - p.rabi_sq_sum / (3.0 * norm);
  g.gamma_y = r + p.p_plus_prime + 7.0 / 12.0 * p.p_minus_prime;
  g.gamma_z = r + 7.0 / 12.0 * p.p_plus_prime + p.p_minus_prime;
  g.d_y = p.p_plus_prime - 7.0 / 12.0 * p.p_minus_prime;
  g.d_z = 7.0 / 12.0 * p.p_plus_prime - p.p_minus_prime;
  return g;
}

AtomState bloch_rhs(const AtomState& s, const PumpRates& p, const DecayRates& g, double delta,
                    double omega_x) {
  const double u = s[kU], v = s[kV], w = s[kW], X = s[kX];
  const double y1 = s[kY1], z1 = s[kZ1], y2 = s[kY2], z2 = s[kZ2];
  const double D = p.d, S = p.s, pl = p.p_lam_plus, mi = p.p_lam_minus;
  const double ppp = p.p_plus_prime, pmp = p.p_minus_prime;
  const double wx = omega_x * kInvSqrt2;

  AtomState ds{};
  ds[kU] = -g.gamma_c * u + (5.0 / 6.0 * D * delta) * v + 1.0 / 6.0 * mi * delta * w - 1.0 / 9.0 * pl * X +
           5.0 / 18.0 * pl - wx * (z2 - y2);
  ds[kV] = -g.gamma_c * v - (5.0 / 6.0 * D * delta) * u + 1.0 / 6.0 * pl * delta * w + 1.0 / 9.0 * mi * X -
           5.0 / 18.0 * mi + wx * (z1 - y1);
  ds[kW] = -g.gamma_w * w - 1.0 / 6.0 * mi * delta * u - 1.0 / 6.0 * pl * delta * v - 1.0 / 9.0 * D * X +
           5.0 / 18.0 * D - wx * (y2 + z2);
  ds[kX] = -g.gamma_x * X - 1.0 / 3.0 * pl * u + 1.0 / 3.0 * mi * v + 1.0 / 3.0 * D * w + 5.0 / 18.0 * S +
           3.0 * wx * (y2 - z2);
  ds[kY1] = -g.gamma_y * y1 + delta * g.d_y * y2 + (pmp / 6.0 + (delta * mi - pl) / 12.0) * z1 +
            (delta * pmp / 6.0 + (delta * pl + mi) / 12.0) * z2 + wx * v;
  ds[kY2] = -g.gamma_y * y2 - delta * g.d_y * y1 - (delta * pmp / 6.0 - (delta * pl + mi) / 12.0) * z1 +
            (pmp / 6.0 + (pl - delta * mi) / 12.0) * z2 + wx * (w - X - u);
  ds[kZ1] = -g.gamma_z * z1 + delta * g.d_z * z2 + (ppp / 6.0 - (delta * mi + pl) / 12.0) * y1 -
            (delta * ppp / 6.0 + (delta * pl - mi) / 12.0) * y2 - wx * v;
  ds[kZ2] = -g.gamma_z * z2 - delta * g.d_z * z1 + (delta * ppp / 6.0 - (delta * pl - mi) / 12.0) * y1 +
            (ppp / 6.0 + (delta * mi + pl) / 12.0) * y2 + wx * (w + X + u);
  return ds;
}

AtomState coherence_only_rhs(const AtomState& s, const PumpRates& p, const DecayRates& g) {
  AtomState ds{};
  ds[kU] = -g.gamma_c * s[kU] + 5.0 / 18.0 * p.p_lam_plus;
  ds[kV] = -g.gamma_c * s[kV] - 5.0 / 18.0 * p.p_lam_minus;
  return ds;
}

namespace {

inline AtomState axpy(const AtomState& x, double a, const AtomState& y) {
  AtomState out;
  for (std::size_t i = 0; i < kNumVars; ++i) out[i] = x[i] + a * y[i];
  return out;
}

}  // namespace

AtomState rk4_step(const AtomState& s, const PumpRates& p, const DecayRates& g, const BlochParams& params,
                   double dt) {
  const AtomState k1 = bloch_rhs(s, p, g, params.delta, params.omega_x);
  const AtomState k2 = bloch_rhs(axpy(s, 0.5 * dt, k1), p, g, params.delta, params.omega_x);
  const AtomState k3 = bloch_rhs(axpy(s, 0.5 * dt, k2), p, g, params.delta, params.omega_x);
  const AtomState k4 = bloch_rhs(axpy(s, dt, k3), p, g, params.delta, params.omega_x);
  AtomState out;
  for (std::size_t i = 0; i < kNumVars; ++i) {
    out[i] = s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return out;
}

void step_atoms(AtomicField& field, const RateField& rates, const BlochParams& params, double dt,
                std::int64_t step_index) {
  const std::size_t n = field.size();
  bool finite = true;
  std::size_t bad = 0;
  for (std::size_t i = 0; i < n; ++i) {
    AtomState& s = field.data[i];
    s = rk4_step(s, rates.pump[i], rates.decay[i], params, dt);
    for (double x : s) {
      if (!std::isfinite(x) && finite) {
        finite = false;
        bad = i;
      }
    }
  }
  if (!finite) {
    throw DivergenceError("non-finite atomic state at pixel " + std::to_string(bad) + " in step " +
                          std::to_string(step_index));
  }
}

void seed_noise(AtomicField& field, double amplitude, std::uint64_t rng_seed) {
  if (amplitude == 0.0) return;
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> dist(-amplitude, amplitude);
  for (AtomState& s : field.data) {
    s[kW] += dist(rng);
    s[kV] += dist(rng);
  }
}

double default_dt(double omega_x, double gamma_c) {
  double shortest = std::numeric_limits<double>::infinity();
  if (omega_x != 0.0) shortest = 2.0 * std::numbers::pi / std::abs(omega_x);
  if (gamma_c > 0.0) shortest = std::min(shortest, 1.0 / gamma_c);
  if (!std::isfinite(shortest)) shortest = 1.0;
  return shortest / 20.0;
}

}  // namespace smsdw

#pragma once

// Helpers shared by the unit, property and acceptance tests.

#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include "smsdw/bloch.hpp"
#include "smsdw/diagnostics.hpp"
#include "smsdw/feedback.hpp"
#include "smsdw/units.hpp"

namespace smsdw::testing {

inline PumpRates zero_pump() { return {}; }

/// Free precession (pump off) of one pixel with classic RK4.
inline std::vector<AtomState> free_precession(AtomState s, double bx, double r, double dt, std::size_t steps) {
  const PumpRates p{};
  const DecayRates g = decay_rates(p, -20.0, r);
  const BlochParams params{-20.0, r, units::larmor_freq(bx)};
  std::vector<AtomState> out{s};
  out.reserve(steps + 1);
  for (std::size_t i = 0; i < steps; ++i) {
    s = rk4_step(s, p, g, params, dt);
    out.push_back(s);
  }
  return out;
}

/// Record with cuts filled from f(name, x, t) on a 1D grid of nx pixels.
inline RunRecord synthetic_record(std::size_t nx, double pixel, double dt, std::size_t probes,
                                  const std::function<double(const std::string&, double, double)>& f,
                                  double bx = 0.5) {
  RunRecord rec;
  rec.config.grid.nx = nx;
  rec.config.grid.ny = 1;
  rec.config.grid.pixel = pixel;
  rec.config.bx = bx;
  for (std::size_t p = 0; p < probes; ++p) {
    const double t = static_cast<double>(p) * dt;
    rec.times.push_back(t);
    rec.bx.push_back(bx);
    rec.detector.push_back(f("i_perp", 0.0, t));
    for (const auto& name : cut_names()) {
      std::vector<double> row(nx);
      for (std::size_t ix = 0; ix < nx; ++ix) row[ix] = f(name, static_cast<double>(ix) * pixel, t);
      rec.cuts[name].push_back(std::move(row));
    }
  }
  return rec;
}

/// Quasi-1D drifting-stripe configuration used by the slower tests.
inline SimConfig quasi_1d(double od = 70.0, double bx = 0.5, double duration = 6000.0) {
  SimConfig c;
  c.od = od;
  c.bx = bx;
  c.intensity = 5.0;
  c.delta = -20.0;
  c.mirror_distance = -0.015;
  c.lambda_c = 134e-6;
  c.dt = 0.5;
  c.duration = duration;
  c.grid.nx = 128;
  c.grid.ny = 1;
  c.filter = FourierFilter{FilterAxis::x, 1, 0};
  c.probes.every = 2;
  return c;
}

}  // namespace smsdw::testing

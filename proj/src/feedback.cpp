#include "smsdw/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "smsdw/error.hpp"
#include "smsdw/units.hpp"

namespace smsdw {

double phasor_wavenumber(double mirror_distance, double wavelength) {
  if (mirror_distance == 0.0) return 0.0;
  const double k = units::wavenumber(wavelength);
  const double phase = mirror_distance > 0.0 ? 0.5 * std::numbers::pi : 1.5 * std::numbers::pi;
  return std::sqrt(phase * k / std::abs(mirror_distance));
}

double SimConfig::omega_x() const { return units::larmor_freq(bx); }
double SimConfig::omega_z() const { return units::larmor_freq(bz); }

double SimConfig::pattern_period() const {
  if (lambda_c > 0.0) return lambda_c;
  const double q = phasor_wavenumber(mirror_distance, wavelength);
  return q > 0.0 ? 2.0 * std::numbers::pi / q : 0.0;
}

double SimConfig::pixel() const {
  if (grid.pixel > 0.0) return grid.pixel;
  return pattern_period() / static_cast<double>(grid.pixels_per_period);
}

BlochParams SimConfig::bloch_params() const { return {delta, r_decay, omega_x()}; }

Susceptibility SimConfig::susceptibility() const { return {od, delta, omega_z()}; }

double SimConfig::time_step() const {
  if (dt > 0.0) return dt;
  const auto p = pump_rates(std::sqrt(0.5 * units::rabi_sq_from_intensity(std::max(intensity, 0.0))),
                            -std::sqrt(0.5 * units::rabi_sq_from_intensity(std::max(intensity, 0.0))), delta);
  const auto g = decay_rates(p, delta, r_decay);
  return default_dt(omega_x(), g.gamma_c);
}

FourierFilter SimConfig::resolved_filter() const {
  FourierFilter f = filter;
  if (filter_auto_center && f.axis != FilterAxis::none) {
    const std::size_t n = f.axis == FilterAxis::x ? grid.nx : grid.ny;
    const double period = pattern_period();
    f.center_bin = period > 0.0 ? static_cast<int>(std::lround(static_cast<double>(n) * pixel() / period)) : 0;
  }
  return f;
}

std::size_t SimConfig::aperture_pixels() const {
  const double width = probes.detector_aperture > 0.0 ? probes.detector_aperture : 0.25 * pattern_period();
  const double px = pixel();
  const auto n = px > 0.0 ? static_cast<std::size_t>(std::lround(width / px)) : 1;
  return std::clamp<std::size_t>(n, 1, std::max<std::size_t>(grid.nx, 1));
}

std::vector<std::string> SimConfig::validation_errors() const {
  std::vector<std::string> errs;
  auto finite = [&](double x, const char* key) {
    if (!std::isfinite(x)) errs.push_back(std::string(key) + ": must be finite");
  };
  finite(od, "od");
  finite(delta, "delta");
  finite(bx, "bx");
  finite(bz, "bz");
  finite(mirror_distance, "mirror_distance");
  if (!(intensity >= 0.0)) errs.push_back("intensity: must be >= 0");
  if (!(od >= 0.0)) errs.push_back("od: must be >= 0");
  if (!(reflectivity >= 0.0 && reflectivity <= 1.0)) errs.push_back("reflectivity: must lie in [0, 1]");
  if (!(wavelength > 0.0)) errs.push_back("wavelength: must be > 0");
  if (!(r_decay >= 0.0)) errs.push_back("r_decay: must be >= 0");
  if (dt < 0.0) errs.push_back("dt: must be >= 0");
  if (!(duration >= 0.0)) errs.push_back("duration: must be >= 0");
  if (noise.amplitude < 0.0) errs.push_back("noise.amplitude: must be >= 0");
  if (grid.nx == 0 || grid.ny == 0) errs.push_back("grid: nx and ny must be positive");
  if (grid.pixel < 0.0) errs.push_back("grid.pixel: must be >= 0");
  if (grid.pixel == 0.0 && grid.pixels_per_period <= 0) errs.push_back("grid.pixels_per_period: must be positive");
  if (probes.every <= 0) errs.push_back("probes.every: must be positive");
  if (probes.snapshot_every < 0) errs.push_back("probes.snapshot_every: must be >= 0");
  if (probes.cut_row >= grid.ny && grid.ny > 0) errs.push_back("probes.cut_row: outside grid");
  if (probes.detector_aperture < 0.0) errs.push_back("probes.detector_aperture: must be >= 0");
  if (filter.half_width < 0) errs.push_back("filter.half_width: must be >= 0");
  if (pump_profile == PumpProfile::super_gaussian && !(pump_waist > 0.0)) {
    errs.push_back("pump.waist: must be > 0 for a super-Gaussian pump");
  }
  if (mirror_distance != 0.0 && std::isfinite(mirror_distance) && wavelength > 0.0 && grid.nx > 0) {
    const double q_c = phasor_wavenumber(mirror_distance, wavelength);
    const double px = pixel();
    if (lambda_c > 0.0) {
      const double q = 2.0 * std::numbers::pi / lambda_c;
      if (!(q < std::numbers::pi / px)) errs.push_back("grid.pixel: critical wavenumber above Nyquist");
    }
    if (!(q_c < std::numbers::pi / px)) {
      errs.push_back("grid.pixel: critical wavenumber of mirror_distance above Nyquist");
    }
  }
  return errs;
}

std::vector<std::string> SimConfig::warnings() const {
  std::vector<std::string> w;
  if (delta == 0.0) w.push_back("delta = 0 lies outside the validity of adiabatic elimination");
  const double wx = omega_x();
  if (wx != 0.0 && duration > 0.0 && duration < 20.0 * 2.0 * std::numbers::pi / std::abs(wx)) {
    w.push_back("duration shorter than 20 Larmor periods; spectral diagnostics will be coarse");
  }
  return w;
}

void SimConfig::validate() const {
  const auto errs = validation_errors();
  if (errs.empty()) return;
  std::ostringstream os;
  os << "invalid configuration:";
  for (const auto& e : errs) os << "\n  " << e;
  throw ConfigError(os.str());
}

namespace {

OpticalField make_pump(const SimConfig& c) {
  OpticalField f = x_polarized_pump(c.grid.nx, c.grid.ny, c.intensity);
  if (c.pump_profile == PumpProfile::super_gaussian) {
    const double px = c.pixel();
    const double cx = 0.5 * static_cast<double>(c.grid.nx) * px;
    const double cy = 0.5 * static_cast<double>(c.grid.ny) * px;
    for (std::size_t iy = 0; iy < c.grid.ny; ++iy) {
      for (std::size_t ix = 0; ix < c.grid.nx; ++ix) {
        const double x = (static_cast<double>(ix) + 0.5) * px - cx;
        const double y = (static_cast<double>(iy) + 0.5) * px - cy;
        const double r2 = (x * x + y * y) / (c.pump_waist * c.pump_waist);
        const double env = std::exp(-r2 * r2);
        f.plus[iy * c.grid.nx + ix] *= env;
        f.minus[iy * c.grid.nx + ix] *= env;
      }
    }
  }
  return f;
}

}  // namespace

AtomState homogeneous_state(const SimConfig& config, double settle_time) {
  const double amp = std::sqrt(0.5 * units::rabi_sq_from_intensity(config.intensity));
  const cplx fp = amp, fm = -amp;
  const Susceptibility chi = config.susceptibility();
  const BlochParams params = config.bloch_params();
  const double dt = config.time_step();
  const double mirror = std::sqrt(config.reflectivity);
  AtomState s{};
  const auto base = pump_rates(fp, fm, config.delta);
  const double gmin = std::max(decay_rates(base, config.delta, config.r_decay).gamma_w, 1e-6);
  const double t_end = settle_time > 0.0 ? settle_time : 60.0 / gmin;
  for (double t = 0.0; t < t_end; t += dt) {
    const auto m = slab_matrix(s, chi);
    const cplx bp = mirror * (m[0] * fp + m[1] * fm);
    const cplx bm = mirror * (m[2] * fp + m[3] * fm);
    const PumpRates p = pump_rates(fp, fm, config.delta) + pump_rates(bp, bm, config.delta);
    const DecayRates g = decay_rates(p, config.delta, config.r_decay);
    s = rk4_step(s, p, g, params, dt);
  }
  return s;
}

RunState initial_state(const SimConfig& config) {
  RunState st;
  st.atoms = AtomicField(config.grid.nx, config.grid.ny);
  st.forward_entrance = make_pump(config);
  st.bx = config.bx;
  st.seed = config.noise.seed;
  seed_noise(st.atoms, config.noise.amplitude, config.noise.seed);
  return st;
}

FeedbackLoop::FeedbackLoop(const SimConfig& config)
    : config_(config),
      chi_(config.susceptibility()),
      round_trip_(config.grid.nx, config.grid.ny, config.pixel(), 2.0 * config.mirror_distance, config.wavelength,
                  config.resolved_filter(), config.reflectivity),
      to_mirror_(config.grid.nx, config.grid.ny, config.pixel(), config.mirror_distance, config.wavelength,
                 config.resolved_filter(), 1.0),
      pump_amplitude_(std::sqrt(0.5 * units::rabi_sq_from_intensity(config.intensity))) {}

LoopFields FeedbackLoop::solve_optics(const RunState& state) const {
  LoopFields f;
  f.exit = medium_transmit(state.forward_entrance, state.atoms, chi_);
  f.reentrant = round_trip_.apply(f.exit, Plane::reentrant);
  const double limit = 1e3 * std::max(pump_amplitude_, 1e-300);
  for (std::size_t i = 0; i < f.reentrant.size(); ++i) {
    if (!(std::abs(f.reentrant.plus[i]) <= limit && std::abs(f.reentrant.minus[i]) <= limit)) {
      throw DivergenceError("runaway field at pixel " + std::to_string(i) + " in step " +
                            std::to_string(state.step_index));
    }
  }
  return f;
}

OpticalField FeedbackLoop::detection_field(const OpticalField& exit) const {
  return to_mirror_.apply(exit, Plane::exit);
}

RateField FeedbackLoop::rates(const OpticalField& forward, const OpticalField& reentrant) const {
  RateField r;
  r.pump.resize(forward.size());
  r.decay.resize(forward.size());
  for (std::size_t i = 0; i < forward.size(); ++i) {
    r.pump[i] = pump_rates(forward.plus[i], forward.minus[i], config_.delta) +
                pump_rates(reentrant.plus[i], reentrant.minus[i], config_.delta);
    r.decay[i] = decay_rates(r.pump[i], config_.delta, config_.r_decay);
  }
  return r;
}

LoopFields FeedbackLoop::step(RunState& state) const {
  LoopFields f = solve_optics(state);
  const RateField r = rates(state.forward_entrance, f.reentrant);
  BlochParams params = config_.bloch_params();
  params.omega_x = units::larmor_freq(state.bx);
  step_atoms(state.atoms, r, params, config_.time_step(), state.step_index);
  state.time += config_.time_step();
  ++state.step_index;
  return f;
}

RunState loop_step(const RunState& state, const SimConfig& config) {
  RunState next = state;
  FeedbackLoop(config).step(next);
  return next;
}

RunState flip_field(const RunState& state, double new_bx) {
  RunState next = state;
  next.bx = new_bx;
  return next;
}

const std::vector<std::string>& cut_names() {
  static const std::vector<std::string> names = {"u",  "v",  "w",  "X",      "y1",     "z1",
                                                 "y2", "z2", "i_perp", "i_plus", "i_minus"};
  return names;
}

namespace {

void record_probe(RunRecord& rec, const RunState& st, const OpticalField& det, const SimConfig& c) {
  rec.times.push_back(st.time);
  rec.bx.push_back(st.bx);
  const auto iperp = perp_intensity(det);
  const std::size_t nx = st.atoms.nx;
  // A drifting wave summed over the whole periodic grid has no AC part, so
  // the photodiode only sees a strip of the beam starting at x = 0.
  const std::size_t aperture = c.aperture_pixels();
  double sum = 0.0;
  for (std::size_t iy = 0; iy < st.atoms.ny; ++iy) {
    for (std::size_t ix = 0; ix < aperture; ++ix) sum += iperp[iy * nx + ix];
  }
  rec.detector.push_back(sum);

  const std::size_t row = c.probes.cut_row * nx;
  static constexpr Var vars[] = {kU, kV, kW, kX, kY1, kZ1, kY2, kZ2};
  for (std::size_t v = 0; v < 8; ++v) {
    std::vector<double> cut(nx);
    for (std::size_t ix = 0; ix < nx; ++ix) cut[ix] = st.atoms.data[row + ix][vars[v]];
    rec.cuts[cut_names()[v]].push_back(std::move(cut));
  }
  std::vector<double> cp(nx), cplus(nx), cminus(nx);
  for (std::size_t ix = 0; ix < nx; ++ix) {
    cp[ix] = iperp[row + ix];
    cplus[ix] = std::norm(det.plus[row + ix]);
    cminus[ix] = std::norm(det.minus[row + ix]);
  }
  rec.cuts["i_perp"].push_back(std::move(cp));
  rec.cuts["i_plus"].push_back(std::move(cplus));
  rec.cuts["i_minus"].push_back(std::move(cminus));
}

}  // namespace

RunRecord run_from(RunState& state, const SimConfig& config, double duration,
                   const std::function<void(const RunRecord&)>& on_abort) {
  config.validate();
  FeedbackLoop loop(config);
  RunRecord rec;
  rec.config = config;
  const double dt = config.time_step();
  const auto steps = static_cast<std::int64_t>(std::llround(duration / dt));
  const std::int64_t first = state.step_index;

  try {
    for (std::int64_t n = 0; n <= steps; ++n) {
      if (config.flip && state.time >= config.flip->time - 0.5 * dt && state.bx != config.flip->bx) {
        state = flip_field(state, config.flip->bx);
      }
      LoopFields f = loop.solve_optics(state);
      const std::int64_t local = state.step_index - first;
      const bool last = n == steps;
      if (local % config.probes.every == 0) record_probe(rec, state, loop.detection_field(f.exit), config);
      const bool snap = n == 0 || last ||
                        (config.probes.snapshot_every > 0 && local % config.probes.snapshot_every == 0);
      if (snap) rec.snapshots.push_back({state.time, state.atoms, f.reentrant});
      if (last) break;

      const RateField r = loop.rates(state.forward_entrance, f.reentrant);
      BlochParams params = config.bloch_params();
      params.omega_x = units::larmor_freq(state.bx);
      step_atoms(state.atoms, r, params, dt, state.step_index);
      state.time += dt;
      ++state.step_index;
    }
  } catch (const DivergenceError& e) {
    rec.abort_message = e.what();
    if (on_abort) on_abort(rec);
    throw;
  }
  return rec;
}

RunRecord run(const SimConfig& config, const std::function<void(const RunRecord&)>& on_abort) {
  config.validate();
  RunState state = initial_state(config);
  return run_from(state, config, config.duration, on_abort);
}

ScanResult critical_wavenumber_scan(const SimConfig& config, const std::vector<double>& q_values,
                                    double integration_time) {
  config.validate();
  const AtomState base = homogeneous_state(config);
  const double dt = config.time_step();
  const double t_int = integration_time > 0.0 ? integration_time : 4000.0;
  const auto steps = static_cast<std::int64_t>(std::llround(t_int / dt));
  constexpr std::size_t n = 16;
  constexpr double eps = 1e-7;

  ScanResult result;
  for (double q : q_values) {
    SimConfig c = config;
    c.grid.nx = n;
    c.grid.ny = 1;
    c.grid.pixel = 2.0 * std::numbers::pi / q / static_cast<double>(n);
    c.lambda_c = 2.0 * std::numbers::pi / q;
    c.filter = FourierFilter{FilterAxis::x, 0, 1};
    c.filter_auto_center = false;
    c.pump_profile = PumpProfile::plane;
    c.probes.cut_row = 0;

    FeedbackLoop loop(c);
    RunState st;
    st.atoms = AtomicField(n, 1);
    st.forward_entrance = x_polarized_pump(n, 1, c.intensity);
    st.bx = c.bx;
    for (std::size_t ix = 0; ix < n; ++ix) {
      st.atoms.data[ix] = base;
      st.atoms.data[ix][kW] += eps * std::cos(2.0 * std::numbers::pi * static_cast<double>(ix) / n);
    }

    // Benettin renormalization: the deviation from the homogeneous state is
    // rescaled to eps after every step and the log stretch accumulated.
    auto mode_of = [&](std::size_t v) {
      cplx mode{};
      for (std::size_t ix = 0; ix < n; ++ix) {
        mode += (st.atoms.data[ix][v] - base[v]) *
                std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(ix) / static_cast<double>(n));
      }
      return mode;
    };
    auto deviation_norm = [&] {
      double sum = 0.0;
      for (const AtomState& s : st.atoms.data) {
        for (std::size_t v = 0; v < kNumVars; ++v) sum += (s[v] - base[v]) * (s[v] - base[v]);
      }
      return std::sqrt(sum);
    };
    auto rescale = [&](double factor) {
      for (AtomState& s : st.atoms.data) {
        for (std::size_t v = 0; v < kNumVars; ++v) s[v] = base[v] + factor * (s[v] - base[v]);
      }
    };

    double log_stretch = 0.0;
    double phase_turn = 0.0;
    double measured_time = 0.0;
    double prev_phase = std::arg(mode_of(kW));
    for (std::int64_t s = 0; s < steps; ++s) {
      const double before = deviation_norm();
      loop.step(st);
      const double after = deviation_norm();
      const double ph = std::arg(mode_of(kW));
      if (s >= steps / 2) {
        log_stretch += std::log(after / before);
        phase_turn += std::remainder(ph - prev_phase, 2.0 * std::numbers::pi);
        measured_time += dt;
      }
      prev_phase = ph;
      rescale(eps / after);
    }
    const double rate = measured_time > 0.0 ? log_stretch / measured_time : 0.0;
    const double omega = measured_time > 0.0 ? phase_turn / measured_time : 0.0;
    result.points.push_back({q, rate, omega});
  }

  auto best = std::max_element(result.points.begin(), result.points.end(),
                               [](const GrowthPoint& a, const GrowthPoint& b) { return a.rate < b.rate; });
  if (best != result.points.end()) {
    result.q_c = best->q;
    // Parabolic refinement through the maximum and its neighbours.
    const auto i = static_cast<std::size_t>(best - result.points.begin());
    if (i > 0 && i + 1 < result.points.size()) {
      const GrowthPoint& a = result.points[i - 1];
      const GrowthPoint& c = result.points[i + 1];
      const double d1 = (best->rate - a.rate) / (best->q - a.q);
      const double d2 = (c.rate - best->rate) / (c.q - best->q);
      const double curv = (d2 - d1) / (c.q - a.q);
      if (curv < 0.0) {
        const double vertex = 0.5 * (a.q + best->q) - d1 / (2.0 * curv);
        if (vertex > a.q && vertex < c.q) result.q_c = vertex;
      }
    }
    result.lambda_c = 2.0 * std::numbers::pi / result.q_c;
    result.perp_period = 0.5 * result.lambda_c;
    result.above_threshold = best->rate > 0.0;
  }
  return result;
}

}  // namespace smsdw

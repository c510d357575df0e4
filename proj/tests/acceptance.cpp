// Acceptance suite: one PASS/FAIL line per criterion.
//
//   smsdw_acceptance [--only name,...] [--known-failure name,...]
//
// Exit status is 0 when every criterion passes or fails only as listed in
// --known-failure, 1 otherwise.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <future>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "smsdw/bloch.hpp"
#include "smsdw/diagnostics.hpp"
#include "smsdw/error.hpp"
#include "smsdw/feedback.hpp"
#include "smsdw/optics.hpp"
#include "smsdw/units.hpp"
#include "support.hpp"

using namespace smsdw;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Amplitude of the oscillation at angular frequency omega by least squares
// on cos, sin and a constant.
double tone_amplitude(const std::vector<double>& t, const std::vector<double>& y, double omega) {
  double m[3][3] = {}, b[3] = {};
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double f[3] = {std::cos(omega * t[i]), std::sin(omega * t[i]), 1.0};
    for (int r = 0; r < 3; ++r) {
      b[r] += f[r] * y[i];
      for (int c = 0; c < 3; ++c) m[r][c] += f[r] * f[c];
    }
  }
  // Gaussian elimination on the 3x3 normal equations.
  for (int p = 0; p < 3; ++p) {
    for (int r = p + 1; r < 3; ++r) {
      const double k = m[r][p] / m[p][p];
      for (int c = p; c < 3; ++c) m[r][c] -= k * m[p][c];
      b[r] -= k * b[p];
    }
  }
  double x[3];
  for (int r = 2; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < 3; ++c) s -= m[r][c] * x[c];
    x[r] = s / m[r][r];
  }
  return std::hypot(x[0], x[1]);
}

// Quasi-1D drifting-wave configurations.
SimConfig od70(std::uint64_t seed = 1) {
  SimConfig c = testing::quasi_1d(70.0, 0.5, 6000.0);
  c.noise.seed = seed;
  return c;
}

SimConfig od130(double bx, double lambda_c) {
  SimConfig c = testing::quasi_1d(130.0, bx, 8000.0);
  c.lambda_c = lambda_c;
  return c;
}

const RunRecord& od70_record() {
  static const RunRecord r = run(od70());
  return r;
}

Outcome precession_oracle() {
  const double bx = 0.5, m0 = 0.5;
  const double omega = units::larmor_freq(bx);
  const double t_l = 2.0 * kPi / omega;
  const double dt = t_l / 200.0;
  AtomState s{};
  s[kW] = -m0;
  const auto traj = testing::free_precession(s, bx, 0.0, dt, 2000);
  double err = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double t = static_cast<double>(i) * dt;
    const Multipoles m = to_multipoles(traj[i]);
    err = std::max(err, std::abs(m.m[1] - m0 * std::cos(omega * t + 0.5 * kPi)));
    err = std::max(err, std::abs(m.m[2] - m0 * std::cos(omega * t)));
  }
  return {err <= 1e-6, fmt("max |error| of m_y, m_z over 10 T_L = %.3g (limit 1e-6)", err)};
}

Outcome quadrupole_doubling() {
  const double bx = 0.5, v0 = 0.2, q0 = 0.1;
  const double omega = units::larmor_freq(bx);
  const double t_l = 2.0 * kPi / omega;
  const double dt = t_l / 200.0;
  const std::size_t periods = 64;
  AtomState s{};
  s[kV] = v0;
  s[kY2] = q0 / std::sqrt(2.0);
  s[kZ2] = -q0 / std::sqrt(2.0);
  const auto traj = testing::free_precession(s, bx, 0.0, dt, periods * 200);

  struct Channel {
    const char* name;
    std::function<double(const AtomState&)> get;
    int harmonic;
  };
  const Channel channels[] = {
      {"v", [](const AtomState& a) { return a[kV]; }, 1},
      {"y1-z1", [](const AtomState& a) { return a[kY1] - a[kZ1]; }, 1},
      {"u", [](const AtomState& a) { return a[kU]; }, 2},
      {"y2-z2", [](const AtomState& a) { return a[kY2] - a[kZ2]; }, 2},
      {"X", [](const AtomState& a) { return a[kX]; }, 2},
  };
  bool pass = true;
  std::ostringstream os;
  std::vector<double> times(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) times[i] = static_cast<double>(i) * dt;
  SpectrumOptions so;
  so.skip_fraction = 0.0;
  for (const auto& ch : channels) {
    TimeSeries ts{times, {}, dt};
    for (const auto& a : traj) ts.values.push_back(ch.get(a));
    const SpectrumPeak p = spectrum_peak(ts, so);
    const double expected = ch.harmonic * omega / (2.0 * kPi);
    const double off = std::abs(p.frequency - expected) / p.bin_width;
    pass = pass && off <= 1.0;
    os << ch.name << " at " << fmt("%.3f", p.frequency / (omega / (2.0 * kPi))) << " f_L; ";
  }
  std::vector<double> uu, xx, qq;
  for (const auto& a : traj) {
    uu.push_back(a[kU]);
    xx.push_back(a[kX]);
    qq.push_back((a[kY2] - a[kZ2]) / std::sqrt(2.0));
  }
  const double qa = tone_amplitude(times, qq, 2.0 * omega);
  const double ru = tone_amplitude(times, uu, 2.0 * omega) / qa;
  const double rx = tone_amplitude(times, xx, 2.0 * omega) / qa;
  pass = pass && std::abs(ru - 0.5) <= 0.01 * 0.5 && std::abs(rx - 1.5) <= 0.01 * 1.5;
  os << fmt("amplitude ratios u/q0 = %.5f (0.5), X/q0 = %.5f (1.5)", ru, rx);
  return {pass, os.str()};
}

Outcome stationary_coherence() {
  const double delta = -20.0, r = 1.5e-4;
  const double a = std::sqrt(0.5 * units::rabi_sq_from_intensity(5.0));
  const PumpRates p = pump_rates(a, -a, delta);
  const DecayRates g = decay_rates(p, delta, r);
  const double u_expected = 5.0 / 18.0 * p.p_lam_plus / g.gamma_c;
  const double v_expected = -5.0 / 18.0 * p.p_lam_minus / g.gamma_c;

  auto converge = [&](auto rhs) {
    AtomState s{};
    const double dt = 0.1 / g.gamma_c;
    for (int i = 0; i < 4000; ++i) {
      AtomState k[4], t = s;
      k[0] = rhs(s);
      for (std::size_t v = 0; v < kNumVars; ++v) t[v] = s[v] + 0.5 * dt * k[0][v];
      k[1] = rhs(t);
      for (std::size_t v = 0; v < kNumVars; ++v) t[v] = s[v] + 0.5 * dt * k[1][v];
      k[2] = rhs(t);
      for (std::size_t v = 0; v < kNumVars; ++v) t[v] = s[v] + dt * k[2][v];
      k[3] = rhs(t);
      for (std::size_t v = 0; v < kNumVars; ++v) s[v] += dt / 6.0 * (k[0][v] + 2 * k[1][v] + 2 * k[2][v] + k[3][v]);
    }
    return s;
  };
  const AtomState reduced = converge([&](const AtomState& s) { return coherence_only_rhs(s, p, g); });
  const AtomState full = converge([&](const AtomState& s) { return bloch_rhs(s, p, g, delta, 0.0); });
  const double err_u = std::abs(reduced[kU] - u_expected) / std::abs(u_expected);
  const double err_v = std::abs(reduced[kV] - v_expected) / std::abs(u_expected);
  return {err_u <= 1e-4 && err_v <= 1e-4,
          fmt("coherence dynamics: u = %.6g vs %.6g (rel %.2g), v = %.3g; full model u = %.6g (%.3f x formula)",
              reduced[kU], u_expected, err_u, reduced[kV], full[kU], full[kU] / u_expected)};
}

ScanResult pattern_scan() {
  SimConfig c = od130(0.5, 0.0);
  c.grid.nx = 16;
  const double qn = phasor_wavenumber(c.mirror_distance, c.wavelength);
  std::vector<double> qs;
  for (int i = 0; i <= 32; ++i) qs.push_back(qn * (0.6 + 0.8 * i / 32.0));
  return critical_wavenumber_scan(c, qs, 4000.0);
}

Outcome pattern_scale(const ScanResult& s) {
  const double target = 77.6e-6;
  const double rel = (s.perp_period - target) / target;
  return {s.above_threshold && std::abs(rel) <= 0.15,
          fmt("perpendicular-channel period %.2f um vs 77.6 um (%+.1f%%, limit +-15%%), Lambda_c = %.2f um",
              s.perp_period * 1e6, rel * 100.0, s.lambda_c * 1e6)};
}

Outcome frequency_law(double lambda_c) {
  const double fields[] = {0.25, 0.5, 0.75, 1.0};
  std::vector<std::future<double>> jobs;
  for (double bx : fields) {
    jobs.push_back(std::async(std::launch::async, [=] {
      const RunRecord r = run(od130(bx, lambda_c));
      return spectrum_peak(detector_series(r)).frequency_hz;
    }));
  }
  std::vector<double> bx(std::begin(fields), std::end(fields)), freq;
  for (auto& j : jobs) freq.push_back(j.get());
  const LinearFit fit = fit_line(bx, freq);
  bool in_band = true;
  std::ostringstream os;
  os << "ratios to 2 f_L:";
  for (std::size_t i = 0; i < bx.size(); ++i) {
    const double two_fl = units::scaled_to_hz(2.0 * units::larmor_freq(bx[i]));
    const double ratio = freq[i] / two_fl;
    in_band = in_band && ratio >= 0.70 && ratio <= 1.00;
    os << fmt(" %.2f G %.3f;", bx[i], ratio);
  }
  os << fmt(" R^2 = %.4f (>= 0.99), band [0.70, 1.00]", fit.r2);
  return {fit.r2 >= 0.99 && in_band, os.str()};
}

Outcome channel_doubling() {
  const RunRecord& r = od70_record();
  const SpectrumPeak w = spectrum_peak(pixel_series(r, "w", 0));
  const SpectrumPeak i = spectrum_peak(pixel_series(r, "i_perp", 0));
  const double off = std::abs(i.frequency - 2.0 * w.frequency) / i.bin_width;
  return {off <= 1.0, fmt("I_perp peak %.1f kHz, w peak %.1f kHz, ratio %.4f, offset %.2f bins (limit 1)",
                          i.frequency_hz * 1e-3, w.frequency_hz * 1e-3, i.frequency / w.frequency, off)};
}

Outcome drift_identity() {
  const RunRecord& r = od70_record();
  const DriftReport d = drift_velocity(r);
  // Temporal frequency from the spectrum of w at a fixed pixel, independent
  // of the phase tracking that gives the velocity.
  const double f_w = spectrum_peak(pixel_series(r, "w", 0)).frequency_hz;
  const double implied = implied_velocity(f_w, d.stripe_period);
  const double rel = std::abs(std::abs(d.drift_velocity) - implied) / implied;
  // Analog of the 0.14 G camera measurement: the detected frequency scaled
  // by the linear law, with the 78 um perpendicular-channel period.
  const double f_014 = d.mod_freq * 0.14 / r.config.bx;
  const double v_014 = implied_velocity(f_014, 78e-6);
  const double rel_014 = std::abs(v_014 - 15.0) / 15.0;
  return {rel <= 0.02 && rel_014 <= 0.02,
          fmt("|v| = %.3f m/s, f_w x Lambda = %.3f m/s (%.2f%%); 0.14 G analog %.1f kHz x 78 um = %.2f m/s vs 15 "
              "(%.1f%%)",
              std::abs(d.drift_velocity), implied, rel * 100.0, f_014 * 1e-3, v_014, rel_014 * 100.0)};
}

Outcome symmetry_breaking() {
  std::vector<std::future<int>> jobs;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    jobs.push_back(std::async(std::launch::async, [=] {
      DriftOptions opt;
      opt.with_spectrum = false;
      return drift_velocity(run(od70(seed)), opt).direction;
    }));
  }
  int plus = 0, minus = 0;
  for (auto& j : jobs) {
    const int d = j.get();
    plus += d > 0;
    minus += d < 0;
  }
  const double frac = plus / 20.0;
  return {plus > 0 && minus > 0 && frac >= 0.2 && frac <= 0.8,
          fmt("20 seeds at Bx = 0.5 G: %d drift +x, %d drift -x, %d stationary; fraction +x = %.2f", plus, minus,
              20 - plus - minus, frac)};
}

Outcome flip_chirality() {
  SimConfig c = od70();
  const FlipReport f = flip_experiment(c);
  const double t_l = 2.0 * kPi / std::abs(units::larmor_freq(c.bx));
  const bool reversed = f.before.direction != 0 && f.after.direction == -f.before.direction;
  const bool in_time = f.reversal_time >= 0.0 && f.reversal_time <= 10.0 * t_l;
  const bool seq = f.relative_sequence_before != 0 && f.relative_sequence_after == -f.relative_sequence_before;
  const bool chir = f.before.chirality != 0 && f.after.chirality == f.before.chirality;
  return {reversed && in_time && seq && chir,
          fmt("direction %+d -> %+d, reversal after %.2f T_L (limit 10), relative sequence %+d -> %+d, "
              "chirality %+d -> %+d",
              f.before.direction, f.after.direction, f.reversal_time / t_l, f.relative_sequence_before,
              f.relative_sequence_after, f.before.chirality, f.after.chirality)};
}

Outcome anti_phase() {
  const RunRecord& r = od70_record();
  const double c = wv_correlation(r, r.times.size() / 2);
  return {c < 0.0, fmt("zero-lag w/v correlation %.3f (must be negative)", c)};
}

Outcome camera_emulation() {
  // Synthetic drifting sinusoid with a known temporal frequency.
  const std::size_t nx = 64;
  const double pixel = 4e-6, omega = 0.03;
  const double q = 2.0 * kPi * 4.0 / (nx * pixel);
  const RunRecord syn = testing::synthetic_record(nx, pixel, 1.0, 8000, [&](const std::string& n, double x, double t) {
    return n == "i_perp" ? 1.0 + std::cos(q * x - omega * t) : 0.0;
  });
  const double f_hz = units::scaled_to_hz(omega);
  std::vector<double> taus;
  for (int i = 0; i <= 160; ++i) taus.push_back(i * 4.0 / f_hz / 160.0);
  const ContrastCurve c = contrast_vs_integration(syn, taus);
  double env_err = 0.0;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    const double x = kPi * f_hz * taus[i];
    const double expected = x == 0.0 ? 1.0 : std::abs(std::sin(x) / x);
    env_err = std::max(env_err, std::abs(c.contrast[i] / c.contrast[0] - expected));
  }
  const auto mins = curve_minima(c.tau, c.contrast);
  double min_err = mins.empty() ? 1.0 : 0.0;
  for (std::size_t n = 0; n < mins.size(); ++n) {
    min_err = std::max(min_err, std::abs(mins[n] * f_hz / static_cast<double>(n + 1) - 1.0));
  }
  const bool syn_pass = env_err <= 0.02 && min_err <= 0.02 && mins.size() == 3;

  // Simulated run: minima spacing against the detected spectral peak.
  const RunRecord& r = od70_record();
  const double f_det = spectrum_peak(detector_series(r)).frequency_hz;
  std::vector<double> sim_taus;
  for (int i = 0; i <= 240; ++i) sim_taus.push_back(i * 4.2 / f_det / 240.0);
  const ContrastCurve sc = contrast_vs_integration(r, sim_taus);
  const auto sm = curve_minima(sc.tau, sc.contrast);
  std::vector<double> idx, pos;
  for (std::size_t n = 0; n < sm.size(); ++n) {
    idx.push_back(static_cast<double>(n + 1));
    pos.push_back(sm[n]);
  }
  double spacing_rel = 1.0;
  if (sm.size() >= 2) spacing_rel = std::abs(fit_line(idx, pos).slope * f_det - 1.0);
  const bool sim_pass = sm.size() >= 3 && spacing_rel <= 0.02;
  return {syn_pass && sim_pass,
          fmt("synthetic: envelope error %.4f, minima error %.2f%% (%zu minima); simulated: %zu minima, spacing "
              "%.3f us vs 1/f = %.3f us (%.2f%%)",
              env_err, min_err * 100.0, mins.size(), sm.size(),
              sm.size() >= 2 ? fit_line(idx, pos).slope * 1e6 : 0.0, 1e6 / f_det, spacing_rel * 100.0)};
}

Outcome conservation() {
  const SimConfig c = od70();
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d;
  OpticalField f(c.grid.nx, 8);
  for (std::size_t i = 0; i < f.size(); ++i) {
    f.plus[i] = {d(rng), d(rng)};
    f.minus[i] = {d(rng), d(rng)};
  }
  const auto g = propagate_free(f, c.pixel(), 2.0 * c.mirror_distance, c.wavelength);
  const double power_err = std::abs(g.total_power() - f.total_power()) / f.total_power();
  const PopulationCheck pc = check_populations(od70_record());
  return {power_err <= 1e-10 && pc.worst_range_violation == 0.0 && pc.worst_sum_error <= 1e-10,
          fmt("propagation power error %.2g (limit 1e-10); %zu probed pixels, range violation %.2g, sum error %.2g",
              power_err, pc.samples, pc.worst_range_violation, pc.worst_sum_error)};
}

std::set<std::string> split(const std::string& s) {
  std::set<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.insert(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string only, known;
  app.add_option("--only", only, "Comma-separated criteria to run");
  app.add_option("--known-failure", known, "Comma-separated criteria whose failure does not fail the suite");
  CLI11_PARSE(app, argc, argv);
  const auto selected = split(only);
  const auto expected_fail = split(known);

  ScanResult scan;
  bool have_scan = false;
  auto lambda_c = [&] {
    if (!have_scan) {
      scan = pattern_scan();
      have_scan = true;
    }
    return scan.lambda_c;
  };

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"precession_oracle", precession_oracle},
      {"quadrupole_doubling", quadrupole_doubling},
      {"stationary_coherence", stationary_coherence},
      {"pattern_scale", [&] { lambda_c(); return pattern_scale(scan); }},
      {"frequency_law", [&] { return frequency_law(lambda_c()); }},
      {"channel_doubling", channel_doubling},
      {"drift_identity", drift_identity},
      {"symmetry_breaking", symmetry_breaking},
      {"flip_chirality", flip_chirality},
      {"anti_phase", anti_phase},
      {"camera_emulation", camera_emulation},
      {"conservation", conservation},
  };

  int unexpected = 0, passed = 0, failed = 0;
  for (const auto& [name, check] : criteria) {
    if (!selected.empty() && !selected.contains(name)) continue;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const bool known_fail = expected_fail.contains(name);
    std::printf("%s %s: %s%s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(),
                !o.pass && known_fail ? " [known failure]" : "");
    std::fflush(stdout);
    (o.pass ? passed : failed)++;
    if (!o.pass && !known_fail) ++unexpected;
  }
  std::printf("acceptance: %d passed, %d failed, %d unexpected\n", passed, failed, unexpected);
  return unexpected == 0 ? 0 : 1;
}

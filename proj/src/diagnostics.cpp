#include "smsdw/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "smsdw/error.hpp"
#include "smsdw/optics.hpp"
#include "smsdw/units.hpp"

namespace smsdw {

namespace {

constexpr double kPi = std::numbers::pi;
const double kSqrt2 = std::numbers::sqrt2;

const std::vector<std::vector<double>>& cut(const RunRecord& r, const std::string& name) {
  const auto it = r.cuts.find(name);
  if (it == r.cuts.end() || it->second.empty()) throw AnalysisError("record has no '" + name + "' cut");
  return it->second;
}

int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

double wrap_unit(double x) { return x - std::floor(x + 0.5); }

double uniform_step(const std::vector<double>& t) {
  if (t.size() < 2) throw AnalysisError("fewer than two probes");
  const double dt = t[1] - t[0];
  for (std::size_t i = 2; i < t.size(); ++i) {
    if (std::abs((t[i] - t[i - 1]) - dt) > 1e-9 * std::max(1.0, std::abs(dt))) {
      throw AnalysisError("non-uniform probe cadence at sample " + std::to_string(i));
    }
  }
  return dt;
}

cplx row_mode(const std::vector<double>& row, int k) {
  cplx sum{};
  const double n = static_cast<double>(row.size());
  for (std::size_t ix = 0; ix < row.size(); ++ix) {
    sum += row[ix] * std::polar(1.0, -2.0 * kPi * k * static_cast<double>(ix) / n);
  }
  return sum;
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = n * sxx - sx * sx;
  return den != 0.0 ? (n * sxy - sx * sy) / den : 0.0;
}

// Unwrapped phase of a cut mode over probes [from, to).
std::vector<double> unwrapped_phase(const RunRecord& r, const std::string& name, int k, std::size_t from,
                                    std::size_t to) {
  std::vector<double> ph;
  ph.reserve(to - from);
  double prev = 0.0;
  for (std::size_t p = from; p < to; ++p) {
    const double a = std::arg(cut_mode(r, name, p, k));
    if (ph.empty()) {
      ph.push_back(a);
    } else {
      const double d = std::remainder(a - prev, 2.0 * kPi);
      if (std::abs(d) > 0.9 * kPi) {
        std::ostringstream os;
        os << "undersampled: phase of '" << name << "' moved " << d << " rad between probes " << p - 1 << " and "
           << p << "; record with a smaller probes.every";
        throw AnalysisError(os.str());
      }
      ph.push_back(ph.back() + d);
    }
    prev = a;
  }
  return ph;
}

RunRecord slice(const RunRecord& r, std::size_t from, std::size_t to) {
  RunRecord s;
  s.config = r.config;
  s.times.assign(r.times.begin() + from, r.times.begin() + to);
  s.bx.assign(r.bx.begin() + from, r.bx.begin() + to);
  s.detector.assign(r.detector.begin() + from, r.detector.begin() + to);
  for (const auto& [name, rows] : r.cuts) s.cuts[name].assign(rows.begin() + from, rows.begin() + to);
  return s;
}

}  // namespace

Multipoles to_multipoles(const AtomState& s) {
  Multipoles m;
  m.m = {-(s[kY1] + s[kZ1]) / kSqrt2, (s[kY2] + s[kZ2]) / kSqrt2, -s[kW]};
  m.q_xy = -s[kV];
  m.q_xz = -(s[kY1] - s[kZ1]) / kSqrt2;
  m.q_yz = (s[kY2] - s[kZ2]) / kSqrt2;
  m.q_u = s[kU];
  m.q_zz = s[kX];
  return m;
}

AtomState from_multipoles(const Multipoles& m) {
  AtomState s{};
  s[kU] = m.q_u;
  s[kV] = -m.q_xy;
  s[kW] = -m.m[2];
  s[kX] = m.q_zz;
  s[kY1] = -(m.m[0] + m.q_xz) / kSqrt2;
  s[kZ1] = (m.q_xz - m.m[0]) / kSqrt2;
  s[kY2] = (m.m[1] + m.q_yz) / kSqrt2;
  s[kZ2] = (m.m[1] - m.q_yz) / kSqrt2;
  return s;
}

MultipoleField to_multipoles(const AtomicField& atoms) {
  MultipoleField f{atoms.nx, atoms.ny, {}};
  f.data.reserve(atoms.data.size());
  for (const auto& s : atoms.data) f.data.push_back(to_multipoles(s));
  return f;
}

AtomicField from_multipoles(const MultipoleField& field) {
  AtomicField a(field.nx, field.ny);
  for (std::size_t i = 0; i < field.data.size(); ++i) a.data[i] = from_multipoles(field.data[i]);
  return a;
}

PopulationCheck check_populations(const RunRecord& record) {
  PopulationCheck c;
  const auto& w = cut(record, "w");
  const auto& x = cut(record, "X");
  for (std::size_t p = 0; p < w.size(); ++p) {
    for (std::size_t ix = 0; ix < w[p].size(); ++ix) {
      AtomState s{};
      s[kW] = w[p][ix];
      s[kX] = x[p][ix];
      const Populations pop = populations(s);
      for (double v : {pop.minus, pop.zero, pop.plus}) {
        c.worst_range_violation = std::max({c.worst_range_violation, -v, v - 1.0});
      }
      c.worst_sum_error = std::max(c.worst_sum_error, std::abs(pop.minus + pop.zero + pop.plus - 1.0));
      ++c.samples;
    }
  }
  return c;
}

TimeSeries detector_series(const RunRecord& record) {
  TimeSeries s;
  s.times = record.times;
  s.values = record.detector;
  s.dt = uniform_step(s.times);
  return s;
}

TimeSeries pixel_series(const RunRecord& record, const std::string& name, std::size_t ix) {
  const auto& rows = cut(record, name);
  if (ix >= rows.front().size()) throw AnalysisError("pixel outside cut");
  TimeSeries s;
  s.times = record.times;
  s.values.reserve(rows.size());
  for (const auto& row : rows) s.values.push_back(row[ix]);
  s.dt = uniform_step(s.times);
  return s;
}

std::vector<std::pair<double, double>> magnitude_spectrum(const TimeSeries& series, double skip_fraction) {
  const std::size_t skip = static_cast<std::size_t>(skip_fraction * static_cast<double>(series.values.size()));
  const std::size_t n = series.values.size() - std::min(skip, series.values.size());
  if (n < 8) throw AnalysisError("series too short for a spectrum");
  double mean = 0.0;
  for (std::size_t i = skip; i < series.values.size(); ++i) mean += series.values[i];
  mean /= static_cast<double>(n);
  std::vector<cplx> buf(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double hann = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n));
    buf[i] = hann * (series.values[skip + i] - mean);
  }
  const auto spec = fft2(buf, n, 1);
  const double df = 1.0 / (static_cast<double>(n) * series.dt);
  std::vector<std::pair<double, double>> out(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) out[k] = {static_cast<double>(k) * df, std::abs(spec[k])};
  return out;
}

SpectrumPeak spectrum_peak(const TimeSeries& series, const SpectrumOptions& opt) {
  const auto spec = magnitude_spectrum(series, opt.skip_fraction);
  const std::size_t n_used =
      series.values.size() - static_cast<std::size_t>(opt.skip_fraction * static_cast<double>(series.values.size()));
  std::size_t best = 1;
  for (std::size_t k = 1; k < spec.size(); ++k) {
    if (spec[k].second > spec[best].second) best = k;
  }
  std::vector<double> mags;
  for (std::size_t k = 1; k < spec.size(); ++k) mags.push_back(spec[k].second);
  std::nth_element(mags.begin(), mags.begin() + mags.size() / 2, mags.end());
  const double floor = mags[mags.size() / 2];

  double scale = 0.0;
  for (double v : series.values) scale = std::max(scale, std::abs(v));
  const double peak = spec[best].second;
  if (!(peak > opt.min_snr * floor) || peak <= 1e-12 * scale * static_cast<double>(n_used)) {
    throw AnalysisError("no AC signal: spectral peak does not clear the noise floor");
  }

  double offset = 0.0;
  if (best + 1 < spec.size()) {
    const double a = spec[best - 1].second, b = peak, c = spec[best + 1].second;
    const double den = a - 2.0 * b + c;
    if (den != 0.0) offset = 0.5 * (a - c) / den;
  }
  SpectrumPeak p;
  p.bin_width = spec[1].first;
  p.frequency = (static_cast<double>(best) + offset) * p.bin_width;
  p.frequency_hz = units::scaled_to_hz(2.0 * kPi * p.frequency);
  // Hann window has coherent gain 1/2.
  p.amplitude = 4.0 * peak / static_cast<double>(n_used);
  p.noise_floor = floor;
  const double window = static_cast<double>(n_used) * series.dt;
  if (p.frequency * window < opt.min_periods) {
    std::ostringstream os;
    os << "window holds only " << p.frequency * window << " periods of the peak (need " << opt.min_periods << ")";
    throw AnalysisError(os.str());
  }
  return p;
}

cplx cut_mode(const RunRecord& record, const std::string& name, std::size_t p, int k) {
  return row_mode(cut(record, name).at(p), k);
}

int dominant_bin(const RunRecord& record, const std::string& name, std::size_t from) {
  const auto& rows = cut(record, name);
  const std::size_t nx = rows.front().size();
  if (from >= rows.size()) from = rows.size() - 1;
  int best = 1;
  double best_mag = -1.0;
  for (int k = 1; k <= static_cast<int>(nx / 2); ++k) {
    double mag = 0.0;
    for (std::size_t p = from; p < rows.size(); ++p) mag += std::abs(row_mode(rows[p], k));
    if (mag > best_mag) {
      best_mag = mag;
      best = k;
    }
  }
  return best;
}

int chirality(const AtomicField& atoms, std::size_t row, int k) {
  std::vector<double> v(atoms.nx), y(atoms.nx);
  for (std::size_t ix = 0; ix < atoms.nx; ++ix) {
    const AtomState& s = atoms(ix, row);
    v[ix] = s[kV];
    y[ix] = s[kY2] + s[kZ2];
  }
  return sign_of((row_mode(y, k) * std::conj(row_mode(v, k))).imag());
}

int chirality(const RunRecord& record, std::size_t p, int k) {
  const cplx v = cut_mode(record, "v", p, k);
  const cplx y = cut_mode(record, "y2", p, k) + cut_mode(record, "z2", p, k);
  return sign_of((y * std::conj(v)).imag());
}

int sequence_order(const RunRecord& record, std::size_t p, int k) {
  const double tv = std::arg(cut_mode(record, "v", p, k));
  const double ty = std::arg(cut_mode(record, "y2", p, k) + cut_mode(record, "z2", p, k));
  const double tw = std::arg(cut_mode(record, "w", p, k));
  const double t1 = std::arg(cut_mode(record, "y1", p, k) - cut_mode(record, "z1", p, k));
  // Maximum of cos(q x + theta) sits at x = -theta / q; each step is the
  // shortest displacement between neighbouring maxima in units of the period.
  auto step = [](double from, double to) { return sign_of(wrap_unit((from - to) / (2.0 * kPi))); };
  return sign_of(step(tv, ty) + step(ty, tw) + step(tw, t1) + step(t1, tv));
}

DriftReport drift_velocity(const RunRecord& record, const DriftOptions& opt) {
  const auto& rows = cut(record, opt.channel);
  const std::size_t n = rows.size();
  const std::size_t from = std::min(static_cast<std::size_t>(opt.skip_fraction * static_cast<double>(n)), n - 1);
  if (n - from < 3) throw AnalysisError("too few probes for drift tracking");
  uniform_step(record.times);

  const int k = dominant_bin(record, opt.channel, from);
  const double pixel = record.config.pixel();
  const double length = static_cast<double>(rows.front().size()) * pixel;
  const double q = 2.0 * kPi * k / length;

  const auto ph = unwrapped_phase(record, opt.channel, k, from, n);
  const std::vector<double> t(record.times.begin() + from, record.times.end());
  const double rate = slope(t, ph);  // rad per scaled time

  DriftReport d;
  d.mode_bin = k;
  d.stripe_period = length / k;
  d.drift_velocity = -rate / q * units::kConstants.gamma2;
  // Phase motion below round-off over the whole window counts as stationary.
  const bool moving = std::abs(rate * (t.back() - t.front())) > 1e-9;
  d.direction = moving ? sign_of(d.drift_velocity) : 0;
  d.fundamental_freq = units::scaled_to_hz(std::abs(rate));

  const int kw = opt.channel == "w" ? k : dominant_bin(record, "w", from);
  double chir = 0.0;
  for (std::size_t p = from; p < n; ++p) {
    const cplx v = cut_mode(record, "v", p, kw);
    const cplx y = cut_mode(record, "y2", p, kw) + cut_mode(record, "z2", p, kw);
    chir += sign_of((y * std::conj(v)).imag());
  }
  d.chirality = sign_of(chir);
  d.sequence = sequence_order(record, n - 1, kw);

  if (opt.with_spectrum) {
    SpectrumOptions so;
    so.skip_fraction = opt.skip_fraction;
    const SpectrumPeak peak = spectrum_peak(detector_series(record), so);
    d.mod_freq = peak.frequency_hz;
    const double f_l = units::scaled_to_hz(std::abs(units::larmor_freq(record.bx.back())));
    d.larmor_ratio = f_l > 0.0 ? d.mod_freq / (2.0 * f_l) : 0.0;
  }
  return d;
}

double wv_correlation(const RunRecord& record, std::size_t from) {
  const auto& w = cut(record, "w");
  const auto& v = cut(record, "v");
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t p = std::min(from, w.size() - 1); p < w.size(); ++p) {
    const std::size_t nx = w[p].size();
    double mw = 0, mv = 0;
    for (std::size_t i = 0; i < nx; ++i) {
      mw += w[p][i];
      mv += v[p][i];
    }
    mw /= static_cast<double>(nx);
    mv /= static_cast<double>(nx);
    double cwv = 0, cww = 0, cvv = 0, sww = 0, svv = 0;
    for (std::size_t i = 0; i < nx; ++i) {
      sww += w[p][i] * w[p][i];
      svv += v[p][i] * v[p][i];
      cwv += (w[p][i] - mw) * (v[p][i] - mv);
      cww += (w[p][i] - mw) * (w[p][i] - mw);
      cvv += (v[p][i] - mv) * (v[p][i] - mv);
    }
    if (cww > 1e-20 * sww && cvv > 1e-20 * svv && cww > 0.0 && cvv > 0.0) {
      total += cwv / std::sqrt(cww * cvv);
      ++count;
    }
  }
  if (count == 0) throw AnalysisError("w and v are spatially uniform");
  return total / static_cast<double>(count);
}

ContrastCurve contrast_vs_integration(const RunRecord& record, const std::vector<double>& taus_s,
                                      const ContrastOptions& opt) {
  const auto& rows = cut(record, opt.channel);
  const double dt = uniform_step(record.times);
  const std::size_t n = rows.size();
  const std::size_t from = static_cast<std::size_t>(opt.skip_fraction * static_cast<double>(n));
  if (n - from < 2) throw AnalysisError("record too short for camera emulation");

  ContrastCurve curve;
  curve.stripe_bin = dominant_bin(record, opt.channel, from);
  const double nx = static_cast<double>(rows.front().size());

  // The spatial Fourier amplitude is linear in the image, so integrating the
  // mode over time equals the mode of the integrated image.
  std::vector<cplx> mode(n);
  for (std::size_t p = 0; p < n; ++p) mode[p] = row_mode(rows[p], curve.stripe_bin);
  const double t0 = record.times.front();
  auto at = [&](double t) {
    const double x = (t - t0) / dt;
    const auto i = std::min(static_cast<std::size_t>(std::max(x, 0.0)), n - 2);
    const double f = x - static_cast<double>(i);
    return (1.0 - f) * mode[i] + f * mode[i + 1];
  };
  auto integral = [&](double a, double b) {
    cplx sum{};
    double prev_t = a;
    cplx prev = at(a);
    auto i = static_cast<std::size_t>(std::floor((a - t0) / dt)) + 1;
    for (; i < n && record.times[i] < b; ++i) {
      sum += 0.5 * (prev + mode[i]) * (record.times[i] - prev_t);
      prev_t = record.times[i];
      prev = mode[i];
    }
    sum += 0.5 * (prev + at(b)) * (b - prev_t);
    return sum;
  };

  std::mt19937_64 rng(opt.seed);
  const double t_start = record.times[from];
  const double t_end = record.times.back();
  for (double tau_s : taus_s) {
    const double tau = units::seconds_to_scaled_time(tau_s);
    if (t_end - tau < t_start) {
      std::ostringstream os;
      os << "record too short for tau = " << tau_s << " s";
      throw AnalysisError(os.str());
    }
    std::uniform_real_distribution<double> start(t_start, t_end - tau);
    double acc = 0.0;
    for (int img = 0; img < opt.images; ++img) {
      const double s = start(rng);
      const cplx m = tau > 0.0 ? integral(s, s + tau) / tau : at(s);
      acc += 2.0 * std::abs(m) / nx;
    }
    curve.tau.push_back(tau_s);
    curve.contrast.push_back(acc / opt.images);
  }
  return curve;
}

FieldContrast contrast_vs_field(const std::vector<const RunRecord*>& records, double tau_s,
                                const ContrastOptions& opt) {
  FieldContrast out;
  for (const RunRecord* r : records) {
    out.bx.push_back(r->config.bx);
    out.contrast.push_back(contrast_vs_integration(*r, {tau_s}, opt).contrast.front());
  }
  return out;
}

std::vector<double> curve_minima(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> out;
  for (std::size_t i = 1; i + 1 < y.size(); ++i) {
    if (!(y[i] < y[i - 1] && y[i] <= y[i + 1])) continue;
    const double x0 = x[i - 1], x1 = x[i], x2 = x[i + 1];
    const double y0 = y[i - 1], y1 = y[i], y2 = y[i + 1];
    const double d01 = (y1 - y0) / (x1 - x0), d12 = (y2 - y1) / (x2 - x1);
    const double a = (d12 - d01) / (x2 - x0);
    out.push_back(a > 0.0 ? 0.5 * (x0 + x1) - d01 / (2.0 * a) : x1);
  }
  return out;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw AnalysisError("line fit needs at least two points");
  LinearFit f;
  f.slope = slope(x, y);
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  f.intercept = my - f.slope * mx;
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += r * r;
    ss_tot += (y[i] - my) * (y[i] - my);
  }
  f.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

FlipReport flip_experiment(const SimConfig& config, const FlipOptions& opt) {
  config.validate();
  if (config.bx == 0.0) throw ConfigError("bx: flip experiment needs a nonzero field");
  const double t_l = 2.0 * kPi / std::abs(config.omega_x());

  SimConfig settle = config;
  settle.flip.reset();
  settle.probes.every = std::numeric_limits<int>::max();
  RunState state = initial_state(config);
  run_from(state, settle, opt.settle);

  SimConfig rec_cfg = config;
  rec_cfg.flip = FieldFlip{state.time + opt.flip_after_periods * t_l, -config.bx};
  FlipReport rep;
  rep.flip_time = rec_cfg.flip->time;
  rep.record = run_from(state, rec_cfg, opt.record_periods * t_l);
  const RunRecord& r = rep.record;

  std::size_t flip_idx = 0;
  while (flip_idx < r.times.size() && r.times[flip_idx] < rep.flip_time - 1e-9) ++flip_idx;
  std::size_t settled_idx = flip_idx;
  while (settled_idx < r.times.size() && r.times[settled_idx] < rep.flip_time + opt.reversal_window * t_l) {
    ++settled_idx;
  }
  if (flip_idx < 3 || r.times.size() - settled_idx < 3) throw AnalysisError("flip record too short");

  DriftOptions d;
  d.skip_fraction = 0.0;
  d.with_spectrum = false;
  rep.before = drift_velocity(slice(r, 0, flip_idx), d);
  rep.after = drift_velocity(slice(r, settled_idx, r.times.size()), d);
  rep.relative_sequence_before = rep.before.sequence * rep.before.direction;
  rep.relative_sequence_after = rep.after.sequence * rep.after.direction;

  // Start of the earliest one-Larmor-period window after the flip from which
  // every later window drifts with the final sign.
  const int k = rep.after.mode_bin;
  const auto ph = unwrapped_phase(r, "w", k, 0, r.times.size());
  const auto window = static_cast<std::size_t>(std::max(2.0, t_l / (r.times[1] - r.times[0])));
  std::size_t first_good = r.times.size();
  for (std::size_t i = r.times.size(); i-- > flip_idx + window;) {
    // Phase decreasing in time means drift towards +x.
    const int dir = sign_of(-(ph[i] - ph[i - window]));
    if (dir != rep.after.direction) break;
    first_good = i;
  }
  if (first_good < r.times.size() && rep.after.direction == -rep.before.direction) {
    rep.reversal_time = r.times[first_good - window] - rep.flip_time;
  }
  return rep;
}

}  // namespace smsdw

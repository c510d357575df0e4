// Command-line front end: run, sweep, analyze, scan-q, flip-experiment.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "smsdw/diagnostics.hpp"
#include "smsdw/error.hpp"
#include "smsdw/io.hpp"
#include "smsdw/units.hpp"

namespace fs = std::filesystem;
using namespace smsdw;
using nlohmann::json;

namespace {

void print_warnings(const SimConfig& c) {
  for (const auto& w : c.warnings()) std::cerr << "warning: " << w << '\n';
}

json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

// "a,b,c" or "start..stop" or "start..stop:step" (default step 0.1).
std::vector<double> parse_values(const std::string& spec) {
  std::vector<double> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto dots = item.find("..");
    try {
      if (dots == std::string::npos) {
        out.push_back(std::stod(item));
        continue;
      }
      const double a = std::stod(item.substr(0, dots));
      std::string rest = item.substr(dots + 2);
      double step = 0.1;
      if (const auto colon = rest.find(':'); colon != std::string::npos) {
        step = std::stod(rest.substr(colon + 1));
        rest = rest.substr(0, colon);
      }
      const double b = std::stod(rest);
      if (!(step > 0.0)) throw ConfigError("--values: step must be positive in '" + item + "'");
      const auto n = static_cast<long>(std::floor((b - a) / step + 1e-9));
      for (long i = 0; i <= n; ++i) out.push_back(a + static_cast<double>(i) * step);
    } catch (const std::invalid_argument&) {
      throw ConfigError("--values: cannot parse '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("--values: no values given");
  return out;
}

void set_path(json& doc, const std::string& key_path, double value) {
  json* node = &doc;
  std::stringstream ss(key_path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) node = &(*node)[parts[i]];
  const bool integral = parts.back() == "seed" || parts.back() == "nx" || parts.back() == "ny";
  if (integral) {
    (*node)[parts.back()] = static_cast<std::int64_t>(std::llround(value));
  } else {
    (*node)[parts.back()] = value;
  }
}

std::string value_label(const std::string& param, double v) {
  std::ostringstream os;
  os << param << '_' << v;
  return os.str();
}

void write_spacetime(const fs::path& dir, const RunRecord& rec, const std::string& stem) {
  for (const char* name : {"w", "v", "i_perp"}) {
    const auto it = rec.cuts.find(name);
    if (it == rec.cuts.end() || it->second.empty()) continue;
    std::vector<double> img;
    for (const auto& row : it->second) img.insert(img.end(), row.begin(), row.end());
    io::write_pgm(dir / (stem + "_spacetime_" + name + ".pgm"), it->second.front().size(), it->second.size(), img);
  }
}

std::vector<double> drift_row(double value, const SimConfig& c, const DriftReport& d, int status) {
  return {value,
          c.bx,
          d.mod_freq,
          2.0 * units::scaled_to_hz(std::abs(c.omega_x())),
          d.larmor_ratio,
          d.fundamental_freq,
          d.drift_velocity,
          static_cast<double>(d.direction),
          static_cast<double>(d.chirality),
          static_cast<double>(d.sequence),
          d.stripe_period,
          static_cast<double>(status)};
}

const std::vector<std::string> kDriftHeader = {
    "value [param]",        "bx [G]",          "mod_freq [Hz]",       "two_f_larmor [Hz]",
    "larmor_ratio [1]",     "fundamental [Hz]", "drift_velocity [m/s]", "direction [1]",
    "chirality [1]",        "sequence [1]",    "stripe_period [m]",   "status [exit code]"};

int cmd_run(const fs::path& config_path, fs::path out, double duration, long long seed, const fs::path& resume,
            const fs::path& checkpoint) {
  SimConfig c = io::parse_config(config_path);
  if (duration >= 0.0) c.duration = duration;
  if (seed >= 0) c.noise.seed = static_cast<std::uint64_t>(seed);
  c.validate();
  print_warnings(c);
  out = io::output_path(out);
  RunState state = resume.empty() ? initial_state(c) : io::read_checkpoint(resume);
  auto flush = [&](const RunRecord& partial) {
    io::write_record(out, partial);
    std::cerr << "partial record written to " << out << '\n';
  };
  const RunRecord rec = run_from(state, c, c.duration, flush);
  io::write_record(out, rec);
  if (!checkpoint.empty()) io::write_checkpoint(io::output_path(checkpoint), state);
  std::cout << "record " << out << " (" << rec.times.size() << " probes, t = " << state.time << ")\n";
  return 0;
}

int cmd_sweep(const fs::path& config_path, const std::string& param, const std::string& values_spec, fs::path out,
              int jobs) {
  const json base = load_json(config_path);
  const auto values = parse_values(values_spec);
  out = io::output_path(out);

  // Validate every point before starting any run.
  std::vector<SimConfig> configs;
  std::vector<std::string> errors;
  for (double v : values) {
    json doc = base;
    set_path(doc, param, v);
    try {
      configs.push_back(io::config_from_json(doc));
    } catch (const ConfigError& e) {
      errors.push_back(value_label(param, v) + ": " + e.what());
    }
  }
  if (!errors.empty()) {
    std::ostringstream os;
    for (const auto& e : errors) os << e << '\n';
    throw ConfigError(os.str());
  }

  std::vector<std::vector<double>> rows(values.size());
  std::atomic<std::size_t> next{0};
  std::mutex log;
  auto worker = [&] {
    for (std::size_t i = next++; i < values.size(); i = next++) {
      const fs::path dir = out / value_label(param, values[i]);
      int status = 0;
      DriftReport d;
      try {
        const RunRecord rec = run(configs[i], [&](const RunRecord& partial) { io::write_record(dir, partial); });
        io::write_record(dir, rec);
        d = drift_velocity(rec);
      } catch (const Error& e) {
        status = static_cast<int>(e.code());
        std::lock_guard lock(log);
        std::cerr << value_label(param, values[i]) << ": " << e.what() << '\n';
      }
      rows[i] = drift_row(values[i], configs[i], d, status);
      std::lock_guard lock(log);
      std::cout << "done " << dir << '\n';
    }
  };
  std::vector<std::thread> pool;
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(values.size())));
  for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  auto header = kDriftHeader;
  header[0] = param + " [config units]";
  io::write_csv(out / "summary.csv", header, rows);
  std::cout << "summary " << out / "summary.csv" << '\n';
  for (const auto& r : rows) {
    if (r.back() == static_cast<double>(ExitCode::runtime_divergence)) return 2;
  }
  return 0;
}

int cmd_analyze(const std::vector<fs::path>& dirs, fs::path out, bool freq, bool contrast,
                const std::string& tau_spec, const std::string& channel) {
  out = io::output_path(out);
  fs::create_directories(out);
  std::vector<RunRecord> recs;
  for (const auto& d : dirs) recs.push_back(io::read_record(d));

  std::vector<std::vector<double>> drift_rows;
  std::vector<double> bx, mod;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const std::string stem = "record" + std::to_string(i);
    write_spacetime(out, recs[i], stem);
    DriftOptions opt;
    opt.channel = channel;
    const DriftReport d = drift_velocity(recs[i], opt);
    drift_rows.push_back(drift_row(static_cast<double>(i), recs[i].config, d, 0));
    bx.push_back(recs[i].config.bx);
    mod.push_back(d.mod_freq);
    std::vector<std::vector<double>> spec_rows;
    for (const auto& [f, m] : magnitude_spectrum(detector_series(recs[i]))) {
      spec_rows.push_back({f, units::scaled_to_hz(2.0 * std::numbers::pi * f), m});
    }
    io::write_csv(out / (stem + "_spectrum.csv"), {"frequency [1/Gamma2^-1]", "frequency [Hz]", "magnitude [arb]"},
                  spec_rows);
    std::cout << dirs[i].string() << ": mod_freq " << d.mod_freq << " Hz, ratio to 2f_L " << d.larmor_ratio
              << ", velocity " << d.drift_velocity << " m/s, chirality " << d.chirality << '\n';
  }
  auto header = kDriftHeader;
  header[0] = "record [index]";
  io::write_csv(out / "drift.csv", header, drift_rows);

  if (freq) {
    std::vector<std::size_t> order(recs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return bx[a] < bx[b]; });
    std::vector<std::vector<double>> rows;
    std::vector<double> xs, ys;
    for (auto i : order) {
      const double two_fl = 2.0 * units::scaled_to_hz(std::abs(units::larmor_freq(bx[i])));
      rows.push_back({bx[i], mod[i], two_fl, two_fl > 0.0 ? mod[i] / two_fl : 0.0});
      xs.push_back(bx[i]);
      ys.push_back(mod[i]);
    }
    io::write_csv(out / "freq_vs_bx.csv", {"bx [G]", "mod_freq [Hz]", "two_f_larmor [Hz]", "ratio [1]"}, rows);
    if (xs.size() >= 2) {
      const LinearFit fit = fit_line(xs, ys);
      std::cout << "frequency law: slope " << fit.slope << " Hz/G, intercept " << fit.intercept << " Hz, R^2 "
                << fit.r2 << '\n';
    }
  }

  if (contrast) {
    if (tau_spec.empty()) throw ConfigError("--contrast needs --tau");
    const auto taus = parse_values(tau_spec);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const ContrastCurve c = contrast_vs_integration(recs[i], taus);
      for (std::size_t t = 0; t < c.tau.size(); ++t) {
        rows.push_back({static_cast<double>(i), recs[i].config.bx, c.tau[t], c.contrast[t]});
      }
      if (taus.size() > 2) {
        for (double m : curve_minima(c.tau, c.contrast)) std::cout << "record " << i << ": contrast minimum at tau " << m << " s\n";
      }
    }
    io::write_csv(out / "contrast.csv", {"record [index]", "bx [G]", "tau [s]", "contrast [arb]"}, rows);
  }
  std::cout << "analysis written to " << out << '\n';
  return 0;
}

int cmd_scan(const fs::path& config_path, fs::path out, double qmin, double qmax, int points, double time) {
  const SimConfig c = io::parse_config(config_path);
  const double q0 = phasor_wavenumber(c.mirror_distance, c.wavelength);
  if (!(q0 > 0.0)) throw ConfigError("mirror_distance: scan needs a nonzero mirror distance");
  if (points < 2 || !(qmax > qmin) || !(qmin > 0.0)) throw ConfigError("scan range: need 0 < qmin < qmax and >= 2 points");
  std::vector<double> qs;
  for (int i = 0; i < points; ++i) qs.push_back(q0 * (qmin + (qmax - qmin) * i / (points - 1)));
  const ScanResult r = critical_wavenumber_scan(c, qs, time);
  std::vector<std::vector<double>> rows;
  for (const auto& p : r.points) {
    rows.push_back({p.q, 2.0 * std::numbers::pi / p.q, std::numbers::pi / p.q, p.rate, p.omega});
  }
  out = io::output_path(out);
  io::write_csv(out / "scan.csv",
                {"q [1/m]", "lambda [m]", "perp_period [m]", "growth_rate [Gamma2]", "omega [Gamma2]"}, rows);
  if (r.above_threshold) {
    std::cout << "q_c " << r.q_c << " 1/m, lambda_c " << r.lambda_c << " m, perpendicular period "
              << r.perp_period << " m\n";
  } else {
    std::cout << "below threshold: no positive growth rate in the scanned range\n";
  }
  return 0;
}

int cmd_flip(const fs::path& config_path, fs::path out, double settle, double flip_after, double periods) {
  const SimConfig c = io::parse_config(config_path);
  print_warnings(c);
  FlipOptions opt;
  opt.settle = settle;
  opt.flip_after_periods = flip_after;
  opt.record_periods = periods;
  const FlipReport r = flip_experiment(c, opt);
  out = io::output_path(out);
  io::write_record(out / "record", r.record);
  auto row = [](double phase, const DriftReport& d, int rel) {
    return std::vector<double>{phase, d.drift_velocity, static_cast<double>(d.direction),
                               static_cast<double>(d.chirality), static_cast<double>(d.sequence),
                               static_cast<double>(rel)};
  };
  io::write_csv(out / "flip.csv",
                {"phase [0=before 1=after]", "drift_velocity [m/s]", "direction [1]", "chirality [1]",
                 "sequence [1]", "relative_sequence [1]"},
                {row(0, r.before, r.relative_sequence_before), row(1, r.after, r.relative_sequence_after)});
  const double t_l = 2.0 * std::numbers::pi / std::abs(c.omega_x());
  std::cout << "before: direction " << r.before.direction << ", chirality " << r.before.chirality << '\n'
            << "after:  direction " << r.after.direction << ", chirality " << r.after.chirality << '\n';
  if (r.reversal_time >= 0.0) {
    std::cout << "drift reversed " << r.reversal_time / t_l << " Larmor periods after the flip\n";
  } else {
    std::cout << "drift did not reverse\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sliding multipole spin-density-wave simulator"};
  app.require_subcommand(1);

  fs::path config, out, resume, checkpoint;
  double duration = -1.0;
  long long seed = -1;
  auto* run_cmd = app.add_subcommand("run", "Run one configuration and write a record");
  run_cmd->add_option("config", config, "Configuration file (JSON)")->required();
  run_cmd->add_option("-o,--out", out, "Record directory")->default_val("record");
  run_cmd->add_option("--duration", duration, "Override duration (scaled time)");
  run_cmd->add_option("--seed", seed, "Override noise seed");
  run_cmd->add_option("--resume", resume, "Continue from a checkpoint directory");
  run_cmd->add_option("--checkpoint", checkpoint, "Write the final state to this directory");

  std::string param = "bx", values;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  auto* sweep_cmd = app.add_subcommand("sweep", "Vary one parameter over a list of values");
  sweep_cmd->add_option("config", config, "Base configuration file")->required();
  sweep_cmd->add_option("--param", param, "Key path to vary, e.g. bx or noise.seed")->default_val("bx");
  sweep_cmd->add_option("--values", values, "a,b,c or start..stop[:step]")->required();
  sweep_cmd->add_option("-o,--out", out, "Output directory")->default_val("sweep");
  sweep_cmd->add_option("-j,--jobs", jobs, "Parallel runs");

  std::vector<fs::path> records;
  bool freq = false, contrast = false;
  std::string taus, channel = "w";
  auto* analyze_cmd = app.add_subcommand("analyze", "Extract frequencies, drift and contrast from records");
  analyze_cmd->add_option("records", records, "Record directories")->required();
  analyze_cmd->add_flag("--freq", freq, "Frequency-versus-field table");
  analyze_cmd->add_flag("--contrast", contrast, "Camera contrast versus integration time");
  analyze_cmd->add_option("--tau", taus, "Integration times in s: a,b or start..stop:step");
  analyze_cmd->add_option("--channel", channel, "Cut tracked for the drift (w or i_perp)");
  analyze_cmd->add_option("-o,--out", out, "Output directory")->default_val("analysis");

  double qmin = 0.5, qmax = 1.5, scan_time = 0.0;
  int points = 41;
  auto* scan_cmd = app.add_subcommand("scan-q", "Linear growth rate versus transverse wavenumber");
  scan_cmd->add_option("config", config, "Configuration file")->required();
  scan_cmd->add_option("--qmin", qmin, "Lower end in units of the phasor wavenumber");
  scan_cmd->add_option("--qmax", qmax, "Upper end in units of the phasor wavenumber");
  scan_cmd->add_option("--points", points, "Number of wavenumbers");
  scan_cmd->add_option("--time", scan_time, "Integration time per wavenumber (scaled)");
  scan_cmd->add_option("-o,--out", out, "Output directory")->default_val("scan");

  double settle = 4000.0, flip_after = 5.0, periods = 40.0;
  auto* flip_cmd = app.add_subcommand("flip-experiment", "Flip Bx on an established drifting wave");
  flip_cmd->add_option("config", config, "Configuration file")->required();
  flip_cmd->add_option("--settle", settle, "Scaled time before recording");
  flip_cmd->add_option("--flip-after", flip_after, "Larmor periods into the record at which Bx flips");
  flip_cmd->add_option("--periods", periods, "Record length in Larmor periods");
  flip_cmd->add_option("-o,--out", out, "Output directory")->default_val("flip");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ExitCode::config_error);
  }

  try {
    if (*run_cmd) return cmd_run(config, out, duration, seed, resume, checkpoint);
    if (*sweep_cmd) return cmd_sweep(config, param, values, out, jobs);
    if (*analyze_cmd) return cmd_analyze(records, out, freq, contrast, taus, channel);
    if (*scan_cmd) return cmd_scan(config, out, qmin, qmax, points, scan_time);
    if (*flip_cmd) return cmd_flip(config, out, settle, flip_after, periods);
  } catch (const ConfigError& e) {
    std::cerr << "error[config]: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const DivergenceError& e) {
    std::cerr << "error[divergence]: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const AnalysisError& e) {
    std::cerr << "error[analysis]: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error[config]: " << e.what() << '\n';
    return static_cast<int>(ExitCode::config_error);
  }
  return 0;
}

#pragma once

// Single-feedback-mirror driver. Each step solves the optical loop once for
// the current atomic state (instantaneous feedback) and then advances the
// atoms by one RK4 step with that field frozen.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "smsdw/bloch.hpp"
#include "smsdw/optics.hpp"

namespace smsdw {

enum class PumpProfile { plane, super_gaussian };

struct GridConfig {
  std::size_t nx = 512;
  std::size_t ny = 8;
  double pixel = 0.0;  // m; 0 selects lambda_c / pixels_per_period
  int pixels_per_period = 16;
};

struct NoiseConfig {
  double amplitude = 1e-3;
  std::uint64_t seed = 1;
};

struct ProbeConfig {
  int every = 1;              // steps between probe samples
  int snapshot_every = 0;     // steps between full-field snapshots, 0 = initial and final only
  std::size_t cut_row = 0;    // y row of the 1D space-time cuts
  double detector_aperture = 0.0;  // m, width of the photodiode aperture along x; 0 = lambda_c / 4
};

struct FieldFlip {
  double time = 0.0;  // scaled
  double bx = 0.0;    // G
};

struct SimConfig {
  double od = 70.0;
  double delta = -20.0;
  double intensity = 5.0;       // mW/cm^2
  double bx = 0.5;              // G
  double bz = 0.0;              // G
  double mirror_distance = -0.015;  // m
  double reflectivity = 1.0;
  double wavelength = 780.241e-9;   // m
  double lambda_c = 0.0;        // m, pattern period used for grid/filter defaults; 0 = estimate
  GridConfig grid;
  FourierFilter filter{FilterAxis::x, 3, 0};
  bool filter_auto_center = true;
  double r_decay = 1.5e-4;
  double dt = 0.0;              // scaled; 0 = default_dt
  double duration = 0.0;        // scaled
  NoiseConfig noise;
  ProbeConfig probes;
  PumpProfile pump_profile = PumpProfile::plane;
  double pump_waist = 0.0;      // m, super-Gaussian only
  std::optional<FieldFlip> flip;

  double omega_x() const;
  double omega_z() const;
  double pixel() const;         // resolved pixel size
  double pattern_period() const;  // resolved lambda_c
  double time_step() const;     // resolved dt
  FourierFilter resolved_filter() const;
  std::size_t aperture_pixels() const;  // detector aperture width in pixels, >= 1
  BlochParams bloch_params() const;
  Susceptibility susceptibility() const;

  /// Collects every violated constraint; empty means valid.
  std::vector<std::string> validation_errors() const;
  std::vector<std::string> warnings() const;
  /// Throws ConfigError listing all validation errors.
  void validate() const;
};

/// Wavenumber where the round-trip diffractive phasor exp(i q^2 d / k)
/// equals i for the sign of d (q^2 |d| / k = pi/2 for d > 0, 3pi/2 for d < 0).
double phasor_wavenumber(double mirror_distance, double wavelength);

/// Homogeneous steady state reached by the pumped cloud with feedback.
AtomState homogeneous_state(const SimConfig& config, double settle_time = 0.0);

struct RunState {
  AtomicField atoms;
  OpticalField forward_entrance;
  double time = 0.0;
  std::int64_t step_index = 0;
  double bx = 0.0;
  std::uint64_t seed = 0;
};

RunState initial_state(const SimConfig& config);

/// Field quantities of one loop evaluation.
struct LoopFields {
  OpticalField exit;
  OpticalField reentrant;
};

class FeedbackLoop {
 public:
  explicit FeedbackLoop(const SimConfig& config);

  /// Solves the optical loop for the current atoms.
  LoopFields solve_optics(const RunState& state) const;
  /// Per-pixel pump and decay rates from the forward and reentrant fields.
  RateField rates(const OpticalField& forward, const OpticalField& reentrant) const;
  /// One cycle; returns the fields that drove it.
  LoopFields step(RunState& state) const;
  /// Field at the feedback mirror (exit field after the slit and one pass
  /// over the mirror distance): what a detector behind the mirror sees, up
  /// to the mirror transmission.
  OpticalField detection_field(const OpticalField& exit) const;

  const SimConfig& config() const { return config_; }

 private:
  SimConfig config_;
  Susceptibility chi_;
  SpectralPropagator round_trip_;
  SpectralPropagator to_mirror_;
  double pump_amplitude_;
};

RunState loop_step(const RunState& state, const SimConfig& config);

/// Replaces the magnetic field of a running state.
RunState flip_field(const RunState& state, double new_bx);

/// In-memory record of a run.
struct RunRecord {
  SimConfig config;
  std::vector<double> times;          // scaled
  std::vector<double> bx;             // G, at each probe time
  std::vector<double> detector;       // |e_perp|^2 at the mirror plane summed over the detector aperture
  std::map<std::string, std::vector<std::vector<double>>> cuts;  // name -> [probe][x]; intensities at the mirror plane
  struct Snapshot {
    double time;
    AtomicField atoms;
    OpticalField reentrant;
  };
  std::vector<Snapshot> snapshots;
  std::string abort_message;          // non-empty when the run stopped early
};

/// Names of the recorded space-time cuts.
const std::vector<std::string>& cut_names();

/// Seeds noise, iterates loop_step over the duration and records probes.
/// On divergence the partial record is handed to on_abort before rethrowing.
RunRecord run(const SimConfig& config, const std::function<void(const RunRecord&)>& on_abort = {});

/// Continues from an existing state (used for checkpoints and flips); the
/// state is advanced in place.
RunRecord run_from(RunState& state, const SimConfig& config, double duration,
                   const std::function<void(const RunRecord&)>& on_abort = {});

/// Linear growth rate of a spatial perturbation per wavenumber.
struct GrowthPoint {
  double q;       // rad/m
  double rate;    // scaled time^-1
  double omega;   // oscillation frequency of the perturbation, scaled
};

struct ScanResult {
  std::vector<GrowthPoint> points;
  bool above_threshold = false;
  double q_c = 0.0;
  double lambda_c = 0.0;
  double perp_period = 0.0;  // lambda_c / 2
};

/// Linearized growth-rate scan: for each q a small cos(qx) perturbation of w
/// on top of the homogeneous state is integrated with only DC and +-q fed
/// back; the rate is the slope of the log perturbation norm.
ScanResult critical_wavenumber_scan(const SimConfig& config, const std::vector<double>& q_values,
                                    double integration_time = 0.0);

}  // namespace smsdw

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "smsdw/bloch.hpp"
#include "smsdw/diagnostics.hpp"
#include "smsdw/error.hpp"
#include "smsdw/feedback.hpp"
#include "smsdw/io.hpp"
#include "smsdw/units.hpp"

namespace py = pybind11;
using namespace smsdw;

namespace {

py::array_t<double> array1(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

py::array_t<double> array2(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size(), m = rows.empty() ? 0 : rows.front().size();
  py::array_t<double> out({n, m});
  auto a = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) a(i, j) = rows[i][j];
  }
  return out;
}

py::dict drift_dict(const DriftReport& d) {
  py::dict o;
  o["mod_freq_hz"] = d.mod_freq;
  o["larmor_ratio"] = d.larmor_ratio;
  o["fundamental_freq_hz"] = d.fundamental_freq;
  o["drift_velocity_m_s"] = d.drift_velocity;
  o["direction"] = d.direction;
  o["chirality"] = d.chirality;
  o["sequence"] = d.sequence;
  o["stripe_period_m"] = d.stripe_period;
  o["mode_bin"] = d.mode_bin;
  return o;
}

SimConfig config_of(const std::string& text) { return io::parse_config_text(text); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sliding multipole spin-density-wave simulator";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);
  py::register_exception<AnalysisError>(m, "AnalysisError", PyExc_RuntimeError);

  m.def("larmor_freq", &units::larmor_freq, py::arg("bx_gauss"), "Scaled Larmor frequency for Bx in G.");
  m.def("rabi_sq_from_intensity", &units::rabi_sq_from_intensity, py::arg("intensity_mw_cm2"));
  m.def("scaled_to_hz", &units::scaled_to_hz, py::arg("omega_scaled"));
  m.def("phasor_wavenumber", &phasor_wavenumber, py::arg("mirror_distance"), py::arg("wavelength") = 780.241e-9);

  m.def(
      "pump_rates",
      [](std::complex<double> op, std::complex<double> om, double delta) {
        const PumpRates p = pump_rates(op, om, delta);
        py::dict o;
        o["p_plus"] = p.p_plus;
        o["p_minus"] = p.p_minus;
        o["p_lam_plus"] = p.p_lam_plus;
        o["p_lam_minus"] = p.p_lam_minus;
        o["s"] = p.s;
        o["d"] = p.d;
        return o;
      },
      py::arg("omega_plus"), py::arg("omega_minus"), py::arg("delta") = -20.0);

  m.def(
      "to_multipoles",
      [](const std::array<double, kNumVars>& s) {
        const Multipoles q = to_multipoles(s);
        py::dict o;
        o["m"] = q.m;
        o["q_xy"] = q.q_xy;
        o["q_xz"] = q.q_xz;
        o["q_yz"] = q.q_yz;
        o["q_u"] = q.q_u;
        o["q_zz"] = q.q_zz;
        return o;
      },
      py::arg("state"), "Multipoles of one pixel (u, v, w, X, y1, z1, y2, z2).");

  m.def(
      "normalize_config", [](const std::string& text) { return io::config_to_json(config_of(text)).dump(); },
      py::arg("config_json"), "Validated, fully resolved configuration as JSON text.");
  m.def(
      "derived_quantities", [](const std::string& text) { return io::derived_quantities(config_of(text)).dump(); },
      py::arg("config_json"));

  py::class_<RunRecord>(m, "Record")
      .def_property_readonly("times", [](const RunRecord& r) { return array1(r.times); })
      .def_property_readonly("bx", [](const RunRecord& r) { return array1(r.bx); })
      .def_property_readonly("detector", [](const RunRecord& r) { return array1(r.detector); })
      .def_property_readonly("config_json", [](const RunRecord& r) { return io::config_to_json(r.config).dump(); })
      .def_property_readonly("abort_message", [](const RunRecord& r) { return r.abort_message; })
      .def("cut", [](const RunRecord& r, const std::string& name) { return array2(r.cuts.at(name)); },
           py::arg("name"), "Space-time cut [probe, x] of one variable.")
      .def_property_readonly_static("cut_names", [](py::object) { return cut_names(); })
      .def("write", [](const RunRecord& r, const std::string& dir) { io::write_record(dir, r); }, py::arg("dir"));

  m.def(
      "run",
      [](const std::string& text) {
        const SimConfig c = config_of(text);
        py::gil_scoped_release release;
        return run(c);
      },
      py::arg("config_json"), "Runs a simulation and returns its record.");
  m.def("read_record", [](const std::string& dir) { return io::read_record(dir); }, py::arg("dir"));

  m.def(
      "drift",
      [](const RunRecord& r, const std::string& channel, bool with_spectrum) {
        DriftOptions o;
        o.channel = channel;
        o.with_spectrum = with_spectrum;
        return drift_dict(drift_velocity(r, o));
      },
      py::arg("record"), py::arg("channel") = "w", py::arg("with_spectrum") = true);

  m.def(
      "detector_peak",
      [](const RunRecord& r) {
        const SpectrumPeak p = spectrum_peak(detector_series(r));
        py::dict o;
        o["frequency_hz"] = p.frequency_hz;
        o["amplitude"] = p.amplitude;
        o["bin_width"] = p.bin_width;
        return o;
      },
      py::arg("record"));

  m.def(
      "contrast",
      [](const RunRecord& r, const std::vector<double>& taus_s, int images, std::uint64_t seed) {
        ContrastOptions o;
        o.images = images;
        o.seed = seed;
        const ContrastCurve c = contrast_vs_integration(r, taus_s, o);
        return py::make_tuple(array1(c.tau), array1(c.contrast));
      },
      py::arg("record"), py::arg("taus_s"), py::arg("images") = 40, py::arg("seed") = 7);

  m.def("wv_correlation", &wv_correlation, py::arg("record"), py::arg("from_probe") = 0);

  m.def(
      "scan",
      [](const std::string& text, const std::vector<double>& q_values, double time) {
        const SimConfig c = config_of(text);
        ScanResult s;
        {
          py::gil_scoped_release release;
          s = critical_wavenumber_scan(c, q_values, time);
        }
        std::vector<double> q, rate;
        for (const auto& p : s.points) {
          q.push_back(p.q);
          rate.push_back(p.rate);
        }
        py::dict o;
        o["q"] = array1(q);
        o["rate"] = array1(rate);
        o["q_c"] = s.q_c;
        o["lambda_c"] = s.lambda_c;
        o["perp_period"] = s.perp_period;
        o["above_threshold"] = s.above_threshold;
        return o;
      },
      py::arg("config_json"), py::arg("q_values"), py::arg("time") = 0.0);

  m.def(
      "flip_experiment",
      [](const std::string& text, double settle) {
        const SimConfig c = config_of(text);
        FlipOptions o;
        o.settle = settle;
        FlipReport f;
        {
          py::gil_scoped_release release;
          f = flip_experiment(c, o);
        }
        py::dict d;
        d["before"] = drift_dict(f.before);
        d["after"] = drift_dict(f.after);
        d["flip_time"] = f.flip_time;
        d["reversal_time"] = f.reversal_time;
        d["relative_sequence_before"] = f.relative_sequence_before;
        d["relative_sequence_after"] = f.relative_sequence_after;
        return d;
      },
      py::arg("config_json"), py::arg("settle") = 4000.0);
}

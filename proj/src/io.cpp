#include "smsdw/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>

#include "smsdw/error.hpp"
#include "smsdw/units.hpp"

namespace smsdw::io {

using nlohmann::json;

namespace {

constexpr const char* kRawMagic = "SMSDWRAW 1";
constexpr int kRecordVersion = 1;

std::uint64_t swap_bytes(std::uint64_t x) {
  std::uint64_t y = 0;
  for (int i = 0; i < 8; ++i) y = (y << 8) | ((x >> (8 * i)) & 0xff);
  return y;
}

using Setter = std::function<void(const json&, const std::string&)>;

class ConfigReader {
 public:
  std::vector<std::string> errors;

  void section(const json& node, const std::string& prefix, const std::map<std::string, Setter>& keys) {
    if (!node.is_object()) {
      errors.push_back(name(prefix, "") + ": expected an object");
      return;
    }
    for (const auto& [key, value] : node.items()) {
      const std::string path = name(prefix, key);
      const auto it = keys.find(key);
      if (it == keys.end()) {
        errors.push_back(path + ": unknown key");
        continue;
      }
      it->second(value, path);
    }
  }

  Setter number(double& out) {
    return [this, &out](const json& v, const std::string& path) {
      if (!v.is_number()) {
        errors.push_back(path + ": expected a number");
        return;
      }
      out = v.get<double>();
    };
  }

  template <class Int>
  Setter integer(Int& out) {
    return [this, &out](const json& v, const std::string& path) {
      if (!v.is_number_integer() && !v.is_number_unsigned()) {
        errors.push_back(path + ": expected an integer");
        return;
      }
      if constexpr (std::is_unsigned_v<Int>) {
        if (v.is_number_integer() && v.get<long long>() < 0) {
          errors.push_back(path + ": must be >= 0");
          return;
        }
      }
      out = v.get<Int>();
    };
  }

  template <class Enum>
  Setter choice(Enum& out, const std::map<std::string, Enum>& options) {
    return [this, &out, options](const json& v, const std::string& path) {
      if (!v.is_string() || !options.contains(v.get<std::string>())) {
        std::string allowed;
        for (const auto& [k, _] : options) allowed += (allowed.empty() ? "" : ", ") + k;
        errors.push_back(path + ": expected one of " + allowed);
        return;
      }
      out = options.at(v.get<std::string>());
    };
  }

 private:
  static std::string name(const std::string& prefix, const std::string& key) {
    if (prefix.empty()) return key.empty() ? "<root>" : key;
    return key.empty() ? prefix : prefix + "." + key;
  }
};

const std::map<std::string, FilterAxis> kAxes = {
    {"none", FilterAxis::none}, {"x", FilterAxis::x}, {"y", FilterAxis::y}};
const std::map<std::string, PumpProfile> kProfiles = {
    {"plane", PumpProfile::plane}, {"super_gaussian", PumpProfile::super_gaussian}};

template <class Enum>
std::string enum_name(Enum e, const std::map<std::string, Enum>& table) {
  for (const auto& [k, v] : table) {
    if (v == e) return k;
  }
  return "";
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  ensure_parent(path);
  std::ofstream out(path, mode);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

std::string format_double(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

RawArray atoms_raw(const AtomicField& a) {
  RawArray r;
  r.shape = {a.ny, a.nx, kNumVars};
  r.fields = {"u", "v", "w", "X", "y1", "z1", "y2", "z2"};
  r.data.reserve(a.data.size() * kNumVars);
  for (const auto& s : a.data) r.data.insert(r.data.end(), s.begin(), s.end());
  return r;
}

AtomicField atoms_from_raw(const RawArray& r) {
  if (r.shape.size() != 3 || r.shape[2] != kNumVars) throw ConfigError("atomic dump has wrong shape");
  AtomicField a(r.shape[1], r.shape[0]);
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    std::copy_n(r.data.begin() + static_cast<std::ptrdiff_t>(i * kNumVars), kNumVars, a.data[i].begin());
  }
  return a;
}

RawArray optical_raw(const OpticalField& f) {
  RawArray r;
  r.shape = {f.ny, f.nx, 4};
  r.fields = {"re_plus", "im_plus", "re_minus", "im_minus"};
  r.data.reserve(f.size() * 4);
  for (std::size_t i = 0; i < f.size(); ++i) {
    r.data.insert(r.data.end(), {f.plus[i].real(), f.plus[i].imag(), f.minus[i].real(), f.minus[i].imag()});
  }
  return r;
}

OpticalField optical_from_raw(const RawArray& r, Plane plane) {
  if (r.shape.size() != 3 || r.shape[2] != 4) throw ConfigError("optical dump has wrong shape");
  OpticalField f(r.shape[1], r.shape[0], plane);
  for (std::size_t i = 0; i < f.size(); ++i) {
    f.plus[i] = {r.data[4 * i], r.data[4 * i + 1]};
    f.minus[i] = {r.data[4 * i + 2], r.data[4 * i + 3]};
  }
  return f;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace

SimConfig config_from_json(const json& doc) {
  SimConfig c;
  ConfigReader r;
  bool center_given = false;
  bool flip_given = false;
  FieldFlip flip;
  int center_bin = 0;

  const std::map<std::string, Setter> grid = {
      {"nx", r.integer(c.grid.nx)},
      {"ny", r.integer(c.grid.ny)},
      {"pixel", r.number(c.grid.pixel)},
      {"pixels_per_period", r.integer(c.grid.pixels_per_period)},
  };
  const std::map<std::string, Setter> filter = {
      {"axis", r.choice(c.filter.axis, kAxes)},
      {"half_width", r.integer(c.filter.half_width)},
      {"center_bin",
       [&](const json& v, const std::string& path) {
         if (v.is_string() && v.get<std::string>() == "auto") return;
         center_given = true;
         r.integer(center_bin)(v, path);
       }},
  };
  const std::map<std::string, Setter> noise = {
      {"amplitude", r.number(c.noise.amplitude)},
      {"seed", r.integer(c.noise.seed)},
  };
  const std::map<std::string, Setter> probes = {
      {"every", r.integer(c.probes.every)},
      {"snapshot_every", r.integer(c.probes.snapshot_every)},
      {"cut_row", r.integer(c.probes.cut_row)},
      {"detector_aperture", r.number(c.probes.detector_aperture)},
  };
  const std::map<std::string, Setter> pump = {
      {"profile", r.choice(c.pump_profile, kProfiles)},
      {"waist", r.number(c.pump_waist)},
  };
  const std::map<std::string, Setter> flip_keys = {
      {"time", r.number(flip.time)},
      {"bx", r.number(flip.bx)},
  };
  auto nested = [&](const std::map<std::string, Setter>& keys) {
    return [&r, &keys](const json& v, const std::string& path) { r.section(v, path, keys); };
  };
  const std::map<std::string, Setter> root = {
      {"od", r.number(c.od)},
      {"delta", r.number(c.delta)},
      {"intensity", r.number(c.intensity)},
      {"bx", r.number(c.bx)},
      {"bz", r.number(c.bz)},
      {"mirror_distance", r.number(c.mirror_distance)},
      {"reflectivity", r.number(c.reflectivity)},
      {"wavelength", r.number(c.wavelength)},
      {"lambda_c", r.number(c.lambda_c)},
      {"r_decay", r.number(c.r_decay)},
      {"dt", r.number(c.dt)},
      {"duration", r.number(c.duration)},
      {"grid", nested(grid)},
      {"filter", nested(filter)},
      {"noise", nested(noise)},
      {"probes", nested(probes)},
      {"pump", nested(pump)},
      {"flip",
       [&](const json& v, const std::string& path) {
         if (v.is_null()) return;
         flip_given = true;
         r.section(v, path, flip_keys);
       }},
  };
  r.section(doc, "", root);

  if (center_given) {
    c.filter.center_bin = center_bin;
    c.filter_auto_center = false;
  }
  if (flip_given) c.flip = flip;
  for (auto& e : c.validation_errors()) r.errors.push_back(std::move(e));
  if (!r.errors.empty()) {
    std::ostringstream os;
    os << "invalid configuration:";
    for (const auto& e : r.errors) os << "\n  " << e;
    throw ConfigError(os.str());
  }
  return c;
}

SimConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(doc);
}

SimConfig parse_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config_text(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

json config_to_json(const SimConfig& c) {
  json j;
  j["od"] = c.od;
  j["delta"] = c.delta;
  j["intensity"] = c.intensity;
  j["bx"] = c.bx;
  j["bz"] = c.bz;
  j["mirror_distance"] = c.mirror_distance;
  j["reflectivity"] = c.reflectivity;
  j["wavelength"] = c.wavelength;
  j["lambda_c"] = c.lambda_c;
  j["r_decay"] = c.r_decay;
  j["dt"] = c.dt;
  j["duration"] = c.duration;
  j["grid"] = {{"nx", c.grid.nx}, {"ny", c.grid.ny}, {"pixel", c.grid.pixel},
               {"pixels_per_period", c.grid.pixels_per_period}};
  j["filter"] = {{"axis", enum_name(c.filter.axis, kAxes)}, {"half_width", c.filter.half_width}};
  if (c.filter_auto_center) {
    j["filter"]["center_bin"] = "auto";
  } else {
    j["filter"]["center_bin"] = c.filter.center_bin;
  }
  j["noise"] = {{"amplitude", c.noise.amplitude}, {"seed", c.noise.seed}};
  j["probes"] = {{"every", c.probes.every}, {"snapshot_every", c.probes.snapshot_every},
                 {"cut_row", c.probes.cut_row}, {"detector_aperture", c.probes.detector_aperture}};
  j["pump"] = {{"profile", enum_name(c.pump_profile, kProfiles)}, {"waist", c.pump_waist}};
  if (c.flip) {
    j["flip"] = {{"time", c.flip->time}, {"bx", c.flip->bx}};
  } else {
    j["flip"] = nullptr;
  }
  return j;
}

json derived_quantities(const SimConfig& c) {
  const double wx = c.omega_x();
  return {
      {"omega_x", wx},
      {"larmor_period", wx != 0.0 ? 2.0 * std::numbers::pi / std::abs(wx) : 0.0},
      {"two_f_larmor_hz", 2.0 * units::scaled_to_hz(std::abs(wx))},
      {"dt", c.time_step()},
      {"pixel_m", c.pixel()},
      {"pattern_period_m", c.pattern_period()},
      {"filter_center_bin", c.resolved_filter().center_bin},
      {"detector_aperture_pixels", c.aperture_pixels()},
      {"gamma2_per_s", units::kConstants.gamma2},
  };
}

void write_raw(const fs::path& path, const RawArray& a) {
  std::size_t n = 1;
  for (auto d : a.shape) n *= d;
  if (n != a.data.size()) throw ConfigError("raw dump shape does not match data for " + path.string());
  auto out = open_out(path, std::ios::binary);
  out << kRawMagic << "\ndtype float64le\nshape";
  for (auto d : a.shape) out << ' ' << d;
  out << "\nfields";
  for (const auto& f : a.fields) out << ' ' << f;
  out << "\nend\n";
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(a.data.data()), static_cast<std::streamsize>(n * sizeof(double)));
  } else {
    for (double x : a.data) {
      auto bits = swap_bytes(std::bit_cast<std::uint64_t>(x));
      out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
  }
  if (!out) throw ConfigError("failed writing " + path.string());
}

RawArray read_raw(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  RawArray a;
  std::string line;
  std::getline(in, line);
  if (line != kRawMagic) throw ConfigError(path.string() + ": not a raw dump");
  while (std::getline(in, line) && line != "end") {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "dtype") {
      std::string dtype;
      ls >> dtype;
      if (dtype != "float64le") throw ConfigError(path.string() + ": unsupported dtype " + dtype);
    } else if (key == "shape") {
      std::size_t d;
      while (ls >> d) a.shape.push_back(d);
    } else if (key == "fields") {
      std::string f;
      while (ls >> f) a.fields.push_back(f);
    } else {
      throw ConfigError(path.string() + ": unknown header line '" + line + "'");
    }
  }
  if (line != "end") throw ConfigError(path.string() + ": truncated header");
  std::size_t n = 1;
  for (auto d : a.shape) n *= d;
  a.data.resize(n);
  in.read(reinterpret_cast<char*>(a.data.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != n * sizeof(double)) {
    throw ConfigError(path.string() + ": truncated data");
  }
  if constexpr (std::endian::native != std::endian::little) {
    for (double& x : a.data) x = std::bit_cast<double>(swap_bytes(std::bit_cast<std::uint64_t>(x)));
  }
  return a;
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  auto out = open_out(path);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    out << '\n';
  }
}

void write_pgm(const fs::path& path, std::size_t width, std::size_t height, const std::vector<double>& values) {
  if (values.size() != width * height) throw ConfigError("image size mismatch for " + path.string());
  double lo = 0.0, hi = 0.0;
  if (!values.empty()) {
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    lo = *mn;
    hi = *mx;
  }
  const double span = hi > lo ? hi - lo : 1.0;
  auto out = open_out(path, std::ios::binary);
  out << "P5\n" << width << ' ' << height << "\n65535\n";
  for (double v : values) {
    const auto g = static_cast<std::uint16_t>(std::lround(65535.0 * (v - lo) / span));
    const unsigned char be[2] = {static_cast<unsigned char>(g >> 8), static_cast<unsigned char>(g & 0xff)};
    out.write(reinterpret_cast<const char*>(be), 2);
  }
}

void write_record(const fs::path& dir, const RunRecord& rec) {
  fs::create_directories(dir / "cuts");
  fs::create_directories(dir / "snapshots");

  RawArray probes;
  probes.shape = {rec.times.size(), 3};
  probes.fields = {"time", "bx", "detector"};
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < rec.times.size(); ++i) {
    probes.data.insert(probes.data.end(), {rec.times[i], rec.bx[i], rec.detector[i]});
    rows.push_back({rec.times[i], units::scaled_time_to_seconds(rec.times[i]), rec.bx[i], rec.detector[i]});
  }
  write_raw(dir / "probes.raw", probes);
  write_csv(dir / "probes.csv", {"time [1/Gamma2]", "time [s]", "bx [G]", "detector [Gamma2^2]"}, rows);

  json cut_list = json::array();
  for (const auto& [name, cut] : rec.cuts) {
    RawArray a;
    a.shape = {cut.size(), cut.empty() ? 0 : cut.front().size()};
    a.fields = {name};
    for (const auto& row : cut) a.data.insert(a.data.end(), row.begin(), row.end());
    write_raw(dir / "cuts" / (name + ".raw"), a);
    cut_list.push_back(name);
  }

  json snaps = json::array();
  for (std::size_t i = 0; i < rec.snapshots.size(); ++i) {
    std::ostringstream id;
    id << std::setw(4) << std::setfill('0') << i;
    const std::string atoms = "snapshots/atoms_" + id.str() + ".raw";
    const std::string field = "snapshots/reentrant_" + id.str() + ".raw";
    write_raw(dir / atoms, atoms_raw(rec.snapshots[i].atoms));
    write_raw(dir / field, optical_raw(rec.snapshots[i].reentrant));
    snaps.push_back({{"time", rec.snapshots[i].time}, {"atoms", atoms}, {"reentrant", field}});
  }

  json meta;
  meta["format"] = "smsdw-record";
  meta["version"] = kRecordVersion;
  meta["program_version"] = SMSDW_VERSION;
  meta["config"] = config_to_json(rec.config);
  meta["derived"] = derived_quantities(rec.config);
  meta["seed"] = rec.config.noise.seed;
  meta["probes"] = rec.times.size();
  meta["cuts"] = cut_list;
  meta["snapshots"] = snaps;
  meta["abort_message"] = rec.abort_message;
  auto out = open_out(dir / "meta.json");
  out << meta.dump(2) << '\n';
}

RunRecord read_record(const fs::path& dir) {
  const json meta = read_json(dir / "meta.json");
  if (meta.value("format", "") != "smsdw-record") throw ConfigError(dir.string() + ": not a run record");
  RunRecord rec;
  rec.config = config_from_json(meta.at("config"));
  rec.abort_message = meta.value("abort_message", "");

  const RawArray probes = read_raw(dir / "probes.raw");
  const std::size_t n = probes.shape.at(0);
  for (std::size_t i = 0; i < n; ++i) {
    rec.times.push_back(probes.data[3 * i]);
    rec.bx.push_back(probes.data[3 * i + 1]);
    rec.detector.push_back(probes.data[3 * i + 2]);
  }
  for (const auto& name : meta.at("cuts")) {
    const RawArray a = read_raw(dir / "cuts" / (name.get<std::string>() + ".raw"));
    auto& rows = rec.cuts[name.get<std::string>()];
    const std::size_t nx = a.shape.at(1);
    for (std::size_t p = 0; p < a.shape.at(0); ++p) {
      rows.emplace_back(a.data.begin() + static_cast<std::ptrdiff_t>(p * nx),
                        a.data.begin() + static_cast<std::ptrdiff_t>((p + 1) * nx));
    }
  }
  for (const auto& s : meta.at("snapshots")) {
    rec.snapshots.push_back({s.at("time").get<double>(),
                             atoms_from_raw(read_raw(dir / s.at("atoms").get<std::string>())),
                             optical_from_raw(read_raw(dir / s.at("reentrant").get<std::string>()), Plane::reentrant)});
  }
  return rec;
}

void write_checkpoint(const fs::path& dir, const RunState& state) {
  fs::create_directories(dir);
  write_raw(dir / "atoms.raw", atoms_raw(state.atoms));
  write_raw(dir / "forward.raw", optical_raw(state.forward_entrance));
  json j = {{"format", "smsdw-checkpoint"},
            {"time", state.time},
            {"step_index", state.step_index},
            {"bx", state.bx},
            {"seed", state.seed}};
  auto out = open_out(dir / "state.json");
  out << j.dump(2) << '\n';
}

RunState read_checkpoint(const fs::path& dir) {
  const json j = read_json(dir / "state.json");
  if (j.value("format", "") != "smsdw-checkpoint") throw ConfigError(dir.string() + ": not a checkpoint");
  RunState s;
  s.atoms = atoms_from_raw(read_raw(dir / "atoms.raw"));
  s.forward_entrance = optical_from_raw(read_raw(dir / "forward.raw"), Plane::entrance);
  s.time = j.at("time").get<double>();
  s.step_index = j.at("step_index").get<std::int64_t>();
  s.bx = j.at("bx").get<double>();
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

fs::path output_path(const fs::path& requested) {
  if (requested.is_absolute()) return requested;
  if (const char* root = std::getenv("SMSDW_OUTPUT_ROOT"); root != nullptr && *root != '\0') {
    return fs::path(root) / requested;
  }
  return requested;
}

}  // namespace smsdw::io

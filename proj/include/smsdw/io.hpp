#pragma once

// Configuration files, run records on disk, CSV / PGM / raw exports.
//
// Raw dumps are a text header followed by little-endian float64 data:
//
//   SMSDWRAW 1
//   dtype float64le
//   shape <d0> <d1> ...
//   fields <name> <name> ...
//   end
//
// The last dimension of `shape` runs over `fields` when more than one field
// is stored.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "smsdw/feedback.hpp"

namespace smsdw::io {

namespace fs = std::filesystem;

/// Parses a configuration document. Unknown keys, type errors and failed
/// validation are collected and thrown together as one ConfigError.
SimConfig config_from_json(const nlohmann::json& doc);
SimConfig parse_config_text(const std::string& text);
SimConfig parse_config(const fs::path& path);

/// Complete, resolved echo of a configuration; parses back to the same config.
nlohmann::json config_to_json(const SimConfig& config);

/// Derived quantities written next to the config echo.
nlohmann::json derived_quantities(const SimConfig& config);

struct RawArray {
  std::vector<std::size_t> shape;
  std::vector<std::string> fields;
  std::vector<double> data;
};

void write_raw(const fs::path& path, const RawArray& array);
RawArray read_raw(const fs::path& path);

/// CSV with a header row; column names carry their unit in brackets.
void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

/// 16-bit binary PGM, linearly scaled between the data minimum and maximum.
/// `values` is row-major with `width` columns.
void write_pgm(const fs::path& path, std::size_t width, std::size_t height, const std::vector<double>& values);

/// Writes meta.json, probes.raw/.csv, cuts/*.raw and snapshots/*.raw.
void write_record(const fs::path& dir, const RunRecord& record);
RunRecord read_record(const fs::path& dir);

/// Run state for exact continuation.
void write_checkpoint(const fs::path& dir, const RunState& state);
RunState read_checkpoint(const fs::path& dir);

/// Resolves relative output paths against $SMSDW_OUTPUT_ROOT when set.
fs::path output_path(const fs::path& requested);

}  // namespace smsdw::io

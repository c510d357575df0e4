#include "smsdw/units.hpp"

#include <cmath>
#include <string>

#include "smsdw/error.hpp"

namespace smsdw::units {

double rabi_sq_from_intensity(double i) {
  if (!(i >= 0.0) || !std::isfinite(i)) {
    throw ConfigError("intensity must be finite and >= 0, got " + std::to_string(i));
  }
  return kScaled.rabi_sq_per_intensity * i / kConstants.i_sat;
}

}  // namespace smsdw::units

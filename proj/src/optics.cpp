#include "smsdw/optics.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include "smsdw/error.hpp"
#include "smsdw/units.hpp"

namespace smsdw {

namespace {

// Plan creation in FFTW is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

constexpr cplx kI{0.0, 1.0};
const double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

}  // namespace

class FftPlan {
 public:
  FftPlan(std::size_t nx, std::size_t ny) : n_(nx * ny) {
    buf_ = fftw_alloc_complex(n_);
    std::lock_guard lock(planner_mutex());
    fwd_ = fftw_plan_dft_2d(static_cast<int>(ny), static_cast<int>(nx), buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_2d(static_cast<int>(ny), static_cast<int>(nx), buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~FftPlan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(buf_);
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  cplx* data() { return reinterpret_cast<cplx*>(buf_); }
  void forward() { fftw_execute(fwd_); }
  void backward() { fftw_execute(bwd_); }
  std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  fftw_complex* buf_;
  fftw_plan fwd_;
  fftw_plan bwd_;
};

double OpticalField::total_power() const {
  double sum = 0.0;
  for (std::size_t i = 0; i < plus.size(); ++i) sum += std::norm(plus[i]) + std::norm(minus[i]);
  return sum;
}

OpticalField x_polarized_pump(std::size_t nx, std::size_t ny, double intensity) {
  // |Omega'_+|^2 = |Omega'_-|^2 = (total |Omega'|^2) / 2
  const double amp = std::sqrt(0.5 * units::rabi_sq_from_intensity(intensity));
  OpticalField f(nx, ny, Plane::entrance);
  for (std::size_t i = 0; i < f.size(); ++i) {
    f.plus[i] = amp;
    f.minus[i] = -amp;
  }
  return f;
}

cplx Susceptibility::half_kl_chi(int sign) const {
  return od * (kI + delta - static_cast<double>(sign) * omega_z) / (2.0 * (1.0 + delta * delta));
}

std::array<cplx, 4> expm2(const std::array<cplx, 4>& m) {
  const cplx mean = 0.5 * (m[0] + m[3]);
  const cplx a = m[0] - mean;  // traceless part [[a, b], [c, -a]]
  const cplx b = m[1];
  const cplx c = m[2];
  const cplx s2 = a * a + b * c;  // N^2 = s2 * I
  const cplx s = std::sqrt(s2);
  cplx ch, sh_over_s;
  if (std::abs(s) < 1e-4) {
    ch = 1.0 + s2 / 2.0 + s2 * s2 / 24.0;
    sh_over_s = 1.0 + s2 / 6.0 + s2 * s2 / 120.0;
  } else {
    ch = std::cosh(s);
    sh_over_s = std::sinh(s) / s;
  }
  const cplx e = std::exp(mean);
  return {e * (ch + sh_over_s * a), e * sh_over_s * b, e * sh_over_s * c, e * (ch - sh_over_s * a)};
}

std::array<cplx, 4> slab_matrix(const AtomState& s, const Susceptibility& chi) {
  const cplx cp = kI * chi.half_kl_chi(+1);
  const cplx cm = kI * chi.half_kl_chi(-1);
  const cplx phi{s[kU], -s[kV]};  // u - i v
  return expm2({cp * (1.0 + 0.75 * s[kW] + s[kX] / 20.0), cp * 0.15 * phi, cm * 0.15 * std::conj(phi),
                cm * (1.0 - 0.75 * s[kW] + s[kX] / 20.0)});
}

OpticalField medium_transmit(const OpticalField& in, const AtomicField& atoms, const Susceptibility& chi) {
  if (in.nx != atoms.nx || in.ny != atoms.ny) {
    throw ConfigError("optical and atomic grids differ");
  }
  OpticalField out(in.nx, in.ny, Plane::exit);
  for (std::size_t i = 0; i < in.size(); ++i) {
    const auto t = slab_matrix(atoms.data[i], chi);
    for (const cplx& x : t) {
      if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) {
        throw DivergenceError("non-finite slab transfer matrix at pixel " + std::to_string(i));
      }
    }
    out.plus[i] = t[0] * in.plus[i] + t[1] * in.minus[i];
    out.minus[i] = t[2] * in.plus[i] + t[3] * in.minus[i];
  }
  return out;
}

bool FourierFilter::passes(int kx, int ky) const {
  if (kx == 0 && ky == 0) return true;
  if (axis == FilterAxis::none) return true;
  const int along = axis == FilterAxis::x ? kx : ky;
  const int perp = axis == FilterAxis::x ? ky : kx;
  if (perp != 0) return false;
  if (center_bin == 0) return true;
  return std::abs(std::abs(along) - center_bin) <= half_width;
}

double bin_wavenumber(int k, std::size_t n, double pixel) {
  return 2.0 * std::numbers::pi * static_cast<double>(k) / (static_cast<double>(n) * pixel);
}

SpectralPropagator::SpectralPropagator(std::size_t nx, std::size_t ny, double pixel, double distance,
                                       double wavelength, const FourierFilter& filter, double reflectivity)
    : nx_(nx), ny_(ny), multiplier_(nx * ny), plan_(std::make_unique<FftPlan>(nx, ny)) {
  if (!(reflectivity >= 0.0 && reflectivity <= 1.0)) {
    throw ConfigError("reflectivity must lie in [0, 1]");
  }
  const double k = units::wavenumber(wavelength);
  const double amp = std::sqrt(reflectivity);
  const double norm = 1.0 / static_cast<double>(nx * ny);
  for (std::size_t iy = 0; iy < ny; ++iy) {
    const int ky = signed_bin(iy, ny);
    const double qy = bin_wavenumber(ky, ny, pixel);
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const int kx = signed_bin(ix, nx);
      const double qx = bin_wavenumber(kx, nx, pixel);
      cplx m{0.0, 0.0};
      if (filter.passes(kx, ky)) {
        const double phase = (qx * qx + qy * qy) * distance / (2.0 * k);
        m = amp * norm * std::polar(1.0, phase);
      }
      multiplier_[iy * nx + ix] = m;
    }
  }
}

SpectralPropagator::~SpectralPropagator() = default;
SpectralPropagator::SpectralPropagator(SpectralPropagator&&) noexcept = default;
SpectralPropagator& SpectralPropagator::operator=(SpectralPropagator&&) noexcept = default;

void SpectralPropagator::transform(const std::vector<cplx>& in, std::vector<cplx>& out) const {
  cplx* buf = plan_->data();
  std::copy(in.begin(), in.end(), buf);
  plan_->forward();
  for (std::size_t i = 0; i < multiplier_.size(); ++i) buf[i] *= multiplier_[i];
  plan_->backward();
  out.assign(buf, buf + in.size());
}

OpticalField SpectralPropagator::apply(const OpticalField& in, Plane out_plane) const {
  OpticalField out(in.nx, in.ny, out_plane);
  transform(in.plus, out.plus);
  transform(in.minus, out.minus);
  return out;
}

std::vector<cplx> fft2(const std::vector<cplx>& in, std::size_t nx, std::size_t ny, bool inverse) {
  FftPlan plan(nx, ny);
  std::copy(in.begin(), in.end(), plan.data());
  if (inverse) {
    plan.backward();
  } else {
    plan.forward();
  }
  return {plan.data(), plan.data() + in.size()};
}

OpticalField propagate_free(const OpticalField& field, double pixel, double distance, double wavelength) {
  SpectralPropagator prop(field.nx, field.ny, pixel, distance, wavelength, FourierFilter{}, 1.0);
  return prop.apply(field, field.plane);
}

OpticalField apply_filter(const OpticalField& spectrum, const FourierFilter& filter) {
  OpticalField out = spectrum;
  for (std::size_t iy = 0; iy < spectrum.ny; ++iy) {
    for (std::size_t ix = 0; ix < spectrum.nx; ++ix) {
      if (!filter.passes(signed_bin(ix, spectrum.nx), signed_bin(iy, spectrum.ny))) {
        out.plus[iy * spectrum.nx + ix] = 0.0;
        out.minus[iy * spectrum.nx + ix] = 0.0;
      }
    }
  }
  return out;
}

OpticalField mirror_reflect(const OpticalField& field, double reflectivity) {
  if (!(reflectivity >= 0.0 && reflectivity <= 1.0)) {
    throw ConfigError("reflectivity must lie in [0, 1], got " + std::to_string(reflectivity));
  }
  const double amp = std::sqrt(reflectivity);
  OpticalField out = field;
  for (auto& x : out.plus) x *= amp;
  for (auto& x : out.minus) x *= amp;
  return out;
}

LinearField to_linear_basis(const OpticalField& field) {
  LinearField lin;
  lin.parallel.resize(field.size());
  lin.perp.resize(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    lin.parallel[i] = (field.minus[i] - field.plus[i]) * kInvSqrt2;
    lin.perp[i] = kI * (field.minus[i] + field.plus[i]) * kInvSqrt2;
  }
  return lin;
}

OpticalField from_linear_basis(const LinearField& lin, std::size_t nx, std::size_t ny) {
  OpticalField f(nx, ny);
  for (std::size_t i = 0; i < f.size(); ++i) {
    f.minus[i] = (lin.parallel[i] - kI * lin.perp[i]) * kInvSqrt2;
    f.plus[i] = (-lin.parallel[i] - kI * lin.perp[i]) * kInvSqrt2;
  }
  return f;
}

std::vector<double> perp_intensity(const OpticalField& field) {
  std::vector<double> out(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    out[i] = 0.5 * std::norm(field.minus[i] + field.plus[i]);
  }
  return out;
}

double polarization_angle(double phi_l) { return 0.5 * (phi_l - std::numbers::pi); }

}  // namespace smsdw

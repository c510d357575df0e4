#include <doctest.h>

#include <cmath>
#include <random>

#include "smsdw/error.hpp"
#include "smsdw/optics.hpp"
#include "smsdw/units.hpp"

using namespace smsdw;
using doctest::Approx;

namespace {

constexpr cplx kI{0.0, 1.0};

OpticalField random_field(std::size_t nx, std::size_t ny, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  OpticalField f(nx, ny);
  for (std::size_t i = 0; i < f.size(); ++i) {
    f.plus[i] = {d(rng), d(rng)};
    f.minus[i] = {d(rng), d(rng)};
  }
  return f;
}

double max_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("susceptibility") {
  const Susceptibility chi{70.0, -20.0, 0.0};
  CHECK(chi.half_kl_chi(+1) == chi.half_kl_chi(-1));
  CHECK(chi.half_kl_chi(+1).imag() > 0.0);
  CHECK(chi.half_kl_chi(+1) == 70.0 * (kI - 20.0) / (2.0 * 401.0));
  const Susceptibility split{70.0, -20.0, 0.3};
  CHECK(split.half_kl_chi(+1) != split.half_kl_chi(-1));
}

TEST_CASE("2x2 matrix exponential") {
  // Diagonal: scalar exponentials.
  const cplx a{0.3, -1.2}, d{-0.5, 2.0};
  const auto e = expm2({a, 0.0, 0.0, d});
  CHECK(std::abs(e[0] - std::exp(a)) < 1e-13);
  CHECK(std::abs(e[3] - std::exp(d)) < 1e-13);
  CHECK(std::abs(e[1]) < 1e-15);
  // General matrix against a long Taylor series.
  const std::array<cplx, 4> m = {cplx{0.2, 0.7}, cplx{-0.4, 0.1}, cplx{0.3, -0.2}, cplx{-0.1, 0.5}};
  std::array<cplx, 4> sum = {1.0, 0.0, 0.0, 1.0}, term = sum;
  for (int k = 1; k < 40; ++k) {
    term = {(term[0] * m[0] + term[1] * m[2]) / double(k), (term[0] * m[1] + term[1] * m[3]) / double(k),
            (term[2] * m[0] + term[3] * m[2]) / double(k), (term[2] * m[1] + term[3] * m[3]) / double(k)};
    for (int i = 0; i < 4; ++i) sum[i] += term[i];
  }
  const auto got = expm2(m);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(got[i] - sum[i]) < 1e-13);
  // Near-degenerate branch.
  const auto tiny = expm2({cplx{0.1, 0.0}, cplx{1e-6, 0.0}, cplx{1e-6, 0.0}, cplx{0.1, 0.0}});
  CHECK(std::abs(tiny[1] - std::exp(0.1) * std::sinh(1e-6)) < 1e-15);
}

TEST_CASE("empty medium gives uniform absorption and phase") {
  const Susceptibility chi{70.0, -20.0, 0.0};
  const AtomicField atoms(8, 2);
  const OpticalField in = random_field(8, 2, 1);
  const OpticalField out = medium_transmit(in, atoms, chi);
  const cplx factor = std::exp(kI * 70.0 * (kI - 20.0) / (2.0 * 401.0));
  for (std::size_t i = 0; i < in.size(); ++i) {
    CHECK(std::abs(out.plus[i] - factor * in.plus[i]) < 1e-13);
    CHECK(std::abs(out.minus[i] - factor * in.minus[i]) < 1e-13);
  }
  CHECK(out.plane == Plane::exit);
}

TEST_CASE("orientation couples sigma+ more strongly") {
  const Susceptibility chi{70.0, -20.0, 0.0};
  AtomState s{};
  s[kW] = 0.4;
  const auto t = slab_matrix(s, chi);
  CHECK(std::abs(t[1]) == 0.0);
  CHECK(std::abs(t[2]) == 0.0);
  // Stronger coupling: larger phase shift and absorption for sigma+.
  CHECK(std::abs(std::arg(t[0])) > std::abs(std::arg(t[3])));
  CHECK(std::abs(t[0]) < std::abs(t[3]));
}

TEST_CASE("medium transmission is linear") {
  const Susceptibility chi{130.0, -20.0, 0.0};
  AtomicField atoms(6, 3);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> d(-0.3, 0.3);
  for (auto& s : atoms.data) {
    for (double& x : s) x = d(rng);
  }
  const OpticalField a = random_field(6, 3, 2), b = random_field(6, 3, 3);
  const cplx alpha{0.7, -1.1};
  OpticalField sum(6, 3);
  for (std::size_t i = 0; i < sum.size(); ++i) {
    sum.plus[i] = a.plus[i] + alpha * b.plus[i];
    sum.minus[i] = a.minus[i] + alpha * b.minus[i];
  }
  const auto ta = medium_transmit(a, atoms, chi), tb = medium_transmit(b, atoms, chi);
  const auto ts = medium_transmit(sum, atoms, chi);
  for (std::size_t i = 0; i < sum.size(); ++i) {
    CHECK(std::abs(ts.plus[i] - (ta.plus[i] + alpha * tb.plus[i])) < 1e-10);
    CHECK(std::abs(ts.minus[i] - (ta.minus[i] + alpha * tb.minus[i])) < 1e-10);
  }
  CHECK_THROWS_AS(medium_transmit(random_field(5, 3, 1), atoms, chi), ConfigError);
}

TEST_CASE("free propagation") {
  const double lambda = 780.241e-9, pixel = 8e-6;
  const OpticalField f = random_field(32, 16, 4);
  SUBCASE("zero distance is the identity") {
    const auto g = propagate_free(f, pixel, 0.0, lambda);
    CHECK(max_diff(g.plus, f.plus) < 1e-12);
    CHECK(max_diff(g.minus, f.minus) < 1e-12);
  }
  SUBCASE("plane wave is unchanged") {
    OpticalField p(32, 16);
    for (std::size_t i = 0; i < p.size(); ++i) p.plus[i] = p.minus[i] = {0.3, -0.2};
    const auto g = propagate_free(p, pixel, -0.03, lambda);
    CHECK(max_diff(g.plus, p.plus) < 1e-13);
  }
  SUBCASE("single sideband advances by q^2 d / k") {
    const double d = -0.015;
    const int k = 5;
    OpticalField s(32, 1);
    for (std::size_t ix = 0; ix < 32; ++ix) {
      s.plus[ix] = std::polar(1.0, 2.0 * std::numbers::pi * k * ix / 32.0);
    }
    const auto g = propagate_free(s, pixel, 2.0 * d, lambda);
    const double q = bin_wavenumber(k, 32, pixel);
    const cplx expected = std::polar(1.0, q * q * d / units::wavenumber(lambda));
    for (std::size_t ix = 0; ix < 32; ++ix) CHECK(std::abs(g.plus[ix] - expected * s.plus[ix]) < 1e-12);
  }
  SUBCASE("total power is conserved") {
    const auto g = propagate_free(f, pixel, 0.02, lambda);
    CHECK(std::abs(g.total_power() - f.total_power()) <= 1e-12 * f.total_power());
  }
}

TEST_CASE("Fourier filter") {
  const FourierFilter none{FilterAxis::none, 3, 0};
  const FourierFilter slit{FilterAxis::x, 1, 8};
  CHECK(none.passes(5, 7));
  CHECK(slit.passes(0, 0));
  CHECK(slit.passes(8, 0));
  CHECK(slit.passes(-9, 0));
  CHECK(slit.passes(7, 0));
  CHECK_FALSE(slit.passes(6, 0));
  CHECK_FALSE(slit.passes(8, 1));
  for (int k = -20; k <= 20; ++k) CHECK(slit.passes(k, 0) == slit.passes(-k, 0));
  const FourierFilter yslit{FilterAxis::y, 0, 2};
  CHECK(yslit.passes(0, 2));
  CHECK_FALSE(yslit.passes(2, 0));

  const OpticalField spec = random_field(32, 8, 6);
  const auto once = apply_filter(spec, slit);
  const auto twice = apply_filter(once, slit);
  CHECK(max_diff(once.plus, twice.plus) == 0.0);
  CHECK(max_diff(apply_filter(spec, none).plus, spec.plus) == 0.0);
}

TEST_CASE("filter commutes with the diffraction phasor") {
  const FourierFilter slit{FilterAxis::x, 2, 4};
  const OpticalField f = random_field(16, 4, 8);
  const double pixel = 10e-6, lambda = 780e-9, d = -0.03;
  const SpectralPropagator filtered(16, 4, pixel, d, lambda, slit, 1.0);
  const SpectralPropagator open(16, 4, pixel, d, lambda, FourierFilter{}, 1.0);
  const SpectralPropagator only_filter(16, 4, pixel, 0.0, lambda, slit, 1.0);
  const auto a = only_filter.apply(open.apply(f, Plane::exit), Plane::exit);
  const auto b = open.apply(only_filter.apply(f, Plane::exit), Plane::exit);
  const auto c = filtered.apply(f, Plane::exit);
  CHECK(max_diff(a.plus, b.plus) < 1e-12);
  CHECK(max_diff(a.plus, c.plus) < 1e-12);
}

TEST_CASE("mirror reflection") {
  const OpticalField f = random_field(4, 4, 10);
  CHECK(max_diff(mirror_reflect(f, 1.0).plus, f.plus) == 0.0);
  const auto z = mirror_reflect(f, 0.0);
  CHECK(z.total_power() == 0.0);
  CHECK(mirror_reflect(f, 0.81).total_power() == Approx(0.81 * f.total_power()));
  CHECK_THROWS_AS(mirror_reflect(f, 1.5), ConfigError);
  CHECK_THROWS_AS(mirror_reflect(f, -0.1), ConfigError);
}

TEST_CASE("linear polarization basis") {
  SUBCASE("x-polarized input leaves the perpendicular channel dark") {
    const OpticalField pump = x_polarized_pump(4, 2, 5.0);
    for (double i : perp_intensity(pump)) CHECK(i == 0.0);
    const LinearField lin = to_linear_basis(pump);
    CHECK(std::norm(lin.parallel[0]) == Approx(units::rabi_sq_from_intensity(5.0)));
  }
  SUBCASE("circular input projects equally") {
    OpticalField c(1, 1);
    c.plus[0] = {0.8, 0.3};
    const LinearField lin = to_linear_basis(c);
    CHECK(std::norm(lin.parallel[0]) == Approx(std::norm(lin.perp[0])));
  }
  SUBCASE("round trip") {
    const OpticalField f = random_field(8, 8, 12);
    const auto back = from_linear_basis(to_linear_basis(f), 8, 8);
    CHECK(max_diff(back.plus, f.plus) < 1e-12);
    CHECK(max_diff(back.minus, f.minus) < 1e-12);
  }
  SUBCASE("perpendicular intensity follows the relative phase") {
    // Omega'_- = Omega'_+ exp(-i phi_L); x polarization is phi_L = pi.
    for (double phi : {0.0, 0.5, 1.5, 3.0}) {
      OpticalField f(1, 1);
      f.plus[0] = 1.0;
      f.minus[0] = std::polar(1.0, -phi);
      const double expected = 2.0 * std::pow(std::cos(phi / 2.0), 2);
      CHECK(perp_intensity(f)[0] == Approx(expected));
    }
    CHECK(polarization_angle(std::numbers::pi) == Approx(0.0));
    CHECK(polarization_angle(0.0) == Approx(-std::numbers::pi / 2.0));
  }
}

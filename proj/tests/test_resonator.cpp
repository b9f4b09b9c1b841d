#include "esr/resonator.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace esr;

TEST_CASE("reflection: over-coupled preset gives Gamma(0) = 0.1525") {
  const auto p = ResonatorParams::reference_preset();
  CHECK(p.kappa_l() == doctest::Approx(5.9e5));
  const auto r0 = reflection_coefficient(p, 0.0);
  CHECK(r0.real() == doctest::Approx(0.1525).epsilon(1e-4));
  CHECK(std::abs(r0.imag()) < 1e-12);
}

TEST_CASE("reflection is passive and tends to -1 far off resonance") {
  const auto p = ResonatorParams::reference_preset();
  for (double d = -5e6; d <= 5e6; d += 1e5) CHECK(std::abs(reflection_coefficient(p, d)) <= 1.0 + 1e-12);
  CHECK(reflection_coefficient(p, 1e12).real() == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("reflection slope matches a finite difference") {
  const auto p = ResonatorParams::reference_preset();
  const double d = 1.3e5;
  const double h = 1.0;
  const auto fd = (reflection_coefficient(p, d + h) - reflection_coefficient(p, d - h)) / (2.0 * h);
  CHECK(std::abs(reflection_slope(p, d) - fd) < 1e-6 * std::abs(fd));
}

TEST_CASE("cavity relaxes to the closed-form steady state") {
  const auto p = ResonatorParams::reference_preset();
  const cplx drive(1e4, -2e3);
  const double dt = 0.01 / p.kappa_l();
  CavityState s;
  for (int k = 0; k < 20000; ++k) s = cavity_step(s, p, drive, 0.0, dt);
  const cplx exact = 2.0 * std::sqrt(p.kappa_c) * drive / p.kappa_l();
  CHECK(std::abs(s.a - exact) < 1e-9 * std::abs(exact));
  CHECK(std::abs(steady_state_field(p, drive) - exact) < 1e-12 * std::abs(exact));
  CHECK(std::abs(output_field(s, p, drive) - reflection_coefficient(p, 0.0) * drive) <
        1e-9 * std::abs(drive));
}

TEST_CASE("undriven cavity decays at kappa_l / 2") {
  const auto p = ResonatorParams::reference_preset();
  const double dt = 0.01 / p.kappa_l();
  CavityState s{cplx(1.0, 0.0), 0.0};
  const int n = 1000;
  for (int k = 0; k < n; ++k) s = cavity_step(s, p, 0.0, 0.0, dt);
  CHECK(std::abs(s.a) == doctest::Approx(std::exp(-0.5 * p.kappa_l() * n * dt)).epsilon(1e-9));
}

TEST_CASE("cavity_step rejects unstable steps") {
  const auto p = ResonatorParams::reference_preset();
  CHECK_THROWS_AS(cavity_step({}, p, 0.0, 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(cavity_step({}, p, 0.0, 0.0, 1.0 / p.kappa_l()), std::invalid_argument);
}

TEST_CASE("pulse validation and envelopes") {
  std::vector<Pulse> ok{{0.0, 1e-6, 1.0, 0.0, 0.0}, {2e-6, 1e-6, 2.0, std::numbers::pi / 2, 0.0}};
  CHECK_NOTHROW(validate_sequence(ok));
  CHECK(pulse_active(ok, 0.5e-6));
  CHECK_FALSE(pulse_active(ok, 1.5e-6));
  CHECK(std::abs(drive_envelope(ok, 2.5e-6) - cplx(0.0, 2.0)) < 1e-12);
  std::vector<Pulse> overlap{{0.0, 2e-6, 1.0, 0.0, 0.0}, {1e-6, 1e-6, 1.0, 0.0, 0.0}};
  CHECK_THROWS_AS(validate_sequence(overlap), std::invalid_argument);
  std::vector<Pulse> empty{{0.0, 0.0, 1.0, 0.0, 0.0}};
  CHECK_THROWS_AS(validate_sequence(empty), std::invalid_argument);
}

TEST_CASE("Rabi calibration of the preset pulses") {
  const auto p = ResonatorParams::reference_preset();
  const double g = 2.0 * std::numbers::pi * 448.19;
  const auto half = rabi_pulse_calibration(p, g, 0.5e-6, std::numbers::pi / 2);
  const auto pi = pi_pulse_calibration(p, g, 1e-6);
  // frozen: both calibrated drives land at 2.822e5 sqrt(photons/s)
  CHECK(half.amplitude == doctest::Approx(2.822e5).epsilon(2e-3));
  CHECK(pi.amplitude == doctest::Approx(2.822e5).epsilon(2e-3));
  // the angle is linear in the drive
  const auto double_angle = rabi_pulse_calibration(p, g, 1e-6, 2.0 * std::numbers::pi);
  CHECK(double_angle.amplitude == doctest::Approx(2.0 * pi.amplitude).epsilon(1e-9));
  CHECK_FALSE(pi.bandwidth_warning);
  CHECK(rabi_pulse_calibration(p, g, 5e-6, std::numbers::pi).bandwidth_warning);
}

TEST_CASE("empty-cavity simulation reaches the steady output") {
  const auto p = ResonatorParams::reference_preset();
  const double dt = 0.01 / p.kappa_l();
  const auto rec = simulate_cavity(p, std::vector<Pulse>{{0.0, 200e-6, 1e3, 0.0, 0.0}}, 199e-6, dt);
  CHECK(std::abs(rec.output.back() - reflection_coefficient(p, 0.0) * 1e3) < 1e-6);
  CHECK(rec.field.size() == rec.output.size());
}

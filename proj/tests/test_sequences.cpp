#include "esr/sequences.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace esr;

namespace {
constexpr double pi = std::numbers::pi;
const ResonatorParams params = ResonatorParams::reference_preset();
}  // namespace

TEST_CASE("echo train timing: refocusing at odd, echoes at even multiples of tau") {
  PulseSpec spec = PulseSpec::calibrated(params, 2 * pi * 448.19);
  const double tau = 10e-6;
  const auto train = build_echo_train(params, spec, tau, 3);
  REQUIRE(train.pulses.size() == 4);
  REQUIRE(train.windows.size() == 3);
  const double c0 = train.pulses[0].start + 0.5 * train.pulses[0].duration;
  for (int k = 1; k <= 3; ++k) {
    const auto& p = train.pulses[static_cast<std::size_t>(k)];
    CHECK(p.start + 0.5 * p.duration == doctest::Approx(c0 + (2 * k - 1) * tau));
    CHECK(p.phase == doctest::Approx(pi / 2));
    const auto& w = train.windows[static_cast<std::size_t>(k - 1)];
    CHECK(w.center() == doctest::Approx(c0 + 2 * k * tau));
    CHECK(w.width() == doctest::Approx(6.0 / params.kappa_l()));
  }
  CHECK(train.t_end > train.windows.back().end);
}

TEST_CASE("echo train rejects windows that overlap pulses") {
  PulseSpec spec = PulseSpec::calibrated(params, 2 * pi * 448.19);
  spec.window_width = 30e-6;
  CHECK_THROWS(build_echo_train(params, spec, 10e-6, 2));
}

TEST_CASE("Purcell law and its inverse") {
  const double g = 2 * pi * 450.0;
  const double t1 = purcell_t1(g, 5.9e5);
  CHECK(t1 == doctest::Approx(5.9e5 / (4 * g * g)));
  CHECK(purcell_g_from_t1(t1, 5.9e5) == doctest::Approx(g));
  CHECK(t1 * 1e3 == doctest::Approx(18.45).epsilon(1e-3));
}

TEST_CASE("first Rabi maximum is refined by a parabola") {
  std::vector<RabiPoint> pts;
  for (int i = 0; i <= 30; ++i) {
    const double a = 0.1 * i;
    pts.push_back({a, std::sin(pi * a / 2.0 / 1.37)});
  }
  CHECK(first_rabi_maximum(pts) == doctest::Approx(1.37).epsilon(2e-3));
  CHECK(first_rabi_maximum({{0.0, 0.0}, {1.0, 1.0}, {2.0, 2.0}}) == 0.0);
}

TEST_CASE("inversion recovery sequence layout") {
  InversionRecoverySpec irs;
  irs.inversion_amplitude = 1e5;
  irs.detection = PulseSpec::calibrated(params, 2 * pi * 448.19);
  const auto train = build_inversion_recovery(params, irs, 1e-3);
  REQUIRE(train.pulses.size() == 3);
  CHECK(train.pulses[0].start == 0.0);
  CHECK(train.pulses[1].start == doctest::Approx(train.pulses[0].end() + 1e-3));
  REQUIRE(train.windows.size() == 1);
}

TEST_CASE("noiseless inversion recovery: inverted at short delay, recovered at long delay") {
  DetuningDistribution d;
  d.fwhm = 5.9e5;
  const double g = 2 * pi * 448.19;
  auto ens = discretize_ensemble(d, 200.0, 51, g);
  ens.T1 = 2e-3;
  ens.T2 = 1e-3;
  InversionRecoverySpec irs;
  irs.inversion_amplitude = pi_pulse_calibration(params, g, 1e-6).amplitude;
  irs.detection = PulseSpec::calibrated(params, g);
  const auto pts = inversion_recovery(ens, params, {0.2e-3, 20e-3}, irs);
  REQUIRE(pts.size() == 2);
  CHECK(pts[0].area * pts[1].area < 0.0);
  CHECK(std::abs(pts[1].area) > std::abs(pts[0].area));
}

TEST_CASE("far from the refocusing pulse the echo flips with the pi/2 phase") {
  DetuningDistribution d;
  d.fwhm = 5.9e5;
  const double g = 2 * pi * 448.19;
  const auto ens = discretize_ensemble(d, 200.0, 51, g);
  auto spec = PulseSpec::calibrated(params, g);
  EvolveOptions ff;
  ff.fast_forward = true;
  const auto plus = hahn_echo(ens, params, 100e-6, spec, ff);
  spec.half_phase = pi;
  const auto minus = hahn_echo(ens, params, 100e-6, spec, ff);
  const auto& w = plus.echo_windows.front();
  const double ref = echo_phase(plus.trace, w);
  const double a = echo_area(plus.trace, w, ref);
  const double b = echo_area(minus.trace, w, ref);
  CHECK(a > 0.0);
  CHECK(b == doctest::Approx(-a).epsilon(1e-3));
}

TEST_CASE("field-sweep ensemble counts spins only near the resonator") {
  FieldSweepSetup setup;
  setup.density = {{-120e6 * 2 * pi, 1.0}, {120e6 * 2 * pi, 1.0}};
  setup.spins_per_transition = 1e5;
  setup.g_reference = 2 * pi * 448.19;
  const auto sys = SpinSystem::bismuth_in_silicon();
  const auto at_zero = field_sweep_ensemble(setup, params, sys, 0.0);
  CHECK(at_zero.total_spins() > 0.0);
  CHECK(at_zero.total_spins() < 20 * setup.spins_per_transition);
  for (const auto& p : at_zero.packets) CHECK(std::abs(p.detuning) <= 5 * params.kappa_l() * (1 + 1e-9));
  setup.density = {{0.0, 1.0}};
  CHECK_THROWS(field_sweep_ensemble(setup, params, sys, 0.0));
}

TEST_CASE("zero-field echo needs strain density that reaches the resonator") {
  // the zero-field line sits 103 MHz above the resonator, so a +-100 MHz
  // density misses it while +-120 MHz does not
  FieldSweepSetup setup;
  setup.spins_per_transition = 1e5;
  setup.g_reference = 2 * pi * 448.19;
  const auto sys = SpinSystem::bismuth_in_silicon();
  setup.density = {{-100e6 * 2 * pi, 1.0}, {100e6 * 2 * pi, 1.0}};
  CHECK(field_sweep_ensemble(setup, params, sys, 0.0).total_spins() == 0.0);
  setup.density = {{-120e6 * 2 * pi, 1.0}, {120e6 * 2 * pi, 1.0}};
  CHECK(field_sweep_ensemble(setup, params, sys, 0.0).total_spins() > 0.0);
}

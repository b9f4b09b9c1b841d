#include "esr/resonator.hpp"

#include "esr/units.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace esr {

void ResonatorParams::validate() const {
  if (!(omega_r > 0.0)) throw std::invalid_argument("omega_r must be positive");
  if (!(kappa_c > 0.0)) throw std::invalid_argument("kappa_c must be positive");
  if (!(kappa_i > 0.0)) throw std::invalid_argument("kappa_i must be positive");
}

ResonatorParams ResonatorParams::reference_preset() {
  return {units::hz_to_rad_per_s(7.274e9), 3.4e5, 2.5e5};
}

void validate_sequence(std::span<const Pulse> pulses) {
  for (std::size_t k = 0; k < pulses.size(); ++k) {
    const auto& p = pulses[k];
    if (!(p.duration > 0.0)) {
      throw std::invalid_argument("pulse " + std::to_string(k) + ": duration must be positive");
    }
    if (!(p.amplitude >= 0.0) || !std::isfinite(p.amplitude)) {
      throw std::invalid_argument("pulse " + std::to_string(k) + ": bad amplitude");
    }
    if (k > 0 && p.start < pulses[k - 1].end() - 1e-15) {
      throw std::invalid_argument("pulse " + std::to_string(k) +
                                  ": overlaps or precedes the previous pulse");
    }
  }
}

cplx drive_envelope(std::span<const Pulse> pulses, double t) {
  cplx total{0.0, 0.0};
  for (const auto& p : pulses) {
    if (t >= p.start && t < p.end()) {
      total += std::polar(p.amplitude, p.phase - p.detuning * (t - p.start));
    }
  }
  return total;
}

bool pulse_active(std::span<const Pulse> pulses, double t) {
  for (const auto& p : pulses) {
    if (t >= p.start && t < p.end()) return true;
  }
  return false;
}

cplx reflection_coefficient(const ResonatorParams& params, double delta) {
  const cplx num(params.kappa_c - params.kappa_i, -2.0 * delta);
  const cplx den(params.kappa_l(), 2.0 * delta);
  return num / den;
}

cplx reflection_slope(const ResonatorParams& params, double delta) {
  // d/dd [(c - 2id)/(l + 2id)] = -2i (c + l) / (l + 2id)^2 with c = kc - ki
  const cplx den(params.kappa_l(), 2.0 * delta);
  const double c = params.kappa_c - params.kappa_i;
  return cplx(0.0, -2.0) * (c + params.kappa_l()) / (den * den);
}

double max_stable_step(const ResonatorParams& params) { return 0.02 / params.kappa_l(); }

CavityState cavity_step(const CavityState& state, const ResonatorParams& params,
                        cplx drive, cplx spin_source, double dt) {
  if (!(dt > 0.0) || dt > max_stable_step(params) * (1.0 + 1e-12)) {
    throw std::invalid_argument("cavity_step: dt must lie in (0, 0.02/kappa_l]");
  }
  const double hk = 0.5 * params.kappa_l();
  const double sk = std::sqrt(params.kappa_c);
  const cplx k1 = cavity_rhs(state.a, hk, sk, drive, spin_source);
  const cplx k2 = cavity_rhs(state.a + 0.5 * dt * k1, hk, sk, drive, spin_source);
  const cplx k3 = cavity_rhs(state.a + 0.5 * dt * k2, hk, sk, drive, spin_source);
  const cplx k4 = cavity_rhs(state.a + dt * k3, hk, sk, drive, spin_source);
  return {state.a + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), state.t + dt};
}

cplx output_field(const CavityState& state, const ResonatorParams& params, cplx drive) {
  return std::sqrt(params.kappa_c) * state.a - drive;
}

cplx steady_state_field(const ResonatorParams& params, cplx drive) {
  return 2.0 * std::sqrt(params.kappa_c) * drive / params.kappa_l();
}

RabiCalibration rabi_pulse_calibration(const ResonatorParams& params, double g,
                                       double duration, double angle) {
  params.validate();
  if (!(g > 0.0)) throw std::invalid_argument("rabi calibration: g must be positive");
  if (!(duration > 0.0)) throw std::invalid_argument("rabi calibration: duration must be positive");

  // Unit-amplitude square pulse, integrated through the ringdown until the
  // field has decayed by e^-20.
  const double kl = params.kappa_l();
  const int steps_in_pulse = std::max(200, static_cast<int>(std::ceil(duration / (0.005 / kl))));
  const double dt = duration / steps_in_pulse;
  const int ringdown_steps = static_cast<int>(std::ceil(40.0 / kl / dt));

  CavityState state;
  double integral = 0.0;
  double peak = 0.0;
  double prev = 0.0;
  for (int k = 0; k < steps_in_pulse + ringdown_steps; ++k) {
    const cplx drive = k < steps_in_pulse ? cplx(1.0, 0.0) : cplx(0.0, 0.0);
    state = cavity_step(state, params, drive, {0.0, 0.0}, dt);
    const double mag = std::abs(state.a);
    integral += 0.5 * dt * (prev + mag);
    prev = mag;
    peak = std::max(peak, mag);
  }

  RabiCalibration cal;
  cal.angle_per_amplitude = 2.0 * g * integral;
  cal.amplitude = angle / cal.angle_per_amplitude;
  cal.peak_photons = (peak * cal.amplitude) * (peak * cal.amplitude);
  cal.bandwidth_warning = duration * kl > 1.0;
  return cal;
}

RabiCalibration pi_pulse_calibration(const ResonatorParams& params, double g,
                                     double duration) {
  return rabi_pulse_calibration(params, g, duration, units::pi);
}

CavityRecord simulate_cavity(const ResonatorParams& params, std::span<const Pulse> pulses,
                             double t_end, double dt) {
  params.validate();
  validate_sequence(pulses);
  const auto n = static_cast<std::size_t>(std::llround(t_end / dt));
  CavityRecord rec;
  rec.dt = dt;
  rec.field.reserve(n + 1);
  rec.output.reserve(n + 1);
  CavityState state;
  rec.field.push_back(state.a);
  rec.output.push_back(output_field(state, params, drive_envelope(pulses, 0.0)));
  for (std::size_t k = 0; k < n; ++k) {
    const double t_mid = (static_cast<double>(k) + 0.5) * dt;
    const cplx drive = drive_envelope(pulses, t_mid);
    state = cavity_step(state, params, drive, {0.0, 0.0}, dt);
    state.t = static_cast<double>(k + 1) * dt;
    rec.field.push_back(state.a);
    rec.output.push_back(output_field(state, params, drive_envelope(pulses, state.t)));
  }
  return rec;
}

}  // namespace esr

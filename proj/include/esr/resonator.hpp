#pragma once

#include <complex>
#include <span>
#include <vector>

namespace esr {

using cplx = std::complex<double>;

/// Single-mode LC resonator probed in reflection. Rates in rad/s.
struct ResonatorParams {
  double omega_r = 0.0;
  double kappa_c = 0.0;
  double kappa_i = 0.0;

  double kappa_l() const { return kappa_c + kappa_i; }
  void validate() const;

  /// 7.274 GHz aluminium resonator, kappa_c = 3.4e5 and kappa_i = 2.5e5 rad/s.
  static ResonatorParams reference_preset();
};

/// Square drive pulse. `amplitude` is the input field in sqrt(photons/s),
/// `detuning` is the carrier offset omega_drive - omega_r.
struct Pulse {
  double start = 0.0;
  double duration = 0.0;
  double amplitude = 0.0;
  double phase = 0.0;
  double detuning = 0.0;

  double end() const { return start + duration; }
};

/// Throws std::invalid_argument unless every pulse has positive duration and
/// the list is time-ordered and non-overlapping.
void validate_sequence(std::span<const Pulse> pulses);

/// Complex input envelope at time t (rotating frame at omega_r).
cplx drive_envelope(std::span<const Pulse> pulses, double t);

/// True when some pulse covers t, using half-open [start, end) intervals.
bool pulse_active(std::span<const Pulse> pulses, double t);

struct CavityState {
  cplx a{0.0, 0.0};  // sqrt(photons)
  double t = 0.0;
};

/// Reflection coefficient for a probe whose frequency lies `delta` below the
/// resonance (delta = omega_r - omega). Over-coupling gives Gamma(0) > 0.
cplx reflection_coefficient(const ResonatorParams& params, double delta);

/// d Gamma / d delta.
cplx reflection_slope(const ResonatorParams& params, double delta);

/// Right-hand side of da/dt = -(kappa_l/2) a + sqrt(kappa_c) a_in - i source.
inline cplx cavity_rhs(cplx a, double half_kappa_l, double sqrt_kappa_c, cplx drive,
                       cplx spin_source) {
  return -half_kappa_l * a + sqrt_kappa_c * drive - cplx(0.0, 1.0) * spin_source;
}

/// Largest integrator step accepted by cavity_step and the ensemble solver.
double max_stable_step(const ResonatorParams& params);

/// One RK4 step with drive and spin source held constant across the step.
/// Throws std::invalid_argument if dt is outside (0, 0.02/kappa_l].
CavityState cavity_step(const CavityState& state, const ResonatorParams& params,
                        cplx drive, cplx spin_source, double dt);

/// Outgoing envelope a_out = sqrt(kappa_c) a - a_in.
cplx output_field(const CavityState& state, const ResonatorParams& params, cplx drive);

/// Steady-state intracavity field under a constant drive at detuning 0.
cplx steady_state_field(const ResonatorParams& params, cplx drive);

struct RabiCalibration {
  double amplitude = 0.0;          // sqrt(photons/s)
  double angle_per_amplitude = 0.0;  // rad per unit input amplitude
  double peak_photons = 0.0;       // max |a|^2 at the calibrated amplitude
  bool bandwidth_warning = false;  // duration * kappa_l > 1
};

/// Square-pulse input amplitude that rotates a resonant spin by `angle`,
/// obtained by integrating 2 g |a(t)| over the simulated pulse and ringdown.
RabiCalibration rabi_pulse_calibration(const ResonatorParams& params, double g,
                                       double duration, double angle);

RabiCalibration pi_pulse_calibration(const ResonatorParams& params, double g,
                                     double duration);

struct CavityRecord {
  double dt = 0.0;
  std::vector<cplx> field;   // intracavity a(t)
  std::vector<cplx> output;  // a_out(t)
};

/// Empty-cavity response (no spins) to a pulse sequence, sampled every dt.
CavityRecord simulate_cavity(const ResonatorParams& params, std::span<const Pulse> pulses,
                             double t_end, double dt);

}  // namespace esr

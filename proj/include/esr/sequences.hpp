#pragma once

#include "esr/ensemble.hpp"

#include <functional>
#include <vector>

namespace esr {

/// Square-pulse settings shared by every echo sequence.
struct PulseSpec {
  double half_duration = 0.5e-6;  // pi/2 pulse
  double pi_duration = 1.0e-6;    // refocusing pulse
  double half_amplitude = 0.0;    // sqrt(photons/s)
  double pi_amplitude = 0.0;
  double half_phase = 0.0;
  double refocus_phase = std::numbers::pi / 2.0;
  double first_start = 0.0;
  double window_width = 0.0;  // 0 selects 6 / kappa_l
  double tail = 2e-6;         // record length after the last window

  /// Fills both amplitudes from the resonant Rabi calibration.
  static PulseSpec calibrated(const ResonatorParams& params, double g,
                              double half_duration = 0.5e-6, double pi_duration = 1.0e-6);
};

struct EchoTrain {
  std::vector<Pulse> pulses;
  std::vector<TimeWindow> windows;
  double t_end = 0.0;
};

/// pi/2 pulse followed by n refocusing pulses centred tau, 3 tau, 5 tau, ...
/// after the pi/2 centre; echo k is centred 2 k tau after it. Throws if a
/// window would overlap a pulse or another window.
EchoTrain build_echo_train(const ResonatorParams& params, const PulseSpec& spec,
                           double tau, int n_refocus);

enum class PhaseScheme {
  cpmg,  // refocusing pulses 90 degrees from the pi/2 pulse (y axis)
  cp,    // refocusing pulses in phase with the pi/2 pulse (x axis)
};

SequenceResult hahn_echo(const Ensemble& ens, const ResonatorParams& params, double tau,
                         const PulseSpec& spec, EvolveOptions options = {});

SequenceResult cpmg(const Ensemble& ens, const ResonatorParams& params, double tau,
                    int n_pulses, PhaseScheme scheme, PulseSpec spec,
                    EvolveOptions options = {});

/// Integrated echo Re(e^{-i phase_ref} * integral x dt) over a window.
double echo_area(const QuadratureTrace& trace, const TimeWindow& window, double phase_ref);

/// Phase of the integrated echo inside a window.
double echo_phase(const QuadratureTrace& trace, const TimeWindow& window);

struct RabiPoint {
  double amplitude = 0.0;
  double area = 0.0;
};

/// Echo area versus refocusing-pulse amplitude; the pi/2 pulse is fixed.
std::vector<RabiPoint> rabi_sweep(const Ensemble& ens, const ResonatorParams& params,
                                  const std::vector<double>& amplitudes, double tau,
                                  const PulseSpec& spec, EvolveOptions options = {});

/// Amplitude of the first local maximum of |area|, refined by a parabola
/// through the neighbouring points. Returns 0 if there is none.
double first_rabi_maximum(const std::vector<RabiPoint>& points);

struct InversionRecoverySpec {
  double inversion_duration = 1e-6;
  double inversion_amplitude = 0.0;
  PulseSpec detection;  // Hahn detection pulses
  double detection_tau = 100e-6;
};

struct RecoveryPoint {
  double delay = 0.0;
  double area = 0.0;
};

/// Builds the pulse list: inversion pulse at 0, detection Hahn sequence
/// starting `delay` after the inversion pulse ends.
EchoTrain build_inversion_recovery(const ResonatorParams& params,
                                   const InversionRecoverySpec& spec, double delay);

/// Noiseless echo area versus delay. Long delays are fast-forwarded.
std::vector<RecoveryPoint> inversion_recovery(const Ensemble& ens,
                                              const ResonatorParams& params,
                                              const std::vector<double>& delays,
                                              const InversionRecoverySpec& spec);

/// Purcell-limited relaxation T1 = kappa_l / (4 g^2).
double purcell_t1(double g, double kappa_l);
/// g = sqrt(kappa_l / (4 T1)).
double purcell_g_from_t1(double T1, double kappa_l);

/// Phenomenological field-sweep setup: a spin-density table over the shift
/// from each transition's unstrained frequency.
struct FieldSweepSetup {
  std::vector<std::pair<double, double>> density;  // (shift rad/s, weight)
  double spins_per_transition = 0.0;
  int n_packets = 101;
  double g_reference = 0.0;   // coupling of a transition with sx = sx_reference
  double sx_reference = 0.5;
  double T1 = std::numeric_limits<double>::infinity();
  double T2 = std::numeric_limits<double>::infinity();
  double sz_eq = -1.0;
  double min_sx = 0.1;
  double detuning_window = 0.0;  // 0 selects +-5 kappa_l around omega_r
  double tau = 100e-6;
  PulseSpec pulses;
};

struct FieldSweepPoint {
  double field = 0.0;
  double area = 0.0;
  double spins = 0.0;  // spins inside the simulated detuning window
};

/// Spins of every allowed transition whose shifted frequency falls within the
/// detuning window, as one ensemble. Empty when none do.
Ensemble field_sweep_ensemble(const FieldSweepSetup& setup, const ResonatorParams& params,
                              const SpinSystem& sys, double B0);

std::vector<FieldSweepPoint> field_sweep_echo(const FieldSweepSetup& setup,
                                              const ResonatorParams& params,
                                              const std::vector<double>& fields,
                                              const SpinSystem& sys);

}  // namespace esr

#pragma once

#include "esr/resonator.hpp"
#include "esr/spin_spectrum.hpp"
#include "esr/trace.hpp"

#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace esr {

/// A group of `count` identical spins with Bloch vector (sx, sy, sz).
/// `detuning` is the spin frequency minus omega_r.
struct SpinPacket {
  double detuning = 0.0;
  double g = 0.0;
  double count = 0.0;
  double sx = 0.0;
  double sy = 0.0;
  double sz = -1.0;
};

struct Ensemble {
  std::vector<SpinPacket> packets;
  double T1 = std::numeric_limits<double>::infinity();
  double T2 = std::numeric_limits<double>::infinity();
  double sz_eq = -1.0;

  double total_spins() const;
  void validate() const;
};

/// Thermal polarisation reached after waiting t_rep: 1 - exp(-t_rep / T1).
double equilibrium_polarization(double t_rep, double T1);

enum class DistributionShape { gaussian, lorentzian, table };

struct DetuningDistribution {
  DistributionShape shape = DistributionShape::gaussian;
  double fwhm = 0.0;    // rad/s
  double center = 0.0;  // rad/s
  /// Density samples (detuning rad/s, weight) for shape == table; linear
  /// interpolation between points, zero outside.
  std::vector<std::pair<double, double>> table;
  /// Lorentzian tails are cut at center +- cutoff * fwhm.
  double lorentzian_cutoff = 10.0;

  void validate() const;
  /// Inverse CDF.
  double quantile(double u) const;
};

/// Equal-weight packets at the distribution's mid-point quantiles, all
/// initialised to (0, 0, sz_eq). n_packets must be 1 or odd.
Ensemble discretize_ensemble(const DetuningDistribution& dist, double n_total,
                             int n_packets, double g, double sz_eq = -1.0);

/// Thrown when the integration produces a non-finite value.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(std::size_t step, double time);
  std::size_t step() const { return step_; }
  double time() const { return time_; }

 private:
  std::size_t step_;
  double time_;
};

struct EvolveOptions {
  double dt = 0.0;        // 0 selects a step automatically
  double record_dt = 0.0;  // 0 records every 100 ns (or every step if coarser)
  /// Advance idle stretches (no pulse, ringdown finished, no window nearby)
  /// analytically with the cavity empty. The trace reads zero there.
  bool fast_forward = false;
  std::vector<TimeWindow> protected_windows;
  /// Time after the first pulse at which the excited spin number is sampled;
  /// 0 picks the end of the first pulse plus 10/kappa_l.
  double excitation_probe_time = 0.0;
};

struct SequenceResult {
  QuadratureTrace trace;
  std::vector<cplx> cavity_field;  // same sampling as trace
  std::vector<TimeWindow> echo_windows;
  std::vector<TimeWindow> skipped;
  std::vector<Pulse> pulses;
  std::string name;
  double tau = 0.0;
  Ensemble final_state;
  double total_spins = 0.0;
  /// Sum of count * |transverse Bloch component| after the first pulse.
  double excited_spins = 0.0;
  double step = 0.0;
};

/// Integration step picked when EvolveOptions::dt is zero: the largest
/// 1/2/5 x 10^k value below min(0.01/kappa_l, 0.01/max|detuning|).
double default_step(const ResonatorParams& params, const Ensemble& ens);

/// Joint RK4 integration of the cavity envelope and every packet's Bloch
/// equations over [0, t_end].
SequenceResult evolve(const Ensemble& ens, const ResonatorParams& params,
                      const std::vector<Pulse>& pulses, double t_end,
                      const EvolveOptions& options = {});

// Ideal-pulse oracle mode: instantaneous rotations with the cavity bypassed.

/// Rotates every packet by `angle` about the Bloch axis addressed by a drive
/// of the given phase (phase 0 is +x, phase pi/2 is -y).
void apply_rotation(Ensemble& ens, double angle, double phase);

/// Free precession and relaxation for `duration` without cavity field.
void free_evolution(Ensemble& ens, double duration);

/// sum count * (sx - i sy) / 2
cplx transverse_sum(const Ensemble& ens);

struct IdealEcho {
  double fid_amplitude = 0.0;
  double echo_amplitude = 0.0;
};
IdealEcho ideal_hahn_echo(Ensemble ens, double tau, double refocus_phase);

}  // namespace esr

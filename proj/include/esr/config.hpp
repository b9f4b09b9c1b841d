#pragma once

#include "esr/detection.hpp"
#include "esr/ensemble.hpp"
#include "esr/resonator.hpp"
#include "esr/sequences.hpp"
#include "esr/spin_spectrum.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace esr {

/// Invalid configuration. `line` is 1-based, 0 when unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, std::size_t line);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Evenly spaced values from start to stop inclusive.
struct LinearRange {
  double start = 0.0;
  double stop = 0.0;
  int points = 0;
  std::vector<double> values() const;
  bool operator==(const LinearRange&) const = default;
};

// Every field keeps the unit named in its config key; accessors on
// SpectrometerConfig convert to SI so a parse/serialize round trip is exact.

struct SpinSystemBlock {
  double S = 0.5;
  double I = 4.5;
  double gamma_e_hz_per_T = 28e9;
  double gamma_n_hz_per_T = 7e6;
  double A_hz = 1.4754e9;
  bool operator==(const SpinSystemBlock&) const = default;
};

struct ResonatorBlock {
  double frequency_hz = 7.274e9;
  double kappa_c_rad_per_s = 3.4e5;
  double kappa_i_rad_per_s = 2.5e5;
  bool operator==(const ResonatorBlock&) const = default;
};

struct EnsembleBlock {
  double n_total = 0.0;
  std::string distribution = "gaussian";  // gaussian | lorentzian
  double fwhm_rad_per_s = 5.9e5;
  double center_rad_per_s = 0.0;
  int n_packets = 1001;
  std::optional<double> g_hz;  // exactly one of g_hz, T1_ms
  std::optional<double> T1_ms;
  double T2_ms = 1.65;
  std::optional<double> repetition_time_ms;  // default 3 T1
  double field_mT = 3.74;
  bool operator==(const EnsembleBlock&) const = default;
};

struct NoiseBlock {
  std::string amplifier = "jpa_degenerate";  // hemt | jpa_phase_preserving | jpa_degenerate
  std::optional<double> n_photons;           // default from the amplifier
  double excess_photons = 0.0;
  double hemt_photons = 20.0;
  bool include_vacuum = false;
  double freq_noise_rms_hz = 7e3;
  double flicker_exponent = 1.0;
  double calibration_photons = 3.0;
  bool operator==(const NoiseBlock&) const = default;
};

struct SequenceBlock {
  double half_duration_us = 0.5;
  double pi_duration_us = 1.0;
  std::optional<double> half_amplitude;  // sqrt(photons/s); calibrated when absent
  std::optional<double> pi_amplitude;
  double tau_us = 100.0;
  std::optional<double> window_width_us;  // default 6 / kappa_l
  double cpmg_tau_us = 10.0;
  int cpmg_echoes = 200;
  std::string cpmg_scheme = "cpmg";  // cpmg | cp
  int rabi_points = 31;
  double rabi_max_factor = 3.0;
  double inversion_duration_us = 1.0;
  std::vector<double> t1_delays_ms;
  std::vector<double> t2_two_tau_ms;
  int shots_per_point = 10000;
  bool operator==(const SequenceBlock&) const = default;
};

struct SpectrumBlock {
  LinearRange field_mT{0.0, 10.0, 201};
  double band_lo_hz = 6.5e9;
  double band_hi_hz = 8.0e9;
  double min_sx = 0.1;
  bool operator==(const SpectrumBlock&) const = default;
};

struct FieldSweepBlock {
  LinearRange field_mT{0.0, 8.0, 33};
  /// (shift Hz, weight) spin density relative to each transition.
  std::vector<std::pair<double, double>> density_table_hz;
  double spins_per_transition = 0.0;
  int n_packets = 101;
  double tau_us = 100.0;
  bool operator==(const FieldSweepBlock&) const = default;
};

struct NoiseSpectrumBlock {
  double sample_interval_ms = 1.0;
  int samples = 262144;
  int segment_length = 16384;
  double overlap = 0.5;
  double low_power_photons = 3.0;
  double high_power_photons = 3e4;
  double fit_lo_hz = 1.0;
  double fit_hi_hz = 100.0;
  bool operator==(const NoiseSpectrumBlock&) const = default;
};

struct RunBlock {
  std::uint64_t seed = 1;
  int n_traces = 10000;
  double repetition_rate_hz = 16.0;
  std::string output_dir;  // empty: ESRTWIN_OUTPUT_DIR or "out"
  unsigned threads = 1;
  bool operator==(const RunBlock&) const = default;
};

struct SpectrometerConfig {
  SpinSystemBlock spin_system;
  ResonatorBlock resonator;
  EnsembleBlock ensemble;
  NoiseBlock noise;
  SequenceBlock sequence;
  SpectrumBlock spectrum;
  FieldSweepBlock fieldsweep;
  NoiseSpectrumBlock noise_spectrum;
  RunBlock run;

  bool operator==(const SpectrometerConfig&) const = default;

  /// Throws ConfigError on any violated invariant.
  void validate() const;

  SpinSystem spin() const;
  ResonatorParams resonator_params() const;
  double coupling() const;      // rad/s, given or derived from T1
  double T1() const;            // s, given or derived from g
  double T2() const;            // s
  double polarization() const;  // 1 - exp(-T_rep / T1)
  DetuningDistribution distribution() const;
  Ensemble make_ensemble(int n_packets = 0) const;
  NoiseModel noise_model() const;
  PulseSpec pulse_spec() const;
  PhaseScheme cpmg_scheme() const;
};

/// Bundled parameter set of the reference spectrometer.
SpectrometerConfig reference_preset();

/// Parses JSON text. Errors carry the line of the offending key or token.
SpectrometerConfig parse_config(const std::string& text);
SpectrometerConfig load_config(const std::string& path);
std::string serialize_config(const SpectrometerConfig& config);

}  // namespace esr

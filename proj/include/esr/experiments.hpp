#pragma once

#include "esr/config.hpp"
#include "esr/detection.hpp"
#include "esr/sequences.hpp"
#include "esr/spin_spectrum.hpp"

#include <functional>
#include <vector>

namespace esr {

/// Plus/minus runs of one sequence and their phase-cycled difference.
struct CycledRun {
  SequenceResult plus;
  SequenceResult minus;
  QuadratureTrace cycled;
};

/// Runs the sequence built by `make` with the pi/2 phase at 0 and at pi.
CycledRun run_cycled(const std::function<SequenceResult(const PulseSpec&)>& make,
                     const PulseSpec& spec);

struct EchoShape {
  double peak_time = 0.0;  // s
  double peak = 0.0;       // |x| at the peak
  double pre_width = 0.0;  // peak to the 1/e point before it
  double post_width = 0.0;
};

/// Maximum of |x| on [from, to] and the 1/e half widths on either side.
EchoShape measure_echo_shape(const QuadratureTrace& trace, double from, double to);

/// Same weights at the samples of another window of equal length.
EchoTemplate retarget_template(const EchoTemplate& tmpl, const QuadratureTrace& trace,
                               const TimeWindow& window);

std::vector<SweepRow> run_spectrum(const SpectrometerConfig& c);

struct EchoRun {
  CycledRun run;
  EchoShape shape;
  double expected_time = 0.0;  // 2 tau after the pi/2 pulse centre
};
EchoRun run_echo(const SpectrometerConfig& c);

struct RabiRun {
  std::vector<RabiPoint> points;
  double calibrated_pi = 0.0;
  double first_maximum = 0.0;
};
RabiRun run_rabi(const SpectrometerConfig& c);

struct DecayPoint {
  double x = 0.0;  // delay or 2 tau, s
  double area = 0.0;
  double error = 0.0;
  double noiseless = 0.0;
};
struct DecayRun {
  std::vector<DecayPoint> points;
  FitResult fit;
  double configured = 0.0;  // T1 or T2, s
  double fitted = 0.0;
  double fitted_error = 0.0;
};
/// Inversion recovery with Monte-Carlo noise on every point.
DecayRun run_t1(const SpectrometerConfig& c);
/// Hahn echo decay versus 2 tau with Monte-Carlo noise.
DecayRun run_t2(const SpectrometerConfig& c);

struct CpmgRun {
  CycledRun run;
  std::vector<double> echo_times;  // s
  std::vector<double> echo_areas;  // noiseless, phase referenced to echo 1
  FitResult decay_fit;             // a exp(-t / T) over the echo areas
  CpmgSnrReport white;             // white noise only
  CpmgSnrReport full;              // white plus frequency noise
};
/// `with_noise` false skips the two Monte-Carlo reports.
CpmgRun run_cpmg(const SpectrometerConfig& c, bool with_noise = true);

std::vector<FieldSweepPoint> run_fieldsweep(const SpectrometerConfig& c);

struct SensitivityRun {
  EchoStatistics stats;
  double n_min_theory = 0.0;
  double excited_spins = 0.0;
  double total_spins = 0.0;
  std::size_t n_traces = 0;
};
SensitivityRun run_sensitivity(const SpectrometerConfig& c);

struct NoiseSpectrumRun {
  std::vector<SpectrumPoint> low;   // normalised by the carrier power
  std::vector<SpectrumPoint> high;
  std::vector<SpectrumPoint> off_resonance;
  double slope = 0.0;               // log-log slope of the low-power spectrum
  double rms_hz = 0.0;              // recovered frequency noise
  double amplitude_ratio = 0.0;     // high / low normalised quadrature noise amplitude
  double expected_ratio = 0.0;      // (P_high / P_low)^(-1/4)
};
NoiseSpectrumRun run_noise_spectrum(const SpectrometerConfig& c);

}  // namespace esr

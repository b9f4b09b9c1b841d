#pragma once

#include "esr/ensemble.hpp"
#include "esr/resonator.hpp"
#include "esr/trace.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace esr {

enum class AmplifierMode { hemt, jpa_phase_preserving, jpa_degenerate };

/// Measurement noise. White noise is referenced to the resonator output in
/// quanta per mode: each quadrature carries a density of total()/2.
struct NoiseModel {
  double n_photons = 0.5;
  /// Adds the vacuum half quantum on top of n_photons.
  bool include_vacuum = false;
  double freq_noise_rms = 0.0;  // rad/s, at calibration_photons
  double flicker_exponent = 1.0;
  /// Intracavity photon number at which freq_noise_rms applies; the
  /// frequency noise scales as (photons / calibration_photons)^(-1/4).
  double calibration_photons = 3.0;
  std::uint64_t seed = 1;
  /// Time between consecutive shots, s. When positive, the 1/f process
  /// spans the whole acquisition, so slow components are shared between
  /// neighbouring shots; zero confines it to each trace.
  double shot_interval = 0.0;

  double total() const { return n_photons + (include_vacuum ? 0.5 : 0.0); }
  void validate() const;
};

/// Noise quanta for an amplifier chain: HEMT `hemt_photons`, phase-preserving
/// JPA 1 + excess, degenerate JPA 0.5 + excess.
double amplifier_noise_photons(AmplifierMode mode, double excess = 0.0,
                               double hemt_photons = 20.0);

/// Independent, reproducible random stream for one (seed, shot, stream)
/// triple, so shots can be generated in any order or thread.
class ShotRng {
 public:
  ShotRng(std::uint64_t seed, std::uint64_t shot, std::uint64_t stream);
  double normal() { return normal_(engine_); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

/// Zero-mean Gaussian process with a 1/f^exponent spectrum between 1/(n dt)
/// and the Nyquist frequency, scaled so its ensemble rms equals `rms`.
std::vector<double> synthesize_flicker(std::size_t n, double dt, double rms, double exponent,
                                       ShotRng& rng);

/// Output fluctuation caused by resonator frequency jitter `freq_noise`
/// (rad/s at the calibration power), given the noiseless intracavity field.
/// Solves the linearised cavity equation
///   d(da)/dt = -(kappa_l/2 + i detuning) da - i dw_eff(t) a(t)
/// and returns sqrt(kappa_c) da.
std::vector<cplx> flicker_response(std::span<const cplx> cavity_field, double dt,
                                   std::span<const double> freq_noise,
                                   const ResonatorParams& params, double calibration_photons,
                                   double operating_detuning = 0.0);

/// Adds white and frequency noise for shot number `shot`. `cavity_field`
/// must share the trace sampling; it may be empty when freq_noise_rms is 0.
/// Variance of a 1/f^exponent spectrum between f_low and f_high, per unit
/// spectral amplitude.
double flicker_band_power(double exponent, double f_low, double f_high);

/// The 1/f process of an acquisition of `n_shots` traces, each `n_samples`
/// long, split by timescale. Frequencies below the trace bandwidth are
/// frozen during a trace and stored as one offset per shot: those below half
/// the shot rate come from a continuous series over the shots, the rest are
/// independent per shot. The remainder is synthesised inside each trace with
/// rms `in_trace_rms`.
struct FlickerPlan {
  double in_trace_rms = 0.0;   // rad/s
  std::vector<double> offsets; // rad/s, one per shot
};
FlickerPlan make_flicker_plan(const NoiseModel& model, std::size_t n_shots,
                              std::size_t n_samples, double dt);

/// `plan` supplies the slow frequency offset of `shot`; without it the 1/f
/// process lives inside the trace alone.
QuadratureTrace add_noise(const QuadratureTrace& trace, const NoiseModel& model,
                          const ResonatorParams& params, std::span<const cplx> cavity_field,
                          std::uint64_t shot = 0, const FlickerPlan* plan = nullptr);

/// (plus - minus) / 2.
QuadratureTrace phase_cycle(const QuadratureTrace& plus, const QuadratureTrace& minus);

/// Unit-energy filter: sum |weights|^2 dt = 1 over the covered samples.
struct EchoTemplate {
  SampleRange range;
  double dt = 0.0;
  std::vector<cplx> weights;
};

/// Template equal to the normalised noiseless echo inside the window.
EchoTemplate make_template(const QuadratureTrace& noiseless, const TimeWindow& window);
/// Flat template over the window at the given phase.
EchoTemplate boxcar_template(const QuadratureTrace& trace, const TimeWindow& window,
                             double phase);
/// Triangle peaking at the window centre, at the given phase.
EchoTemplate triangular_template(const QuadratureTrace& trace, const TimeWindow& window,
                                 double phase);

/// Re(sum conj(h) x dt) over the template support.
double matched_filter(const QuadratureTrace& trace, const EchoTemplate& tmpl);

struct EchoStatistics {
  std::vector<double> areas;
  double mean = 0.0;
  double std = 0.0;  // per single trace
  double snr = 0.0;
  double n_min = 0.0;        // spins per echo at unit SNR
  double sensitivity = 0.0;  // spins / sqrt(Hz)
};

/// Throws on fewer than two areas, non-positive spins or rate, or zero
/// spread. With `phase_cycled` the spread is multiplied by sqrt(2) so the
/// SNR refers to one raw trace.
EchoStatistics echo_statistics(std::vector<double> areas, double repetition_rate,
                               double spins_per_echo, bool phase_cycled = false);

/// Closed-form single-shot limit (kappa_l / 2 g p) sqrt(n w / kappa_c).
double sensitivity_formula(const ResonatorParams& params, double g, double polarization,
                           double noise_photons, double linewidth);

struct CpmgSnrReport {
  std::vector<double> snr_echo;   // SNR_i
  std::vector<double> snr_uncor;  // (1/sqrt n) sum_{i<=n} SNR_i
  std::vector<double> snr_cum;    // mean/std of per-trace partial sums
};

/// areas[trace][echo]; every trace must hold the same number of echoes.
CpmgSnrReport cpmg_snr(const std::vector<std::vector<double>>& areas);
/// Applies templates[i] to echo i of every trace.
CpmgSnrReport cpmg_snr(std::span<const QuadratureTrace> traces,
                       std::span<const EchoTemplate> templates);

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = hardware
/// concurrency). The first exception thrown is rethrown.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

/// Deterministic signal of one shot: noiseless trace plus intracavity field.
struct ShotSignal {
  const QuadratureTrace* trace = nullptr;
  const std::vector<cplx>* cavity_field = nullptr;
};

struct MonteCarloSetup {
  ShotSignal plus;
  /// Opposite pi/2 phase; when set, each trace is phase cycled from shots
  /// 2k and 2k+1.
  ShotSignal minus;
  std::vector<EchoTemplate> templates;
  NoiseModel noise;
  std::size_t n_traces = 0;
  unsigned threads = 1;
};

/// Filtered echo areas, result[trace][template]. White noise is drawn only
/// on template supports; identical for any thread count.
std::vector<std::vector<double>> monte_carlo_areas(const MonteCarloSetup& setup,
                                                   const ResonatorParams& params);

// Spectral estimation

struct SpectrumPoint {
  double freq_hz = 0.0;
  double density = 0.0;  // one-sided, units^2 / Hz
};

/// Averaged Hann-windowed periodogram, one-sided, excluding DC. The integral
/// of the density approximates the variance of the mean-removed record.
std::vector<SpectrumPoint> welch_psd(std::span<const double> x, double dt,
                                     std::size_t segment_length, double overlap);

/// Welch spectrum of the quadrature orthogonal to the mean carrier phase
/// (or to `phase_ref` when the trace has no carrier).
std::vector<SpectrumPoint> quadrature_noise_spectrum(const QuadratureTrace& trace,
                                                     std::size_t segment_length, double overlap,
                                                     std::optional<double> phase_ref = {});

struct PowerLaw {
  double exponent = 0.0;  // log-log slope
  double log10_amplitude = 0.0;
  double density_at(double f) const;
};
/// Least-squares line through log10(density) vs log10(f) on [f_lo, f_hi].
PowerLaw fit_power_law(std::span<const SpectrumPoint> spectrum, double f_lo, double f_hi);

/// sqrt of the integrated density. Below the first bin the fitted power law
/// is integrated down to `f_floor` when f_floor > 0.
double integrated_rms(std::span<const SpectrumPoint> spectrum, const PowerLaw& low_end = {},
                      double f_floor = 0.0);

// Curve fitting

enum class FitModel {
  decay,               // a exp(-x / tau)
  inversion_recovery,  // a (1 - 2 k exp(-x / T1))
  rabi,                // c + a sin^2(pi x / (2 x_pi))
};

struct FitResult {
  std::vector<double> params;  // in the order listed for the model
  std::vector<double> errors;  // 1 sigma
  double residual_rms = 0.0;
  int iterations = 0;
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Levenberg-Marquardt least squares with optional per-point sigmas.
/// Throws FitError with diagnostics when it fails to converge.
FitResult fit_curve(std::span<const double> xs, std::span<const double> ys, FitModel model,
                    std::span<const double> sigmas = {},
                    std::span<const double> initial = {});

double evaluate_model(FitModel model, std::span<const double> params, double x);

}  // namespace esr

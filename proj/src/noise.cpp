#include "esr/detection.hpp"

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace esr {

void NoiseModel::validate() const {
  if (!(n_photons >= 0.0)) throw std::invalid_argument("noise: n_photons must be >= 0");
  if (!(freq_noise_rms >= 0.0)) throw std::invalid_argument("noise: freq_noise_rms must be >= 0");
  if (!(flicker_exponent >= 0.0) || !std::isfinite(flicker_exponent)) {
    throw std::invalid_argument("noise: flicker_exponent must be finite and >= 0");
  }
  if (!(calibration_photons > 0.0)) {
    throw std::invalid_argument("noise: calibration_photons must be positive");
  }
  if (!(shot_interval >= 0.0)) throw std::invalid_argument("noise: shot_interval must be >= 0");
}

double amplifier_noise_photons(AmplifierMode mode, double excess, double hemt_photons) {
  if (!(excess >= 0.0)) throw std::invalid_argument("amplifier: excess noise must be >= 0");
  switch (mode) {
    case AmplifierMode::hemt:
      return hemt_photons;
    case AmplifierMode::jpa_phase_preserving:
      return 1.0 + excess;
    case AmplifierMode::jpa_degenerate:
      return 0.5 + excess;
  }
  throw std::invalid_argument("amplifier: unknown mode");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(p);
  }
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

}  // namespace

ShotRng::ShotRng(std::uint64_t seed, std::uint64_t shot, std::uint64_t stream)
    : engine_(splitmix64(splitmix64(splitmix64(seed) ^ shot) ^ (stream * 0x632be59bd9b4e019ULL))) {}

std::vector<double> synthesize_flicker(std::size_t n, double dt, double rms, double exponent,
                                       ShotRng& rng) {
  if (n < 4) throw std::invalid_argument("flicker: need at least 4 samples");
  if (!(dt > 0.0)) throw std::invalid_argument("flicker: dt must be positive");
  std::vector<double> out(n, 0.0);
  if (rms == 0.0) return out;

  const std::size_t bins = n / 2 + 1;
  std::unique_ptr<fftw_complex[], FftwFree> spec(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins)));
  std::unique_ptr<double[], FftwFree> real(static_cast<double*>(fftw_malloc(sizeof(double) * n)));

  // The c2r transform is unnormalised, so each sample has variance
  // sum over the full spectrum of E|X_k|^2.
  const double df = 1.0 / (static_cast<double>(n) * dt);
  double power = 0.0;
  std::vector<double> shape(bins, 0.0);
  for (std::size_t k = 1; k < bins; ++k) {
    shape[k] = std::pow(static_cast<double>(k) * df, -0.5 * exponent);
    const bool nyquist = (n % 2 == 0) && k == n / 2;
    power += (nyquist ? 1.0 : 2.0) * shape[k] * shape[k];
  }
  const double scale = rms / std::sqrt(power);
  spec[0][0] = spec[0][1] = 0.0;
  for (std::size_t k = 1; k < bins; ++k) {
    const bool nyquist = (n % 2 == 0) && k == n / 2;
    const double h = scale * shape[k];
    if (nyquist) {
      spec[k][0] = h * rng.normal();
      spec[k][1] = 0.0;
    } else {
      spec[k][0] = h * rng.normal() / std::sqrt(2.0);
      spec[k][1] = h * rng.normal() / std::sqrt(2.0);
    }
  }
  Plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan.reset(fftw_plan_dft_c2r_1d(static_cast<int>(n), spec.get(), real.get(), FFTW_ESTIMATE));
  }
  if (!plan) throw std::runtime_error("flicker: FFT planning failed");
  fftw_execute(plan.get());
  std::copy(real.get(), real.get() + n, out.begin());
  return out;
}

std::vector<cplx> flicker_response(std::span<const cplx> cavity_field, double dt,
                                   std::span<const double> freq_noise,
                                   const ResonatorParams& params, double calibration_photons,
                                   double operating_detuning) {
  if (cavity_field.size() != freq_noise.size()) {
    throw std::invalid_argument("flicker_response: field and noise lengths differ");
  }
  const cplx I(0.0, 1.0);
  const cplx lambda(0.5 * params.kappa_l(), operating_detuning);
  const cplx decay = std::exp(-lambda * dt);
  const cplx gain = (1.0 - decay) / lambda;
  const double root_cal = std::pow(calibration_photons, 0.25);

  auto source = [&](std::size_t k) {
    const double mag = std::abs(cavity_field[k]);
    if (mag == 0.0) return cplx(0.0, 0.0);
    // dw * (|a|^2 / n_cal)^(-1/4) * a
    return -I * freq_noise[k] * root_cal * cavity_field[k] / std::sqrt(mag);
  };

  const double sqrt_kc = std::sqrt(params.kappa_c);
  std::vector<cplx> out(cavity_field.size());
  cplx da(0.0, 0.0);
  cplx prev = cavity_field.empty() ? cplx() : source(0);
  for (std::size_t k = 0; k < cavity_field.size(); ++k) {
    if (k > 0) {
      const cplx next = source(k);
      da = decay * da + gain * 0.5 * (prev + next);
      prev = next;
    }
    out[k] = sqrt_kc * da;
  }
  return out;
}

double flicker_band_power(double exponent, double f_low, double f_high) {
  if (!(f_low > 0.0) || f_high <= f_low) return 0.0;
  if (std::abs(exponent - 1.0) < 1e-12) return std::log(f_high / f_low);
  const double e = 1.0 - exponent;
  return (std::pow(f_high, e) - std::pow(f_low, e)) / e;
}

FlickerPlan make_flicker_plan(const NoiseModel& model, std::size_t n_shots,
                              std::size_t n_samples, double dt) {
  model.validate();
  if (n_shots == 0 || n_samples < 4 || !(dt > 0.0)) {
    throw std::invalid_argument("flicker plan: need shots, >= 4 samples and dt > 0");
  }
  FlickerPlan plan;
  plan.offsets.assign(n_shots, 0.0);
  const double rms = model.freq_noise_rms;
  if (rms == 0.0) return plan;
  const double trace_len = static_cast<double>(n_samples) * dt;
  if (model.shot_interval == 0.0) {
    plan.in_trace_rms = rms;
    return plan;
  }
  if (model.shot_interval < trace_len) {
    throw std::invalid_argument("flicker plan: shot interval shorter than a trace");
  }

  const double a = model.flicker_exponent;
  const double f_record = 1.0 / (static_cast<double>(n_shots) * model.shot_interval);
  const double f_shot = 0.5 / model.shot_interval;
  const double f_trace = 1.0 / trace_len;
  const double f_nyquist = 0.5 / dt;
  const bool series = n_shots >= 4;
  const double slow = series ? flicker_band_power(a, f_record, f_shot) : 0.0;
  const double frozen = flicker_band_power(a, series ? f_shot : f_record, f_trace);
  const double fast = flicker_band_power(a, f_trace, f_nyquist);
  const double unit = rms / std::sqrt(slow + frozen + fast);

  plan.in_trace_rms = unit * std::sqrt(fast);
  if (series) {
    ShotRng rng(model.seed, 0, 2);
    plan.offsets = synthesize_flicker(n_shots, model.shot_interval, unit * std::sqrt(slow), a, rng);
  }
  const double frozen_rms = unit * std::sqrt(frozen);
  for (std::size_t s = 0; s < n_shots; ++s) {
    ShotRng rng(model.seed, s, 3);
    plan.offsets[s] += frozen_rms * rng.normal();
  }
  return plan;
}

QuadratureTrace add_noise(const QuadratureTrace& trace, const NoiseModel& model,
                          const ResonatorParams& params, std::span<const cplx> cavity_field,
                          std::uint64_t shot, const FlickerPlan* plan) {
  if (trace.samples.empty()) throw std::invalid_argument("add_noise: empty trace");
  model.validate();
  QuadratureTrace out = trace;
  if (model.freq_noise_rms > 0.0) {
    if (cavity_field.size() != trace.size()) {
      throw std::invalid_argument("add_noise: cavity field record must match the trace");
    }
    if (plan != nullptr && shot >= plan->offsets.size()) {
      throw std::invalid_argument("add_noise: shot outside the flicker plan");
    }
    const double in_trace = plan != nullptr ? plan->in_trace_rms : model.freq_noise_rms;
    ShotRng rng(model.seed, shot, 1);
    auto dw = synthesize_flicker(trace.size(), trace.dt, in_trace, model.flicker_exponent, rng);
    if (plan != nullptr) {
      for (double& x : dw) x += plan->offsets[shot];
    }
    const auto dx = flicker_response(cavity_field, trace.dt, dw, params,
                                     model.calibration_photons);
    for (std::size_t k = 0; k < out.size(); ++k) out.samples[k] += dx[k];
  }
  if (model.total() > 0.0) {
    ShotRng rng(model.seed, shot, 0);
    const double sigma = std::sqrt(model.total() / (2.0 * trace.dt));
    for (auto& x : out.samples) x += cplx(sigma * rng.normal(), sigma * rng.normal());
  }
  return out;
}

}  // namespace esr

#include "esr/experiments.hpp"

#include "esr/units.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace esr {

CycledRun run_cycled(const std::function<SequenceResult(const PulseSpec&)>& make,
                     const PulseSpec& spec) {
  CycledRun out;
  out.plus = make(spec);
  PulseSpec flipped = spec;
  flipped.half_phase += std::numbers::pi;
  out.minus = make(flipped);
  out.cycled = phase_cycle(out.plus.trace, out.minus.trace);
  return out;
}

EchoShape measure_echo_shape(const QuadratureTrace& trace, double from, double to) {
  const auto range = window_samples(trace, {from, std::min(to, trace.time(trace.size() - 1))});
  EchoShape s;
  std::size_t peak = range.first;
  for (std::size_t k = range.first; k < range.last; ++k) {
    if (std::abs(trace.samples[k]) > s.peak) {
      s.peak = std::abs(trace.samples[k]);
      peak = k;
    }
  }
  const double level = s.peak / std::numbers::e;
  std::size_t lo = peak;
  while (lo > range.first && std::abs(trace.samples[lo]) > level) --lo;
  std::size_t hi = peak;
  while (hi + 1 < range.last && std::abs(trace.samples[hi]) > level) ++hi;
  // linear interpolation of the crossing points
  auto crossing = [&](std::size_t inside, std::size_t outside) {
    const double a = std::abs(trace.samples[inside]);
    const double b = std::abs(trace.samples[outside]);
    const double f = a == b ? 0.0 : (a - level) / (a - b);
    return trace.time(inside) + f * (trace.time(outside) - trace.time(inside));
  };
  s.peak_time = trace.time(peak);
  s.pre_width = lo < peak ? s.peak_time - crossing(lo + 1, lo) : 0.0;
  s.post_width = hi > peak ? crossing(hi - 1, hi) - s.peak_time : 0.0;
  return s;
}

EchoTemplate retarget_template(const EchoTemplate& tmpl, const QuadratureTrace& trace,
                               const TimeWindow& window) {
  const auto range = window_samples(trace, window);
  EchoTemplate out = tmpl;
  out.range = {range.first, range.first + tmpl.weights.size()};
  if (out.range.last > trace.size()) throw std::out_of_range("retarget_template: past trace end");
  return out;
}

std::vector<SweepRow> run_spectrum(const SpectrometerConfig& c) {
  std::vector<double> fields;
  for (double mT : c.spectrum.field_mT.values()) fields.push_back(units::mT_to_T(mT));
  const FrequencyBand band{units::hz_to_rad_per_s(c.spectrum.band_lo_hz),
                           units::hz_to_rad_per_s(c.spectrum.band_hi_hz)};
  return field_sweep_spectrum(c.spin(), fields, c.spectrum.min_sx, band);
}

EchoRun run_echo(const SpectrometerConfig& c) {
  const auto params = c.resonator_params();
  const auto ens = c.make_ensemble();
  const double tau = units::us_to_s(c.sequence.tau_us);
  auto spec = c.pulse_spec();
  spec.tail = 40e-6;  // room for the echo tail
  EchoRun out;
  out.run = run_cycled(
      [&](const PulseSpec& s) { return hahn_echo(ens, params, tau, s); }, spec);
  const auto& pulses = out.run.plus.pulses;
  out.expected_time = pulses.front().start + 0.5 * pulses.front().duration + 2.0 * tau;
  out.shape = measure_echo_shape(out.run.cycled, pulses.back().end(), out.run.cycled.duration());
  return out;
}

RabiRun run_rabi(const SpectrometerConfig& c) {
  const auto params = c.resonator_params();
  const auto ens = c.make_ensemble();
  const auto spec = c.pulse_spec();
  RabiRun out;
  out.calibrated_pi = spec.pi_amplitude;
  std::vector<double> amps;
  const int n = c.sequence.rabi_points;
  for (int k = 0; k < n; ++k) {
    amps.push_back(c.sequence.rabi_max_factor * spec.pi_amplitude * k / (n - 1));
  }
  EvolveOptions options;
  options.fast_forward = true;
  out.points = rabi_sweep(ens, params, amps, units::us_to_s(c.sequence.tau_us), spec, options);
  out.first_maximum = first_rabi_maximum(out.points);
  return out;
}

namespace {

SequenceResult run_train(const Ensemble& ens, const ResonatorParams& params,
                         const EchoTrain& train, double probe_time) {
  EvolveOptions options;
  options.fast_forward = true;
  options.protected_windows = train.windows;
  options.excitation_probe_time = probe_time;
  auto r = evolve(ens, params, train.pulses, train.t_end, options);
  r.echo_windows = train.windows;
  return r;
}

std::uint64_t point_seed(std::uint64_t seed, std::size_t point) {
  return seed + 0x9e3779b97f4a7c15ULL * (point + 1);
}

/// Noisy mean area and its standard error for one decay point.
DecayPoint noisy_point(const SpectrometerConfig& c, const ResonatorParams& params,
                       const CycledRun& run, const EchoTemplate& tmpl, double x,
                       std::size_t index) {
  MonteCarloSetup mc;
  mc.plus = {&run.plus.trace, &run.plus.cavity_field};
  mc.minus = {&run.minus.trace, &run.minus.cavity_field};
  mc.templates = {tmpl};
  mc.noise = c.noise_model();
  // the detection window sits far from every pulse, so only white noise matters
  mc.noise.freq_noise_rms = 0.0;
  mc.noise.seed = point_seed(c.run.seed, index);
  mc.n_traces = static_cast<std::size_t>(c.sequence.shots_per_point);
  mc.threads = c.run.threads;
  const auto areas = monte_carlo_areas(mc, params);
  double mean = 0.0;
  for (const auto& a : areas) mean += a[0];
  mean /= static_cast<double>(areas.size());
  double ss = 0.0;
  for (const auto& a : areas) ss += (a[0] - mean) * (a[0] - mean);
  const double sem = std::sqrt(ss / static_cast<double>(areas.size() - 1)) /
                     std::sqrt(static_cast<double>(areas.size()));
  return {x, mean, sem, matched_filter(run.cycled, tmpl)};
}

void fill_fit(DecayRun& out, FitModel model, std::size_t time_index) {
  std::vector<double> xs, ys, sig;
  for (const auto& p : out.points) {
    xs.push_back(p.x);
    ys.push_back(p.area);
    sig.push_back(p.error);
  }
  out.fit = fit_curve(xs, ys, model, sig);
  out.fitted = out.fit.params[time_index];
  out.fitted_error = out.fit.errors[time_index];
}

}  // namespace

DecayRun run_t1(const SpectrometerConfig& c) {
  const auto& delays = c.sequence.t1_delays_ms;
  if (delays.size() < 4) throw std::invalid_argument("t1: need at least 4 delays");
  const auto params = c.resonator_params();
  const auto ens = c.make_ensemble();
  InversionRecoverySpec irs;
  irs.inversion_duration = units::us_to_s(c.sequence.inversion_duration_us);
  irs.inversion_amplitude =
      pi_pulse_calibration(params, c.coupling(), irs.inversion_duration).amplitude;
  irs.detection_tau = units::us_to_s(c.sequence.tau_us);

  std::vector<CycledRun> runs;
  for (double d : delays) {
    const double delay = units::ms_to_s(d);
    runs.push_back(run_cycled(
        [&](const PulseSpec& s) {
          auto spec = irs;
          spec.detection = s;
          const auto train = build_inversion_recovery(params, spec, delay);
          return run_train(ens, params, train, train.pulses[1].end() + 10.0 / params.kappa_l());
        },
        c.pulse_spec()));
  }
  const auto ref = static_cast<std::size_t>(std::max_element(delays.begin(), delays.end()) -
                                            delays.begin());
  const auto tmpl = make_template(runs[ref].cycled, runs[ref].plus.echo_windows.front());

  DecayRun out;
  out.configured = c.T1();
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const auto t = retarget_template(tmpl, runs[k].cycled, runs[k].plus.echo_windows.front());
    out.points.push_back(noisy_point(c, params, runs[k], t, units::ms_to_s(delays[k]), k));
  }
  fill_fit(out, FitModel::inversion_recovery, 2);
  return out;
}

DecayRun run_t2(const SpectrometerConfig& c) {
  const auto& two_taus = c.sequence.t2_two_tau_ms;
  if (two_taus.size() < 4) throw std::invalid_argument("t2: need at least 4 delays");
  const auto params = c.resonator_params();
  const auto ens = c.make_ensemble();
  EvolveOptions options;
  options.fast_forward = true;

  std::vector<CycledRun> runs;
  for (double d : two_taus) {
    const double tau = 0.5 * units::ms_to_s(d);
    runs.push_back(run_cycled(
        [&](const PulseSpec& s) { return hahn_echo(ens, params, tau, s, options); },
        c.pulse_spec()));
  }
  const auto ref = static_cast<std::size_t>(std::min_element(two_taus.begin(), two_taus.end()) -
                                            two_taus.begin());
  const auto tmpl = make_template(runs[ref].cycled, runs[ref].plus.echo_windows.front());

  DecayRun out;
  out.configured = c.T2();
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const auto t = retarget_template(tmpl, runs[k].cycled, runs[k].plus.echo_windows.front());
    out.points.push_back(noisy_point(c, params, runs[k], t, units::ms_to_s(two_taus[k]), k));
  }
  fill_fit(out, FitModel::decay, 1);
  return out;
}

CpmgRun run_cpmg(const SpectrometerConfig& c, bool with_noise) {
  const auto params = c.resonator_params();
  const auto ens = c.make_ensemble();
  const double tau = units::us_to_s(c.sequence.cpmg_tau_us);
  const int n = c.sequence.cpmg_echoes;
  const auto scheme = c.cpmg_scheme();

  CpmgRun out;
  out.run = run_cycled(
      [&](const PulseSpec& s) { return cpmg(ens, params, tau, n, scheme, s); }, c.pulse_spec());
  const auto& windows = out.run.plus.echo_windows;
  const double phase = echo_phase(out.run.cycled, windows.front());
  std::vector<EchoTemplate> templates;
  for (const auto& w : windows) {
    out.echo_times.push_back(w.center());
    out.echo_areas.push_back(echo_area(out.run.cycled, w, phase));
    templates.push_back(make_template(out.run.cycled, w));
  }
  if (out.echo_areas.size() >= 4) {
    out.decay_fit = fit_curve(out.echo_times, out.echo_areas, FitModel::decay);
  }
  if (!with_noise) return out;

  MonteCarloSetup mc;
  mc.plus = {&out.run.plus.trace, &out.run.plus.cavity_field};
  mc.minus = {&out.run.minus.trace, &out.run.minus.cavity_field};
  mc.templates = std::move(templates);
  mc.n_traces = static_cast<std::size_t>(c.run.n_traces);
  mc.threads = c.run.threads;
  mc.noise = c.noise_model();
  mc.noise.freq_noise_rms = 0.0;
  out.white = cpmg_snr(monte_carlo_areas(mc, params));
  mc.noise = c.noise_model();
  out.full = cpmg_snr(monte_carlo_areas(mc, params));
  return out;
}

std::vector<FieldSweepPoint> run_fieldsweep(const SpectrometerConfig& c) {
  FieldSweepSetup setup;
  for (const auto& [shift, w] : c.fieldsweep.density_table_hz) {
    setup.density.emplace_back(units::hz_to_rad_per_s(shift), w);
  }
  setup.spins_per_transition = c.fieldsweep.spins_per_transition;
  setup.n_packets = c.fieldsweep.n_packets;
  setup.g_reference = c.coupling();
  setup.T1 = c.T1();
  setup.T2 = c.T2();
  setup.sz_eq = -c.polarization();
  setup.min_sx = c.spectrum.min_sx;
  setup.tau = units::us_to_s(c.fieldsweep.tau_us);
  setup.pulses = c.pulse_spec();
  std::vector<double> fields;
  for (double mT : c.fieldsweep.field_mT.values()) fields.push_back(units::mT_to_T(mT));
  return field_sweep_echo(setup, c.resonator_params(), fields, c.spin());
}

SensitivityRun run_sensitivity(const SpectrometerConfig& c) {
  const auto params = c.resonator_params();
  const auto ens = c.make_ensemble();
  const double tau = units::us_to_s(c.sequence.tau_us);
  EvolveOptions options;
  options.fast_forward = true;
  const auto run = run_cycled(
      [&](const PulseSpec& s) { return hahn_echo(ens, params, tau, s, options); },
      c.pulse_spec());

  MonteCarloSetup mc;
  mc.plus = {&run.plus.trace, &run.plus.cavity_field};
  mc.minus = {&run.minus.trace, &run.minus.cavity_field};
  mc.templates = {make_template(run.cycled, run.plus.echo_windows.front())};
  mc.noise = c.noise_model();
  mc.n_traces = static_cast<std::size_t>(c.run.n_traces);
  mc.threads = c.run.threads;
  const auto rows = monte_carlo_areas(mc, params);
  std::vector<double> areas;
  areas.reserve(rows.size());
  for (const auto& r : rows) areas.push_back(r[0]);

  SensitivityRun out;
  out.excited_spins = run.plus.excited_spins;
  out.total_spins = run.plus.total_spins;
  out.n_traces = areas.size();
  out.stats = echo_statistics(std::move(areas), c.run.repetition_rate_hz, out.excited_spins, true);
  out.n_min_theory = sensitivity_formula(params, c.coupling(), c.polarization(),
                                         mc.noise.total(), c.ensemble.fwhm_rad_per_s);
  return out;
}

NoiseSpectrumRun run_noise_spectrum(const SpectrometerConfig& c) {
  const auto params = c.resonator_params();
  const auto& ns = c.noise_spectrum;
  const auto n = static_cast<std::size_t>(ns.samples);
  const double dt = units::ms_to_s(ns.sample_interval_ms);
  const auto seg = static_cast<std::size_t>(ns.segment_length);
  const auto model = c.noise_model();

  struct Record {
    std::vector<SpectrumPoint> raw;
    double carrier_power = 0.0;
  };
  auto record = [&](double photons, std::uint64_t shot) {
    const double a = std::sqrt(photons);
    const double a_in = params.kappa_l() * a / (2.0 * std::sqrt(params.kappa_c));
    const cplx x0 = std::sqrt(params.kappa_c) * a - a_in;
    QuadratureTrace trace{dt, std::vector<cplx>(n, x0)};
    const std::vector<cplx> field(n, cplx(a, 0.0));
    const auto noisy = add_noise(trace, model, params, field, shot);
    return Record{quadrature_noise_spectrum(noisy, seg, ns.overlap, 0.0), std::norm(x0)};
  };
  const auto low = record(ns.low_power_photons, 0);
  const auto high = record(ns.high_power_photons, 1);

  // off-resonant reference: no intracavity field, white noise only
  QuadratureTrace empty{dt, std::vector<cplx>(n, cplx(0.0, 0.0))};
  const std::vector<cplx> no_field(n, cplx(0.0, 0.0));
  NoiseSpectrumRun out;
  out.off_resonance =
      quadrature_noise_spectrum(add_noise(empty, model, params, no_field, 2), seg, ns.overlap, 0.0);
  double floor = 0.0;
  for (const auto& p : out.off_resonance) floor += p.density;
  floor /= static_cast<double>(out.off_resonance.size());

  auto normalise = [](const Record& r) {
    auto s = r.raw;
    for (auto& p : s) p.density /= r.carrier_power;
    return s;
  };
  out.low = normalise(low);
  out.high = normalise(high);
  out.slope = fit_power_law(out.low, ns.fit_lo_hz, ns.fit_hi_hz).exponent;

  auto band_excess = [&](const Record& r) {
    double sum = 0.0;
    for (const auto& p : r.raw) {
      if (p.freq_hz >= ns.fit_lo_hz && p.freq_hz <= ns.fit_hi_hz) sum += p.density - floor;
    }
    return sum / r.carrier_power;
  };
  out.amplitude_ratio = std::sqrt(band_excess(high) / band_excess(low));
  out.expected_ratio = std::pow(ns.high_power_photons / ns.low_power_photons, -0.25);

  // invert the quasi-static transduction sqrt(kappa_c) |a| dw_eff / (kappa_l / 2)
  const double gain = params.kappa_c * ns.low_power_photons / std::pow(0.5 * params.kappa_l(), 2) *
                      std::sqrt(model.calibration_photons / ns.low_power_photons);
  std::vector<SpectrumPoint> freq_noise;
  for (const auto& p : low.raw) freq_noise.push_back({p.freq_hz, (p.density - floor) / gain});
  const auto law = fit_power_law(freq_noise, ns.fit_lo_hz, ns.fit_hi_hz);
  out.rms_hz = units::rad_per_s_to_hz(
      integrated_rms(freq_noise, law, 1.0 / (static_cast<double>(n) * dt)));
  return out;
}

}  // namespace esr

#include "esr/sequences.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace esr {

PulseSpec PulseSpec::calibrated(const ResonatorParams& params, double g,
                                double half_duration, double pi_duration) {
  PulseSpec spec;
  spec.half_duration = half_duration;
  spec.pi_duration = pi_duration;
  spec.half_amplitude =
      rabi_pulse_calibration(params, g, half_duration, std::numbers::pi / 2.0).amplitude;
  spec.pi_amplitude = pi_pulse_calibration(params, g, pi_duration).amplitude;
  return spec;
}

EchoTrain build_echo_train(const ResonatorParams& params, const PulseSpec& spec,
                           double tau, int n_refocus) {
  if (n_refocus < 1) throw std::invalid_argument("echo train: need at least one refocusing pulse");
  if (!(tau > 0.0)) throw std::invalid_argument("echo train: tau must be positive");
  const double width = spec.window_width > 0.0 ? spec.window_width : 6.0 / params.kappa_l();

  EchoTrain train;
  train.pulses.push_back(
      {spec.first_start, spec.half_duration, spec.half_amplitude, spec.half_phase, 0.0});
  const double c0 = spec.first_start + 0.5 * spec.half_duration;
  for (int k = 1; k <= n_refocus; ++k) {
    const double center = c0 + (2.0 * k - 1.0) * tau;
    train.pulses.push_back({center - 0.5 * spec.pi_duration, spec.pi_duration,
                            spec.pi_amplitude, spec.refocus_phase, 0.0});
    const double echo = c0 + 2.0 * k * tau;
    train.windows.push_back({echo - 0.5 * width, echo + 0.5 * width});
  }
  validate_sequence(train.pulses);

  for (std::size_t k = 0; k < train.windows.size(); ++k) {
    const auto& w = train.windows[k];
    if (k > 0 && w.start < train.windows[k - 1].end) {
      throw std::invalid_argument("echo train: echo windows overlap (tau too short)");
    }
    for (const auto& p : train.pulses) {
      if (p.start < w.end && p.end() > w.start) {
        throw std::invalid_argument("echo train: an echo window overlaps a pulse");
      }
    }
  }
  train.t_end = train.windows.back().end + spec.tail;
  return train;
}

namespace {

SequenceResult run_train(const Ensemble& ens, const ResonatorParams& params,
                         const EchoTrain& train, double tau, const char* name,
                         EvolveOptions options) {
  options.protected_windows.insert(options.protected_windows.end(), train.windows.begin(),
                                   train.windows.end());
  auto result = evolve(ens, params, train.pulses, train.t_end, options);
  result.echo_windows = train.windows;
  result.tau = tau;
  result.name = name;
  return result;
}

}  // namespace

SequenceResult hahn_echo(const Ensemble& ens, const ResonatorParams& params, double tau,
                         const PulseSpec& spec, EvolveOptions options) {
  const auto train = build_echo_train(params, spec, tau, 1);
  return run_train(ens, params, train, tau, "hahn", std::move(options));
}

SequenceResult cpmg(const Ensemble& ens, const ResonatorParams& params, double tau,
                    int n_pulses, PhaseScheme scheme, PulseSpec spec, EvolveOptions options) {
  spec.refocus_phase = scheme == PhaseScheme::cpmg ? std::numbers::pi / 2.0 : 0.0;
  const auto train = build_echo_train(params, spec, tau, n_pulses);
  return run_train(ens, params, train, tau, n_pulses == 1 ? "hahn" : "cpmg",
                   std::move(options));
}

namespace {

cplx integrated(const QuadratureTrace& trace, const TimeWindow& window) {
  const auto range = window_samples(trace, window);
  cplx sum(0.0, 0.0);
  for (std::size_t k = range.first; k < range.last; ++k) sum += trace.samples[k];
  return sum * trace.dt;
}

}  // namespace

double echo_area(const QuadratureTrace& trace, const TimeWindow& window, double phase_ref) {
  return (integrated(trace, window) * std::polar(1.0, -phase_ref)).real();
}

double echo_phase(const QuadratureTrace& trace, const TimeWindow& window) {
  return std::arg(integrated(trace, window));
}

std::vector<RabiPoint> rabi_sweep(const Ensemble& ens, const ResonatorParams& params,
                                  const std::vector<double>& amplitudes, double tau,
                                  const PulseSpec& spec, EvolveOptions options) {
  if (!(spec.pi_amplitude > 0.0)) {
    throw std::invalid_argument("rabi_sweep: the reference pi amplitude must be positive");
  }
  options.fast_forward = true;
  const auto reference = hahn_echo(ens, params, tau, spec, options);
  const double phase_ref = echo_phase(reference.trace, reference.echo_windows.front());

  std::vector<RabiPoint> points;
  points.reserve(amplitudes.size());
  for (double amp : amplitudes) {
    if (!(amp >= 0.0)) throw std::invalid_argument("rabi_sweep: negative amplitude");
    PulseSpec s = spec;
    s.pi_amplitude = amp;
    const auto r = hahn_echo(ens, params, tau, s, options);
    points.push_back({amp, echo_area(r.trace, r.echo_windows.front(), phase_ref)});
  }
  return points;
}

double first_rabi_maximum(const std::vector<RabiPoint>& points) {
  for (std::size_t k = 1; k + 1 < points.size(); ++k) {
    const double y0 = std::abs(points[k - 1].area);
    const double y1 = std::abs(points[k].area);
    const double y2 = std::abs(points[k + 1].area);
    if (y1 >= y0 && y1 > y2) {
      const double x0 = points[k - 1].amplitude;
      const double x1 = points[k].amplitude;
      const double x2 = points[k + 1].amplitude;
      // vertex of the parabola through the three points
      const double d0 = (y1 - y0) / (x1 - x0);
      const double d1 = (y2 - y1) / (x2 - x1);
      const double curvature = (d1 - d0) / (x2 - x0);
      if (curvature >= 0.0) return x1;
      return 0.5 * (x0 + x1) - d0 / (2.0 * curvature);
    }
  }
  return 0.0;
}

EchoTrain build_inversion_recovery(const ResonatorParams& params,
                                   const InversionRecoverySpec& spec, double delay) {
  if (!(delay > 0.0)) throw std::invalid_argument("inversion recovery: delays must be positive");
  PulseSpec detection = spec.detection;
  detection.first_start = spec.inversion_duration + delay;
  auto train = build_echo_train(params, detection, spec.detection_tau, 1);
  train.pulses.insert(train.pulses.begin(),
                      Pulse{0.0, spec.inversion_duration, spec.inversion_amplitude, 0.0, 0.0});
  validate_sequence(train.pulses);
  return train;
}

std::vector<RecoveryPoint> inversion_recovery(const Ensemble& ens,
                                              const ResonatorParams& params,
                                              const std::vector<double>& delays,
                                              const InversionRecoverySpec& spec) {
  if (delays.empty()) throw std::invalid_argument("inversion recovery: no delays");
  std::vector<SequenceResult> runs;
  runs.reserve(delays.size());
  for (double delay : delays) {
    const auto train = build_inversion_recovery(params, spec, delay);
    EvolveOptions options;
    options.fast_forward = true;
    options.protected_windows = train.windows;
    // excitation is sampled after the detection pi/2 pulse
    options.excitation_probe_time = train.pulses[1].end() + 10.0 / params.kappa_l();
    auto r = evolve(ens, params, train.pulses, train.t_end, options);
    r.echo_windows = train.windows;
    r.tau = spec.detection_tau;
    r.name = "inversion_recovery";
    runs.push_back(std::move(r));
  }
  const auto longest = std::max_element(delays.begin(), delays.end()) - delays.begin();
  const auto& ref = runs[static_cast<std::size_t>(longest)];
  const double phase_ref = echo_phase(ref.trace, ref.echo_windows.front());

  std::vector<RecoveryPoint> points;
  for (std::size_t k = 0; k < delays.size(); ++k) {
    points.push_back({delays[k], echo_area(runs[k].trace, runs[k].echo_windows.front(), phase_ref)});
  }
  return points;
}

double purcell_t1(double g, double kappa_l) {
  if (!(g > 0.0) || !(kappa_l > 0.0)) throw std::invalid_argument("purcell_t1: positive inputs required");
  return kappa_l / (4.0 * g * g);
}

double purcell_g_from_t1(double T1, double kappa_l) {
  if (!(T1 > 0.0) || !(kappa_l > 0.0)) {
    throw std::invalid_argument("purcell_g_from_t1: positive inputs required");
  }
  return std::sqrt(kappa_l / (4.0 * T1));
}

namespace {

double interpolate_density(const std::vector<std::pair<double, double>>& table, double x) {
  if (x <= table.front().first || x >= table.back().first) {
    if (x == table.front().first) return table.front().second;
    if (x == table.back().first) return table.back().second;
    return 0.0;
  }
  auto it = std::upper_bound(table.begin(), table.end(), x,
                             [](double v, const auto& p) { return v < p.first; });
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double f = (x - lo.first) / (hi.first - lo.first);
  return lo.second + f * (hi.second - lo.second);
}

/// Table restricted to [lo, hi], with interpolated end points.
std::vector<std::pair<double, double>> clip_table(
    const std::vector<std::pair<double, double>>& table, double lo, double hi) {
  std::vector<std::pair<double, double>> out;
  const double a = std::max(lo, table.front().first);
  const double b = std::min(hi, table.back().first);
  if (!(b > a)) return out;
  out.emplace_back(a, interpolate_density(table, a));
  for (const auto& p : table) {
    if (p.first > a && p.first < b) out.push_back(p);
  }
  out.emplace_back(b, interpolate_density(table, b));
  return out;
}

double table_weight(const std::vector<std::pair<double, double>>& table) {
  double total = 0.0;
  for (std::size_t k = 1; k < table.size(); ++k) {
    total += 0.5 * (table[k].second + table[k - 1].second) * (table[k].first - table[k - 1].first);
  }
  return total;
}

}  // namespace

Ensemble field_sweep_ensemble(const FieldSweepSetup& setup, const ResonatorParams& params,
                              const SpinSystem& sys, double B0) {
  if (setup.density.size() < 2) {
    throw std::invalid_argument(
        "field sweep: a spin-density table (shift, weight) is required; there is no "
        "built-in strain model");
  }
  for (std::size_t k = 1; k < setup.density.size(); ++k) {
    if (!(setup.density[k].first > setup.density[k - 1].first) || setup.density[k].second < 0.0 ||
        setup.density[k - 1].second < 0.0) {
      throw std::invalid_argument("field sweep: density shifts must increase, weights be >= 0");
    }
  }
  Ensemble ens;
  ens.T1 = setup.T1;
  ens.T2 = setup.T2;
  ens.sz_eq = setup.sz_eq;
  const double total_weight = table_weight(setup.density);
  if (!(total_weight > 0.0)) return ens;

  const double window = setup.detuning_window > 0.0 ? setup.detuning_window : 5.0 * params.kappa_l();
  const FrequencyBand band{params.omega_r - window - setup.density.back().first,
                           params.omega_r + window - setup.density.front().first};
  const auto levels = diagonalize(build_hamiltonian(sys, B0), B0);
  for (const auto& t : allowed_transitions(levels, sys, setup.min_sx, band)) {
    const double offset = t.frequency - params.omega_r;
    auto clipped = clip_table(setup.density, -window - offset, window - offset);
    if (clipped.size() < 2) continue;
    const double weight = table_weight(clipped);
    if (!(weight > 0.0)) continue;
    for (auto& p : clipped) p.first += offset;

    DetuningDistribution dist;
    dist.shape = DistributionShape::table;
    dist.table = std::move(clipped);
    const double g = setup.g_reference * t.sx_element / setup.sx_reference;
    auto part = discretize_ensemble(dist, setup.spins_per_transition * weight / total_weight,
                                    setup.n_packets, g, setup.sz_eq);
    ens.packets.insert(ens.packets.end(), part.packets.begin(), part.packets.end());
  }
  return ens;
}

std::vector<FieldSweepPoint> field_sweep_echo(const FieldSweepSetup& setup,
                                              const ResonatorParams& params,
                                              const std::vector<double>& fields,
                                              const SpinSystem& sys) {
  if (fields.empty()) throw std::invalid_argument("field sweep: no fields");
  std::vector<FieldSweepPoint> out;
  for (double B0 : fields) {
    const auto ens = field_sweep_ensemble(setup, params, sys, B0);
    FieldSweepPoint point{B0, 0.0, ens.total_spins()};
    if (!ens.packets.empty() && point.spins > 0.0) {
      EvolveOptions options;
      options.fast_forward = true;
      const auto r = hahn_echo(ens, params, setup.tau, setup.pulses, options);
      const auto& w = r.echo_windows.front();
      point.area = echo_area(r.trace, w, echo_phase(r.trace, w));
    }
    out.push_back(point);
  }
  return out;
}

}  // namespace esr

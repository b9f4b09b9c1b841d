#include "esr/detection.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace esr {

QuadratureTrace phase_cycle(const QuadratureTrace& plus, const QuadratureTrace& minus) {
  if (plus.size() != minus.size() || plus.dt != minus.dt) {
    throw std::invalid_argument("phase_cycle: traces differ in length or sampling");
  }
  QuadratureTrace out{plus.dt, std::vector<cplx>(plus.size())};
  for (std::size_t k = 0; k < plus.size(); ++k) {
    out.samples[k] = 0.5 * (plus.samples[k] - minus.samples[k]);
  }
  return out;
}

namespace {

EchoTemplate normalised(SampleRange range, double dt, std::vector<cplx> weights) {
  double energy = 0.0;
  for (const auto& w : weights) energy += std::norm(w);
  energy *= dt;
  if (!(energy > 0.0)) throw std::invalid_argument("template: zero energy inside the window");
  const double scale = 1.0 / std::sqrt(energy);
  for (auto& w : weights) w *= scale;
  return {range, dt, std::move(weights)};
}

}  // namespace

EchoTemplate make_template(const QuadratureTrace& noiseless, const TimeWindow& window) {
  const auto range = window_samples(noiseless, window);
  std::vector<cplx> w(noiseless.samples.begin() + static_cast<std::ptrdiff_t>(range.first),
                      noiseless.samples.begin() + static_cast<std::ptrdiff_t>(range.last));
  return normalised(range, noiseless.dt, std::move(w));
}

EchoTemplate boxcar_template(const QuadratureTrace& trace, const TimeWindow& window,
                             double phase) {
  const auto range = window_samples(trace, window);
  return normalised(range, trace.dt, std::vector<cplx>(range.size(), std::polar(1.0, phase)));
}

EchoTemplate triangular_template(const QuadratureTrace& trace, const TimeWindow& window,
                                 double phase) {
  const auto range = window_samples(trace, window);
  std::vector<cplx> w(range.size());
  const double half = 0.5 * window.width();
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double t = trace.time(range.first + k);
    const double shape = std::max(0.0, 1.0 - std::abs(t - window.center()) / half);
    w[k] = std::polar(shape, phase);
  }
  return normalised(range, trace.dt, std::move(w));
}

double matched_filter(const QuadratureTrace& trace, const EchoTemplate& tmpl) {
  if (tmpl.range.last > trace.size() || tmpl.weights.size() != tmpl.range.size()) {
    throw std::out_of_range("matched_filter: template outside the trace");
  }
  if (std::abs(tmpl.dt - trace.dt) > 1e-12 * trace.dt) {
    throw std::invalid_argument("matched_filter: template sampling differs from the trace");
  }
  cplx sum(0.0, 0.0);
  for (std::size_t k = 0; k < tmpl.weights.size(); ++k) {
    sum += std::conj(tmpl.weights[k]) * trace.samples[tmpl.range.first + k];
  }
  return sum.real() * trace.dt;
}

namespace {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(std::span<const double> xs) {
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

}  // namespace

EchoStatistics echo_statistics(std::vector<double> areas, double repetition_rate,
                               double spins_per_echo, bool phase_cycled) {
  if (areas.size() < 2) throw std::invalid_argument("echo_statistics: need at least two areas");
  if (!(repetition_rate > 0.0)) throw std::invalid_argument("echo_statistics: rate must be positive");
  if (!(spins_per_echo > 0.0)) throw std::invalid_argument("echo_statistics: spins must be positive");
  const auto ms = mean_std(areas);
  if (!(ms.std > 0.0)) throw std::invalid_argument("echo_statistics: zero spread, SNR undefined");
  EchoStatistics s;
  s.areas = std::move(areas);
  s.mean = ms.mean;
  s.std = phase_cycled ? ms.std * std::sqrt(2.0) : ms.std;
  s.snr = s.mean / s.std;
  s.n_min = spins_per_echo / std::abs(s.snr);
  s.sensitivity = s.n_min / std::sqrt(repetition_rate);
  return s;
}

double sensitivity_formula(const ResonatorParams& params, double g, double polarization,
                           double noise_photons, double linewidth) {
  if (!(g > 0.0) || !(polarization > 0.0) || polarization > 1.0 || !(noise_photons > 0.0) ||
      !(linewidth > 0.0) || !(params.kappa_c > 0.0) || !(params.kappa_l() > 0.0)) {
    throw std::invalid_argument("sensitivity_formula: inputs must be positive with p <= 1");
  }
  return params.kappa_l() / (2.0 * g * polarization) *
         std::sqrt(noise_photons * linewidth / params.kappa_c);
}

CpmgSnrReport cpmg_snr(const std::vector<std::vector<double>>& areas) {
  if (areas.size() < 2) throw std::invalid_argument("cpmg_snr: need at least two traces");
  const std::size_t n_echoes = areas.front().size();
  if (n_echoes == 0) throw std::invalid_argument("cpmg_snr: traces hold no echoes");
  for (const auto& row : areas) {
    if (row.size() != n_echoes) throw std::invalid_argument("cpmg_snr: echo count differs");
  }
  CpmgSnrReport report;
  std::vector<double> column(areas.size());
  std::vector<double> partial(areas.size(), 0.0);
  double snr_sum = 0.0;
  for (std::size_t i = 0; i < n_echoes; ++i) {
    for (std::size_t t = 0; t < areas.size(); ++t) {
      column[t] = areas[t][i];
      partial[t] += areas[t][i];
    }
    const auto single = mean_std(column);
    const auto cum = mean_std(partial);
    if (!(single.std > 0.0) || !(cum.std > 0.0)) {
      throw std::invalid_argument("cpmg_snr: zero spread, SNR undefined");
    }
    report.snr_echo.push_back(single.mean / single.std);
    snr_sum += report.snr_echo.back();
    report.snr_uncor.push_back(snr_sum / std::sqrt(static_cast<double>(i + 1)));
    report.snr_cum.push_back(cum.mean / cum.std);
  }
  return report;
}

CpmgSnrReport cpmg_snr(std::span<const QuadratureTrace> traces,
                       std::span<const EchoTemplate> templates) {
  std::vector<std::vector<double>> areas;
  areas.reserve(traces.size());
  for (const auto& trace : traces) {
    std::vector<double> row;
    row.reserve(templates.size());
    for (const auto& t : templates) row.push_back(matched_filter(trace, t));
    areas.push_back(std::move(row));
  }
  return cpmg_snr(areas);
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n && !failed; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
}

namespace {

/// Sorted, merged union of the template supports.
std::vector<SampleRange> support_union(const std::vector<EchoTemplate>& templates) {
  std::vector<SampleRange> ranges;
  for (const auto& t : templates) ranges.push_back(t.range);
  std::sort(ranges.begin(), ranges.end(),
            [](const SampleRange& a, const SampleRange& b) { return a.first < b.first; });
  std::vector<SampleRange> merged;
  for (const auto& r : ranges) {
    if (!merged.empty() && r.first <= merged.back().last) {
      merged.back().last = std::max(merged.back().last, r.last);
    } else {
      merged.push_back(r);
    }
  }
  return merged;
}

struct ShotWorkspace {
  std::vector<cplx> noise;  // full-length buffer, filled on the support only
};

/// Shared per-run flicker data for one of the two phase-cycle signals.
struct FlickerContext {
  const FlickerPlan* plan = nullptr;
  std::vector<cplx> unit_response;  // output for a constant 1 rad/s offset
};

/// Noise-only filtered areas for one shot.
void shot_noise_areas(const MonteCarloSetup& setup, const ResonatorParams& params,
                      const ShotSignal& signal, const FlickerContext& flicker,
                      const std::vector<SampleRange>& support, std::uint64_t shot,
                      ShotWorkspace& ws, std::vector<double>& out) {
  const auto& trace = *signal.trace;
  // only the support is ever written or read, so clearing it is enough
  if (ws.noise.size() != trace.size()) ws.noise.assign(trace.size(), cplx(0.0, 0.0));
  for (const auto& r : support) {
    std::fill(ws.noise.begin() + static_cast<std::ptrdiff_t>(r.first),
              ws.noise.begin() + static_cast<std::ptrdiff_t>(r.last), cplx(0.0, 0.0));
  }
  const auto& model = setup.noise;
  if (flicker.plan != nullptr) {
    const double offset = flicker.plan->offsets[shot];
    for (const auto& r : support) {
      for (std::size_t k = r.first; k < r.last; ++k) ws.noise[k] = offset * flicker.unit_response[k];
    }
    if (flicker.plan->in_trace_rms > 0.0) {
      ShotRng rng(model.seed, shot, 1);
      const auto dw = synthesize_flicker(trace.size(), trace.dt, flicker.plan->in_trace_rms,
                                         model.flicker_exponent, rng);
      const auto dx = flicker_response(*signal.cavity_field, trace.dt, dw, params,
                                       model.calibration_photons);
      for (const auto& r : support) {
        for (std::size_t k = r.first; k < r.last; ++k) ws.noise[k] += dx[k];
      }
    }
  }
  if (model.total() > 0.0) {
    ShotRng rng(model.seed, shot, 0);
    const double sigma = std::sqrt(model.total() / (2.0 * trace.dt));
    for (const auto& r : support) {
      for (std::size_t k = r.first; k < r.last; ++k) {
        const double re = rng.normal();
        const double im = rng.normal();
        ws.noise[k] += cplx(sigma * re, sigma * im);
      }
    }
  }
  out.resize(setup.templates.size());
  for (std::size_t t = 0; t < setup.templates.size(); ++t) {
    const auto& tmpl = setup.templates[t];
    cplx sum(0.0, 0.0);
    for (std::size_t k = 0; k < tmpl.weights.size(); ++k) {
      sum += std::conj(tmpl.weights[k]) * ws.noise[tmpl.range.first + k];
    }
    out[t] = sum.real() * trace.dt;
  }
}

void check_signal(const ShotSignal& s, const MonteCarloSetup& setup) {
  if (s.trace == nullptr) throw std::invalid_argument("monte_carlo: missing signal trace");
  if (setup.noise.freq_noise_rms > 0.0 &&
      (s.cavity_field == nullptr || s.cavity_field->size() != s.trace->size())) {
    throw std::invalid_argument("monte_carlo: frequency noise needs the cavity field record");
  }
  for (const auto& t : setup.templates) {
    if (t.range.last > s.trace->size() || std::abs(t.dt - s.trace->dt) > 1e-12 * t.dt) {
      throw std::invalid_argument("monte_carlo: template does not match the trace");
    }
  }
}

}  // namespace

std::vector<std::vector<double>> monte_carlo_areas(const MonteCarloSetup& setup,
                                                   const ResonatorParams& params) {
  setup.noise.validate();
  if (setup.templates.empty()) throw std::invalid_argument("monte_carlo: no templates");
  const bool cycled = setup.minus.trace != nullptr;
  check_signal(setup.plus, setup);
  if (cycled) {
    check_signal(setup.minus, setup);
    if (setup.minus.trace->size() != setup.plus.trace->size()) {
      throw std::invalid_argument("monte_carlo: phase-cycle traces differ in length");
    }
  }
  const auto support = support_union(setup.templates);

  std::vector<double> signal_area(setup.templates.size());
  for (std::size_t t = 0; t < setup.templates.size(); ++t) {
    const double plus = matched_filter(*setup.plus.trace, setup.templates[t]);
    signal_area[t] =
        cycled ? 0.5 * (plus - matched_filter(*setup.minus.trace, setup.templates[t])) : plus;
  }

  FlickerPlan plan;
  FlickerContext flicker_plus;
  FlickerContext flicker_minus;
  if (setup.noise.freq_noise_rms > 0.0) {
    const auto n = setup.plus.trace->size();
    plan = make_flicker_plan(setup.noise, cycled ? 2 * setup.n_traces : setup.n_traces, n,
                             setup.plus.trace->dt);
    const std::vector<double> unit(n, 1.0);
    auto context = [&](const ShotSignal& s) {
      return FlickerContext{&plan, flicker_response(*s.cavity_field, s.trace->dt, unit, params,
                                                    setup.noise.calibration_photons)};
    };
    flicker_plus = context(setup.plus);
    if (cycled) flicker_minus = context(setup.minus);
  }

  std::vector<std::vector<double>> result(setup.n_traces);
  parallel_for(setup.n_traces, setup.threads, [&](std::size_t i) {
    ShotWorkspace ws;
    std::vector<double> a;
    std::vector<double> b;
    auto& row = result[i];
    if (cycled) {
      shot_noise_areas(setup, params, setup.plus, flicker_plus, support, 2 * i, ws, a);
      shot_noise_areas(setup, params, setup.minus, flicker_minus, support, 2 * i + 1, ws, b);
      row.resize(a.size());
      for (std::size_t t = 0; t < a.size(); ++t) row[t] = signal_area[t] + 0.5 * (a[t] - b[t]);
    } else {
      shot_noise_areas(setup, params, setup.plus, flicker_plus, support, i, ws, a);
      row.resize(a.size());
      for (std::size_t t = 0; t < a.size(); ++t) row[t] = signal_area[t] + a[t];
    }
  });
  return result;
}

}  // namespace esr

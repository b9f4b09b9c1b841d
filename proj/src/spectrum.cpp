#include "esr/detection.hpp"

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace esr {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

class RealForwardFft {
 public:
  explicit RealForwardFft(std::size_t n)
      : n_(n),
        in_(static_cast<double*>(fftw_malloc(sizeof(double) * n))),
        out_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)))) {
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_.get(), out_.get(), FFTW_ESTIMATE);
    if (plan_ == nullptr) throw std::runtime_error("welch: FFT planning failed");
  }
  ~RealForwardFft() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  RealForwardFft(const RealForwardFft&) = delete;
  RealForwardFft& operator=(const RealForwardFft&) = delete;

  double* input() { return in_.get(); }
  double power(std::size_t k) const { return out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1]; }
  void execute() { fftw_execute(plan_); }
  std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  std::unique_ptr<double[], FftwFree> in_;
  std::unique_ptr<fftw_complex[], FftwFree> out_;
  fftw_plan plan_ = nullptr;
};

}  // namespace

std::vector<SpectrumPoint> welch_psd(std::span<const double> x, double dt,
                                     std::size_t segment_length, double overlap) {
  if (!(dt > 0.0)) throw std::invalid_argument("welch: dt must be positive");
  if (segment_length < 8) throw std::invalid_argument("welch: segment shorter than 8 samples");
  if (x.size() < 2 * segment_length) {
    throw std::invalid_argument("welch: record must hold at least two segments");
  }
  if (!(overlap >= 0.0 && overlap < 1.0)) throw std::invalid_argument("welch: overlap in [0, 1)");

  const std::size_t n = segment_length;
  const auto hop = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(static_cast<double>(n) * (1.0 - overlap))));
  std::vector<double> window(n);
  double window_power = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    window[k] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) /
                                     static_cast<double>(n));
    window_power += window[k] * window[k];
  }

  RealForwardFft fft(n);
  const std::size_t bins = n / 2 + 1;
  std::vector<double> acc(bins, 0.0);
  std::size_t segments = 0;
  for (std::size_t start = 0; start + n <= x.size(); start += hop) {
    double mean = 0.0;
    for (std::size_t k = 0; k < n; ++k) mean += x[start + k];
    mean /= static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) fft.input()[k] = (x[start + k] - mean) * window[k];
    fft.execute();
    for (std::size_t k = 1; k < bins; ++k) acc[k] += fft.power(k);
    ++segments;
  }

  const double df = 1.0 / (static_cast<double>(n) * dt);
  std::vector<SpectrumPoint> out;
  out.reserve(bins - 1);
  for (std::size_t k = 1; k < bins; ++k) {
    const bool nyquist = (n % 2 == 0) && k == n / 2;
    const double one_sided = nyquist ? 1.0 : 2.0;
    out.push_back({static_cast<double>(k) * df,
                   one_sided * acc[k] * dt / (window_power * static_cast<double>(segments))});
  }
  return out;
}

std::vector<SpectrumPoint> quadrature_noise_spectrum(const QuadratureTrace& trace,
                                                     std::size_t segment_length, double overlap,
                                                     std::optional<double> phase_ref) {
  if (segment_length > trace.size() / 2) {
    throw std::invalid_argument("quadrature_noise_spectrum: segment too long for the trace");
  }
  double phase = 0.0;
  if (phase_ref) {
    phase = *phase_ref;
  } else {
    cplx mean(0.0, 0.0);
    for (const auto& s : trace.samples) mean += s;
    if (std::abs(mean) > 0.0) phase = std::arg(mean);
  }
  const cplx rot = std::polar(1.0, -phase);
  std::vector<double> q(trace.size());
  for (std::size_t k = 0; k < q.size(); ++k) q[k] = (rot * trace.samples[k]).imag();
  return welch_psd(q, trace.dt, segment_length, overlap);
}

double PowerLaw::density_at(double f) const {
  return std::pow(10.0, log10_amplitude) * std::pow(f, exponent);
}

PowerLaw fit_power_law(std::span<const SpectrumPoint> spectrum, double f_lo, double f_hi) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t n = 0;
  for (const auto& p : spectrum) {
    if (p.freq_hz < f_lo || p.freq_hz > f_hi || !(p.density > 0.0)) continue;
    const double lx = std::log10(p.freq_hz);
    const double ly = std::log10(p.density);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 3) throw std::invalid_argument("fit_power_law: fewer than 3 bins in range");
  const double dn = static_cast<double>(n);
  const double slope = (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
  return {slope, (sy - slope * sx) / dn};
}

double integrated_rms(std::span<const SpectrumPoint> spectrum, const PowerLaw& low_end,
                      double f_floor) {
  if (spectrum.size() < 2) throw std::invalid_argument("integrated_rms: spectrum too short");
  const double df = spectrum[1].freq_hz - spectrum[0].freq_hz;
  double var = 0.0;
  for (const auto& p : spectrum) var += p.density * df;
  const double f_edge = spectrum.front().freq_hz - 0.5 * df;
  if (f_floor > 0.0 && f_floor < f_edge) {
    const double amp = std::pow(10.0, low_end.log10_amplitude);
    const double e = low_end.exponent + 1.0;
    var += std::abs(e) < 1e-12 ? amp * std::log(f_edge / f_floor)
                               : amp * (std::pow(f_edge, e) - std::pow(f_floor, e)) / e;
  }
  return std::sqrt(var);
}

}  // namespace esr

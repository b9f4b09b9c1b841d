#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace esr {

/// Demodulated output record I + iQ in sqrt(photons/s), uniformly sampled.
struct QuadratureTrace {
  double dt = 0.0;
  std::vector<std::complex<double>> samples;

  std::size_t size() const { return samples.size(); }
  double duration() const { return dt * static_cast<double>(samples.size()); }
  double time(std::size_t k) const { return dt * static_cast<double>(k); }
  /// Throws std::invalid_argument on non-positive dt or non-finite samples.
  void validate() const;
};

/// Closed time interval [start, end] in seconds.
struct TimeWindow {
  double start = 0.0;
  double end = 0.0;

  double center() const { return 0.5 * (start + end); }
  double width() const { return end - start; }
};

/// Sample indices covered by a window, half-open [first, last).
struct SampleRange {
  std::size_t first = 0;
  std::size_t last = 0;
  std::size_t size() const { return last - first; }
};

/// Throws std::out_of_range if the window leaves the trace.
SampleRange window_samples(const QuadratureTrace& trace, const TimeWindow& window);

}  // namespace esr

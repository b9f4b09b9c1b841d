#include "esr/detection.hpp"
#include "esr/sequences.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>

using namespace esr;

namespace {

constexpr double pi = std::numbers::pi;

QuadratureTrace gaussian_pulse_trace(std::size_t n, double dt, double t0, double width,
                                     double amp) {
  QuadratureTrace t{dt, std::vector<cplx>(n)};
  for (std::size_t k = 0; k < n; ++k) {
    const double x = (t.time(k) - t0) / width;
    t.samples[k] = amp * std::exp(-0.5 * x * x) * std::polar(1.0, 0.3);
  }
  return t;
}

double sample_std(const std::vector<double>& v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

TEST_CASE("amplifier noise levels") {
  CHECK(amplifier_noise_photons(AmplifierMode::jpa_degenerate) == 0.5);
  CHECK(amplifier_noise_photons(AmplifierMode::jpa_phase_preserving) == 1.0);
  CHECK(amplifier_noise_photons(AmplifierMode::hemt) == 20.0);
  CHECK(amplifier_noise_photons(AmplifierMode::jpa_degenerate, 0.2) == doctest::Approx(0.7));
  NoiseModel m;
  m.include_vacuum = true;
  CHECK(m.total() == 1.0);
  m.n_photons = -1.0;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}

TEST_CASE("shot streams are reproducible and distinct") {
  ShotRng a(5, 3, 0), b(5, 3, 0), c(5, 4, 0), d(5, 3, 1);
  const double x = a.normal();
  CHECK(x == b.normal());
  CHECK(x != c.normal());
  CHECK(x != d.normal());
}

TEST_CASE("same seed gives bit-identical noisy traces") {
  const auto p = ResonatorParams::reference_preset();
  const auto clean = gaussian_pulse_trace(4096, 1e-8, 20e-6, 2e-6, 10.0);
  std::vector<cplx> field(clean.size(), cplx(3.0, 0.0));
  NoiseModel m;
  m.freq_noise_rms = 2 * pi * 7e3;
  m.seed = 42;
  const auto a = add_noise(clean, m, p, field, 7);
  const auto b = add_noise(clean, m, p, field, 7);
  const auto c = add_noise(clean, m, p, field, 8);
  CHECK(a.samples == b.samples);
  CHECK(a.samples != c.samples);
}

TEST_CASE("white noise through a unit-energy filter has variance n / 2") {
  const auto p = ResonatorParams::reference_preset();
  const auto clean = gaussian_pulse_trace(2000, 1e-8, 10e-6, 1.5e-6, 0.0);
  const auto shape = gaussian_pulse_trace(2000, 1e-8, 10e-6, 1.5e-6, 1.0);
  const auto tmpl = make_template(shape, {2e-6, 18e-6});
  NoiseModel m;
  m.n_photons = 2.0;
  std::vector<double> areas;
  for (std::uint64_t s = 0; s < 4000; ++s) areas.push_back(matched_filter(add_noise(clean, m, p, {}, s), tmpl));
  CHECK(sample_std(areas) == doctest::Approx(1.0).epsilon(0.04));
}

TEST_CASE("templates have unit energy and the matched filter recovers the echo energy") {
  const auto shape = gaussian_pulse_trace(2000, 1e-8, 10e-6, 1.5e-6, 4.0);
  const TimeWindow w{2e-6, 18e-6};
  for (const auto& t : {make_template(shape, w), boxcar_template(shape, w, 0.3),
                        triangular_template(shape, w, 0.3)}) {
    double e = 0.0;
    for (const auto& h : t.weights) e += std::norm(h) * t.dt;
    CHECK(e == doctest::Approx(1.0).epsilon(1e-12));
  }
  double energy = 0.0;
  for (const auto& x : shape.samples) energy += std::norm(x) * shape.dt;
  CHECK(matched_filter(shape, make_template(shape, w)) == doctest::Approx(std::sqrt(energy)).epsilon(1e-6));
  CHECK(matched_filter(shape, boxcar_template(shape, w, 0.3)) < matched_filter(shape, make_template(shape, w)));
}

TEST_CASE("phase cycle halves the difference") {
  QuadratureTrace a{1.0, {cplx(3, 1), cplx(1, 1)}};
  QuadratureTrace b{1.0, {cplx(-1, 1), cplx(1, -1)}};
  const auto c = phase_cycle(a, b);
  CHECK(c.samples[0] == cplx(2, 0));
  CHECK(c.samples[1] == cplx(0, 1));
  QuadratureTrace d{1.0, {cplx(1, 0)}};
  CHECK_THROWS(phase_cycle(a, d));
}

TEST_CASE("echo statistics and the pipeline arithmetic") {
  const auto s = echo_statistics({0.0, 2.0}, 16.0, 260.0 / std::sqrt(2.0));
  CHECK(s.mean == 1.0);
  CHECK(s.std == doctest::Approx(std::sqrt(2.0)));
  CHECK(s.n_min == doctest::Approx(260.0));
  CHECK(s.sensitivity == doctest::Approx(65.0).epsilon(1e-14));
  const auto cycled = echo_statistics({0.0, 2.0}, 16.0, 100.0, true);
  CHECK(cycled.std == doctest::Approx(2.0));
  CHECK_THROWS(echo_statistics({1.0}, 16.0, 1.0));
  CHECK_THROWS(echo_statistics({1.0, 1.0}, 16.0, 1.0));
}

TEST_CASE("single-shot sensitivity formula at the preset") {
  // frozen value: kappa_l / (2 g p) sqrt(n w / kappa_c) with g/2pi = 448.19 Hz
  const auto p = ResonatorParams::reference_preset();
  const double value = sensitivity_formula(p, 2 * pi * 448.19, 1.0 - std::exp(-3.0), 0.5, 5.9e5);
  CHECK(value == doctest::Approx(102.69).epsilon(1e-3));
  CHECK(sensitivity_formula(p, 2 * pi * 448.19, 1.0, 2.0, 5.9e5) /
            sensitivity_formula(p, 2 * pi * 448.19, 1.0, 0.5, 5.9e5) ==
        doctest::Approx(2.0));
}

TEST_CASE("CPMG SNR: independent echoes agree, common-mode noise saturates") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  std::vector<std::vector<double>> indep, common;
  for (int t = 0; t < 4000; ++t) {
    std::vector<double> a, b;
    const double shared = n01(rng);
    for (int e = 0; e < 50; ++e) {
      a.push_back(1.0 + n01(rng));
      b.push_back(1.0 + 0.3 * n01(rng) + shared);
    }
    indep.push_back(a);
    common.push_back(b);
  }
  const auto ri = cpmg_snr(indep);
  for (std::size_t i = 0; i < 50; ++i) CHECK(std::abs(ri.snr_cum[i] / ri.snr_uncor[i] - 1.0) < 0.05);
  CHECK(ri.snr_uncor.back() == doctest::Approx(std::sqrt(50.0)).epsilon(0.05));
  const auto rc = cpmg_snr(common);
  CHECK(rc.snr_cum.back() < 0.5 * rc.snr_uncor.back());
  CHECK_THROWS(cpmg_snr(std::vector<std::vector<double>>{{1.0}}));
}

TEST_CASE("parallel_for covers every index and rethrows") {
  std::vector<int> hits(100, 0);
  parallel_for(100, 4, [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                    if (i == 5) throw std::runtime_error("boom");
                  }),
                  std::runtime_error);
}

TEST_CASE("flicker synthesis: variance and band power") {
  double total = 0.0;
  const int reps = 200;
  for (int r = 0; r < reps; ++r) {
    ShotRng rng(9, static_cast<std::uint64_t>(r), 1);
    const auto x = synthesize_flicker(1024, 1e-3, 2.0, 1.0, rng);
    for (double v : x) total += v * v;
  }
  CHECK(total / (reps * 1024.0) == doctest::Approx(4.0).epsilon(0.05));
  CHECK(flicker_band_power(1.0, 1.0, 10.0) == doctest::Approx(std::log(10.0)));
  CHECK(flicker_band_power(2.0, 1.0, 2.0) == doctest::Approx(0.5));
  CHECK(flicker_band_power(1.0, 2.0, 1.0) == 0.0);
}

TEST_CASE("flicker plan splits the configured variance across timescales") {
  NoiseModel m;
  m.freq_noise_rms = 100.0;
  CHECK(make_flicker_plan(m, 8, 1000, 1e-8).in_trace_rms == 100.0);
  m.shot_interval = 0.0625;
  const auto plan = make_flicker_plan(m, 4096, 1000, 1e-8);
  REQUIRE(plan.offsets.size() == 4096);
  CHECK(plan.in_trace_rms < 100.0);
  const double v = sample_std(plan.offsets);
  // offsets and in-trace parts add up to the configured variance
  CHECK(v * v + plan.in_trace_rms * plan.in_trace_rms == doctest::Approx(1e4).epsilon(0.1));
  m.shot_interval = 1e-6;
  CHECK_THROWS(make_flicker_plan(m, 8, 1000, 1e-8));
}

TEST_CASE("frequency jitter on a steady carrier rotates the output quadrature") {
  const auto p = ResonatorParams::reference_preset();
  const std::size_t n = 20000;
  std::vector<cplx> field(n, cplx(10.0, 0.0));
  std::vector<double> dw(n, 1e3);
  const auto out = flicker_response(field, 1e-8, dw, p, 100.0);
  // quasi-static limit: da = -i dw (n_cal / |a|^2)^(1/4) a / (kappa_l / 2)
  const cplx expected = -cplx(0, 1) * 1e3 * std::pow(100.0 / 100.0, 0.25) * 10.0 /
                        (0.5 * p.kappa_l()) * std::sqrt(p.kappa_c);
  CHECK(std::abs(out.back() - expected) < 1e-6 * std::abs(expected));
}

TEST_CASE("Monte Carlo areas do not depend on the thread count") {
  const auto p = ResonatorParams::reference_preset();
  const auto clean = gaussian_pulse_trace(3000, 1e-8, 15e-6, 1.5e-6, 2.0);
  std::vector<cplx> field(clean.size(), cplx(1.0, 0.0));
  MonteCarloSetup mc;
  mc.plus = {&clean, &field};
  mc.minus = {&clean, &field};
  mc.templates = {make_template(clean, {5e-6, 25e-6})};
  mc.noise.freq_noise_rms = 2 * pi * 7e3;
  mc.noise.shot_interval = 0.0625;
  mc.n_traces = 64;
  mc.threads = 1;
  const auto a = monte_carlo_areas(mc, p);
  mc.threads = 3;
  const auto b = monte_carlo_areas(mc, p);
  CHECK(a == b);
}

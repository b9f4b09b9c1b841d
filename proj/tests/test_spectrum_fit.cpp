#include "esr/detection.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace esr;

TEST_CASE("Welch density integrates to the variance") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n01;
  std::vector<double> x(1 << 16);
  for (std::size_t k = 0; k < x.size(); ++k) {
    x[k] = 3.0 * n01(rng) + 2.0 * std::sin(2 * std::numbers::pi * 50.0 * k * 1e-3);
  }
  const auto psd = welch_psd(x, 1e-3, 4096, 0.5);
  double integral = 0.0;
  const double df = psd[1].freq_hz - psd[0].freq_hz;
  for (const auto& pt : psd) integral += pt.density * df;
  CHECK(integral == doctest::Approx(9.0 + 2.0).epsilon(0.02));
  const auto peak = std::max_element(psd.begin(), psd.end(),
                                     [](auto& a, auto& b) { return a.density < b.density; });
  CHECK(peak->freq_hz == doctest::Approx(50.0).epsilon(0.01));
  CHECK_THROWS(welch_psd(x, 1e-3, 4096, 1.0));
}

TEST_CASE("power-law fit recovers a synthesised 1/f slope") {
  ShotRng rng(1, 0, 1);
  const auto x = synthesize_flicker(1 << 18, 1e-3, 1.0, 1.0, rng);
  const auto psd = welch_psd(x, 1e-3, 16384, 0.5);
  const auto law = fit_power_law(psd, 1.0, 100.0);
  CHECK(law.exponent == doctest::Approx(-1.0).epsilon(0.1));
  CHECK(integrated_rms(psd, law, 1.0 / (262144 * 1e-3)) == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("quadrature noise spectrum picks the component orthogonal to the carrier") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  QuadratureTrace t{1e-3, std::vector<cplx>(1 << 14)};
  const cplx carrier = std::polar(5.0, 0.7);
  for (auto& s : t.samples) s = carrier * cplx(1.0 + 0.01 * n01(rng), 0.2 * n01(rng));
  const auto spec = quadrature_noise_spectrum(t, 1024, 0.5);
  double integral = 0.0;
  for (const auto& p : spec) integral += p.density * (spec[1].freq_hz - spec[0].freq_hz);
  CHECK(std::sqrt(integral) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("fits recover exact model parameters") {
  std::vector<double> xs, ys;
  for (int i = 0; i < 20; ++i) {
    xs.push_back(0.2e-3 * (i + 1));
    ys.push_back(evaluate_model(FitModel::decay, std::vector<double>{0.9, 1.65e-3}, xs.back()));
  }
  auto fit = fit_curve(xs, ys, FitModel::decay);
  CHECK(fit.params[1] == doctest::Approx(1.65e-3).epsilon(1e-8));
  CHECK(fit.residual_rms < 1e-10);

  ys.clear();
  for (double x : xs) {
    ys.push_back(evaluate_model(FitModel::inversion_recovery, std::vector<double>{0.8, 0.95, 1.86e-3}, x));
  }
  fit = fit_curve(xs, ys, FitModel::inversion_recovery);
  CHECK(fit.params[2] == doctest::Approx(1.86e-3).epsilon(1e-8));

  ys.clear();
  for (double x : xs) ys.push_back(evaluate_model(FitModel::rabi, std::vector<double>{0.1, 1.0, 2.3e-3}, x));
  fit = fit_curve(xs, ys, FitModel::rabi, {}, std::vector<double>{0.0, 1.0, 2.0e-3});
  CHECK(fit.params[2] == doctest::Approx(2.3e-3).epsilon(1e-6));
}

TEST_CASE("fit error bars follow the point sigmas") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n01;
  std::vector<double> xs, ys, sig;
  for (int i = 0; i < 30; ++i) {
    xs.push_back(0.1e-3 * (i + 1));
    ys.push_back(std::exp(-xs.back() / 1e-3) + 0.01 * n01(rng));
    sig.push_back(0.01);
  }
  const auto fit = fit_curve(xs, ys, FitModel::decay, sig);
  CHECK(fit.errors[1] > 0.0);
  CHECK(std::abs(fit.params[1] - 1e-3) < 4.0 * fit.errors[1]);
}

TEST_CASE("fit failures are reported") {
  std::vector<double> few{1.0, 2.0};
  CHECK_THROWS_AS(fit_curve(few, few, FitModel::inversion_recovery), std::invalid_argument);
  std::vector<double> xs{1.0, 2.0, 3.0, 4.0, 5.0};
  std::vector<double> bad{1.0, std::nan(""), 0.3, 0.2, 0.1};
  CHECK_THROWS(fit_curve(xs, bad, FitModel::decay));
  std::vector<double> flat(5, 0.0);
  CHECK_THROWS_AS(fit_curve(xs, flat, FitModel::decay), FitError);
}

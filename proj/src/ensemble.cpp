#include "esr/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace esr {

namespace {

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double standard_normal_quantile(double u) {
  double lo = -40.0;
  double hi = 40.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (standard_normal_cdf(mid) < u) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

bool is_finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

}  // namespace

// --- Ensemble ------------------------------------------------------------

double Ensemble::total_spins() const {
  double n = 0.0;
  for (const auto& p : packets) n += p.count;
  return n;
}

void Ensemble::validate() const {
  if (!(T2 > 0.0)) throw std::invalid_argument("ensemble: T2 must be positive");
  if (!(T1 >= 0.5 * T2)) throw std::invalid_argument("ensemble: T1 must be >= T2/2");
  if (!(sz_eq >= -1.0 && sz_eq <= 1.0)) {
    throw std::invalid_argument("ensemble: sz_eq must lie in [-1, 1]");
  }
  for (std::size_t k = 0; k < packets.size(); ++k) {
    const auto& p = packets[k];
    if (!is_finite_nonneg(p.count)) {
      throw std::invalid_argument("ensemble: packet " + std::to_string(k) +
                                  " has invalid count");
    }
    if (!std::isfinite(p.detuning) || !std::isfinite(p.g)) {
      throw std::invalid_argument("ensemble: packet " + std::to_string(k) +
                                  " has non-finite detuning or coupling");
    }
    const double norm2 = p.sx * p.sx + p.sy * p.sy + p.sz * p.sz;
    if (!(norm2 <= 1.0 + 1e-9)) {
      throw std::invalid_argument("ensemble: packet " + std::to_string(k) +
                                  " Bloch vector exceeds unit length");
    }
  }
}

double equilibrium_polarization(double t_rep, double T1) {
  if (!(t_rep > 0.0) || !(T1 > 0.0)) {
    throw std::invalid_argument("equilibrium_polarization: positive times required");
  }
  return 1.0 - std::exp(-t_rep / T1);
}

// --- DetuningDistribution -------------------------------------------------

void DetuningDistribution::validate() const {
  if (shape == DistributionShape::table) {
    if (table.size() < 2) {
      throw std::invalid_argument("detuning table needs at least two points");
    }
    double total = 0.0;
    for (std::size_t k = 0; k < table.size(); ++k) {
      if (!std::isfinite(table[k].first) || !is_finite_nonneg(table[k].second)) {
        throw std::invalid_argument("detuning table: non-finite or negative entry");
      }
      if (k > 0) {
        if (!(table[k].first > table[k - 1].first)) {
          throw std::invalid_argument("detuning table: detunings must increase");
        }
        total += 0.5 * (table[k].second + table[k - 1].second) *
                 (table[k].first - table[k - 1].first);
      }
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
      throw std::invalid_argument("detuning table: not normalizable (zero total weight)");
    }
    return;
  }
  if (!(fwhm > 0.0)) throw std::invalid_argument("distribution width must be positive");
  if (!std::isfinite(center)) throw std::invalid_argument("distribution center not finite");
  if (shape == DistributionShape::lorentzian && !(lorentzian_cutoff > 0.0)) {
    throw std::invalid_argument("lorentzian cutoff must be positive");
  }
}

double DetuningDistribution::quantile(double u) const {
  switch (shape) {
    case DistributionShape::gaussian: {
      const double sigma = fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
      return center + sigma * standard_normal_quantile(u);
    }
    case DistributionShape::lorentzian: {
      const double hw = 0.5 * fwhm;
      // truncated Cauchy: map u into [F(-c), F(c)]
      const double edge = std::atan(lorentzian_cutoff * fwhm / hw) / std::numbers::pi;
      const double v = -edge + 2.0 * edge * u;
      return center + hw * std::tan(std::numbers::pi * v);
    }
    case DistributionShape::table: {
      std::vector<double> cdf(table.size(), 0.0);
      for (std::size_t k = 1; k < table.size(); ++k) {
        cdf[k] = cdf[k - 1] + 0.5 * (table[k].second + table[k - 1].second) *
                                  (table[k].first - table[k - 1].first);
      }
      const double target = u * cdf.back();
      auto it = std::lower_bound(cdf.begin() + 1, cdf.end(), target);
      const std::size_t k = std::min<std::size_t>(
          static_cast<std::size_t>(it - cdf.begin()), table.size() - 1);
      const double x0 = table[k - 1].first;
      const double h = table[k].first - x0;
      const double d0 = table[k - 1].second;
      const double d1 = table[k].second;
      const double need = target - cdf[k - 1];
      // need = d0 s + (d1 - d0) s^2 / (2h)
      const double a = 0.5 * (d1 - d0) / h;
      double s = 0.0;
      if (std::abs(a) < 1e-300 || std::abs(a * h) < 1e-12 * std::max(d0, 1e-300)) {
        s = d0 > 0.0 ? need / d0 : 0.5 * h;
      } else {
        const double disc = std::max(d0 * d0 + 4.0 * a * need, 0.0);
        s = (-d0 + std::sqrt(disc)) / (2.0 * a);
      }
      return x0 + std::clamp(s, 0.0, h);
    }
  }
  return center;
}

Ensemble discretize_ensemble(const DetuningDistribution& dist, double n_total,
                             int n_packets, double g, double sz_eq) {
  dist.validate();
  if (!(n_total > 0.0) || !std::isfinite(n_total)) {
    throw std::invalid_argument("discretize_ensemble: N_total must be positive");
  }
  if (n_packets < 1 || (n_packets > 1 && n_packets % 2 == 0)) {
    throw std::invalid_argument("discretize_ensemble: n_packets must be 1 or odd");
  }
  Ensemble ens;
  ens.sz_eq = sz_eq;
  ens.packets.resize(static_cast<std::size_t>(n_packets));
  const double weight = n_total / n_packets;
  double assigned = 0.0;
  for (int k = 0; k < n_packets; ++k) {
    auto& p = ens.packets[static_cast<std::size_t>(k)];
    if (n_packets == 1) {
      p.detuning = dist.shape == DistributionShape::table ? dist.quantile(0.5) : dist.center;
    } else {
      p.detuning = dist.quantile((k + 0.5) / n_packets);
    }
    p.g = g;
    p.count = k + 1 < n_packets ? weight : n_total - assigned;
    assigned += p.count;
    p.sx = 0.0;
    p.sy = 0.0;
    p.sz = sz_eq;
  }
  return ens;
}

// --- Integration ----------------------------------------------------------

NumericalError::NumericalError(std::size_t step, double time)
    : std::runtime_error("non-finite state at integration step " + std::to_string(step) +
                         " (t = " + std::to_string(time) + " s)"),
      step_(step),
      time_(time) {}

void QuadratureTrace::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("trace: dt must be positive");
  for (const auto& s : samples) {
    if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) {
      throw std::invalid_argument("trace: non-finite sample");
    }
  }
}

SampleRange window_samples(const QuadratureTrace& trace, const TimeWindow& window) {
  if (!(window.end > window.start) || window.start < -1e-12 * trace.dt) {
    throw std::out_of_range("window outside trace");
  }
  const auto first = static_cast<std::size_t>(std::ceil(window.start / trace.dt - 1e-9));
  const auto last = static_cast<std::size_t>(std::floor(window.end / trace.dt + 1e-9)) + 1;
  if (last > trace.size() || first >= last) {
    throw std::out_of_range("window outside trace");
  }
  return {first, last};
}

double default_step(const ResonatorParams& params, const Ensemble& ens) {
  double bound = 0.01 / params.kappa_l();
  double max_det = 0.0;
  for (const auto& p : ens.packets) max_det = std::max(max_det, std::abs(p.detuning));
  if (max_det > 0.0) bound = std::min(bound, 0.01 / max_det);
  const double decade = std::pow(10.0, std::floor(std::log10(bound)));
  for (double m : {5.0, 2.0, 1.0}) {
    if (m * decade <= bound * (1.0 + 1e-12)) return m * decade;
  }
  return decade;
}

namespace {

struct PacketArrays {
  std::vector<double> det, g, count, cg, smr, smi, sz;
};

PacketArrays to_arrays(const Ensemble& ens) {
  PacketArrays s;
  const auto n = ens.packets.size();
  for (auto* v : {&s.det, &s.g, &s.count, &s.cg, &s.smr, &s.smi, &s.sz}) v->resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto& p = ens.packets[j];
    s.det[j] = p.detuning;
    s.g[j] = p.g;
    s.count[j] = p.count;
    s.cg[j] = p.count * p.g;
    s.smr[j] = 0.5 * p.sx;
    s.smi[j] = -0.5 * p.sy;
    s.sz[j] = p.sz;
  }
  return s;
}

void from_arrays(const PacketArrays& s, Ensemble& ens) {
  for (std::size_t j = 0; j < ens.packets.size(); ++j) {
    auto& p = ens.packets[j];
    p.sx = 2.0 * s.smr[j];
    p.sy = -2.0 * s.smi[j];
    p.sz = s.sz[j];
  }
}

double excited_from_arrays(const PacketArrays& s) {
  double total = 0.0;
  for (std::size_t j = 0; j < s.det.size(); ++j) {
    total += s.count[j] * 2.0 * std::hypot(s.smr[j], s.smi[j]);
  }
  return total;
}

void free_evolve_arrays(PacketArrays& s, double duration, double T1, double T2,
                        double sz_eq) {
  const double decay2 = std::isinf(T2) ? 1.0 : std::exp(-duration / T2);
  const double decay1 = std::isinf(T1) ? 1.0 : std::exp(-duration / T1);
  for (std::size_t j = 0; j < s.det.size(); ++j) {
    const double c = std::cos(s.det[j] * duration);
    const double sn = std::sin(s.det[j] * duration);
    // s- -> s- exp(-i det t)
    const double r = s.smr[j] * c + s.smi[j] * sn;
    const double i = s.smi[j] * c - s.smr[j] * sn;
    s.smr[j] = r * decay2;
    s.smi[j] = i * decay2;
    s.sz[j] = sz_eq + (s.sz[j] - sz_eq) * decay1;
  }
}

}  // namespace

SequenceResult evolve(const Ensemble& ens, const ResonatorParams& params,
                      const std::vector<Pulse>& pulses, double t_end,
                      const EvolveOptions& options) {
  params.validate();
  ens.validate();
  validate_sequence(pulses);
  if (!(t_end > 0.0)) throw std::invalid_argument("evolve: t_end must be positive");

  const double dt = options.dt > 0.0 ? options.dt : default_step(params, ens);
  if (dt > max_stable_step(params) * (1.0 + 1e-12)) {
    throw std::invalid_argument("evolve: dt exceeds the cavity stability bound 0.02/kappa_l");
  }
  double max_det = 0.0;
  for (const auto& p : ens.packets) max_det = std::max(max_det, std::abs(p.detuning));
  if (max_det > 0.0 && dt > 0.02 / max_det * (1.0 + 1e-12)) {
    throw std::invalid_argument("evolve: dt exceeds 0.02/max|detuning|");
  }
  const double record_dt = options.record_dt > 0.0 ? options.record_dt : std::max(1e-7, dt);
  const auto rec_every =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(record_dt / dt)));
  const auto n_steps = static_cast<std::size_t>(std::llround(t_end / dt));
  const std::size_t n_records = n_steps / rec_every + 1;

  const double kl = params.kappa_l();
  const double hk = 0.5 * kl;
  const double sqrt_kc = std::sqrt(params.kappa_c);
  const double gamma1 = std::isinf(ens.T1) ? 0.0 : 1.0 / ens.T1;
  const double gamma2 = std::isinf(ens.T2) ? 0.0 : 1.0 / ens.T2;
  const double sz_eq = ens.sz_eq;

  PacketArrays y = to_arrays(ens);
  const std::size_t n = y.det.size();
  PacketArrays acc = y;
  std::vector<double> tr(n), ti(n), tz(n);  // stage state
  std::vector<double> kr(n), ki(n), kz(n);  // stage derivative

  SequenceResult result;
  result.pulses = pulses;
  result.step = dt;
  result.total_spins = ens.total_spins();
  result.trace.dt = dt * static_cast<double>(rec_every);
  result.trace.samples.assign(n_records, cplx(0.0, 0.0));
  result.cavity_field.assign(n_records, cplx(0.0, 0.0));

  double probe_time = options.excitation_probe_time;
  if (probe_time <= 0.0 && !pulses.empty()) {
    probe_time = pulses.front().end() + 10.0 / kl;
    if (pulses.size() > 1) probe_time = std::min(probe_time, pulses[1].start);
  }
  bool probed = pulses.empty();
  if (pulses.empty()) result.excited_spins = excited_from_arrays(y);

  cplx a(0.0, 0.0);
  std::size_t next_pulse = 0;

  auto drive_at = [&](const Pulse* p, double t) -> cplx {
    if (p == nullptr) return {0.0, 0.0};
    if (p->detuning == 0.0) return std::polar(p->amplitude, p->phase);
    return std::polar(p->amplitude, p->phase - p->detuning * (t - p->start));
  };
  auto record = [&](std::size_t r, double t) {
    result.cavity_field[r] = a;
    result.trace.samples[r] = sqrt_kc * a - drive_envelope(pulses, t);
  };
  record(0, 0.0);

  const double ringdown_margin = 40.0 / kl;
  const double window_lead = 20.0 / kl;
  auto jump_target = [&](double t) -> double {
    // returns t when not idle
    double target = t_end;
    for (const auto& p : pulses) {
      if (p.start - 2.0 * result.trace.dt <= t && p.end() + ringdown_margin > t) return t;
      if (p.start > t) target = std::min(target, p.start - 2.0 * result.trace.dt);
    }
    for (const auto& w : options.protected_windows) {
      if (w.start - window_lead <= t && w.end >= t) return t;
      if (w.start > t) target = std::min(target, w.start - window_lead);
    }
    if (!probed && probe_time > t) target = std::min(target, probe_time);
    return target;
  };

  std::size_t s = 0;
  while (s < n_steps) {
    const double t = static_cast<double>(s) * dt;

    if (options.fast_forward && s % rec_every == 0) {
      const double target = jump_target(t);
      auto target_step = static_cast<std::size_t>(std::floor(target / dt + 1e-9));
      target_step = std::min(target_step - target_step % rec_every, n_steps - n_steps % rec_every);
      if (target_step > s + 4 * rec_every) {
        const double span = static_cast<double>(target_step - s) * dt;
        free_evolve_arrays(y, span, ens.T1, ens.T2, sz_eq);
        const cplx a0 = a;
        for (std::size_t r = s / rec_every + 1; r <= target_step / rec_every; ++r) {
          const double tr_time = static_cast<double>(r * rec_every) * dt;
          a = a0 * std::exp(-hk * (tr_time - t));
          record(r, tr_time);
        }
        result.skipped.push_back({t, static_cast<double>(target_step) * dt});
        s = target_step;
        while (next_pulse < pulses.size() && pulses[next_pulse].end() <= static_cast<double>(s) * dt) {
          ++next_pulse;
        }
        continue;
      }
    }

    const double t_mid = t + 0.5 * dt;
    while (next_pulse < pulses.size() && pulses[next_pulse].end() <= t_mid) ++next_pulse;
    const Pulse* active = nullptr;
    if (next_pulse < pulses.size() && pulses[next_pulse].start <= t_mid) {
      active = &pulses[next_pulse];
    }

    // classic RK4, accumulating the weighted sum in `acc`
    cplx a_stage = a;
    cplx a_acc = a;
    for (std::size_t j = 0; j < n; ++j) {
      acc.smr[j] = y.smr[j];
      acc.smi[j] = y.smi[j];
      acc.sz[j] = y.sz[j];
      tr[j] = y.smr[j];
      ti[j] = y.smi[j];
      tz[j] = y.sz[j];
    }
    static constexpr double stage_offset[4] = {0.0, 0.5, 0.5, 1.0};
    static constexpr double stage_weight[4] = {1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0};
    static constexpr double next_offset[4] = {0.5, 0.5, 1.0, 0.0};
    for (int stage = 0; stage < 4; ++stage) {
      const double ar = a_stage.real();
      const double ai = a_stage.imag();
      double src_r = 0.0;
      double src_i = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double gj = y.g[j];
        const double dj = y.det[j];
        const double mr = tr[j];
        const double mi = ti[j];
        const double z = tz[j];
        kr[j] = -gamma2 * mr + dj * mi - gj * ai * z;
        ki[j] = -gamma2 * mi - dj * mr + gj * ar * z;
        kz[j] = -gamma1 * (z - sz_eq) - 4.0 * gj * (ar * mi - ai * mr);
        src_r += y.cg[j] * mr;
        src_i += y.cg[j] * mi;
      }
      const cplx drive = drive_at(active, t + stage_offset[stage] * dt);
      const cplx ka = cavity_rhs(a_stage, hk, sqrt_kc, drive, cplx(src_r, src_i));

      const double w = stage_weight[stage] * dt;
      a_acc += w * ka;
      const double h = next_offset[stage] * dt;
      for (std::size_t j = 0; j < n; ++j) {
        acc.smr[j] += w * kr[j];
        acc.smi[j] += w * ki[j];
        acc.sz[j] += w * kz[j];
        tr[j] = y.smr[j] + h * kr[j];
        ti[j] = y.smi[j] + h * ki[j];
        tz[j] = y.sz[j] + h * kz[j];
      }
      a_stage = a + h * ka;
    }
    a = a_acc;
    std::swap(y.smr, acc.smr);
    std::swap(y.smi, acc.smi);
    std::swap(y.sz, acc.sz);

    if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) {
      throw NumericalError(s, t);
    }

    ++s;
    const double t_next = static_cast<double>(s) * dt;
    if (!probed && t_next >= probe_time) {
      result.excited_spins = excited_from_arrays(y);
      probed = true;
    }
    if (s % rec_every == 0) record(s / rec_every, t_next);
  }

  result.final_state = ens;
  from_arrays(y, result.final_state);
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(y.sz[j]) || !std::isfinite(y.smr[j]) || !std::isfinite(y.smi[j])) {
      throw NumericalError(n_steps, t_end);
    }
  }
  return result;
}

// --- Ideal-pulse oracle mode ----------------------------------------------

void apply_rotation(Ensemble& ens, double angle, double phase) {
  // axis (cos phase, -sin phase, 0), Rodrigues formula
  const double nx = std::cos(phase);
  const double ny = -std::sin(phase);
  const double c = std::cos(angle);
  const double sn = std::sin(angle);
  for (auto& p : ens.packets) {
    const double dot = nx * p.sx + ny * p.sy;
    // n x v with n = (nx, ny, 0)
    const double cx = ny * p.sz;
    const double cy = -nx * p.sz;
    const double cz = nx * p.sy - ny * p.sx;
    const double x = p.sx * c + cx * sn + nx * dot * (1.0 - c);
    const double y = p.sy * c + cy * sn + ny * dot * (1.0 - c);
    const double z = p.sz * c + cz * sn;
    p.sx = x;
    p.sy = y;
    p.sz = z;
  }
}

void free_evolution(Ensemble& ens, double duration) {
  PacketArrays s = to_arrays(ens);
  free_evolve_arrays(s, duration, ens.T1, ens.T2, ens.sz_eq);
  from_arrays(s, ens);
}

cplx transverse_sum(const Ensemble& ens) {
  cplx total(0.0, 0.0);
  for (const auto& p : ens.packets) total += p.count * cplx(0.5 * p.sx, -0.5 * p.sy);
  return total;
}

IdealEcho ideal_hahn_echo(Ensemble ens, double tau, double refocus_phase) {
  apply_rotation(ens, 0.5 * std::numbers::pi, 0.0);
  IdealEcho echo;
  echo.fid_amplitude = std::abs(transverse_sum(ens));
  free_evolution(ens, tau);
  apply_rotation(ens, std::numbers::pi, refocus_phase);
  free_evolution(ens, tau);
  echo.echo_amplitude = std::abs(transverse_sum(ens));
  return echo;
}

}  // namespace esr

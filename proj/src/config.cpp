#include "esr/config.hpp"

#include "esr/units.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace esr {

using nlohmann::json;
using nlohmann::ordered_json;

ConfigError::ConfigError(const std::string& message, std::size_t line)
    : std::runtime_error(line > 0 ? "config line " + std::to_string(line) + ": " + message
                                  : "config: " + message),
      line_(line) {}

std::vector<double> LinearRange::values() const {
  std::vector<double> out;
  if (points == 1) return {start};
  for (int k = 0; k < points; ++k) {
    out.push_back(start + (stop - start) * static_cast<double>(k) / static_cast<double>(points - 1));
  }
  return out;
}

namespace {

/// Locates the line of a dotted key path inside the raw text; 0 if absent.
class LineFinder {
 public:
  explicit LineFinder(const std::string* text) : text_(text) {}

  std::size_t line_of(const std::vector<std::string>& path) const {
    if (text_ == nullptr) return 0;
    std::size_t pos = 0;
    for (const auto& key : path) {
      const auto hit = text_->find("\"" + key + "\"", pos);
      if (hit == std::string::npos) return 0;
      pos = hit + 1;
    }
    return line_at(pos - 1);
  }

  std::size_t line_at(std::size_t offset) const {
    if (text_ == nullptr) return 0;
    offset = std::min(offset, text_->size());
    return 1 + static_cast<std::size_t>(
                   std::count(text_->begin(), text_->begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
  }

 private:
  const std::string* text_;
};

class Block {
 public:
  Block(const json& root, std::string name, const LineFinder& lines)
      : lines_(lines), name_(std::move(name)) {
    if (!root.contains(name_)) return;
    node_ = &root.at(name_);
    if (!node_->is_object()) fail("", "block must be an object");
  }

  ~Block() = default;

  void finish() const {
    if (node_ == nullptr) return;
    for (const auto& [key, value] : node_->items()) {
      if (!seen_.count(key)) fail(key, "unknown key '" + name_ + "." + key + "'");
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    std::vector<std::string> path{name_};
    if (!key.empty()) path.push_back(key);
    throw ConfigError(message, lines_.line_of(path));
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    if (node_ == nullptr || !node_->contains(key)) return nullptr;
    const json* v = &node_->at(key);
    return v->is_null() ? nullptr : v;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) out = as_number(key, *v);
  }
  void number(const std::string& key, std::optional<double>& out) {
    if (const json* v = find(key)) out = as_number(key, *v);
  }
  void integer(const std::string& key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) fail(key, "'" + name_ + "." + key + "' must be an integer");
      out = v->get<int>();
    }
  }
  void unsigned_integer(const std::string& key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) {
        fail(key, "'" + name_ + "." + key + "' must be a non-negative integer");
      }
      out = v->get<std::uint64_t>();
    }
  }
  void boolean(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) fail(key, "'" + name_ + "." + key + "' must be true or false");
      out = v->get<bool>();
    }
  }
  void string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) fail(key, "'" + name_ + "." + key + "' must be a string");
      out = v->get<std::string>();
    }
  }
  void numbers(const std::string& key, std::vector<double>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) fail(key, "'" + name_ + "." + key + "' must be an array of numbers");
      out.clear();
      for (const auto& x : *v) out.push_back(as_number(key, x));
    }
  }
  void pairs(const std::string& key, std::vector<std::pair<double, double>>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) fail(key, "'" + name_ + "." + key + "' must be an array of [x, y] pairs");
      out.clear();
      for (const auto& p : *v) {
        if (!p.is_array() || p.size() != 2) {
          fail(key, "'" + name_ + "." + key + "' entries must be [x, y] pairs");
        }
        out.emplace_back(as_number(key, p[0]), as_number(key, p[1]));
      }
    }
  }
  void range(const std::string& key, LinearRange& out) {
    if (const json* v = find(key)) {
      if (!v->is_object()) fail(key, "'" + name_ + "." + key + "' must be {start, stop, points}");
      for (const auto& [k, x] : v->items()) {
        if (k != "start" && k != "stop" && k != "points") {
          fail(key, "unknown key '" + k + "' in '" + name_ + "." + key + "'");
        }
      }
      if (v->contains("start")) out.start = as_number(key, v->at("start"));
      if (v->contains("stop")) out.stop = as_number(key, v->at("stop"));
      if (v->contains("points")) {
        if (!v->at("points").is_number_integer()) fail(key, "'points' must be an integer");
        out.points = v->at("points").get<int>();
      }
    }
  }

 private:
  double as_number(const std::string& key, const json& v) const {
    if (!v.is_number()) fail(key, "'" + name_ + "." + key + "' must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(key, "'" + name_ + "." + key + "' must be finite");
    return x;
  }

  const LineFinder& lines_;
  std::string name_;
  const json* node_ = nullptr;
  std::set<std::string> seen_;
};

SpectrometerConfig from_json(const json& root, const LineFinder& lines) {
  if (!root.is_object()) throw ConfigError("top level must be an object", lines.line_at(0));
  const std::set<std::string> blocks{"spin_system", "resonator",      "ensemble",
                                     "noise",       "sequence",       "spectrum",
                                     "fieldsweep",  "noise_spectrum", "run"};
  for (const auto& [key, value] : root.items()) {
    if (!blocks.count(key)) throw ConfigError("unknown block '" + key + "'", lines.line_of({key}));
  }
  SpectrometerConfig c;
  {
    Block b(root, "spin_system", lines);
    auto& s = c.spin_system;
    b.number("S", s.S);
    b.number("I", s.I);
    b.number("gamma_e_hz_per_T", s.gamma_e_hz_per_T);
    b.number("gamma_n_hz_per_T", s.gamma_n_hz_per_T);
    b.number("A_hz", s.A_hz);
    b.finish();
  }
  {
    Block b(root, "resonator", lines);
    auto& r = c.resonator;
    b.number("frequency_hz", r.frequency_hz);
    b.number("kappa_c_rad_per_s", r.kappa_c_rad_per_s);
    b.number("kappa_i_rad_per_s", r.kappa_i_rad_per_s);
    b.finish();
  }
  {
    Block b(root, "ensemble", lines);
    auto& e = c.ensemble;
    b.number("n_total", e.n_total);
    b.string("distribution", e.distribution);
    b.number("fwhm_rad_per_s", e.fwhm_rad_per_s);
    b.number("center_rad_per_s", e.center_rad_per_s);
    b.integer("n_packets", e.n_packets);
    b.number("g_hz", e.g_hz);
    b.number("T1_ms", e.T1_ms);
    b.number("T2_ms", e.T2_ms);
    b.number("repetition_time_ms", e.repetition_time_ms);
    b.number("field_mT", e.field_mT);
    b.finish();
  }
  {
    Block b(root, "noise", lines);
    auto& n = c.noise;
    b.string("amplifier", n.amplifier);
    b.number("n_photons", n.n_photons);
    b.number("excess_photons", n.excess_photons);
    b.number("hemt_photons", n.hemt_photons);
    b.boolean("include_vacuum", n.include_vacuum);
    b.number("freq_noise_rms_hz", n.freq_noise_rms_hz);
    b.number("flicker_exponent", n.flicker_exponent);
    b.number("calibration_photons", n.calibration_photons);
    b.finish();
  }
  {
    Block b(root, "sequence", lines);
    auto& s = c.sequence;
    b.number("half_duration_us", s.half_duration_us);
    b.number("pi_duration_us", s.pi_duration_us);
    b.number("half_amplitude_sqrt_photons_per_s", s.half_amplitude);
    b.number("pi_amplitude_sqrt_photons_per_s", s.pi_amplitude);
    b.number("tau_us", s.tau_us);
    b.number("window_width_us", s.window_width_us);
    b.number("cpmg_tau_us", s.cpmg_tau_us);
    b.integer("cpmg_echoes", s.cpmg_echoes);
    b.string("cpmg_scheme", s.cpmg_scheme);
    b.integer("rabi_points", s.rabi_points);
    b.number("rabi_max_factor", s.rabi_max_factor);
    b.number("inversion_duration_us", s.inversion_duration_us);
    b.numbers("t1_delays_ms", s.t1_delays_ms);
    b.numbers("t2_two_tau_ms", s.t2_two_tau_ms);
    b.integer("shots_per_point", s.shots_per_point);
    b.finish();
  }
  {
    Block b(root, "spectrum", lines);
    auto& s = c.spectrum;
    b.range("field_mT", s.field_mT);
    b.number("band_lo_hz", s.band_lo_hz);
    b.number("band_hi_hz", s.band_hi_hz);
    b.number("min_sx", s.min_sx);
    b.finish();
  }
  {
    Block b(root, "fieldsweep", lines);
    auto& f = c.fieldsweep;
    b.range("field_mT", f.field_mT);
    b.pairs("density_table_hz", f.density_table_hz);
    b.number("spins_per_transition", f.spins_per_transition);
    b.integer("n_packets", f.n_packets);
    b.number("tau_us", f.tau_us);
    b.finish();
  }
  {
    Block b(root, "noise_spectrum", lines);
    auto& n = c.noise_spectrum;
    b.number("sample_interval_ms", n.sample_interval_ms);
    b.integer("samples", n.samples);
    b.integer("segment_length", n.segment_length);
    b.number("overlap", n.overlap);
    b.number("low_power_photons", n.low_power_photons);
    b.number("high_power_photons", n.high_power_photons);
    b.number("fit_lo_hz", n.fit_lo_hz);
    b.number("fit_hi_hz", n.fit_hi_hz);
    b.finish();
  }
  {
    Block b(root, "run", lines);
    auto& r = c.run;
    b.unsigned_integer("seed", r.seed);
    b.integer("n_traces", r.n_traces);
    b.number("repetition_rate_hz", r.repetition_rate_hz);
    b.string("output_dir", r.output_dir);
    std::uint64_t threads = r.threads;
    b.unsigned_integer("threads", threads);
    r.threads = static_cast<unsigned>(threads);
    b.finish();
  }
  return c;
}

template <typename T>
void put_optional(ordered_json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

ordered_json range_json(const LinearRange& r) {
  return ordered_json{{"start", r.start}, {"stop", r.stop}, {"points", r.points}};
}

/// Validation with the line of the offending key when the text is known.
void validate_with(const SpectrometerConfig& c, const LineFinder& lines) {
  auto fail = [&](std::vector<std::string> path, const std::string& msg) {
    std::string key;
    for (const auto& part : path) key += (key.empty() ? "" : ".") + part;
    const bool named = msg.find(key) != std::string::npos;
    throw ConfigError(named ? msg : key + ": " + msg, lines.line_of(path));
  };
  const auto& e = c.ensemble;
  if (e.g_hz.has_value() == e.T1_ms.has_value()) {
    fail({"ensemble", e.g_hz ? "g_hz" : "ensemble"},
         "exactly one of ensemble.g_hz and ensemble.T1_ms must be given");
  }
  if (e.g_hz && !(*e.g_hz > 0.0)) fail({"ensemble", "g_hz"}, "ensemble.g_hz must be positive");
  if (e.T1_ms && !(*e.T1_ms > 0.0)) fail({"ensemble", "T1_ms"}, "ensemble.T1_ms must be positive");
  if (!(e.T2_ms > 0.0)) fail({"ensemble", "T2_ms"}, "ensemble.T2_ms must be positive");
  if (!(c.T1() >= 0.5 * c.T2())) fail({"ensemble", "T2_ms"}, "T1 must be at least T2 / 2");
  if (!(e.n_total > 0.0)) fail({"ensemble", "n_total"}, "ensemble.n_total must be positive");
  if (e.distribution != "gaussian" && e.distribution != "lorentzian") {
    fail({"ensemble", "distribution"}, "ensemble.distribution must be gaussian or lorentzian");
  }
  if (!(e.fwhm_rad_per_s > 0.0)) fail({"ensemble", "fwhm_rad_per_s"}, "fwhm must be positive");
  if (e.n_packets < 1 || (e.n_packets > 1 && e.n_packets % 2 == 0)) {
    fail({"ensemble", "n_packets"}, "ensemble.n_packets must be 1 or odd");
  }
  if (e.repetition_time_ms && !(*e.repetition_time_ms > 0.0)) {
    fail({"ensemble", "repetition_time_ms"}, "repetition time must be positive");
  }
  if (!(e.field_mT >= 0.0)) fail({"ensemble", "field_mT"}, "field must be >= 0");

  try {
    c.spin().validate();
  } catch (const std::invalid_argument& ex) {
    fail({"spin_system"}, ex.what());
  }
  const auto& rb = c.resonator;
  if (!(rb.frequency_hz > 0.0)) fail({"resonator", "frequency_hz"}, "must be positive");
  if (!(rb.kappa_c_rad_per_s > 0.0)) fail({"resonator", "kappa_c_rad_per_s"}, "must be positive");
  if (!(rb.kappa_i_rad_per_s >= 0.0)) fail({"resonator", "kappa_i_rad_per_s"}, "must be >= 0");
  try {
    c.resonator_params().validate();
  } catch (const std::invalid_argument& ex) {
    fail({"resonator"}, ex.what());
  }

  const auto& n = c.noise;
  if (n.amplifier != "hemt" && n.amplifier != "jpa_phase_preserving" &&
      n.amplifier != "jpa_degenerate") {
    fail({"noise", "amplifier"}, "noise.amplifier must be hemt, jpa_phase_preserving or jpa_degenerate");
  }
  if (n.n_photons && !(*n.n_photons >= 0.0)) fail({"noise", "n_photons"}, "n_photons must be >= 0");
  if (!(n.excess_photons >= 0.0)) fail({"noise", "excess_photons"}, "excess_photons must be >= 0");
  if (!(n.hemt_photons >= 0.0)) fail({"noise", "hemt_photons"}, "hemt_photons must be >= 0");
  if (!(n.freq_noise_rms_hz >= 0.0)) fail({"noise", "freq_noise_rms_hz"}, "must be >= 0");
  if (!(n.flicker_exponent >= 0.0)) fail({"noise", "flicker_exponent"}, "must be >= 0");
  if (!(n.calibration_photons > 0.0)) fail({"noise", "calibration_photons"}, "must be positive");

  const auto& s = c.sequence;
  if (!(s.half_duration_us > 0.0)) fail({"sequence", "half_duration_us"}, "must be positive");
  if (!(s.pi_duration_us > 0.0)) fail({"sequence", "pi_duration_us"}, "must be positive");
  if (s.half_amplitude && !(*s.half_amplitude >= 0.0)) {
    fail({"sequence", "half_amplitude_sqrt_photons_per_s"}, "must be >= 0");
  }
  if (s.pi_amplitude && !(*s.pi_amplitude >= 0.0)) {
    fail({"sequence", "pi_amplitude_sqrt_photons_per_s"}, "must be >= 0");
  }
  if (!(s.tau_us > 0.0)) fail({"sequence", "tau_us"}, "must be positive");
  if (s.window_width_us && !(*s.window_width_us > 0.0)) fail({"sequence", "window_width_us"}, "must be positive");
  if (!(s.cpmg_tau_us > 0.0)) fail({"sequence", "cpmg_tau_us"}, "must be positive");
  if (s.cpmg_echoes < 1) fail({"sequence", "cpmg_echoes"}, "must be >= 1");
  if (s.cpmg_scheme != "cpmg" && s.cpmg_scheme != "cp") {
    fail({"sequence", "cpmg_scheme"}, "sequence.cpmg_scheme must be cpmg or cp");
  }
  if (s.rabi_points < 3) fail({"sequence", "rabi_points"}, "must be >= 3");
  if (!(s.rabi_max_factor > 0.0)) fail({"sequence", "rabi_max_factor"}, "must be positive");
  if (!(s.inversion_duration_us > 0.0)) fail({"sequence", "inversion_duration_us"}, "must be positive");
  for (double d : s.t1_delays_ms) {
    if (!(d > 0.0)) fail({"sequence", "t1_delays_ms"}, "delays must be positive");
  }
  for (double d : s.t2_two_tau_ms) {
    if (!(d > 0.0)) fail({"sequence", "t2_two_tau_ms"}, "values must be positive");
  }
  if (s.shots_per_point < 2) fail({"sequence", "shots_per_point"}, "must be >= 2");

  const auto& sp = c.spectrum;
  if (sp.field_mT.points < 1 || sp.field_mT.start < 0.0 || sp.field_mT.stop < 0.0) {
    fail({"spectrum", "field_mT"}, "field range needs points >= 1 and fields >= 0");
  }
  if (!(sp.band_hi_hz > sp.band_lo_hz)) fail({"spectrum", "band_hi_hz"}, "band_hi_hz must exceed band_lo_hz");
  if (!(sp.min_sx >= 0.0)) fail({"spectrum", "min_sx"}, "must be >= 0");

  const auto& f = c.fieldsweep;
  if (f.field_mT.points < 1 || f.field_mT.start < 0.0 || f.field_mT.stop < 0.0) {
    fail({"fieldsweep", "field_mT"}, "field range needs points >= 1 and fields >= 0");
  }
  if (!(f.spins_per_transition >= 0.0)) fail({"fieldsweep", "spins_per_transition"}, "must be >= 0");
  if (f.n_packets < 1 || (f.n_packets > 1 && f.n_packets % 2 == 0)) {
    fail({"fieldsweep", "n_packets"}, "must be 1 or odd");
  }
  if (!(f.tau_us > 0.0)) fail({"fieldsweep", "tau_us"}, "must be positive");

  const auto& ns = c.noise_spectrum;
  if (!(ns.sample_interval_ms > 0.0)) fail({"noise_spectrum", "sample_interval_ms"}, "must be positive");
  if (ns.segment_length < 8 || ns.samples < 2 * ns.segment_length) {
    fail({"noise_spectrum", "segment_length"}, "need segment_length >= 8 and samples >= 2 segments");
  }
  if (!(ns.overlap >= 0.0 && ns.overlap < 1.0)) fail({"noise_spectrum", "overlap"}, "must be in [0, 1)");
  if (!(ns.low_power_photons > 0.0) || !(ns.high_power_photons > 0.0)) {
    fail({"noise_spectrum", "low_power_photons"}, "powers must be positive");
  }
  if (!(ns.fit_hi_hz > ns.fit_lo_hz) || !(ns.fit_lo_hz > 0.0)) {
    fail({"noise_spectrum", "fit_lo_hz"}, "need 0 < fit_lo_hz < fit_hi_hz");
  }

  const auto& r = c.run;
  if (r.n_traces < 2) fail({"run", "n_traces"}, "run.n_traces must be >= 2");
  if (!(r.repetition_rate_hz > 0.0)) fail({"run", "repetition_rate_hz"}, "must be positive");
}

}  // namespace

void SpectrometerConfig::validate() const { validate_with(*this, LineFinder(nullptr)); }

SpinSystem SpectrometerConfig::spin() const {
  return {spin_system.S, spin_system.I, units::hz_to_rad_per_s(spin_system.gamma_e_hz_per_T),
          units::hz_to_rad_per_s(spin_system.gamma_n_hz_per_T),
          units::hz_to_rad_per_s(spin_system.A_hz)};
}

ResonatorParams SpectrometerConfig::resonator_params() const {
  return {units::hz_to_rad_per_s(resonator.frequency_hz), resonator.kappa_c_rad_per_s,
          resonator.kappa_i_rad_per_s};
}

double SpectrometerConfig::coupling() const {
  if (ensemble.g_hz) return units::hz_to_rad_per_s(*ensemble.g_hz);
  return purcell_g_from_t1(units::ms_to_s(ensemble.T1_ms.value()), resonator_params().kappa_l());
}

double SpectrometerConfig::T1() const {
  if (ensemble.T1_ms) return units::ms_to_s(*ensemble.T1_ms);
  return purcell_t1(units::hz_to_rad_per_s(ensemble.g_hz.value()), resonator_params().kappa_l());
}

double SpectrometerConfig::T2() const { return units::ms_to_s(ensemble.T2_ms); }

double SpectrometerConfig::polarization() const {
  const double t_rep =
      ensemble.repetition_time_ms ? units::ms_to_s(*ensemble.repetition_time_ms) : 3.0 * T1();
  return equilibrium_polarization(t_rep, T1());
}

DetuningDistribution SpectrometerConfig::distribution() const {
  DetuningDistribution d;
  d.shape = ensemble.distribution == "lorentzian" ? DistributionShape::lorentzian
                                                  : DistributionShape::gaussian;
  d.fwhm = ensemble.fwhm_rad_per_s;
  d.center = ensemble.center_rad_per_s;
  return d;
}

Ensemble SpectrometerConfig::make_ensemble(int n_packets) const {
  auto ens = discretize_ensemble(distribution(), ensemble.n_total,
                                 n_packets > 0 ? n_packets : ensemble.n_packets, coupling(),
                                 -polarization());
  ens.T1 = T1();
  ens.T2 = T2();
  return ens;
}

NoiseModel SpectrometerConfig::noise_model() const {
  NoiseModel m;
  if (noise.n_photons) {
    m.n_photons = *noise.n_photons;
  } else {
    const auto mode = noise.amplifier == "hemt"                   ? AmplifierMode::hemt
                      : noise.amplifier == "jpa_phase_preserving" ? AmplifierMode::jpa_phase_preserving
                                                                  : AmplifierMode::jpa_degenerate;
    m.n_photons = amplifier_noise_photons(mode, noise.excess_photons, noise.hemt_photons);
  }
  m.include_vacuum = noise.include_vacuum;
  m.freq_noise_rms = units::hz_to_rad_per_s(noise.freq_noise_rms_hz);
  m.flicker_exponent = noise.flicker_exponent;
  m.calibration_photons = noise.calibration_photons;
  m.seed = run.seed;
  m.shot_interval = 1.0 / run.repetition_rate_hz;
  return m;
}

PulseSpec SpectrometerConfig::pulse_spec() const {
  const auto params = resonator_params();
  auto spec = PulseSpec::calibrated(params, coupling(), units::us_to_s(sequence.half_duration_us),
                                    units::us_to_s(sequence.pi_duration_us));
  if (sequence.half_amplitude) spec.half_amplitude = *sequence.half_amplitude;
  if (sequence.pi_amplitude) spec.pi_amplitude = *sequence.pi_amplitude;
  if (sequence.window_width_us) spec.window_width = units::us_to_s(*sequence.window_width_us);
  return spec;
}

PhaseScheme SpectrometerConfig::cpmg_scheme() const {
  return sequence.cpmg_scheme == "cp" ? PhaseScheme::cp : PhaseScheme::cpmg;
}

SpectrometerConfig reference_preset() {
  SpectrometerConfig c;
  // 234 excited spins after the pi/2 pulse with the default ensemble
  c.ensemble.n_total = 271.4;
  c.ensemble.T1_ms = 18.6;
  c.sequence.t1_delays_ms = {0.5, 1, 2, 4, 7, 10, 15, 20, 30, 45, 60, 80, 100};
  c.sequence.t2_two_tau_ms = {0.2, 0.4, 0.6, 0.8, 1.0, 1.3, 1.6, 2.0, 2.5, 3.0, 3.5, 4.0};
  c.fieldsweep.density_table_hz = {{-120e6, 1.0}, {120e6, 1.0}};
  c.fieldsweep.spins_per_transition = 1e5;
  return c;
}

SpectrometerConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const LineFinder lines(&text);
    throw ConfigError(std::string("malformed JSON: ") + e.what(),
                      lines.line_at(e.byte > 0 ? e.byte - 1 : 0));
  }
  const LineFinder lines(&text);
  auto config = from_json(root, lines);
  validate_with(config, lines);
  return config;
}

SpectrometerConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'", 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const SpectrometerConfig& c) {
  ordered_json j;
  j["spin_system"] = {{"S", c.spin_system.S},
                      {"I", c.spin_system.I},
                      {"gamma_e_hz_per_T", c.spin_system.gamma_e_hz_per_T},
                      {"gamma_n_hz_per_T", c.spin_system.gamma_n_hz_per_T},
                      {"A_hz", c.spin_system.A_hz}};
  j["resonator"] = {{"frequency_hz", c.resonator.frequency_hz},
                    {"kappa_c_rad_per_s", c.resonator.kappa_c_rad_per_s},
                    {"kappa_i_rad_per_s", c.resonator.kappa_i_rad_per_s}};
  auto& e = j["ensemble"];
  e["n_total"] = c.ensemble.n_total;
  e["distribution"] = c.ensemble.distribution;
  e["fwhm_rad_per_s"] = c.ensemble.fwhm_rad_per_s;
  e["center_rad_per_s"] = c.ensemble.center_rad_per_s;
  e["n_packets"] = c.ensemble.n_packets;
  put_optional(e, "g_hz", c.ensemble.g_hz);
  put_optional(e, "T1_ms", c.ensemble.T1_ms);
  e["T2_ms"] = c.ensemble.T2_ms;
  put_optional(e, "repetition_time_ms", c.ensemble.repetition_time_ms);
  e["field_mT"] = c.ensemble.field_mT;

  auto& n = j["noise"];
  n["amplifier"] = c.noise.amplifier;
  put_optional(n, "n_photons", c.noise.n_photons);
  n["excess_photons"] = c.noise.excess_photons;
  n["hemt_photons"] = c.noise.hemt_photons;
  n["include_vacuum"] = c.noise.include_vacuum;
  n["freq_noise_rms_hz"] = c.noise.freq_noise_rms_hz;
  n["flicker_exponent"] = c.noise.flicker_exponent;
  n["calibration_photons"] = c.noise.calibration_photons;

  auto& s = j["sequence"];
  s["half_duration_us"] = c.sequence.half_duration_us;
  s["pi_duration_us"] = c.sequence.pi_duration_us;
  put_optional(s, "half_amplitude_sqrt_photons_per_s", c.sequence.half_amplitude);
  put_optional(s, "pi_amplitude_sqrt_photons_per_s", c.sequence.pi_amplitude);
  s["tau_us"] = c.sequence.tau_us;
  put_optional(s, "window_width_us", c.sequence.window_width_us);
  s["cpmg_tau_us"] = c.sequence.cpmg_tau_us;
  s["cpmg_echoes"] = c.sequence.cpmg_echoes;
  s["cpmg_scheme"] = c.sequence.cpmg_scheme;
  s["rabi_points"] = c.sequence.rabi_points;
  s["rabi_max_factor"] = c.sequence.rabi_max_factor;
  s["inversion_duration_us"] = c.sequence.inversion_duration_us;
  s["t1_delays_ms"] = c.sequence.t1_delays_ms;
  s["t2_two_tau_ms"] = c.sequence.t2_two_tau_ms;
  s["shots_per_point"] = c.sequence.shots_per_point;

  j["spectrum"] = {{"field_mT", range_json(c.spectrum.field_mT)},
                   {"band_lo_hz", c.spectrum.band_lo_hz},
                   {"band_hi_hz", c.spectrum.band_hi_hz},
                   {"min_sx", c.spectrum.min_sx}};
  auto table = ordered_json::array();
  for (const auto& [x, w] : c.fieldsweep.density_table_hz) table.push_back({x, w});
  j["fieldsweep"] = {{"field_mT", range_json(c.fieldsweep.field_mT)},
                     {"density_table_hz", table},
                     {"spins_per_transition", c.fieldsweep.spins_per_transition},
                     {"n_packets", c.fieldsweep.n_packets},
                     {"tau_us", c.fieldsweep.tau_us}};
  j["noise_spectrum"] = {{"sample_interval_ms", c.noise_spectrum.sample_interval_ms},
                         {"samples", c.noise_spectrum.samples},
                         {"segment_length", c.noise_spectrum.segment_length},
                         {"overlap", c.noise_spectrum.overlap},
                         {"low_power_photons", c.noise_spectrum.low_power_photons},
                         {"high_power_photons", c.noise_spectrum.high_power_photons},
                         {"fit_lo_hz", c.noise_spectrum.fit_lo_hz},
                         {"fit_hi_hz", c.noise_spectrum.fit_hi_hz}};
  j["run"] = {{"seed", c.run.seed},
              {"n_traces", c.run.n_traces},
              {"repetition_rate_hz", c.run.repetition_rate_hz},
              {"output_dir", c.run.output_dir},
              {"threads", c.run.threads}};
  return j.dump(2) + "\n";
}

}  // namespace esr

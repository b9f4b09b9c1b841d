#include "esr/cli.hpp"

#include "esr/experiments.hpp"
#include "esr/units.hpp"

#include <CLI11.hpp>
#include <fftw3.h>
#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace esr::cli {

namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr const char* version = "1.0.0";

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", digest[i]);
    hex += byte;
  }
  return hex;
}

class ArtifactWriter {
 public:
  explicit ArtifactWriter(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void write(const std::string& name, const std::string& body) {
    std::ofstream out(dir_ / name, std::ios::binary);
    out << body;
    if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
    names_.push_back(name);
  }
  void json(const std::string& name, const ordered_json& j) { write(name, j.dump(2) + "\n"); }

  const std::vector<std::string>& names() const { return names_; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::string> names_;
};

std::string trace_csv(const QuadratureTrace& trace) {
  std::string s = "t_us,I,Q\n";
  for (std::size_t k = 0; k < trace.size(); ++k) {
    s += fmt(units::s_to_us(trace.time(k))) + "," + fmt(trace.samples[k].real()) + "," +
         fmt(trace.samples[k].imag()) + "\n";
  }
  return s;
}

ordered_json windows_json(const std::vector<TimeWindow>& windows) {
  auto arr = ordered_json::array();
  for (const auto& w : windows) {
    arr.push_back({{"start_us", units::s_to_us(w.start)}, {"end_us", units::s_to_us(w.end)}});
  }
  return arr;
}

ordered_json fit_json(const FitResult& fit) {
  return {{"params", fit.params}, {"errors", fit.errors}, {"residual_rms", fit.residual_rms},
          {"iterations", fit.iterations}};
}

std::string histogram_csv(const std::vector<double>& xs, int bins) {
  const auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
  const double lo = *lo_it;
  const double width = (*hi_it - lo) / bins;
  std::vector<long> counts(static_cast<std::size_t>(bins), 0);
  for (double x : xs) {
    auto b = width > 0.0 ? static_cast<long>((x - lo) / width) : 0L;
    b = std::clamp(b, 0L, static_cast<long>(bins - 1));
    ++counts[static_cast<std::size_t>(b)];
  }
  std::string s = "bin_center,count\n";
  for (int b = 0; b < bins; ++b) {
    s += fmt(lo + (b + 0.5) * width) + "," + std::to_string(counts[static_cast<std::size_t>(b)]) +
         "\n";
  }
  return s;
}

std::string spectrum_csv(const std::vector<SpectrumPoint>& spec) {
  std::string s = "freq_hz,s_q\n";
  for (const auto& p : spec) s += fmt(p.freq_hz) + "," + fmt(p.density) + "\n";
  return s;
}

std::string snr_csv(const CpmgSnrReport& r) {
  std::string s = "n,snr_uncor,snr_cum\n";
  for (std::size_t i = 0; i < r.snr_uncor.size(); ++i) {
    s += std::to_string(i + 1) + "," + fmt(r.snr_uncor[i]) + "," + fmt(r.snr_cum[i]) + "\n";
  }
  return s;
}

std::string decay_csv(const DecayRun& run, const char* x_name) {
  std::string s = std::string(x_name) + ",area,area_err,noiseless_area\n";
  for (const auto& p : run.points) {
    s += fmt(units::s_to_ms(p.x)) + "," + fmt(p.area) + "," + fmt(p.error) + "," +
         fmt(p.noiseless) + "\n";
  }
  return s;
}

ordered_json decay_json(const DecayRun& run, const char* name) {
  const double rel = run.fitted / run.configured - 1.0;
  return {{std::string(name) + "_ms", units::s_to_ms(run.fitted)},
          {std::string(name) + "_err_ms", units::s_to_ms(run.fitted_error)},
          {"configured_" + std::string(name) + "_ms", units::s_to_ms(run.configured)},
          {"relative_deviation", rel},
          {"fit", fit_json(run.fit)}};
}

void run_command(const std::string& command, const SpectrometerConfig& c, ArtifactWriter& out) {
  if (command == "spectrum") {
    std::ostringstream os;
    write_sweep_csv(os, run_spectrum(c));
    out.write("spectrum.csv", os.str());
  } else if (command == "echo") {
    const auto r = run_echo(c);
    out.write("echo_trace.csv", trace_csv(r.run.plus.trace));
    out.write("echo_cycled.csv", trace_csv(r.run.cycled));
    out.json("echo_windows.json",
             {{"tau_us", c.sequence.tau_us},
              {"windows", windows_json(r.run.plus.echo_windows)},
              {"expected_time_us", units::s_to_us(r.expected_time)},
              {"peak_time_us", units::s_to_us(r.shape.peak_time)},
              {"pre_peak_width_us", units::s_to_us(r.shape.pre_width)},
              {"post_peak_width_us", units::s_to_us(r.shape.post_width)},
              {"excited_spins", r.run.plus.excited_spins},
              {"total_spins", r.run.plus.total_spins},
              {"integration_step_s", r.run.plus.step}});
  } else if (command == "rabi") {
    const auto r = run_rabi(c);
    std::string s = "amplitude,area\n";
    for (const auto& p : r.points) s += fmt(p.amplitude) + "," + fmt(p.area) + "\n";
    out.write("rabi.csv", s);
    out.json("rabi.json", {{"calibrated_pi_amplitude", r.calibrated_pi},
                           {"first_maximum_amplitude", r.first_maximum},
                           {"ratio", r.first_maximum / r.calibrated_pi}});
  } else if (command == "t1") {
    const auto r = run_t1(c);
    out.write("t1.csv", decay_csv(r, "delay_ms"));
    out.json("t1_fit.json", decay_json(r, "T1"));
  } else if (command == "t2") {
    const auto r = run_t2(c);
    out.write("t2.csv", decay_csv(r, "two_tau_ms"));
    out.json("t2_fit.json", decay_json(r, "T2"));
  } else if (command == "cpmg") {
    const auto r = run_cpmg(c);
    out.write("cpmg_snr.csv", snr_csv(r.full));
    out.write("cpmg_snr_white.csv", snr_csv(r.white));
    std::string s = "n,t_us,area\n";
    for (std::size_t i = 0; i < r.echo_areas.size(); ++i) {
      s += std::to_string(i + 1) + "," + fmt(units::s_to_us(r.echo_times[i])) + "," +
           fmt(r.echo_areas[i]) + "\n";
    }
    out.write("cpmg_echoes.csv", s);
    out.write("cpmg_cycled.csv", trace_csv(r.run.cycled));
    const auto n = r.full.snr_uncor.size();
    ordered_json j{{"echoes", n},
                   {"cpmg_tau_us", c.sequence.cpmg_tau_us},
                   {"gain_uncor", r.full.snr_uncor.back() / r.full.snr_uncor.front()},
                   {"gain_cum", r.full.snr_cum.back() / r.full.snr_cum.front()},
                   {"white_gain_uncor", r.white.snr_uncor.back() / r.white.snr_uncor.front()},
                   {"white_gain_cum", r.white.snr_cum.back() / r.white.snr_cum.front()},
                   {"n_traces", c.run.n_traces},
                   {"seed", c.run.seed}};
    if (!r.decay_fit.params.empty()) {
      j["train_decay_ms"] = units::s_to_ms(r.decay_fit.params[1]);
      j["configured_T2_ms"] = c.ensemble.T2_ms;
    }
    out.json("cpmg.json", j);
  } else if (command == "fieldsweep") {
    std::string s = "field_mT,area,spins\n";
    for (const auto& p : run_fieldsweep(c)) {
      s += fmt(units::T_to_mT(p.field)) + "," + fmt(p.area) + "," + fmt(p.spins) + "\n";
    }
    out.write("fieldsweep.csv", s);
  } else if (command == "sensitivity") {
    const auto r = run_sensitivity(c);
    out.write("histogram.csv", histogram_csv(r.stats.areas, 50));
    out.json("sensitivity.json", {{"mean", r.stats.mean},
                                  {"std", r.stats.std},
                                  {"snr", r.stats.snr},
                                  {"n_min", r.stats.n_min},
                                  {"spins_per_sqrt_hz", r.stats.sensitivity},
                                  {"n_traces", r.n_traces},
                                  {"seed", c.run.seed},
                                  {"n_min_theory", r.n_min_theory},
                                  {"excited_spins", r.excited_spins},
                                  {"total_spins", r.total_spins}});
  } else if (command == "noise-spectrum") {
    const auto r = run_noise_spectrum(c);
    out.write("noise_spectrum_low.csv", spectrum_csv(r.low));
    out.write("noise_spectrum_high.csv", spectrum_csv(r.high));
    out.write("noise_spectrum_off.csv", spectrum_csv(r.off_resonance));
    out.json("noise_spectrum.json", {{"slope", r.slope},
                                     {"rms_frequency_noise_hz", r.rms_hz},
                                     {"configured_rms_hz", c.noise.freq_noise_rms_hz},
                                     {"amplitude_ratio", r.amplitude_ratio},
                                     {"expected_ratio", r.expected_ratio}});
  }
}

fs::path output_directory(const std::string& flag, const SpectrometerConfig& c) {
  if (!flag.empty()) return flag;
  if (!c.run.output_dir.empty()) return c.run.output_dir;
  if (const char* env = std::getenv("ESRTWIN_OUTPUT_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return "out";
}

}  // namespace

const std::vector<std::string>& commands() {
  static const std::vector<std::string> list{"spectrum", "echo",        "rabi",
                                             "t1",       "t2",          "cpmg",
                                             "fieldsweep", "sensitivity", "noise-spectrum"};
  return list;
}

std::string usage() {
  std::string s =
      "usage: esrtwin <command> [config.json] [--output DIR] [--threads N] [--seed S]\n"
      "       esrtwin --print-preset\n\ncommands:";
  for (const auto& c : commands()) s += " " + c;
  s +=
      "\n\nWithout a config file the bundled reference preset is used. Artifacts go to\n"
      "--output, else run.output_dir, else $ESRTWIN_OUTPUT_DIR, else ./out.\n";
  return s;
}

int main(int argc, char** argv) {
  if (argc >= 2 && std::string(argv[1]) == "--print-preset") {
    std::cout << serialize_config(reference_preset());
    return exit_ok;
  }
  if (argc < 2 || std::find(commands().begin(), commands().end(), argv[1]) == commands().end()) {
    if (argc >= 2 && (std::string(argv[1]) == "--help" || std::string(argv[1]) == "-h")) {
      std::cout << usage();
      return exit_ok;
    }
    std::cerr << usage();
    return exit_usage;
  }
  const std::string command = argv[1];

  CLI::App app{"esrtwin " + command};
  std::string config_path;
  std::string output;
  unsigned threads = 0;
  std::uint64_t seed = 0;
  app.add_option("config", config_path, "JSON configuration file");
  app.add_option("-o,--output", output, "artifact directory");
  auto* threads_opt = app.add_option("--threads", threads, "worker threads (results do not depend on it)");
  auto* seed_opt = app.add_option("--seed", seed, "override run.seed");
  try {
    app.parse(argc - 1, argv + 1);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      std::cout << app.help();
      return exit_ok;
    }
    std::cerr << "error: " << e.what() << "\n" << usage();
    return exit_usage;
  }

  const auto t0 = std::chrono::steady_clock::now();
  try {
    SpectrometerConfig config = config_path.empty() ? reference_preset() : load_config(config_path);
    if (*threads_opt) config.run.threads = threads;
    if (*seed_opt) config.run.seed = seed;
    config.validate();

    ArtifactWriter writer(output_directory(output, config));
    run_command(command, config, writer);

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ordered_json manifest{{"command", command},
                          {"config_sha256", sha256_hex(serialize_config(config))},
                          {"seed", config.run.seed},
                          {"wall_time_s", wall},
                          {"artifact_list", writer.names()},
                          {"versions", {{"esrtwin", version}, {"fftw", std::string(fftw_version)}}}};
    std::ofstream(writer.dir() / "manifest.json") << manifest.dump(2) << "\n";
    std::cout << "wrote " << writer.names().size() << " artifacts to " << writer.dir().string()
              << "\n";
    return exit_ok;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_failure;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_numerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_failure;
  }
}

}  // namespace esr::cli

#include "esr/config.hpp"
#include "esr/cli.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <string>

using namespace esr;

TEST_CASE("preset round-trips exactly through JSON") {
  const auto c = reference_preset();
  const auto text = serialize_config(c);
  const auto back = parse_config(text);
  CHECK(back == c);
  CHECK(serialize_config(back) == text);
}

TEST_CASE("preset derived quantities") {
  const auto c = reference_preset();
  CHECK(c.coupling() / (2 * std::numbers::pi) == doctest::Approx(448.19).epsilon(1e-4));
  CHECK(c.T1() == doctest::Approx(18.6e-3));
  CHECK(c.polarization() == doctest::Approx(1.0 - std::exp(-3.0)).epsilon(1e-9));
  CHECK(c.noise_model().total() == 0.5);
  CHECK(c.noise_model().shot_interval == doctest::Approx(1.0 / 16.0));
  CHECK(c.pulse_spec().half_amplitude > 0.0);
  CHECK(c.make_ensemble().total_spins() == doctest::Approx(271.4));
}

TEST_CASE("errors carry the line of the offending key") {
  const std::string text =
      "{\n"
      "  \"ensemble\": {\n"
      "    \"n_total\": 10,\n"
      "    \"T1_ms\": -1\n"
      "  }\n"
      "}\n";
  try {
    parse_config(text);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 4);
    CHECK(std::string(e.what()).find("config line 4") != std::string::npos);
  }
}

TEST_CASE("unknown keys, malformed JSON and conflicting couplings are rejected") {
  CHECK_THROWS_AS(parse_config("{\"ensemble\": {\"n_total\": 1, \"T1_ms\": 1, \"bogus\": 2}}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"nonsense\": {}}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"ensemble\": {\n\"n_total\": 1,,}}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"ensemble\": {\"n_total\": 1, \"T1_ms\": 1, \"g_hz\": 400}}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"ensemble\": {\"n_total\": 1}}"), ConfigError);
  try {
    parse_config("{\n\"ensemble\": {\n\"n_total\": 1,,}}");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("range checks") {
  auto c = reference_preset();
  c.sequence.shots_per_point = 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = reference_preset();
  c.run.repetition_rate_hz = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = reference_preset();
  c.ensemble.n_packets = 100;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("linear ranges include both ends") {
  const LinearRange r{0.0, 8.0, 33};
  const auto v = r.values();
  REQUIRE(v.size() == 33);
  CHECK(v.front() == 0.0);
  CHECK(v.back() == 8.0);
  CHECK(v[1] == doctest::Approx(0.25));
}

TEST_CASE("CLI lists every command and rejects unknown ones") {
  CHECK(cli::commands().size() == 9);
  CHECK(cli::usage().find("noise-spectrum") != std::string::npos);
  char prog[] = "esrtwin";
  char bad[] = "not-a-command";
  char* argv[] = {prog, bad, nullptr};
  CHECK(cli::main(2, argv) == cli::exit_usage);
}

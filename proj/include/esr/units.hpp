#pragma once

#include <numbers>

// Internally every frequency is an angular frequency in rad/s, every time is
// in seconds and every field in tesla. Conversions happen only at the edges
// (config parsing and CSV/JSON export).
namespace esr::units {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

constexpr double hz_to_rad_per_s(double hz) { return two_pi * hz; }
constexpr double rad_per_s_to_hz(double w) { return w / two_pi; }

constexpr double mT_to_T(double mt) { return mt * 1e-3; }
constexpr double T_to_mT(double t) { return t * 1e3; }

constexpr double us_to_s(double us) { return us * 1e-6; }
constexpr double s_to_us(double s) { return s * 1e6; }
constexpr double ms_to_s(double ms) { return ms * 1e-3; }
constexpr double s_to_ms(double s) { return s * 1e3; }

}  // namespace esr::units

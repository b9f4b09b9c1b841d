#pragma once

#include <string>
#include <vector>

namespace esr::cli {

/// Exit codes.
inline constexpr int exit_ok = 0;
inline constexpr int exit_failure = 1;  // invalid config, I/O or fit failure
inline constexpr int exit_usage = 2;
inline constexpr int exit_numerical = 3;

/// Commands accepted as the first argument.
const std::vector<std::string>& commands();

std::string usage();

/// Entry point of the esrtwin tool.
int main(int argc, char** argv);

}  // namespace esr::cli

#pragma once

#include <ostream>
#include <string>

namespace calib {

/// Entry point of the calib command-line tool. Exit codes: 0 success,
/// 1 verification or solver failure, 2 usage or configuration error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Parses a radius literal: a decimal number or a multiple of pi such as
/// "pi/3", "2*pi/5", "0.5pi". Throws std::invalid_argument.
double parse_radius(const std::string& text);

}  // namespace calib

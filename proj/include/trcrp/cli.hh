// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace trcrp {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

// Parses and runs one command line. Messages go to `out` and `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace trcrp

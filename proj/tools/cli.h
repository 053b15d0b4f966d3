// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef CRA_TOOLS_CLI_H_
#define CRA_TOOLS_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace cra::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;  // e.g. a single-class task
inline constexpr int kExitUsage = 2;   // bad flags, config or files

// Runs `cra <command> ...`. argv[0] is the program name. Never throws.
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace cra::cli

#endif  // CRA_TOOLS_CLI_H_

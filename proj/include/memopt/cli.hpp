// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace memopt {

// Runs the command line `args` (program name excluded). Failures print a
// one-line JSON object {"error", "message"} to `err` and return nonzero:
// 1 for runtime errors, 2 for usage errors.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace memopt

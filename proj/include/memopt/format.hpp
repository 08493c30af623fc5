// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

namespace memopt {

// Fixed-point rendering that rounds half away from zero on the shortest
// decimal representation of `value`, so 0.8915 renders as "0.892".
std::string format_fixed(double value, int decimals);

// Same as format_fixed() but always carries a sign ("+0.120", "-1.5").
std::string format_signed(double value, int decimals);

// Shortest decimal string that round-trips to `value`.
std::string format_shortest(double value);

}  // namespace memopt

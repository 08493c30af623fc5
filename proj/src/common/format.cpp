// SPDX-License-Identifier: Apache-2.0

#include "memopt/format.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <string_view>

namespace memopt {

std::string format_shortest(double value) {
  std::array<char, 64> buf {};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

std::string format_fixed(double value, int decimals) {
  if (!std::isfinite(value))
    return std::isnan(value) ? "nan" : (value > 0 ? "inf" : "-inf");

  std::array<char, 400> buf {};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), std::fabs(value),
                           std::chars_format::fixed);
  std::string_view repr(buf.data(), res.ptr - buf.data());

  std::string int_part(repr.substr(0, repr.find('.')));
  std::string frac_part;
  if (auto dot = repr.find('.'); dot != std::string_view::npos)
    frac_part = std::string(repr.substr(dot + 1));

  bool round_up = false;
  if (static_cast<int>(frac_part.size()) > decimals) {
    round_up = frac_part[decimals] >= '5';
    frac_part.resize(decimals);
  } else {
    frac_part.append(decimals - frac_part.size(), '0');
  }

  std::string digits = int_part + frac_part;
  if (round_up) {
    int i = static_cast<int>(digits.size()) - 1;
    for (; i >= 0; --i) {
      if (digits[i] == '9') {
        digits[i] = '0';
      } else {
        ++digits[i];
        break;
      }
    }
    if (i < 0)
      digits.insert(digits.begin(), '1');
  }

  const auto int_len = digits.size() - decimals;
  std::string out = digits.substr(0, int_len);
  if (decimals > 0)
    out += "." + digits.substr(int_len);

  const bool all_zero = digits.find_first_not_of('0') == std::string::npos;
  if (std::signbit(value) && !all_zero)
    out.insert(out.begin(), '-');
  return out;
}

std::string format_signed(double value, int decimals) {
  std::string s = format_fixed(value, decimals);
  if (s.front() != '-')
    s.insert(s.begin(), '+');
  return s;
}

}  // namespace memopt

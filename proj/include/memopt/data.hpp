// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace memopt {

// Contents of a file shipped under data/, compiled into the library.
std::optional<std::string_view> embedded_data(std::string_view name);

// Like embedded_data() but throws kConfig for unknown names.
std::string_view shipped_data(std::string_view name);

std::string read_text_file(const std::string &path);

// Writes through a sibling temporary file and renames it into place.
void write_text_file_atomic(const std::string &path, std::string_view text);

// Splits `key<TAB>value...` lines; blank lines and `#` comments are skipped.
// Each row keeps its 1-based line number.
struct TsvRow {
  int line;
  std::vector<std::string> fields;
};
std::vector<TsvRow> parse_tsv(std::string_view text);

std::string_view trim(std::string_view s);

}  // namespace memopt
